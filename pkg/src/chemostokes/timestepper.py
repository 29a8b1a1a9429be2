"""Explicit Lie-splitting integrator for the regularized chemotaxis-Stokes system.

One step advances, in this order and each reading the newest fields,

* the velocity: ``u* = u + dt (lap u + n grad phi)`` followed by projection,
* the signal: ``c' = c + dt (lap c - u.grad c - g_eps(n) c)`` with Dirichlet data,
* the density in conservative form with face flux
  ``grad n - rho f_eps(n) n grad c - u n`` and logistic source ``kappa n - mu n^2``.
"""

from __future__ import annotations

import logging
from typing import NamedTuple

import numpy as np

from .errors import BlowupSuspected, ChemostokesError, NumericalFailure
from .grid import (DIRICHLET, GridSpec, ScalarField, VectorField, average_to_faces,
                   divergence, faces_to_centers, grad_to_faces, laplacian, project)
from .model import (InitialData, PhysicalParams, SchemeConfig, SimState, initial_state,
                    validate_inputs)
from .regularization import RegParams, f_eps, g_eps

log = logging.getLogger(__name__)

DELTA = 1e-12
NEG_TOL = 1e-12


class Substep(NamedTuple):
    field: ScalarField
    clipped: float  # mass removed by clipping at zero
    min_before_clip: float


def grad_inf_norm(f: ScalarField, g: GridSpec) -> float:
    gr = grad_to_faces(f, g)
    return max(float(np.max(np.abs(gr.ux))), float(np.max(np.abs(gr.uy))))


def compute_dt(s: SimState, p: PhysicalParams, cfg: SchemeConfig, g: GridSpec) -> float:
    h = g.h
    u_inf = s.u.max_abs()
    gc_inf = grad_inf_norm(s.c, g)
    n_inf = float(np.max(s.n.values))
    dt = cfg.cfl_sigma * min(h * h / 8.0,
                             h / (u_inf + gc_inf + DELTA),
                             1.0 / (p.kappa + 2.0 * p.mu * n_inf + DELTA),
                             cfg.dt_max)
    if dt < cfg.dt_min_abort:
        raise BlowupSuspected(f"time step {dt:.3e} fell below dt_min_abort={cfg.dt_min_abort:.1e}",
                              reason="dt_min_abort", t=s.t, step_index=s.step_index)
    return dt


def _clip(values: np.ndarray, g: GridSpec, name: str) -> Substep:
    if not np.all(np.isfinite(values)):
        raise NumericalFailure(f"non-finite values in the {name} update")
    vmin = float(values.min())
    clipped = 0.0
    if vmin < 0.0:
        neg = np.minimum(values, 0.0)
        clipped = float(-np.sum(neg) * g.h * g.h)
        values = np.maximum(values, 0.0)
        log.debug("clipped %.3e of %s mass (min %.3e)", clipped, name, vmin)
    return Substep(ScalarField(values), clipped, vmin)


def _upwind_face_values(a: np.ndarray, v: VectorField) -> tuple[np.ndarray, np.ndarray]:
    """Cell value upstream of each interior face (boundary faces left at 0)."""
    ax = np.zeros_like(v.ux)
    ay = np.zeros_like(v.uy)
    ax[:, 1:-1] = np.where(v.ux[:, 1:-1] > 0, a[:, :-1], a[:, 1:])
    ay[1:-1, :] = np.where(v.uy[1:-1, :] > 0, a[:-1, :], a[1:, :])
    return ax, ay


def upwind_advection(f: ScalarField, u: VectorField, g: GridSpec) -> np.ndarray:
    """First-order upwind ``u . grad f`` at cell centres (advective form).

    Velocity is averaged to the centres; one-sided differences reach through
    the ghost values implied by the boundary descriptor.
    """
    a = f.values
    h = g.h
    ghost = np.empty((g.ny + 2, g.nx + 2))
    ghost[1:-1, 1:-1] = a
    if f.bc == DIRICHLET:
        tr = f.trace
        ghost[1:-1, 0] = 2.0 * tr.west - a[:, 0]
        ghost[1:-1, -1] = 2.0 * tr.east - a[:, -1]
        ghost[0, 1:-1] = 2.0 * tr.south - a[0, :]
        ghost[-1, 1:-1] = 2.0 * tr.north - a[-1, :]
    else:
        ghost[1:-1, 0] = a[:, 0]
        ghost[1:-1, -1] = a[:, -1]
        ghost[0, 1:-1] = a[0, :]
        ghost[-1, 1:-1] = a[-1, :]
    uc, vc = faces_to_centers(u, g)
    dxm = (a - ghost[1:-1, :-2]) / h
    dxp = (ghost[1:-1, 2:] - a) / h
    dym = (a - ghost[:-2, 1:-1]) / h
    dyp = (ghost[2:, 1:-1] - a) / h
    return (np.maximum(uc, 0.0) * dxm + np.minimum(uc, 0.0) * dxp
            + np.maximum(vc, 0.0) * dym + np.minimum(vc, 0.0) * dyp)


def density_flux(s: SimState, reg: RegParams, g: GridSpec) -> VectorField:
    """Total face flux of the density equation; zero on every boundary face."""
    n = s.n.values
    gn = grad_to_faces(s.n, g)
    gc = grad_to_faces(s.c, g)
    rho_f = average_to_faces(reg.rho, g)
    sat_f = average_to_faces(f_eps(n, reg.epsilon), g)
    n_f = average_to_faces(s.n, g)
    up_x, up_y = _upwind_face_values(n, s.u)
    fx = gn.ux - rho_f.ux * sat_f.ux * n_f.ux * gc.ux - s.u.ux * up_x
    fy = gn.uy - rho_f.uy * sat_f.uy * n_f.uy * gc.uy - s.u.uy * up_y
    fx[:, 0] = fx[:, -1] = 0.0
    fy[0, :] = fy[-1, :] = 0.0
    return VectorField(fx, fy)


def step_n(s: SimState, p: PhysicalParams, reg: RegParams, dt: float, g: GridSpec) -> Substep:
    n = s.n.values
    flux = density_flux(s, reg, g)
    new = n + dt * (divergence(flux, g).values + p.kappa * n - p.mu * n * n)
    return _clip(new, g, "n")


def step_c(s: SimState, p: PhysicalParams, reg: RegParams, dt: float, g: GridSpec) -> Substep:
    c = ScalarField(s.c.values, DIRICHLET, p.c_star.trace)
    rhs = (laplacian(c, g).values - upwind_advection(c, s.u, g)
           - g_eps(s.n.values, reg.epsilon) * c.values)
    sub = _clip(c.values + dt * rhs, g, "c")
    return Substep(ScalarField(sub.field.values, DIRICHLET, p.c_star.trace),
                   sub.clipped, sub.min_before_clip)


def vector_laplacian(u: VectorField, g: GridSpec) -> VectorField:
    """Component-wise five-point Laplacian with zero Dirichlet data.

    Normal neighbours on the boundary are the (zero) boundary faces
    themselves; tangential neighbours across a wall are odd ghosts.  Boundary
    faces of the result are zero.
    """
    h2 = g.h * g.h
    ux, uy = u.ux, u.uy
    lx = np.zeros_like(ux)
    px = np.vstack([-ux[:1], ux, -ux[-1:]])
    lx[:, 1:-1] = (ux[:, 2:] + ux[:, :-2] + px[2:, 1:-1] + px[:-2, 1:-1]
                   - 4.0 * ux[:, 1:-1]) / h2
    ly = np.zeros_like(uy)
    py = np.hstack([-uy[:, :1], uy, -uy[:, -1:]])
    ly[1:-1, :] = (uy[2:, :] + uy[:-2, :] + py[1:-1, 2:] + py[1:-1, :-2]
                   - 4.0 * uy[1:-1, :]) / h2
    return VectorField(lx, ly)


def buoyancy(n: ScalarField, phi: ScalarField, g: GridSpec) -> VectorField:
    """Face forcing ``n grad phi`` (n averaged to faces), zero on boundary faces."""
    nf = average_to_faces(n, g)
    gp = grad_to_faces(ScalarField(phi.values), g)
    fx = nf.ux * gp.ux
    fy = nf.uy * gp.uy
    fx[:, 0] = fx[:, -1] = 0.0
    fy[0, :] = fy[-1, :] = 0.0
    return VectorField(fx, fy)


def step_u(s: SimState, p: PhysicalParams, dt: float, g: GridSpec, tol: float = 1e-10) -> VectorField:
    lap = vector_laplacian(s.u, g)
    force = buoyancy(s.n, p.phi, g)
    ux = s.u.ux + dt * (lap.ux + force.ux)
    uy = s.u.uy + dt * (lap.uy + force.uy)
    if not (np.all(np.isfinite(ux)) and np.all(np.isfinite(uy))):
        raise NumericalFailure("non-finite values in the velocity update")
    return project(VectorField(ux, uy), g, dt=dt, tol=tol)


def check_guard(s: SimState, cfg: SchemeConfig) -> None:
    n_inf = float(np.max(s.n.values))
    if not np.isfinite(n_inf) or n_inf > cfg.n_max_abort:
        raise BlowupSuspected(f"max n = {n_inf:.3e} exceeds n_max_abort={cfg.n_max_abort:.1e}",
                              reason="n_max_abort", t=s.t, step_index=s.step_index)


def step(s: SimState, p: PhysicalParams, reg: RegParams, cfg: SchemeConfig, g: GridSpec,
         dt: float | None = None) -> SimState:
    """One Lie-split step u -> c -> n.  ``dt`` defaults to ``compute_dt``."""
    check_guard(s, cfg)
    if dt is None:
        dt = compute_dt(s, p, cfg, g)
    u_new = step_u(s, p, dt, g, cfg.projection_tol)
    mid = SimState(s.n, s.c, u_new, s.t, s.step_index)
    c_sub = step_c(mid, p, reg, dt, g)
    mid = SimState(s.n, c_sub.field, u_new, s.t, s.step_index)
    n_sub = step_n(mid, p, reg, dt, g)
    return SimState(n_sub.field, c_sub.field, u_new, s.t + dt, s.step_index + 1,
                    s.clipped_n + n_sub.clipped, s.clipped_c + c_sub.clipped,
                    min(s.min_n_before_clip, n_sub.min_before_clip),
                    min(s.min_c_before_clip, c_sub.min_before_clip))


class MemorySink:
    """Collects records and snapshots in memory."""

    def __init__(self):
        self.records = []
        self.snapshots = []

    def record(self, rec) -> None:
        self.records.append(rec)

    def snapshot(self, state: SimState) -> None:
        self.snapshots.append(Snapshot.of(state))


class Snapshot(NamedTuple):
    t: float
    n: np.ndarray
    c: np.ndarray
    ux: np.ndarray
    uy: np.ndarray

    @classmethod
    def of(cls, s: SimState) -> "Snapshot":
        return cls(s.t, s.n.values.copy(), s.c.values.copy(), s.u.ux.copy(), s.u.uy.copy())


def run(data: InitialData, p: PhysicalParams, reg: RegParams, cfg: SchemeConfig, g: GridSpec,
        sink=None, validate: bool = True) -> SimState:
    """Integrate to ``cfg.T``.

    A record is emitted at t = 0 and at every multiple of
    ``cfg.record_interval``; steps are shortened to land on those times.
    Snapshots go out at t = 0, every ``cfg.snapshot_interval`` and at T.
    """
    from .diagnostics import compute_record

    if validate:
        data, p = validate_inputs(data, p, g, projection_tol=cfg.projection_tol)
    s = initial_state(data, p)
    sink = sink if sink is not None else MemorySink()

    snap_every = 0
    if cfg.snapshot_interval > 0:
        snap_every = int(round(cfg.snapshot_interval / cfg.record_interval))
    n_records = int(np.floor(cfg.T / cfg.record_interval * (1 + 1e-12) + 1e-9))
    record_times = [k * cfg.record_interval for k in range(1, n_records + 1)]
    if not record_times or record_times[-1] < cfg.T * (1 - 1e-12):
        record_times.append(cfg.T)

    sink.record(compute_record(s, g, p, reg))
    sink.snapshot(s)
    try:
        for k, t_next in enumerate(record_times, start=1):
            if t_next <= s.t:
                continue
            while s.t < t_next:
                check_guard(s, cfg)
                dt = compute_dt(s, p, cfg, g)
                remaining = t_next - s.t
                landing = dt * (1.0 + 1e-6) >= remaining
                if landing:
                    dt = remaining
                s = step(s, p, reg, cfg, g, dt=dt)
                if landing:
                    s.t = t_next
            sink.record(compute_record(s, g, p, reg))
            if (snap_every and k % snap_every == 0) or k == len(record_times):
                sink.snapshot(s)
    except ChemostokesError as exc:
        exc.t = s.t
        exc.step_index = s.step_index
        log.error("run stopped at step %d, t = %r: %s", s.step_index, s.t, exc)
        raise
    return s
