"""Weak-formulation residuals of a computed trajectory.

Each residual pairs a stored trajectory with an analytic test function and
assembles both sides of the corresponding integral identity with midpoint
quadrature in space (face quadrature for face data) and the trapezoid rule
in time.  With ``reg`` given, the chemotactic and consumption terms carry the
regularized coefficients, i.e. the identities of the approximating system the
trajectory actually solves; with ``reg=None`` the limit form is used.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ContractError
from .grid import (DIRICHLET, GridSpec, ScalarField, average_to_faces,
                   face_weights, grad_to_faces, integrate)
from .model import PhysicalParams
from .regularization import RegParams, f_eps, g_eps

FREE, ZERO, SOLENOIDAL = "free", "zero", "solenoidal"
MIN_SAMPLES = 8


@dataclass(frozen=True)
class TestFunction:
    """Analytic test function.

    Scalar kinds return arrays from ``value``/``dt`` and ``(gx, gy)`` from
    ``grad``.  The solenoidal kind returns ``(vx, vy)`` pairs from ``value``,
    ``dt`` and ``laplacian``, and its ``divergence`` closure is used for the
    precondition self-test.
    """

    __test__ = False  # keep pytest from collecting this class

    name: str
    kind: str
    t_supp: float
    value: Callable
    dt: Callable
    grad: Callable | None = None
    laplacian: Callable | None = None
    divergence: Callable | None = None

    def scaled(self, lam: float) -> "TestFunction":
        def sc(fn):
            if fn is None:
                return None

            def out(x, y, t):
                v = fn(x, y, t)
                return tuple(lam * a for a in v) if isinstance(v, tuple) else lam * v
            return out
        return TestFunction(f"{lam}*{self.name}", self.kind, self.t_supp, sc(self.value),
                            sc(self.dt), sc(self.grad), sc(self.laplacian), sc(self.divergence))


def _time_factor(t_supp: float, k: int):
    def tau(t):
        s = max(1.0 - t / t_supp, 0.0)
        return s**k

    def dtau(t):
        s = max(1.0 - t / t_supp, 0.0)
        return -k / t_supp * s ** (k - 1)
    return tau, dtau


def _separable_scalar(name, kind, t_supp, k, fx, dfx, fy, dfy) -> TestFunction:
    tau, dtau = _time_factor(t_supp, k)
    return TestFunction(
        name, kind, t_supp,
        value=lambda x, y, t: tau(t) * fx(x) * fy(y),
        dt=lambda x, y, t: dtau(t) * fx(x) * fy(y),
        grad=lambda x, y, t: (tau(t) * dfx(x) * fy(y), tau(t) * fx(x) * dfy(y)),
    )


def cosine_test(g: GridSpec, t_supp: float, mx: int = 1, my: int = 1, k: int = 3) -> TestFunction:
    """Free-boundary test (1 - t/T)_+^k cos(mx pi x/Lx) cos(my pi y/Ly)."""
    ax, ay = mx * np.pi / g.Lx, my * np.pi / g.Ly
    return _separable_scalar(
        f"cos{mx}{my}_k{k}", FREE, t_supp, k,
        lambda x: np.cos(ax * x), lambda x: -ax * np.sin(ax * x),
        lambda y: np.cos(ay * y), lambda y: -ay * np.sin(ay * y))


def sine_test(g: GridSpec, t_supp: float, mx: int = 1, my: int = 1, k: int = 2) -> TestFunction:
    """Zero-boundary test (1 - t/T)_+^k sin(mx pi x/Lx) sin(my pi y/Ly)."""
    ax, ay = mx * np.pi / g.Lx, my * np.pi / g.Ly
    return _separable_scalar(
        f"sin{mx}{my}_k{k}", ZERO, t_supp, k,
        lambda x: np.sin(ax * x), lambda x: ax * np.cos(ax * x),
        lambda y: np.sin(ay * y), lambda y: ay * np.cos(ay * y))


def _sin_sq(a):
    """sin^2(a s) and its first three derivatives."""
    return (lambda s: np.sin(a * s) ** 2,
            lambda s: a * np.sin(2 * a * s),
            lambda s: 2 * a * a * np.cos(2 * a * s),
            lambda s: -4 * a**3 * np.sin(2 * a * s))


def curl_test(g: GridSpec, t_supp: float, mx: int = 1, my: int = 1, k: int = 2) -> TestFunction:
    """Solenoidal test: curl of chi = (1 - t/T)_+^k sin^2(mx pi x/Lx) sin^2(my pi y/Ly).

    psi = (d chi/dy, -d chi/dx) vanishes on the boundary together with chi's
    gradient.
    """
    A, A1, A2, A3 = _sin_sq(mx * np.pi / g.Lx)
    B, B1, B2, B3 = _sin_sq(my * np.pi / g.Ly)
    tau, dtau = _time_factor(t_supp, k)

    def field(x, y):
        return A(x) * B1(y), -A1(x) * B(y)

    def value(x, y, t):
        vx, vy = field(x, y)
        return tau(t) * vx, tau(t) * vy

    def dt(x, y, t):
        vx, vy = field(x, y)
        return dtau(t) * vx, dtau(t) * vy

    def lap(x, y, t):
        lx = A2(x) * B1(y) + A(x) * B3(y)
        ly = -(A3(x) * B(y) + A1(x) * B2(y))
        return tau(t) * lx, tau(t) * ly

    def div(x, y, t):
        return tau(t) * (A1(x) * B1(y) - A1(x) * B1(y))

    return TestFunction(f"curl{mx}{my}_k{k}", SOLENOIDAL, t_supp, value, dt,
                        laplacian=lap, divergence=div)


def default_library(g: GridSpec, t_supp: float) -> dict[str, list[TestFunction]]:
    """Two test functions per identity."""
    return {
        "n": [cosine_test(g, t_supp, 1, 1, k=3), cosine_test(g, t_supp, 1, 2, k=2)],
        "c": [sine_test(g, t_supp, 1, 1, k=2), sine_test(g, t_supp, 1, 3, k=3)],
        "u": [curl_test(g, t_supp, 1, 1, k=2), curl_test(g, t_supp, 1, 2, k=3)],
    }


# ---------------------------------------------------------------------------

def _times(traj, tf: TestFunction) -> np.ndarray:
    t = np.array([s.t for s in traj], dtype=float)
    if t.size < 2 or t[0] != 0.0:
        raise ContractError("trajectory must start with the t = 0 snapshot")
    d = np.diff(t)
    if np.any(d <= 0) or np.max(np.abs(d - d[0])) > 1e-9 * d[0]:
        raise ContractError("snapshots must be at a uniform cadence")
    if t[-1] < tf.t_supp * (1 - 1e-12):
        raise ContractError(f"trajectory ends at t = {t[-1]} before the test support "
                            f"ends at {tf.t_supp}")
    if tf.t_supp / d[0] < MIN_SAMPLES * (1 - 1e-9):
        raise ContractError(f"snapshot cadence {d[0]} too coarse: fewer than {MIN_SAMPLES} "
                            f"samples over the test support {tf.t_supp}")
    return t


def _trapezoid(t: np.ndarray, v: np.ndarray) -> float:
    return float(np.sum(0.5 * (v[1:] + v[:-1]) * np.diff(t)))


def _face_pair(ax, ay, bx, by, g: GridSpec) -> float:
    wx, wy = face_weights(g)
    return float(np.sum(wx * ax * bx) + np.sum(wy * ay * by))


def _check_kind(tf: TestFunction, kind: str):
    if tf.kind != kind:
        raise ContractError(f"test function {tf.name} is of kind {tf.kind}, expected {kind}")


def residual_n(traj, tf: TestFunction, g: GridSpec, p: PhysicalParams,
               reg: RegParams | None = None) -> float:
    """|LHS - RHS| of the density identity for one free-boundary test function."""
    _check_kind(tf, FREE)
    t = _times(traj, tf)
    X, Y = g.centers()
    XF, YF = g.xfaces()
    XG, YG = g.yfaces()
    rho_f = average_to_faces(reg.rho, g) if reg is not None else None
    lhs = np.empty(t.size)
    rhs = np.empty(t.size)
    for k, snap in enumerate(traj):
        tk = t[k]
        n = ScalarField(snap.n)
        c = ScalarField(snap.c, DIRICHLET, p.c_star.trace)
        phx, _ = tf.grad(XF, YF, tk)
        _, phy = tf.grad(XG, YG, tk)
        lhs[k] = -integrate(snap.n * tf.dt(X, Y, tk), g)
        gn = grad_to_faces(n, g)
        gc = grad_to_faces(c, g)
        nf = average_to_faces(n, g)
        cx, cy = nf.ux * gc.ux, nf.uy * gc.uy
        if reg is not None:
            sf = average_to_faces(f_eps(snap.n, reg.epsilon), g)
            cx, cy = cx * rho_f.ux * sf.ux, cy * rho_f.uy * sf.uy
        phi_c = tf.value(X, Y, tk)
        rhs[k] = (-_face_pair(gn.ux, gn.uy, phx, phy, g)
                  + _face_pair(cx, cy, phx, phy, g)
                  + p.kappa * integrate(snap.n * phi_c, g)
                  - p.mu * integrate(snap.n**2 * phi_c, g)
                  + _face_pair(nf.ux * snap.ux, nf.uy * snap.uy, phx, phy, g))
    left = _trapezoid(t, lhs) - integrate(traj[0].n * tf.value(X, Y, 0.0), g)
    return abs(left - _trapezoid(t, rhs))


def residual_c(traj, tf: TestFunction, g: GridSpec, p: PhysicalParams,
               reg: RegParams | None = None) -> float:
    """|LHS - RHS| of the signal identity for one zero-boundary test function."""
    _check_kind(tf, ZERO)
    t = _times(traj, tf)
    X, Y = g.centers()
    XF, YF = g.xfaces()
    XG, YG = g.yfaces()
    lhs = np.empty(t.size)
    rhs = np.empty(t.size)
    for k, snap in enumerate(traj):
        tk = t[k]
        c = ScalarField(snap.c, DIRICHLET, p.c_star.trace)
        phx, _ = tf.grad(XF, YF, tk)
        _, phy = tf.grad(XG, YG, tk)
        lhs[k] = -integrate(snap.c * tf.dt(X, Y, tk), g)
        gc = grad_to_faces(c, g)
        cf = average_to_faces(c, g)
        uptake = g_eps(snap.n, reg.epsilon) if reg is not None else snap.n
        rhs[k] = (-_face_pair(gc.ux, gc.uy, phx, phy, g)
                  - integrate(uptake * snap.c * tf.value(X, Y, tk), g)
                  + _face_pair(cf.ux * snap.ux, cf.uy * snap.uy, phx, phy, g))
    left = _trapezoid(t, lhs) - integrate(traj[0].c * tf.value(X, Y, 0.0), g)
    return abs(left - _trapezoid(t, rhs))


def check_solenoidal(tf: TestFunction, g: GridSpec, tol: float = 1e-12) -> float:
    """Max |div psi| over the cell centres and a few sample times."""
    X, Y = g.centers()
    worst = 0.0
    for t in np.linspace(0.0, tf.t_supp, 5):
        worst = max(worst, float(np.max(np.abs(tf.divergence(X, Y, t)))))
    if worst > tol:
        raise ContractError(f"test function {tf.name} is not solenoidal (|div| = {worst:.2e})")
    return worst


def residual_u(traj, tf: TestFunction, g: GridSpec, p: PhysicalParams,
               reg: RegParams | None = None) -> float:
    """|LHS - RHS| of the velocity identity for one solenoidal test function.

    The viscous term is assembled as int u . lap(psi), which equals
    -int grad u : grad psi because u vanishes on the boundary.
    """
    from .timestepper import buoyancy

    _check_kind(tf, SOLENOIDAL)
    check_solenoidal(tf, g)
    t = _times(traj, tf)
    XF, YF = g.xfaces()
    XG, YG = g.yfaces()
    lhs = np.empty(t.size)
    rhs = np.empty(t.size)
    for k, snap in enumerate(traj):
        tk = t[k]
        psx, _ = tf.value(XF, YF, tk)
        _, psy = tf.value(XG, YG, tk)
        dtx, _ = tf.dt(XF, YF, tk)
        _, dty = tf.dt(XG, YG, tk)
        lx, _ = tf.laplacian(XF, YF, tk)
        _, ly = tf.laplacian(XG, YG, tk)
        lhs[k] = -_face_pair(snap.ux, snap.uy, dtx, dty, g)
        force = buoyancy(ScalarField(snap.n), p.phi, g)
        rhs[k] = (_face_pair(snap.ux, snap.uy, lx, ly, g)
                  + _face_pair(force.ux, force.uy, psx, psy, g))
    p0x, _ = tf.value(XF, YF, 0.0)
    _, p0y = tf.value(XG, YG, 0.0)
    left = _trapezoid(t, lhs) - _face_pair(traj[0].ux, traj[0].uy, p0x, p0y, g)
    return abs(left - _trapezoid(t, rhs))


RESIDUALS = {"n": residual_n, "c": residual_c, "u": residual_u}


def epsilon_cauchy(traj_a, traj_b, g: GridSpec) -> dict[str, float]:
    """Discrete L2(Omega x (0, T)) distance between two trajectories per component."""
    if len(traj_a) != len(traj_b) or len(traj_a) < 2:
        raise ContractError("trajectories must have the same (>= 2) number of snapshots")
    ta = np.array([s.t for s in traj_a])
    tb = np.array([s.t for s in traj_b])
    if np.max(np.abs(ta - tb)) > 1e-12 * max(1.0, ta[-1]):
        raise ContractError("trajectories are sampled at different times")
    for a, b in zip(traj_a[:1], traj_b[:1]):
        if a.n.shape != g.shape or b.n.shape != g.shape or a.ux.shape != b.ux.shape:
            raise ContractError("trajectories live on different grids")
    wx, wy = face_weights(g)
    dn = np.empty(ta.size)
    dc = np.empty(ta.size)
    du = np.empty(ta.size)
    for k, (a, b) in enumerate(zip(traj_a, traj_b)):
        dn[k] = integrate((a.n - b.n) ** 2, g)
        dc[k] = integrate((a.c - b.c) ** 2, g)
        du[k] = float(np.sum(wx * (a.ux - b.ux) ** 2) + np.sum(wy * (a.uy - b.uy) ** 2))
    return {"n": float(np.sqrt(_trapezoid(ta, dn))),
            "c": float(np.sqrt(_trapezoid(ta, dc))),
            "u": float(np.sqrt(_trapezoid(ta, du)))}


def observed_rates(values) -> list[float]:
    """log2 ratios of consecutive errors (one per refinement)."""
    v = np.asarray(values, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return [float(np.log2(v[i] / v[i + 1])) for i in range(v.size - 1)]


def fitted_rate(values) -> float:
    """Least-squares slope of -log2(error) against refinement level."""
    v = np.asarray(values, dtype=float)
    levels = np.arange(v.size)
    return float(-np.polyfit(levels, np.log2(v), 1)[0])
