"""Parameter, initial-data and state containers for the chemotaxis-Stokes model."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ContractError, ValidationError
from .grid import (DIRICHLET, BoundaryTrace, GridSpec, ScalarField, VectorField,
                   check_scalar, check_vector, divergence, grad_to_faces, project)

log = logging.getLogger(__name__)


class NegativeGrowthRate(ValidationError):
    pass


class NonPositiveDecay(ValidationError):
    pass


class NegativeBoundarySignal(ValidationError):
    pass


class IrregularPotential(ValidationError):
    pass


class NegativeInitialDensity(ValidationError):
    pass


class VanishingInitialDensity(ValidationError):
    pass


class NonPositiveInitialSignal(ValidationError):
    pass


class TraceMismatch(ValidationError):
    pass


class IrregularInitialVelocity(ValidationError):
    pass


@dataclass(frozen=True)
class PhysicalParams:
    kappa: float
    mu: float
    phi: ScalarField
    c_star: ScalarField  # Dirichlet field: centre samples plus boundary trace

    @property
    def c_star_trace(self) -> BoundaryTrace:
        return self.c_star.trace


@dataclass(frozen=True)
class InitialData:
    n0: ScalarField
    c0: ScalarField
    u0: VectorField


@dataclass(frozen=True)
class SchemeConfig:
    cfl_sigma: float = 1.0
    dt_max: float = 2e-5
    T: float = 1.0
    projection_tol: float = 1e-10
    n_max_abort: float = 1e6
    dt_min_abort: float = 1e-12
    record_interval: float = 2e-4
    snapshot_interval: float = 0.0  # 0 disables periodic snapshots

    def __post_init__(self):
        if not (0.0 < self.cfl_sigma <= 1.0):
            raise ContractError(f"cfl_sigma must lie in (0, 1], got {self.cfl_sigma}")
        for name in ("dt_max", "projection_tol", "n_max_abort", "dt_min_abort", "record_interval"):
            if not getattr(self, name) > 0:
                raise ContractError(f"{name} must be positive, got {getattr(self, name)}")
        if self.T < 0:
            raise ContractError(f"end time must be nonnegative, got {self.T}")
        if self.snapshot_interval < 0:
            raise ContractError("snapshot_interval must be >= 0")
        if self.snapshot_interval > 0:
            ratio = self.snapshot_interval / self.record_interval
            if abs(ratio - round(ratio)) > 1e-9 * max(ratio, 1.0) or round(ratio) < 1:
                raise ContractError("snapshot_interval must be a whole multiple of record_interval")

    def replace(self, **kw) -> "SchemeConfig":
        return replace(self, **kw)


@dataclass
class SimState:
    n: ScalarField
    c: ScalarField
    u: VectorField
    t: float = 0.0
    step_index: int = 0
    clipped_n: float = 0.0  # cumulative mass removed by clipping n at 0
    clipped_c: float = 0.0
    min_n_before_clip: float = field(default=np.inf)
    min_c_before_clip: float = field(default=np.inf)


def initial_state(data: InitialData, params: PhysicalParams) -> SimState:
    c = ScalarField(data.c0.values.copy(), DIRICHLET, params.c_star.trace)
    return SimState(ScalarField(data.n0.values.copy()), c,
                    VectorField(data.u0.ux.copy(), data.u0.uy.copy()))


def validate_inputs(data: InitialData, params: PhysicalParams, g: GridSpec,
                    trace_tol: float = 1e-12, projection_tol: float = 1e-10):
    """Check the model assumptions on parameters and initial data.

    Returns ``(data, params)`` with ``u0`` projected onto discretely
    solenoidal fields and a c0/c_star trace mismatch up to ``trace_tol``
    replaced by the c_star trace.
    """
    if not (np.isfinite(params.kappa) and params.kappa >= 0):
        raise NegativeGrowthRate(f"kappa = {params.kappa} violates kappa >= 0", "kappa >= 0")
    if not (np.isfinite(params.mu) and params.mu > 0):
        raise NonPositiveDecay(f"mu = {params.mu} violates mu > 0", "mu > 0")

    cs = check_scalar(params.c_star, g)
    if params.c_star.bc != DIRICHLET:
        raise ContractError("c_star must carry its boundary trace")
    if not np.all(np.isfinite(cs)) or min(cs.min(), params.c_star.trace.min()) < 0:
        raise NegativeBoundarySignal("c_star must be finite and satisfy c_* >= 0", "c_* >= 0")

    phi = check_scalar(params.phi, g)
    gphi = grad_to_faces(params.phi, g)
    if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(gphi.ux))
            and np.all(np.isfinite(gphi.uy))):
        raise IrregularPotential("potential phi must be finite with finite differences",
                                 "phi in W^{2,inf}")

    n0 = check_scalar(data.n0, g)
    if not np.all(np.isfinite(n0)) or n0.min() < 0:
        raise NegativeInitialDensity("n0 must be finite and nonnegative", "n0 >= 0")
    if not np.any(n0 > 0):
        raise VanishingInitialDensity("n0 vanishes identically", "n0 not identically 0")

    c0 = check_scalar(data.c0, g)
    if not np.all(np.isfinite(c0)) or c0.min() <= 0:
        raise NonPositiveInitialSignal("c0 must be positive in the interior", "c0 > 0 in Omega")
    c0_trace = data.c0.trace if data.c0.bc == DIRICHLET else params.c_star.trace
    mismatch = c0_trace.max_abs_diff(params.c_star.trace)
    if mismatch > trace_tol:
        raise TraceMismatch(f"c0 boundary trace differs from c_star by {mismatch:.3e}",
                            "c0 = c_* on boundary")

    check_vector(data.u0, g)
    if not (np.all(np.isfinite(data.u0.ux)) and np.all(np.isfinite(data.u0.uy))):
        raise IrregularInitialVelocity("u0 must be finite", "u0 in D(A^rho)")
    ux, uy = data.u0.ux.copy(), data.u0.uy.copy()
    wall = max(np.max(np.abs(ux[:, [0, -1]])), np.max(np.abs(uy[[0, -1], :])))
    scale = 1.0 + max(np.max(np.abs(ux)), np.max(np.abs(uy)))
    if wall > trace_tol * scale:
        raise IrregularInitialVelocity(f"u0 has wall-normal flux {wall:.3e} on the boundary",
                                       "u0 in D(A^rho)")
    ux[:, [0, -1]] = 0.0
    uy[[0, -1], :] = 0.0
    u0 = VectorField(ux, uy, no_slip=True)
    u0 = project(u0, g, tol=projection_tol)

    if mismatch > 0:
        log.info("c0 trace differs from c_star by %.3e; using the c_star trace", mismatch)
    c0_field = ScalarField(c0.copy(), DIRICHLET, params.c_star.trace)
    return InitialData(ScalarField(n0.copy()), c0_field, u0), params


def max_divergence(u: VectorField, g: GridSpec) -> float:
    return float(np.max(np.abs(divergence(u, g).values)))
