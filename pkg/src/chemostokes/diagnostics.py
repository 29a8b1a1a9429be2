"""Functionals of a simulation state and the checks run on their time series.

Every ``check_*`` function is a pure function of a list of
:class:`FunctionalRecord` taken at a uniform cadence.  Time derivatives of
functionals are centred differences between consecutive records and are
compared with the trapezoid average of the right-hand side over the interval.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from .errors import ContractError, DiagnosticError, ValidationError
from .grid import (GridSpec, ScalarField, VectorField, cell_gradient, face_inner,
                   faces_to_centers, grad_to_faces, integrate, laplacian)
from .model import PhysicalParams, SimState

FISHER_FLOOR = 1e-12
MAX_PRINCIPLE_SLACK = 1e-10

# tolerance model tol(dt, h) = TOL_DT * dt + TOL_H * h^2 for the per-run
# identity residuals (mass ODE, fluid energy); frozen after calibration
TOL_DT = 100.0
TOL_H = 10.0


def tolerance(dt: float, h: float) -> float:
    return TOL_DT * dt + TOL_H * h * h


@dataclass(frozen=True)
class FunctionalRecord:
    t: float
    mass: float
    l2n_sq: float
    c_max: float
    c_min: float
    grad_c_l2_sq: float
    lap_c_l2_sq: float
    grad_c_l4: float
    kinetic: float
    grad_u_l2_sq: float
    u_l6: float
    entropy: float
    fisher: float
    n2_log: float
    grad_n_43: float
    theta: float
    chat_boundary_max: float
    clipped_mass_cum: float
    forcing_work: float

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def as_dict(self) -> dict:
        return asdict(self)


def _xlogx(a: np.ndarray) -> np.ndarray:
    out = np.zeros_like(a)
    pos = a > 0
    out[pos] = a[pos] * np.log(a[pos])
    return out


def velocity_gradient_sq(u: VectorField, g: GridSpec) -> float:
    """Discrete Dirichlet energy of a MAC velocity, summed edge by edge.

    For no-slip fields the half edges between the first row of tangential
    faces and the wall use the odd ghost, which makes the result equal to
    ``-<u, vector_laplacian(u)>`` exactly.  For free fields the wall half
    edges reuse the nearest interior difference.
    """
    h = g.h
    total = 0.0
    for comp, axis in ((u.ux, 0), (u.uy, 1)):
        # axis: the direction *tangential* to the walls that bound this component
        a = comp if axis == 0 else comp.T
        # normal direction differences (between faces that include boundary faces)
        dn = (a[:, 1:] - a[:, :-1]) / h
        total += float(np.sum(dn * dn)) * h * h
        # tangential differences, columns weighted by the trapezoid rule
        w = np.ones(a.shape[1])
        w[0] = w[-1] = 0.5
        dt_ = (a[1:, :] - a[:-1, :]) / h
        total += float(np.sum((dt_ * dt_) * w)) * h * h
        if u.no_slip:
            lo, hi = 2.0 * a[0, :] / h, 2.0 * a[-1, :] / h
        else:
            lo, hi = dt_[0, :], dt_[-1, :]
        total += float(np.sum((lo * lo + hi * hi) * w)) * h * h * 0.5
    return total


def dirichlet_energy(f: ScalarField, g: GridSpec) -> float:
    """Face-sum quadrature of |grad f|^2 (half weight on boundary faces)."""
    gr = grad_to_faces(f, g)
    return face_inner(gr, gr, g)


def boundary_trace_error(c: ScalarField, c_star: ScalarField, g: GridSpec) -> float:
    """max |c_* - c| over the discrete boundary trace of c.

    The discrete trace is the cell value extrapolated half a cell with the
    boundary face gradient.
    """
    gr = grad_to_faces(c, g)
    h2 = 0.5 * g.h
    a = c.values
    tr = c_star.trace
    errs = (
        a[:, 0] - h2 * gr.ux[:, 0] - tr.west,
        a[:, -1] + h2 * gr.ux[:, -1] - tr.east,
        a[0, :] - h2 * gr.uy[0, :] - tr.south,
        a[-1, :] + h2 * gr.uy[-1, :] - tr.north,
    )
    return max(float(np.max(np.abs(e))) for e in errs)


def compute_record(s: SimState, g: GridSpec, p: PhysicalParams, reg=None) -> FunctionalRecord:
    from .timestepper import buoyancy

    n = s.n.values
    c = s.c
    gcx, gcy = cell_gradient(c, g)
    gc2 = gcx * gcx + gcy * gcy
    gnx, gny = cell_gradient(s.n, g)
    gn2 = gnx * gnx + gny * gny
    ucx, ucy = faces_to_centers(s.u, g)
    u2 = ucx * ucx + ucy * ucy
    lap_c = laplacian(c, g).values
    fisher_density = np.where(n > FISHER_FLOOR, gn2 / np.maximum(n, FISHER_FLOOR), 0.0)
    n2 = n * n

    values = dict(
        t=float(s.t),
        mass=integrate(n, g),
        l2n_sq=integrate(n2, g),
        c_max=float(np.max(c.values)),
        c_min=float(np.min(c.values)),
        grad_c_l2_sq=dirichlet_energy(c, g),
        lap_c_l2_sq=integrate(lap_c * lap_c, g),
        grad_c_l4=integrate(gc2 * gc2, g),
        kinetic=face_inner(s.u, s.u, g),
        grad_u_l2_sq=velocity_gradient_sq(s.u, g),
        u_l6=integrate(u2 * u2 * u2, g),
        entropy=integrate(_xlogx(n), g),
        fisher=integrate(fisher_density, g),
        n2_log=integrate(n * _xlogx(n), g),
        grad_n_43=integrate(gn2 ** (2.0 / 3.0), g),
        theta=integrate(n2 * np.log1p(n2), g),
        chat_boundary_max=boundary_trace_error(c, p.c_star, g),
        clipped_mass_cum=float(s.clipped_n),
        forcing_work=face_inner(s.u, buoyancy(s.n, p.phi, g), g),
    )
    for name, v in values.items():
        if not math.isfinite(v):
            raise DiagnosticError(f"functional {name} is not finite ({v})", functional=name)
    return FunctionalRecord(**values)


# ---------------------------------------------------------------------------
# time-series checks

@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float  # the headline number: max residual, fitted constant, margin
    detail: str = ""

    @property
    def verdict(self) -> str:
        return "PASS" if self.passed else "FAIL"


def column(series, name: str) -> np.ndarray:
    return np.array([getattr(r, name) for r in series], dtype=float)


def cadence(series, min_records: int = 3) -> float:
    """Common spacing of the record times; raises on a non-uniform cadence."""
    if len(series) < min_records:
        raise ContractError(f"need at least {min_records} records, got {len(series)}")
    t = column(series, "t")
    d = np.diff(t)
    step = float(d[0])
    if step <= 0 or np.max(np.abs(d - step)) > 1e-9 * step:
        raise ContractError("records are not at a uniform cadence "
                            f"(spacing ranges over [{d.min():.6g}, {d.max():.6g}])")
    return step


def _rate(series, name: str, delta: float) -> np.ndarray:
    return np.diff(column(series, name)) / delta


def _mid(series, name: str) -> np.ndarray:
    a = column(series, name)
    return 0.5 * (a[1:] + a[:-1])


def mass_ode_residuals(series, kappa: float, mu: float) -> np.ndarray:
    delta = cadence(series)
    rhs = kappa * _mid(series, "mass") - mu * _mid(series, "l2n_sq")
    return np.abs(_rate(series, "mass", delta) - rhs)


def check_mass_ode(series, kappa: float, mu: float, dt: float | None = None,
                   h: float | None = None, tol: float | None = None) -> CheckResult:
    """Residual of d/dt int n = kappa int n - mu int n^2 between records."""
    res = mass_ode_residuals(series, kappa, mu)
    worst = float(res.max())
    if tol is None:
        if dt is None or h is None:
            raise ContractError("check_mass_ode needs either tol or (dt, h)")
        tol = tolerance(dt, h)
    return CheckResult("mass_ode", worst <= tol, worst, f"max residual {worst:.3e} vs tol {tol:.3e}")


def check_max_principle(series, c0_max: float, cstar_max: float) -> CheckResult:
    bound = max(c0_max, cstar_max)
    cmax = column(series, "c_max")
    margin = float(bound + MAX_PRINCIPLE_SLACK - cmax.max())
    return CheckResult("max_principle", margin >= 0, margin,
                       f"max c {cmax.max():.17g} vs bound {bound:.17g}")


def check_nonnegativity(series, mass0: float, rel: float = 1e-8) -> CheckResult:
    clipped = float(column(series, "clipped_mass_cum").max())
    cmin = float(column(series, "c_min").min())
    ok = clipped <= rel * mass0 and cmin >= -1e-12
    return CheckResult("nonnegativity", ok, clipped,
                       f"clipped mass {clipped:.3e} (limit {rel * mass0:.3e}), min c {cmin:.3e}")


def energy_residuals(series, forcing_series) -> np.ndarray:
    delta = cadence(series)
    forcing = np.asarray(forcing_series, dtype=float)
    if forcing.shape != (len(series),):
        raise ContractError("forcing series must hold one value per record")
    rhs = -_mid(series, "grad_u_l2_sq") + 0.5 * (forcing[1:] + forcing[:-1])
    return np.abs(0.5 * _rate(series, "kinetic", delta) - rhs)


def check_u_energy(series, forcing_series, grad_phi_inf: float, dt: float | None = None,
                   h: float | None = None, tol: float | None = None) -> CheckResult:
    """Fluid energy identity and its Young-inequality form.

    Identity: (1/2) d/dt int|u|^2 = -int|grad u|^2 + int n grad(phi).u.
    Inequality: (1/2) d/dt int|u|^2 + (1/2) int|grad u|^2 <= C1 int n^2 with
    C1 = |grad phi|_inf^2 / 2 + 1/2.
    """
    if forcing_series is None:
        raise ContractError("check_u_energy needs the forcing series")
    res = energy_residuals(series, forcing_series)
    if tol is None:
        if dt is None or h is None:
            raise ContractError("check_u_energy needs either tol or (dt, h)")
        tol = tolerance(dt, h)
    delta = cadence(series)
    c1 = 0.5 * grad_phi_inf**2 + 0.5
    lhs = 0.5 * _rate(series, "kinetic", delta) + 0.5 * _mid(series, "grad_u_l2_sq")
    slack = c1 * _mid(series, "l2n_sq") + tol - lhs
    worst = float(res.max())
    ok = worst <= tol and bool(np.all(slack >= 0))
    return CheckResult("u_energy", ok, worst,
                       f"max identity residual {worst:.3e} vs tol {tol:.3e}; "
                       f"min inequality slack {slack.min():.3e}")


def fit_constant(lhs: np.ndarray, rhs: np.ndarray) -> float:
    """Smallest C >= 0 with lhs <= C * rhs everywhere (rhs > 0)."""
    if lhs.size == 0:
        return 0.0
    return float(max(0.0, np.max(lhs / rhs)))


def gradc_lhs(series) -> np.ndarray:
    delta = cadence(series)
    return 0.5 * _rate(series, "grad_c_l2_sq", delta) + 0.25 * _mid(series, "lap_c_l2_sq")


def check_gradc_inequality(series) -> CheckResult:
    """Fit C in (1/2) d/dt int|grad c|^2 + (1/4) int|lap c|^2 <= C (int n^2 + 1)."""
    lhs = gradc_lhs(series)
    C = fit_constant(lhs, _mid(series, "l2n_sq") + 1.0)
    return CheckResult("gradc_inequality", math.isfinite(C), C, f"fitted C = {C:.6g}")


def entropy_lhs(series, mu: float) -> np.ndarray:
    delta = cadence(series)
    return (_rate(series, "entropy", delta) + 0.5 * _mid(series, "fisher")
            + 0.5 * mu * _mid(series, "n2_log"))


def check_entropy_inequality(series, mu: float) -> CheckResult:
    """Fit C in d/dt int n ln n + (1/2) int|grad n|^2/n + (mu/2) int n^2 ln n
    <= C (int n^2 + int|grad c|^4 + 1)."""
    lhs = entropy_lhs(series, mu)
    rhs = _mid(series, "l2n_sq") + _mid(series, "grad_c_l4") + 1.0
    C = fit_constant(lhs, rhs)
    return CheckResult("entropy_inequality", math.isfinite(C), C, f"fitted C = {C:.6g}")


def constants_stable(constants, factor: float = 2.0) -> bool:
    """True when the fitted constants agree within the given ratio.

    Constants that are all (numerically) zero count as stable.
    """
    cs = np.asarray(list(constants), dtype=float)
    if not np.all(np.isfinite(cs)):
        return False
    top = cs.max()
    if top <= 1e-12:
        return True
    return bool(cs.min() > 0 and top / cs.min() < factor)


PASS, FAIL, HYPOTHESIS_FAIL = "PASS", "FAIL", "HYPOTHESIS-FAIL"


@dataclass(frozen=True)
class ComparisonResult:
    verdict: str
    bound: float
    index: int | None  # first sample violating the bound
    hypothesis_index: int | None  # first interval violating a hypothesis
    detail: str = ""


def ode_comparison_check(t, y, hseries, a: float, C: float, tol: float = 1e-9) -> ComparisonResult:
    """Comparison bound for y' + a y <= h with unit-window integrals of h <= C.

    The conclusion y <= y(0) + C / (1 - exp(-a)) is tested at every sample.
    A violated bound is FAIL (flagging the first offending sample); otherwise
    a violated hypothesis makes the outcome HYPOTHESIS-FAIL.
    """
    if not a > 0:
        raise ValidationError(f"comparison rate a must be positive, got {a}", "a > 0")
    if not C >= 0:
        raise ValidationError(f"window constant C must be nonnegative, got {C}", "C > 0")
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    hs = np.asarray(hseries, dtype=float)
    if not (t.shape == y.shape == hs.shape) or t.size < 2:
        raise ContractError("t, y and h must be equally long series with >= 2 samples")
    if np.any(np.diff(t) <= 0):
        raise ContractError("sample times must increase")

    dtv = np.diff(t)
    # integrating-factor form of y' + a y <= h over each interval, with the
    # forcing integral by the trapezoid rule (exact solutions satisfy it)
    decay = np.exp(-a * dtv)
    ode = y[1:] - decay * y[:-1] - 0.5 * dtv * (hs[1:] + decay * hs[:-1])
    bad_ode = np.nonzero(ode > tol * (1.0 + np.abs(y[1:])))[0]

    cum = np.concatenate([[0.0], np.cumsum(0.5 * (hs[1:] + hs[:-1]) * dtv)])
    window = cum - np.interp(np.maximum(t - 1.0, t[0]), t, cum)
    bad_window = np.nonzero(window > C + tol)[0]
    bad_sign = np.nonzero(hs < -tol)[0]
    hyp = [int(i[0]) for i in (bad_ode, bad_window, bad_sign) if i.size]
    hyp_index = min(hyp) if hyp else None

    bound = float(y[0] + C / (1.0 - math.exp(-a)))
    over = np.nonzero(y > bound + tol)[0]
    if over.size:
        i = int(over[0])
        return ComparisonResult(FAIL, bound, i, hyp_index,
                                f"y({t[i]:.6g}) = {y[i]:.6g} exceeds bound {bound:.6g}")
    if hyp_index is not None:
        return ComparisonResult(HYPOTHESIS_FAIL, bound, None, hyp_index,
                                f"hypotheses violated from sample {hyp_index}")
    return ComparisonResult(PASS, bound, None, None, f"max y {y.max():.6g} <= {bound:.6g}")


@dataclass(frozen=True)
class WindowBounds:
    t: np.ndarray
    sup_mass: np.ndarray
    sup_grad_c_l2_sq: np.ndarray
    sup_grad_u_l2_sq: np.ndarray
    sup_u_l6: np.ndarray
    win_l2n_sq: np.ndarray
    win_lap_c_l2_sq: np.ndarray
    win_grad_c_l4: np.ndarray
    cum_grad_n_43: np.ndarray

    CHANNELS = ("sup_mass", "sup_grad_c_l2_sq", "sup_grad_u_l2_sq", "sup_u_l6",
                "win_l2n_sq", "win_lap_c_l2_sq", "win_grad_c_l4", "cum_grad_n_43")

    def channels(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in self.CHANNELS}

    def summary(self) -> dict[str, float]:
        """Largest value attained by each channel over the run."""
        return {name: float(np.max(v)) for name, v in self.channels().items()}


def _window_integral(t: np.ndarray, v: np.ndarray, width: float = 1.0) -> np.ndarray:
    if t.size < 2:
        return np.zeros_like(t)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (v[1:] + v[:-1]) * np.diff(t))])
    return cum - np.interp(np.maximum(t - width, t[0]), t, cum)


def window_bounds(series) -> WindowBounds:
    if len(series) >= 2:
        cadence(series, min_records=2)
    t = column(series, "t")
    cum = _window_integral(t, column(series, "grad_n_43"), width=np.inf)
    return WindowBounds(
        t=t,
        sup_mass=np.maximum.accumulate(column(series, "mass")),
        sup_grad_c_l2_sq=np.maximum.accumulate(column(series, "grad_c_l2_sq")),
        sup_grad_u_l2_sq=np.maximum.accumulate(column(series, "grad_u_l2_sq")),
        sup_u_l6=np.maximum.accumulate(column(series, "u_l6")),
        win_l2n_sq=_window_integral(t, column(series, "l2n_sq")),
        win_lap_c_l2_sq=_window_integral(t, column(series, "lap_c_l2_sq")),
        win_grad_c_l4=_window_integral(t, column(series, "grad_c_l4")),
        cum_grad_n_43=cum,
    )


def non_diverging(t: np.ndarray, v: np.ndarray, cumulative: bool = False, factor: float = 2.0) -> bool:
    """Finite channel showing no growth trend over the run.

    For bounded channels the maximum over the second half of the run must not
    exceed ``factor`` times the maximum over the first half.  Cumulative
    channels are judged on their mean growth rate over each half instead.
    """
    if not np.all(np.isfinite(v)):
        return False
    if t.size < 3:
        return True
    mid = 0.5 * (t[0] + t[-1])
    first, second = t <= mid, t >= mid
    if cumulative:
        v_mid = float(np.interp(mid, t, v))
        r1 = (v_mid - v[0]) / (mid - t[0])
        r2 = (v[-1] - v_mid) / (t[-1] - mid)
        return bool(r2 <= factor * max(r1, 1e-300))
    return bool(np.max(v[second]) <= factor * max(np.max(v[first]), 1e-300))


def chat_field(c: ScalarField, c_star: ScalarField) -> np.ndarray:
    """Shifted signal c_* - c, which vanishes on the boundary."""
    return c_star.values - c.values
