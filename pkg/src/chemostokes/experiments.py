"""Orchestration: single runs, epsilon sweeps, refinement studies and offline checks.

Exit codes: 0 when every enabled check passes, 1 when a check fails or the
input is rejected, 2 when the run was stopped by the blow-up guard.
"""

from __future__ import annotations

import concurrent.futures
import copy
import io
import json
import logging
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import storage
from .diagnostics import (CheckResult, cadence, check_entropy_inequality,
                          check_gradc_inequality, check_mass_ode, check_max_principle,
                          check_nonnegativity, check_u_energy, column, constants_stable,
                          mass_ode_residuals, non_diverging, window_bounds)
from .errors import BlowupSuspected, ChemostokesError, NumericalFailure
from .grid import (DIRICHLET, BoundaryTrace, GridSpec, ScalarField, VectorField,
                   grad_to_faces, laplacian)
from .model import PhysicalParams, SimState
from .regularization import RegParams
from .timestepper import run, step_c, upwind_advection
from .weakform import RESIDUALS, default_library, epsilon_cauchy, observed_rates

log = logging.getLogger(__name__)

EXIT_OK, EXIT_CHECK_FAILED, EXIT_BLOWUP = 0, 1, 2
CHECKS_CSV = "checks.csv"
CONFIG_JSON = "config.json"
SWEEP_CSV = "sweep_report.csv"
SUMMARY_TXT = "summary.txt"
REFINE_CSV = "refine_table.csv"
RUN_CHECKS = ("mass_ode", "max_principle", "nonnegativity", "u_energy",
              "gradc_inequality", "entropy_inequality", "window_bounds")
SWEEP_CHECKS = ("member_checks", "cauchy_decreasing", "window_uniform", "constants_stable")
WINDOW_RATIO = 4.0
EXACT_LEVEL = 1e-12
# cadence of the stored trajectory in a sweep when the config sets none
SWEEP_SNAPSHOTS = 50
# refinement levels record the balances every ~RECORD_STEPS time steps
RECORD_STEPS = 10


# ---------------------------------------------------------------------------
# per-run checks

def _grad_inf(f: ScalarField, g: GridSpec) -> float:
    gf = grad_to_faces(f, g)
    return float(max(np.max(np.abs(gf.ux)), np.max(np.abs(gf.uy))))


def _channel_ok(name: str, t: np.ndarray, v: np.ndarray, width: float = 1.0) -> bool:
    if name.startswith("cum_"):
        return non_diverging(t, v, cumulative=True)
    if name.startswith("win_"):
        # until the first window fills, a window integral is a running integral
        full = t >= t[0] + width - 1e-12
        if full.sum() < 3:
            return non_diverging(t, v, cumulative=True)
        return non_diverging(t[full], v[full])
    return non_diverging(t, v)


def window_check(records) -> CheckResult:
    wb = window_bounds(records)
    bad = [name for name, v in wb.channels().items() if not _channel_ok(name, wb.t, v)]
    summ = wb.summary()
    worst = max(summ.values())
    detail = "diverging: " + ", ".join(bad) if bad else "all channels finite and non-diverging"
    return CheckResult("window_bounds", not bad and math.isfinite(worst), worst, detail)


def run_checks(records, problem: cfgmod.Problem) -> list[CheckResult]:
    """Every per-run check on a record series, in ``RUN_CHECKS`` order."""
    g, p, data, sc = problem.grid, problem.params, problem.data, problem.scheme
    dt, h = sc.dt_max, g.h
    cstar_max = max(float(p.c_star.values.max()), p.c_star.trace.max())
    forcing = column(records, "forcing_work")
    return [
        check_mass_ode(records, p.kappa, p.mu, dt=dt, h=h),
        check_max_principle(records, float(data.c0.values.max()), cstar_max),
        check_nonnegativity(records, records[0].mass),
        check_u_energy(records, forcing, _grad_inf(p.phi, g), dt=dt, h=h),
        check_gradc_inequality(records),
        check_entropy_inequality(records, p.mu),
        window_check(records),
    ]


def checks_to_csv(checks) -> str:
    lines = ["check,verdict,value,detail"]
    for c in checks:
        detail = c.detail.replace(",", ";").replace("\n", " ")
        lines.append(f"{c.name},{c.verdict},{storage.fmt(c.value)},{detail}")
    return "\n".join(lines) + "\n"


def read_checks(path) -> dict[str, tuple[str, str]]:
    out = {}
    for line in Path(path).read_text().splitlines()[1:]:
        name, verdict, value = line.split(",")[:3]
        out[name] = (verdict, value)
    return out


def verdict_table(checks) -> str:
    width = max(len(c.name) for c in checks)
    return "\n".join(f"{c.name:<{width}}  {c.verdict}  {c.detail}" for c in checks)


# ---------------------------------------------------------------------------
# single run

@dataclass
class RunOutcome:
    exit_code: int
    status: str  # "ok", "failed", "aborted", "invalid"
    records: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    reason: str = ""
    out_dir: Path | None = None
    seconds: float = 0.0


def resolved_dict(cfg: cfgmod.RunConfig) -> dict:
    """Config as a dict with table paths made absolute."""
    d = cfg.to_dict()
    base = Path(cfg.base_dir).resolve()
    for key, spec in d["physics"].items():
        if isinstance(spec, dict) and "file" in spec:
            spec["file"] = str((base / spec["file"]).resolve())
    return d


def _write_config(out: Path, cfg: cfgmod.RunConfig) -> None:
    storage.atomic_write(out / CONFIG_JSON, json.dumps(resolved_dict(cfg), sort_keys=True, indent=2) + "\n")


def cmd_run(cfg: cfgmod.RunConfig, out_dir=None, keep_snapshots: bool = True) -> RunOutcome:
    """Run one configuration to its end time, write artifacts and check them."""
    if cfg.epsilons is not None and len(cfg.epsilons) != 1:
        raise cfgmod.ConfigError("run takes a single epsilon; use sweep for an epsilon list")
    eps = cfg.epsilon_list()[0]
    out = Path(out_dir if out_dir is not None else cfg.output.dir)
    t0 = time.perf_counter()
    try:
        problem = cfgmod.build(cfg)
        reg = RegParams.build(problem.grid, eps)
    except ChemostokesError as exc:
        log.error("input rejected: %s", exc)
        return RunOutcome(EXIT_CHECK_FAILED, "invalid", reason=str(exc), out_dir=out)

    out.mkdir(parents=True, exist_ok=True)
    _write_config(out, cfg)
    sink = storage.DirectorySink(out, keep_in_memory=keep_snapshots)
    try:
        run(problem.data, problem.params, reg, problem.scheme, problem.grid, sink=sink,
            validate=problem.validate)
    except (BlowupSuspected, NumericalFailure) as exc:
        sink.abort()
        reason = getattr(exc, "reason", None) or type(exc).__name__
        log.error("run aborted (%s) at t = %r", reason, getattr(exc, "t", None))
        return RunOutcome(EXIT_BLOWUP, "aborted", sink.records, sink.snapshots,
                          reason=f"{reason}: {exc}", out_dir=out,
                          seconds=time.perf_counter() - t0)
    except BaseException:
        sink.abort()
        raise
    sink.finalize()

    checks = run_checks(sink.records, problem)
    storage.atomic_write(out / CHECKS_CSV, checks_to_csv(checks))
    ok = all(c.passed for c in checks)
    log.info("run finished in %.1f s; %s", time.perf_counter() - t0, "all checks pass" if ok
             else "failed: " + ", ".join(c.name for c in checks if not c.passed))
    return RunOutcome(EXIT_OK if ok else EXIT_CHECK_FAILED, "ok" if ok else "failed",
                      sink.records, sink.snapshots, checks, out_dir=out,
                      seconds=time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# offline replay

def cmd_check(run_dir) -> tuple[int, list[CheckResult], list[str]]:
    """Replay the per-run checks on a stored run directory.

    Returns ``(exit_code, checks, mismatches)`` where mismatches lists checks
    whose verdict or headline value differs from the in-run ``checks.csv``.
    Corrupt or missing artifacts raise with the offending file named.
    """
    run_dir = Path(run_dir)
    cfg = cfgmod.load_config(run_dir / CONFIG_JSON, validate=False)
    records = storage.read_records(run_dir / storage.RECORDS_CSV)
    cadence(records)
    storage.read_trajectory(run_dir)  # integrity of every snapshot file
    checks = run_checks(records, cfgmod.build(cfg))
    mismatches = []
    stored_path = run_dir / CHECKS_CSV
    if stored_path.exists():
        stored = read_checks(stored_path)
        for c in checks:
            if stored.get(c.name) != (c.verdict, storage.fmt(c.value)):
                mismatches.append(c.name)
    else:
        mismatches.append(CHECKS_CSV + " missing")
    ok = all(c.passed for c in checks) and not mismatches
    return (EXIT_OK if ok else EXIT_CHECK_FAILED), checks, mismatches


# ---------------------------------------------------------------------------
# epsilon sweep

@dataclass
class MemberResult:
    epsilon: float
    status: str
    exit_code: int
    out_dir: str
    window: dict = field(default_factory=dict)
    constants: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    reason: str = ""


@dataclass
class SweepReport:
    epsilons: list
    members: list
    cauchy: list  # one {"n", "c", "u"} dict per adjacent pair, None when unavailable
    degenerate: list  # pair indices with a zero difference
    matrix: dict  # check -> list of verdicts, one per epsilon
    window_ratios: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(v == "PASS" for row in self.matrix.values() for v in row)

    def to_csv(self) -> str:
        chans = next((list(m.window) for m in self.members if m.window), [])
        head = (["epsilon", "status"] + chans + ["C_gradc", "C_entropy", "cauchy_n", "cauchy_c",
                                                   "cauchy_u"] + list(self.matrix))
        lines = [",".join(head)]
        for j, m in enumerate(self.members):
            row = [storage.fmt(m.epsilon), m.status]
            row += [storage.fmt(m.window[c]) if c in m.window else "" for c in chans]
            row += [storage.fmt(m.constants[k]) if k in m.constants else ""
                    for k in ("gradc_inequality", "entropy_inequality")]
            pair = self.cauchy[j - 1] if j > 0 else None
            row += [storage.fmt(pair[k]) if pair else "" for k in ("n", "c", "u")]
            row += [self.matrix[k][j] for k in self.matrix]
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"

    def summary(self) -> str:
        buf = io.StringIO()
        buf.write(f"epsilon sweep over {', '.join(f'{e:g}' for e in self.epsilons)}\n\n")
        for m in self.members:
            buf.write(f"eps = {m.epsilon:g}: {m.status}")
            if m.reason:
                buf.write(f" ({m.reason})")
            buf.write("\n")
        buf.write("\nadjacent-pair L2 differences (n, c, u):\n")
        for j, d in enumerate(self.cauchy):
            a, b = self.epsilons[j], self.epsilons[j + 1]
            txt = "unavailable" if d is None else \
                f"{d['n']:.4e}  {d['c']:.4e}  {d['u']:.4e}"
            flag = "  DEGENERATE" if j in self.degenerate else ""
            buf.write(f"  {a:g} vs {b:g}: {txt}{flag}\n")
        if self.window_ratios:
            buf.write("\nwindow-bound ratio max/min over epsilon:\n")
            for k, r in self.window_ratios.items():
                buf.write(f"  {k:<18} {r:.4g}\n")
        buf.write("\nverdicts:\n")
        for k, row in self.matrix.items():
            buf.write(f"  {k:<18} {' '.join(row)}\n")
        buf.write(f"\noverall: {'PASS' if self.passed else 'FAIL'}\n")
        return buf.getvalue()


def _member_dir(out: Path, j: int, eps: float) -> Path:
    return out / f"eps_{j:02d}_{eps:g}"


def _run_member(raw: dict, base_dir: str, eps: float, out_dir: str) -> MemberResult:
    cfg = cfgmod.from_dict(copy.deepcopy(raw), base_dir=base_dir)
    outcome = cmd_run(cfg.with_epsilon(eps), out_dir, keep_snapshots=False)
    m = MemberResult(eps, outcome.status, outcome.exit_code, out_dir, reason=outcome.reason)
    if outcome.status in ("ok", "failed"):
        m.window = window_bounds(outcome.records).summary()
        m.checks = {c.name: c.verdict for c in outcome.checks}
        m.constants = {c.name: c.value for c in outcome.checks
                       if c.name in ("gradc_inequality", "entropy_inequality")}
    return m


def sweep_threads(threads: int | None) -> int:
    if threads is None:
        env = os.environ.get("CHEMOSTOKES_THREADS", "")
        threads = int(env) if env.strip() else 1
    return max(1, int(threads))


def cmd_sweep(cfg: cfgmod.RunConfig, out_dir=None, threads: int | None = None,
              epsilons=None) -> tuple[int, SweepReport]:
    """Run every epsilon, then compare adjacent members and aggregate the verdicts."""
    eps_list = [float(e) for e in (epsilons if epsilons is not None else cfg.epsilon_list())]
    if len(eps_list) < 3:
        raise cfgmod.ConfigError(f"a sweep needs at least 3 epsilons, got {len(eps_list)}")
    out = Path(out_dir if out_dir is not None else cfg.output.dir)
    out.mkdir(parents=True, exist_ok=True)

    raw = resolved_dict(cfg)
    raw["epsilons"] = None
    if raw["output"]["snapshot_interval"] == 0.0:
        per = max(1, round(cfg.scheme.T / SWEEP_SNAPSHOTS / cfg.output.record_interval))
        raw["output"]["snapshot_interval"] = per * cfg.output.record_interval
    raw = {k: v for k, v in raw.items() if v is not None}
    base = str(Path(cfg.base_dir).resolve())
    jobs = [(raw, base, e, str(_member_dir(out, j, e))) for j, e in enumerate(eps_list)]

    n_threads = sweep_threads(threads)
    if n_threads > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=n_threads) as pool:
            members = list(pool.map(_run_member, *zip(*jobs)))
    else:
        members = [_run_member(*job) for job in jobs]

    report = aggregate(eps_list, members, cfg.grid_spec())
    storage.atomic_write(out / SWEEP_CSV, report.to_csv())
    storage.atomic_write(out / SUMMARY_TXT, report.summary())
    return (EXIT_OK if report.passed else EXIT_CHECK_FAILED), report


def aggregate(eps_list, members, g: GridSpec) -> SweepReport:
    k = len(eps_list)
    alive = [m.status in ("ok", "failed") for m in members]

    cauchy, degenerate = [], []
    trajs = [storage.read_trajectory(m.out_dir) if ok else None for m, ok in zip(members, alive)]
    for j in range(k - 1):
        if trajs[j] is None or trajs[j + 1] is None:
            cauchy.append(None)
            continue
        d = epsilon_cauchy(trajs[j], trajs[j + 1], g)
        cauchy.append(d)
        if eps_list[j] == eps_list[j + 1] or min(d.values()) == 0.0:
            degenerate.append(j)

    def row(ok: bool):
        return ["PASS" if ok else "FAIL"] * k

    matrix = {"member_checks": ["PASS" if m.status == "ok" else "FAIL" for m in members]}

    valid = [d for d in cauchy if d is not None]
    decreasing = len(valid) == k - 1 and not degenerate and all(
        all(b[c] < a[c] for c in ("n", "c", "u")) for a, b in zip(valid, valid[1:]))
    matrix["cauchy_decreasing"] = row(decreasing)

    ratios = {}
    live = [m for m, ok in zip(members, alive) if ok]
    if live:
        for chan in live[0].window:
            vals = np.array([m.window[chan] for m in live])
            top, bottom = vals.max(), vals.min()
            ratios[chan] = float(top / bottom) if bottom > 0 else (1.0 if top == 0 else math.inf)
    uniform = all(alive) and all(r <= WINDOW_RATIO for r in ratios.values())
    matrix["window_uniform"] = row(uniform)

    stable = all(alive) and all(
        constants_stable([m.constants[name] for m in live])
        for name in ("gradc_inequality", "entropy_inequality"))
    matrix["constants_stable"] = row(stable)
    return SweepReport(list(eps_list), members, cauchy, degenerate, matrix, ratios)


# ---------------------------------------------------------------------------
# refinement study

@dataclass
class RefineRow:
    quantity: str
    errors: list
    orders: list
    target: str
    verdict: str
    note: str = ""


def _order_verdict(errors, orders, lo: float, hi: float = math.inf) -> tuple[str, str]:
    errs = np.asarray(errors, dtype=float)
    if not np.all(np.isfinite(errs)):
        return "FAIL", "non-finite error"
    if np.max(np.abs(errs)) <= EXACT_LEVEL:
        return "PASS", "exact"
    if np.any(np.diff(errs) >= 0):
        return "FAIL", "non-monotone error sequence"
    if all(lo <= o <= hi for o in orders):
        return "PASS", ""
    return "FAIL", "order out of range"


def manufactured_diffusion_errors(g0: GridSpec, levels: int) -> list[float]:
    """Max error of the Neumann Laplacian on cos(pi x)cos(pi y) per level."""
    errs = []
    for lev in range(levels):
        g = GridSpec.from_extents(g0.Lx, g0.Ly, g0.nx * 2**lev, g0.ny * 2**lev)
        X, Y = g.centers()
        ax, ay = math.pi / g.Lx, math.pi / g.Ly
        f = ScalarField(np.cos(ax * X) * np.cos(ay * Y))
        exact = -(ax * ax + ay * ay) * f.values
        errs.append(float(np.max(np.abs(laplacian(f, g).values - exact))))
    return errs


def manufactured_advection_errors(g0: GridSpec, levels: int) -> list[float]:
    """Max error of the upwind advection term for a rotating flow per level."""
    errs = []
    for lev in range(levels):
        g = GridSpec.from_extents(g0.Lx, g0.Ly, g0.nx * 2**lev, g0.ny * 2**lev)
        XF, YF = g.xfaces()
        XG, YG = g.yfaces()
        ax, ay = math.pi / g.Lx, math.pi / g.Ly
        # u = curl of sin^2 sin^2 is tangential at the walls
        ux = np.sin(ax * XF) ** 2 * 2 * ay * np.sin(ay * YF) * np.cos(ay * YF)
        uy = -2 * ax * np.sin(ax * XG) * np.cos(ax * XG) * np.sin(ay * YG) ** 2
        u = VectorField(ux, uy, no_slip=False)
        X, Y = g.centers()
        f = ScalarField(np.cos(ax * X) * np.cos(ay * Y))
        ucx = np.sin(ax * X) ** 2 * 2 * ay * np.sin(ay * Y) * np.cos(ay * Y)
        ucy = -2 * ax * np.sin(ax * X) * np.cos(ax * X) * np.sin(ay * Y) ** 2
        exact = ucx * (-ax * np.sin(ax * X) * np.cos(ay * Y)) + ucy * (-ay * np.cos(ax * X) * np.sin(ay * Y))
        errs.append(float(np.max(np.abs(upwind_advection(f, u, g) - exact))))
    return errs


def heat_decay_rate(n: int, T: float = 0.02, sigma: float = 1.0) -> float:
    """Observed exponential decay rate of sin(pi x)sin(pi y) under the signal
    diffusion step with zero boundary data, no cells and no flow."""
    g = GridSpec.from_extents(1.0, 1.0, n, n)
    X, Y = g.centers()
    zero = BoundaryTrace.constant(0.0, g)
    c = ScalarField(np.sin(np.pi * X) * np.sin(np.pi * Y), DIRICHLET, zero)
    s = SimState(ScalarField(np.zeros(g.shape)), c, VectorField.zeros(g))
    reg = RegParams.build(g, 0.1)
    p = PhysicalParams(0.0, 1.0, ScalarField(np.zeros(g.shape)), ScalarField(np.zeros(g.shape), DIRICHLET, zero))
    dt = sigma * g.h * g.h / 8.0
    steps = int(math.ceil(T / dt))
    dt = T / steps
    a0 = float(np.sqrt(np.sum(s.c.values ** 2)))
    for _ in range(steps):
        s.c = step_c(s, p, reg, dt, g).field
    a1 = float(np.sqrt(np.sum(s.c.values ** 2)))
    return math.log(a0 / a1) / T


def _refine_level_config(cfg: cfgmod.RunConfig, lev: int) -> cfgmod.RunConfig:
    c = copy.deepcopy(cfg)
    c.grid.nx, c.grid.ny = cfg.grid.nx * 2**lev, cfg.grid.ny * 2**lev
    c.scheme.dt_max = cfg.scheme.dt_max / 4**lev
    snap = cfg.scheme.T / (16 * 2**lev)
    # records at most RECORD_STEPS steps apart: the trapezoid error of the
    # mass balance then stays second order in dt and cannot mask the first-order term
    per = max(1, math.ceil(snap / (RECORD_STEPS * c.scheme.dt_max) - 1e-9))
    c.output.record_interval = snap / per
    c.output.snapshot_interval = snap
    return c


def cmd_refine(cfg: cfgmod.RunConfig, out_dir=None, levels: int | None = None) -> tuple[int, list[RefineRow]]:
    """(h, dt) -> (h/2, dt/4) chain from the config's grid and dt_max.

    Snapshots every T/(16*2^l) with records about RECORD_STEPS steps apart;
    weak residuals use the default test library with support [0, T].
    """
    levels = levels if levels is not None else cfg.refine.levels
    if levels < 3:
        raise cfgmod.ConfigError(f"refinement needs at least 3 levels, got {levels}")
    out = Path(out_dir if out_dir is not None else cfg.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    eps = cfg.epsilon_list()[0]
    g0 = cfg.grid_spec()

    rows = []
    errs = manufactured_diffusion_errors(g0, levels)
    orders = observed_rates(errs)
    v, note = _order_verdict(errs, orders, 1.7, 2.3)
    rows.append(RefineRow("manufactured_diffusion", errs, orders, "2.0 +- 0.3 in h", v, note))
    errs = manufactured_advection_errors(g0, levels)
    orders = observed_rates(errs)
    v, note = _order_verdict(errs, orders, 0.7, 1.3)
    rows.append(RefineRow("manufactured_advection", errs, orders, "1.0 +- 0.3 in h", v, note))

    mass, weak, failed = [], {}, None
    for lev in range(levels):
        lc = _refine_level_config(cfg, lev).with_epsilon(eps)
        outcome = cmd_run(lc, out / f"level_{lev}")
        if outcome.status not in ("ok", "failed"):
            failed = f"level {lev} {outcome.status}: {outcome.reason}"
            break
        problem = cfgmod.build(lc)
        p = problem.params
        mass.append(float(mass_ode_residuals(outcome.records, p.kappa, p.mu).max()))
        reg = RegParams.build(problem.grid, eps)
        lib = default_library(problem.grid, lc.scheme.T)
        for kind, tfs in lib.items():
            for tf in tfs:
                r = RESIDUALS[kind](outcome.snapshots, tf, problem.grid, p, reg)
                weak.setdefault(f"weak_{kind}_{tf.name}", []).append(r)
    if failed:
        rows.append(RefineRow("runs", [], [], "all levels complete", "FAIL", failed))
    else:
        orders = [o / 2.0 for o in observed_rates(mass)]  # dt shrinks by 4 per level
        v, note = _order_verdict(mass, orders, 0.7, 1.3)
        rows.append(RefineRow("mass_ode_residual", mass, orders, "1.0 +- 0.3 in dt", v, note))
        for name, errs in weak.items():
            orders = observed_rates(errs)
            v, note = _order_verdict(errs, orders, 0.8)
            rows.append(RefineRow(name, errs, orders, ">= 0.8 per level", v, note))

    storage.atomic_write(out / REFINE_CSV, refine_to_csv(rows))
    ok = all(r.verdict == "PASS" for r in rows)
    return (EXIT_OK if ok else EXIT_CHECK_FAILED), rows


def refine_to_csv(rows) -> str:
    lines = ["quantity,errors,orders,target,verdict,note"]
    for r in rows:
        lines.append(",".join([r.quantity, " ".join(storage.fmt(e) for e in r.errors),
                               " ".join(f"{o:.4f}" for o in r.orders), r.target,
                               r.verdict, r.note]))
    return "\n".join(lines) + "\n"


def refine_table(rows) -> str:
    width = max(len(r.quantity) for r in rows)
    out = []
    for r in rows:
        errs = " ".join(f"{e:.3e}" for e in r.errors)
        orders = " ".join(f"{o:.2f}" for o in r.orders)
        note = f" [{r.note}]" if r.note else ""
        out.append(f"{r.quantity:<{width}}  {r.verdict:<4}  errors {errs}  orders {orders}"
                   f"  (target {r.target}){note}")
    return "\n".join(out)
