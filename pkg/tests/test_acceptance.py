"""Acceptance criteria, one printed PASS/FAIL line each.

The heavy artifacts (default run, dt-halved run, epsilon sweep, refinement
study) are produced once per module.  Expect roughly ten minutes on one core.
"""

import math
import time
from pathlib import Path

import numpy as np
import pytest

from chemostokes import config as C
from chemostokes import experiments as ex
from chemostokes import storage
from chemostokes.diagnostics import (PASS, FAIL, column, constants_stable, entropy_lhs,
                                     energy_residuals, mass_ode_residuals, ode_comparison_check)
from chemostokes.grid import DIRICHLET, GridSpec, ScalarField, VectorField, divergence, project
from chemostokes.model import InitialData, PhysicalParams
from chemostokes.regularization import RegParams
from chemostokes.timestepper import MemorySink, run

from conftest import const_field, short_scheme

pytestmark = pytest.mark.slow

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"


@pytest.fixture
def report(request):
    lines = request.config.acceptance_lines

    def emit(criterion, ok, detail):
        line = f"{criterion:<4} {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)
        return ok

    return emit


def by_name(checks):
    return {c.name: c for c in checks}


@pytest.fixture(scope="module")
def default_run(tmp_path_factory):
    cfg = C.load_config(CONFIGS / "default.json")
    return ex.cmd_run(cfg, tmp_path_factory.mktemp("default"))


@pytest.fixture(scope="module")
def halved_run(tmp_path_factory):
    # the record spacing shrinks with dt so the balance residuals keep their step count
    cfg = C.load_config(CONFIGS / "default.json",
                        ["scheme.dt_max=1e-5", "output.record_interval=1e-4"])
    return ex.cmd_run(cfg, tmp_path_factory.mktemp("halved"), keep_snapshots=False)


@pytest.fixture(scope="module")
def sweep(tmp_path_factory):
    cfg = C.load_config(CONFIGS / "sweep.json")
    out = tmp_path_factory.mktemp("sweep")
    t0 = time.perf_counter()
    code, rep = ex.cmd_sweep(cfg, out)
    return code, rep, out, time.perf_counter() - t0


@pytest.fixture(scope="module")
def refine(tmp_path_factory):
    cfg = C.load_config(CONFIGS / "refine.json")
    out = tmp_path_factory.mktemp("refine")
    code, rows = ex.cmd_refine(cfg, out)
    return code, {r.quantity: r for r in rows}, out


# 1. conservation and identities

def test_c1_runtime(default_run, report):
    ok = default_run.exit_code == ex.EXIT_OK and default_run.seconds <= 300
    assert report("1", ok, f"default run exit {default_run.exit_code} in {default_run.seconds:.0f} s "
                           "(limit 300 s)")


def test_c1a_mass_ode(default_run, halved_run, report):
    p = C.build(C.load_config(CONFIGS / "default.json")).params
    r1 = float(mass_ode_residuals(default_run.records, p.kappa, p.mu).max())
    r2 = float(mass_ode_residuals(halved_run.records, p.kappa, p.mu).max())
    ratio = r1 / r2
    ok = r1 <= 1e-3 and 1.6 <= ratio <= 2.4
    assert report("1a", ok, f"mass ODE residual {r1:.3e} (limit 1e-3), dt/2 gives {r2:.3e}, "
                            f"ratio {ratio:.2f}")


def test_c1b_max_principle(default_run, report):
    c = by_name(default_run.checks)["max_principle"]
    assert report("1b", c.passed, c.detail + " (slack 1e-10)")


def test_c1c_nonnegativity(default_run, report):
    c = by_name(default_run.checks)["nonnegativity"]
    assert report("1c", c.passed, c.detail)


def test_c1d_energy(default_run, halved_run, report):
    c = by_name(default_run.checks)["u_energy"]
    r1 = float(energy_residuals(default_run.records,
                                column(default_run.records, "forcing_work")).max())
    r2 = float(energy_residuals(halved_run.records,
                                column(halved_run.records, "forcing_work")).max())
    ratio = r1 / r2
    ok = c.passed and by_name(halved_run.checks)["u_energy"].passed and ratio >= 1.6
    assert report("1d", ok, f"energy identity residual {r1:.3e} -> {r2:.3e} under dt/2 "
                            f"(ratio {ratio:.2f}, first order needs >= 1.6); inequality holds")


# 2. estimate ladder

def test_c2a_gradc(default_run, halved_run, report):
    a = by_name(default_run.checks)["gradc_inequality"]
    b = by_name(halved_run.checks)["gradc_inequality"]
    ok = a.passed and b.passed and constants_stable([a.value, b.value])
    assert report("2a", ok, f"fitted C = {a.value:.6g}, dt/2 gives {b.value:.6g}")


def flat_entropy_lhs_error():
    g = GridSpec.from_extents(1.0, 1.0, 8, 8)
    kappa, mu, nbar = 0.5, 1.0, 0.3
    p = PhysicalParams(kappa, mu, ScalarField(np.zeros(g.shape)), const_field(g, 0.0, DIRICHLET))
    data = InitialData(const_field(g, nbar), const_field(g, 0.0, DIRICHLET), VectorField.zeros(g))
    sink = MemorySink()
    run(data, p, RegParams.build(g, 0.1), short_scheme(T=1e-5, record=1e-6, dt_max=1e-7), g,
        sink=sink, validate=False)
    n = column(sink.records, "mass")
    mid = 0.5 * (n[1:] + n[:-1])
    closed = (kappa * mid - mu * mid**2) * (np.log(mid) + 1) + 0.5 * mu * mid**2 * np.log(mid)
    return float(np.max(np.abs(entropy_lhs(sink.records, mu) - closed)))


def test_c2b_entropy(default_run, halved_run, report):
    a = by_name(default_run.checks)["entropy_inequality"]
    b = by_name(halved_run.checks)["entropy_inequality"]
    err = flat_entropy_lhs_error()
    ok = a.passed and b.passed and constants_stable([a.value, b.value]) and err <= 1e-8
    assert report("2b", ok, f"fitted C = {a.value:.6g}, dt/2 gives {b.value:.6g}; "
                            f"uniform closed form differs by {err:.1e} (limit 1e-8)")


def test_c2c_window_bounds(default_run, report):
    c = by_name(default_run.checks)["window_bounds"]
    assert report("2c", c.passed, c.detail)


# 3. ODE comparison checker

def test_c3_comparison(report):
    t = np.linspace(0.0, 5.0, 5001)
    y = 1.0 - np.exp(-t)
    good = ode_comparison_check(t, y, np.ones_like(t), 1.0, 1.0, tol=1e-9)
    bad_y = y.copy()
    bad_y[2500] = 2.0
    bad = ode_comparison_check(t, bad_y, np.ones_like(t), 1.0, 1.0, tol=1e-9)
    ok = (good.verdict == PASS and abs(good.bound - 1 / (1 - math.exp(-1))) < 1e-12
          and bad.verdict == FAIL and bad.index == 2500)
    assert report("3", ok, f"analytic case {good.verdict} (bound {good.bound:.6f}); "
                           f"constructed violation {bad.verdict} at sample {bad.index}")


# 4. epsilon sweep

def test_c4_runtime(sweep, report):
    _, rep, _, secs = sweep
    ok = secs <= 1200 and all(m.status == "ok" for m in rep.members)
    assert report("4", ok, f"{len(rep.members)} members in {secs:.0f} s (limit 1200 s), "
                           f"statuses {[m.status for m in rep.members]}")


@pytest.mark.xfail(strict=True, reason="the n and u differences grow from the first pair to "
                   "the second; see README, 'Known failing criterion'")
def test_c4a_cauchy_decreasing(sweep, report):
    _, rep, _, _ = sweep
    pairs = rep.cauchy
    parts = []
    ok = all(d is not None for d in pairs)
    for comp in ("n", "c", "u"):
        seq = [d[comp] for d in pairs]
        dec = all(b < a for a, b in zip(seq, seq[1:]))
        ok = ok and dec
        parts.append(f"{comp}: {', '.join(f'{v:.3e}' for v in seq)} {'ok' if dec else 'not decreasing'}")
    assert report("4a", ok, "; ".join(parts))


def test_c4b_window_uniform(sweep, report):
    _, rep, _, _ = sweep
    worst = max(rep.window_ratios.items(), key=lambda kv: kv[1])
    ok = all(r <= ex.WINDOW_RATIO for r in rep.window_ratios.values())
    assert report("4b", ok, f"largest max/min ratio {worst[1]:.3g} ({worst[0]}), limit 4")


def test_c4c_constants(sweep, report):
    _, rep, _, _ = sweep
    parts, ok = [], True
    for name in ("gradc_inequality", "entropy_inequality"):
        cs = [m.constants[name] for m in rep.members]
        ok = ok and constants_stable(cs)
        parts.append(f"{name} " + " ".join(f"{c:.4g}" for c in cs))
    assert report("4c", ok, "; ".join(parts) + " (spread < x2)")


# 5. weak formulation

def test_c5_weak_residuals(refine, report):
    _, rows, _ = refine
    weak = {k: r for k, r in rows.items() if k.startswith("weak_")}
    kinds = {k.split("_")[1] for k in weak}
    per_kind = min(sum(k.startswith(f"weak_{kind}_") for k in weak) for kind in "ncu")
    worst = min((min(r.orders), k) for k, r in weak.items())
    ok = kinds == {"n", "c", "u"} and per_kind >= 2 and all(r.verdict == "PASS" for r in weak.values()) \
        and all(len(r.errors) == 3 for r in weak.values())
    assert report("5", ok, f"{len(weak)} weak residuals over 3 levels, slowest rate "
                           f"{worst[0]:.2f} ({worst[1]}), limit 0.8")


def test_c5_mass_order(refine, report):
    _, rows, _ = refine
    r = rows["mass_ode_residual"]
    assert report("5m", r.verdict == "PASS",
                  "mass ODE residual orders in dt " + " ".join(f"{o:.2f}" for o in r.orders)
                  + " (target 1.0 +- 0.3)")


# 6. verification backbone

def test_c6_manufactured(refine, report):
    _, rows, _ = refine
    r = rows["manufactured_diffusion"]
    assert report("6a", r.verdict == "PASS",
                  "diffusion orders " + " ".join(f"{o:.2f}" for o in r.orders) + " (target 2.0 +- 0.3)")


def test_c6_heat_decay(report):
    rate = ex.heat_decay_rate(128)
    rel = abs(rate / (2 * math.pi**2) - 1)
    assert report("6b", rel <= 0.02, f"decay rate {rate:.6f} vs 2 pi^2, relative error {rel:.2e}")


def test_c6_projection(report):
    g = GridSpec.from_extents(1.0, 1.0, 64, 64)
    rng = np.random.default_rng(7)
    ux = rng.standard_normal(g.xface_shape)
    uy = rng.standard_normal(g.yface_shape)
    ux[:, [0, -1]] = 0
    uy[[0, -1], :] = 0
    w = project(VectorField(ux, uy), g, tol=1e-12)
    div = float(np.max(np.abs(divergence(w, g).values)))
    assert report("6c", div <= 1e-10, f"max divergence after projection {div:.2e} (limit 1e-10)")


# 7. determinism

def same_files(a: Path, b: Path, names):
    return [n for n in names if (a / n).read_bytes() != (b / n).read_bytes()]


def test_c7_determinism(default_run, sweep, refine, tmp_path, report):
    _, rep, sweep_dir, _ = sweep
    member = Path(rep.members[rep.epsilons.index(0.1)].out_dir)
    names = [storage.RECORDS_CSV, ex.CHECKS_CSV] + sorted(
        str(p.relative_to(default_run.out_dir)) for p in (default_run.out_dir / storage.SNAPSHOT_DIR).iterdir())
    diff = same_files(default_run.out_dir, member, names)

    _, _, ref_dir = refine
    code, _ = ex.cmd_refine(C.load_config(CONFIGS / "refine.json"), tmp_path / "again")
    ref_names = sorted(str(p.relative_to(ref_dir)) for p in ref_dir.rglob("*")
                       if p.is_file() and p.name != ex.CONFIG_JSON)
    diff += same_files(ref_dir, tmp_path / "again", ref_names)
    ok = not diff
    assert report("7", ok, f"{len(names)} default-run files match the sweep member, "
                           f"{len(ref_names)} refinement files match a rerun"
                           + (f"; differing: {diff[:5]}" if diff else ""))
