import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from chemostokes.diagnostics import (FAIL, HYPOTHESIS_FAIL, PASS, FunctionalRecord, cadence,
                                     check_entropy_inequality, check_gradc_inequality,
                                     check_mass_ode, check_max_principle, check_nonnegativity,
                                     check_u_energy, column, compute_record, constants_stable,
                                     entropy_lhs, gradc_lhs, mass_ode_residuals,
                                     non_diverging, ode_comparison_check, velocity_gradient_sq,
                                     window_bounds)
from chemostokes.errors import ContractError, ValidationError
from chemostokes.grid import (DIRICHLET, GridSpec, ScalarField, VectorField,
                              curl_of_streamfunction, nodes)
from chemostokes.model import InitialData, PhysicalParams, SimState
from chemostokes.regularization import RegParams
from chemostokes.timestepper import MemorySink, run, vector_laplacian

from conftest import const_field, short_scheme


def series(t, **cols):
    names = FunctionalRecord.field_names()
    out = []
    for k, tk in enumerate(t):
        vals = {n: 0.0 for n in names}
        vals["t"] = float(tk)
        for name, col in cols.items():
            vals[name] = float(np.broadcast_to(col, np.shape(t))[k])
        out.append(FunctionalRecord(**vals))
    return out


def flat_run(g, n0, c0, cstar, kappa, mu, T, dt, record, phi=None, u0=None):
    phi = ScalarField(np.zeros(g.shape)) if phi is None else phi
    p = PhysicalParams(kappa, mu, phi, const_field(g, cstar, DIRICHLET))
    c0f = c0 if isinstance(c0, ScalarField) else const_field(g, c0, DIRICHLET)
    n0f = n0 if isinstance(n0, ScalarField) else const_field(g, n0)
    data = InitialData(n0f, c0f, u0 if u0 is not None else VectorField.zeros(g))
    sink = MemorySink()
    run(data, p, RegParams.build(g, 0.1), short_scheme(T=T, record=record, dt_max=dt), g,
        sink=sink, validate=False)
    return sink.records, p


def test_record_zero_state(g16):
    s = SimState(const_field(g16, 0.0), const_field(g16, 1.0, DIRICHLET), VectorField.zeros(g16))
    p = PhysicalParams(0.5, 1.0, ScalarField(np.zeros(g16.shape)), const_field(g16, 1.0, DIRICHLET))
    r = compute_record(s, g16, p)
    assert r.mass == 0 and r.entropy == 0 and r.c_max == r.c_min == 1 and r.grad_c_l2_sq == 0
    assert r.chat_boundary_max <= 1e-12


def test_record_entropy_of_e(g16):
    s = SimState(const_field(g16, math.e), const_field(g16, 1.0, DIRICHLET), VectorField.zeros(g16))
    p = PhysicalParams(0.5, 1.0, ScalarField(np.zeros(g16.shape)), const_field(g16, 1.0, DIRICHLET))
    assert compute_record(s, g16, p).entropy == pytest.approx(math.e)


def test_shear_gradient_energy():
    g = GridSpec.from_extents(1.0, 1.0, 32, 32)
    _, YF = g.xfaces()
    u = VectorField(YF.copy(), np.zeros(g.yface_shape), no_slip=False)
    assert velocity_gradient_sq(u, g) == pytest.approx(1.0, rel=1e-12)


@given(st.integers(0, 2**31))
def test_gradient_energy_matches_laplacian(seed):
    g = GridSpec.from_extents(1.0, 1.0, 8, 8)
    psi = np.random.default_rng(seed).standard_normal((g.ny + 1, g.nx + 1))
    psi[0, :] = psi[-1, :] = psi[:, 0] = psi[:, -1] = 0
    u = curl_of_streamfunction(psi, g)
    lap = vector_laplacian(u, g)
    inner = -g.h**2 * (np.sum(u.ux * lap.ux) + np.sum(u.uy * lap.uy))
    assert velocity_gradient_sq(u, g) == pytest.approx(inner, rel=1e-10)


def test_mass_ode_uniform_logistic():
    g = GridSpec.from_extents(1.0, 1.0, 8, 8)
    recs, p = flat_run(g, 0.1, 0.0, 0.0, 0.5, 1.0, T=1e-3, dt=1e-6, record=1e-4)
    res = mass_ode_residuals(recs, p.kappa, p.mu)
    assert res.max() <= 1e-8
    # first order in dt
    recs2, _ = flat_run(g, 0.1, 0.0, 0.0, 0.5, 1.0, T=1e-3, dt=2e-6, record=1e-4)
    ratio = mass_ode_residuals(recs2, p.kappa, p.mu).max() / res.max()
    assert 1.7 < ratio < 2.3


def test_mass_conserved_without_reaction(g16):
    X, Y = g16.centers()
    n0 = ScalarField(1 + 0.5 * np.cos(np.pi * X) * np.cos(np.pi * Y))
    recs, p = flat_run(g16, n0, 1.0, 1.0, 0.0, 0.0, T=0.01, dt=2e-4, record=1e-3,
                       phi=ScalarField(-Y))
    m = column(recs, "mass")
    assert np.max(np.abs(m - m[0])) < 1e-12
    assert check_mass_ode(recs, 0.0, 0.0, tol=1e-10).passed


def test_max_principle_heat_only(g16):
    X, Y = g16.centers()
    c0 = ScalarField(1 + np.sin(np.pi * X) * np.sin(np.pi * Y), DIRICHLET, const_field(g16, 0.0, DIRICHLET).trace)
    recs, _ = flat_run(g16, 0.0, c0, 0.0, 0.0, 1.0, T=0.02, dt=2e-4, record=2e-3)
    cmax = column(recs, "c_max")
    assert np.all(np.diff(cmax) < 0)
    assert check_max_principle(recs, float(c0.values.max()), 0.0).passed


def test_max_principle_fails_when_exceeded():
    recs = series([0, 1, 2], c_max=[1.0, 1.0, 1.0 + 1e-6])
    r = check_max_principle(recs, 1.0, 0.5)
    assert not r.passed and r.value < 0


def test_nonnegativity_limit():
    assert check_nonnegativity(series([0, 1], clipped_mass_cum=[0, 5e-9]), 1.0).passed
    assert not check_nonnegativity(series([0, 1], clipped_mass_cum=[0, 2e-8]), 1.0).passed


def test_u_energy_stokes_decay():
    g = GridSpec.from_extents(1.0, 1.0, 16, 16)
    XN, YN = nodes(g)
    u0 = curl_of_streamfunction(np.sin(np.pi * XN) ** 2 * np.sin(np.pi * YN) ** 2, g)
    res = []
    for dt in (1e-4, 5e-5):
        recs, _ = flat_run(g, 0.0, 0.0, 0.0, 0.0, 1.0, T=0.01, dt=dt, record=2e-4, u0=u0)
        assert np.all(np.diff(column(recs, "kinetic")) < 0)
        # residual <= C dt with C relative to the dissipation rate
        tol = 50 * dt * column(recs, "grad_u_l2_sq").max()
        r = check_u_energy(recs, column(recs, "forcing_work"), 0.0, tol=tol)
        assert r.passed, r.detail
        res.append(r.value)
    assert 1.7 < res[0] / res[1] < 2.3


def test_u_energy_zero_velocity():
    recs = series([0, 1, 2], l2n_sq=[3.0, 2.0, 1.0])
    r = check_u_energy(recs, np.zeros(3), 1.0, tol=1e-14)
    assert r.passed and r.value == 0


def test_gradc_steady_and_heat(g16):
    recs = series([0, 1, 2], grad_c_l2_sq=2.0, l2n_sq=1.0)
    r = check_gradc_inequality(recs)
    assert r.passed and r.value == 0
    X, Y = g16.centers()
    zero = const_field(g16, 0.0, DIRICHLET).trace
    c0 = ScalarField(np.sin(np.pi * X) * np.sin(np.pi * Y), DIRICHLET, zero)
    recs, _ = flat_run(g16, 0.0, c0, 0.0, 0.0, 1.0, T=0.02, dt=2e-4, record=2e-3)
    assert np.all(gradc_lhs(recs) <= 0)


def test_entropy_uniform_closed_form():
    g = GridSpec.from_extents(1.0, 1.0, 8, 8)
    kappa, mu, nbar = 0.5, 1.0, 0.3
    recs, _ = flat_run(g, nbar, 0.0, 0.0, kappa, mu, T=1e-5, dt=1e-7, record=1e-6)
    n = column(recs, "mass")  # unit area: mass equals the cell value
    mid = 0.5 * (n[1:] + n[:-1])
    closed = (kappa * mid - mu * mid**2) * (np.log(mid) + 1) + 0.5 * mu * mid**2 * np.log(mid)
    assert np.max(np.abs(entropy_lhs(recs, mu) - closed)) <= 1e-8


def test_entropy_at_one():
    g = GridSpec.from_extents(1.0, 1.0, 8, 8)
    recs, _ = flat_run(g, 1.0, 0.0, 0.0, 1.0, 1.0, T=1e-3, dt=1e-4, record=1e-4)
    assert all(r.entropy == 0 and r.n2_log == 0 and r.fisher == 0 for r in recs)
    assert np.all(entropy_lhs(recs, 1.0) == 0)
    assert check_entropy_inequality(recs, 1.0).value == 0


def test_comparison_homogeneous():
    t = np.linspace(0, 3, 61)
    r = ode_comparison_check(t, 2 * np.exp(-t), np.zeros_like(t), 1.0, 0.0)
    assert r.verdict == PASS and r.bound == 2.0


def test_comparison_closed_form():
    t = np.linspace(0, 5, 5001)
    r = ode_comparison_check(t, 1 - np.exp(-t), np.ones_like(t), 1.0, 1.0)
    assert r.verdict == PASS
    assert r.bound == pytest.approx(1 / (1 - math.exp(-1)))


def test_comparison_violation_flagged():
    t = np.linspace(0, 2, 21)
    y = 1 - np.exp(-t)
    y[7] = 10.0
    r = ode_comparison_check(t, y, np.ones_like(t), 1.0, 1.0)
    assert r.verdict == FAIL and r.index == 7


def test_comparison_hypothesis_fail():
    t = np.linspace(0, 2, 21)
    r = ode_comparison_check(t, np.zeros_like(t), np.full_like(t, 3.0), 1.0, 1.0)
    assert r.verdict == HYPOTHESIS_FAIL


@pytest.mark.parametrize("a,C", [(0.0, 1.0), (-1.0, 1.0), (1.0, -0.5)])
def test_comparison_rejects_parameters(a, C):
    with pytest.raises(ValidationError):
        ode_comparison_check([0, 1], [0, 0], [0, 0], a, C)


@given(st.floats(0.01, 5.0), st.floats(0.0, 3.0), st.floats(0.0, 2.0))
def test_comparison_exact_solutions_pass(a, hval, y0):
    # y' + a y = h with constant h stays below the comparison bound
    t = np.linspace(0, 4, 401)
    y = hval / a + (y0 - hval / a) * np.exp(-a * t)
    r = ode_comparison_check(t, y, np.full_like(t, hval), a, hval, tol=1e-6)
    assert r.verdict == PASS


def test_window_constant_series():
    t = np.linspace(0, 2, 41)
    wb = window_bounds(series(t, l2n_sq=3.0, grad_n_43=2.0))
    assert np.allclose(wb.win_l2n_sq, 3.0 * np.minimum(t, 1.0))
    assert np.allclose(wb.cum_grad_n_43, 2.0 * t)


def test_window_single_record():
    wb = window_bounds(series([0.0], l2n_sq=3.0))
    assert all(np.all(v[:1] == 0) for k, v in wb.channels().items() if k.startswith(("win", "cum")))


def test_cadence_contract():
    recs = series([0, 0.1, 0.2, 0.3])
    assert cadence(recs) == pytest.approx(0.1)
    with pytest.raises(ContractError):
        cadence([recs[0], recs[1], recs[3]])
    with pytest.raises(ContractError):
        cadence(recs[:2])


def test_constants_stable_and_non_diverging():
    assert constants_stable([1.0, 1.5, 1.9])
    assert not constants_stable([1.0, 2.5])
    assert constants_stable([0.0, 0.0])
    t = np.linspace(0, 1, 11)
    assert non_diverging(t, np.ones(11))
    assert not non_diverging(t, np.exp(5 * t))
    assert non_diverging(t, t, cumulative=True)
    assert not non_diverging(t, t**3, cumulative=True)
