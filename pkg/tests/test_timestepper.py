import dataclasses

import numpy as np
import pytest
from hypothesis import given, strategies as st

from chemostokes.diagnostics import compute_record
from chemostokes.errors import BlowupSuspected
from chemostokes.grid import (DIRICHLET, GridSpec, ScalarField, VectorField,
                              curl_of_streamfunction, face_inner, integrate, nodes)
from chemostokes.model import PhysicalParams, SchemeConfig, SimState, initial_state
from chemostokes.regularization import RegParams, g_eps
from chemostokes.timestepper import (MemorySink, compute_dt, run, step, step_c, step_n,
                                     step_u)

from conftest import const_field, default_problem, short_scheme


def flat_params(g, kappa=0.5, mu=1.0, K=1.0, phi=None):
    phi = ScalarField(np.zeros(g.shape)) if phi is None else phi
    return PhysicalParams(kappa, mu, phi, const_field(g, K, DIRICHLET))


def uniform_state(g, nbar, K=1.0):
    return SimState(const_field(g, nbar), const_field(g, K, DIRICHLET), VectorField.zeros(g))


def test_compute_dt_diffusive_limit():
    g = GridSpec.from_extents(1.0, 1.0, 32, 32)
    s = uniform_state(g, 0.0)
    dt = compute_dt(s, flat_params(g, 0.0, 1.0), SchemeConfig(dt_max=1.0), g)
    assert dt == pytest.approx(g.h**2 / 8)


def test_compute_dt_transport_limit(g16):
    s = uniform_state(g16, 0.0)
    ux = np.zeros(g16.xface_shape)
    ux[:, 1:-1] = 1e6
    s.u = VectorField(ux, np.zeros(g16.yface_shape))
    dt = compute_dt(s, flat_params(g16), SchemeConfig(dt_max=1.0), g16)
    assert dt == pytest.approx(g16.h / 1e6, rel=1e-6)


def test_dt_min_abort(g16):
    s = uniform_state(g16, 1e15)
    with pytest.raises(BlowupSuspected) as exc:
        compute_dt(s, flat_params(g16), SchemeConfig(dt_min_abort=1e-10), g16)
    assert exc.value.reason == "dt_min_abort"


def test_step_n_zero_is_equilibrium(g16):
    reg = RegParams.build(g16, 0.1)
    s = uniform_state(g16, 0.0)
    assert np.all(step_n(s, flat_params(g16), reg, 1e-3, g16).field.values == 0)


@given(st.floats(0.01, 5.0), st.floats(0.0, 2.0), st.floats(0.1, 3.0))
def test_step_n_uniform_logistic(nbar, kappa, mu):
    g = GridSpec.from_extents(1.0, 1.0, 8, 8)
    reg = RegParams.build(g, 0.2)
    dt = 1e-3
    out = step_n(uniform_state(g, nbar), flat_params(g, kappa, mu), reg, dt, g).field.values
    assert np.all(out == nbar + dt * (kappa * nbar - mu * nbar * nbar))


def test_logistic_equilibrium(g16):
    reg = RegParams.build(g16, 0.1)
    p = flat_params(g16, 1.0, 2.0)
    s = uniform_state(g16, 0.1)
    for _ in range(400):
        s.n = step_n(s, p, reg, 0.05, g16).field
    assert np.allclose(s.n.values, 0.5, atol=1e-10)


def test_step_c_steady(g16):
    reg = RegParams.build(g16, 0.1)
    out = step_c(uniform_state(g16, 0.0, K=2.0), flat_params(g16, K=2.0), reg, 1e-3, g16)
    assert np.all(out.field.values == 2.0)


def test_step_c_uniform_consumption(g16):
    reg = RegParams.build(g16, 0.1)
    K, nbar, dt = 2.0, 3.0, 1e-3
    out = step_c(uniform_state(g16, nbar, K), flat_params(g16, K=K), reg, dt, g16).field.values
    expect = K - dt * g_eps(nbar, 0.1) * K
    assert np.all(out[1:-1, 1:-1] == expect)


def test_heat_decay_rate():
    g = GridSpec.from_extents(1.0, 1.0, 32, 32)
    X, Y = g.centers()
    reg = RegParams.build(g, 0.1)
    p = flat_params(g, K=0.0)
    s = uniform_state(g, 0.0, 0.0)
    s.c = ScalarField(np.sin(np.pi * X) * np.sin(np.pi * Y), DIRICHLET, p.c_star.trace)
    T = 0.1
    dt = g.h**2 / 8
    steps = int(np.ceil(T / dt))
    dt = T / steps
    a0 = np.linalg.norm(s.c.values)
    for _ in range(steps):
        s.c = step_c(s, p, reg, dt, g).field
    rate = np.log(a0 / np.linalg.norm(s.c.values)) / T
    assert rate == pytest.approx(2 * np.pi**2, rel=2e-3)


def test_step_u_rest_and_constant_potential(g16):
    s = uniform_state(g16, 0.0)
    u = step_u(s, flat_params(g16), 1e-3, g16)
    assert np.all(u.ux == 0) and np.all(u.uy == 0)
    s = uniform_state(g16, 5.0)
    u = step_u(s, flat_params(g16, phi=ScalarField(np.full(g16.shape, 3.0))), 1e-3, g16)
    assert np.all(u.ux == 0) and np.all(u.uy == 0)


def test_stokes_decay_monotone():
    g = GridSpec.from_extents(1.0, 1.0, 24, 24)
    XN, YN = nodes(g)
    s = uniform_state(g, 0.0)
    s.u = curl_of_streamfunction(np.sin(np.pi * XN) ** 2 * np.sin(np.pi * YN) ** 2, g)
    p = flat_params(g)
    dt = g.h**2 / 8
    ke = [face_inner(s.u, s.u, g)]
    for _ in range(50):
        s.u = step_u(s, p, dt, g)
        ke.append(face_inner(s.u, s.u, g))
    assert np.all(np.diff(ke) < 0)


def test_step_steady_state(g16):
    reg = RegParams.build(g16, 0.1)
    s = uniform_state(g16, 0.0, K=1.5)
    out = step(s, flat_params(g16, K=1.5), reg, SchemeConfig(), g16)
    assert np.all(out.n.values == 0) and np.all(out.c.values == 1.5)
    assert np.all(out.u.ux == 0) and np.all(out.u.uy == 0)


def test_single_step_mass_balance(default16, g16):
    data, p, reg = default16
    s = initial_state(data, p)
    for _ in range(5):
        s = step(s, p, reg, SchemeConfig(), g16)
    dt = 1e-4
    s2 = step(s, p, reg, SchemeConfig(), g16, dt=dt)
    n = s.n.values
    lhs = (integrate(s2.n.values, g16) - integrate(n, g16)) / dt
    rhs = p.kappa * integrate(n, g16) - p.mu * integrate(n * n, g16)
    assert abs(lhs - rhs) < 1e-10


def test_splitting_first_order(default16, g16):
    data, p, reg = default16
    cfg = SchemeConfig()
    s0 = initial_state(data, p)
    diffs = []
    for dt in (2e-4, 1e-4, 5e-5):
        one = step(s0, p, reg, cfg, g16, dt=dt)
        half = step(step(s0, p, reg, cfg, g16, dt=dt / 2), p, reg, cfg, g16, dt=dt / 2)
        diffs.append(np.max(np.abs(one.n.values - half.n.values)))
    # local error is O(dt^2): quartered when dt is halved
    assert np.log2(diffs[0] / diffs[1]) > 1.7 and np.log2(diffs[1] / diffs[2]) > 1.7


def test_run_T0_single_record(default16, g16):
    data, p, reg = default16
    sink = MemorySink()
    s = run(data, p, reg, short_scheme(T=0.0), g16, sink=sink)
    assert len(sink.records) == 1 and s.t == 0.0


def test_run_records_on_cadence_and_deterministic(default16, g16):
    data, p, reg = default16
    a, b = MemorySink(), MemorySink()
    cfg = short_scheme(T=0.005, record=1e-3, snapshot_interval=2e-3)
    run(data, p, reg, cfg, g16, sink=a)
    run(data, p, reg, cfg, g16, sink=b)
    assert [r.t for r in a.records] == pytest.approx([0, 1e-3, 2e-3, 3e-3, 4e-3, 5e-3], abs=1e-15)
    assert a.records == b.records
    assert [s.t for s in a.snapshots] == pytest.approx([0, 2e-3, 4e-3, 5e-3], abs=1e-15)


def test_guard_trips_before_nonfinite(g16):
    data, p = default_problem(g16, kappa=50.0, mu=0.0)
    data = dataclasses.replace(data, n0=ScalarField(data.n0.values * 1e4))
    reg = RegParams.build(g16, 0.1)
    sink = MemorySink()
    with pytest.raises(BlowupSuspected) as exc:
        run(data, p, reg, short_scheme(T=1.0, record=1e-2, n_max_abort=1e6), g16, sink=sink,
            validate=False)
    assert exc.value.reason == "n_max_abort"
    assert all(np.isfinite(r.mass) for r in sink.records)
    assert exc.value.t > 0
