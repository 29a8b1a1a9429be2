import numpy as np
import pytest
from hypothesis import settings

from chemostokes.grid import DIRICHLET, BoundaryTrace, GridSpec, ScalarField, VectorField
from chemostokes.model import InitialData, PhysicalParams, SchemeConfig
from chemostokes.regularization import RegParams

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


@pytest.fixture
def g16():
    return GridSpec.from_extents(1.0, 1.0, 16, 16)


def const_field(g, value, bc="neumann"):
    if bc == DIRICHLET:
        return ScalarField(np.full(g.shape, float(value)), DIRICHLET,
                           BoundaryTrace.constant(value, g))
    return ScalarField(np.full(g.shape, float(value)))


def default_problem(g, kappa=0.5, mu=1.0):
    """Default scenario sampled on ``g``."""
    X, Y = g.centers()
    cs = lambda x, y: 1 + 0.5 * x * (1 - x)
    trace = BoundaryTrace.from_function(cs, g)
    c_star = ScalarField(cs(X, Y), DIRICHLET, trace)
    n0 = ScalarField(np.maximum(1 + 0.5 * np.cos(np.pi * X) * np.cos(np.pi * Y), 0.1))
    p = PhysicalParams(kappa, mu, ScalarField(-Y), c_star)
    data = InitialData(n0, ScalarField(c_star.values.copy(), DIRICHLET, trace), VectorField.zeros(g))
    return data, p


@pytest.fixture
def default16(g16):
    data, p = default_problem(g16)
    return data, p, RegParams.build(g16, 0.1)


def short_scheme(T=0.01, record=1e-3, dt_max=2e-4, **kw):
    return SchemeConfig(T=T, record_interval=record, dt_max=dt_max, **kw)


def pytest_configure(config):
    config.acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
