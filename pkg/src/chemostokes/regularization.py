"""The epsilon-family of interior cutoffs and saturations of the approximating system."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .grid import GridSpec, ScalarField


def _check_epsilon(epsilon: float) -> float:
    epsilon = float(epsilon)
    if not (0.0 < epsilon < 1.0):
        raise ValidationError(f"epsilon must lie in (0, 1), got {epsilon}", "0 < epsilon < 1")
    return epsilon


def _check_nonneg(s):
    arr = np.asarray(s, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise ValidationError("regularizers are only defined for s >= 0", "s >= 0")
    return arr


def smoothstep(t):
    """Quintic smoothstep 6t^5 - 15t^4 + 10t^3 clamped to [0, 1]."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    return t * t * t * (t * (6.0 * t - 15.0) + 10.0)


def build_cutoff(g: GridSpec, epsilon: float) -> ScalarField:
    """Cutoff rho = S(d / (2 eps min(Lx, Ly))) with d the centre-to-boundary distance.

    Boundary-adjacent cells are set to zero so the cutoff has compact support
    in the open domain; every other cell with ``d >= 2 eps min(Lx, Ly)`` is 1.
    """
    epsilon = _check_epsilon(epsilon)
    width = 2.0 * epsilon * min(g.Lx, g.Ly)
    rho = smoothstep(g.distance_to_boundary() / width)
    rho[g.boundary_adjacent()] = 0.0
    return ScalarField(rho)


def f_eps(s, epsilon: float):
    """Chemotactic saturation (1 + eps s)^-3."""
    arr = _check_nonneg(s)
    out = 1.0 / (1.0 + epsilon * arr) ** 3
    return float(out) if np.ndim(out) == 0 else out


def g_eps(s, epsilon: float):
    """Consumption saturation s / (1 + eps s)."""
    arr = _check_nonneg(s)
    out = arr / (1.0 + epsilon * arr)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class RegParams:
    epsilon: float
    rho: ScalarField

    @classmethod
    def build(cls, g: GridSpec, epsilon: float) -> "RegParams":
        return cls(_check_epsilon(epsilon), build_cutoff(g, epsilon))

    def f(self, s):
        return f_eps(s, self.epsilon)

    def g(self, s):
        return g_eps(s, self.epsilon)
