"""Uniform MAC grid on a rectangle: fields, difference operators, quadrature, projection.

Array conventions
-----------------
Cell-centred scalars are stored as ``(ny, nx)`` arrays indexed ``[j, i]`` so a
C-order flatten is row-major with y outer and x inner.  Velocity x-components
live on vertical faces, ``(ny, nx + 1)``; y-components on horizontal faces,
``(ny + 1, nx)``.  Face ``i`` of an x-face array sits at ``x = i * h``.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.fft
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ContractError, SolverError

NEUMANN = "neumann"
DIRICHLET = "dirichlet"


@dataclass(frozen=True)
class GridSpec:
    nx: int
    ny: int
    h: float

    def __post_init__(self):
        if self.nx < 4 or self.ny < 4:
            raise ContractError(f"grid needs nx, ny >= 4, got {self.nx}x{self.ny}")
        if not (self.h > 0 and np.isfinite(self.h)):
            raise ContractError(f"cell width must be positive, got {self.h}")

    @classmethod
    def from_extents(cls, Lx: float, Ly: float, nx: int, ny: int) -> "GridSpec":
        hx, hy = Lx / nx, Ly / ny
        if not np.isclose(hx, hy, rtol=1e-12, atol=0.0):
            raise ContractError(f"cells must be square: Lx/nx={hx} but Ly/ny={hy}")
        return cls(int(nx), int(ny), float(hx))

    @property
    def Lx(self) -> float:
        return self.nx * self.h

    @property
    def Ly(self) -> float:
        return self.ny * self.h

    @property
    def area(self) -> float:
        return self.Lx * self.Ly

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def xface_shape(self) -> tuple[int, int]:
        return (self.ny, self.nx + 1)

    @property
    def yface_shape(self) -> tuple[int, int]:
        return (self.ny + 1, self.nx)

    def x_centers(self) -> np.ndarray:
        return (np.arange(self.nx) + 0.5) * self.h

    def y_centers(self) -> np.ndarray:
        return (np.arange(self.ny) + 0.5) * self.h

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x_centers(), self.y_centers())

    def xfaces(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(np.arange(self.nx + 1) * self.h, self.y_centers())

    def yfaces(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x_centers(), np.arange(self.ny + 1) * self.h)

    def boundary_points(self) -> dict[str, tuple[np.ndarray, np.ndarray]]:
        """Midpoints of the boundary faces, keyed by side."""
        xc, yc = self.x_centers(), self.y_centers()
        return {
            "west": (np.zeros(self.ny), yc),
            "east": (np.full(self.ny, self.Lx), yc),
            "south": (xc, np.zeros(self.nx)),
            "north": (xc, np.full(self.nx, self.Ly)),
        }

    def boundary_adjacent(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        mask[0, :] = mask[-1, :] = True
        mask[:, 0] = mask[:, -1] = True
        return mask

    def distance_to_boundary(self) -> np.ndarray:
        X, Y = self.centers()
        return np.minimum(np.minimum(X, self.Lx - X), np.minimum(Y, self.Ly - Y))


@dataclass(frozen=True)
class BoundaryTrace:
    """Prescribed values at the midpoints of the boundary faces."""

    west: np.ndarray
    east: np.ndarray
    south: np.ndarray
    north: np.ndarray

    @classmethod
    def from_function(cls, func, g: GridSpec) -> "BoundaryTrace":
        pts = g.boundary_points()
        vals = {k: np.broadcast_to(np.asarray(func(*xy), dtype=float), xy[0].shape).copy()
                for k, xy in pts.items()}
        return cls(**vals)

    @classmethod
    def constant(cls, value: float, g: GridSpec) -> "BoundaryTrace":
        return cls(np.full(g.ny, float(value)), np.full(g.ny, float(value)),
                   np.full(g.nx, float(value)), np.full(g.nx, float(value)))

    def sides(self):
        return (self.west, self.east, self.south, self.north)

    def max_abs_diff(self, other: "BoundaryTrace") -> float:
        return max(float(np.max(np.abs(a - b))) for a, b in zip(self.sides(), other.sides()))

    def max(self) -> float:
        return max(float(np.max(s)) for s in self.sides())

    def min(self) -> float:
        return min(float(np.min(s)) for s in self.sides())


@dataclass
class ScalarField:
    values: np.ndarray
    bc: str = NEUMANN
    trace: BoundaryTrace | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.bc not in (NEUMANN, DIRICHLET):
            raise ContractError(f"unknown boundary condition {self.bc!r}")
        if self.bc == DIRICHLET and self.trace is None:
            raise ContractError("Dirichlet field needs a boundary trace")

    def with_values(self, values: np.ndarray) -> "ScalarField":
        return ScalarField(values, self.bc, self.trace)


@dataclass
class VectorField:
    ux: np.ndarray
    uy: np.ndarray
    no_slip: bool = True

    def __post_init__(self):
        self.ux = np.asarray(self.ux, dtype=float)
        self.uy = np.asarray(self.uy, dtype=float)
        if self.no_slip and (np.any(self.ux[:, 0]) or np.any(self.ux[:, -1])
                             or np.any(self.uy[0, :]) or np.any(self.uy[-1, :])):
            raise ContractError("no-slip field has nonzero boundary-face values")

    @classmethod
    def zeros(cls, g: GridSpec) -> "VectorField":
        return cls(np.zeros(g.xface_shape), np.zeros(g.yface_shape))

    def max_abs(self) -> float:
        return max(float(np.max(np.abs(self.ux))), float(np.max(np.abs(self.uy))))


def _values(f) -> np.ndarray:
    return f.values if isinstance(f, ScalarField) else np.asarray(f, dtype=float)


def check_scalar(f, g: GridSpec) -> np.ndarray:
    a = _values(f)
    if a.shape != g.shape:
        raise ContractError(f"scalar field has shape {a.shape}, grid expects {g.shape}")
    return a


def check_vector(v: VectorField, g: GridSpec) -> None:
    if v.ux.shape != g.xface_shape or v.uy.shape != g.yface_shape:
        raise ContractError(
            f"MAC field shapes {v.ux.shape}/{v.uy.shape} do not match grid "
            f"{g.xface_shape}/{g.yface_shape}")


# ---------------------------------------------------------------------------
# difference operators

def grad_to_faces(f: ScalarField, g: GridSpec) -> VectorField:
    """Face-normal gradient of a cell-centred field.

    Interior faces use the two-point centred difference.  Boundary faces carry
    zero for Neumann fields and the one-sided difference through the trace
    (half a cell away) for Dirichlet fields.
    """
    a = check_scalar(f, g)
    h = g.h
    gx = np.zeros(g.xface_shape)
    gy = np.zeros(g.yface_shape)
    gx[:, 1:-1] = (a[:, 1:] - a[:, :-1]) / h
    gy[1:-1, :] = (a[1:, :] - a[:-1, :]) / h
    if f.bc == DIRICHLET:
        tr = f.trace
        gx[:, 0] = (a[:, 0] - tr.west) / (0.5 * h)
        gx[:, -1] = (tr.east - a[:, -1]) / (0.5 * h)
        gy[0, :] = (a[0, :] - tr.south) / (0.5 * h)
        gy[-1, :] = (tr.north - a[-1, :]) / (0.5 * h)
    return VectorField(gx, gy, no_slip=False)


def divergence(v: VectorField, g: GridSpec) -> ScalarField:
    check_vector(v, g)
    d = (v.ux[:, 1:] - v.ux[:, :-1] + v.uy[1:, :] - v.uy[:-1, :]) / g.h
    return ScalarField(d)


def laplacian(f: ScalarField, g: GridSpec) -> ScalarField:
    """Five-point Laplacian; boundary handling comes from ``f``'s descriptor.

    Written as divergence of the face gradient, which is the same stencil as
    mirrored ghosts (Neumann) or ghosts reflected through the trace (Dirichlet).
    """
    return ScalarField(divergence(grad_to_faces(f, g), g).values, f.bc, f.trace)


def integrate(f, g: GridSpec) -> float:
    """Midpoint rule: h^2 times the sum over cells."""
    a = check_scalar(f, g)
    return float(np.sum(a) * g.h * g.h)


def face_weights(g: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature weights for face-sampled data (half weight on boundary faces)."""
    wx = np.full(g.xface_shape, g.h * g.h)
    wx[:, 0] *= 0.5
    wx[:, -1] *= 0.5
    wy = np.full(g.yface_shape, g.h * g.h)
    wy[0, :] *= 0.5
    wy[-1, :] *= 0.5
    return wx, wy


def face_inner(a: VectorField, b: VectorField, g: GridSpec) -> float:
    check_vector(a, g)
    check_vector(b, g)
    wx, wy = face_weights(g)
    return float(np.sum(wx * a.ux * b.ux) + np.sum(wy * a.uy * b.uy))


def average_to_faces(f, g: GridSpec) -> VectorField:
    """Arithmetic mean of the two adjacent cells; boundary faces copy the
    adjacent cell (or take the trace for Dirichlet fields)."""
    a = check_scalar(f, g)
    fx = np.empty(g.xface_shape)
    fy = np.empty(g.yface_shape)
    fx[:, 1:-1] = 0.5 * (a[:, 1:] + a[:, :-1])
    fy[1:-1, :] = 0.5 * (a[1:, :] + a[:-1, :])
    if isinstance(f, ScalarField) and f.bc == DIRICHLET:
        tr = f.trace
        fx[:, 0], fx[:, -1] = tr.west, tr.east
        fy[0, :], fy[-1, :] = tr.south, tr.north
    else:
        fx[:, 0], fx[:, -1] = a[:, 0], a[:, -1]
        fy[0, :], fy[-1, :] = a[0, :], a[-1, :]
    return VectorField(fx, fy, no_slip=False)


def faces_to_centers(v: VectorField, g: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    check_vector(v, g)
    return 0.5 * (v.ux[:, 1:] + v.ux[:, :-1]), 0.5 * (v.uy[1:, :] + v.uy[:-1, :])


def cell_gradient(f: ScalarField, g: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Cell-centred gradient: face gradients averaged onto the centres."""
    return faces_to_centers(grad_to_faces(f, g), g)


# ---------------------------------------------------------------------------
# Neumann Poisson solve and projection

class PoissonResult(NamedTuple):
    q: np.ndarray
    shift: float  # mean of the rhs removed for compatibility
    residual: float  # relative residual of the compatible problem
    iterations: int


@functools.lru_cache(maxsize=16)
def _neumann_eigenvalues(nx: int, ny: int, h: float) -> np.ndarray:
    lx = -(4.0 / h**2) * np.sin(np.pi * np.arange(nx) / (2 * nx)) ** 2
    ly = -(4.0 / h**2) * np.sin(np.pi * np.arange(ny) / (2 * ny)) ** 2
    lam = ly[:, None] + lx[None, :]
    lam[0, 0] = 1.0  # the constant mode is removed separately
    return lam


@functools.lru_cache(maxsize=16)
def _neumann_matrix(nx: int, ny: int, h: float) -> sp.csr_matrix:
    def lap1d(n):
        main = np.full(n, -2.0)
        main[0] = main[-1] = -1.0
        return sp.diags([np.ones(n - 1), main, np.ones(n - 1)], [-1, 0, 1])
    A = sp.kron(sp.identity(ny), lap1d(nx)) + sp.kron(lap1d(ny), sp.identity(nx))
    return (A / h**2).tocsr()


def _neumann_apply(q: np.ndarray, g: GridSpec) -> np.ndarray:
    return laplacian(ScalarField(q), g).values


def poisson_neumann(rhs, g: GridSpec, tol: float = 1e-10, method: str = "dct",
                    maxiter: int | None = None) -> PoissonResult:
    """Solve ``lap(q) = rhs - mean(rhs)`` with homogeneous Neumann data.

    ``method="dct"`` diagonalises the cell-centred Neumann Laplacian with a
    type-II cosine transform (direct, exact up to round-off).  ``method="cg"``
    runs Jacobi-preconditioned conjugate gradients on the same operator.
    The returned ``q`` has zero mean.
    """
    b = check_scalar(rhs, g)
    shift = float(np.mean(b))
    bc = b - shift
    bnorm = float(np.linalg.norm(bc))
    if bnorm == 0.0:
        return PoissonResult(np.zeros(g.shape), shift, 0.0, 0)

    if method == "dct":
        lam = _neumann_eigenvalues(g.nx, g.ny, g.h)
        qhat = scipy.fft.dctn(bc, type=2, norm="ortho")
        qhat /= lam
        qhat[0, 0] = 0.0
        q = scipy.fft.idctn(qhat, type=2, norm="ortho")
        iterations = 1
    elif method == "cg":
        A = -_neumann_matrix(g.nx, g.ny, g.h)
        dinv = 1.0 / A.diagonal()
        M = spla.LinearOperator(A.shape, matvec=lambda r: dinv * r)
        count = [0]

        def cb(_):
            count[0] += 1
        x, info = spla.cg(A, -bc.ravel(), rtol=tol * 0.1, atol=0.0, M=M,
                          maxiter=maxiter or 20 * g.nx * g.ny, callback=cb)
        q = x.reshape(g.shape)
        iterations = count[0]
    else:
        raise ContractError(f"unknown Poisson method {method!r}")

    q = q - np.mean(q)
    res = float(np.linalg.norm(_neumann_apply(q, g) - bc)) / bnorm
    if not np.isfinite(res) or res > tol:
        raise SolverError(f"Neumann Poisson solve ({method}) stalled at relative "
                          f"residual {res:.3e} > {tol:.1e}", residual=res)
    return PoissonResult(q, shift, res, iterations)


def project(v: VectorField, g: GridSpec, dt: float = 1.0, tol: float = 1e-10,
            method: str = "dct", return_pressure: bool = False):
    """Discrete Leray projection by pressure correction.

    Solves ``lap(q) = div(v)`` and returns ``v - grad(q)`` on interior faces;
    boundary faces are left untouched (zero for no-slip input).  With
    ``return_pressure`` the pressure ``-q/dt`` is returned as well.
    """
    check_vector(v, g)
    div = divergence(v, g).values
    sol = poisson_neumann(div, g, tol=tol, method=method)
    q = sol.q
    ux = v.ux.copy()
    uy = v.uy.copy()
    ux[:, 1:-1] -= (q[:, 1:] - q[:, :-1]) / g.h
    uy[1:-1, :] -= (q[1:, :] - q[:-1, :]) / g.h
    out = VectorField(ux, uy, no_slip=v.no_slip)
    if return_pressure:
        return out, -q / dt
    return out


def curl_of_streamfunction(psi_nodes: np.ndarray, g: GridSpec, no_slip: bool = True) -> VectorField:
    """MAC velocity from a stream function sampled at cell corners ``(ny+1, nx+1)``.

    ``ux = d(psi)/dy``, ``uy = -d(psi)/dx``; the discrete divergence vanishes
    identically.  Boundary-face values vanish when psi is constant on the boundary.
    """
    if psi_nodes.shape != (g.ny + 1, g.nx + 1):
        raise ContractError("stream function must be sampled on the (ny+1, nx+1) nodes")
    ux = (psi_nodes[1:, :] - psi_nodes[:-1, :]) / g.h
    uy = -(psi_nodes[:, 1:] - psi_nodes[:, :-1]) / g.h
    if no_slip:
        ux[:, 0] = ux[:, -1] = 0.0
        uy[0, :] = uy[-1, :] = 0.0
    return VectorField(ux, uy, no_slip=no_slip)


def nodes(g: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    return np.meshgrid(np.arange(g.nx + 1) * g.h, np.arange(g.ny + 1) * g.h)
