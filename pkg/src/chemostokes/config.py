"""Run configuration: JSON text in, validated model objects out.

A config is a nested JSON object with the sections ``grid``, ``physics``,
``epsilon`` (or ``epsilons``), ``scheme``, ``output`` and ``refine``.  Every
section is optional; missing keys take the defaults of the desk-scale
scenario below, except that a ``physics`` section that is present must state
``mu`` explicitly.  Unknown keys are rejected.

Field inputs (``phi``, ``c_star``, ``n0``, ``c0``) are either expressions in
the grammar of :mod:`chemostokes.expr`, plain numbers, or ``{"file": path}``
pointing at a CHEMOSTOKES-FIELD table sampled at the cell centres.  ``u0``
is ``{"ux": expr, "uy": expr}`` sampled at the faces, ``{"stream": expr}``
sampled at the cell corners, or ``{"file": path}`` holding ``ux`` and ``uy``
blocks.
"""

from __future__ import annotations

import copy
import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import expr, storage
from .errors import ContractError
from .grid import (DIRICHLET, BoundaryTrace, GridSpec, ScalarField, VectorField,
                   curl_of_streamfunction, nodes)
from .model import (InitialData, NonPositiveDecay, PhysicalParams, SchemeConfig,
                    validate_inputs)
from .regularization import RegParams


class ConfigError(ContractError):
    """Malformed or inconsistent configuration text."""


@dataclass
class GridConfig:
    nx: int = 64
    ny: int = 64
    Lx: float = 1.0
    Ly: float = 1.0


@dataclass
class PhysicsConfig:
    kappa: float = 0.5
    mu: float = 1.0
    phi: object = "-y"
    c_star: object = "1 + 0.5*x*(1 - x)"
    n0: object = "max(1 + 0.5*cos(pi*x)*cos(pi*y), 0.1)"
    c0: object = None  # None means c0 = c_star
    u0: object = field(default_factory=lambda: {"ux": 0.0, "uy": 0.0})


@dataclass
class SchemeSection:
    cfl_sigma: float = 1.0
    dt_max: float = 2e-5
    T: float = 1.0
    projection_tol: float = 1e-10
    n_max_abort: float = 1e6
    dt_min_abort: float = 1e-12
    validate: bool = True  # False skips the model-assumption checks (guard tests)


@dataclass
class OutputConfig:
    record_interval: float = 2e-4
    snapshot_interval: float = 0.0
    dir: str = "out"


@dataclass
class RefineConfig:
    levels: int = 3


@dataclass
class RunConfig:
    grid: GridConfig = field(default_factory=GridConfig)
    physics: PhysicsConfig = field(default_factory=PhysicsConfig)
    epsilon: float | None = 0.1
    epsilons: list | None = None
    scheme: SchemeSection = field(default_factory=SchemeSection)
    output: OutputConfig = field(default_factory=OutputConfig)
    refine: RefineConfig = field(default_factory=RefineConfig)
    base_dir: str = field(default=".", compare=False, repr=False)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("base_dir")
        return d

    def scheme_config(self) -> SchemeConfig:
        s = self.scheme
        return SchemeConfig(cfl_sigma=s.cfl_sigma, dt_max=s.dt_max, T=s.T,
                            projection_tol=s.projection_tol, n_max_abort=s.n_max_abort,
                            dt_min_abort=s.dt_min_abort,
                            record_interval=self.output.record_interval,
                            snapshot_interval=self.output.snapshot_interval)

    def grid_spec(self) -> GridSpec:
        return GridSpec.from_extents(self.grid.Lx, self.grid.Ly, self.grid.nx, self.grid.ny)

    def epsilon_list(self) -> list[float]:
        return list(self.epsilons) if self.epsilons is not None else [self.epsilon]

    def with_epsilon(self, eps: float) -> "RunConfig":
        out = copy.deepcopy(self)
        out.epsilon, out.epsilons = float(eps), None
        return out


_SECTIONS = {"grid": GridConfig, "physics": PhysicsConfig, "scheme": SchemeSection,
             "output": OutputConfig, "refine": RefineConfig}
_TOP_KEYS = set(_SECTIONS) | {"epsilon", "epsilons"}



def _section(name: str, cls, raw) -> object:
    if not isinstance(raw, dict):
        raise ConfigError(f"section {name!r} must be an object")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown key(s) in {name!r}: {', '.join(unknown)}")
    if name == "physics" and "mu" not in raw:
        raise NonPositiveDecay("physics section does not set mu; the model needs mu > 0",
                               "mu > 0")
    return cls(**raw)


def _number(name: str, v, kind=float):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{name} must be a number, got {v!r}")
    if kind is int:
        if int(v) != v:
            raise ConfigError(f"{name} must be an integer, got {v!r}")
        return int(v)
    return float(v)


def from_dict(raw: dict, base_dir: str | Path = ".") -> RunConfig:
    """Build a :class:`RunConfig` from parsed JSON; checks keys and types only."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(raw) - _TOP_KEYS)
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {', '.join(unknown)}")
    kw = {k: _section(k, cls, raw[k]) for k, cls in _SECTIONS.items() if k in raw}
    cfg = RunConfig(**kw, base_dir=str(base_dir))

    if raw.get("epsilons") is not None:
        eps = raw["epsilons"]
        if not isinstance(eps, list) or not eps:
            raise ConfigError("epsilons must be a non-empty list")
        eps = [_number("epsilons entry", e) for e in eps]
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ConfigError(f"epsilons must be strictly decreasing, got {eps}")
        cfg.epsilons = eps
        cfg.epsilon = None if raw.get("epsilon") is None else _number("epsilon", raw["epsilon"])
    elif "epsilon" in raw:
        cfg.epsilon = _number("epsilon", raw["epsilon"])

    g = cfg.grid
    g.nx, g.ny = _number("grid.nx", g.nx, int), _number("grid.ny", g.ny, int)
    g.Lx, g.Ly = _number("grid.Lx", g.Lx), _number("grid.Ly", g.Ly)
    for f in dataclasses.fields(SchemeSection):
        v = getattr(cfg.scheme, f.name)
        if f.name == "validate":
            if not isinstance(v, bool):
                raise ConfigError("scheme.validate must be true or false")
        else:
            setattr(cfg.scheme, f.name, _number(f"scheme.{f.name}", v))
    for name in ("record_interval", "snapshot_interval"):
        setattr(cfg.output, name, _number(f"output.{name}", getattr(cfg.output, name)))
    cfg.refine.levels = _number("refine.levels", cfg.refine.levels, int)
    p = cfg.physics
    p.kappa, p.mu = _number("physics.kappa", p.kappa), _number("physics.mu", p.mu)
    # constructing these runs their own range checks
    cfg.grid_spec()
    cfg.scheme_config()
    return cfg


def parse_text(text: str, source: str = "<config>") -> dict:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


def apply_override(raw: dict, item: str) -> dict:
    """Apply ``dotted.key=value``; the value is JSON, or a bare string."""
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not of the form key=value")
    key, text = item.split("=", 1)
    try:
        value = json.loads(text)
    except json.JSONDecodeError:
        value = text
    parts = key.strip().split(".")
    node = raw
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"override {key!r} descends into a non-object")
    node[parts[-1]] = value
    return raw


def load_config(path, overrides=(), validate: bool = True) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    raw = parse_text(text, str(path))
    for item in overrides:
        raw = apply_override(raw, item)
    cfg = from_dict(raw, base_dir=path.parent)
    if validate:
        build(cfg)
    return cfg


def dump_config(cfg: RunConfig) -> str:
    return json.dumps(cfg.to_dict(), sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------------------
# sampling

def _table(spec: dict, cfg: RunConfig, what: str) -> list:
    if set(spec) != {"file"}:
        raise ConfigError(f"{what}: a table input is {{\"file\": path}}")
    return storage.read_blocks(Path(cfg.base_dir) / spec["file"])


def sample_centres(spec, g: GridSpec, cfg: RunConfig, what: str) -> np.ndarray:
    if isinstance(spec, dict):
        blocks = _table(spec, cfg, what)
        if len(blocks) != 1 or blocks[0][2].shape != g.shape:
            raise ConfigError(f"{what}: table must hold one {g.shape} block")
        return blocks[0][2]
    X, Y = g.centers()
    return expr.evaluate(spec, X, Y)


def boundary_trace(spec, g: GridSpec, cfg: RunConfig, what: str) -> BoundaryTrace:
    """Trace at boundary-face midpoints: exact for expressions, adjacent-cell
    values for tables."""
    if isinstance(spec, dict):
        v = sample_centres(spec, g, cfg, what)
        return BoundaryTrace(v[:, 0].copy(), v[:, -1].copy(), v[0, :].copy(), v[-1, :].copy())
    return BoundaryTrace.from_function(expr.function(spec), g)


def sample_velocity(spec, g: GridSpec, cfg: RunConfig) -> VectorField:
    if not isinstance(spec, dict):
        raise ConfigError("u0 must be an object with ux/uy, stream or file")
    keys = set(spec)
    if keys == {"file"}:
        blocks = _table(spec, cfg, "u0")
        if [b[0] for b in blocks] != ["ux", "uy"] or blocks[0][2].shape != g.xface_shape \
                or blocks[1][2].shape != g.yface_shape:
            raise ConfigError("u0 table must hold ux and uy blocks on the MAC faces")
        return VectorField(blocks[0][2], blocks[1][2], no_slip=False)
    if keys == {"stream"}:
        XN, YN = nodes(g)
        return curl_of_streamfunction(expr.evaluate(spec["stream"], XN, YN), g, no_slip=False)
    if keys == {"ux", "uy"}:
        ux = expr.evaluate(spec["ux"], *g.xfaces())
        uy = expr.evaluate(spec["uy"], *g.yfaces())
        return VectorField(ux, uy, no_slip=False)
    raise ConfigError(f"u0 keys {sorted(keys)} not understood")


def _wall_free(u: VectorField) -> VectorField:
    ux, uy = u.ux.copy(), u.uy.copy()
    ux[:, 0] = ux[:, -1] = 0.0
    uy[0, :] = uy[-1, :] = 0.0
    return VectorField(ux, uy)


@dataclass(frozen=True)
class Problem:
    """Everything a single run needs, sampled on the grid."""

    grid: GridSpec
    params: PhysicalParams
    data: InitialData
    scheme: SchemeConfig
    validate: bool


def build(cfg: RunConfig) -> Problem:
    """Sample every input on the grid and check the model assumptions."""
    g = cfg.grid_spec()
    ph = cfg.physics
    phi = ScalarField(sample_centres(ph.phi, g, cfg, "phi"))
    cs_trace = boundary_trace(ph.c_star, g, cfg, "c_star")
    c_star = ScalarField(sample_centres(ph.c_star, g, cfg, "c_star"), DIRICHLET, cs_trace)
    if ph.c0 is None:
        c0 = ScalarField(c_star.values.copy(), DIRICHLET, cs_trace)
    else:
        c0 = ScalarField(sample_centres(ph.c0, g, cfg, "c0"), DIRICHLET,
                         boundary_trace(ph.c0, g, cfg, "c0"))
    n0 = ScalarField(sample_centres(ph.n0, g, cfg, "n0"))
    u0 = sample_velocity(ph.u0, g, cfg)
    params = PhysicalParams(ph.kappa, ph.mu, phi, c_star)
    data = InitialData(n0, c0, u0)
    scheme = cfg.scheme_config()
    if cfg.scheme.validate:
        data, params = validate_inputs(data, params, g, projection_tol=scheme.projection_tol)
        for eps in cfg.epsilon_list():
            RegParams.build(g, eps)
    else:
        data = InitialData(n0, ScalarField(c0.values, DIRICHLET, cs_trace), _wall_free(u0))
    return Problem(g, params, data, scheme, cfg.scheme.validate)

