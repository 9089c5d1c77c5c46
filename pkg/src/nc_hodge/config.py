"""Run configuration: YAML schema, defaults and strict validation.

Schema (all sections optional except ``model``)::

    model:        {type: fuzzy_sphere, N: 3}
                  {type: nc_torus, n: 2, theta: golden | <float> | [[...]], M: 4, padding: 0}
    lie:          su2 | abelian | abelian_<n> | {c: [[[...]]]}      (default: the model's own)
    conformal:    {template: j3, amplitudes: [0, 0.3], seed: <run seed>}
    u:            [0, 0.5, 1]
    heat:         {t_min: 0.01, t_max: 10, per_decade: 16, check_times: [0.1, 1, 10],
                   fit_t_max: 0.04, saturation: 0.01, sizes: [4, 8, 16]}
    summability:  {p: [1, 2, 3], sizes: [...], points: [[0, 0], [0.3, 0.5]],
                   drop_top: 0.1, drop_bottom: 0.4}
    twisted:      {sizes: [4, 8, 16], mode: [0, 1], amplitude: 0.3, u: 1.0, padding: 0,
                   twisted_variation: 0.5, untwisted_growth: 2.0}
    tolerances:   {kernel_tau: 1e-9, min_gap: 100, residual: 1e-9, invariant: 1e-10,
                   heat_index: 1e-8}
    output:       out
    seed:         0

The shorthand ``{model: fuzzy_sphere, N: 3}`` lifts ``N``, ``n``, ``theta``,
``M`` and ``padding`` into the model section.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigError

MODEL_TYPES = ("fuzzy_sphere", "nc_torus")
SUBCOMMANDS = ("validate", "spectrum", "hodge", "euler", "heat", "summability", "twisted", "all")


@dataclass
class ModelSection:
    type: str = "fuzzy_sphere"
    N: int | None = None
    n: int = 2
    theta: object = "golden"
    M: int | None = None
    padding: int = 0


@dataclass
class ConformalSection:
    template: object = None
    amplitudes: list = field(default_factory=lambda: [0.0, 0.3])
    seed: int | None = None


@dataclass
class HeatSection:
    t_min: float = 0.01
    t_max: float = 10.0
    per_decade: int = 16
    check_times: list = field(default_factory=lambda: [0.1, 1.0, 10.0])
    fit_t_max: float = 0.04
    saturation: float = 0.01
    sizes: list | None = None


@dataclass
class SummabilitySection:
    p: list = field(default_factory=lambda: [1, 2, 3])
    sizes: list | None = None
    points: list = field(default_factory=lambda: [[0.0, 0.0], [0.3, 0.5]])
    drop_top: float = 0.1
    drop_bottom: float = 0.4


@dataclass
class TwistedSection:
    sizes: list = field(default_factory=lambda: [4, 8, 16])
    mode: list = field(default_factory=lambda: [0, 1])
    amplitude: float = 0.3
    u: float = 1.0
    padding: int = 0
    twisted_variation: float = 0.5
    untwisted_growth: float = 2.0


@dataclass
class Tolerances:
    kernel_tau: float = 1e-9
    min_gap: float = 100.0
    residual: float = 1e-9
    invariant: float = 1e-10
    heat_index: float = 1e-8


@dataclass
class RunConfig:
    model: ModelSection
    lie: object = None
    conformal: ConformalSection = field(default_factory=ConformalSection)
    u: list = field(default_factory=lambda: [0.0, 0.5, 1.0])
    heat: HeatSection = field(default_factory=HeatSection)
    summability: SummabilitySection = field(default_factory=SummabilitySection)
    twisted: TwistedSection = field(default_factory=TwistedSection)
    tolerances: Tolerances = field(default_factory=Tolerances)
    output: str = "out"
    seed: int = 0
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("warnings")
        return d

    def content_hash(self) -> str:
        """Hash of everything that affects results (the output directory does not)."""
        d = self.to_dict()
        d.pop("output")
        payload = json.dumps(d, sort_keys=True, default=_json_default)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"not serializable: {type(obj)}")


SECTIONS = {
    "model": ModelSection,
    "conformal": ConformalSection,
    "heat": HeatSection,
    "summability": SummabilitySection,
    "twisted": TwistedSection,
    "tolerances": Tolerances,
}
MODEL_SHORTHAND = ("N", "n", "theta", "M", "padding")


def _build_section(cls, raw, path):
    if raw is None:
        return cls()
    if not isinstance(raw, dict):
        raise ConfigError("expected a mapping", path)
    names = {f.name for f in fields(cls)}
    for key in raw:
        if key not in names:
            raise ConfigError(f"unknown key (allowed: {', '.join(sorted(names))})", f"{path}.{key}")
    return cls(**raw)


def _number(value, path, positive=False, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", path)
    if integer and int(value) != value:
        raise ConfigError(f"expected an integer, got {value!r}", path)
    if positive and not value > 0:
        raise ConfigError(f"must be positive, got {value!r}", path)
    return int(value) if integer else float(value)


def _number_list(values, path, **kw):
    if not isinstance(values, (list, tuple)) or not values:
        raise ConfigError("expected a non-empty list", path)
    return [_number(v, f"{path}[{i}]", **kw) for i, v in enumerate(values)]


def _validate(cfg: RunConfig) -> RunConfig:
    m = cfg.model
    if m.type not in MODEL_TYPES:
        raise ConfigError(f"unknown model type {m.type!r} (allowed: {', '.join(MODEL_TYPES)})", "model.type")
    if m.type == "fuzzy_sphere":
        if m.N is None:
            raise ConfigError("fuzzy_sphere requires N", "model.N")
        m.N = _number(m.N, "model.N", positive=True, integer=True)
        if m.N < 2:
            raise ConfigError("N must be at least 2", "model.N")
    else:
        m.M = _number(m.M if m.M is not None else 4, "model.M", positive=True, integer=True)
        m.n = _number(m.n, "model.n", positive=True, integer=True)
        m.padding = _number(m.padding, "model.padding", integer=True)
        if m.padding < 0:
            raise ConfigError("padding must be non-negative", "model.padding")
        if not (m.theta == "golden" or isinstance(m.theta, (int, float, list))):
            raise ConfigError("theta must be 'golden', a number or a matrix", "model.theta")
    if cfg.lie is not None and not isinstance(cfg.lie, (str, dict)):
        raise ConfigError("lie must be a preset name or {c: ...}", "lie")
    if isinstance(cfg.lie, str) and not (cfg.lie in ("su2", "abelian") or cfg.lie.startswith("abelian_")):
        raise ConfigError(f"unknown preset {cfg.lie!r}", "lie")
    if isinstance(cfg.lie, dict) and set(cfg.lie) != {"c"}:
        raise ConfigError("explicit structure constants take exactly the key 'c'", "lie")
    if cfg.conformal.template is None:
        cfg.conformal.template = "j3" if m.type == "fuzzy_sphere" else "cos1"
    cfg.conformal.amplitudes = _number_list(cfg.conformal.amplitudes, "conformal.amplitudes")
    cfg.u = _number_list(cfg.u, "u")
    for i, u in enumerate(cfg.u):
        if not 0.0 <= u <= 1.0:
            msg = f"u[{i}] = {u} lies outside [0, 1]"
            cfg.warnings.append(msg)
            warnings.warn(msg, stacklevel=3)
    for f in fields(Tolerances):
        setattr(cfg.tolerances, f.name, _number(getattr(cfg.tolerances, f.name), f"tolerances.{f.name}", positive=True))
    h = cfg.heat
    h.t_min = _number(h.t_min, "heat.t_min", positive=True)
    h.t_max = _number(h.t_max, "heat.t_max", positive=True)
    h.check_times = _number_list(h.check_times, "heat.check_times", positive=True)
    h.fit_t_max = _number(h.fit_t_max, "heat.fit_t_max", positive=True)
    h.saturation = _number(h.saturation, "heat.saturation", positive=True)
    h.per_decade = _number(h.per_decade, "heat.per_decade", positive=True, integer=True)
    if h.sizes is None:
        h.sizes = [4, 8, 16] if m.type == "nc_torus" else [4, 6, 8]
    h.sizes = _number_list(h.sizes, "heat.sizes", positive=True, integer=True)
    s = cfg.summability
    s.p = _number_list(s.p, "summability.p", positive=True)
    if s.sizes is None:
        s.sizes = [4, 8, 12, 16] if m.type == "fuzzy_sphere" else [4, 8, 16]
    s.sizes = _number_list(s.sizes, "summability.sizes", positive=True, integer=True)
    if not isinstance(s.points, list) or not all(isinstance(p, list) and len(p) == 2 for p in s.points):
        raise ConfigError("points must be a list of [amplitude, u] pairs", "summability.points")
    s.points = [_number_list(p, f"summability.points[{i}]") for i, p in enumerate(s.points)]
    t = cfg.twisted
    t.sizes = _number_list(t.sizes, "twisted.sizes", positive=True, integer=True)
    t.mode = _number_list(t.mode, "twisted.mode", integer=True)
    t.twisted_variation = _number(t.twisted_variation, "twisted.twisted_variation", positive=True)
    t.untwisted_growth = _number(t.untwisted_growth, "twisted.untwisted_growth", positive=True)
    cfg.seed = _number(cfg.seed, "seed", integer=True)
    if cfg.conformal.seed is not None:
        cfg.conformal.seed = _number(cfg.conformal.seed, "conformal.seed", integer=True)
    if not isinstance(cfg.output, str):
        raise ConfigError("output must be a path string", "output")
    return cfg


def config_from_dict(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("top level must be a mapping")
    raw = dict(raw)
    model = raw.get("model")
    if isinstance(model, str):
        raw["model"] = {"type": model, **{k: raw.pop(k) for k in MODEL_SHORTHAND if k in raw}}
    elif model is None:
        raise ConfigError("missing required section", "model")
    allowed = {f.name for f in fields(RunConfig)} - {"warnings"}
    for key in raw:
        if key not in allowed:
            raise ConfigError(f"unknown key (allowed: {', '.join(sorted(allowed))})", key)
    kwargs = {}
    for key, value in raw.items():
        kwargs[key] = _build_section(SECTIONS[key], value, key) if key in SECTIONS else value
    try:
        cfg = RunConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return _validate(cfg)


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError("file not found", str(path))
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"parse error: {exc}", str(path)) from exc
    return config_from_dict(raw or {})
