"""Scenario configuration: schema, defaults, validation and canonical dump.

A scenario document has the top-level sections ``graph``, ``plant``,
``fault``, ``gains``, ``rbf``, ``triggers`` and ``sim``; see
``scenarios/paper_sec5.yaml`` for a complete example. Every field has a
default except the graph adjacency and the initial states.
"""
import copy
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .errors import GraphError, SchemaError, UnknownPlantError, ValidationError
from .graph import build_graph
from .plant import PLANTS

MODES = ("nominal", "event_triggered", "twin")


@dataclass(frozen=True)
class GraphSpec:
    adjacency: tuple


@dataclass(frozen=True)
class PlantSpec:
    name: str
    # level-major: initial_states[k][i] is state k+1 of agent i
    initial_states: tuple


@dataclass(frozen=True)
class FaultSpec:
    eta: tuple = (0.6,)          # one entry, or one per agent
    tau_f: float = 1.0
    ramp_width: float = 0.1
    eta_lower: float = None
    eta_dot_bound: float = None


@dataclass(frozen=True)
class GainSpec:
    delta1: float = 0.5
    gamma: tuple = (5.0, 10.0)
    xi: tuple = (0.01,)
    lam: tuple = (0.005, 0.005)


@dataclass(frozen=True)
class RbfSpec:
    node_count: int = 25
    width: float = 2.0
    box: tuple = (-2.0, 2.0)
    weight_bound: float = 10.0


@dataclass(frozen=True)
class TriggerSpec:
    dx_self: float = 0.001
    dx_neighbor: float = 0.001
    du: float = 0.01


@dataclass(frozen=True)
class SimSpec:
    dt: float = 1e-3
    t_end: float = 20.0
    mode: str = "event_triggered"
    divergence_limit: float = 1e3
    record_weights: bool = False


@dataclass(frozen=True)
class ScenarioConfig:
    graph: GraphSpec
    plant: PlantSpec
    fault: FaultSpec = field(default_factory=FaultSpec)
    gains: GainSpec = field(default_factory=GainSpec)
    rbf: RbfSpec = field(default_factory=RbfSpec)
    triggers: TriggerSpec = field(default_factory=TriggerSpec)
    sim: SimSpec = field(default_factory=SimSpec)

    @property
    def n_agents(self):
        return len(self.graph.adjacency)

    @property
    def order(self):
        return len(self.plant.initial_states)

    def x0(self):
        return np.array(self.plant.initial_states, dtype=float).T.copy()

    def with_overrides(self, **sections):
        """Return a copy with selected fields replaced, e.g.
        ``cfg.with_overrides(sim={"dt": 5e-4}, triggers={"du": 0.05})``."""
        doc = to_dict(self)
        for name, values in sections.items():
            doc[name].update(values)
        return parse_config(doc)


SECTIONS = {
    "graph": GraphSpec,
    "plant": PlantSpec,
    "fault": FaultSpec,
    "gains": GainSpec,
    "rbf": RbfSpec,
    "triggers": TriggerSpec,
    "sim": SimSpec,
}
REQUIRED = {"graph": ("adjacency",), "plant": ("name", "initial_states")}


def _number(path, v):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaError(path, f"expected a number, got {v!r}")
    return float(v)


def _numbers(path, v, allow_scalar=True):
    if isinstance(v, (list, tuple)):
        return tuple(_number(f"{path}[{i}]", x) for i, x in enumerate(v))
    if allow_scalar:
        return (_number(path, v),)
    raise SchemaError(path, f"expected a list of numbers, got {v!r}")


def _matrix(path, v):
    if not isinstance(v, (list, tuple)) or not v:
        raise SchemaError(path, "expected a non-empty array of arrays")
    rows = tuple(_numbers(f"{path}[{i}]", r, allow_scalar=False) for i, r in enumerate(v))
    return rows


def _coerce(section, key, v):
    path = f"{section}.{key}"
    if (section, key) == ("graph", "adjacency") or (section, key) == ("plant", "initial_states"):
        return _matrix(path, v)
    if (section, key) == ("plant", "name") or (section, key) == ("sim", "mode"):
        if not isinstance(v, str):
            raise SchemaError(path, f"expected a string, got {v!r}")
        return v
    if (section, key) == ("sim", "record_weights"):
        if not isinstance(v, bool):
            raise SchemaError(path, f"expected true/false, got {v!r}")
        return v
    if (section, key) == ("rbf", "node_count"):
        if isinstance(v, bool) or not isinstance(v, int):
            raise SchemaError(path, f"expected an integer, got {v!r}")
        return v
    if key in ("gamma", "xi", "lam", "eta", "box"):
        return _numbers(path, v)
    if v is None and key in ("eta_lower", "eta_dot_bound"):
        return None
    return _number(path, v)


def load_document(text):
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise SchemaError("<document>", f"not valid YAML: {exc}") from None
    if not isinstance(doc, dict):
        raise SchemaError("<document>", "top level must be a mapping of sections")
    return doc


def parse_config(text_or_doc):
    """Build a validated ScenarioConfig from YAML text or an already-loaded mapping."""
    doc = load_document(text_or_doc) if isinstance(text_or_doc, str) else copy.deepcopy(text_or_doc)
    for name in doc:
        if name not in SECTIONS:
            raise SchemaError(name, f"unknown section; expected one of {sorted(SECTIONS)}")
    built = {}
    for name, cls in SECTIONS.items():
        raw = doc.get(name, {}) or {}
        if not isinstance(raw, dict):
            raise SchemaError(name, "section must be a mapping")
        known = {f for f in cls.__dataclass_fields__}
        for key in raw:
            if key not in known:
                raise SchemaError(f"{name}.{key}", f"unknown key; expected one of {sorted(known)}")
        for key in REQUIRED.get(name, ()):
            if key not in raw:
                raise SchemaError(f"{name}.{key}", "required key missing")
        built[name] = cls(**{k: _coerce(name, k, v) for k, v in raw.items()})
    cfg = ScenarioConfig(**built)
    validate_config(cfg)
    return cfg


def _require(cond, path, message):
    if not cond:
        raise ValidationError(path, message)


def validate_config(cfg):
    if cfg.plant.name not in PLANTS:
        raise UnknownPlantError(f"plant.name: unknown plant {cfg.plant.name!r}; known: {sorted(PLANTS)}")
    n_agents = cfg.n_agents
    adj = cfg.graph.adjacency
    _require(all(len(r) == n_agents for r in adj), "graph.adjacency", "must be square")
    try:
        build_graph(adj)
    except GraphError as exc:
        raise ValidationError("graph.adjacency", str(exc)) from None
    order = PLANTS[cfg.plant.name].order
    x0 = cfg.plant.initial_states
    _require(len(x0) == order, "plant.initial_states", f"need {order} rows (one per state level)")
    _require(all(len(r) == n_agents for r in x0), "plant.initial_states", f"each row needs {n_agents} entries")
    _require(all(math.isfinite(v) for r in x0 for v in r), "plant.initial_states", "must be finite")

    f = cfg.fault
    _require(len(f.eta) in (1, n_agents), "fault.eta", f"give one value or {n_agents}")
    _require(all(0.0 < e <= 1.0 for e in f.eta), "fault.eta", "fault factors must lie in (0, 1]")
    _require(f.ramp_width >= 0.0, "fault.ramp_width", "must be >= 0")
    if f.eta_lower is not None:
        _require(0.0 < f.eta_lower < min(f.eta), "fault.eta_lower", "must satisfy 0 < eta_lower < eta")
    if f.eta_dot_bound is not None:
        _require(f.eta_dot_bound > 0.0, "fault.eta_dot_bound", "must be positive")

    g = cfg.gains
    _require(g.delta1 > 0.0, "gains.delta1", "must be positive")
    _require(len(g.gamma) == order, "gains.gamma", f"need {order} entries")
    _require(all(v > 0.0 for v in g.gamma), "gains.gamma", "entries must be positive")
    _require(len(g.xi) == order - 1, "gains.xi", f"need {order - 1} entries (levels 2..n)")
    _require(all(v > 0.0 for v in g.xi), "gains.xi", "entries must be positive")
    _require(len(g.lam) == order, "gains.lam", f"need {order} entries")
    _require(all(v > 0.0 for v in g.lam), "gains.lam", "entries must be positive")

    r = cfg.rbf
    _require(r.node_count >= 1, "rbf.node_count", "must be >= 1")
    _require(r.width > 0.0, "rbf.width", "must be positive")
    _require(len(r.box) == 2 and r.box[0] < r.box[1], "rbf.box", "must be [lo, hi] with lo < hi")
    _require(r.weight_bound > 0.0, "rbf.weight_bound", "must be positive")
    if order >= 2:
        side = math.isqrt(r.node_count)
        _require(side * side == r.node_count, "rbf.node_count", "must be a perfect square for multi-input levels")

    t = cfg.triggers
    for key in ("dx_self", "dx_neighbor", "du"):
        _require(getattr(t, key) > 0.0, f"triggers.{key}", "must be positive")

    s = cfg.sim
    _require(s.mode in MODES, "sim.mode", f"must be one of {MODES}")
    _require(s.dt > 0.0, "sim.dt", "must be positive")
    _require(s.t_end >= s.dt, "sim.t_end", "must be at least one step")
    _require(not g.xi or s.dt <= min(g.xi), "sim.dt", f"must not exceed the smallest filter constant {min(g.xi) if g.xi else None}")
    max_x0 = max(abs(v) for row in x0 for v in row)
    _require(s.divergence_limit > max_x0, "sim.divergence_limit", "must exceed the largest initial |x|")


def to_dict(cfg):
    """Plain-data form of a config with every default filled in."""
    doc = asdict(cfg)

    def plain(v):
        if isinstance(v, tuple):
            return [plain(x) for x in v]
        if isinstance(v, dict):
            return {k: plain(x) for k, x in v.items()}
        return v

    return plain(doc)


def dump_config(cfg):
    return yaml.safe_dump(to_dict(cfg), sort_keys=True, default_flow_style=None)


def config_hash(cfg_or_doc):
    """Git blob-style SHA-1 of the canonical JSON form (key order irrelevant)."""
    doc = to_dict(cfg_or_doc) if isinstance(cfg_or_doc, ScenarioConfig) else cfg_or_doc
    body = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha1(b"blob %d\0" % len(body) + body).hexdigest()


def bundled_scenarios():
    return sorted(p.stem for p in resources.files("etconsensus").joinpath("scenarios").iterdir() if p.name.endswith(".yaml"))


def read_config_text(path_or_name):
    """Read a scenario from a file path, or from the bundled set by name."""
    p = Path(path_or_name)
    if p.is_file():
        return p.read_text()
    bundled = resources.files("etconsensus").joinpath("scenarios", f"{path_or_name}.yaml")
    if bundled.is_file():
        return bundled.read_text()
    raise FileNotFoundError(f"no config file or bundled scenario named {str(path_or_name)!r}")


def load_config(path_or_name):
    return parse_config(read_config_text(path_or_name))


def applied_defaults(text_or_doc):
    """Dotted paths of fields the document leaves to their defaults."""
    doc = load_document(text_or_doc) if isinstance(text_or_doc, str) else text_or_doc
    missing = []
    for name, cls in SECTIONS.items():
        raw = doc.get(name) or {}
        for key in cls.__dataclass_fields__:
            if key not in raw:
                missing.append(f"{name}.{key}")
    return missing
