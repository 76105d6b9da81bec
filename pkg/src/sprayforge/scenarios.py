"""Scenario configuration: JSON schema, validation, built-in presets and model assembly.

A configuration is one JSON document with ``"schema": "sprayforge-config/1"``.
Presets are the same documents embedded below; a file can override any
field of a preset by naming it in ``"preset"``.
"""
from __future__ import annotations

import copy
import json
import re
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError, ParseError, UnboundParameter, UnknownVariable
from .expr import Expr, VarLayout, parse_expr
from .hamilton import CotangentSpaceDef
from .higher import HigherOrderSpace, HigherOrderSystem, prolonged_lagrangian_jet
from .integrate import IntegratorConfig
from .mech import ExternalForce, MechanicalSystem
from .tangent import TangentSpaceDef

SCHEMA = "sprayforge-config/1"
TANGENT_KINDS = ("lagrange", "finsler", "riemannian", "generalized-lagrange")
COTANGENT_KINDS = ("hamilton", "cartan", "riemannian-dual")
HIGHER_KINDS = ("higher-lagrange", "prolonged-riemannian")
DEFAULT_CLASS = {"riemannian": "riemannian", "finsler": "finslerian", "lagrange": "lagrangian",
                 "hamilton": "hamiltonian", "riemannian-dual": "hamiltonian", "cartan": "cartanian"}
_GENERATOR_KEYS = ("generator", "lagrangian", "finsler", "hamiltonian", "cartan")
_KNOWN_KEYS = {"schema", "preset", "name", "description", "kind", "n", "k", "metric", "connection",
               "force", "system_class", "params", "integration", "initial", "sample", "closed_form",
               "checks", "output", "negative_control", *_GENERATOR_KEYS}
_VAR_RE = re.compile(r"[xyp]\d+(_\d+)?")


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    kind: str
    n: int
    k: int = 1
    generator: Optional[str] = None
    metric: Optional[tuple] = None
    connection: Optional[tuple] = None
    force: Optional[tuple] = None
    force_representation: str = "contravariant"
    system_class: Optional[str] = None
    params: dict = field(default_factory=dict)
    integration: IntegratorConfig = field(default_factory=IntegratorConfig)
    initial: Optional[tuple] = None
    sample_x: tuple = (-1.0, 1.0)
    sample_y: tuple = (-1.0, 1.0)
    closed_form: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    description: str = ""
    negative_control: bool = False
    output_dir: Optional[str] = None        # default --out-dir for the CLI

    @property
    def side(self) -> str:
        if self.kind in TANGENT_KINDS:
            return "tangent"
        if self.kind in COTANGENT_KINDS:
            return "cotangent"
        return "higher"

    @property
    def layout(self) -> VarLayout:
        if self.side == "cotangent":
            return VarLayout(self.n, side="cotangent")
        return VarLayout(self.n, self.k)

    def state_names(self):
        return self.layout.names


# -- presets -----------------------------------------------------------------

_EM_GAMMA = [["1 + 0.1*x1^2", "0", "0"], ["0", "1 + 0.1*x2^2", "0"], ["0", "0", "1"]]
_EM_GAMMA_INV = [["1/(1 + 0.1*x1^2)", "0", "0"], ["0", "1/(1 + 0.1*x2^2)", "0"], ["0", "0", "1"]]
_EM_A = ["-x2*(1 + x3^2)*b/2", "x1*(1 + x3^2)*b/2", "0.3*x1*x2"]
_RANDERS_F = "sqrt((1 + 0.2*x2^2)*y1^2 + y2^2) + b1*y1 + b2*x1*y2"
_RANDERS_PARAMS = {"b1": 0.2, "b2": 0.1}


def _em_hamiltonian():
    q = [f"(p{i + 1} - kappa*({a}))" for i, a in enumerate(_EM_A)]
    terms = [f"({_EM_GAMMA_INV[i][i]})*{q[i]}^2" for i in range(3)]
    return "(" + " + ".join(terms) + ")/mc"


PRESETS = {
    "euclid-flat": {
        "kind": "riemannian", "n": 2, "metric": [["1", "0"], ["0", "1"]],
        "initial": [0.0, 0.0, 1.0, 0.5], "integration": {"h": 0.01, "t_end": 2.0},
        "description": "Euclidean plane; straight-line geodesics",
    },
    "polar-plane": {
        "kind": "riemannian", "n": 2, "metric": [["1", "0"], ["0", "x1^2"]],
        "initial": [1.0, 0.0, 1.0, 1.0], "integration": {"h": 0.001, "t_end": 1.0},
        "sample": {"x": [0.5, 2.0], "y": [-1.0, 1.0]},
        "description": "Euclidean plane in polar coordinates (r, theta)",
    },
    "electrodynamics": {
        "kind": "lagrange", "n": 3, "params": {"mc": 2.0, "kappa": 0.5, "b": 1.0},
        "closed_form": {"type": "electrodynamics", "gamma": _EM_GAMMA, "A": _EM_A,
                        "mc": "mc", "kappa": "kappa"},
        "initial": [0.2, -0.1, 0.3, 0.5, 0.4, -0.3], "integration": {"h": 0.001, "t_end": 5.0, "stride": 50},
        "sample": {"x": [-1.0, 1.0], "y": [-1.0, 1.0]},
        "description": "charged particle: mc gamma(y, y) + 2 kappa A.y with a nonlinear potential",
    },
    "randers": {
        "kind": "finsler", "n": 2, "generator": _RANDERS_F, "params": dict(_RANDERS_PARAMS),
        "initial": [0.1, 0.2, 0.8, 0.4], "integration": {"h": 0.001, "t_end": 2.0, "stride": 20},
        "sample": {"x": [-1.0, 1.0], "y": [0.2, 1.0]},
        "description": "Randers metric alpha + beta",
    },
    "kropina": {
        "kind": "cartan", "n": 2, "generator": "(p1^2 + (1 + 0.2*x1^2)*p2^2)/(c1*p1 + c2*p2)",
        "params": {"c1": 1.0, "c2": 0.5},
        "initial": [0.1, 0.2, 0.8, 0.5], "integration": {"h": 0.001, "t_end": 1.0, "stride": 20},
        "sample": {"x": [-1.0, 1.0], "y": [0.3, 1.0]},
        "description": "Kropina Cartan metric alpha*^2 / beta*",
    },
    "ingarden": {
        "kind": "finsler", "n": 2, "generator": _RANDERS_F, "params": dict(_RANDERS_PARAMS),
        "connection": [
            ["0.2*x2*y2/(1 + 0.2*x2^2)", "(0.2*x2*y1 + b2/2)/(1 + 0.2*x2^2)"],
            ["-0.2*x2*y1 - b2/2", "0"],
        ],
        "closed_form": {"type": "lorentz-connection", "a": [["1 + 0.2*x2^2", "0"], ["0", "1"]],
                        "b": ["b1", "b2*x1"]},
        "initial": [0.1, 0.2, 0.8, 0.4], "integration": {"h": 0.001, "t_end": 2.0, "stride": 20},
        "sample": {"x": [-1.0, 1.0], "y": [0.2, 1.0]},
        "description": "Randers metric with the Lorentz nonlinear connection as an override",
    },
    "harmonic-oscillator": {
        "kind": "riemannian", "n": 2, "metric": [["1", "0"], ["0", "1"]],
        "force": ["-2*w1^2*x1", "-2*w2^2*x2"], "params": {"w1": 1.0, "w2": 1.5},
        "initial": [1.0, 0.0, 0.0, 1.0], "integration": {"h": 0.001, "t_end": 10.0, "stride": 50},
        "closed_form": {"type": "oscillator", "omega": ["w1", "w2"]},
        "description": "x'' = -w^2 x in each coordinate",
    },
    "damped-liouville": {
        "kind": "riemannian", "n": 2, "metric": [["1", "0"], ["0", "1"]],
        "force": ["-2*omega*y1", "-2*omega*y2"], "params": {"omega": 1.0},
        "initial": [0.0, 0.0, 1.0, 0.0], "integration": {"h": 0.001, "t_end": 1.0, "stride": 10},
        "closed_form": {"type": "damped", "omega": "omega"},
        "description": "flat plane with force -2 omega C; speed decays like exp(-omega t)",
    },
    "lorentz-force": {
        "kind": "riemannian", "n": 2, "metric": [["1", "0"], ["0", "1"]],
        "force": ["-2*B*(1 + 0.1*x1^2)*y2", "2*B*(1 + 0.1*x1^2)*y1"], "params": {"B": 0.7},
        "initial": [0.0, 0.0, 1.0, 0.0], "integration": {"h": 0.001, "t_end": 5.0, "stride": 50},
        "description": "force 2 Y(y) with Y skew; the energy is conserved",
    },
    "finsler-beta-force": {
        "kind": "finsler", "n": 2, "generator": _RANDERS_F, "params": dict(_RANDERS_PARAMS),
        "force": ["(b1*y1 + b2*x1*y2)*y1", "(b1*y1 + b2*x1*y2)*y2"],
        "initial": [0.1, 0.2, 0.8, 0.4], "integration": {"h": 0.001, "t_end": 1.0, "stride": 20},
        "sample": {"x": [-1.0, 1.0], "y": [0.2, 1.0]},
        "description": "Randers space with force beta C",
    },
    "hamilton-electrodynamics": {
        "kind": "hamilton", "n": 3, "generator": _em_hamiltonian(),
        "params": {"mc": 2.0, "kappa": 0.5, "b": 1.0},
        "initial": [0.2, -0.1, 0.3, 0.5, 0.4, -0.3], "integration": {"h": 0.001, "t_end": 5.0, "stride": 50},
        "description": "Hamilton function (p - kappa A)^2 / mc of the charged particle",
    },
    "cartan-flat": {
        "kind": "cartan", "n": 2, "generator": "sqrt(p1^2 + p2^2)",
        "initial": [0.0, 0.0, 0.6, 0.8], "integration": {"h": 0.001, "t_end": 2.0, "stride": 20},
        "sample": {"x": [-1.0, 1.0], "y": [0.2, 1.0]},
        "description": "Euclidean Cartan space",
    },
    "cartan-randers-dual": {
        "kind": "cartan", "n": 2, "generator": "sqrt(p1^2/(1 + 0.2*x2^2) + p2^2) + c1*p1 + c2*x1*p2",
        "params": {"c1": 0.2, "c2": 0.1},
        "initial": [0.1, 0.2, 0.8, 0.4], "integration": {"h": 0.001, "t_end": 2.0, "stride": 20},
        "sample": {"x": [-1.0, 1.0], "y": [0.2, 1.0]},
        "description": "Randers-type Cartan metric alpha* + beta*",
    },
    "prolonged-riemann-k2": {
        "kind": "prolonged-riemannian", "n": 2, "k": 2, "metric": [["1", "0"], ["0", "x1^2"]],
        "initial": [1.0, 0.0, 0.3, 0.5, 0.1, -0.2], "integration": {"h": 0.001, "t_end": 1.0, "stride": 20},
        "sample": {"x": [0.5, 2.0], "y": [-1.0, 1.0]},
        "description": "polar-plane metric prolonged to the second-order bundle",
    },
    "higher-order-friction-k2": {
        "kind": "higher-lagrange", "n": 2, "k": 2, "generator": "y2_1^2 + y2_2^2",
        "force": ["-c*y2_1", "-c*y2_2"], "params": {"c": 0.8},
        "initial": [0.0, 0.0, 1.0, 0.5, 0.4, -0.2], "integration": {"h": 0.001, "t_end": 2.0, "stride": 20},
        "closed_form": {"type": "friction-k2", "c": "c"},
        "description": "flat second-order system with friction -c y^(2)",
    },
}

NEGATIVE_CONTROLS = {
    "corrupted-gl": {
        "kind": "generalized-lagrange", "n": 2, "metric": [["1 + y1^2", "x1"], ["0", "1 + y2^2"]],
        "initial": [0.1, 0.2, 0.5, 0.3],
        "description": "negative control: non-symmetric GL metric, verify must fail",
    },
}


# -- loading -----------------------------------------------------------------


def _parse(text, layout, params, what):
    if not isinstance(text, str):
        if isinstance(text, (int, float)):
            text = repr(float(text))
        else:
            raise ConfigError(f"{what}: expression must be a string")
    try:
        return parse_expr(text, layout, params)
    except UnknownVariable as exc:
        if not _VAR_RE.fullmatch(exc.name):
            raise UnboundParameter(exc.name) from None
        raise ConfigError(f"{what}: {exc} (variable outside the layout of this scenario)") from None
    except ParseError as exc:
        raise ConfigError(f"{what}: {exc} in {text!r}") from None


def _box(sample, key, default):
    v = sample.get(key, default)
    if not (isinstance(v, (list, tuple)) and len(v) == 2 and v[0] < v[1]):
        raise ConfigError(f"sample.{key} must be [low, high]")
    return (float(v[0]), float(v[1]))


def _matrix(rows, n, what):
    if not (isinstance(rows, list) and len(rows) == n and all(isinstance(r, list) and len(r) == n for r in rows)):
        raise ConfigError(f"{what} must be an {n} x {n} table of expressions")
    return tuple(tuple(str(v) for v in r) for r in rows)


def config_from_dict(doc: dict, name: Optional[str] = None) -> ScenarioConfig:
    """Validate a configuration document (already merged with its preset)."""
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object")
    unknown = set(doc) - _KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
    schema = doc.get("schema", SCHEMA)
    if schema != SCHEMA:
        raise ConfigError(f"unsupported schema {schema!r}; expected {SCHEMA!r}")
    kind = doc.get("kind")
    if kind not in TANGENT_KINDS + COTANGENT_KINDS + HIGHER_KINDS:
        raise ConfigError(f"unknown kind {kind!r}")
    n = doc.get("n")
    if not isinstance(n, int) or n < 1:
        raise ConfigError("n must be a positive integer")
    k = doc.get("k", 1)
    if not isinstance(k, int) or not 1 <= k <= 3:
        raise ConfigError("k must be 1, 2 or 3")
    if kind in TANGENT_KINDS + COTANGENT_KINDS and k != 1:
        raise ConfigError(f"{kind} scenarios have k = 1")
    gens = [key for key in _GENERATOR_KEYS if key in doc]
    if len(gens) > 1:
        raise ConfigError(f"give exactly one generating expression, got {gens}")
    generator = doc[gens[0]] if gens else None
    params = doc.get("params", {})
    if not isinstance(params, dict) or not all(isinstance(v, (int, float)) for v in params.values()):
        raise ConfigError("params must map names to numbers")
    params = {str(a): float(v) for a, v in params.items()}
    metric = _matrix(doc["metric"], n, "metric") if "metric" in doc else None
    connection = _matrix(doc["connection"], n, "connection") if "connection" in doc else None

    force = doc.get("force")
    rep = "contravariant"
    if isinstance(force, dict):
        rep = force.get("representation", rep)
        force = force.get("components")
    if force is not None:
        if not isinstance(force, list) or len(force) != n:
            raise ConfigError(f"force needs {n} components")
        force = tuple(str(f) for f in force)
    if rep not in ("contravariant", "covariant"):
        raise ConfigError("force representation must be contravariant or covariant")

    if kind == "riemannian" and generator is None:
        if metric is None:
            raise ConfigError("riemannian scenarios need a metric or a lagrangian")
        generator = " + ".join(f"({metric[i][j]})*y{i + 1}*y{j + 1}" for i in range(n) for j in range(n)
                               if metric[i][j].strip() != "0")
    cf = copy.deepcopy(doc.get("closed_form", {}))
    if cf.get("type") == "electrodynamics" and generator is None:
        g, A = cf["gamma"], cf["A"]
        quad = " + ".join(f"({g[i][j]})*y{i + 1}*y{j + 1}" for i in range(n) for j in range(n) if str(g[i][j]) != "0")
        lin = " + ".join(f"({A[i]})*y{i + 1}" for i in range(n))
        generator = f"{cf.get('mc', 'mc')}*({quad}) + 2*{cf.get('kappa', 'kappa')}*({lin})"
    if kind == "generalized-lagrange" or kind == "prolonged-riemannian":
        if metric is None:
            raise ConfigError(f"{kind} scenarios need a metric table")
    elif generator is None:
        raise ConfigError(f"{kind} scenarios need a generating expression")

    integ = doc.get("integration", {})
    try:
        integration = IntegratorConfig(
            method=integ.get("method", "rk4-fixed"), h=float(integ.get("h", 1e-3)),
            t_start=float(integ.get("t_start", 0.0)), t_end=float(integ.get("t_end", 1.0)),
            rtol=float(integ.get("rtol", 1e-9)), atol=float(integ.get("atol", 1e-12)),
            stride=int(integ.get("stride", 1)))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"integration: {exc}") from None

    lay = VarLayout(n, side="cotangent") if kind in COTANGENT_KINDS else VarLayout(n, k)
    initial = doc.get("initial")
    if initial is not None:
        if not isinstance(initial, list) or len(initial) != lay.size:
            raise ConfigError(f"initial state needs {lay.size} numbers ({', '.join(lay.names)})")
        initial = tuple(float(v) for v in initial)
    sample = doc.get("sample", {})
    checks = doc.get("checks", {})
    if not isinstance(checks, dict) or not all(isinstance(v, bool) for v in checks.values()):
        raise ConfigError("checks must map check names to true/false")
    output = doc.get("output", {})
    if not isinstance(output, dict) or not isinstance(output.get("dir", ""), str):
        raise ConfigError('output must be an object like {"dir": "results"}')
    output_dir = output.get("dir")
    cfg = ScenarioConfig(
        name=name or doc.get("name", "custom"), kind=kind, n=n, k=k, generator=generator, metric=metric,
        connection=connection, force=force, force_representation=rep,
        system_class=doc.get("system_class"), params=params, integration=integration, initial=initial,
        sample_x=_box(sample, "x", (-1.0, 1.0)), sample_y=_box(sample, "y", (-1.0, 1.0)),
        closed_form=cf, checks=dict(checks), description=doc.get("description", ""),
        negative_control=bool(doc.get("negative_control", False)), output_dir=output_dir)
    build(cfg)          # parse everything now so errors surface at load time
    return cfg


def preset_names(include_controls=False):
    names = list(PRESETS)
    return names + list(NEGATIVE_CONTROLS) if include_controls else names


def preset_document(name: str) -> dict:
    if name in PRESETS:
        doc = copy.deepcopy(PRESETS[name])
    elif name in NEGATIVE_CONTROLS:
        doc = copy.deepcopy(NEGATIVE_CONTROLS[name])
        doc["negative_control"] = True
    else:
        raise ConfigError(f"unknown preset {name!r}; try 'scenario list'")
    doc["schema"] = SCHEMA
    doc["name"] = name
    return doc


def load_preset(name: str) -> ScenarioConfig:
    return config_from_dict(preset_document(name), name)


def load_config(path: str) -> ScenarioConfig:
    """Read a JSON configuration file; ``"preset"`` names a base document to override."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"configuration file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object")
    if "preset" in doc:
        base = preset_document(doc["preset"])
        params = {**base.get("params", {}), **doc.get("params", {})}
        base.update({key: v for key, v in doc.items() if key != "preset"})
        base["params"] = params
        doc = base
    return config_from_dict(doc)


# -- model assembly ----------------------------------------------------------


@dataclass
class Scenario:
    config: ScenarioConfig
    space: object
    system: object = None
    exprs: dict = field(default_factory=dict)   # every parsed expression, by label

    @property
    def n(self):
        return self.config.n

    def field(self, state):
        """Evolution field of the scenario (state -> derivative)."""
        from .higher import higher_order_evolution_system
        from .mech import evolution_rhs

        if self.config.side == "higher":
            return higher_order_evolution_system(self.system, state)
        if self.system is None:
            raise ConfigError(f"{self.config.kind} scenarios have no evolution field")
        return evolution_rhs(self.system, state)

    def sample_points(self, rng, count):
        """Random points in the sampling box; fibre coordinates use the ``y`` range."""
        cfg = self.config
        lay = cfg.layout
        out = []
        for _ in range(count):
            x = rng.uniform(*cfg.sample_x, cfg.n)
            rest = rng.uniform(*cfg.sample_y, lay.size - cfg.n)
            out.append(np.concatenate([x, rest]))
        return out


def build(cfg: ScenarioConfig) -> Scenario:
    """Parse all expressions of a config and assemble its space and system."""
    lay = cfg.layout
    P = cfg.params
    exprs = {}

    def parse(text, what):
        e = _parse(text, lay, P, what)
        exprs[what] = e
        return e

    def table(rows, what):
        return tuple(tuple(parse(rows[i][j], f"{what}[{i + 1}][{j + 1}]") for j in range(cfg.n))
                     for i in range(cfg.n))

    gen = parse(cfg.generator, "generator") if cfg.generator is not None else None
    metric = table(cfg.metric, "metric") if cfg.metric is not None else None
    conn = table(cfg.connection, "connection") if cfg.connection is not None else None
    force = None
    if cfg.force is not None:
        force = tuple(parse(f, f"force[{i + 1}]") for i, f in enumerate(cfg.force))
    cf = cfg.closed_form
    for key in ("gamma", "a"):
        if key in cf:
            table(cf[key], f"closed_form.{key}")
    for key in ("A", "b"):
        if key in cf:
            for i, t in enumerate(cf[key]):
                parse(t, f"closed_form.{key}[{i + 1}]")

    try:
        if cfg.side == "tangent":
            space = TangentSpaceDef(cfg.n, cfg.kind, gen, metric if cfg.kind == "generalized-lagrange" else None,
                                    conn, name=cfg.name)
            system = None
            if cfg.kind != "generalized-lagrange":
                cls = cfg.system_class or DEFAULT_CLASS[cfg.kind]
                f = ExternalForce(force, cfg.force_representation) if force else None
                system = MechanicalSystem(space, f, cls, cfg.name)
        elif cfg.side == "cotangent":
            space = CotangentSpaceDef(cfg.n, cfg.kind, gen, name=cfg.name)
            cls = cfg.system_class or DEFAULT_CLASS[cfg.kind]
            f = ExternalForce(force, cfg.force_representation) if force else None
            system = MechanicalSystem(space, f, cls, cfg.name)
        else:
            if cfg.kind == "prolonged-riemannian":
                space = HigherOrderSpace(cfg.n, cfg.k, prolonged_lagrangian_jet(metric, cfg.k), name=cfg.name)
            else:
                space = HigherOrderSpace(cfg.n, cfg.k, gen, name=cfg.name)
            if force is not None and cfg.force_representation != "contravariant":
                raise ConfigError("higher-order forces are given by contravariant components")
            system = HigherOrderSystem(space, force)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    sc = Scenario(cfg, space, system, exprs)
    sc.metric_exprs = metric
    return sc
