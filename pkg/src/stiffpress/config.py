"""INI experiment files.

Values are strings in the file; each key is coerced to the type its schema
entry declares (lists are comma separated), then the whole document is
checked against :data:`SCHEMA` before anything is built. Overrides use
``section.key=value`` and are applied to the raw strings first.
"""

from __future__ import annotations

import configparser
import math
from pathlib import Path
from typing import Iterable, Optional

import jsonschema

from .core import Grid
from .errors import ConfigError, StiffPressError
from .initial import KINDS, InitialDatum
from .pressure import PressureLaw
from .solver import (ConstantRate, DriftSpec, LinearPotential, QuadraticPotential, QuadraticRate,
                     ReactionSpec, SimConfig, check_reaction, hessian_margin)

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_int = {"type": "integer"}
_bool = {"type": "boolean"}
_nums = {"type": "array", "items": {"type": "number"}}


def _section(props: dict, required=()) -> dict:
    return {"type": "object", "properties": props, "additionalProperties": False, "required": list(required)}


SCHEMA: dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "stiffpress experiment",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "grid": _section({
            "dim": {"type": "integer", "enum": [1, 2]},
            "lo": _num, "hi": _num,
            "n": {"type": "integer", "minimum": 4},
            "bc": {"type": "string", "enum": ["periodic", "dirichlet_zero"]},
        }, required=["dim", "lo", "hi", "n"]),
        "law": _section({
            "kind": {"type": "string", "enum": ["power", "singular"]},
            "param": _pos,
            "p_max": _pos,
        }, required=["kind", "param"]),
        "time": _section({
            "T": {"type": "number", "minimum": 0},
            "cfl": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
            "snapshots": {"type": "integer", "minimum": 1},
            "times": _nums,
            "dt_max": _pos,
            "max_steps": {"type": "integer", "minimum": 1},
            "check_boundary": _bool,
        }),
        "init": _section({
            "kind": {"type": "string", "enum": list(KINDS)},
            "mass": _pos, "t0": _pos, "gamma": _pos, "center": _nums,
            "height": {"type": "number", "minimum": 0}, "radius": _pos, "power": _pos,
            "value": {"type": "number", "minimum": 0}, "inner": {"type": "number", "minimum": 0}, "outer": _pos,
        }, required=["kind"]),
        "drift": _section({
            "potential": {"type": "string", "enum": ["none", "quadratic", "linear"]},
            "strength": _num, "center": _nums, "slope": _nums, "lam": _num,
        }),
        "reaction": _section({
            "rate": {"type": "string", "enum": ["none", "constant", "quadratic"]},
            "value": _num, "base": _num, "curvature": _num,
            "g_plus_max": {"type": "number", "minimum": 0},
            "subharmonic": _bool,
        }),
        "sweep": _section({
            "axis": {"type": "string", "enum": ["gamma", "epsilon"]},
            "values": {"type": "array", "items": _pos, "minItems": 2},
            "reference": {"type": "string", "enum": ["mesa", "surrogate"]},
            "ref_param": _pos,
            "norms": {"type": "array", "items": {"type": "string", "pattern": r"^(hminus1|l1|l43|w2_1d|lp:[0-9.]+)$"}},
            "lp": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 1}},
            "slope_tol": {"type": "number", "minimum": 0},
            "r2_min": {"type": "number", "minimum": 0, "maximum": 1},
            "calibrate": {"type": "integer", "minimum": 1},
            "residual_threshold": _pos,
            "solver": {"type": "string", "enum": ["pde", "synthetic"]},
            "synthetic_rate": _num,
            "synthetic_constant": _pos,
        }, required=["values"]),
        "appendix": _section({
            "pairs": {"type": "integer", "minimum": 1},
            "n1d": {"type": "integer", "minimum": 4},
            "n2d": {"type": "integer", "minimum": 4},
            "T2d": {"type": "number", "minimum": 0},
            "gamma2d": {"type": "number", "exclusiveMinimum": 1},
            "drift2d": {"type": "number", "minimum": 0},
        }),
        "metrics": _section({
            "input": {"type": "string"},
            "reference": {"type": "string", "enum": ["none", "mesa", "initial"]},
            "mass": _pos,
        }),
    },
}


def _key_schema(section: str, key: str) -> Optional[dict]:
    sec = SCHEMA["properties"].get(section)
    if sec is None:
        return None
    return sec["properties"].get(key)


def _coerce(raw: str, schema: Optional[dict], where: str):
    if schema is None:
        return raw  # unknown key: left for the validator to reject
    kind = schema.get("type")
    text = raw.strip()
    try:
        if kind == "number":
            return float(text)
        if kind == "integer":
            v = float(text)
            if v != int(v):
                raise ValueError
            return int(v)
        if kind == "boolean":
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError
        if kind == "array":
            items = [t.strip() for t in text.split(",") if t.strip()]
            return [_coerce(t, schema["items"], where) for t in items]
    except ValueError:
        raise ConfigError(f"{where}: cannot read {raw!r} as {kind}") from None
    return text


def parse_overrides(pairs: Iterable[str]) -> list[tuple[str, str, str]]:
    out = []
    for p in pairs:
        if "=" not in p or "." not in p.split("=", 1)[0]:
            raise ConfigError(f"override {p!r} must look like section.key=value")
        lhs, value = p.split("=", 1)
        section, key = lhs.strip().split(".", 1)
        out.append((section.strip(), key.strip(), value))
    return out


def load_text(text: str, overrides: Iterable[str] = ()) -> dict:
    """Parse INI text plus overrides into a validated plain dict."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keep key case (T)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    for section, key, value in parse_overrides(overrides):
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, key, value)
    doc = {}
    for section in parser.sections():
        doc[section] = {k: _coerce(v, _key_schema(section, k), f"[{section}] {k}")
                        for k, v in parser.items(section)}
    validate(doc)
    return doc


def load(path, overrides: Iterable[str] = ()) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return load_text(text, overrides)


def validate(doc: dict) -> None:
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as exc:
        loc = ".".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{loc}: {exc.message}") from None


def dump(doc: dict) -> str:
    """INI text for ``doc`` (inverse of :func:`load_text` up to formatting)."""
    lines = []
    for section, items in doc.items():
        lines.append(f"[{section}]")
        for k, v in items.items():
            if isinstance(v, list):
                v = ", ".join(repr(x) if isinstance(x, float) else str(x) for x in v)
            elif isinstance(v, bool):
                v = "true" if v else "false"
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{k} = {v}")
        lines.append("")
    return "\n".join(lines)


# --- builders ----------------------------------------------------------------------------------

def build_grid(doc: dict) -> Grid:
    g = doc["grid"]
    return Grid.uniform(g["dim"], g["lo"], g["hi"], g["n"], g.get("bc", "dirichlet_zero"))


def _center(values, dim: int, what: str):
    if values is None:
        return (0.0,) * dim
    if len(values) == 1:
        return (float(values[0]),) * dim
    if len(values) != dim:
        raise ConfigError(f"{what} needs {dim} coordinates")
    return tuple(float(v) for v in values)


def build_sim_config(doc: dict) -> SimConfig:
    """SimConfig from a validated document; every model invariant is checked here."""
    missing = [k for k in ("grid", "law") if k not in doc]
    if missing:
        raise ConfigError(f"config needs section(s) {', '.join(missing)}")
    try:
        grid = build_grid(doc)
        law_doc = doc["law"]
        law = PressureLaw(law_doc["kind"], law_doc["param"], law_doc.get("p_max", 1.0))
        t = doc.get("time", {})
        T = float(t.get("T", 1.0))
        if "times" in t:
            times = tuple(t["times"])
        elif T == 0.0:
            times = (0.0,)
        else:
            k = int(t.get("snapshots", 11))
            times = (T,) if k == 1 else tuple(T * i / (k - 1) for i in range(k))
        init_doc = dict(doc.get("init", {"kind": "barenblatt"}))
        kind = init_doc.pop("kind")
        if "center" in init_doc:
            init_doc["center"] = _center(init_doc["center"], grid.dim, "init.center")
        init = InitialDatum(kind, init_doc)

        drift = None
        d = doc.get("drift", {})
        pot = d.get("potential", "none")
        if pot == "quadratic":
            drift = DriftSpec(QuadraticPotential(float(d.get("strength", 1.0)),
                                                 _center(d.get("center"), grid.dim, "drift.center")), d.get("lam"))
        elif pot == "linear":
            if "slope" not in d:
                raise ConfigError("linear drift needs drift.slope")
            drift = DriftSpec(LinearPotential(_center(d["slope"], grid.dim, "drift.slope")), d.get("lam"))
        elif set(d) - {"potential"}:
            raise ConfigError("drift parameters given without a potential")

        reaction = None
        r = doc.get("reaction", {})
        rate = r.get("rate", "none")
        if rate == "constant":
            value = float(r.get("value", 0.0))
            reaction = ReactionSpec(ConstantRate(value), float(r.get("g_plus_max", max(value, 0.0))),
                                    bool(r.get("subharmonic", False)))
        elif rate == "quadratic":
            rr = QuadraticRate(float(r.get("base", 0.0)), float(r.get("curvature", 0.0)))
            if "g_plus_max" not in r:
                raise ConfigError("quadratic reaction needs reaction.g_plus_max")
            reaction = ReactionSpec(rr, float(r["g_plus_max"]), bool(r.get("subharmonic", False)))
        elif set(r) - {"rate"}:
            raise ConfigError("reaction parameters given without a rate")

        cfg = SimConfig(grid, law, T, init, drift, reaction, float(t.get("cfl", 0.9)), times,
                        t.get("dt_max"), int(t.get("max_steps", 5_000_000)), bool(t.get("check_boundary", True)))
        if drift is not None and drift.lam is not None and hessian_margin(drift, grid) < -1e-6:
            raise ConfigError("drift potential violates the claimed semiconvexity constant lam")
        if reaction is not None:
            check_reaction(reaction, grid, times)
        return cfg
    except ConfigError:
        raise
    except StiffPressError as exc:
        raise ConfigError(f"{exc.tag}: {exc}") from None


def build_sweep_plan(doc: dict, base: Optional[SimConfig] = None, workers: int = 1, seed: int = 0):
    from .harness import SweepPlan

    if "sweep" not in doc:
        raise ConfigError("config has no [sweep] section")
    s = doc["sweep"]
    base = base or build_sim_config(doc)
    axis = s.get("axis", "gamma" if base.law.kind == "power" else "epsilon")
    return SweepPlan(base, tuple(s["values"]), axis, s.get("reference", "mesa"), s.get("ref_param"),
                     tuple(s.get("norms", ("hminus1", "l43"))), tuple(s.get("lp", ())), seed,
                     float(s.get("slope_tol", 0.15)), float(s.get("r2_min", 0.95)), int(s.get("calibrate", 2)),
                     float(s.get("residual_threshold", math.inf)), workers)
