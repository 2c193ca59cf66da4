"""Named initial densities."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Field, Grid, cell_average
from .errors import ConfigError
from .pressure import POWER, PressureLaw

KINDS = ("barenblatt", "mesa", "bump", "constant", "annulus")


@dataclass(frozen=True)
class InitialDatum:
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown initial datum {self.kind!r}; choose from {KINDS}")

    def __hash__(self):
        return hash((self.kind, tuple(sorted((k, repr(v)) for k, v in self.params.items()))))


def _center(params: dict, dim: int) -> np.ndarray:
    c = params.get("center", 0.0)
    return np.broadcast_to(np.asarray(c, dtype=float), (dim,))


def _radius(xs, center) -> np.ndarray:
    return np.sqrt(sum((x - c) ** 2 for x, c in zip(xs, center)))


def initial_density(datum: InitialDatum, grid: Grid, law: PressureLaw) -> Field:
    from . import limits

    p = datum.params
    center = _center(p, grid.dim)
    if datum.kind == "barenblatt":
        gamma = float(p.get("gamma", law.param if law.kind == POWER else 0.0))
        if not gamma > 1.0:
            raise ConfigError("barenblatt datum needs a power law or an explicit gamma")
        return limits.barenblatt_field(grid, gamma, float(p.get("mass", 1.0)), float(p.get("t0", 1.0)), center)
    if datum.kind == "mesa":
        return limits.mesa_field(grid, float(p.get("mass", 1.0)), center)
    if datum.kind == "constant":
        return Field(grid, float(p.get("value", 1.0)))
    if datum.kind == "bump":
        # height * (1 - (r/R)^2)_+^power, smooth enough for power >= 2
        height = float(p.get("height", 0.9))
        R = float(p.get("radius", 0.5))
        power = float(p.get("power", 2.0))

        def bump(*xs):
            s = np.clip(1.0 - (_radius(xs, center) / R) ** 2, 0.0, None)
            return height * s ** power

        return cell_average(bump, grid)
    # annulus: focusing configuration, support outside a hole that closes in finite time
    height = float(p.get("height", 1.0))
    r_in = float(p.get("inner", 0.25))
    r_out = float(p.get("outer", 0.6))

    def ring(*xs):
        r = _radius(xs, center)
        return np.where((r >= r_in) & (r <= r_out), height, 0.0)

    return cell_average(ring, grid, order=8)
