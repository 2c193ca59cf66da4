"""Limit objects that finite-stiffness solutions are measured against.

The Barenblatt profile of the porous medium equation n_t = lap(n^gamma),

    U(t, x) = t^-a (C - k |x|^2 t^(-2a/d))_+^(1/(gamma-1)),
    a = d / (d (gamma-1) + 2),  k = a (gamma-1) / (2 d gamma),

converges as gamma grows to the indicator of a ball of volume M (the mesa
limit), which is also the stationary limit density of the pure equation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, optimize, special

from .core import BC, Field, Grid, cell_average
from .errors import DomainError, InvalidGrid

EXACT_INDICATOR = "exact_indicator"
EXACT_STATIONARY = "exact_stationary"
SURROGATE = "surrogate"


@dataclass(frozen=True)
class BarenblattConstants:
    gamma: float
    mass: float
    dim: int
    alpha: float
    k: float
    C: float

    @property
    def exponent(self) -> float:
        return 1.0 / (self.gamma - 1.0)

    def support_radius(self, t: float = 1.0) -> float:
        return math.sqrt(self.C / self.k) * t ** (self.alpha / self.dim)


def _sphere_area(d: int) -> float:
    return 2.0 if d == 1 else 2.0 * math.pi


@lru_cache(maxsize=256)
def barenblatt_constants(gamma: float, mass: float = 1.0, dim: int = 1) -> BarenblattConstants:
    """Exponents and the normalisation C, found by bisection on the mass integral."""
    if not gamma > 1.0:
        raise DomainError("Barenblatt profile needs gamma > 1")
    if not mass > 0.0:
        raise DomainError("Barenblatt profile needs positive mass")
    if dim not in (1, 2):
        raise DomainError("only d = 1, 2 supported")
    m = 1.0 / (gamma - 1.0)
    alpha = dim / (dim * (gamma - 1.0) + 2.0)
    k = alpha * (gamma - 1.0) / (2.0 * dim * gamma)
    # radial integral over the unit support: int_0^1 (1-s)^m (1+s)^m s^(d-1) ds
    shape_integral, _ = integrate.quad(lambda s: (1.0 + s) ** m * s ** (dim - 1), 0.0, 1.0,
                                       weight="alg", wvar=(0.0, m), epsabs=0.0, epsrel=1e-13)
    omega = _sphere_area(dim)

    def log_mass(logC: float) -> float:
        C = math.exp(logC)
        R = math.sqrt(C / k)
        return math.log(omega * shape_integral) + dim * math.log(R) + m * logC - math.log(mass)

    lo, hi = -50.0, 50.0
    logC = optimize.bisect(log_mass, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=400)
    return BarenblattConstants(float(gamma), float(mass), int(dim), alpha, k, math.exp(logC))


def _radius_sq(x, dim: int, center) -> np.ndarray:
    if dim == 1:
        xs = np.asarray(x[0] if isinstance(x, tuple) else x, dtype=float)
        c = np.atleast_1d(center)[0] if center is not None else 0.0
        return (xs - c) ** 2
    coords = x if isinstance(x, tuple) else tuple(np.moveaxis(np.asarray(x, dtype=float), -1, 0))
    c = np.zeros(dim) if center is None else np.broadcast_to(np.asarray(center, dtype=float), (dim,))
    return sum((np.asarray(xi, dtype=float) - ci) ** 2 for xi, ci in zip(coords, c))


def barenblatt(gamma: float, mass: float, dim: int, t: float, x, center=None) -> np.ndarray:
    """Pointwise Barenblatt density at time ``t``.

    ``x`` is an array of positions in 1D; in 2D either a tuple of coordinate
    arrays or an array whose last axis has length 2.
    """
    if not t > 0.0:
        raise DomainError("Barenblatt profile needs t > 0")
    bc = barenblatt_constants(float(gamma), float(mass), int(dim))
    r2 = _radius_sq(x, dim, center)
    base = bc.C - bc.k * r2 * t ** (-2.0 * bc.alpha / dim)
    out = np.zeros_like(base, dtype=float)
    pos = base > 0.0
    out[pos] = t ** (-bc.alpha) * np.exp(bc.exponent * np.log(base[pos]))
    return out


def barenblatt_pressure(gamma: float, mass: float, dim: int, t: float, x, center=None) -> np.ndarray:
    n = barenblatt(gamma, mass, dim, t, x, center)
    return gamma / (gamma - 1.0) * n ** (gamma - 1.0)


def _barenblatt_primitive_1d(bc: BarenblattConstants, y: np.ndarray) -> np.ndarray:
    """int_0^y U(1, s) ds, exact via the incomplete beta function."""
    m = bc.exponent
    scale = bc.C ** m * math.sqrt(bc.C / bc.k)
    z2 = np.minimum(y ** 2 * bc.k / bc.C, 1.0)
    return np.sign(y) * 0.5 * scale * special.beta(0.5, m + 1.0) * special.betainc(0.5, m + 1.0, z2)


def barenblatt_field(grid: Grid, gamma: float, mass: float = 1.0, t: float = 1.0, center=None,
                     order: int = 8) -> Field:
    """Cell averages of the Barenblatt profile (exact in 1D)."""
    if not t > 0.0:
        raise DomainError("Barenblatt profile needs t > 0")
    if grid.dim == 1:
        bc = barenblatt_constants(float(gamma), float(mass), 1)
        c = 0.0 if center is None else float(np.atleast_1d(center)[0])
        edges = (grid.edges(0) - c) * t ** (-bc.alpha)
        prim = _barenblatt_primitive_1d(bc, edges)
        return Field(grid, np.diff(prim) / grid.h)
    return cell_average(lambda *xs: barenblatt(gamma, mass, grid.dim, t, xs, center), grid, order)


def barenblatt_l1_to_indicator(gamma: float, mass: float = 1.0, t: float = 1.0) -> float:
    """Exact 1D L1 distance between U(t) and the indicator of [-M/2, M/2]."""
    bc = barenblatt_constants(float(gamma), float(mass), 1)
    a = t ** (-bc.alpha)

    def prim(x: float) -> float:
        return float(_barenblatt_primitive_1d(bc, np.array(x * a)))

    half = 0.5 * mass
    # |1_I - U| integrates to 2 (M - int_I U) when U <= 1 on I; add back where U > 1
    dist = 2.0 * (mass - 2.0 * prim(half))
    excess = lambda x: barenblatt(gamma, mass, 1, t, np.array([x]))[0] - 1.0
    if excess(0.0) > 0.0:
        xstar = half if excess(half) >= 0.0 else optimize.brentq(excess, 0.0, half, xtol=1e-15)
        dist += 4.0 * (prim(xstar) - xstar)
    return dist


def _disc_fractions(grid: Grid, radius: float, center: Sequence[float], sub: int = 32) -> np.ndarray:
    xs, ys = grid.mesh()
    cx, cy = center
    h = grid.h
    dist = np.hypot(xs - cx, ys - cy)
    frac = (dist <= radius).astype(float)
    cut = np.abs(dist - radius) <= h * math.sqrt(0.5) + 1e-14
    if np.any(cut):
        offs = (np.arange(sub) + 0.5) / sub - 0.5
        ox, oy = np.meshgrid(offs * h, offs * h, indexing="ij")
        px = xs[cut][:, None, None] + ox
        py = ys[cut][:, None, None] + oy
        inside = (px - cx) ** 2 + (py - cy) ** 2 <= radius ** 2
        frac[cut] = inside.mean(axis=(1, 2))
    return frac, cut


def mesa_field(grid: Grid, mass: float = 1.0, center=None) -> Field:
    """Indicator of the ball of volume ``mass``, cut cells carrying volume fractions."""
    if not mass > 0.0:
        raise DomainError("mesa mass must be positive")
    center = np.zeros(grid.dim) if center is None else np.broadcast_to(np.asarray(center, float), (grid.dim,))
    if grid.dim == 1:
        a, b = center[0] - 0.5 * mass, center[0] + 0.5 * mass
        if a < grid.lo[0] or b > grid.hi[0]:
            raise InvalidGrid("mesa interval does not fit in the box")
        e = grid.edges(0)
        overlap = np.clip(np.minimum(e[1:], b) - np.maximum(e[:-1], a), 0.0, None)
        return Field(grid, overlap / grid.h)
    radius = math.sqrt(mass / math.pi)
    if any(c - radius < lo or c + radius > hi for c, lo, hi in zip(center, grid.lo, grid.hi)):
        raise InvalidGrid("mesa disc does not fit in the box")
    frac, cut = _disc_fractions(grid, radius, center)
    # rescale the cut cells so the total volume is exactly ``mass``
    full = np.sum(frac[~cut])
    partial = np.sum(frac[cut])
    target = mass / grid.cell_volume - full
    if partial > 0:
        frac[cut] *= target / partial
    return Field(grid, frac)


@dataclass
class LimitReference:
    """Reference density/pressure history.

    Exact kinds are stationary: ``density_at`` returns the same field for any
    time and the pressure is identically zero. Surrogates wrap a trajectory
    and answer only at its snapshot times.
    """

    kind: str
    density: list[Field]
    pressure: list[Field]
    times: list[float] = field(default_factory=list)
    params: dict = field(default_factory=dict)

    @property
    def stationary(self) -> bool:
        return self.kind in (EXACT_INDICATOR, EXACT_STATIONARY)

    def _index(self, t: float) -> int:
        if self.stationary:
            return 0
        for i, s in enumerate(self.times):
            if abs(s - t) <= 1e-12 * max(1.0, abs(t)):
                return i
        raise KeyError(f"reference has no snapshot at t={t}")

    def density_at(self, t: float) -> Field:
        return self.density[self._index(t)]

    def pressure_at(self, t: float) -> Field:
        return self.pressure[self._index(t)]


def mesa_indicator(grid: Grid, mass: float = 1.0, center=None) -> LimitReference:
    dens = mesa_field(grid, mass, center)
    return LimitReference(EXACT_INDICATOR, [dens], [Field(grid, 0.0)], [],
                          {"mass": mass, "center": None if center is None else list(np.atleast_1d(center))})


def exact_stationary(grid: Grid, profile: Callable[..., np.ndarray]) -> LimitReference:
    dens = cell_average(profile, grid)
    return LimitReference(EXACT_STATIONARY, [dens], [Field(grid, 0.0)])


def surrogate_limit(config_template, param_ref: float, solve=None) -> LimitReference:
    """Run the template at a much stiffer law and wrap the result as a reference.

    ``param_ref`` is gamma for power laws and eps for singular laws.
    """
    from . import solver as _solver

    law = config_template.law
    cfg = replace(config_template, law=replace(law, param=float(param_ref)))
    traj = (solve or _solver.solve)(cfg)
    return LimitReference(SURROGATE, [s.density for s in traj.snapshots],
                          [s.pressure for s in traj.snapshots], [s.t for s in traj.snapshots],
                          {"law": law.kind, "param": float(param_ref)})
