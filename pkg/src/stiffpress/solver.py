"""Explicit finite-volume integration of

    n_t = lap A(n) + div(n grad V) + n g

on a :class:`~stiffpress.core.Grid`.

Diffusion uses the compact Laplacian of the flux potential A(n), the drift is
first-order upwind on the face velocity u = -grad V, and the reaction is
explicit Euler. Time steps follow :func:`stable_dt`, which keeps the update
monotone so that positivity and the maximum principle carry over.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from . import core
from .core import BC, Field, Grid
from .errors import (BoundaryTouched, ConfigError, DomainViolation, MaximumPrincipleViolation,
                     NegativeDensity, NonFiniteState, TimeoutExceeded)
from .initial import InitialDatum, initial_density
from .pressure import SINGULAR, PressureLaw

log = logging.getLogger(__name__)

CLIP_TOL = 1e-14
SINGULAR_MARGIN = 1e-12
BOUNDARY_CELLS = 2
BOUNDARY_TOL = 1e-10


# --- drift potentials and reaction rates -----------------------------------------------------
# Plain classes rather than closures so configurations stay picklable.

@dataclass(frozen=True)
class QuadraticPotential:
    """V(x) = strength/2 |x - center|^2."""

    strength: float
    center: tuple[float, ...] = (0.0,)

    def __call__(self, *xs):
        c = np.broadcast_to(np.asarray(self.center, float), (len(xs),))
        return 0.5 * self.strength * sum((x - ci) ** 2 for x, ci in zip(xs, c))


@dataclass(frozen=True)
class LinearPotential:
    """V(x) = slope . x"""

    slope: tuple[float, ...]

    def __call__(self, *xs):
        s = np.broadcast_to(np.asarray(self.slope, float), (len(xs),))
        return sum(si * x for si, x in zip(s, xs))


@dataclass(frozen=True)
class ConstantRate:
    rate: float

    def __call__(self, t, *xs):
        return np.full(np.shape(xs[0]), self.rate)


@dataclass(frozen=True)
class QuadraticRate:
    """g(t, x) = base + curvature |x|^2; subharmonic for curvature >= 0."""

    base: float
    curvature: float

    def __call__(self, t, *xs):
        return self.base + self.curvature * sum(x ** 2 for x in xs)


@dataclass(frozen=True)
class DriftSpec:
    potential: Callable[..., np.ndarray]
    lam: Optional[float] = None


@dataclass(frozen=True)
class ReactionSpec:
    rate: Callable[..., np.ndarray]
    g_plus_max: float
    subharmonic: bool = False


def hessian_margin(drift: DriftSpec, grid: Grid, samples: int = 9, step: float = 1e-3) -> float:
    """min over coarse sample points of the smallest eigenvalue of
    D2V - (lam + tr(D2V)/2) I, by central finite differences."""
    lam = 0.0 if drift.lam is None else drift.lam
    axes = [np.linspace(grid.lo[a], grid.hi[a], samples) for a in range(grid.dim)]
    pts = np.stack([m.ravel() for m in np.meshgrid(*axes, indexing="ij")], axis=1)
    V = drift.potential
    d = grid.dim
    worst = np.inf
    for p in pts:
        H = np.empty((d, d))
        for i in range(d):
            for j in range(d):
                ei = np.eye(d)[i] * step
                ej = np.eye(d)[j] * step
                f = lambda q: float(np.asarray(V(*q)))
                H[i, j] = (f(p + ei + ej) - f(p + ei - ej) - f(p - ei + ej) + f(p - ei - ej)) / (4 * step * step)
        M = H - (lam + 0.5 * np.trace(H)) * np.eye(d)
        worst = min(worst, float(np.linalg.eigvalsh(0.5 * (M + M.T)).min()))
    return worst


def check_reaction(reaction: ReactionSpec, grid: Grid, times: Sequence[float]) -> None:
    xs = grid.mesh()
    for t in times:
        g = np.asarray(reaction.rate(t, *xs), dtype=float)
        if np.max(g) > reaction.g_plus_max + 1e-12:
            raise ConfigError(f"reaction exceeds declared g_plus_max at t={t}")
        if reaction.subharmonic:
            lap = core.laplacian_values(g, grid)
            inner = tuple(slice(2, -2) for _ in range(grid.dim))
            if np.min(lap[inner]) < -1e-8:
                raise ConfigError("declared subharmonic reaction has negative discrete Laplacian")


# --- configuration and results ------------------------------------------------------------------

@dataclass(frozen=True)
class SimConfig:
    grid: Grid
    law: PressureLaw
    T: float
    init: InitialDatum
    drift: Optional[DriftSpec] = None
    reaction: Optional[ReactionSpec] = None
    cfl: float = 0.9
    snapshot_times: tuple[float, ...] = ()
    dt_max: Optional[float] = None
    max_steps: int = 5_000_000
    check_boundary: bool = True

    def __post_init__(self):
        if not (self.T >= 0.0 and math.isfinite(self.T)):
            raise ConfigError("T must be finite and >= 0")
        if not 0.0 < self.cfl <= 1.0:
            raise ConfigError("cfl must lie in (0, 1]")
        times = tuple(float(t) for t in self.snapshot_times)
        if not times:
            times = (0.0,) if self.T == 0.0 else tuple(np.linspace(0.0, self.T, 11))
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ConfigError("snapshot_times must be strictly increasing")
        if times[0] < 0.0 or times[-1] > self.T * (1 + 1e-14):
            raise ConfigError("snapshot_times must lie in [0, T]")
        object.__setattr__(self, "snapshot_times", times)
        if self.reaction is not None and self.reaction.g_plus_max < 0:
            raise ConfigError("g_plus_max must be >= 0")

    @property
    def effective_dt_max(self) -> float:
        if self.dt_max is not None:
            return self.dt_max
        return self.T / 1000.0 if self.T > 0 else math.inf


@dataclass(frozen=True)
class Snapshot:
    t: float
    density: Field
    pressure: Field


@dataclass
class Trajectory:
    snapshots: list[Snapshot]
    diagnostics: dict[str, np.ndarray]
    steps: int = 0
    initial_max_pressure: float = 0.0

    @property
    def times(self) -> list[float]:
        return [s.t for s in self.snapshots]

    @property
    def final(self) -> Snapshot:
        return self.snapshots[-1]


# --- numerics --------------------------------------------------------------------------------

class _Operator:
    """Precomputed, per-configuration pieces of the right-hand side."""

    def __init__(self, config: SimConfig):
        self.config = config
        grid = config.grid
        self.grid = grid
        self.mesh = grid.mesh()
        self.velocity = None
        self.max_speed = 0.0
        if config.drift is not None:
            V = np.asarray(config.drift.potential(*self.mesh), dtype=float)
            V = np.broadcast_to(V, grid.shape)
            u = []
            for a in range(grid.dim):
                if grid.periodic:
                    du = -(np.roll(V, -1, axis=a) - V) / grid.h
                else:
                    # boundary faces use the one-sided interior slope
                    inner = -np.diff(V, axis=a) / grid.h
                    first = np.take(inner, [0], axis=a)
                    last = np.take(inner, [-1], axis=a)
                    du = np.concatenate([first, inner, last], axis=a)
                u.append(du)
            self.velocity = tuple(u)
            self.max_speed = max(float(np.max(np.abs(c))) for c in u)
        self._static_rate = None

    def rate(self, t: float) -> Optional[np.ndarray]:
        r = self.config.reaction
        if r is None:
            return None
        return np.broadcast_to(np.asarray(r.rate(t, *self.mesh), dtype=float), self.grid.shape)

    def drift_term(self, n: np.ndarray) -> np.ndarray:
        grid = self.grid
        out = np.zeros_like(n)
        for a, u in enumerate(self.velocity):
            if grid.periodic:
                left, right = n, np.roll(n, -1, axis=a)
            else:
                pad = [(0, 0)] * n.ndim
                pad[a] = (1, 1)
                p = np.pad(n, pad)
                sl = [slice(None)] * n.ndim
                sr = [slice(None)] * n.ndim
                sl[a] = slice(0, -1)
                sr[a] = slice(1, None)
                left, right = p[tuple(sl)], p[tuple(sr)]
            flux = np.where(u > 0.0, u * left, u * right)
            if grid.periodic:
                out -= (flux - np.roll(flux, 1, axis=a)) / grid.h
            else:
                out -= np.diff(flux, axis=a) / grid.h
        return out

    def rhs(self, n: np.ndarray, t: float) -> np.ndarray:
        law = self.config.law
        out = core.laplacian_values(law.flux_potential(n), self.grid)
        if self.velocity is not None:
            out = out + self.drift_term(n)
        g = self.rate(t)
        if g is not None:
            out = out + n * g
        return out


def _check_state(n: np.ndarray, config: SimConfig) -> np.ndarray:
    if not np.all(np.isfinite(n)):
        raise NonFiniteState("non-finite density")
    lo = float(np.min(n))
    if lo < 0.0:
        if lo < -CLIP_TOL:
            raise NegativeDensity(f"negative undershoot {lo:.3e}")
        n = np.maximum(n, 0.0)
    if config.law.kind == SINGULAR and float(np.max(n)) >= 1.0 - SINGULAR_MARGIN:
        raise DomainViolation(f"singular-law density reached {float(np.max(n))!r}")
    grid = config.grid
    if config.check_boundary and not grid.periodic:
        m = BOUNDARY_CELLS
        for a in range(grid.dim):
            edge = np.concatenate([np.take(n, range(m), axis=a).ravel(),
                                   np.take(n, range(n.shape[a] - m, n.shape[a]), axis=a).ravel()])
            if float(np.max(edge)) > BOUNDARY_TOL:
                raise BoundaryTouched("density reached the box margin; enlarge the box")
    return n


def _max_diffusivity(law: PressureLaw, nmax: float) -> float:
    if law.kind == SINGULAR and nmax >= 1.0:
        raise DomainViolation("diffusivity is infinite at n = 1")
    # A' is increasing for both laws
    return float(law.flux_potential_derivative(max(nmax, 0.0)))


def _dt_from(nmax: float, op: _Operator) -> float:
    config = op.config
    grid = config.grid
    limits = []
    dmax = _max_diffusivity(config.law, nmax)
    if dmax > 0.0:
        limits.append(grid.h ** 2 / (2 * grid.dim * dmax))
    if op.max_speed > 0.0:
        limits.append(grid.h / (2.0 * op.max_speed))
    if config.reaction is not None and config.reaction.g_plus_max > 0.0:
        limits.append(0.5 / config.reaction.g_plus_max)
    dt = config.cfl * min(limits) if limits else math.inf
    return min(dt, config.effective_dt_max)


def stable_dt(state: Field, config: SimConfig) -> float:
    """cfl * min(h^2/(2 d max A'), h/(2 max|grad V|), 0.5/g_plus_max), capped by dt_max."""
    return _dt_from(float(np.max(state.values)), _Operator(config))


def step(state: Field, t: float, dt: float, config: SimConfig, _op: Optional[_Operator] = None) -> Field:
    """One explicit Euler step of size ``dt`` from time ``t``."""
    op = _op or _Operator(config)
    n = state.values
    new = n + dt * op.rhs(n, t)
    return Field(config.grid, _check_state(new, config))


def solve(config: SimConfig) -> Trajectory:
    """March from 0 to T, landing exactly on each snapshot time."""
    grid = config.grid
    law = config.law
    n0 = initial_density(config.init, grid, law).values
    n = _check_state(n0.copy(), config)
    op = _Operator(config)
    conservative_pressure = config.drift is None and config.reaction is None
    p0 = float(law.pressure(float(np.max(n))))
    p_bound = p0 + 1e-10

    diag = {k: [] for k in ("t", "dt", "mass", "min", "max", "max_pressure")}
    vol = grid.cell_volume

    def record(t, dt):
        diag["t"].append(t)
        diag["dt"].append(dt)
        diag["mass"].append(vol * float(np.sum(n)))
        diag["min"].append(float(np.min(n)))
        nmax = float(np.max(n))
        diag["max"].append(nmax)
        diag["max_pressure"].append(float(law.pressure(nmax)))

    snaps: list[Snapshot] = []

    def snapshot(t):
        d = Field(grid, n)
        snaps.append(Snapshot(t, d, Field(grid, law.pressure(n))))

    t = 0.0
    record(t, 0.0)
    steps = 0
    for target in config.snapshot_times:
        while t < target:
            dt = _dt_from(float(np.max(n)), op)
            last = dt >= target - t
            if last:
                dt = target - t
            new = n + dt * op.rhs(n, t)
            n = _check_state(new, config)
            t = target if last else t + dt
            steps += 1
            record(t, dt)
            if conservative_pressure and diag["max_pressure"][-1] > p_bound:
                raise MaximumPrincipleViolation(
                    f"max pressure {diag['max_pressure'][-1]:.6g} exceeds initial {p0:.6g}")
            if steps > config.max_steps:
                raise TimeoutExceeded(f"step budget {config.max_steps} exhausted at t={t:.6g}")
        snapshot(target)
    log.debug("solve: %d steps for law %s(%g)", steps, law.kind, law.param)
    return Trajectory(snaps, {k: np.asarray(v) for k, v in diag.items()}, steps, p0)
