"""Norms, distances and residuals on cell-averaged fields.

The negative Sobolev norm is ||f||_{H^-1} = ||grad phi||_{L^2} with
-lap_h phi = f solved exactly for the discrete Laplacian of the grid:
FFT on periodic grids (mean-zero data only), the type-I sine transform with
zero ghosts, and optionally the type-II cosine transform for no-flux walls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy import fft, signal

from . import core
from .core import Field, Grid, VectorField
from .errors import MassMismatch, MetricError, NonZeroMean

MEAN_TOL = 1e-12


@dataclass(frozen=True)
class PoissonSolution:
    phi: Field
    grad_phi: VectorField
    residual_norm: float
    energy: float  # ||grad phi||_{L^2}, evaluated spectrally


def _symbol(grid: Grid, kind: str) -> np.ndarray:
    """Eigenvalues of -lap_h in the transform basis of ``kind``."""
    h2 = grid.h ** 2
    parts = []
    for n in grid.n_cells:
        if kind == "fft":
            k = np.arange(n)
            lam = 2.0 / h2 * (1.0 - np.cos(2.0 * np.pi * k / n))
        elif kind == "dst":
            k = np.arange(1, n + 1)
            lam = 2.0 / h2 * (1.0 - np.cos(np.pi * k / (n + 1)))
        else:  # dct-II, Neumann
            k = np.arange(n)
            lam = 2.0 / h2 * (1.0 - np.cos(np.pi * k / n))
        parts.append(lam)
    return sum(np.meshgrid(*parts, indexing="ij", sparse=True))


def _neumann_laplacian(values: np.ndarray, grid: Grid) -> np.ndarray:
    padded = np.pad(values, 1, mode="edge")
    out = -2.0 * grid.dim * values
    inner = [slice(1, -1)] * grid.dim
    for a in range(grid.dim):
        lo, hi = list(inner), list(inner)
        lo[a] = slice(0, -2)
        hi[a] = slice(2, None)
        out = out + padded[tuple(lo)] + padded[tuple(hi)]
    return out / grid.h ** 2


def _neumann_gradient(values: np.ndarray, grid: Grid) -> tuple[np.ndarray, ...]:
    comps = []
    for a in range(grid.dim):
        d = np.diff(values, axis=a) / grid.h
        pad = [(0, 0)] * grid.dim
        pad[a] = (1, 1)
        comps.append(np.pad(d, pad))
    return tuple(comps)


def _check_mean(f: Field) -> None:
    scale = max(1.0, float(np.max(np.abs(f.values))))
    if abs(float(np.mean(f.values))) > MEAN_TOL * scale:
        raise NonZeroMean(f"mean {float(np.mean(f.values)):.3e} is not zero; "
                          "compare fields of equal mass")


def poisson_solve(f: Field, noflux: bool = False) -> PoissonSolution:
    """Solve -lap_h phi = f exactly in the eigenbasis of the discrete Laplacian."""
    grid = f.grid
    vals = f.values
    if noflux:
        if grid.periodic:
            raise MetricError("no-flux solve needs a bounded (non-periodic) grid")
        _check_mean(f)
        coef = fft.dctn(vals, type=2, norm="ortho")
        lam = _symbol(grid, "dct")
        lam_safe = np.where(lam > 0, lam, 1.0)
        phic = np.where(lam > 0, coef / lam_safe, 0.0)
        phi = fft.idctn(phic, type=2, norm="ortho")
        grads = _neumann_gradient(phi, grid)
        resid = -_neumann_laplacian(phi, grid) - vals
        energy2 = grid.cell_volume * float(np.sum(coef ** 2 / lam_safe * (lam > 0)))
    elif grid.periodic:
        _check_mean(f)
        coef = fft.fftn(vals)
        lam = _symbol(grid, "fft")
        lam_safe = np.where(lam > 0, lam, 1.0)
        phic = np.where(lam > 0, coef / lam_safe, 0.0)
        phi = fft.ifftn(phic).real
        grads = core.face_gradient(phi, grid)
        resid = -core.laplacian_values(phi, grid) - vals
        n_total = vals.size
        energy2 = grid.cell_volume / n_total * float(np.sum(np.abs(coef) ** 2 / lam_safe * (lam > 0)))
    else:
        coef = fft.dstn(vals, type=1, norm="ortho")
        lam = _symbol(grid, "dst")
        phi = fft.idstn(coef / lam, type=1, norm="ortho")
        grads = core.face_gradient(phi, grid)
        resid = -core.laplacian_values(phi, grid) - vals
        energy2 = grid.cell_volume * float(np.sum(coef ** 2 / lam))
    res = math.sqrt(grid.cell_volume * float(np.sum(resid ** 2)))
    return PoissonSolution(Field(grid, phi), VectorField(grid, grads), res, math.sqrt(max(energy2, 0.0)))


def hminus1_norm(f: Field, noflux: bool = False) -> float:
    """||grad phi||_{L^2} for -lap phi = f (see module docstring for the boundary handling)."""
    return poisson_solve(f, noflux).energy


def lp_norm(f: Field, p: float) -> float:
    if p == math.inf or p == "inf":
        return float(np.max(np.abs(f.values)))
    p = float(p)
    if not p >= 1.0:
        raise MetricError(f"L^p norm needs p >= 1, got {p}")
    return float((f.grid.cell_volume * np.sum(np.abs(f.values) ** p)) ** (1.0 / p))


def bv_seminorm(f: Field, isotropic: bool = False) -> float:
    """Discrete total variation.

    Default is the anisotropic face sum h^(d-1) sum |jump| (zero extension
    outside a non-periodic box). ``isotropic=True`` uses vertex gradients
    from 2x2 cell blocks, h^d sum |grad f|, which approximates perimeters of
    curved sets without the 4/pi anisotropy bias.
    """
    grid = f.grid
    h = grid.h
    if not isotropic or grid.dim == 1:
        jumps = core.face_gradient(f.values, grid)
        return float(h ** grid.dim * sum(np.sum(np.abs(j)) for j in jumps))
    v = np.pad(f.values, 1, mode="wrap" if grid.periodic else "constant")
    if grid.periodic:
        v = v[1:, 1:]
    gx = (v[1:, :-1] + v[1:, 1:] - v[:-1, :-1] - v[:-1, 1:]) / (2 * h)
    gy = (v[:-1, 1:] + v[1:, 1:] - v[:-1, :-1] - v[1:, :-1]) / (2 * h)
    return float(h * h * np.sum(np.hypot(gx, gy)))


def _quantiles(f: Field, q: np.ndarray) -> np.ndarray:
    edges = f.grid.edges(0)
    cdf = np.concatenate([[0.0], np.cumsum(f.values) * f.grid.h])
    cdf /= cdf[-1]
    # cell i with cdf[i] < q <= cdf[i+1]; vacuum cells never satisfy this
    i = np.clip(np.searchsorted(cdf, q, side="left") - 1, 0, len(cdf) - 2)
    lo, hi = cdf[i], cdf[i + 1]
    return edges[i] + (q - lo) / (hi - lo) * f.grid.h


@dataclass(frozen=True)
class W2Result:
    value: float
    error: float


def _check_densities_1d(f: Field, g: Field) -> float:
    if f.grid.dim != 1 or g.grid.dim != 1:
        raise MetricError("W2 is implemented in one dimension only")
    if np.min(f.values) < 0 or np.min(g.values) < 0:
        raise MetricError("W2 needs non-negative densities")
    mf, mg = core.mass(f), core.mass(g)
    if mf <= 0:
        raise MetricError("W2 needs positive mass")
    if abs(mf - mg) > 1e-10 * max(1.0, mf):
        raise MassMismatch(f"masses differ: {mf!r} vs {mg!r}")
    return mf


def w2_distance_1d_detail(f: Field, g: Field, nodes: int = 10_000) -> W2Result:
    """W2 via midpoint quadrature of the quantile-function L2 distance.

    The error term is the change against a half-resolution quadrature.
    """
    m = _check_densities_1d(f, g)

    def w2(k):
        q = (np.arange(k) + 0.5) / k
        diff = _quantiles(f, q) - _quantiles(g, q)
        return math.sqrt(m * float(np.mean(diff ** 2)))

    fine = w2(nodes)
    coarse = w2(max(nodes // 2, 1))
    return W2Result(fine, abs(fine - coarse))


def w2_distance_1d(f: Field, g: Field, nodes: int = 10_000) -> float:
    return w2_distance_1d_detail(f, g, nodes).value


@dataclass(frozen=True)
class SandwichResult:
    w2: float
    hm1: float
    left_ok: bool
    right_ok: bool
    tol: float

    @property
    def ok(self) -> bool:
        return self.left_ok and self.right_ok


def sandwich_check(f: Field, g: Field, n_lower: float, nodes: int = 10_000) -> SandwichResult:
    """Compare W2 with the H^-1 distance for densities in [n_lower, 1].

    Checks ``hm1 <= w2 + tol`` and ``w2 <= 2/sqrt(n_lower) * hm1 + tol``.
    The H^-1 distance uses no-flux walls, i.e. the whole-line norm of the
    zero-extended difference.
    """
    if not n_lower > 0:
        raise MetricError("n_lower must be positive")
    for name, d in (("f", f), ("g", g)):
        if np.min(d.values) < n_lower - 1e-12 or np.max(d.values) > 1.0 + 1e-12:
            raise MetricError(f"{name} must take values in [n_lower, 1]")
    w = w2_distance_1d_detail(f, g, nodes)
    hm1 = hminus1_norm(f - g, noflux=True)
    tol = 1e-6 + w.error
    return SandwichResult(w.value, hm1, hm1 <= w.value + tol,
                          w.value <= 2.0 / math.sqrt(n_lower) * hm1 + tol, tol)


def interpolation_ratio(f: Field) -> float:
    """||f||_{4/3} / (|f|_BV^(1/2) ||f||_{H^-1}^(1/2)).

    On periodic grids the mean is removed before the H^-1 solve.
    """
    if not np.any(f.values != 0):
        raise MetricError("interpolation ratio of the zero field")
    if np.min(f.values) < 0:
        raise MetricError("interpolation ratio expects a non-negative field")
    g = f - float(np.mean(f.values)) if f.grid.periodic else f
    bv = bv_seminorm(f)
    hm1 = hminus1_norm(g)
    if bv == 0.0 or hm1 == 0.0:
        raise MetricError("degenerate field: zero BV seminorm or H^-1 norm")
    return lp_norm(f, 4.0 / 3.0) / math.sqrt(bv * hm1)


def relation_residual(n: Field, p: Field, absolute: bool = False) -> float:
    """h^d sum p (1 - n); ``absolute`` sums |p (1 - n)| instead."""
    prod = p.values * (1.0 - n.values)
    if absolute:
        prod = np.abs(prod)
    return float(n.grid.cell_volume * np.sum(prod))


# --- weak complementarity residual -------------------------------------------------------------

# (centre, radius) of each tensorised bump as fractions of the box width
TEST_DICTIONARY: tuple[tuple[float, float], ...] = (
    (0.50, 0.08), (0.50, 0.15), (0.50, 0.30), (0.42, 0.10),
    (0.58, 0.10), (0.46, 0.05), (0.54, 0.05), (0.50, 0.45),
)


def _bump(s: np.ndarray) -> np.ndarray:
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
    return out


def test_functions(grid: Grid) -> list[Field]:
    xs = grid.mesh()
    out = []
    for cf, rf in TEST_DICTIONARY:
        vals = np.ones(grid.shape)
        for a, x in enumerate(xs):
            width = grid.hi[a] - grid.lo[a]
            vals = vals * _bump((x - (grid.lo[a] + cf * width)) / (rf * width))
        out.append(Field(grid, vals))
    return out


def _face_average(values: np.ndarray, grid: Grid, axis: int) -> np.ndarray:
    if grid.periodic:
        return 0.5 * (values + np.roll(values, -1, axis=axis))
    pad = [(0, 0)] * grid.dim
    pad[axis] = (1, 1)
    v = np.pad(values, pad)
    lo = [slice(None)] * grid.dim
    hi = [slice(None)] * grid.dim
    lo[axis] = slice(0, -1)
    hi[axis] = slice(1, None)
    return 0.5 * (v[tuple(lo)] + v[tuple(hi)])


def _as_values(obj, grid: Grid, t: float, is_rate: bool) -> np.ndarray:
    if obj is None:
        return np.zeros(grid.shape)
    if isinstance(obj, Field):
        return obj.values
    if callable(obj):
        xs = grid.mesh()
        raw = obj(t, *xs) if is_rate else obj(*xs)
        return np.broadcast_to(np.asarray(raw, dtype=float), grid.shape)
    return np.full(grid.shape, float(obj))


def complementarity_terms(n: Field, p: Field, V=None, g=None, variant: str = "power",
                          t: float = 0.0) -> list[float]:
    """Weak residuals int psi p^k (lap p + lap V + g) for every dictionary psi.

    k = 1 for the power law, 2 for the singular law. The pressure Laplacian is
    moved onto psi:
        int psi p lap p   = -int psi |grad p|^2   + 1/2 int p^2 lap psi
        int psi p^2 lap p = -2 int psi p |grad p|^2 + 1/3 int p^3 lap psi
    """
    grid = p.grid
    k = {"power": 1, "singular": 2}.get(variant)
    if k is None:
        raise MetricError(f"unknown complementarity variant {variant!r}")
    pv = p.values
    vol = grid.cell_volume
    gp = core.face_gradient(pv, grid)
    lapV = core.laplacian_values(_as_values(V, grid, t, False), grid) if V is not None else 0.0
    source = lapV + _as_values(g, grid, t, True)
    weight = 1.0 if k == 1 else 2.0 * pv
    out = []
    for psi in test_functions(grid):
        pw = psi.values * weight
        grad_sq = sum(np.sum(_face_average(pw, grid, a) * comp ** 2) for a, comp in enumerate(gp))
        lap_psi = core.laplacian_values(psi.values, grid)
        val = -grad_sq + np.sum(pv ** (k + 1) * lap_psi) / (k + 1) + np.sum(psi.values * pv ** k * source)
        out.append(float(vol * val))
    return out


def complementarity_residual(n: Field, p: Field, V=None, g=None, variant: str = "power",
                             t: float = 0.0) -> float:
    return max(abs(v) for v in complementarity_terms(n, p, V, g, variant, t))


# --- two-dimensional diagnostics -----------------------------------------------------------------

@dataclass(frozen=True)
class Diagnostics2D:
    mass: float
    second_moment: float
    entropy: float
    interaction: float
    log_hls_lhs: float
    log_hls_bound: float

    @property
    def log_hls_ok(self) -> bool:
        return self.log_hls_lhs >= self.log_hls_bound - 1e-10


def log_hls_constant(M: float) -> float:
    return M * (1.0 + math.log(math.pi) - math.log(M))


def _log_kernel(grid: Grid) -> np.ndarray:
    offs = [np.arange(-(n - 1), n) * grid.h for n in grid.n_cells]
    dx, dy = np.meshgrid(*offs, indexing="ij")
    r = np.hypot(dx, dy)
    K = np.zeros_like(r)
    K[r > 0] = np.log(r[r > 0])
    return K


def diagnostics_2d(f: Field) -> Diagnostics2D:
    grid = f.grid
    if grid.dim != 2:
        raise MetricError("diagnostics_2d needs a 2D field")
    v = f.values
    if np.min(v) < 0:
        raise MetricError("density must be non-negative")
    M = core.mass(f)
    if not M > 0:
        raise MetricError("density must have positive mass")
    h2 = grid.cell_volume
    xs, ys = grid.mesh()
    second = float(h2 * np.sum((xs ** 2 + ys ** 2) * v))
    pos = v > 0
    entropy = float(h2 * np.sum(v[pos] * np.log(v[pos])))
    n0, n1 = grid.n_cells
    conv = signal.convolve(v, _log_kernel(grid), mode="full")[n0 - 1:2 * n0 - 1, n1 - 1:2 * n1 - 1]
    interaction = float(h2 * h2 * np.sum(v * conv))
    lhs = entropy + 2.0 / M * interaction
    return Diagnostics2D(M, second, entropy, interaction, lhs, -log_hls_constant(M))
