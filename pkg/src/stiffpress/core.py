"""Uniform Cartesian grids, cell-averaged fields and the discrete calculus.

Scalars live at cell centres. Gradients live on cell faces: component ``a``
of a gradient holds forward differences along axis ``a``, so the value at
index ``i`` sits on the face between cells ``i`` and ``i+1``. With this
staggering ``divergence(gradient(f))`` is the compact five-point (three-point
in 1D) Laplacian, and summation by parts holds exactly::

    h^d sum f * div(F) = - h^d sum grad(f) . F

Periodic grids carry ``n`` faces per axis (the last one wraps). Grids with
homogeneous Dirichlet data carry ``n + 1`` faces per axis, including both
boundary faces, and treat the ghost layer as zero.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidGrid


class BC(str, enum.Enum):
    PERIODIC = "periodic"
    DIRICHLET_ZERO = "dirichlet_zero"

    @classmethod
    def parse(cls, value: "BC | str") -> "BC":
        if isinstance(value, BC):
            return value
        key = str(value).strip().lower().replace("-", "_")
        aliases = {"periodic": cls.PERIODIC, "dirichlet": cls.DIRICHLET_ZERO,
                   "dirichlet_zero": cls.DIRICHLET_ZERO, "dirichletzero": cls.DIRICHLET_ZERO}
        try:
            return aliases[key]
        except KeyError:
            raise InvalidGrid(f"unknown boundary condition {value!r}") from None


@dataclass(frozen=True)
class Grid:
    """Uniform isotropic box ``[lo, hi]`` split into ``n_cells`` cells per axis."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]
    n_cells: tuple[int, ...]
    bc: BC = BC.DIRICHLET_ZERO

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        n = tuple(int(v) for v in np.atleast_1d(self.n_cells))
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "n_cells", n)
        object.__setattr__(self, "bc", BC.parse(self.bc))
        if not (len(lo) == len(hi) == len(n)) or len(n) not in (1, 2):
            raise InvalidGrid("grid must be 1D or 2D with matching lo/hi/n_cells")
        if any(not np.isfinite(a) or not np.isfinite(b) or b <= a for a, b in zip(lo, hi)):
            raise InvalidGrid("need hi > lo on every axis")
        if any(k < 4 for k in n):
            raise InvalidGrid("need at least 4 cells per axis")
        widths = [(b - a) / k for a, b, k in zip(lo, hi, n)]
        if not np.allclose(widths, widths[0], rtol=1e-12, atol=0.0):
            raise InvalidGrid(f"cell widths differ between axes: {widths}")

    @classmethod
    def uniform(cls, dim: int, lo: float, hi: float, n: int, bc: BC | str = BC.DIRICHLET_ZERO) -> "Grid":
        return cls((lo,) * dim, (hi,) * dim, (n,) * dim, BC.parse(bc))

    @property
    def dim(self) -> int:
        return len(self.n_cells)

    @property
    def h(self) -> float:
        return (self.hi[0] - self.lo[0]) / self.n_cells[0]

    @property
    def shape(self) -> tuple[int, ...]:
        return self.n_cells

    @property
    def cell_volume(self) -> float:
        return self.h ** self.dim

    @property
    def periodic(self) -> bool:
        return self.bc is BC.PERIODIC

    def centers(self, axis: int = 0) -> np.ndarray:
        return self.lo[axis] + (np.arange(self.n_cells[axis]) + 0.5) * self.h

    def edges(self, axis: int = 0) -> np.ndarray:
        return self.lo[axis] + np.arange(self.n_cells[axis] + 1) * self.h

    def face_positions(self, axis: int = 0) -> np.ndarray:
        """Coordinates (along ``axis``) of the faces carrying gradient values."""
        if self.periodic:
            return self.lo[axis] + np.arange(1, self.n_cells[axis] + 1) * self.h
        return self.edges(axis)

    def mesh(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*(self.centers(a) for a in range(self.dim)), indexing="ij"))

    def face_shape(self, axis: int) -> tuple[int, ...]:
        shape = list(self.n_cells)
        if not self.periodic:
            shape[axis] += 1
        return tuple(shape)

    def face_mesh(self, axis: int) -> tuple[np.ndarray, ...]:
        coords = [self.centers(a) for a in range(self.dim)]
        coords[axis] = self.face_positions(axis)
        return tuple(np.meshgrid(*coords, indexing="ij"))


class Field:
    """Immutable cell-averaged scalar on a grid."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid, values):
        arr = np.array(values, dtype=float, copy=True)
        if arr.ndim == 0:
            arr = np.full(grid.shape, float(arr))
        if arr.shape != grid.shape:
            raise InvalidGrid(f"values of shape {arr.shape} do not match grid {grid.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", arr)

    def __setattr__(self, name, value):
        raise AttributeError("Field is immutable")

    def __reduce__(self):
        return (Field, (self.grid, self.values))

    def __repr__(self):
        return f"Field(shape={self.values.shape}, min={self.values.min():.3g}, max={self.values.max():.3g})"

    def _other(self, other):
        if isinstance(other, Field):
            if other.grid != self.grid:
                raise InvalidGrid("fields live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return Field(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return Field(self.grid, self.values - self._other(other))

    def __rsub__(self, other):
        return Field(self.grid, self._other(other) - self.values)

    def __mul__(self, other):
        return Field(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __neg__(self):
        return Field(self.grid, -self.values)


@dataclass(frozen=True)
class VectorField:
    """Face-located vector field, one array per axis (see module docstring)."""

    grid: Grid
    components: tuple[np.ndarray, ...]

    def __post_init__(self):
        comps = []
        for axis, c in enumerate(self.components):
            arr = np.array(c, dtype=float, copy=True)
            if arr.shape != self.grid.face_shape(axis):
                raise InvalidGrid(f"component {axis} has shape {arr.shape}, "
                                  f"expected {self.grid.face_shape(axis)}")
            arr.setflags(write=False)
            comps.append(arr)
        if len(comps) != self.grid.dim:
            raise InvalidGrid("need one component per axis")
        object.__setattr__(self, "components", tuple(comps))

    @classmethod
    def constant(cls, grid: Grid, vector: Sequence[float]) -> "VectorField":
        return cls(grid, tuple(np.full(grid.face_shape(a), float(v)) for a, v in enumerate(vector)))


def _forward_diff(values: np.ndarray, axis: int, periodic: bool, h: float) -> np.ndarray:
    if periodic:
        return (np.roll(values, -1, axis=axis) - values) / h
    pad = [(0, 0)] * values.ndim
    pad[axis] = (1, 1)
    return np.diff(np.pad(values, pad), axis=axis) / h


def _backward_diff(faces: np.ndarray, axis: int, periodic: bool, h: float) -> np.ndarray:
    if periodic:
        return (faces - np.roll(faces, 1, axis=axis)) / h
    return np.diff(faces, axis=axis) / h


def face_gradient(values: np.ndarray, grid: Grid) -> tuple[np.ndarray, ...]:
    """Raw-array version of :func:`gradient` used in inner loops."""
    return tuple(_forward_diff(values, a, grid.periodic, grid.h) for a in range(grid.dim))


def face_divergence(components: Sequence[np.ndarray], grid: Grid) -> np.ndarray:
    out = np.zeros(grid.shape)
    for a, comp in enumerate(components):
        out += _backward_diff(comp, a, grid.periodic, grid.h)
    return out


def laplacian_values(values: np.ndarray, grid: Grid) -> np.ndarray:
    """Compact (2d+1)-point Laplacian, written as div(grad) so the composition is exact."""
    return face_divergence(face_gradient(values, grid), grid)


def laplacian(f: Field) -> Field:
    """Compact second-order Laplacian; wraps on periodic grids, zero ghosts otherwise."""
    return Field(f.grid, laplacian_values(f.values, f.grid))


def gradient(f: Field) -> VectorField:
    return VectorField(f.grid, face_gradient(f.values, f.grid))


def divergence(F: VectorField) -> Field:
    return Field(F.grid, face_divergence(F.components, F.grid))


def mass(f: Field) -> float:
    return float(f.grid.cell_volume * np.sum(f.values))


def inner(f: Field, g: Field) -> float:
    return float(f.grid.cell_volume * np.sum(f.values * g.values))


def vector_inner(F: VectorField, G: VectorField) -> float:
    return float(F.grid.cell_volume * sum(np.sum(a * b) for a, b in zip(F.components, G.components)))


def cell_average(func: Callable[..., np.ndarray], grid: Grid, order: int = 6) -> Field:
    """Tensor Gauss-Legendre cell averages of ``func(*coords)``."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    nodes = 0.5 * nodes
    weights = 0.5 * weights
    total = np.zeros(grid.shape)
    centres = grid.mesh()
    for idx in np.ndindex(*(order,) * grid.dim):
        coords = [c + nodes[i] * grid.h for c, i in zip(centres, idx)]
        w = np.prod([weights[i] for i in idx])
        total += w * np.asarray(func(*coords), dtype=float)
    return Field(grid, total)


def sample(func: Callable[..., np.ndarray], grid: Grid) -> Field:
    return Field(grid, np.broadcast_to(np.asarray(func(*grid.mesh()), dtype=float), grid.shape))
