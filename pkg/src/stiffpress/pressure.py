"""Constitutive pressure laws and the nonlinearities derived from them.

Two laws are supported:

* power:    p(n) = gamma/(gamma-1) * n**(gamma-1),          gamma > 1
* singular: p(n) = eps * n / (1 - n),                      eps > 0, 0 <= n < 1

``flux_potential`` is A(n) = int_0^n s p'(s) ds, so that div(n grad p) = lap A(n).
All functions accept scalars or arrays and return the same kind.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

POWER = "power"
SINGULAR = "singular"

# below this density the singular A(n) is summed as a series to avoid cancellation
_SERIES_CUTOFF = 0.05
_SERIES_TERMS = np.arange(2, 40)


@dataclass(frozen=True)
class PressureLaw:
    kind: str
    param: float
    p_max: float = 1.0

    def __post_init__(self):
        kind = str(self.kind).lower()
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "param", float(self.param))
        object.__setattr__(self, "p_max", float(self.p_max))
        if kind == POWER:
            if not self.param > 1.0:
                raise DomainError(f"power law needs gamma > 1, got {self.param}")
        elif kind == SINGULAR:
            if not self.param > 0.0:
                raise DomainError(f"singular law needs eps > 0, got {self.param}")
        else:
            raise DomainError(f"unknown pressure law {self.kind!r}")
        if not (math.isfinite(self.p_max) and self.p_max > 0.0):
            raise DomainError("p_max must be positive and finite")

    @classmethod
    def power(cls, gamma: float, p_max: float = 1.0) -> "PressureLaw":
        return cls(POWER, gamma, p_max)

    @classmethod
    def singular(cls, eps: float, p_max: float = 1.0) -> "PressureLaw":
        return cls(SINGULAR, eps, p_max)

    @property
    def gamma(self) -> float:
        if self.kind != POWER:
            raise AttributeError("singular law has no gamma")
        return self.param

    @property
    def eps(self) -> float:
        if self.kind != SINGULAR:
            raise AttributeError("power law has no eps")
        return self.param

    @property
    def stiffness(self) -> float:
        """gamma for the power law, 1/eps for the singular law."""
        return self.param if self.kind == POWER else 1.0 / self.param

    def pressure(self, n):
        return pressure(self, n)

    def flux_potential(self, n):
        return flux_potential(self, n)

    def flux_potential_derivative(self, n):
        return flux_potential_derivative(self, n)

    def density_cap(self) -> float:
        return density_cap(self)


def _check(law: PressureLaw, n) -> np.ndarray:
    arr = np.asarray(n, dtype=float)
    if arr.size and np.min(arr) < 0.0:
        raise DomainError("density must be non-negative")
    if law.kind == SINGULAR and arr.size and np.max(arr) >= 1.0:
        raise DomainError(f"singular law needs n < 1, got max {np.max(arr)!r}")
    return arr


def _ret(arr: np.ndarray, like):
    return float(arr) if np.ndim(like) == 0 else arr


def _safe_power(n: np.ndarray, q: float) -> np.ndarray:
    """n**q for n >= 0, q > 0, written as exp(q log n) with n = 0 guarded."""
    out = np.zeros_like(n)
    pos = n > 0.0
    out[pos] = np.exp(q * np.log(n[pos]))
    return out


def pressure(law: PressureLaw, n):
    arr = np.atleast_1d(_check(law, n))
    if law.kind == POWER:
        g = law.param
        out = g / (g - 1.0) * _safe_power(arr, g - 1.0)
    else:
        out = law.param * arr / (1.0 - arr)
    return _ret(out.reshape(np.shape(n)), n)


def flux_potential(law: PressureLaw, n):
    arr = np.atleast_1d(_check(law, n))
    if law.kind == POWER:
        out = _safe_power(arr, law.param)
    else:
        out = np.empty_like(arr)
        small = arr < _SERIES_CUTOFF
        big = ~small
        x = arr[big]
        out[big] = x / (1.0 - x) + np.log1p(-x)
        # n/(1-n) + ln(1-n) = sum_{k>=2} (1 - 1/k) n^k
        xs = arr[small][:, None]
        coef = 1.0 - 1.0 / _SERIES_TERMS
        out[small] = np.sum(coef * xs ** _SERIES_TERMS, axis=1)
        out *= law.param
    return _ret(out.reshape(np.shape(n)), n)


def flux_potential_derivative(law: PressureLaw, n):
    arr = np.atleast_1d(_check(law, n))
    if law.kind == POWER:
        out = law.param * _safe_power(arr, law.param - 1.0)
    else:
        out = law.param * arr / (1.0 - arr) ** 2
    return _ret(out.reshape(np.shape(n)), n)


def c_gamma(gamma: float, p_max: float) -> float:
    """Density bound ((gamma-1)/gamma * p_max)**(1/(gamma-1)) implied by p <= p_max."""
    if not gamma > 1.0:
        raise DomainError("c_gamma needs gamma > 1")
    if not p_max > 0.0:
        raise DomainError("c_gamma needs p_max > 0")
    return math.exp((math.log1p(-1.0 / gamma) + math.log(p_max)) / (gamma - 1.0))


def density_cap(law: PressureLaw) -> float:
    if law.kind == POWER:
        return c_gamma(law.param, law.p_max)
    return 1.0
