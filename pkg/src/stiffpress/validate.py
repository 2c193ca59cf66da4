"""Seeded property suite behind ``stiffpress validate``.

Every property is a function of a numpy Generator returning (passed, detail);
details are formatted deterministically so equal seeds give identical files.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from . import core, harness, metrics
from .core import Field, Grid
from .errors import StiffPressError
from .initial import InitialDatum
from .pressure import PressureLaw
from .solver import SimConfig, solve


@dataclass
class PropertyResult:
    name: str
    passed: bool
    detail: str


def _rel(a, b) -> float:
    scale = max(float(np.max(np.abs(a))), float(np.max(np.abs(b))), 1e-300)
    return float(np.max(np.abs(a - b))) / scale


def _random_grids(rng):
    n1 = int(rng.integers(8, 64))
    n2 = int(rng.integers(8, 32))
    return [Grid.uniform(1, 0.0, 1.0, n1, "periodic"), Grid.uniform(2, 0.0, 1.0, n2, "periodic"),
            Grid.uniform(1, -1.0, 1.0, n1, "dirichlet_zero"), Grid.uniform(2, -1.0, 1.0, n2, "dirichlet_zero")]


def prop_div_grad(rng):
    worst = 0.0
    for g in _random_grids(rng):
        f = Field(g, rng.normal(size=g.shape))
        worst = max(worst, _rel(core.divergence(core.gradient(f)).values, core.laplacian(f).values))
    return worst <= 1e-12, f"max relative gap {worst:.3e}"


def prop_integration_by_parts(rng):
    worst = 0.0
    for g in _random_grids(rng)[:2]:
        f = Field(g, rng.normal(size=g.shape))
        F = core.VectorField(g, tuple(rng.normal(size=g.face_shape(a)) for a in range(g.dim)))
        lhs = core.inner(f, core.divergence(F))
        rhs = -core.vector_inner(core.gradient(f), F)
        worst = max(worst, abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300))
    return worst <= 1e-12, f"max relative defect {worst:.3e}"


def prop_linearity(rng):
    worst = 0.0
    for g in _random_grids(rng):
        f, h = Field(g, rng.normal(size=g.shape)), Field(g, rng.normal(size=g.shape))
        a, b = rng.normal(), rng.normal()
        lhs = core.laplacian(f * a + h * b).values
        rhs = a * core.laplacian(f).values + b * core.laplacian(h).values
        worst = max(worst, _rel(lhs, rhs))
        for ga, fa, ha in zip(core.gradient(f * a + h * b).components, core.gradient(f).components,
                              core.gradient(h).components):
            worst = max(worst, _rel(ga, a * fa + b * ha))
    return worst <= 1e-12, f"max relative defect {worst:.3e}"


def prop_laplacian_eigen(rng):
    n = int(rng.integers(16, 128))
    L = float(rng.uniform(0.5, 3.0))
    g = Grid.uniform(1, 0.0, L, n, "periodic")
    x = g.centers()
    f = Field(g, np.sin(2 * np.pi * x / L))
    lam = -(2 / g.h ** 2) * (1 - math.cos(2 * math.pi * g.h / L))
    err = _rel(core.laplacian(f).values, lam * f.values)
    return err <= 1e-12, f"relative gap {err:.3e} at N={n}"


def prop_pressure_monotone(rng):
    bad = []
    for law in (PressureLaw.power(float(rng.uniform(1.05, 200))), PressureLaw.singular(float(rng.uniform(1e-3, 1)))):
        # n**gamma underflows near vacuum for large gamma, so the power law starts at 0.3
        n = np.linspace(0, 0.999, 4001) if law.kind == "singular" else np.linspace(0.3, 1.2, 4001)
        for name, fn in (("p", law.pressure), ("A", law.flux_potential)):
            v = fn(n)
            if not np.all(np.diff(v) > 0):
                bad.append(f"{law.kind}:{name}")
    return not bad, "strictly increasing" if not bad else "non-monotone: " + ",".join(bad)


def prop_flux_derivative(rng):
    worst = 0.0
    for law in (PressureLaw.power(float(rng.uniform(1.5, 20))), PressureLaw.singular(float(rng.uniform(0.01, 1)))):
        for n in rng.uniform(0.1, 0.9, 50):
            d = 1e-6
            fd = (law.flux_potential(n + d) - law.flux_potential(n - d)) / (2 * d)
            ex = law.flux_potential_derivative(n)
            worst = max(worst, abs(fd - ex) / abs(ex))
    return worst <= 1e-6, f"max relative gap {worst:.3e}"


def prop_power_bound(rng):
    s = rng.uniform(0, 1, 10_000)
    gam = 1.0 + rng.exponential(20.0, 10_000)
    viol = s ** gam * (1 - s) - s / gam
    worst = float(np.max(viol))
    return worst <= 1e-15, f"max of s^g(1-s) - s/g over 1e4 samples: {worst:.3e}"


def prop_density_cap(rng):
    worst = -math.inf
    for _ in range(200):
        gam = float(1.0 + rng.exponential(30.0))
        pm = float(rng.uniform(0.1, 5.0))
        law = PressureLaw.power(gam, pm)
        n = law.density_cap() * rng.uniform(0, 1)
        if law.pressure(n) <= pm:
            worst = max(worst, n - law.density_cap())
    return worst <= 0.0, f"max excess over cap {worst:.3e}"


def prop_hminus1_norm(rng):
    problems = []
    for g in _random_grids(rng):
        f = rng.normal(size=g.shape)
        h = rng.normal(size=g.shape)
        if g.periodic:
            f -= f.mean()
            h -= h.mean()
        F, H = Field(g, f), Field(g, h)
        a = float(rng.normal())
        nf, nh = metrics.hminus1_norm(F), metrics.hminus1_norm(H)
        if abs(metrics.hminus1_norm(F * a) - abs(a) * nf) > 1e-12 * max(1.0, abs(a) * nf):
            problems.append("homogeneity")
        if metrics.hminus1_norm(F + H) > nf + nh + 1e-12:
            problems.append("triangle")
        sol = metrics.poisson_solve(F)
        if sol.residual_norm > 1e-10 * metrics.lp_norm(F, 2):
            problems.append("residual")
        direct = math.sqrt(core.vector_inner(sol.grad_phi, sol.grad_phi))
        if abs(direct - nf) > 1e-10 * max(nf, 1e-300):
            problems.append("spectral vs direct")
    return not problems, "ok" if not problems else ",".join(sorted(set(problems)))


def prop_lp_triangle(rng):
    g = Grid.uniform(1, 0.0, 1.0, 64, "dirichlet_zero")
    for _ in range(50):
        f, h = Field(g, rng.normal(size=64)), Field(g, rng.normal(size=64))
        p = float(rng.choice([1.0, 4 / 3, 2.0, 3.5, math.inf]))
        if metrics.lp_norm(f + h, p) > metrics.lp_norm(f, p) + metrics.lp_norm(h, p) + 1e-12:
            return False, f"triangle fails at p={p}"
    return True, "50 random pairs"


def prop_w2_uniform(rng):
    g = Grid.uniform(1, -0.5, 2.5, 300, "dirichlet_zero")
    x = g.centers()
    f = Field(g, ((x > 0) & (x < 1)).astype(float))
    h = Field(g, ((x > 0) & (x < 2)).astype(float) * 0.5)
    w = metrics.w2_distance_1d(f, h)
    err = abs(w - 1 / math.sqrt(3))
    return err <= 1e-6, f"W2 {w:.9f} vs 1/sqrt(3), gap {err:.2e}"


def prop_sandwich(rng):
    seed = int(rng.integers(2 ** 31))
    res = harness.sandwich_suite(seed, pairs=100)
    bad = [r["pair"] for r in res if not (r["left_ok"] and r["right_ok"])]
    return not bad, f"{100 - len(bad)}/100 pairs pass"


def random_profile(rng):
    """Continuous nonnegative profile on [0, 1]: a few interval indicators plus bumps."""
    parts = []
    for _ in range(int(rng.integers(1, 4))):
        a = float(rng.uniform(0.1, 0.8))
        b = float(min(a + rng.uniform(0.02, 0.3), 0.9))
        parts.append(("box", a, b, float(rng.uniform(0.2, 1.0))))
    for _ in range(int(rng.integers(0, 3))):
        parts.append(("bump", float(rng.uniform(0.2, 0.8)), float(rng.uniform(0.03, 0.1)), float(rng.uniform(0.2, 1.0))))
    return parts


def profile_field(parts, grid: Grid) -> Field:
    e = grid.edges(0)
    vals = np.zeros(grid.shape)
    for kind, a, b, hgt in parts:
        if kind == "box":
            vals += hgt * np.clip(np.minimum(e[1:], b) - np.maximum(e[:-1], a), 0, None) / grid.h
        else:
            c, r = a, b
            vals += core.cell_average(lambda x: hgt * np.clip(1 - ((x - c) / r) ** 2, 0, None) ** 2, grid).values
    return Field(grid, vals)


def interpolation_maxima(rng, count: int = 200, sizes=(128, 256, 512)) -> dict[int, float]:
    profiles = [random_profile(rng) for _ in range(count)]
    out = {}
    for n in sizes:
        g = Grid.uniform(1, 0.0, 1.0, n, "dirichlet_zero")
        out[n] = max(metrics.interpolation_ratio(profile_field(p, g)) for p in profiles)
    return out


def prop_interpolation(rng):
    m = interpolation_maxima(rng)
    base = m[min(m)]
    ok = all(v <= 1.1 * base for v in m.values())
    return ok, ", ".join(f"N={n}: {v:.4f}" for n, v in m.items())


def _short_run(law, bc="periodic", T=0.02, n=64, **init):
    g = Grid.uniform(1, -1.0, 1.0, n, bc)
    return solve(SimConfig(g, law, T, InitialDatum("bump", init or {"height": 0.8, "radius": 0.5})))


def prop_mass_conservation(rng):
    law = PressureLaw.power(float(rng.uniform(2, 40)))
    tr = _short_run(law)
    m = tr.diagnostics["mass"]
    drift = float(np.max(np.abs(m - m[0])) / m[0])
    return drift <= 1e-10, f"relative mass drift {drift:.3e} over {tr.steps} steps"


def prop_maximum_principle(rng):
    law = PressureLaw.power(float(rng.uniform(2, 40)))
    try:
        tr = _short_run(law, "dirichlet_zero", height=0.9, radius=0.4)
    except StiffPressError as exc:
        return False, f"{exc.tag}"
    p = tr.diagnostics["max_pressure"]
    excess = float(np.max(p) - tr.initial_max_pressure)
    return excess <= 1e-10, f"max pressure excess {excess:.3e}"


def prop_singular_below_one(rng):
    law = PressureLaw.singular(float(rng.uniform(0.02, 0.2)))
    try:
        tr = _short_run(law, "dirichlet_zero", height=0.95, radius=0.4)
    except StiffPressError as exc:
        return False, f"{exc.tag}"
    top = float(np.max(tr.diagnostics["max"]))
    return top < 1.0, f"max density {top:.6f}"


PROPERTIES: list[tuple[str, Callable]] = [
    ("core.div_grad_is_laplacian", prop_div_grad),
    ("core.integration_by_parts", prop_integration_by_parts),
    ("core.linearity", prop_linearity),
    ("core.laplacian_eigenvalue", prop_laplacian_eigen),
    ("pressure.monotone", prop_pressure_monotone),
    ("pressure.flux_derivative", prop_flux_derivative),
    ("pressure.power_bound", prop_power_bound),
    ("pressure.density_cap", prop_density_cap),
    ("metrics.hminus1_norm", prop_hminus1_norm),
    ("metrics.lp_triangle", prop_lp_triangle),
    ("metrics.w2_uniform", prop_w2_uniform),
    ("metrics.sandwich", prop_sandwich),
    ("metrics.interpolation_ratio", prop_interpolation),
    ("solver.mass_conservation", prop_mass_conservation),
    ("solver.maximum_principle", prop_maximum_principle),
    ("solver.singular_below_one", prop_singular_below_one),
]


def run_properties(seed: int = 0) -> list[PropertyResult]:
    """Each property draws from its own child generator so results do not depend on order."""
    children = np.random.SeedSequence(seed).spawn(len(PROPERTIES))
    out = []
    for (name, fn), ss in zip(PROPERTIES, children):
        try:
            passed, detail = fn(np.random.default_rng(ss))
        except (StiffPressError, ArithmeticError, ValueError) as exc:
            passed, detail = False, f"raised {type(exc).__name__}: {exc}"
        out.append(PropertyResult(name, bool(passed), detail))
    return out


def results_json(results: list[PropertyResult], seed: int) -> str:
    return json.dumps({"seed": seed, "passed": all(r.passed for r in results),
                       "properties": [asdict(r) for r in results]}, indent=2)
