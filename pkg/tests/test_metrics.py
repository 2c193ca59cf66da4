from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate, linalg

from stiffpress import core, harness, limits, metrics, validate
from stiffpress.core import Field, Grid
from stiffpress.errors import MassMismatch, MetricError, NonZeroMean
from stiffpress.pressure import PressureLaw
from stiffpress.solver import QuadraticPotential


def _dense_hm1(f: Field, kind: str) -> float:
    """Dense-matrix oracle in 1D: solve -L phi = f, then ||grad phi||^2 = h sum f phi."""
    n, h = f.grid.n_cells[0], f.grid.h
    L = np.diag(-2.0 * np.ones(n)) + np.diag(np.ones(n - 1), 1) + np.diag(np.ones(n - 1), -1)
    if kind == "neumann":
        L[0, 0] = L[-1, -1] = -1.0
    L /= h * h
    if kind == "neumann":
        phi = linalg.lstsq(-L, f.values)[0]
    else:
        phi = linalg.solve(-L, f.values)
    return math.sqrt(h * float(f.values @ phi))


def test_hminus1_single_mode():
    # the discrete symbol (2/h) sin(pi h) gives a relative excess of pi^2 h^2 / 6
    exact = 1 / (2 * np.pi * math.sqrt(2))
    errs = []
    for n in (64, 128):
        g = Grid.uniform(1, 0.0, 1.0, n, "periodic")
        f = Field(g, np.sin(2 * np.pi * g.centers()))
        errs.append(abs(metrics.hminus1_norm(f) - exact))
    assert errs[1] <= exact * np.pi ** 2 / 6 / 128 ** 2 * 1.01
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


def test_hminus1_zero_and_mean_check():
    g = Grid.uniform(2, 0.0, 1.0, 16, "periodic")
    assert metrics.hminus1_norm(Field(g, 0.0)) == 0.0
    with pytest.raises(NonZeroMean):
        metrics.hminus1_norm(Field(g, 1.0))


@pytest.mark.parametrize("kind", ["dirichlet", "neumann"])
def test_hminus1_matches_dense_solve(kind):
    rng = np.random.default_rng(3)
    g = Grid.uniform(1, -1.0, 1.0, 40)
    v = rng.normal(size=40)
    if kind == "neumann":
        v -= v.mean()
    f = Field(g, v)
    got = metrics.hminus1_norm(f, noflux=(kind == "neumann"))
    assert got == pytest.approx(_dense_hm1(f, kind), rel=1e-10)


def test_noflux_norm_is_whole_line_norm_in_1d():
    rng = np.random.default_rng(4)
    g = Grid.uniform(1, 0.0, 1.0, 64)
    v = rng.uniform(size=64)
    v -= v.mean()
    primitive = np.cumsum(v) * g.h  # grad phi on faces, up to sign
    assert metrics.hminus1_norm(Field(g, v), noflux=True) == pytest.approx(
        math.sqrt(g.h * np.sum(primitive ** 2)), rel=1e-10)


def test_poisson_solution_residual():
    rng = np.random.default_rng(5)
    for bc in ("periodic", "dirichlet_zero"):
        g = Grid.uniform(2, 0.0, 1.0, 24, bc)
        v = rng.normal(size=g.shape)
        if bc == "periodic":
            v -= v.mean()
        f = Field(g, v)
        sol = metrics.poisson_solve(f)
        assert sol.residual_norm <= 1e-10 * metrics.lp_norm(f, 2)
        assert math.sqrt(core.vector_inner(sol.grad_phi, sol.grad_phi)) == pytest.approx(sol.energy, rel=1e-10)


@given(st.integers(0, 2 ** 32 - 1), st.floats(-100, 100), st.sampled_from(["periodic", "dirichlet_zero"]))
def test_hminus1_is_a_norm(seed, a, bc):
    rng = np.random.default_rng(seed)
    g = Grid.uniform(1, 0.0, 1.0, 32, bc)
    f, h = rng.normal(size=32), rng.normal(size=32)
    if bc == "periodic":
        f -= f.mean()
        h -= h.mean()
    F, H = Field(g, f), Field(g, h)
    assert metrics.hminus1_norm(F * a) == pytest.approx(abs(a) * metrics.hminus1_norm(F), rel=1e-12, abs=1e-100)
    assert metrics.hminus1_norm(F + H) <= metrics.hminus1_norm(F) + metrics.hminus1_norm(H) + 1e-12


def test_lp_norm_of_indicator():
    g = Grid.uniform(1, 0.0, 1.0, 64)
    f = Field(g, (g.centers() < 0.25).astype(float))
    for p in (1.0, 4 / 3, 2.0, 7.0):
        assert metrics.lp_norm(f, p) == pytest.approx(0.25 ** (1 / p))
    assert metrics.lp_norm(f, math.inf) == 1.0
    with pytest.raises(MetricError):
        metrics.lp_norm(f, 0.5)


def test_lp_norm_of_barenblatt():
    gamma = 2.0
    R = limits.barenblatt_constants(gamma).support_radius()
    g = Grid.uniform(1, -R * 1.1, R * 1.1, 2048)
    f = core.sample(lambda x: limits.barenblatt(gamma, 1.0, 1, 1.0, x), g)
    quad, _ = integrate.quad(lambda x: limits.barenblatt(gamma, 1.0, 1, 1.0, np.array([x]))[0] ** (4 / 3), -R, R)
    assert metrics.lp_norm(f, 4 / 3) == pytest.approx(quad ** 0.75, abs=1e-3)


@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([1.0, 4 / 3, 2.0, 5.0, math.inf]))
def test_lp_triangle(seed, p):
    rng = np.random.default_rng(seed)
    g = Grid.uniform(1, 0.0, 1.0, 32)
    f, h = Field(g, rng.normal(size=32)), Field(g, rng.normal(size=32))
    assert metrics.lp_norm(f + h, p) <= metrics.lp_norm(f, p) + metrics.lp_norm(h, p) + 1e-12


def test_bv_examples():
    g = Grid.uniform(1, 0.0, 1.0, 100)
    assert metrics.bv_seminorm(Field(g, ((g.centers() > 0.2) & (g.centers() < 0.6)).astype(float))) == pytest.approx(2.0)
    gp = Grid.uniform(1, 0.0, 1.0, 100, "periodic")
    assert metrics.bv_seminorm(Field(gp, 3.0)) == 0.0
    tv = metrics.bv_seminorm(Field(gp, np.sin(2 * np.pi * gp.centers())))
    # the peaks fall between centres, losing 4 (1 - cos(pi h)) ~ 2 pi^2 h^2
    assert 4.0 - 2 * np.pi ** 2 * gp.h ** 2 * 1.01 <= tv <= 4.0


def test_w2_examples():
    g = Grid.uniform(1, -2.0, 2.0, 400)
    x = g.centers()
    f = limits.barenblatt_field(g, 3.0, 1.0, 0.5)
    shifted = limits.barenblatt_field(g, 3.0, 1.0, 0.5, center=0.3)
    assert metrics.w2_distance_1d(f, shifted) == pytest.approx(0.3, abs=1e-4)
    assert metrics.w2_distance_1d(f, f) == 0.0
    u1 = Field(g, ((x > 0) & (x < 1)).astype(float))
    u2 = Field(g, ((x > 0) & (x < 2)).astype(float) * 0.5)
    res = metrics.w2_distance_1d_detail(u1, u2)
    assert res.value == pytest.approx(1 / math.sqrt(3), abs=1e-8)
    assert res.error < 1e-8


def test_w2_errors():
    g = Grid.uniform(1, 0.0, 1.0, 16)
    with pytest.raises(MassMismatch):
        metrics.w2_distance_1d(Field(g, 1.0), Field(g, 0.5))
    with pytest.raises(MetricError):
        metrics.w2_distance_1d(Field(g, np.linspace(-1, 1, 16)), Field(g, 1.0))
    g2 = Grid.uniform(2, 0.0, 1.0, 8)
    with pytest.raises(MetricError):
        metrics.w2_distance_1d(Field(g2, 1.0), Field(g2, 1.0))


def test_sandwich_examples():
    g = Grid.uniform(1, 0.0, 1.0, 256)
    flat = Field(g, 0.75)
    res = metrics.sandwich_check(flat, flat, 0.5)
    assert res.ok and res.w2 == 0.0 and res.hm1 == 0.0
    wavy = core.cell_average(lambda x: 0.75 + 0.25 * np.sin(2 * np.pi * x), g)
    res = metrics.sandwich_check(wavy, flat, 0.5)
    assert res.left_ok and res.right_ok
    assert res.hm1 <= res.w2 <= 2 / math.sqrt(0.5) * res.hm1
    with pytest.raises(MetricError):
        metrics.sandwich_check(Field(g, 0.3), Field(g, 0.3), 0.5)


def test_sandwich_random_pairs():
    res = harness.sandwich_suite(11, 100)
    assert all(r["left_ok"] and r["right_ok"] for r in res)


def test_interpolation_ratio_examples():
    g = Grid.uniform(1, 0.0, 1.0, 128)
    f = Field(g, ((g.centers() > 0.3) & (g.centers() < 0.6)).astype(float))
    r = metrics.interpolation_ratio(f)
    assert math.isfinite(r) and r > 0
    assert metrics.interpolation_ratio(f * 7.5) == pytest.approx(r, rel=1e-12)
    with pytest.raises(MetricError):
        metrics.interpolation_ratio(Field(g, 0.0))


def test_interpolation_ratio_is_uniform_in_resolution():
    m = validate.interpolation_maxima(np.random.default_rng(0))
    assert max(m.values()) <= 1.1 * m[128]


def test_relation_residual():
    g = Grid.uniform(1, -1.0, 1.0, 64)
    n = Field(g, 0.5)
    assert metrics.relation_residual(n, Field(g, 0.0)) == 0.0
    p = Field(g, np.where(np.abs(g.centers()) < 0.3, 2.0, 0.0))
    n = Field(g, np.where(np.abs(g.centers()) < 0.3, 1.0, 0.2))
    assert metrics.relation_residual(n, p) == 0.0
    over = Field(g, 1.1)
    assert metrics.relation_residual(over, Field(g, 1.0)) < 0
    assert metrics.relation_residual(over, Field(g, 1.0), absolute=True) > 0


def test_singular_relation_bound():
    eps, delta = 0.05, 0.1
    g = Grid.uniform(1, -1.0, 1.0, 64)
    n = core.cell_average(lambda x: (1 - delta) * np.exp(-x ** 2), g)
    law = PressureLaw.singular(eps)
    rel = metrics.relation_residual(n, Field(g, law.pressure(n.values)))
    assert 0 < rel <= eps * core.mass(n) / delta


def test_complementarity_zero_pressure():
    g = Grid.uniform(1, -1.0, 1.0, 64)
    assert metrics.complementarity_residual(Field(g, 0.4), Field(g, 0.0)) == 0.0
    assert metrics.complementarity_residual(Field(g, 0.4), Field(g, 0.0), V=QuadraticPotential(1.0), g=0.5,
                                            variant="singular") == 0.0


def test_complementarity_vanishes_on_exact_limit_pressure():
    V = QuadraticPotential(1.0)
    res = []
    for n in (128, 512):
        g = Grid.uniform(1, -1.5, 1.5, n)
        x = g.centers()
        p = core.cell_average(lambda x: np.clip(0.125 - x ** 2 / 2, 0, None), g)
        res.append(metrics.complementarity_residual(Field(g, (np.abs(x) < 0.5) * 1.0), p, V=V))
    # the kink at the free boundary limits this to first order
    assert res[1] < 1e-3 and res[0] / res[1] > 3.5


def test_complementarity_weak_form_matches_strong_form_for_smooth_pressure():
    g = Grid.uniform(2, -1.0, 1.0, 64)
    p = core.cell_average(lambda x, y: np.exp(-4 * (x ** 2 + y ** 2)), g)
    vol = g.cell_volume
    lap = core.laplacian(p).values
    for k, variant in ((1, "power"), (2, "singular")):
        weak = metrics.complementarity_terms(Field(g, 0.5), p, variant=variant)
        strong = [vol * float(np.sum(psi.values * p.values ** k * lap)) for psi in metrics.test_functions(g)]
        assert weak == pytest.approx(strong, rel=2e-2, abs=1e-4)


def test_complementarity_unknown_variant():
    g = Grid.uniform(1, -1.0, 1.0, 16)
    with pytest.raises(MetricError):
        metrics.complementarity_residual(Field(g, 0.0), Field(g, 0.0), variant="log")


def test_dictionary_is_fixed_and_smooth():
    assert len(metrics.TEST_DICTIONARY) == 8
    g = Grid.uniform(1, 0.0, 1.0, 200)
    for psi in metrics.test_functions(g):
        assert psi.values.max() <= 1.0 and psi.values[0] == 0.0 and psi.values[-1] == 0.0


def test_diagnostics_square_moment():
    g = Grid.uniform(2, -1.0, 1.0, 32)
    M = 2.0
    x, y = g.mesh()
    f = Field(g, M * ((np.abs(x) < 0.5) & (np.abs(y) < 0.5)))
    d = metrics.diagnostics_2d(f)
    assert d.mass == pytest.approx(M)
    # midpoint rule misses h^2/12 per axis of |x|^2 over the unit square
    assert d.second_moment == pytest.approx(M / 6, abs=M * g.h ** 2 / 6 * 1.01)
    indicator = metrics.diagnostics_2d(Field(g, (np.abs(x) < 0.5) & (np.abs(y) < 0.5)))
    assert indicator.entropy == 0.0


def test_diagnostics_interaction_matches_direct_sum():
    g = Grid.uniform(2, -1.0, 1.0, 12)
    rng = np.random.default_rng(0)
    f = Field(g, rng.uniform(size=g.shape))
    x, y = (a.ravel() for a in g.mesh())
    r = np.hypot(x[:, None] - x[None, :], y[:, None] - y[None, :])
    K = np.where(r > 0, np.log(np.where(r > 0, r, 1.0)), 0.0)
    v = f.values.ravel()
    direct = g.cell_volume ** 2 * float(v @ K @ v)
    assert metrics.diagnostics_2d(f).interaction == pytest.approx(direct, rel=1e-10)


def test_log_hls_on_gaussian_bump():
    g = Grid.uniform(2, -3.0, 3.0, 64)
    f = core.cell_average(lambda x, y: np.exp(-(x ** 2 + y ** 2) / 0.5) / (0.5 * math.pi), g)
    d = metrics.diagnostics_2d(f)
    assert d.mass == pytest.approx(1.0, abs=1e-6)
    assert d.log_hls_bound == pytest.approx(-(1 + math.log(math.pi)))
    assert d.log_hls_ok and d.log_hls_lhs >= -2.1447


def test_diagnostics_requires_2d():
    with pytest.raises(MetricError):
        metrics.diagnostics_2d(Field(Grid.uniform(1, 0.0, 1.0, 8), 1.0))
