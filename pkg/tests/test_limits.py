from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import integrate, special

from stiffpress import core, limits, metrics
from stiffpress.core import Field, Grid
from stiffpress.errors import DomainError, InvalidGrid
from stiffpress.initial import InitialDatum
from stiffpress.pressure import PressureLaw
from stiffpress.solver import SimConfig, solve


def closed_form_C(gamma, mass, dim):
    """Normalisation from the Beta-function integral, an oracle independent of the bisection."""
    m = 1 / (gamma - 1)
    alpha = dim / (dim * (gamma - 1) + 2)
    k = alpha * (gamma - 1) / (2 * dim * gamma)
    if dim == 1:
        shape = special.beta(0.5, m + 1)  # int_{-1}^{1} (1 - s^2)^m ds
    else:
        shape = math.pi / (m + 1)  # int_{|s|<1} (1 - |s|^2)^m ds
    # mass = C^(m + d/2) k^(-d/2) * shape
    return (mass * k ** (dim / 2) / shape) ** (1 / (m + dim / 2))


@pytest.mark.parametrize("gamma,mass,dim", [(2, 1, 1), (3, 0.7, 1), (80, 1, 1), (2, 1, 2), (10, 2.5, 2)])
def test_normalisation_matches_closed_form(gamma, mass, dim):
    bc = limits.barenblatt_constants(gamma, mass, dim)
    assert bc.C == pytest.approx(closed_form_C(gamma, mass, dim), rel=1e-10)


@pytest.mark.parametrize("gamma", [2.0, 5.0, 40.0])
def test_barenblatt_mass_by_quadrature(gamma):
    R = limits.barenblatt_constants(gamma, 1.0, 1).support_radius(1.0)
    g = Grid.uniform(1, -1.05 * R, 1.05 * R, 4096)
    if gamma == 2.0:
        # midpoint sampling is only second order where the edge derivative is bounded
        f = core.sample(lambda x: limits.barenblatt(gamma, 1.0, 1, 1.0, x), g)
        assert core.mass(f) == pytest.approx(1.0, abs=1e-6)
    exact, _ = integrate.quad(lambda x: limits.barenblatt(gamma, 1.0, 1, 1.0, np.array([x]))[0], -R, R,
                              epsabs=1e-13, limit=200)
    assert exact == pytest.approx(1.0, abs=1e-8)


def test_exact_cell_averages_have_exact_mass():
    g = Grid.uniform(1, -1.5, 1.5, 256)
    for gamma in (10, 160):
        assert core.mass(limits.barenblatt_field(g, gamma)) == pytest.approx(1.0, abs=1e-13)


def test_barenblatt_rejects_bad_time():
    with pytest.raises(DomainError):
        limits.barenblatt(2, 1, 1, 0.0, np.zeros(3))
    with pytest.raises(DomainError):
        limits.barenblatt_constants(1.0)


def _pde_residual(gamma, h):
    # centred space-time differences at interior points of the support
    xs = np.array([0.0, 0.3, -0.5])
    t = 1.0
    U = lambda tt, x: limits.barenblatt(gamma, 1.0, 1, tt, x)
    dt = h
    ut = (U(t + dt, xs) - U(t - dt, xs)) / (2 * dt)
    A = lambda x: U(t, x) ** gamma
    lap = (A(xs + h) - 2 * A(xs) + A(xs - h)) / h ** 2
    return np.max(np.abs(ut - lap))


def test_pde_residual_vanishes_under_refinement():
    gamma = 2.0
    assert limits.barenblatt_constants(gamma).support_radius(1.0) > 0.6
    r = [_pde_residual(gamma, h) for h in (0.02, 0.01, 0.005)]
    assert r[0] / r[1] >= 3 and r[1] / r[2] >= 3


def test_support_radius_tends_to_half():
    radii = [limits.barenblatt_constants(g, 1.0, 1).support_radius(1.0) for g in (10.0, 100.0, 1000.0)]
    assert radii[0] > radii[1] > radii[2] > 0.5
    assert radii[2] - 0.5 < 0.01


def test_l1_to_indicator_matches_quadrature():
    for gamma in (10.0, 80.0):
        exact = limits.barenblatt_l1_to_indicator(gamma)
        ind = lambda x: 1.0 if abs(x) <= 0.5 else 0.0
        f = lambda x: abs(limits.barenblatt(gamma, 1.0, 1, 1.0, np.array([x]))[0] - ind(x))
        R = limits.barenblatt_constants(gamma).support_radius()
        quad, _ = integrate.quad(f, -R, R, points=[-0.5, 0.5], limit=400, epsabs=1e-12)
        assert exact == pytest.approx(quad, rel=1e-7)


def test_mesa_indicator_1d():
    g = Grid.uniform(1, -1.5, 1.5, 300)
    ref = limits.mesa_indicator(g, 1.0)
    d = ref.density_at(0.37)
    assert core.mass(d) == pytest.approx(1.0, abs=1e-15)
    v = d.values
    assert np.all(np.isclose(v, 0.0, atol=1e-12) | np.isclose(v, 1.0, atol=1e-12))
    assert metrics.bv_seminorm(d) == pytest.approx(2.0)
    assert np.all(ref.pressure_at(1.0).values == 0.0)
    assert metrics.relation_residual(d, ref.pressure_at(0.0)) == 0.0


def test_mesa_indicator_cut_cells_carry_fractions():
    g = Grid.uniform(1, -1.5, 1.5, 7)
    d = limits.mesa_field(g, 1.0)
    assert core.mass(d) == pytest.approx(1.0, abs=1e-15)
    assert np.any((d.values > 0) & (d.values < 1))


def test_mesa_disc_perimeter():
    g = Grid.uniform(2, -1.0, 1.0, 200)
    M = 0.8
    d = limits.mesa_field(g, M)
    assert core.mass(d) == pytest.approx(M, abs=1e-12)
    per = metrics.bv_seminorm(d, isotropic=True)
    assert per == pytest.approx(2 * math.sqrt(math.pi * M), rel=0.02)


def test_mesa_box_too_small():
    with pytest.raises(InvalidGrid):
        limits.mesa_indicator(Grid.uniform(1, -0.4, 0.4, 16), 1.0)


@pytest.fixture(scope="module")
def barenblatt_template():
    g = Grid.uniform(1, -1.5, 1.5, 1024)
    return SimConfig(g, PressureLaw.power(10), 1.0, InitialDatum("barenblatt"))


@pytest.fixture(scope="module")
def surrogates(barenblatt_template):
    return {k: limits.surrogate_limit(barenblatt_template, k) for k in (160.0, 640.0, 1280.0)}


def test_surrogate_self_distance(surrogates):
    s = surrogates[640.0]
    for t in s.times:
        assert metrics.hminus1_norm(s.density_at(t) - s.density_at(t)) == 0.0
    with pytest.raises(KeyError):
        s.density_at(0.123456)


def test_surrogates_are_mutually_close(surrogates):
    # C fitted on the acceptance sweep is about 0.06; use a conservative 0.1
    a, b = surrogates[640.0], surrogates[1280.0]
    dist = max(metrics.hminus1_norm(a.density_at(t) - b.density_at(t)) for t in a.times)
    assert dist <= 0.1 * (640 ** -0.5 + 1280 ** -0.5)


def test_stiff_surrogate_near_mesa(surrogates, barenblatt_template):
    s = surrogates[1280.0]
    mesa = limits.mesa_indicator(barenblatt_template.grid).density_at(0)
    l1 = metrics.lp_norm(s.density_at(1.0) - mesa, 1)
    assert l1 <= 0.02 + math.log(1280) / 1280


def test_surrogate_relation_decreases(surrogates):
    rel = [metrics.relation_residual(s.density_at(1.0), s.pressure_at(1.0)) for s in surrogates.values()]
    assert rel[0] > rel[1] > rel[2] > 0
