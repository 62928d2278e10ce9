import math

import numpy as np
from scipy import integrate
import pytest
from hypothesis import given, settings, strategies as st

from conftest import lens_area_oracle
from polyzero.averages import (
    ArcsineLaw,
    arcsine_ks,
    average_field,
    cov_GN_empirical,
    cov_GN_exact,
    fluctuation_field,
    kappa,
    kappa_from_q,
    lattice,
    mnz_law,
    q_r,
    telescoping_check,
)
from polyzero.errors import DegenerateAtZero, TruncationInsufficient
from polyzero.fields import sample_coefficients
from polyzero.specfun import truncation_level


@pytest.mark.parametrize("r", [0.0, 0.25, 0.5, 1.0, 1.5, 1.99, 2.5])
def test_kappa_against_lens_oracle(r):
    assert kappa(r) == pytest.approx(lens_area_oracle(r) if r > 0 else 1.0, abs=1e-6)


@pytest.mark.parametrize("r", [0.1, 0.5, 1.0, 1.7])
def test_kappa_from_q(r):
    assert kappa_from_q(r) == pytest.approx(kappa(r), abs=1e-9)


def test_q_r_limits():
    assert q_r(0.2, 0.1) == 1.0
    assert q_r(2.5, 0.5) == 0.0
    assert 0 < q_r(1.0, 0.5) < 1


def test_kappa_frozen_value():
    assert kappa(1.0) == pytest.approx(2 / 3 - math.sqrt(3) / (2 * math.pi), abs=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 20), st.floats(0, 4), st.floats(0, 2 * math.pi))
def test_mnz_moments(n, rad, t):
    z = rad * complex(math.cos(t), math.sin(t))
    law = mnz_law(n, z)
    assert law.mean == pytest.approx(n + rad**2, abs=1e-8)
    assert law.variance == pytest.approx((2 * n + 1) * rad**2, abs=1e-8)
    assert law.pmf.min() >= 0


def test_mnz_truncation_guard():
    with pytest.raises(TruncationInsufficient):
        mnz_law(5, 3.0, m_max=10)


def test_mnz_at_origin_is_point_mass():
    law = mnz_law(4, 0j)
    assert law.pmf[4] == pytest.approx(1.0)
    assert law.prob_below(4) == pytest.approx(0.0)


def test_cov_exact_limits():
    assert cov_GN_exact(50, 0.0) == 1.0
    assert cov_GN_exact(400, 2.5) < 1e-3
    assert abs(cov_GN_exact(400, 1.0) - kappa(1.0)) < 0.01


def test_cov_exact_is_average_of_mnz_cdfs():
    N, r = 30, 0.6
    ref = np.mean([mnz_law(n, math.sqrt(N) * r).prob_below(N) for n in range(N)])
    assert cov_GN_exact(N, r) == pytest.approx(ref, abs=1e-12)


def test_cov_empirical_small():
    out = cov_GN_empirical(60, 0.0, 0.5, 1500, seed=4)
    assert abs(out["cov"] - cov_GN_exact(60, 0.5)) < 4 * out["stderr"]


def test_arcsine_law():
    law = ArcsineLaw(0.5, 1.0)
    assert law.cdf(-law.half_width) == 0.0 and law.cdf(law.half_width) == 1.0
    assert law.cdf(0.0) == pytest.approx(0.5)
    y = np.linspace(-law.half_width, law.half_width, 400001)[1:-1]
    m2 = integrate.trapezoid(y**2 * law.pdf(y), y)
    assert m2 == pytest.approx(law.variance, rel=1e-2)
    with pytest.raises(DegenerateAtZero):
        ArcsineLaw(0.5, 0.0).pdf(0.1)


def test_arcsine_ks_shrinks():
    assert arcsine_ks(1000, 500, 1.0) > arcsine_ks(4000, 2000, 1.0)


@pytest.mark.parametrize("N,z", [(1, 0.3j), (5, 1 - 1j), (40, 2.0 + 0.5j)])
def test_telescoping(N, z):
    c = sample_coefficients(truncation_level(N, abs(z) + 1), seed=N)
    parts = telescoping_check(N, z, c, return_parts=True)
    assert parts["residual"] < 1e-5
    assert parts["grad_sq"] == pytest.approx(parts["grad_sq_identity"], rel=1e-4)


def test_telescoping_step_guard():
    c = sample_coefficients(40, seed=0)
    with pytest.raises(ValueError):
        telescoping_check(3, 0.5, c, step=0.1)


def test_average_field_mean_near_one():
    xs = lattice(1.0, 0.5)
    N = 200
    grid = average_field(N, xs, xs, sample_coefficients(1200, seed=1))
    assert grid.kind == "S_N"
    assert grid.sup_deviation() < 0.5
    g = fluctuation_field(N, 0j, [0.0, 0.1], [0.0], sample_coefficients(1200, seed=1))
    assert g.values.shape == (1, 2)
