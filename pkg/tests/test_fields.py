import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polyzero.averages import average_fields
from polyzero.errors import TruncationInsufficient
from polyzero.fields import (
    FieldSample,
    coefficient_batch,
    covariance_kernel,
    cross_covariance,
    eval_X,
    polynomial_weight,
    sample_coefficients,
    scaled_cross_covariance,
    translation_phase,
    truncation_radius,
)
from polyzero.specfun import displacement_block, truncation_level

coords = st.floats(-2.5, 2.5, allow_nan=False)


def test_coefficients_are_nested_and_seeded():
    a = sample_coefficients(10, seed=4).values
    b = sample_coefficients(40, seed=4).values
    assert np.array_equal(a, b[:11])
    assert not np.array_equal(a, sample_coefficients(10, seed=5).values)
    rows = coefficient_batch(10, 4, [0, 1])
    assert np.array_equal(rows[0], a)


def test_coefficient_variance(rng):
    z = coefficient_batch(2000, 7, range(20))
    assert np.mean(np.abs(z) ** 2) == pytest.approx(1.0, abs=0.02)


def test_tiled_matches_direct(rng):
    K = truncation_level(3, 9.0)
    c = sample_coefficients(K, seed=11)
    smp = FieldSample(c, 3)
    assert smp.tiled
    z = rng.uniform(-6, 6, 200) + 1j * rng.uniform(-6, 6, 200)
    tiled = smp.values(z, [0, 1, 2, 3])
    for n in range(4):
        assert np.abs(tiled[:, n] - eval_X(n, z, c)).max() < 1e-11


def test_direct_is_the_coefficient_sum():
    c = sample_coefficients(80, seed=2)
    z = 1.1 - 0.4j
    B = displacement_block(z, 80, 2)
    for n in range(3):
        assert eval_X(n, z, c) == pytest.approx(c.values @ B[:, n], abs=1e-13)


def test_radius_check():
    c = sample_coefficients(30, seed=0)
    smp = FieldSample(c, 1)
    r = truncation_radius(30, 1)
    smp.values(np.array([0.9 * r]), [0])
    with pytest.raises(TruncationInsufficient):
        smp.values(np.array([r + 1.0]), [0])


@settings(max_examples=25, deadline=None)
@given(coords, coords, coords, coords, st.integers(0, 3), st.integers(0, 3))
def test_scaled_covariance_from_blocks(a, b, c, d, n, l):
    # E[X_n(z) conj X_l(w)] = sum_k U(z)_{k,n} conj U(w)_{k,l}
    z, w = complex(a, b), complex(c, d)
    K = truncation_level(3, max(abs(z), abs(w)))
    ref = np.vdot(displacement_block(w, K, 3)[:, l], displacement_block(z, K, 3)[:, n])
    assert scaled_cross_covariance(n, l, z, w) == pytest.approx(ref, abs=1e-11)


@settings(max_examples=25, deadline=None)
@given(coords, coords, coords, coords, st.integers(0, 4))
def test_kernel_and_unscaled_covariance(a, b, c, d, n):
    z, w = complex(a, b), complex(c, d)
    s = cross_covariance(n, n, z, w)
    assert covariance_kernel(n, z, w) == pytest.approx(s, rel=1e-10, abs=1e-12)
    scale = np.exp(-(abs(z) ** 2 + abs(w) ** 2) / 2)
    assert s * scale == pytest.approx(scaled_cross_covariance(n, n, z, w), abs=1e-11)


def test_translation_phase_is_unimodular():
    z = np.array([1 + 2j, -0.5j, 3.0])
    assert np.allclose(np.abs(translation_phase(0.7 - 0.1j, z)), 1.0)


def test_polynomial_weight_is_c1():
    K = 30
    r = np.sqrt(K)
    assert polynomial_weight(np.array([0.5 * r]), K)[0] == 0.0
    eps = 1e-6
    lo, hi = polynomial_weight(np.array([r - eps, r + eps]), K)
    assert abs(hi - lo) < 1e-9
    assert polynomial_weight(np.array([2 * r]), K)[0] > 0


def test_walker_matches_direct():
    xs = np.arange(-1.0, 1.01, 0.25)
    N = 6
    vals, L = average_fields(N, xs, xs, coefficient_batch(300, 3, [0]), L=None)
    c = sample_coefficients(L, 3).values
    Z = xs[None, :] + 1j * xs[:, None]
    B = displacement_block(Z, L, N - 1)
    direct = np.mean(np.abs(np.einsum("k,...kn->...n", c, B)) ** 2, axis=-1)
    assert np.abs(vals[0] - direct).max() < 1e-11
