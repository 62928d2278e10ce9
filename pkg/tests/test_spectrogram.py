import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polyzero.errors import UnderResolved
from polyzero.specfun import displacement_block, hermite_function
from polyzero.spectrogram import (
    STFTField,
    check_resolution,
    deterministic_signal,
    multitaper_average,
    predicted_zero_intensity,
    spectrogram_zeros,
    stft,
    stft_levels,
    taper_levels,
    tf_to_z,
    white_noise,
    z_to_tf,
)

GRID = np.arange(-1.5, 1.51, 0.25)


@pytest.mark.parametrize("k", [0, 2, 4])
def test_stft_of_hermite_is_displacement_entry(k):
    sig = deterministic_signal(lambda t: hermite_function(k, t))
    V = stft_levels(sig, range(5), GRID, GRID)
    Z = tf_to_z(GRID[None, :], GRID[:, None])
    B = displacement_block(Z, 4, 4)
    phase = np.exp(1j * Z.real * Z.imag)
    for n in range(5):
        assert np.abs(V[n] - phase * B[..., k, n]).max() < 1e-10


def test_moyal_identity():
    sig = deterministic_signal(lambda t: hermite_function(2, t))
    xs = np.arange(-5, 5 + 1e-12, 1 / 16)
    sp = stft(sig, 1, xs, xs)
    total = sp.values.sum() / 16**2
    assert total == pytest.approx(1.0, abs=1e-6)


def test_resolution_checks():
    with pytest.raises(UnderResolved):
        check_resolution(2, 0.25, 32.0, 1.0, 1.0)
    with pytest.raises(UnderResolved):
        check_resolution(2, 1 / 64, 4.0, 1.0, 1.0)
    check_resolution(2, 1 / 64, 32.0, 4.0, 4.0)


def test_taper_levels():
    assert taper_levels("uniform", 3) == [0, 1, 2]
    assert taper_levels("paired4k", 2) == [0, 1, 4, 5]
    with pytest.raises(ValueError):
        taper_levels("other", 2)
    with pytest.raises(ValueError):
        taper_levels("uniform", 0)


@settings(max_examples=30, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5))
def test_tf_map_round_trip(x, xi):
    z = tf_to_z(x, xi)
    x2, xi2 = z_to_tf(z)
    assert x2 == pytest.approx(x, abs=1e-12) and xi2 == pytest.approx(xi, abs=1e-12)


def test_white_noise_scale_and_seed():
    w = white_noise(seed=2)
    assert np.mean(np.abs(w.samples) ** 2) * w.dt == pytest.approx(1.0, abs=0.05)
    assert np.array_equal(w.samples, white_noise(seed=2).samples)
    assert not np.array_equal(w.samples, white_noise(seed=2, realization=1).samples)


def test_field_matches_lattice_stft():
    sig = white_noise(seed=5)
    f = STFTField(sig, 2)
    V = stft_levels(sig, [0, 1, 2], GRID, GRID)
    Z = tf_to_z(GRID[None, :], GRID[:, None])
    X = f.values(Z)
    phase = np.exp(-1j * Z.real * Z.imag)
    assert np.abs(np.moveaxis(V, 0, -1) * phase[..., None] - X).max() < 1e-12


def test_spectrogram_zeros_are_zeros():
    sig = white_noise(seed=8)
    x, xi, zs = spectrogram_zeros(1, sig, (-1.0, 1.0, -1.0, 1.0))
    assert zs.flagged == 0 and len(zs) > 0
    assert np.all(np.abs(x) <= 1) and np.all(np.abs(xi) <= 1)
    for a, b in zip(x, xi):
        assert abs(stft_levels(sig, [1], [a], [b])[0, 0, 0]) < 1e-8


def test_multitaper_shapes():
    xs = np.arange(-1, 1.01, 0.5)
    mt = multitaper_average("paired4k", 2, xs=xs, seed=1, realizations=3)
    assert mt.levels == [0, 1, 4, 5]
    assert mt.values.shape == (5, 5) and mt.variance.shape == (5, 5)
    assert np.all(mt.values >= 0)


def test_predicted_intensity():
    assert predicted_zero_intensity(0) == pytest.approx(1.0)
    assert predicted_zero_intensity(1) == pytest.approx(5 / 3)
