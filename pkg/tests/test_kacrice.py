import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polyzero.errors import ContactSeparation, DegenerateScale
from polyzero.kacrice import (
    abs_moment_coupled,
    abs_moment_pair,
    assemble,
    contact_assembly,
    g_contact_exact,
    g_table,
    one_point_exact,
    rho2_contact_exact,
    rho2_from_assembly,
    rho2_mc,
)


def test_frozen_contact_values():
    # g_contact_exact(n, k) is the correlation between levels n and n + k
    assert g_contact_exact(0, 1) == 0
    assert g_contact_exact(1, 1) == Fraction(9, 13)
    assert g_contact_exact(0, 2) == Fraction(79, 65)
    assert g_contact_exact(1, 2) == Fraction(5821, 4375)
    assert g_contact_exact(2, 2) == Fraction(9041, 6765)


def test_level_one_closed_form():
    for n in range(30):
        expect = Fraction(n * (n + 2)) / (one_point_exact(n) * one_point_exact(n + 1))
        assert g_contact_exact(n, 1) == expect


def test_one_point_exact():
    assert one_point_exact(0) == 1
    assert one_point_exact(1) == Fraction(5, 3)


@pytest.mark.parametrize("n,k", [(0, 1), (1, 1), (0, 2), (2, 2), (1, 3)])
def test_contact_assembly_mc_matches_exact(n, k):
    val, se = rho2_from_assembly(contact_assembly(n, k), 400_000, seed=10 * n + k)
    ref = float(rho2_contact_exact(n, k)) / math.pi**2
    assert abs(val - ref) < 4 * se + 1e-12


def test_mc_is_reproducible():
    a = rho2_mc(1, 2, 0j, 0.7, 50_000, seed=3)
    b = rho2_mc(1, 2, 0j, 0.7, 50_000, seed=3)
    assert a == b


def test_translation_invariance():
    # translation conjugates the Schur complement by a diagonal phase
    a = assemble(1, 1, 0j, 0.9 + 0.2j)
    b = assemble(1, 1, 2 - 1j, 2.9 - 0.8j)
    assert np.allclose(np.linalg.eigvalsh(a.Lambda), np.linalg.eigvalsh(b.Lambda), atol=1e-12)
    assert a.det_piU == pytest.approx(b.det_piU, rel=1e-12)
    va, sa = rho2_from_assembly(a, 100_000, seed=1)
    vb, sb = rho2_from_assembly(b, 100_000, seed=2)
    assert abs(va - vb) < 4 * math.hypot(sa, sb)


def test_contact_separation_guard():
    with pytest.raises(ContactSeparation):
        assemble(0, 1, 1.0, 1.0 + 1e-8)
    with pytest.raises(ValueError):
        assemble(0, 0, 0j, 1.0)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.05, 6.0), st.floats(0, 2 * math.pi), st.integers(0, 3), st.integers(1, 4))
def test_schur_complement_is_psd(r, t, n, k):
    asm = assemble(n, k, 0j, r * complex(math.cos(t), math.sin(t)))
    L = asm.Lambda
    assert np.allclose(L, L.conj().T)
    assert np.linalg.eigvalsh(L).min() > -1e-8 * np.trace(L).real
    assert asm.det_piU > 0


def test_abs_moment_pair_mc(rng):
    e = rng.exponential(size=(2, 400_000))
    for a, b in [(1.0, 2.0), (0.3, 0.3), (2.0, 0.0)]:
        mc = np.mean(np.abs(a * e[0] - b * e[1]))
        assert abs_moment_pair(a, b) == pytest.approx(mc, rel=1e-2)


@pytest.mark.parametrize("a,b,c,d", [(1.0, 1.0, 1.0, 1.0), (0.5, 2.0, 3.0, 1.0), (2.0, 0.7, 0.2, 1.5)])
def test_abs_moment_coupled_mc(rng, a, b, c, d):
    e = rng.exponential(size=(3, 1_000_000))
    mc = np.mean(np.abs(a * e[0] - b * e[1]) * np.abs(c * e[0] - d * e[2]))
    assert abs_moment_coupled(a, b, c, d) == pytest.approx(mc, rel=1.5e-2)


def test_abs_moment_coupled_exact_and_degenerate():
    v = abs_moment_coupled(Fraction(1), Fraction(2), Fraction(3), Fraction(4))
    assert isinstance(v, Fraction)
    assert float(v) == pytest.approx(abs_moment_coupled(1.0, 2.0, 3.0, 4.0))
    with pytest.raises(DegenerateScale):
        abs_moment_coupled(1, 0, 1, 1)


def test_table_layout():
    rows = g_table(10, 5)
    assert len(rows) == 11 * 5
    assert rows[0][:2] == (0, 1)
    assert all(abs(Fraction(num, den) - Fraction(v)) < 1e-12 for _, _, num, den, v in rows)
