import mpmath as mp
import numpy as np
import pytest


def u_oracle(m, n, z, dps=40):
    """Fock matrix element <m|D(z)|n> in extended precision."""
    with mp.workdps(dps):
        z = mp.mpc(z)
        x = abs(z) ** 2
        if m >= n:
            v = mp.sqrt(mp.factorial(n) / mp.factorial(m)) * z ** (m - n) * mp.exp(-x / 2) * mp.laguerre(n, m - n, x)
        else:
            v = mp.sqrt(mp.factorial(m) / mp.factorial(n)) * (-mp.conj(z)) ** (n - m) * mp.exp(-x / 2) * mp.laguerre(m, n - m, x)
        return complex(v)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def lens_area_oracle(r, m=2_000_000):
    """Overlap area of unit disks at distance r over pi, by midpoint slicing."""
    if r >= 2:
        return 0.0
    lo, hi = r - 1.0, 1.0
    x = lo + (hi - lo) * (np.arange(m) + 0.5) / m
    h = np.minimum(np.sqrt(np.clip(1 - x**2, 0, None)), np.sqrt(np.clip(1 - (x - r) ** 2, 0, None)))
    return float(2 * h.sum() * (hi - lo) / m / np.pi)


def grid_lens_oracle(r, m=4000):
    """Overlap area of unit disks at distance r over pi, by counting an m x m grid."""
    if r >= 2:
        return 0.0
    x = (r - 1) + (2 - r) * (np.arange(m) + 0.5) / m
    y = -1 + 2 * (np.arange(m) + 0.5) / m
    cell = (2 - r) * 2 / m**2
    count = 0
    for s in range(0, m, 500):
        X = x[s : s + 500, None]
        count += np.count_nonzero((X**2 + y**2 <= 1) & ((X - r) ** 2 + y**2 <= 1))
    return count * cell / np.pi


ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[num])
