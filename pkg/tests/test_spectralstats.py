import math

import numpy as np
import pytest

from anderson1d import (
    ConstantPotential,
    PotentialDistribution,
    count_concentration,
    ids_estimate,
    lower_wegner_check,
    minami_tail,
    wegner_check,
)
from anderson1d.spectralstats import BlockLengthError, EdgeIntervalError


def free_ids(E):
    """Closed-form IDS of the zero-potential operator on [-2, 2]."""
    E = np.clip(E, -2.0, 2.0)
    return 1.0 - np.arccos(E / 2.0) / np.pi


def test_free_laplacian_ids_closed_form():
    grid = np.arange(-1.9, 1.9 + 1e-9, 0.05)
    ids = ids_estimate(ConstantPotential(0.0), grid, L=1024, trials=2, seed=0)
    # N(0) = 1/2 exactly by count symmetry at even L
    i0 = int(np.argmin(np.abs(grid)))
    assert ids.N_values[i0] == 0.5
    assert np.abs(ids.N_values - free_ids(grid)).max() <= 5e-3


def test_ids_zero_left_one_right_of_spectrum():
    dist = PotentialDistribution(0.0, 1.0)
    grid = np.arange(-2.9, 3.9 + 1e-9, 0.1)
    ids = ids_estimate(dist, grid, L=256, trials=20, seed=1)
    assert ids.N_values[grid < -2.0][:-1].max() == 0.0  # strictly left of S
    assert ids.N_values[grid > 3.0][1:].min() == 1.0  # strictly right of S
    assert np.all(np.diff(ids.N_values) >= 0)
    assert ids.s_lo == -2.0 and ids.s_hi == 3.0


def test_ids_two_seeds_agree_within_errors():
    dist = PotentialDistribution(0.0, 1.0)
    grid = np.arange(-2.2, 3.2 + 1e-9, 0.05)
    a = ids_estimate(dist, grid, L=1024, trials=100, seed=2)
    b = ids_estimate(dist, grid, L=1024, trials=100, seed=3)
    comb = np.hypot(a.N_stderr, b.N_stderr) + 1e-12
    assert np.max(np.abs(a.N_values - b.N_values) / comb) < 5.0


def test_ids_shift_covariance():
    # shifting the law by c shifts the IDS argument: exact with matched streams
    d0 = PotentialDistribution(0.0, 1.0)
    d1 = PotentialDistribution(1.0, 2.0)
    grid = np.arange(-2.0, 3.0 + 1e-9, 0.25)
    a = ids_estimate(d0, grid, L=128, trials=50, seed=4)
    b = ids_estimate(d1, grid + 1.0, L=128, trials=50, seed=4)
    assert np.array_equal(a.N_values, b.N_values)


def test_ids_grid_validation():
    dist = PotentialDistribution(0.0, 1.0)
    with pytest.raises(ValueError):
        ids_estimate(dist, np.array([-10.0, 0.0, 1.0]), L=64, trials=2, seed=0)
    with pytest.raises(ValueError):
        ids_estimate(dist, np.array([0.0, 0.0, 1.0]), L=64, trials=2, seed=0)
    with pytest.raises(ValueError):
        ids_estimate(dist, np.arange(0, 1, 0.1), L=8, trials=2, seed=0)


# ---------------------------------------------------------------- Wegner


def test_wegner_uniform_passes():
    dist = PotentialDistribution(0.0, 1.0)
    grid = np.arange(-2.2, 3.2 + 1e-9, 0.005)
    ids = ids_estimate(dist, grid, L=512, trials=100, seed=5)
    chk = wegner_check(ids, A=dist.density_bound_A)
    assert chk.passed
    assert chk.max_density <= 1.15


def test_wegner_narrow_support_high_bound():
    dist = PotentialDistribution(0.0, 0.1)  # density 10
    grid = np.arange(-2.3, 2.4, 0.005)
    ids = ids_estimate(dist, grid, L=512, trials=100, seed=6)
    chk = wegner_check(ids, A=10.0)
    assert chk.passed
    assert chk.max_density <= 10.0 * 1.15


def test_wegner_jump_fails():
    # synthetic IDS with a jump: density estimate blows past any fixed bound
    dist = PotentialDistribution(0.0, 1.0)
    grid = np.arange(-2.2, 3.2 + 1e-9, 0.005)
    ids = ids_estimate(dist, grid, L=512, trials=10, seed=7)
    jump = np.where(ids.E_grid >= 0.5, 0.5, 0.0)
    object.__setattr__(ids, "N_values", np.clip(ids.N_values * 0.5 + jump, 0, 1))
    dens = (ids.N_values[2:] - ids.N_values[:-2]) / (ids.E_grid[2:] - ids.E_grid[:-2])
    object.__setattr__(ids, "density", dens)
    chk = wegner_check(ids, A=1.0)
    assert not chk.passed


def test_wegner_needs_fine_grid():
    dist = PotentialDistribution(0.0, 1.0)
    grid = np.arange(-2.2, 3.2, 0.05)
    ids = ids_estimate(dist, grid, L=256, trials=10, seed=8)
    with pytest.raises(ValueError):
        wegner_check(ids, A=1.0)


# ----------------------------------------------------------- lower Wegner


def test_lower_wegner_positive_inside():
    dist = PotentialDistribution(0.0, 1.0)
    grid = np.arange(-2.2, 3.2 + 1e-9, 0.01)
    ids = ids_estimate(dist, grid, L=1024, trials=100, seed=9)
    chk = lower_wegner_check(ids, (0.0, 1.0))
    assert chk.passed
    assert chk.a_I > 0
    assert chk.a_I <= ids.A_emp  # min <= max, always


def test_lower_wegner_rejects_edge_interval():
    dist = PotentialDistribution(0.0, 1.0)
    grid = np.arange(-2.2, 3.2 + 1e-9, 0.01)
    ids = ids_estimate(dist, grid, L=256, trials=10, seed=10)
    with pytest.raises(EdgeIntervalError):
        lower_wegner_check(ids, (3.0 - 0.001, 4.0))
    with pytest.raises(EdgeIntervalError):
        lower_wegner_check(ids, (-2.0, 0.0))


# ----------------------------------------------------------------- Minami


def test_minami_bound_value_and_pass():
    dist = PotentialDistribution(0.0, 1.0)
    tail = minami_tail(dist, L=64, I=(0.495, 0.505), r=2, trials=10**4, seed=11)
    rows = {row.r: row for row in tail.rows}
    assert rows[2].bound == pytest.approx((1.0 * 0.01 * 64) ** 2 / 2, rel=1e-12)
    assert rows[2].bound == pytest.approx(0.2048, rel=1e-12)
    assert rows[2].passed
    assert rows[1].passed


def test_minami_r_zero_trivial():
    dist = PotentialDistribution(0.0, 1.0)
    tail = minami_tail(dist, L=32, I=(0.0, 0.01), r=0, trials=1000, seed=12)
    row0 = next(row for row in tail.rows if row.r == 0)
    assert row0.empirical == 1.0
    assert row0.bound == 1.0
    assert row0.passed


def test_minami_needs_enough_trials():
    dist = PotentialDistribution(0.0, 1.0)
    with pytest.raises(ValueError):
        minami_tail(dist, L=32, I=(0.0, 0.01), r=2, trials=10, seed=0)


# ----------------------------------------------------- count concentration


def test_concentration_lln_regime():
    # wide interval, explicit probe floor: the count concentrates near its
    # mean, far above a_I |I| L / 2, so the empirical probability is ~1
    dist = PotentialDistribution(0.0, 1.0)
    I = (-2.0, 3.0)  # essentially full spectrum
    chk = count_concentration(dist, L=4096, I=I, trials=200, seed=13, a_I=0.15)
    assert chk.empirical >= 0.99
    assert chk.passed


def test_concentration_threshold_rejection():
    dist = PotentialDistribution(0.0, 1.0)
    with pytest.raises(BlockLengthError) as ei:
        count_concentration(dist, L=64, I=(0.2, 0.7), trials=100, seed=14, a_I=0.2)
    assert ei.value.required_length > 64


def test_concentration_monte_carlo_inside():
    dist = PotentialDistribution(0.0, 1.0)
    chk = count_concentration(dist, L=8192, I=(0.0, 1.0), trials=200, seed=15)
    assert chk.passed
    assert chk.a_I > 0
    assert chk.a_I <= chk.A_emp