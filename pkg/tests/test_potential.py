import numpy as np
import pytest
from scipy import stats

from anderson1d import (
    ConstantPotential,
    InvalidDistributionError,
    PotentialDistribution,
    essential_spectrum,
    sample_potential,
)


def test_same_seed_stream_reproduces_bitwise():
    d = PotentialDistribution(0.0, 1.0)
    a = sample_potential(d, 5, seed=42, stream=0)
    b = sample_potential(d, 5, seed=42, stream=0)
    assert np.array_equal(a, b)


def test_uniform_monte_carlo_against_law():
    d = PotentialDistribution(0.0, 1.0)
    x = sample_potential(d, 10**6, seed=7)
    assert abs(x.mean() - 0.5) < 0.002
    assert x.min() >= 0.0
    assert x.max() <= 1.0


def test_degenerate_support_rejected():
    with pytest.raises(InvalidDistributionError):
        PotentialDistribution(1.0, 1.0)
    with pytest.raises(InvalidDistributionError):
        PotentialDistribution(2.0, 1.0)


def test_distinct_streams_differ_and_decorrelate():
    d = PotentialDistribution(0.0, 1.0)
    a = sample_potential(d, 10**5, seed=3, stream=0)
    b = sample_potential(d, 10**5, seed=3, stream=1)
    assert not np.array_equal(a, b)
    corr = np.corrcoef(a, b)[0, 1]
    assert abs(corr) <= 0.01
    # lag correlation within one stream
    lag = np.corrcoef(a[:-1], a[1:])[0, 1]
    assert abs(lag) <= 0.01


def test_kolmogorov_smirnov_uniform():
    d = PotentialDistribution(0.0, 1.0)
    x = sample_potential(d, 10**5, seed=11)
    ks = stats.kstest(x, d.cdf).statistic
    assert ks <= 0.01


def test_kolmogorov_smirnov_piecewise():
    # triangle-ish law on [0, 2], positive interior
    d = PotentialDistribution(
        0.0, 2.0, kind="piecewise", nodes=((0.0, 0.2), (0.8, 1.5), (2.0, 0.1))
    )
    x = sample_potential(d, 10**5, seed=11)
    assert x.min() >= 0.0 and x.max() <= 2.0
    ks = stats.kstest(x, d.cdf).statistic
    assert ks <= 0.01


def test_piecewise_density_contract():
    d = PotentialDistribution(
        0.0, 1.0, kind="piecewise", nodes=((0.0, 1.0), (0.5, 3.0), (1.0, 1.0))
    )
    ts, fs = d._normalized_nodes()
    assert abs(np.trapezoid(fs, ts) - 1.0) < 1e-12
    assert fs.max() <= d.density_bound_A + 1e-12
    assert d.min_density() > 0.0
    # exact inverse: cdf(ppf(u)) = u
    u = np.linspace(1e-9, 1 - 1e-9, 1001)
    assert np.abs(d.cdf(d.ppf(u)) - u).max() < 1e-12


def test_piecewise_validation_errors():
    with pytest.raises(InvalidDistributionError):
        PotentialDistribution(
            0.0, 1.0, kind="piecewise", nodes=((0.0, 1.0), (0.5, 0.0), (1.0, 1.0))
        )
    with pytest.raises(InvalidDistributionError):
        PotentialDistribution(
            0.0, 1.0, kind="piecewise", nodes=((0.1, 1.0), (1.0, 1.0))
        )
    with pytest.raises(InvalidDistributionError):
        PotentialDistribution(0.0, 1.0, density_bound_A=0.5)
    with pytest.raises(InvalidDistributionError):
        # sup density 2 on [0, 0.5] exceeds the claimed bound
        PotentialDistribution(0.0, 0.5, density_bound_A=1.5)


def test_essential_spectrum_formula():
    assert essential_spectrum(PotentialDistribution(0.0, 1.0)) == (-2.0, 3.0)
    assert essential_spectrum(PotentialDistribution(-1.0, 1.0)) == (-3.0, 3.0)
    assert essential_spectrum(PotentialDistribution(5.0, 6.0)) == (3.0, 8.0)


def test_constant_potential_path():
    c = ConstantPotential(2.5)
    assert np.array_equal(c.sample(4, seed=0), np.full(4, 2.5))
    assert essential_spectrum(c) == (0.5, 4.5)


def test_sample_requires_positive_n():
    d = PotentialDistribution(0.0, 1.0)
    with pytest.raises(ValueError):
        sample_potential(d, 0, seed=1)
