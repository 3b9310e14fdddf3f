import math

import numpy as np
import pytest

from anderson1d import (
    ConstantPotential,
    PotentialDistribution,
    char_poly_logdet,
    char_poly_value,
    growth_profile,
    lyapunov_estimate,
    lyapunov_grid,
    non_lyapunov_scan,
    restrict,
    spectrum,
    transfer_dip_check,
    transfer_product,
    transfer_step,
)
from anderson1d.localization import localization_centers


def test_transfer_step_values():
    assert np.array_equal(transfer_step(0.0, 0.0), [[0.0, -1.0], [1.0, 0.0]])
    assert np.array_equal(transfer_step(3.0, 1.0), [[2.0, -1.0], [1.0, 0.0]])


def test_transfer_step_unimodular():
    rng = np.random.default_rng(0)
    for E, v in rng.uniform(-5, 5, size=(100, 2)):
        assert np.linalg.det(transfer_step(E, v)) == pytest.approx(1.0, abs=1e-12)


def test_single_factor_product():
    tp = transfer_product([1.25], 0.5)
    assert np.allclose(tp.matrix * math.exp(tp.log_scale), transfer_step(0.5, 1.25))
    assert tp.n == 1


def test_rotation_has_zero_growth():
    tp = transfer_product(np.zeros(1000), 0.0)
    assert tp.log_norm == pytest.approx(0.0, abs=1e-12)
    prof = growth_profile(np.zeros(1000), 0.0, [1, 10, 100, 1000])
    assert np.abs(prof[:, 1]).max() < 1e-12


# ---------------------------------------------------- determinant identity
#
# Brute force at n <= 5 pins the correspondence between product entries and
# block determinants:
#   Phi_n[0,0] = +det(E - H[1, n])    Phi_n[0,1] = -det(E - H[2, n])
#   Phi_n[1,0] = +det(E - H[1, n-1])  Phi_n[1,1] = -det(E - H[2, n-1])
# with det of an empty block ([1,0] or [2,1]) equal to 1.


def _block_det(v, a, b, E):
    if b < a:
        return 1.0 if b == a - 1 else 0.0
    return char_poly_value(restrict(v, a, b), E)


def test_determinant_identity_small_n():
    rng = np.random.default_rng(1)
    for n in range(2, 6):
        for _ in range(20):
            v = rng.uniform(-2, 2, size=n)
            E = rng.uniform(-4, 4)
            tp = transfer_product(v, E)
            full = tp.matrix * math.exp(tp.log_scale)
            want = np.array(
                [
                    [_block_det(v, 1, n, E), -_block_det(v, 2, n, E)],
                    [_block_det(v, 1, n - 1, E), -_block_det(v, 2, n - 1, E)],
                ]
            )
            assert np.allclose(full, want, rtol=1e-12, atol=1e-12)


def test_determinant_identity_n1_corner():
    # at n=1 the (1,1) entry is 0: the "block" [2,0] has negative length
    tp = transfer_product([0.7], 1.3)
    assert tp.matrix[1, 1] == 0.0


def test_determinant_identity_n200_log_relative():
    rng = np.random.default_rng(2)
    dist = PotentialDistribution(0.0, 1.0)
    n = 200
    specs = [((0, 0), 1, 0), ((0, 1), 2, 0), ((1, 0), 1, 1), ((1, 1), 2, 1)]
    for trial in range(20):
        v = dist.sample(n, seed=50, stream=trial)
        E = float(rng.uniform(-2.5, 3.5))
        tp = transfer_product(v, E)
        for (i, j), a, drop in specs:
            sign_e, log_e = tp.log_entry(i, j)
            blk = restrict(v, a, n - drop)
            sign_d, log_d = char_poly_logdet(blk, E)
            if j == 1:  # right column carries the minus sign
                sign_d = -sign_d
            assert sign_e == sign_d
            assert log_e == pytest.approx(log_d, rel=1e-9, abs=1e-9)


# ------------------------------------------------------------- Lyapunov


def test_constant_potential_closed_form():
    # E - c = 3: multiplier (3 + sqrt(5))/2
    est = lyapunov_estimate(ConstantPotential(1.0), 4.0, n=10**5, trials=2, seed=9)
    assert est.gamma_hat == pytest.approx(math.log((3 + math.sqrt(5)) / 2), abs=1e-3)


def test_positive_exponent_inside_spectrum():
    dist = PotentialDistribution(0.0, 1.0)
    est = lyapunov_estimate(dist, 0.5, n=10**5, trials=8, seed=4)
    assert est.gamma_hat > 0
    assert est.gamma_hat / est.std_err > 5


def test_disjoint_seeds_agree():
    dist = PotentialDistribution(0.0, 1.0)
    a = lyapunov_estimate(dist, 1.0, n=5 * 10**4, trials=8, seed=100)
    b = lyapunov_estimate(dist, 1.0, n=5 * 10**4, trials=8, seed=200)
    combined = math.hypot(a.std_err, b.std_err)
    assert abs(a.gamma_hat - b.gamma_hat) < 4 * combined


def test_energy_shift_covariance():
    # shifting the law and the energy by the same c leaves every transfer
    # factor unchanged, so with matched streams the estimate is identical
    d0 = PotentialDistribution(0.0, 1.0)
    d1 = PotentialDistribution(2.0, 3.0)
    a = lyapunov_estimate(d0, 0.5, n=10**4, trials=4, seed=5)
    b = lyapunov_estimate(d1, 2.5, n=10**4, trials=4, seed=5)
    assert a.gamma_hat == pytest.approx(b.gamma_hat, rel=1e-12)
    assert abs(a.gamma_hat - b.gamma_hat) < 4 * math.hypot(a.std_err, b.std_err)


def test_lyapunov_grid_matches_single_estimates():
    dist = PotentialDistribution(0.0, 1.0)
    grid = [0.0, 1.0]
    ests = lyapunov_grid(dist, grid, n=2000, trials=3, seed=8)
    for i, E in enumerate(grid):
        solo = lyapunov_estimate(dist, E, n=2000, trials=3, seed=8, stream_offset=3 * i)
        assert ests[i].gamma_hat == solo.gamma_hat
        assert ests[i].std_err == solo.std_err


def test_lyapunov_validation():
    dist = PotentialDistribution(0.0, 1.0)
    with pytest.raises(ValueError):
        lyapunov_estimate(dist, 0.0, n=10, trials=4, seed=1)
    with pytest.raises(ValueError):
        lyapunov_estimate(dist, 0.0, n=2000, trials=1, seed=1)


# --------------------------------------------------------------- profiles


def test_growth_profile_deterministic_and_consistent():
    dist = PotentialDistribution(0.0, 1.0)
    v = dist.sample(2000, seed=6)
    prof = growth_profile(v, 0.5, [500, 1000, 2000])
    prof2 = growth_profile(v, 0.5, [500, 1000, 2000])
    assert np.array_equal(prof, prof2)
    # checkpoint value equals an independent sweep truncated at n
    for n, rate in prof:
        tp = transfer_product(v[: int(n)], 0.5)
        assert rate == pytest.approx(tp.log_norm / n, rel=1e-12)


def test_growth_profile_validation():
    with pytest.raises(ValueError):
        growth_profile(np.zeros(10), 0.0, [5, 5])
    with pytest.raises(IndexError):
        growth_profile(np.zeros(10), 0.0, [5, 20])


def test_submultiplicativity_in_log():
    dist = PotentialDistribution(0.0, 5.0)
    v = dist.sample(3000, seed=13)
    E = 2.0
    full = transfer_product(v, E).log_norm
    for m in (1, 137, 1500, 2999):
        prefix = transfer_product(v[:m], E).log_norm
        suffix = transfer_product(v[m:], E).log_norm
        assert full <= prefix + suffix + 1e-10


def test_unimodularity_while_measurable():
    # det drift is only visible below condition ~1e8; at weak growth the
    # defect stays within 1e-8, and long products keep entries in band
    dist = PotentialDistribution(0.0, 1.0)
    v = dist.sample(500, seed=14)
    tp = transfer_product(v, 0.5)  # slow growth: det still representable
    assert abs(tp.log_det_defect()) < 1e-8


def test_renormalized_product_stays_in_band():
    dist = PotentialDistribution(0.0, 5.0)
    v = dist.sample(10**5, seed=14)
    tp = transfer_product(v, 9.0)  # far outside the spectrum: fast growth
    assert tp.log_scale > 100  # renormalization actually happened
    mx = np.abs(tp.matrix).max()
    assert 2.0**-64 <= mx <= 2.0**64
    # beyond measurable condition the defect reports nan, never a lie
    assert math.isnan(tp.log_det_defect())


# ----------------------------------------------------------------- scans


def test_scan_zero_potential():
    scan = non_lyapunov_scan(np.zeros(400), 0.0, N=400, tau=0.0, gamma_ref=1.0)
    assert scan.min_rate == pytest.approx(0.0, abs=1e-12)
    assert scan.flagged


def test_scan_validation():
    with pytest.raises(ValueError):
        non_lyapunov_scan(np.zeros(10), 0.0, N=10, tau=1.0, gamma_ref=1.0)
    with pytest.raises(ValueError):
        non_lyapunov_scan(np.zeros(10), 0.0, N=10, tau=0.5, gamma_ref=0.0)
    with pytest.raises(IndexError):
        non_lyapunov_scan(np.zeros(10), 0.0, N=20, tau=0.5, gamma_ref=1.0)


def test_scan_uniform_hyperbolic_outside_spectrum():
    dist = PotentialDistribution(0.0, 1.0)
    E = 11.0  # j_hi + 10
    v = dist.sample(20000, seed=15)
    gamma = lyapunov_estimate(dist, E, n=10**4, trials=4, seed=16).gamma_hat
    scan = non_lyapunov_scan(v, E, N=20000, tau=0.5, gamma_ref=gamma)
    assert not scan.flagged
    assert scan.min_rate > 0.9 * gamma


def test_scan_dips_at_localized_eigenvalues():
    # energies resonant with eigenpairs centered at k show below-Lyapunov
    # growth over horizon 2k; at tau = 1/2 a majority of bulk pairs flag
    dist = PotentialDistribution(0.0, 5.0)
    v = dist.sample(400, seed=31)
    spec = spectrum(restrict(v, 1, 400), tol=1e-12, want_vectors=True)
    pairs = [p for p in localization_centers(spec).pairs if 100 <= p.center <= 160]
    gammas = lyapunov_grid(dist, [p.E for p in pairs], n=20000, trials=4, seed=99)
    flagged = 0
    deepest = None
    for p, g in zip(pairs, gammas):
        scan = non_lyapunov_scan(v, p.E, N=2 * p.center, tau=0.5, gamma_ref=g.gamma_hat)
        if scan.flagged:
            flagged += 1
        if deepest is None or scan.min_rate / g.gamma_hat < deepest[0]:
            deepest = (scan.min_rate / g.gamma_hat, p, g)
    assert flagged >= 0.4 * len(pairs)
    # deepest dip agrees with the eigenvalue-dip check at the same pair
    ratio, p, g = deepest
    assert ratio < 0.25
    chk = transfer_dip_check(
        v, p.E, p.center, gamma_k=g.gamma_hat, gamma_bar=1.5 * g.gamma_hat, tau=0.5
    )
    assert chk.evaluations[0].within_gamma_bound


# ------------------------------------------------------------- dip check


def test_dip_check_tau_one_is_trivial_ceiling():
    dist = PotentialDistribution(0.0, 5.0)
    v = dist.sample(200, seed=17)
    g = lyapunov_estimate(dist, 2.0, n=10**4, trials=4, seed=18).gamma_hat
    chk = transfer_dip_check(v, 2.0, 100, gamma_k=g, gamma_bar=g, tau=1.0)
    ev = chk.evaluations[0]
    # growth rate over 2k steps is ~gamma << 12*gamma, so the ceiling holds
    assert ev.log_norm <= 12 * g * 100
    assert ev.within_gamma_bound


def test_dip_check_radius_underflow_flagged():
    v = np.zeros(600)
    chk = transfer_dip_check(v, 0.0, 300, gamma_k=1.0, gamma_bar=2.0, tau=0.5)
    assert chk.radius_underflow
    assert len(chk.evaluations) == 1
    assert chk.evaluations[0].E == 0.0


def test_dip_check_negative_control_runs():
    # energy pushed outside the approximation hypothesis: report only.
    # small k keeps the radius above float resolution at E ~ 2
    dist = PotentialDistribution(0.0, 5.0)
    v = dist.sample(300, seed=19)
    g = 0.2
    k = 40
    E = 2.0 + 10 * math.exp(-2 * g * k) * math.exp(g * k)
    chk = transfer_dip_check(v, E, k, gamma_k=g, gamma_bar=g, tau=0.25)
    assert not chk.radius_underflow
    assert len(chk.evaluations) == 3
    assert math.isfinite(chk.markov_max_log_norm)


def test_dip_check_validation():
    with pytest.raises(ValueError):
        transfer_dip_check(np.zeros(10), 0.0, 5, gamma_k=1.0, gamma_bar=0.5, tau=0.5)
    with pytest.raises(IndexError):
        transfer_dip_check(np.zeros(10), 0.0, 50, gamma_k=1.0, gamma_bar=1.0, tau=0.5)
