import math

import numpy as np
import pytest

from conftest import central_diff

from begphase.canonical import (
    canonical_criticals,
    canonical_free_energy,
    cumulant_inflection,
    dual_route_minimum,
    first_order_coupling,
    mag_potential,
    positive_well,
    second_order_coupling,
    solve_canonical,
    tangency,
    tilt_potential,
    well_depth,
)
from begphase.core import (
    BETA_C,
    UNIFORM,
    CanonicalParams,
    DomainError,
    cramer_rate_prime,
    cumulant,
    energy_per_site,
    rel_entropy,
    single_site_measure,
)
from begphase.diagram import simplex_oracle
from begphase.rootfind import bisect_monotone


# ---------------------------------------------------------------------------
# potentials
# ---------------------------------------------------------------------------

def test_potential_zero_at_origin():
    rng = np.random.default_rng(2)
    for _ in range(20):
        params = CanonicalParams(rng.uniform(0.2, 4.0), rng.uniform(0.2, 3.0))
        assert mag_potential(params, 0.0) == 0.0


def test_tilt_potential_example():
    params = CanonicalParams(1.0, 1.0)
    assert abs(tilt_potential(params, 1.0) - (0.25 - cumulant(1.0, 1.0, 0))) < 1e-15


def test_potentials_agree_under_substitution():
    rng = np.random.default_rng(4)
    for _ in range(100):
        params = CanonicalParams(rng.uniform(0.2, 4.0), rng.uniform(0.2, 3.0))
        w = rng.uniform(-4.0, 4.0)
        a = 2.0 * params.beta * params.K
        assert abs(tilt_potential(params, w) - mag_potential(params, w / a)) < 1e-13
        z = rng.uniform(-1.0, 1.0)
        assert mag_potential(params, z) == mag_potential(params, -z)


def test_potential_derivatives_match_finite_differences():
    params = CanonicalParams(1.3, 0.9)
    for order in range(1, 5):
        for z in (0.15, 0.6):
            fd = central_diff(lambda x: mag_potential(params, x, order - 1), z)
            assert abs(mag_potential(params, z, order) - fd) < 1e-5


# ---------------------------------------------------------------------------
# critical couplings
# ---------------------------------------------------------------------------

def test_second_order_coupling_closed_forms_agree():
    for beta in (0.3, 0.7, 1.0, BETA_C, 2.0):
        direct = second_order_coupling(beta)
        via_curvature = 1.0 / (2.0 * beta * cumulant(beta, 0.0, 2))
        assert abs(direct - via_curvature) < 1e-12


def test_second_order_coupling_values():
    tri = second_order_coupling(BETA_C)
    assert abs(tri - 3.0 / (2.0 * math.log(4.0))) < 1e-12
    assert abs(tri - 1.0820) < 5e-5
    assert abs(second_order_coupling(1.0) - 1.17957) < 5e-6
    with pytest.raises(DomainError):
        second_order_coupling(0.0)


def test_second_order_coupling_is_curvature_root():
    beta = 1.0
    kc2 = second_order_coupling(beta)
    assert abs(mag_potential(CanonicalParams(beta, kc2), 0.0, 2)) < 1e-12
    # cross-check as the root in K of the curvature at the origin
    root = bisect_monotone(
        lambda K: mag_potential(CanonicalParams(beta, K), 0.0, 2),
        0.5, 3.0, 0.0, tol=1e-12)
    assert abs(root - kc2) < 1e-9


def test_cumulant_inflection():
    assert cumulant_inflection(BETA_C) == 0.0
    expect = math.log(1.7 + math.sqrt(1.7 ** 2 - 1.0))
    assert abs(cumulant_inflection(math.log(5.0)) - expect) < 1e-12
    wc = cumulant_inflection(2.0)
    assert cumulant(2.0, wc - 0.01, 3) > 0.0 > cumulant(2.0, wc + 0.01, 3)
    with pytest.raises(DomainError):
        cumulant_inflection(1.0)


def test_tangency_self_consistency():
    beta = 2.0
    w1, k1, k2 = tangency(beta)
    g = w1 * cumulant(beta, w1, 2) - cumulant(beta, w1, 1)
    assert abs(g) < 1e-11
    k1_alt = w1 / (2.0 * beta * cumulant(beta, w1, 1))
    assert abs(k1 - k1_alt) < 1e-11
    assert w1 > cumulant_inflection(beta)
    assert k1 < k2


def test_positive_well():
    beta, K = 1.0, 1.5
    params = CanonicalParams(beta, K)
    w = positive_well(beta, K)
    assert w > 0.0
    assert abs(tilt_potential(params, w, 1)) < 1e-12
    assert tilt_potential(params, w, 2) > 0.0
    assert positive_well(1.0, 1.3) < positive_well(1.0, 1.6)
    with pytest.raises(DomainError):
        positive_well(1.0, 1.0)


def test_positive_well_approaches_tangency_point():
    beta = 2.0
    w1, k1, _ = tangency(beta)
    gaps = [positive_well(beta, k1 + d) - w1 for d in (1e-2, 1e-3, 1e-4, 1e-5)]
    assert all(g > 0.0 for g in gaps)
    assert all(a > b for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 0.05


def test_well_depth_signs_and_monotonicity():
    beta = 2.0
    w1, k1, k2 = tangency(beta)
    assert well_depth(beta, k1) > 0.0
    assert well_depth(beta, k2) < 0.0
    ds = [well_depth(beta, K) for K in np.linspace(k1, k2, 20)]
    assert all(a > b for a, b in zip(ds, ds[1:]))


def test_first_order_coupling():
    beta = 2.0
    kc1 = first_order_coupling(beta)
    w1, k1, k2 = tangency(beta)
    assert k1 < kc1 < k2
    assert abs(well_depth(beta, kc1)) < 1e-10
    assert abs(first_order_coupling(BETA_C + 1e-3) - 1.0820) < 1e-2
    assert 1.0 < first_order_coupling(5.0) < 1.0820


def test_criticals_report():
    low = canonical_criticals(1.0)
    assert low.k_second_order is not None and low.k_first_order is None
    high = canonical_criticals(2.0)
    assert high.k_second_order is None
    assert high.k_tangent < high.k_first_order < high.k_spinodal
    assert not high.near_tricritical
    # decimal approximations of log 4 take the continuous branch
    snapped = canonical_criticals(1.3862944)
    assert snapped.k_second_order is not None


# ---------------------------------------------------------------------------
# solver
# ---------------------------------------------------------------------------

def test_solve_unique_phase():
    sol = solve_canonical(CanonicalParams(1.0, 1.0))
    assert sol.z_points == (0.0,)
    assert sol.phase_label == "unique"
    assert sol.macrostates[0].isclose(single_site_measure(1.0), tol=1e-12)


def test_solve_pair_phase_swap_symmetry():
    sol = solve_canonical(CanonicalParams(1.0, 1.5))
    assert sol.phase_label == "pair"
    lo, hi = sol.macrostates
    assert lo.nu_minus == hi.nu_plus
    assert lo.nu_zero == hi.nu_zero
    assert lo.nu_plus == hi.nu_minus
    assert sol.z_points[1] > 0.0
    for z, w in zip(sol.z_points, sol.w_points):
        assert w == 2.0 * 1.0 * 1.5 * z
        assert abs(mag_potential(sol.params, z, 1)) < 1e-10
        assert mag_potential(sol.params, z, 0) - sol.min_value < 1e-12


def test_solve_triple_at_first_order_coupling():
    beta = 2.0
    kc1 = first_order_coupling(beta)
    sol = solve_canonical(CanonicalParams(beta, kc1))
    assert sol.phase_label == "triple"
    gvals = [mag_potential(sol.params, z, 0) for z in sol.z_points]
    assert max(gvals) - min(gvals) < 1e-12
    assert all(abs(mag_potential(sol.params, z, 1)) < 1e-10 for z in sol.z_points)


def test_branch_boundaries():
    for beta in (0.7, 1.0, BETA_C):
        kc2 = second_order_coupling(beta)
        assert len(solve_canonical(CanonicalParams(beta, kc2 - 1e-4)).z_points) == 1
        assert len(solve_canonical(CanonicalParams(beta, kc2)).z_points) == 1
        assert len(solve_canonical(CanonicalParams(beta, kc2 + 1e-4)).z_points) == 2
    for beta in (2.0, 3.0):
        kc1 = first_order_coupling(beta)
        assert len(solve_canonical(CanonicalParams(beta, kc1 - 1e-4)).z_points) == 1
        assert len(solve_canonical(CanonicalParams(beta, kc1)).z_points) == 3
        assert len(solve_canonical(CanonicalParams(beta, kc1 + 1e-4)).z_points) == 2


def test_continuity_versus_jump():
    kc2 = second_order_coupling(1.0)
    ladder = [max(solve_canonical(CanonicalParams(1.0, kc2 + d)).z_points)
              for d in (1e-2, 1e-3, 1e-4)]
    assert ladder[0] > ladder[1] > ladder[2] > 0.0
    kc1 = first_order_coupling(2.0)
    z_at = max(solve_canonical(CanonicalParams(2.0, kc1)).z_points)
    assert z_at > 0.1
    for d in (1e-2, 1e-3, 1e-4):
        z = max(solve_canonical(CanonicalParams(2.0, kc1 + d)).z_points)
        assert z >= z_at


def test_stationarity_via_rate_derivative():
    for beta, K in ((1.0, 1.5), (2.0, 1.2), (0.8, 2.0)):
        sol = solve_canonical(CanonicalParams(beta, K))
        for z in sol.z_points:
            if z != 0.0:
                assert abs(cramer_rate_prime(beta, z) - 2.0 * beta * K * z) < 1e-8


def test_lifted_means_match_minimizers():
    for beta, K in ((1.0, 1.5), (2.0, 1.05), (3.0, 1.4), (0.5, 3.0)):
        sol = solve_canonical(CanonicalParams(beta, K))
        for z, mac in zip(sol.z_points, sol.macrostates):
            assert abs(mac.mean() - z) < 1e-10


def test_duality_of_both_minimization_routes():
    rng = np.random.default_rng(31)
    for _ in range(10):
        params = CanonicalParams(rng.uniform(0.2, 4.0), rng.uniform(0.2, 3.0))
        dual_val, dual_args = dual_route_minimum(params)
        sol = solve_canonical(params)
        assert abs(dual_val - sol.min_value) < 1e-9
        assert len(dual_args) == len(sol.z_points)
        for a, b in zip(dual_args, sol.z_points):
            assert abs(a - b) < 1e-8


def test_solver_matches_simplex_oracle():
    rng = np.random.default_rng(37)
    from conftest import assert_sets_close

    for _ in range(4):
        beta = rng.uniform(0.4, 2.8)
        K = rng.uniform(0.3, 2.2)
        sol = solve_canonical(CanonicalParams(beta, K))
        minima, _ = simplex_oracle("canonical", beta=beta, K=K, grid_step=5e-4)
        assert_sets_close(sol.macrostates, minima, tol=2e-3)


def test_free_energy():
    params = CanonicalParams(1.0, 0.9)   # below critical
    rho = single_site_measure(1.0)
    expect = rel_entropy(rho, UNIFORM) + 1.0 * energy_per_site(rho, 0.9)
    assert abs(canonical_free_energy(params) - expect) < 1e-14

    pair = CanonicalParams(1.0, 1.5)
    sol = solve_canonical(pair)
    vals = [rel_entropy(m, UNIFORM) + 1.0 * energy_per_site(m, 1.5)
            for m in sol.macrostates]
    assert abs(vals[0] - vals[1]) < 1e-10

    rng = np.random.default_rng(41)
    for _ in range(5):
        beta = rng.uniform(0.4, 2.5)
        K = rng.uniform(0.3, 2.0)
        _, oracle_val = simplex_oracle("canonical", beta=beta, K=K, grid_step=1e-3)
        assert abs(canonical_free_energy(CanonicalParams(beta, K)) - oracle_val) < 1e-5


def test_free_energy_duality_chain():
    # the free energy equals the potential minimum shifted by the log
    # normalizer of the single-site tilt: min G - log((1 + 2 e^-beta)/3)
    for beta, K in ((0.8, 0.9), (1.0, 1.5), (2.3, 1.1)):
        sol = solve_canonical(CanonicalParams(beta, K))
        shift = math.log((1.0 + 2.0 * math.exp(-beta)) / 3.0)
        assert abs(canonical_free_energy(CanonicalParams(beta, K))
                   - (sol.min_value - shift)) < 1e-10
