import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sphere_ot.costs import antenna, cost_matrix, quadratic
from sphere_ot.errors import (
    ConfigError,
    CutLocusError,
    DomainError,
    PlanInvariantError,
)
from sphere_ot.geometry import SpherePoint, fibonacci_rows, sample_sphere
from sphere_ot.transport import (
    DiscreteMeasure,
    TransportMap,
    TransportPlan,
    check_c_monotone,
    extract_map,
    gradient_inclusion_margin,
    load_measure,
    load_plan,
    pushforward_check,
    save_measure,
    save_plan,
    solve_entropic,
    solve_exact,
)

PROFILES = [quadratic(), antenna()]


def random_instance(rng, m, n, dim=3, equal=False):
    mu0 = DiscreteMeasure.from_rows(
        sample_sphere(rng, m, dim),
        None if equal else rng.random(m) + 0.1,
    )
    mu1 = DiscreteMeasure.from_rows(
        sample_sphere(rng, n, dim),
        None if equal else rng.random(n) + 0.1,
    )
    return mu0, mu1


def permutation_optimum(profile, mu0, mu1):
    C = cost_matrix(profile, mu0.rows, mu1.rows)
    k = len(mu0)
    return min(
        float(sum(C[i, p[i]] for i in range(k))) / k
        for p in itertools.permutations(range(k))
    )


# ---------------------------------------------------------------------------
# DiscreteMeasure construction invariants
# ---------------------------------------------------------------------------


def test_measure_normalizes_weights(rng):
    mu = DiscreteMeasure.from_rows(sample_sphere(rng, 8, 3), rng.random(8) + 0.5)
    assert abs(mu.weights.sum() - 1.0) <= 1e-12
    assert (mu.weights > 0).all()


def test_measure_merges_near_duplicates(rng):
    rows = sample_sphere(rng, 4, 3)
    stacked = np.vstack([rows, rows[1] + 1e-13, rows[3]])
    mu = DiscreteMeasure.from_rows(stacked, [0.1, 0.2, 0.3, 0.15, 0.05, 0.2])
    assert len(mu) == 4
    w = mu.weights
    assert abs(w[1] - 0.25) <= 1e-12
    assert abs(w[3] - 0.35) <= 1e-12
    assert abs(w.sum() - 1.0) <= 1e-12


def test_measure_drops_zero_weights(rng):
    rows = sample_sphere(rng, 5, 3)
    mu = DiscreteMeasure.from_rows(rows, [0.25, 0.0, 0.25, 0.25, 0.25])
    assert len(mu) == 4
    assert (mu.weights > 0).all()


def test_measure_rejects_bad_weights(rng):
    rows = sample_sphere(rng, 3, 3)
    with pytest.raises(DomainError):
        DiscreteMeasure.from_rows(rows, [0.5, -0.1, 0.6])
    with pytest.raises(DomainError):
        DiscreteMeasure.from_rows(rows, [0.0, 0.0, 0.0])
    with pytest.raises(DomainError):
        DiscreteMeasure.from_rows(rows, [0.5, 0.5])


@settings(max_examples=40, deadline=None)
@given(
    st.integers(2, 9),
    st.lists(st.floats(0.01, 10.0), min_size=2, max_size=9),
    st.integers(0, 10**6),
)
def test_measure_mass_conserved_under_merge(k, raw, seed):
    rng = np.random.default_rng(seed)
    rows = sample_sphere(rng, k, 3)
    weights = np.resize(np.asarray(raw), k)
    dup = rng.integers(0, k)
    stacked = np.vstack([rows, rows[dup]])
    mu = DiscreteMeasure.from_rows(stacked, np.append(weights, weights[dup]))
    assert abs(mu.weights.sum() - 1.0) <= 1e-12
    assert len(mu) <= k
    base = DiscreteMeasure.from_rows(rows, weights)
    if len(mu) == len(base):
        total = weights.sum() + weights[dup]
        expect = np.array(
            [(w + (w if i == dup else 0.0)) / total for i, w in enumerate(weights)]
        )
        np.testing.assert_allclose(mu.weights, expect, atol=1e-12)


# ---------------------------------------------------------------------------
# Exact solver against independent oracles
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("profile", PROFILES, ids=lambda p: p.kind)
def test_exact_matches_permutation_oracle(rng, profile):
    for _ in range(25):
        mu0, mu1 = random_instance(rng, 6, 6, equal=True)
        plan = solve_exact(mu0, mu1, profile)
        best = permutation_optimum(profile, mu0, mu1)
        assert abs(plan.total_cost - best) <= 1e-10


@pytest.mark.parametrize("profile", PROFILES, ids=lambda p: p.kind)
def test_exact_matches_lp_oracle_weighted(rng, profile):
    linprog = pytest.importorskip("scipy.optimize").linprog
    for _ in range(8):
        m, n = int(rng.integers(3, 8)), int(rng.integers(3, 8))
        mu0, mu1 = random_instance(rng, m, n)
        m, n = len(mu0), len(mu1)
        plan = solve_exact(mu0, mu1, profile)
        C = cost_matrix(profile, mu0.rows, mu1.rows)
        A_eq = np.zeros((m + n, m * n))
        for i in range(m):
            A_eq[i, i * n : (i + 1) * n] = 1.0
        for j in range(n):
            A_eq[m + j, j::n] = 1.0
        rhs = np.concatenate([mu0.weights, mu1.weights])
        res = linprog(C.ravel(), A_eq=A_eq[:-1], b_eq=rhs[:-1], bounds=(0, None))
        assert res.status == 0
        assert abs(plan.total_cost - res.fun) <= 1e-9


def test_identity_instance_is_diagonal(rng):
    rows = fibonacci_rows(3, 10)
    mu = DiscreteMeasure.from_rows(rows)
    plan = solve_exact(mu, mu, quadratic())
    assert abs(plan.total_cost) <= 1e-12
    np.testing.assert_allclose(plan.dense(), np.eye(10) / 10.0, atol=1e-12)
    plan_a = solve_exact(mu, mu, antenna())
    assert abs(plan_a.total_cost - float(antenna().f(0.0))) <= 1e-12
    np.testing.assert_allclose(plan_a.dense(), np.eye(10) / 10.0, atol=1e-12)


@pytest.mark.parametrize("profile", PROFILES, ids=lambda p: p.kind)
def test_plan_invariants_on_random_solves(rng, profile):
    for _ in range(5):
        mu0, mu1 = random_instance(rng, int(rng.integers(2, 12)), int(rng.integers(2, 12)))
        plan = solve_exact(mu0, mu1, profile)
        plan.validate()
        assert plan.dual_phi[0] == 0.0
        assert plan.marginal_error() <= 1e-12
        ii, jj, _ = plan.support()
        C = cost_matrix(profile, mu0.rows, mu1.rows)
        slack = plan.dual_phi[ii] + plan.dual_phic[jj] + C[ii, jj]
        assert np.abs(slack).max() <= 1e-10
        duality = plan.total_cost + plan.dual_phi @ mu0.weights + plan.dual_phic @ mu1.weights
        assert abs(duality) <= 1e-10


def test_validate_rejects_corrupt_plans(rng):
    mu0, mu1 = random_instance(rng, 5, 5)
    plan = solve_exact(mu0, mu1, quadratic())
    bad = plan.dense()
    bad[0] *= 0.5
    broken = TransportPlan(
        source=mu0,
        target=mu1,
        entries=bad,
        dual_phi=plan.dual_phi,
        dual_phic=plan.dual_phic,
        total_cost=plan.total_cost,
        profile=plan.profile,
    )
    with pytest.raises(PlanInvariantError):
        broken.validate()
    shifted = TransportPlan(
        source=mu0,
        target=mu1,
        entries=plan.entries,
        dual_phi=plan.dual_phi + 1.0,
        dual_phic=plan.dual_phic,
        total_cost=plan.total_cost,
        profile=plan.profile,
    )
    with pytest.raises(PlanInvariantError):
        shifted.validate()


def test_exchange_stability_under_permutation(rng):
    mu0, mu1 = random_instance(rng, 7, 9)
    plan = solve_exact(mu0, mu1, quadratic())
    pi = rng.permutation(len(mu0))
    sigma = rng.permutation(len(mu1))
    mu0p = DiscreteMeasure.from_rows(mu0.rows[pi], mu0.weights[pi])
    mu1p = DiscreteMeasure.from_rows(mu1.rows[sigma], mu1.weights[sigma])
    planp = solve_exact(mu0p, mu1p, quadratic())
    assert abs(plan.total_cost - planp.total_cost) <= 1e-12
    np.testing.assert_allclose(
        planp.dense(), plan.dense()[np.ix_(pi, sigma)], atol=1e-12
    )


def test_exact_solver_is_deterministic(rng):
    mu0, mu1 = random_instance(rng, 8, 8)
    one = solve_exact(mu0, mu1, antenna())
    two = solve_exact(mu0, mu1, antenna())
    assert one.total_cost == two.total_cost
    assert (one.dense() == two.dense()).all()
    assert (one.dual_phi == two.dual_phi).all()
    assert (one.dual_phic == two.dual_phic).all()


def test_needed_pair_beyond_cut_raises():
    north = DiscreteMeasure.from_rows(np.array([[0.0, 0.0, 1.0]]))
    south = DiscreteMeasure.from_rows(np.array([[0.0, 0.0, -1.0]]))
    with pytest.raises(CutLocusError):
        solve_exact(north, south, quadratic())


def test_avoidable_pair_beyond_cut_is_excluded():
    mu0 = DiscreteMeasure.from_rows(np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]))
    mu1 = DiscreteMeasure.from_rows(np.array([[0.0, 0.0, -1.0], [0.0, 1.0, 0.0]]))
    plan = solve_exact(mu0, mu1, quadratic())
    assert plan.dense()[0, 0] == 0.0
    plan.validate()


def test_exact_size_limit(rng):
    rows = sample_sphere(rng, 513, 3)
    mu = DiscreteMeasure.from_rows(rows)
    small = DiscreteMeasure.from_rows(rows[:4])
    with pytest.raises(DomainError):
        solve_exact(mu, small, quadratic())


# ---------------------------------------------------------------------------
# Entropic solver
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("profile", PROFILES, ids=lambda p: p.kind)
def test_entropic_gap_small_epsilon(rng, profile):
    mu0, mu1 = random_instance(rng, 6, 6, equal=True)
    exact = solve_exact(mu0, mu1, profile)
    ent = solve_entropic(mu0, mu1, profile, 1e-3)
    ent.validate()
    gap = ent.total_cost - exact.total_cost
    assert -1e-12 <= gap <= 1e-2
    assert ent.marginal_error() <= 1e-12


def test_entropic_identity_cost_bound(rng):
    rows = fibonacci_rows(3, 20)
    mu = DiscreteMeasure.from_rows(rows)
    for eps in (0.1, 0.05):
        ent = solve_entropic(mu, mu, quadratic(), eps)
        assert ent.total_cost <= eps * math.log(20)


def test_entropic_gap_decreases_with_epsilon(rng):
    mu0, mu1 = random_instance(rng, 8, 8)
    exact = solve_exact(mu0, mu1, quadratic())
    gaps = []
    for eps in (0.5, 0.2, 0.1, 0.05, 0.02, 0.01):
        ent = solve_entropic(mu0, mu1, quadratic(), eps)
        gaps.append(ent.total_cost - exact.total_cost)
    assert all(g >= -1e-12 for g in gaps)
    for earlier, later in zip(gaps, gaps[1:]):
        assert later <= earlier + 1e-8 * (1.0 + abs(earlier))


def test_entropic_budget_flag(rng):
    mu0, mu1 = random_instance(rng, 7, 7)
    ent = solve_entropic(mu0, mu1, quadratic(), 1e-3, rounds=3)
    assert not ent.converged
    assert ent.marginal_error() <= 1e-9
    ent.validate()


# ---------------------------------------------------------------------------
# Map extraction and certification
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("profile", PROFILES, ids=lambda p: p.kind)
def test_extract_map_total_on_equal_weights(rng, profile):
    mu0, mu1 = random_instance(rng, 9, 9, equal=True)
    plan = solve_exact(mu0, mu1, profile)
    tmap = extract_map(plan)
    assert tmap.total
    assert sorted(tmap.target_index) == list(range(9))
    assert gradient_inclusion_margin(plan, tmap) <= 1e-6


def test_extract_map_flags_genuine_splits():
    mu0 = DiscreteMeasure.from_rows(np.array([[0.0, 0.0, 1.0]]))
    mu1 = DiscreteMeasure.from_rows(
        np.array([[1.0, 0.0, 0.1], [-1.0, 0.0, 0.1]]), [0.5, 0.5]
    )
    plan = solve_exact(mu0, mu1, quadratic())
    tmap = extract_map(plan)
    assert tmap.split[0]
    assert tmap.target_index[0] == -1
    assert not tmap.total


def test_identity_map_on_identity_instance(rng):
    rows = fibonacci_rows(3, 12)
    mu = DiscreteMeasure.from_rows(rows)
    tmap = extract_map(solve_exact(mu, mu, quadratic()))
    assert tmap.total
    assert (tmap.target_index == np.arange(12)).all()
    np.testing.assert_allclose(tmap.image_rows(), mu.rows, atol=0)


@pytest.mark.parametrize("profile", PROFILES, ids=lambda p: p.kind)
def test_optimal_plans_are_two_point_monotone(rng, profile):
    for _ in range(6):
        mu0, mu1 = random_instance(rng, int(rng.integers(4, 12)), int(rng.integers(4, 12)))
        report = check_c_monotone(solve_exact(mu0, mu1, profile))
        assert report.ok
        assert report.worst_margin >= -1e-9


def test_swapped_assignment_fails_monotonicity():
    x1, x2 = SpherePoint([1.0, 0.0, 0.0]), SpherePoint([0.0, 1.0, 0.0])
    mu = DiscreteMeasure.uniform((x1, x2))
    swapped = TransportMap(
        source=mu, target=mu, target_index=np.array([1, 0]), split=np.zeros(2, bool)
    )
    report = check_c_monotone(swapped, quadratic())
    assert not report.ok
    assert report.worst_margin < -1e-3


def test_monotone_check_requires_profile_for_maps():
    x1, x2 = SpherePoint([1.0, 0.0, 0.0]), SpherePoint([0.0, 1.0, 0.0])
    mu = DiscreteMeasure.uniform((x1, x2))
    tmap = TransportMap(
        source=mu, target=mu, target_index=np.array([0, 1]), split=np.zeros(2, bool)
    )
    with pytest.raises(DomainError):
        check_c_monotone(tmap)


# ---------------------------------------------------------------------------
# Pushforward certification
# ---------------------------------------------------------------------------


def test_pushforward_zero_for_exact_permutation(rng):
    mu0, mu1 = random_instance(rng, 10, 10, equal=True)
    plan = solve_exact(mu0, mu1, quadratic())
    tmap = extract_map(plan)
    assert pushforward_check(tmap, mu0, mu1, 0.5) == 0.0


def test_pushforward_small_for_rounded_entropic(rng):
    rows = fibonacci_rows(3, 15)
    mu = DiscreteMeasure.from_rows(rows)
    ent = solve_entropic(mu, mu, quadratic(), 1e-3)
    tmap = extract_map(ent)
    assert tmap.total
    assert pushforward_check(tmap, mu, mu, 0.4) <= 1e-6


def test_pushforward_detects_corrupted_map(rng):
    mu0, mu1 = random_instance(rng, 12, 12, equal=True)
    tmap = extract_map(solve_exact(mu0, mu1, quadratic()))
    idx = tmap.target_index.copy()
    idx[0] = idx[1]
    corrupted = TransportMap(
        source=mu0, target=mu1, target_index=idx, split=np.zeros(12, bool)
    )
    assert pushforward_check(corrupted, mu0, mu1, 0.3) >= 1.0 / 24.0


def test_pushforward_needs_total_map():
    mu0 = DiscreteMeasure.from_rows(np.array([[0.0, 0.0, 1.0]]))
    mu1 = DiscreteMeasure.from_rows(
        np.array([[1.0, 0.0, 0.1], [-1.0, 0.0, 0.1]]), [0.5, 0.5]
    )
    tmap = extract_map(solve_exact(mu0, mu1, quadratic()))
    with pytest.raises(DomainError):
        pushforward_check(tmap, mu0, mu1, 0.3)


# ---------------------------------------------------------------------------
# Plan and measure round-trips
# ---------------------------------------------------------------------------


def test_plan_roundtrip_exact(rng, tmp_path):
    mu0, mu1 = random_instance(rng, 6, 8)
    plan = solve_exact(mu0, mu1, antenna())
    path = tmp_path / "plan.csv"
    save_plan(path, plan)
    back = load_plan(path, mu0, mu1)
    assert back.total_cost == plan.total_cost
    assert back.method == "exact"
    assert back.profile.kind == "antenna"
    assert (back.dense() == plan.dense()).all()
    assert (back.dual_phi == plan.dual_phi).all()
    assert (back.dual_phic == plan.dual_phic).all()
    back.validate()


def test_plan_roundtrip_rejects_mismatched_measures(rng, tmp_path):
    mu0, mu1 = random_instance(rng, 6, 8)
    plan = solve_exact(mu0, mu1, quadratic())
    path = tmp_path / "plan.csv"
    save_plan(path, plan)
    with pytest.raises(ConfigError):
        load_plan(path, mu1, mu0)


def test_measure_roundtrip(rng, tmp_path):
    mu = DiscreteMeasure.from_rows(sample_sphere(rng, 9, 4), rng.random(9) + 0.2)
    path = tmp_path / "mu.txt"
    save_measure(path, mu)
    back = load_measure(path, 4)
    np.testing.assert_allclose(back.rows, mu.rows, atol=0)
    np.testing.assert_allclose(back.weights, mu.weights, atol=0)
