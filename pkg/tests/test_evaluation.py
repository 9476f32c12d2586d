import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparsedoa import (
    AngularGrid,
    ArraySpec,
    EvalOptions,
    SourceScenario,
    build_sensing_matrix,
    cs_doa_estimate,
    exhaustive_ml,
    monte_carlo,
    pair_and_rmse,
    synthesize,
)
from sparsedoa.evaluation import EvalReport, MISS_PENALTY_DEG

from oracles import lstsq_subset_residual


# --- pair_and_rmse -----------------------------------------------------------

def test_exact_match_and_permutation():
    assert pair_and_rmse([0.0, 10.0], [0.0, 10.0]).rmse == 0.0
    res = pair_and_rmse([10.0, 0.0], [0.0, 10.0])
    assert res.rmse == 0.0
    assert res.assignment == (1, 0)


def test_rmse_arithmetic():
    res = pair_and_rmse([-2.5, 2.0, 74.0], [-3.0, 2.0, 75.0])
    assert res.rmse == pytest.approx(math.sqrt((0.25 + 0.0 + 1.0) / 3), abs=1e-4)
    assert res.rmse == pytest.approx(0.6455, abs=1e-4)


def test_short_list_penalized():
    res = pair_and_rmse([2.0], [2.0, 75.0])
    assert res.padded
    assert res.rmse == pytest.approx(math.sqrt(MISS_PENALTY_DEG**2 / 2))
    assert res.assignment == (0, None)
    with pytest.raises(ValueError):
        pair_and_rmse([1.0, 2.0, 3.0], [0.0, 1.0])  # more estimates than truths


@settings(max_examples=60, deadline=None)
@given(
    angles=st.lists(st.floats(-90, 90), min_size=1, max_size=5),
    seed=st.integers(0, 10_000),
)
def test_pairing_invariant_under_input_order(angles, seed):
    rng = np.random.default_rng(seed)
    truth = np.asarray(angles)
    est = truth + rng.normal(0, 1.0, size=len(angles))
    base = pair_and_rmse(est, truth).rmse
    p = rng.permutation(len(angles))
    q = rng.permutation(len(angles))
    assert pair_and_rmse(est[p], truth[q]).rmse == pytest.approx(base, rel=1e-12)


# --- exhaustive_ml -----------------------------------------------------------

@pytest.fixture(scope="module")
def A_mid():
    return build_sensing_matrix(AngularGrid.from_range(-90, 90, 3.0), ArraySpec(16))


def test_exhaustive_single_source_noiseless(A_mid):
    sc = SourceScenario([12.0], [1.0])
    snaps, _ = synthesize(sc, A_mid.array, 1, math.inf, seed=1)
    res = exhaustive_ml(A_mid, snaps.data, 1)
    assert res.doas_deg[0] == pytest.approx(12.0)
    resid = lstsq_subset_residual(A_mid.entries, snaps.data, res.indices)
    assert resid < 1e-10


def test_exhaustive_pair_beats_random_subsets(A_mid):
    sc = SourceScenario([-30.0, 21.0], [1.0, 0.8])
    snaps, _ = synthesize(sc, A_mid.array, 2, 15.0, seed=2)
    res = exhaustive_ml(A_mid, snaps.data, 2)
    best = lstsq_subset_residual(A_mid.entries, snaps.data, res.indices)
    rng = np.random.default_rng(3)
    for _ in range(1000):
        sub = rng.choice(A_mid.shape[1], 2, replace=False)
        assert best <= lstsq_subset_residual(A_mid.entries, snaps.data, sub) + 1e-9


def test_exhaustive_pair_matches_brute_force():
    A = build_sensing_matrix(AngularGrid.from_range(-90, 90, 10.0), ArraySpec(8))
    rng = np.random.default_rng(4)
    Y = rng.standard_normal((8, 2)) + 1j * rng.standard_normal((8, 2))
    res = exhaustive_ml(A, Y, 2)
    scores = {
        pair: lstsq_subset_residual(A.entries, Y, pair)
        for pair in combinations(range(A.shape[1]), 2)
    }
    brute = min(scores, key=scores.get)
    assert tuple(res.indices) == brute


def test_exhaustive_triple_matches_brute_force():
    A = build_sensing_matrix(AngularGrid.from_range(-80, 80, 8.0), ArraySpec(10))
    sc = SourceScenario([-40.0, 0.0, 32.0], [1.0, 0.7, 0.9])
    snaps, _ = synthesize(sc, A.array, 1, 20.0, seed=5)
    res = exhaustive_ml(A, snaps.data, 3)
    scores = {
        trip: lstsq_subset_residual(A.entries, snaps.data, trip)
        for trip in combinations(range(A.shape[1]), 3)
    }
    brute = min(scores, key=scores.get)
    assert tuple(res.indices) == brute


def test_exhaustive_refuses_large_k(A_mid):
    with pytest.raises(ValueError, match=r"refused.*subsets"):
        exhaustive_ml(A_mid, np.zeros((16, 1), complex), 4)


def test_exhaustive_on_two_source_scenario(A_fine, two_source_scenario):
    snaps, _ = synthesize(two_source_scenario, A_fine.array, 1, 20.0, seed=6)
    res = exhaustive_ml(A_fine, snaps.data, 2)
    est = sorted(res.doas_deg)
    assert abs(est[0] - 2.0) <= 0.5
    assert abs(est[1] - 75.0) <= 1.0


# --- cs_doa_estimate ---------------------------------------------------------

def test_cs_estimate_two_sources(A_fine, two_source_scenario):
    snaps, _ = synthesize(two_source_scenario, A_fine.array, 1, 20.0, seed=7)
    est = cs_doa_estimate(A_fine, snaps.data, 2)
    assert est.doas_deg.size == 2
    assert not est.short
    got = sorted(est.doas_deg)
    assert abs(got[0] - 2.0) <= 0.5
    assert abs(got[1] - 75.0) <= 1.0


def test_cs_estimate_close_triple_multisnapshot(A_fine, three_source_scenario):
    snaps, _ = synthesize(three_source_scenario, A_fine.array, 50, 15.0, seed=8)
    est = cs_doa_estimate(A_fine, snaps.data, 3)
    pair = pair_and_rmse(est.doas_deg, three_source_scenario.doas_deg)
    assert pair.rmse < 1.5


# --- monte_carlo -------------------------------------------------------------

@pytest.fixture(scope="module")
def small_report(A_fine, two_source_scenario):
    return monte_carlo(
        two_source_scenario,
        A_fine,
        ["CBF", "CS"],
        [10.0, 20.0],
        trials=8,
        L=1,
        seed=99,
    )


def test_monte_carlo_structure(small_report, two_source_scenario):
    rep = small_report
    assert set(rep.methods) == {"CBF", "CS"}
    for stats in rep.methods.values():
        assert [s.snr_db for s in stats] == [10.0, 20.0]
        for s in stats:
            assert s.trial_count == 8
            assert s.failures == 0
            mass = sum(s.histogram_counts)
            assert mass + s.missing_picks == 8 * two_source_scenario.num_sources
            assert s.rmse_deg >= 0.0


def test_monte_carlo_reproducible(A_fine, two_source_scenario, small_report):
    again = monte_carlo(
        two_source_scenario, A_fine, ["CBF", "CS"], [10.0, 20.0],
        trials=8, L=1, seed=99,
    )
    for m in ("CBF", "CS"):
        for a, b in zip(small_report.methods[m], again.methods[m]):
            assert a.rmse_deg == b.rmse_deg
            assert a.histogram_angles == b.histogram_angles
            assert a.histogram_counts == b.histogram_counts


def test_monte_carlo_parallel_matches_serial(A_fine, two_source_scenario, small_report):
    par = monte_carlo(
        two_source_scenario, A_fine, ["CBF", "CS"], [10.0, 20.0],
        trials=8, L=1, seed=99, options=EvalOptions(workers=2),
    )
    for m in ("CBF", "CS"):
        for a, b in zip(small_report.methods[m], par.methods[m]):
            assert a.rmse_deg == b.rmse_deg
            assert a.histogram_counts == b.histogram_counts


def test_monte_carlo_records_method_failures(A_fine, three_source_scenario):
    # MVDR with 5 snapshots and 20 sensors trips the rank guard per trial
    rep = monte_carlo(
        three_source_scenario, A_fine, ["MVDR", "CBF"], [10.0],
        trials=3, L=5, seed=1,
    )
    mvdr = rep.methods["MVDR"][0]
    assert mvdr.failures == 3
    assert math.isnan(mvdr.rmse_deg)
    assert rep.methods["CBF"][0].failures == 0


def test_monte_carlo_rejects_unknown_method(A_fine, two_source_scenario):
    with pytest.raises(ValueError):
        monte_carlo(two_source_scenario, A_fine, ["ESPRIT"], [10.0], 1, 1, 0)


def test_report_round_trips_through_dict(small_report):
    d = small_report.to_dict()
    back = EvalReport.from_dict(d)
    assert back.to_dict() == d
