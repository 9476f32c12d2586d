import math

import numpy as np
import pytest

from sparsedoa import (
    ArraySpec,
    SourceScenario,
    empirical_snr,
    steering_vector,
    synthesize,
)
from sparsedoa.synthesis import db_to_linear, noise_variance


def test_db_magnitude_convention():
    assert np.allclose(db_to_linear([22.0, 20.0]), [10 ** 1.1, 10.0])
    assert db_to_linear(0.0) == pytest.approx(1.0)
    assert db_to_linear(-4.0) == pytest.approx(0.631, abs=1e-3)


def test_noiseless_single_source_is_scaled_steering_vector():
    arr = ArraySpec(12)
    sc = SourceScenario([17.0], [1.0])
    snaps, X = synthesize(sc, arr, 1, math.inf, seed=5)
    a = steering_vector(17.0, arr)
    assert np.allclose(snaps.data[:, 0], a * X[0, 0])
    assert np.linalg.norm(snaps.data) == pytest.approx(1.0)


def test_fixed_seed_bit_identical():
    arr = ArraySpec(8)
    sc = SourceScenario.from_db([2.0, 75.0], [22.0, 20.0])
    a, Xa = synthesize(sc, arr, 7, 10.0, seed=123)
    b, Xb = synthesize(sc, arr, 7, 10.0, seed=123)
    assert np.array_equal(a.data, b.data)
    assert np.array_equal(Xa, Xb)
    c, _ = synthesize(sc, arr, 7, 10.0, seed=124)
    assert not np.array_equal(a.data, c.data)


def test_coherent_model_has_rank_one_sources():
    sc = SourceScenario([0.0, 10.0], [1.0, 1.0], "coherent_fixed")
    _, X = synthesize(sc, ArraySpec(4), 32, 20.0, seed=3)
    assert np.linalg.matrix_rank(X, tol=1e-10) == 1
    # all columns literally proportional to the first
    ratios = X / X[:, :1]
    assert np.allclose(ratios, ratios[0, 0])


def test_average_snr_matches_target():
    # Monte-Carlo average of the realized SNR over many seeds
    arr = ArraySpec(20)
    sc = SourceScenario.from_db([2.0, 75.0], [22.0, 20.0])
    target = 10.0
    sigma2 = noise_variance(sc.magnitudes, arr.num_sensors, target)
    A = steering_vector(sc.doas_deg, arr)
    ratios = []
    for seed in range(1000):
        rng = np.random.default_rng(seed)
        phases = rng.uniform(0, 2 * np.pi, size=(2, 1))
        X = sc.magnitudes[:, None] * np.exp(1j * phases)
        noise = np.sqrt(sigma2 / 2) * (
            rng.standard_normal((20, 1)) + 1j * rng.standard_normal((20, 1))
        )
        ratios.append((np.abs(A @ X) ** 2).sum() / (np.abs(noise) ** 2).sum())
    avg_db = 10 * np.log10(np.mean(ratios))
    assert abs(avg_db - target) < 0.3


def test_single_realization_snr_close_at_l50():
    arr = ArraySpec(20)
    sc = SourceScenario.from_db([2.0, 75.0], [22.0, 20.0])
    snaps, X = synthesize(sc, arr, 50, 5.0, seed=11)
    A = steering_vector(sc.doas_deg, arr)
    signal = A @ X
    noise = snaps.data - signal
    assert empirical_snr(signal, noise) == pytest.approx(5.0, abs=0.5)


def test_empirical_snr_basics():
    s = np.full((5, 2), 10.0 + 0j)  # energy 1000
    n = np.full((5, 2), 1.0 + 0j)   # energy 10
    assert empirical_snr(s, n) == pytest.approx(20.0)
    assert empirical_snr(n, n) == pytest.approx(0.0)
    assert empirical_snr(s, np.zeros_like(s)) == math.inf
    with pytest.raises(ValueError):
        empirical_snr(s, n[:3])


def test_sample_covariance_limit_of_incoherent_sources():
    # with iid phases and many snapshots the signal covariance approaches
    # sum_k |x_k|^2 a_k a_k^H
    arr = ArraySpec(10)
    sc = SourceScenario([-20.0, 30.0], [1.0, 0.5])
    snaps, X = synthesize(sc, arr, 10_000, math.inf, seed=7)
    A = steering_vector(sc.doas_deg, arr)
    C = (snaps.data @ snaps.data.conj().T) / snaps.num_snapshots
    C_expected = sum(
        m**2 * np.outer(A[:, k], A[:, k].conj())
        for k, m in enumerate(sc.magnitudes)
    )
    rel = np.linalg.norm(C - C_expected) / np.linalg.norm(C_expected)
    assert rel < 0.10


def test_scenario_validation():
    with pytest.raises(ValueError):
        SourceScenario([0.0, 0.0], [1.0, 1.0])  # duplicate DOAs
    with pytest.raises(ValueError):
        SourceScenario([0.0], [-1.0])  # negative magnitude
    with pytest.raises(ValueError):
        SourceScenario([0.0], [1.0], "unknown_model")
    with pytest.raises(ValueError):
        synthesize(SourceScenario([0.0], [1.0]), ArraySpec(4), 0, 10.0, 1)


def test_off_grid_doas_supported():
    arr = ArraySpec(16)
    sc = SourceScenario([13.37], [1.0])  # not on any half-degree grid
    snaps, X = synthesize(sc, arr, 1, math.inf, seed=1)
    assert np.allclose(snaps.data[:, 0], steering_vector(13.37, arr) * X[0, 0])
