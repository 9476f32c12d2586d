"""Synthetic snapshot generation at an exact array SNR.

The array SNR is defined as ``10*log10(E||A x||^2 / E||n||^2)``. With
unit-norm steering vectors and independent uniform source phases the
expected signal energy per snapshot is ``sum_k |x_k|^2``, so the noise
variance follows in closed form from the target SNR and is held constant
across trials.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import ArraySpec, steering_vector

__all__ = [
    "SourceScenario",
    "SnapshotMeta",
    "SnapshotSet",
    "synthesize",
    "empirical_snr",
    "db_to_linear",
    "linear_to_db",
]

PHASE_MODELS = ("iid_uniform_per_snapshot", "coherent_fixed")


def db_to_linear(mag_db) -> np.ndarray:
    """Amplitude in dB to linear scale, ``|x| = 10**(dB/20)``."""
    return np.asarray(10.0 ** (np.asarray(mag_db, dtype=float) / 20.0))


def linear_to_db(mag) -> np.ndarray:
    """Linear amplitude to dB, ``20*log10|x|``."""
    return np.asarray(20.0 * np.log10(np.asarray(mag, dtype=float)))


@dataclass(frozen=True)
class SourceScenario:
    """Ground-truth sources: DOAs, linear magnitudes, and a phase model.

    ``iid_uniform_per_snapshot`` draws each source phase independently per
    snapshot (incoherent sources); ``coherent_fixed`` draws one phase per
    source and keeps it for all snapshots, so the source matrix has rank 1
    (fully coherent arrivals).
    """

    doas_deg: np.ndarray
    magnitudes: np.ndarray
    phase_model: str = "iid_uniform_per_snapshot"

    def __post_init__(self):
        doas = np.asarray(self.doas_deg, dtype=float)
        mags = np.asarray(self.magnitudes, dtype=float)
        doas.flags.writeable = False
        mags.flags.writeable = False
        object.__setattr__(self, "doas_deg", doas)
        object.__setattr__(self, "magnitudes", mags)
        if doas.ndim != 1 or doas.size < 1:
            raise ValueError("scenario needs at least one source")
        if len(set(doas.tolist())) != doas.size:
            raise ValueError("source DOAs must be pairwise distinct")
        if mags.shape != doas.shape:
            raise ValueError("magnitudes must match DOAs in length")
        if np.any(mags < 0):
            raise ValueError(f"magnitudes must be nonnegative, got {mags}")
        if self.phase_model not in PHASE_MODELS:
            raise ValueError(
                f"unknown phase model {self.phase_model!r}; "
                f"expected one of {PHASE_MODELS}"
            )

    @classmethod
    def from_db(cls, doas_deg, magnitudes_db, phase_model: str = "iid_uniform_per_snapshot"):
        """Scenario with magnitudes given in dB (20*log10 convention)."""
        return cls(np.asarray(doas_deg, float), db_to_linear(magnitudes_db), phase_model)

    @property
    def num_sources(self) -> int:
        return int(self.doas_deg.size)


@dataclass(frozen=True)
class SnapshotMeta:
    """Provenance of a snapshot set."""

    provenance: str = "synthetic"
    snr_db: float | None = None
    seed: int | None = None


@dataclass(frozen=True)
class SnapshotSet:
    """Complex M x L observation matrix plus provenance."""

    data: np.ndarray
    array: ArraySpec
    meta: SnapshotMeta = field(default_factory=SnapshotMeta)

    def __post_init__(self):
        data = np.ascontiguousarray(self.data, dtype=np.complex128)
        data.flags.writeable = False
        object.__setattr__(self, "data", data)
        if data.ndim != 2 or data.shape[1] < 1:
            raise ValueError("snapshot data must be an M x L matrix with L >= 1")
        if data.shape[0] != self.array.num_sensors:
            raise ValueError(
                f"data has {data.shape[0]} channels but the array has "
                f"{self.array.num_sensors} sensors"
            )

    @property
    def num_snapshots(self) -> int:
        return int(self.data.shape[1])


def noise_variance(magnitudes, num_sensors: int, snr_db: float) -> float:
    """Per-sample complex noise variance for the target array SNR."""
    signal_energy = float(np.sum(np.square(np.asarray(magnitudes, dtype=float))))
    if math.isinf(snr_db) and snr_db > 0:
        return 0.0
    return signal_energy / (num_sensors * 10.0 ** (snr_db / 10.0))


def synthesize(
    scenario: SourceScenario,
    array: ArraySpec,
    L: int,
    snr_db: float,
    seed,
) -> tuple[SnapshotSet, np.ndarray]:
    """Simulate ``Y = A_true X + N`` for L snapshots at an exact array SNR.

    Steering vectors are evaluated at the exact scenario DOAs (off-grid
    values allowed, nothing is snapped). Returns the snapshot set and the
    K x L ground-truth source matrix X.

    Parameters
    ----------
    seed : int or numpy.random.SeedSequence
        Fixed seed gives a bit-identical snapshot set.
    """
    if L < 1:
        raise ValueError("need at least one snapshot")
    rng = np.random.default_rng(seed)
    K = scenario.num_sources
    mags = scenario.magnitudes

    if scenario.phase_model == "iid_uniform_per_snapshot":
        phases = rng.uniform(0.0, 2.0 * np.pi, size=(K, L))
    else:  # coherent_fixed: one phase per source, constant over snapshots
        phases = np.broadcast_to(rng.uniform(0.0, 2.0 * np.pi, size=(K, 1)), (K, L))
    X = mags[:, None] * np.exp(1j * phases)

    A_true = steering_vector(scenario.doas_deg, array)
    sigma2 = noise_variance(mags, array.num_sensors, snr_db)
    noise = np.sqrt(sigma2 / 2.0) * (
        rng.standard_normal((array.num_sensors, L))
        + 1j * rng.standard_normal((array.num_sensors, L))
    )
    Y = A_true @ X + noise
    meta = SnapshotMeta(
        provenance="synthetic",
        snr_db=float(snr_db),
        seed=seed if isinstance(seed, int) else None,
    )
    return SnapshotSet(Y, array, meta), X


def empirical_snr(signal_part: np.ndarray, noise_part: np.ndarray) -> float:
    """Realized SNR in dB from separated signal and noise, Frobenius sense.

    Returns ``math.inf`` for exactly zero noise.
    """
    signal_part = np.asarray(signal_part)
    noise_part = np.asarray(noise_part)
    if signal_part.shape != noise_part.shape:
        raise ValueError(
            f"shape mismatch: {signal_part.shape} vs {noise_part.shape}"
        )
    num = float(np.sum(np.abs(signal_part) ** 2))
    den = float(np.sum(np.abs(noise_part) ** 2))
    if den == 0.0:
        return math.inf
    return 10.0 * math.log10(num / den)
