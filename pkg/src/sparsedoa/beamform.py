"""Covariance-based reference estimators: CBF, MVDR, MUSIC, peak picking."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import AngularGrid, SensingMatrix
from .synthesis import SnapshotSet

__all__ = [
    "CovarianceMatrix",
    "BeamSpectrum",
    "PeakPick",
    "sample_covariance",
    "cbf_single",
    "cbf_spectrum",
    "mvdr_spectrum",
    "music_spectrum",
    "peak_pick",
    "greedy_separated_peaks",
]


@dataclass(frozen=True)
class CovarianceMatrix:
    """Hermitian M x M sample covariance with its snapshot count."""

    entries: np.ndarray
    num_snapshots: int

    def __post_init__(self):
        entries = np.ascontiguousarray(self.entries, dtype=np.complex128)
        entries.flags.writeable = False
        object.__setattr__(self, "entries", entries)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError("covariance must be square")
        herm_err = np.abs(entries - entries.conj().T).max()
        if herm_err > 1e-12 * max(1.0, np.abs(entries).max()):
            raise ValueError(f"covariance is not Hermitian (deviation {herm_err:.2e})")

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    def check_psd(self) -> None:
        """Raise if any eigenvalue is materially negative."""
        evals = np.linalg.eigvalsh(self.entries)
        floor = -1e-10 * max(float(np.trace(self.entries).real), 1e-300)
        if evals.min() < floor:
            raise ValueError(f"covariance not PSD: min eigenvalue {evals.min():.3e}")


@dataclass(frozen=True)
class BeamSpectrum:
    """Power scan over an angular grid."""

    grid: AngularGrid
    power: np.ndarray
    method: str
    degenerate_subspace: bool = False

    def __post_init__(self):
        power = np.asarray(self.power, dtype=float)
        power.flags.writeable = False
        object.__setattr__(self, "power", power)
        if power.shape != (self.grid.size,):
            raise ValueError("power length must match the grid")
        if not np.all(np.isfinite(power)) or np.any(power < 0):
            raise ValueError("spectrum power must be finite and nonnegative")

    def power_db(self) -> np.ndarray:
        """Power in dB with a -320 dB floor for exact zeros."""
        with np.errstate(divide="ignore"):
            return np.maximum(10.0 * np.log10(self.power), -320.0)


@dataclass(frozen=True)
class PeakPick:
    """Angles selected by :func:`peak_pick`; ``short`` flags a deficit."""

    angles_deg: np.ndarray
    indices: np.ndarray
    short: bool


def sample_covariance(Y) -> CovarianceMatrix:
    """``C = (1/L) Y Y^H`` from a SnapshotSet or a complex M x L array."""
    data = Y.data if isinstance(Y, SnapshotSet) else np.asarray(Y, np.complex128)
    if data.ndim == 1:
        data = data[:, None]
    L = data.shape[1]
    C = (data @ data.conj().T) / L
    C = 0.5 * (C + C.conj().T)  # exact Hermitian symmetry against roundoff
    return CovarianceMatrix(C, L)


def cbf_single(y, A: SensingMatrix) -> np.ndarray:
    """Conventional beamformer output ``A^H y`` (column-wise for matrices)."""
    y = np.asarray(y, dtype=np.complex128)
    return A.entries.conj().T @ y


def cbf_spectrum(C: CovarianceMatrix, A: SensingMatrix) -> BeamSpectrum:
    """Bartlett power ``P(theta) = a^H C a`` per grid angle."""
    B = C.entries @ A.entries
    p = np.real(np.sum(A.entries.conj() * B, axis=0))
    return BeamSpectrum(A.grid, np.maximum(p, 0.0), "cbf")


def mvdr_spectrum(
    C: CovarianceMatrix, A: SensingMatrix, diagonal_loading: float = 0.0
) -> BeamSpectrum:
    """Minimum-variance distortionless-response power scan.

    Weights ``w = C_l^{-1} a / (a^H C_l^{-1} a)`` use the loaded matrix
    ``C_l = C + loading*I``; the power is evaluated against the unloaded
    covariance. With zero loading the sample covariance must be full rank,
    which requires at least as many snapshots as sensors.
    """
    if diagonal_loading < 0:
        raise ValueError("diagonal loading must be nonnegative")
    M = C.size
    if diagonal_loading == 0.0 and C.num_snapshots < M:
        raise ValueError(
            f"MVDR needs a full-rank covariance: L={C.num_snapshots} snapshots "
            f"< M={M} sensors (use diagonal loading or more snapshots)"
        )
    loaded = C.entries + diagonal_loading * np.eye(M)
    B = np.linalg.solve(loaded, A.entries)            # C_l^{-1} a per column
    denom = np.real(np.sum(A.entries.conj() * B, axis=0))
    if diagonal_loading == 0.0:
        # w^H C w collapses to 1 / (a^H C^{-1} a)
        p = 1.0 / denom
    else:
        CB = C.entries @ B
        p = np.real(np.sum(B.conj() * CB, axis=0)) / denom**2
    return BeamSpectrum(A.grid, np.maximum(p, 0.0), "mvdr")


def mvdr_weights(
    C: CovarianceMatrix, A: SensingMatrix, diagonal_loading: float = 0.0
) -> np.ndarray:
    """MVDR weight vectors, one column per grid angle (``w^H a = 1``)."""
    loaded = C.entries + diagonal_loading * np.eye(C.size)
    B = np.linalg.solve(loaded, A.entries)
    denom = np.sum(A.entries.conj() * B, axis=0)
    return B / denom


def music_spectrum(C: CovarianceMatrix, A: SensingMatrix, K: int) -> BeamSpectrum:
    """Noise-subspace orthogonality scan ``1 / ||U_n^H a||^2``.

    ``U_n`` spans the eigenvectors of the M-K smallest eigenvalues. When
    the eigenvalues at the signal/noise split are (nearly) equal the
    subspace is not unique; the spectrum is still returned but flagged
    ``degenerate_subspace``.
    """
    M = C.size
    if not 1 <= K < M:
        raise ValueError(f"source count K={K} must satisfy 1 <= K < M={M}")
    evals, evecs = np.linalg.eigh(C.entries)  # ascending
    Un = evecs[:, : M - K]
    denom = np.sum(np.abs(Un.conj().T @ A.entries) ** 2, axis=0)
    denom = np.maximum(denom, np.finfo(float).tiny)
    split_lo, split_hi = evals[M - K - 1], evals[M - K]
    degenerate = bool(split_hi - split_lo <= 1e-12 * max(abs(evals[-1]), 1e-300))
    return BeamSpectrum(A.grid, 1.0 / denom, "music", degenerate_subspace=degenerate)


def greedy_separated_peaks(values: np.ndarray, min_sep_bins: int) -> list[int]:
    """Local maxima accepted greedily in descending value.

    A bin is a local maximum when no immediate neighbor exceeds it
    (boundaries are one-sided). Candidates closer than ``min_sep_bins``
    to an already accepted peak are skipped; ties break toward the
    smaller index.
    """
    v = np.asarray(values, dtype=float)
    n = v.size
    if n == 0:
        return []
    # one candidate per plateau: a run of equal values is a peak when both
    # values adjacent to the run are lower (array ends count as lower);
    # the run's first bin represents it, so ties break toward smaller angle
    candidates = []
    start = 0
    for i in range(1, n + 1):
        if i < n and v[i] == v[start]:
            continue
        left_ok = start == 0 or v[start - 1] < v[start]
        right_ok = i == n or v[i] < v[start]
        if left_ok and right_ok:
            candidates.append(start)
        start = i
    candidates = np.asarray(candidates, dtype=int)
    candidates = candidates[np.argsort(-v[candidates], kind="stable")]
    accepted: list[int] = []
    for i in candidates:
        if all(abs(int(i) - j) >= min_sep_bins for j in accepted):
            accepted.append(int(i))
    return accepted


def peak_pick(
    spectrum: BeamSpectrum, K: int, min_separation_bins: int = 1
) -> PeakPick:
    """Up to K spectrum peaks at least ``min_separation_bins`` apart.

    Selection is greedy on descending linear power. When the spectrum has
    fewer separated local maxima than requested the result is shorter and
    flagged, never padded.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    accepted = greedy_separated_peaks(spectrum.power, min_separation_bins)[:K]
    idx = np.asarray(accepted, dtype=int)
    return PeakPick(
        angles_deg=spectrum.grid.angles_deg[idx],
        indices=idx,
        short=idx.size < K,
    )
