"""Array geometry: steering vectors, angular grids, and sensing matrices.

Everything here assumes a uniform linear array (ULA) with sensor spacing
expressed as a fraction of the wavelength (half-wavelength by default).
Angles are in degrees throughout the public API; radians appear only at
the trigonometric call sites.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "ArraySpec",
    "AngularGrid",
    "SensingMatrix",
    "steering_vector",
    "build_sensing_matrix",
    "mutual_coherence",
]


@dataclass(frozen=True)
class ArraySpec:
    """Uniform linear array with ``num_sensors`` elements.

    Parameters
    ----------
    num_sensors : int
        Number of array elements M (at least 2).
    spacing_over_wavelength : float
        Inter-element spacing d as a fraction of the wavelength
        (default 0.5, i.e. half-wavelength spacing).
    """

    num_sensors: int
    spacing_over_wavelength: float = 0.5

    def __post_init__(self):
        if self.num_sensors < 2:
            raise ValueError(f"need at least 2 sensors, got {self.num_sensors}")
        if not self.spacing_over_wavelength > 0:
            raise ValueError(
                f"spacing_over_wavelength must be positive, got "
                f"{self.spacing_over_wavelength}"
            )


@dataclass(frozen=True)
class AngularGrid:
    """Ordered grid of look directions in degrees, each in [-90, 90]."""

    angles_deg: np.ndarray

    def __post_init__(self):
        angles = np.asarray(self.angles_deg, dtype=float)
        angles.flags.writeable = False
        object.__setattr__(self, "angles_deg", angles)
        if angles.ndim != 1 or angles.size < 2:
            raise ValueError("grid needs at least 2 angles")
        if angles.min() < -90.0 or angles.max() > 90.0:
            raise ValueError("grid angles must lie in [-90, 90] degrees")
        if not np.all(np.diff(angles) > 0):
            raise ValueError("grid angles must be strictly increasing")

    @classmethod
    def from_range(cls, start: float, stop: float, step: float) -> "AngularGrid":
        """Inclusive grid [start:step:stop] with the endpoint snapped.

        The number of points is fixed by ``round((stop - start) / step) + 1``
        so the count is identical across platforms even when the endpoints
        are not exactly representable.
        """
        if step <= 0:
            raise ValueError("step must be positive")
        count = int(round((stop - start) / step)) + 1
        if count < 2:
            raise ValueError("grid must contain at least 2 angles")
        return cls(start + step * np.arange(count))

    @property
    def size(self) -> int:
        return int(self.angles_deg.size)

    @property
    def step_deg(self) -> float:
        """Median grid spacing in degrees."""
        return float(np.median(np.diff(self.angles_deg)))

    def nearest_index(self, theta_deg: float) -> int:
        """Index of the grid angle closest to ``theta_deg``."""
        return int(np.argmin(np.abs(self.angles_deg - theta_deg)))

    def __len__(self) -> int:
        return self.size


def steering_vector(theta_deg, array: ArraySpec) -> np.ndarray:
    """Unit-norm plane-wave steering vector(s) for the given DOA(s).

    Element m is ``exp(j*2*pi*(d/lambda)*m*sin(theta)) / sqrt(M)``, so the
    Euclidean norm of each vector is exactly 1.

    Parameters
    ----------
    theta_deg : float or array-like
        Direction(s) of arrival in degrees, each in [-90, 90].
    array : ArraySpec

    Returns
    -------
    np.ndarray
        Shape (M,) for a scalar angle, (M, K) for K angles.
    """
    theta = np.asarray(theta_deg, dtype=float)
    if np.any(theta < -90.0) or np.any(theta > 90.0):
        raise ValueError(f"DOA out of range [-90, 90]: {theta_deg}")
    m = np.arange(array.num_sensors)
    phase = (
        2.0
        * np.pi
        * array.spacing_over_wavelength
        * np.outer(m, np.sin(np.deg2rad(np.atleast_1d(theta))))
    )
    a = np.exp(1j * phase) / np.sqrt(array.num_sensors)
    return a[:, 0] if theta.ndim == 0 else a


@dataclass(frozen=True)
class SensingMatrix:
    """M x N matrix whose columns are steering vectors on a grid."""

    entries: np.ndarray
    array: ArraySpec
    grid: AngularGrid

    def __post_init__(self):
        entries = np.ascontiguousarray(self.entries, dtype=np.complex128)
        entries.flags.writeable = False
        object.__setattr__(self, "entries", entries)
        if entries.shape != (self.array.num_sensors, self.grid.size):
            raise ValueError(
                f"entries shape {entries.shape} does not match "
                f"(M={self.array.num_sensors}, N={self.grid.size})"
            )

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    @cached_property
    def lipschitz(self) -> float:
        """Gradient Lipschitz constant of the squared data misfit.

        Equals ``2 * sigma_max(A)**2``; computed once and cached because the
        same sensing matrix is reused across many solves.
        """
        smax = np.linalg.svd(self.entries, compute_uv=False)[0]
        return float(2.0 * smax * smax)

    @cached_property
    def gram(self) -> np.ndarray:
        """Cached N x N Gram matrix ``A^H A`` (used by the exhaustive search)."""
        g = self.entries.conj().T @ self.entries
        g.flags.writeable = False
        return g


def build_sensing_matrix(grid: AngularGrid, array: ArraySpec) -> SensingMatrix:
    """Assemble the sensing matrix with one steering vector per grid angle."""
    return SensingMatrix(steering_vector(grid.angles_deg, array), array, grid)


def mutual_coherence(A: SensingMatrix) -> float:
    """Largest |<a_i, a_j>| over distinct column pairs, in [0, 1]."""
    if A.shape[1] < 2:
        raise ValueError("mutual coherence needs at least 2 columns")
    g = np.abs(A.gram).copy()
    np.fill_diagonal(g, 0.0)
    return float(min(g.max(), 1.0))
