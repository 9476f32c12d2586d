"""Regularization-path tracing and fast sparsity-targeted mu selection.

As mu decreases from ``2 * max row norm of A^H Y`` (where the first
component activates) the solution support grows at discrete singular
points. :func:`run_path` exploits this: it repeatedly places mu between
the K-th and (K+1)-th peak of the current beamformed residual and
re-solves, warm-started, until K components are active. :func:`sweep_path`
records the full trade-off curve over an explicit mu schedule.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .beamform import greedy_separated_peaks
from .solver import (
    SolverOptions,
    SparseSolution,
    beamformed_residual,
    debias,
    row_norms,
    solve_lasso,
)

__all__ = [
    "PathEvent",
    "PathRecord",
    "PathResult",
    "PeakValue",
    "peak",
    "run_path",
    "sweep_path",
    "default_min_sep_bins",
]

REFERENCE_SEPARATION_DEG = 2.0  # 4 bins on the half-degree grid


def default_min_sep_bins(grid_step_deg: float) -> int:
    """Peak separation in bins equivalent to 4 bins at 0.5 deg spacing."""
    return max(1, int(round(REFERENCE_SEPARATION_DEG / grid_step_deg)))


class PeakValue(NamedTuple):
    """k-th separated peak of a vector; ``fallback`` marks the case where
    fewer than k separated local maxima exist and the k-th largest entry
    overall was returned instead."""

    value: float
    fallback: bool


def peak(r: np.ndarray, k: int, min_sep_bins: int = 1) -> PeakValue:
    """Value of the k-th largest separated local maximum of ``r``."""
    if k < 1:
        raise ValueError("k must be at least 1")
    r = np.asarray(r, dtype=float)
    accepted = greedy_separated_peaks(r, min_sep_bins)
    if k <= len(accepted):
        return PeakValue(float(r[accepted[k - 1]]), False)
    ordered = np.sort(r)[::-1]
    idx = min(k, ordered.size) - 1
    return PeakValue(float(ordered[idx]), True)


@dataclass(frozen=True)
class PathEvent:
    mu: float
    sparsity: int
    active_set: np.ndarray
    residual_sup: float
    data_error: float = float("nan")   # ||Y - A X||_F^2
    l1_norm: float = float("nan")      # sum of solution row norms


@dataclass
class PathRecord:
    """Ordered (decreasing-mu) trace of solve events."""

    events: list[PathEvent] = field(default_factory=list)

    @property
    def mu_values(self) -> np.ndarray:
        return np.array([e.mu for e in self.events])

    @property
    def sparsities(self) -> np.ndarray:
        return np.array([e.sparsity for e in self.events])

    def append(self, event: PathEvent) -> None:
        self.events.append(event)


@dataclass(frozen=True)
class PathResult:
    """Outcome of :func:`run_path`."""

    solution: SparseSolution
    active_set: np.ndarray
    amplitudes: np.ndarray     # debiased, one row per active index
    mu_final: float
    record: PathRecord
    exhausted: bool            # loop guard hit before reaching the target


def _event_from(solution: SparseSolution, A, Y) -> PathEvent:
    res = beamformed_residual(A, Y, solution.X_hat)
    Ym = Y if Y.ndim == 2 else Y[:, None]
    entries = A.entries if hasattr(A, "entries") else np.asarray(A)
    err = float(np.sum(np.abs(Ym - entries @ solution.X_hat) ** 2))
    return PathEvent(
        mu=solution.mu,
        sparsity=solution.sparsity,
        active_set=solution.active_set,
        residual_sup=res.sup,
        data_error=err,
        l1_norm=float(solution.row_norm.sum()),
    )


def run_path(
    A,
    Y,
    K: int,
    F: float = 0.9,
    *,
    overshoot: int = 0,
    min_sep_bins: int | None = None,
    max_outer: int = 12,
    opts: SolverOptions | None = None,
) -> PathResult:
    """Find a mu yielding ``K + overshoot`` active components, then debias.

    Starting from the zero solution, each outer iteration interpolates mu
    between the target-th and (target+1)-th residual peak with weight F,
    solves the LASSO there (warm-started), and thresholds the active set.
    If the loop exits with more than the target number of active rows the
    set is trimmed to the rows of largest norm. The debiased amplitudes
    are the least-squares fit on the final active columns.

    ``overshoot > 0`` pushes mu low enough to activate extra components;
    callers that want exactly K sources then select among the result's
    rows (weak or duplicate activations carry little energy).

    A fixed bound of ``max_outer`` iterations guards the loop; if it is
    reached (or mu stops changing) the best iterate is returned with
    ``exhausted=True``.
    """
    entries = A.entries if hasattr(A, "entries") else np.asarray(A)
    M, N = entries.shape
    if not 1 <= K < M:
        raise ValueError(f"target sparsity K={K} must satisfy 1 <= K < M={M}")
    if not 0.0 < F < 1.0:
        raise ValueError(f"interpolation weight F={F} must lie in (0, 1)")
    opts = opts or SolverOptions()
    if min_sep_bins is None:
        min_sep_bins = (
            default_min_sep_bins(A.grid.step_deg) if hasattr(A, "grid") else 1
        )
    target = K + overshoot
    if target >= N:
        raise ValueError(f"target sparsity {target} must be below N={N}")

    Ym = np.asarray(Y, np.complex128)
    if Ym.ndim == 1:
        Ym = Ym[:, None]
    record = PathRecord()
    r = row_norms(2.0 * (entries.conj().T @ Ym))
    solution: SparseSolution | None = None
    mu = np.inf
    exhausted = True
    for _ in range(max_outer):
        if solution is not None and solution.sparsity >= target:
            exhausted = False
            break
        mu_next = (
            (1.0 - F) * peak(r, target, min_sep_bins).value
            + F * peak(r, target + 1, min_sep_bins).value
        )
        if not mu_next < mu:
            # fixed point: the same mu would reproduce the same solve
            break
        mu = mu_next
        solution = solve_lasso(
            A, Ym, mu, opts, X0=None if solution is None else solution.X_hat
        )
        r = beamformed_residual(A, Ym, solution.X_hat).r
        record.append(_event_from(solution, A, Ym))
    else:
        exhausted = solution is None or solution.sparsity < target

    if solution is None:  # loop never ran a solve
        raise RuntimeError("path produced no solve; check inputs")

    active = solution.active_set
    if active.size > target:
        order = np.argsort(-solution.row_norm[active], kind="stable")
        active = np.sort(active[order[:target]])
    amplitudes = debias(A, Ym, active)
    return PathResult(
        solution=solution,
        active_set=active,
        amplitudes=amplitudes,
        mu_final=solution.mu,
        record=record,
        exhausted=exhausted,
    )


def sweep_path(
    A,
    Y,
    mu_list,
    opts: SolverOptions | None = None,
) -> tuple[PathRecord, list[SparseSolution]]:
    """Solve along an explicit strictly decreasing mu schedule.

    Consecutive solves are warm-started from the previous solution. The
    record carries, per mu, the sparsity, active set, residual sup-norm,
    squared data error, and solution l1 norm (of row norms) -- enough to
    reconstruct the sparsity staircase and the error/sparsity trade-off.
    """
    mu_arr = np.asarray(mu_list, dtype=float)
    if mu_arr.ndim != 1 or mu_arr.size == 0:
        raise ValueError("mu_list must be a nonempty 1-D sequence")
    if np.any(mu_arr <= 0) or np.any(np.diff(mu_arr) >= 0):
        raise ValueError("mu_list must be strictly decreasing and positive")
    opts = opts or SolverOptions()
    Ym = np.asarray(Y, np.complex128)
    if Ym.ndim == 1:
        Ym = Ym[:, None]

    record = PathRecord()
    solutions: list[SparseSolution] = []
    X0 = None
    for mu in mu_arr:
        sol = solve_lasso(A, Ym, float(mu), opts, X0=X0)
        X0 = sol.X_hat
        record.append(_event_from(sol, A, Ym))
        solutions.append(sol)
    return record, solutions
