"""Complex-valued LASSO / group-LASSO solver and optimality checks.

Single snapshot (L=1) and multi-snapshot observations share one code path:
the objective is ``||Y - A X||_F^2 + mu * ||x_l2||_1`` where ``x_l2`` is
the vector of row Euclidean norms of X, which reduces exactly to the
ordinary complex LASSO for one snapshot.

The minimizer is computed by accelerated proximal gradient with a row-wise
shrinkage prox, step ``1/lip`` with ``lip = 2*sigma_max(A)^2``, periodic
momentum restarts, and a final subgradient audit: on the active rows the
beamformed residual ``2 A^H (Y - A X)`` must sit on the boundary ``mu``,
and strictly inside it elsewhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from threadpoolctl import threadpool_limits

from ._kernels import fista_mmv
from .geometry import SensingMatrix

__all__ = [
    "SolverOptions",
    "SparseSolution",
    "ResidualVector",
    "KktReport",
    "solve_lasso",
    "row_shrink",
    "row_norms",
    "beamformed_residual",
    "kkt_check",
    "debias",
    "active_set_of",
]


@dataclass(frozen=True)
class SolverOptions:
    """Iteration controls for :func:`solve_lasso`.

    ``kkt_tol`` is the internal audit tolerance applied before declaring
    convergence; it is kept at half the downstream acceptance tolerance so
    a converged solution verifies cleanly.
    """

    rel_tol: float = 1e-9
    max_iters: int = 20000
    restart_every: int = 500
    epsilon_active: float = 0.05
    kkt_tol: float = 5e-4

    def __post_init__(self):
        if self.rel_tol <= 0 or self.max_iters < 1 or self.restart_every < 1:
            raise ValueError("invalid solver options")
        if not 0 < self.epsilon_active < 1:
            raise ValueError("epsilon_active must be in (0, 1)")


@dataclass(frozen=True)
class SparseSolution:
    """Result of a single LASSO solve."""

    X_hat: np.ndarray          # N x L complex
    mu: float
    active_set: np.ndarray     # sorted indices, relative-threshold rule
    row_norm: np.ndarray       # N nonnegative reals
    objective: float
    iterations: int
    converged: bool
    epsilon_active: float = 0.05

    @property
    def sparsity(self) -> int:
        return int(self.active_set.size)


@dataclass(frozen=True)
class ResidualVector:
    """Beamformed residual ``2 A^H (Y - A X)`` and its row magnitudes."""

    r: np.ndarray      # N row norms
    raw: np.ndarray    # N x L complex

    @property
    def sup(self) -> float:
        return float(self.r.max())


@dataclass(frozen=True)
class KktReport:
    max_violation_inactive: float
    max_gap_active: float
    tol: float

    @property
    def passed(self) -> bool:
        return (
            self.max_violation_inactive <= self.tol
            and self.max_gap_active <= self.tol
        )


def row_norms(X: np.ndarray) -> np.ndarray:
    """Euclidean norm of each row of a (possibly complex) matrix."""
    X = np.atleast_2d(X)
    return np.sqrt((X.real**2 + X.imag**2).sum(axis=1))


def row_shrink(v: np.ndarray, t: float) -> np.ndarray:
    """Proximal operator of ``t * ||.||_2``: scale v by ``(1 - t/||v||)+``.

    Returns the zero vector when ``||v|| <= t``; otherwise the phase of
    every entry is preserved and only the magnitude shrinks.
    """
    if t < 0:
        raise ValueError("shrinkage threshold must be nonnegative")
    v = np.asarray(v, dtype=np.complex128)
    norm = float(np.sqrt((v.real**2 + v.imag**2).sum()))
    if norm <= t:
        return np.zeros_like(v)
    return v * (1.0 - t / norm)


def _as_matrix(A) -> tuple[np.ndarray, float]:
    """Sensing matrix entries plus gradient Lipschitz constant."""
    if isinstance(A, SensingMatrix):
        return A.entries, A.lipschitz
    A = np.ascontiguousarray(A, dtype=np.complex128)
    smax = np.linalg.svd(A, compute_uv=False)[0]
    return A, float(2.0 * smax * smax)


def _as_snapshots(Y) -> np.ndarray:
    Y = np.asarray(Y, dtype=np.complex128)
    if Y.ndim == 1:
        Y = Y[:, None]
    return np.ascontiguousarray(Y)


def solve_lasso(
    A,
    Y,
    mu: float,
    opts: SolverOptions | None = None,
    X0: np.ndarray | None = None,
) -> SparseSolution:
    """Solve the row-sparse LASSO at regularization ``mu``.

    Parameters
    ----------
    A : SensingMatrix or complex (M, N) array
    Y : complex (M, L) array (or (M,) vector for a single snapshot)
    mu : float
        Regularization parameter, must be positive.
    X0 : optional warm start, shape (N, L).

    Returns
    -------
    SparseSolution
        ``converged`` is False when the iteration budget ran out before
        the stopping test was met; the last iterate is still returned.
    """
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")
    opts = opts or SolverOptions()
    entries, lip = _as_matrix(A)
    Ym = _as_snapshots(Y)
    if Ym.shape[0] != entries.shape[0]:
        raise ValueError(
            f"Y has {Ym.shape[0]} rows but the sensing matrix has "
            f"{entries.shape[0]}"
        )
    N, L = entries.shape[1], Ym.shape[1]
    if X0 is None:
        X0 = np.zeros((N, L), np.complex128)
    else:
        X0 = np.ascontiguousarray(X0, dtype=np.complex128)
        if X0.shape != (N, L):
            raise ValueError(f"warm start has shape {X0.shape}, expected {(N, L)}")

    # these shapes are too small for BLAS threading to pay off; the sync
    # overhead roughly doubles the iteration cost on multicore hosts
    with threadpool_limits(limits=1, user_api="blas"):
        X, objective, iterations, converged = fista_mmv(
            entries,
            Ym,
            float(mu),
            lip,
            X0,
            opts.rel_tol,
            opts.max_iters,
            opts.restart_every,
            opts.kkt_tol,
            opts.epsilon_active,
        )
    rn = row_norms(X)
    active = _threshold_active(rn, opts.epsilon_active)
    return SparseSolution(
        X_hat=X,
        mu=float(mu),
        active_set=active,
        row_norm=rn,
        objective=float(objective),
        iterations=int(iterations),
        converged=bool(converged),
        epsilon_active=opts.epsilon_active,
    )


def beamformed_residual(A, Y, X_hat: np.ndarray) -> ResidualVector:
    """``raw = 2 A^H (Y - A X)``; ``r`` holds the row Euclidean norms."""
    entries = A.entries if isinstance(A, SensingMatrix) else np.asarray(A)
    Ym = _as_snapshots(Y)
    Xm = _as_snapshots(X_hat)
    raw = 2.0 * (entries.conj().T @ (Ym - entries @ Xm))
    return ResidualVector(r=row_norms(raw), raw=raw)


def kkt_check(A, Y, solution: SparseSolution, tol: float = 1e-3) -> KktReport:
    """Verify the subgradient optimality conditions of a solve.

    Passes when every residual row norm is at most ``mu*(1+tol)`` and the
    active rows deviate from the boundary ``mu`` by at most ``mu*tol``.
    """
    res = beamformed_residual(A, Y, solution.X_hat)
    mu = solution.mu
    mask = np.zeros(res.r.shape, bool)
    mask[solution.active_set] = True
    gap = float(np.abs(res.r[mask] - mu).max() / mu) if mask.any() else 0.0
    viol = (
        max(0.0, float((res.r[~mask] - mu).max() / mu)) if (~mask).any() else 0.0
    )
    return KktReport(max_violation_inactive=viol, max_gap_active=gap, tol=tol)


def debias(A, Y, active_set) -> np.ndarray:
    """Least-squares amplitudes on the active columns (pseudoinverse fit).

    Removes the shrinkage bias of the LASSO: the returned K x L matrix
    minimizes ``||Y - A[:, active] X||_F`` so the residual is orthogonal
    to every active column.

    Raises
    ------
    ValueError
        If there are more active columns than sensors, or the active
        columns are linearly dependent (the dependent indices are listed).
    """
    entries = A.entries if isinstance(A, SensingMatrix) else np.asarray(A)
    Ym = _as_snapshots(Y)
    active = np.asarray(active_set, dtype=int)
    if active.size == 0:
        return np.zeros((0, Ym.shape[1]), np.complex128)
    if active.size > entries.shape[0]:
        raise ValueError(
            f"{active.size} active columns exceed the {entries.shape[0]} sensors"
        )
    sub = entries[:, active]
    # detect dependent columns before fitting so the error can name them
    rank = np.linalg.matrix_rank(sub)
    if rank < active.size:
        import scipy.linalg

        _, _, piv = scipy.linalg.qr(sub, mode="economic", pivoting=True)
        dependent = sorted(int(active[p]) for p in piv[rank:])
        raise ValueError(
            f"active columns are linearly dependent; dependent indices: {dependent}"
        )
    amps, *_ = np.linalg.lstsq(sub, Ym, rcond=None)
    return amps


def _threshold_active(rn: np.ndarray, epsilon: float) -> np.ndarray:
    peak = rn.max() if rn.size else 0.0
    if peak <= 0.0:
        return np.zeros(0, dtype=int)
    return np.flatnonzero(rn > epsilon * peak)


def active_set_of(
    solution: SparseSolution,
    *,
    epsilon: float | None = None,
    top_k: int | None = None,
) -> np.ndarray:
    """Active rows of a solution under one of two threshold rules.

    ``epsilon`` keeps rows whose norm exceeds ``epsilon * max(row_norm)``;
    ``top_k`` keeps the K rows of largest norm (ties toward the smaller
    index). Exactly one rule must be given.
    """
    if (epsilon is None) == (top_k is None):
        raise ValueError("specify exactly one of epsilon or top_k")
    rn = solution.row_norm
    if epsilon is not None:
        return _threshold_active(rn, epsilon)
    if top_k < 1:
        raise ValueError("top_k must be at least 1")
    nonzero = np.flatnonzero(rn > 0)
    if nonzero.size <= top_k:
        return nonzero
    order = np.argsort(-rn[nonzero], kind="stable")
    return np.sort(nonzero[order[:top_k]])
