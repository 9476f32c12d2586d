"""Independent reference implementations used only by the tests.

Nothing here imports solver internals: the coordinate-descent solver and
the quadratic-eliminated residual below are written directly from the
objective so they can serve as oracles for the production code paths.
"""

import numpy as np


def cd_group_lasso(A, Y, mu, max_cycles=200000, tol=1e-13):
    """Cyclic coordinate descent on ``||Y - A X||_F^2 + mu sum_i ||X_i||``.

    Exact minimization over one row at a time: with residual R excluding
    row i, the row update is the shrinkage of ``a_i^H R / ||a_i||^2`` at
    threshold ``mu / (2 ||a_i||^2)``. Run to a very tight objective
    tolerance so it can act as ground truth.
    """
    A = np.asarray(A, dtype=complex)
    Y = np.asarray(Y, dtype=complex)
    if Y.ndim == 1:
        Y = Y[:, None]
    M, N = A.shape
    L = Y.shape[1]
    X = np.zeros((N, L), complex)
    col_sq = (np.abs(A) ** 2).sum(axis=0)
    R = Y.copy()  # running residual Y - A X

    def objective():
        return float(
            (np.abs(Y - A @ X) ** 2).sum()
            + mu * np.sqrt((np.abs(X) ** 2).sum(axis=1)).sum()
        )

    prev = objective()
    for _ in range(max_cycles):
        for i in range(N):
            ai = A[:, i]
            if np.any(X[i]):
                R += np.outer(ai, X[i])
            c = ai.conj() @ R
            cn = np.linalg.norm(c)
            t = mu / 2.0
            if cn <= t:
                X[i] = 0.0
            else:
                X[i] = (c / col_sq[i]) * (1.0 - t / cn)
                R -= np.outer(ai, X[i])
        cur = objective()
        if abs(prev - cur) <= tol * max(prev, 1e-30):
            break
        prev = cur
    return X, objective()


def lstsq_subset_residual(A, Y, subset):
    """Frobenius residual of the least-squares fit on an explicit subset."""
    A = np.asarray(A, dtype=complex)
    Y = np.asarray(Y, dtype=complex)
    if Y.ndim == 1:
        Y = Y[:, None]
    sub = A[:, list(subset)]
    coef, *_ = np.linalg.lstsq(sub, Y, rcond=None)
    return float(np.linalg.norm(Y - sub @ coef))


def steering_element(theta_deg, m, num_sensors, spacing=0.5):
    """Scalar evaluation of one steering-vector element from the formula."""
    import cmath
    import math

    phase = 2.0 * math.pi * spacing * m * math.sin(math.radians(theta_deg))
    return cmath.exp(1j * phase) / math.sqrt(num_sensors)
