"""Pure-numpy accelerated proximal-gradient kernel.

Reference implementation of the iteration run by the compiled extension;
the two backends follow the identical update rule and stopping logic so
they are interchangeable (selected in ``sparsedoa._kernels``).
"""

import numpy as np

BACKEND = "python"


def _row_norms(X):
    return np.sqrt((X.real * X.real + X.imag * X.imag).sum(axis=1))


def fista_mmv(A, Y, mu, lip, X0, rel_tol, max_iters, restart_every, kkt_tol, eps_active):
    """Minimize ``||Y - A X||_F^2 + mu * sum_i ||X[i,:]||_2``.

    Accelerated proximal gradient with row-wise shrinkage, step 1/lip,
    momentum restart every ``restart_every`` iterations. Stops when the
    relative objective change drops below ``rel_tol`` and a subgradient
    optimality audit passes at ``kkt_tol`` (active rows selected with the
    relative threshold ``eps_active``).

    Returns ``(X, objective, iterations, converged)``.
    """
    Ah = A.conj().T
    X = X0.copy()
    Z = X.copy()
    X_prev = X.copy()
    t = 1.0
    step = 1.0 / lip
    thr = mu / lip

    R = Y - A @ X
    obj_prev = float((R.real**2 + R.imag**2).sum() + mu * _row_norms(X).sum())
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        G = Ah @ (Y - A @ Z)
        W = Z + (2.0 * step) * G
        wn = _row_norms(W)
        scale = np.maximum(0.0, 1.0 - thr / np.maximum(wn, 1e-300))
        X_new = W * scale[:, None]

        R = Y - A @ X_new
        xr = _row_norms(X_new)
        obj = float((R.real**2 + R.imag**2).sum() + mu * xr.sum())

        if abs(obj_prev - obj) <= rel_tol * max(obj_prev, 1e-30):
            r = 2.0 * _row_norms(Ah @ R)
            xmax = xr.max()
            active = xr > eps_active * xmax if xmax > 0.0 else np.zeros(xr.shape, bool)
            gap = float(np.abs(r[active] - mu).max() / mu) if active.any() else 0.0
            inactive = ~active
            viol = (
                max(0.0, float((r[inactive] - mu).max() / mu)) if inactive.any() else 0.0
            )
            if gap <= kkt_tol and viol <= kkt_tol:
                return X_new, obj, it, True

        obj_prev = obj
        if it % restart_every == 0:
            t = 1.0
            Z = X_new.copy()
        else:
            t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            Z = X_new + ((t - 1.0) / t_new) * (X_new - X_prev)
            t = t_new
        X_prev = X_new
        X = X_new

    return X, obj_prev, it, converged
