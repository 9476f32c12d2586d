"""Backend equivalence: the compiled kernel must match the numpy one."""

import os
import subprocess
import sys

import numpy as np
import pytest

from sparsedoa import synthesize
from sparsedoa._kernels import BACKEND, _fista_py, fista_mmv
from sparsedoa.solver import row_norms

needs_compiled = pytest.mark.skipif(
    BACKEND != "compiled", reason="compiled kernel not built"
)


def _instance(M, N, L, seed, snr=15.0):
    from conftest import random_steering_instance

    rng = np.random.default_rng(seed)
    return random_steering_instance(rng, M, N, L, snr)


@needs_compiled
@pytest.mark.parametrize("M,N,L", [(4, 8, 1), (8, 37, 5), (20, 181, 3), (20, 361, 1)])
def test_backends_agree(M, N, L):
    A, Y = _instance(M, N, L, seed=M * 1000 + N + L)
    mu = 0.35 * float(row_norms(2 * A.entries.conj().T @ Y).max())
    X0 = np.zeros((N, L), complex)
    args = (A.entries, Y, mu, A.lipschitz, X0, 1e-9, 20000, 500, 5e-4, 0.05)
    Xc, obj_c, it_c, conv_c = fista_mmv(*args)
    Xp, obj_p, it_p, conv_p = _fista_py.fista_mmv(*args)
    assert conv_c == conv_p
    assert it_c == it_p
    assert obj_c == pytest.approx(obj_p, rel=1e-12)
    assert np.abs(Xc - Xp).max() < 1e-9


@needs_compiled
def test_backends_agree_from_warm_start():
    A, Y = _instance(8, 37, 2, seed=77)
    mu = 0.5 * float(row_norms(2 * A.entries.conj().T @ Y).max())
    rng = np.random.default_rng(0)
    X0 = 0.1 * (rng.standard_normal((37, 2)) + 1j * rng.standard_normal((37, 2)))
    X0 = np.ascontiguousarray(X0)
    args = (A.entries, Y, mu, A.lipschitz, X0, 1e-10, 20000, 500, 5e-4, 0.05)
    Xc, obj_c, *_ = fista_mmv(*args)
    Xp, obj_p, *_ = _fista_py.fista_mmv(*args)
    assert obj_c == pytest.approx(obj_p, rel=1e-12)
    assert np.abs(Xc - Xp).max() < 1e-9


def test_env_var_forces_python_backend():
    code = (
        "import sparsedoa._kernels as k; print(k.BACKEND)"
    )
    env = dict(os.environ, SPARSEDOA_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", code], env=env, capture_output=True, text=True
    )
    assert out.returncode == 0, out.stderr
    assert out.stdout.strip() == "python"


def test_iteration_budget_respected():
    A, Y = _instance(8, 37, 1, seed=5)
    X0 = np.zeros((37, 1), complex)
    X, obj, it, conv = _fista_py.fista_mmv(
        A.entries, Y, 0.1, A.lipschitz, X0, 1e-16, 25, 500, 1e-9, 0.05
    )
    assert it == 25 and not conv
