"""Monte-Carlo benchmarking of DOA estimators.

Each trial synthesizes one snapshot set that every requested method sees
unchanged; estimated DOAs are paired with the truth by the permutation
minimizing the RMS angular error, and ensemble RMSE per SNR is the
quadratic mean of the per-trial values. Methods that return fewer DOAs
than sources are penalized with a 180-degree miss per missing source
rather than silently dropped.
"""

from __future__ import annotations

import math
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import permutations
from math import comb

import numpy as np

from .beamform import (
    cbf_spectrum,
    greedy_separated_peaks,
    music_spectrum,
    mvdr_spectrum,
    peak_pick,
    sample_covariance,
)
from .geometry import SensingMatrix
from .path import default_min_sep_bins, run_path
from .solver import SolverOptions, debias
from .synthesis import SnapshotSet, SourceScenario, synthesize

__all__ = [
    "PairResult",
    "ExhaustiveResult",
    "CsEstimate",
    "EvalOptions",
    "MethodSnrStats",
    "EvalReport",
    "MISS_PENALTY_DEG",
    "METHODS",
    "pair_and_rmse",
    "exhaustive_ml",
    "cs_doa_estimate",
    "monte_carlo",
]

MISS_PENALTY_DEG = 180.0
METHODS = ("CBF", "MVDR", "MUSIC", "CS", "EXHAUSTIVE")
_MAX_PAIR_SOURCES = 6


@dataclass(frozen=True)
class PairResult:
    """Optimal pairing of estimates to true DOAs."""

    rmse: float
    assignment: tuple  # per truth index: estimate index, or None if missed
    padded: bool       # True when fewer estimates than truths


def pair_and_rmse(estimates, truth) -> PairResult:
    """RMS DOA error under the best assignment of estimates to truths.

    Estimate lists shorter than the truth are allowed: every unmatched
    truth contributes the worst-case 180-degree error and the result is
    flagged ``padded``. Longer lists are rejected.
    """
    est = np.atleast_1d(np.asarray(estimates, dtype=float))
    tru = np.atleast_1d(np.asarray(truth, dtype=float))
    K = tru.size
    if K < 1 or K > _MAX_PAIR_SOURCES:
        raise ValueError(f"number of sources must be 1..{_MAX_PAIR_SOURCES}, got {K}")
    if est.size > K:
        raise ValueError(f"{est.size} estimates for {K} sources")

    J = est.size
    pad_sq = (K - J) * MISS_PENALTY_DEG**2
    best_sq = math.inf
    best_assign = None
    # assign each estimate j to a distinct truth perm[j]
    for perm in permutations(range(K), J):
        sq = pad_sq + float(np.sum((est - tru[list(perm)]) ** 2))
        if sq < best_sq:
            best_sq = sq
            best_assign = perm
    assignment = [None] * K
    for j, k in enumerate(best_assign or ()):
        assignment[k] = j
    return PairResult(
        rmse=math.sqrt(best_sq / K),
        assignment=tuple(assignment),
        padded=J < K,
    )


@dataclass(frozen=True)
class ExhaustiveResult:
    indices: np.ndarray
    doas_deg: np.ndarray
    amplitudes: np.ndarray


def exhaustive_ml(A: SensingMatrix, Y, K: int) -> ExhaustiveResult:
    """Best size-K column subset by residual norm (combinatorial search).

    Scans every subset using the cached Gram matrix and closed-form small
    inverses, so no per-subset factorization of the sensing matrix is
    needed. Guarded at K <= 3: beyond that the subset count explodes.
    """
    N = A.shape[1]
    if K < 1:
        raise ValueError("K must be at least 1")
    if K > 3:
        raise ValueError(
            f"exhaustive search refused for K={K}: {comb(N, K):,} subsets "
            f"of a {N}-column matrix would be evaluated"
        )
    Ym = np.asarray(Y, np.complex128)
    if Ym.ndim == 1:
        Ym = Ym[:, None]
    B = A.entries.conj().T @ Ym            # N x L beamformed data
    S = (B.real**2 + B.imag**2).sum(axis=1)
    if K == 1:
        idx = np.array([int(np.argmax(S))])
    elif K == 2:
        idx = _best_pair(A.gram, B, S)
    else:
        idx = _best_triple(A.gram, B, S)
    idx = np.sort(idx)
    return ExhaustiveResult(
        indices=idx,
        doas_deg=A.grid.angles_deg[idx],
        amplitudes=debias(A, Ym, idx),
    )


def _best_pair(G, B, S) -> np.ndarray:
    H = B @ B.conj().T                      # H[i, j] = sum_l B_il conj(B_jl)
    det = 1.0 - np.abs(G) ** 2
    num = S[:, None] + S[None, :] - 2.0 * np.real(G * H.T)
    with np.errstate(divide="ignore", invalid="ignore"):
        score = np.where(det > 1e-12, num / det, -np.inf)
    iu, ju = np.triu_indices(G.shape[0], k=1)
    best = int(np.argmax(score[iu, ju]))
    return np.array([int(iu[best]), int(ju[best])])


def _best_triple(G, B, S) -> np.ndarray:
    """Closed-form 3x3 projection score, vectorized over (j, k) per i."""
    N = G.shape[0]
    H = B @ B.conj().T
    best_score = -np.inf
    best = None
    for i in range(N - 2):
        j, k = np.triu_indices(N - i - 1, k=1)
        j = j + i + 1
        k = k + i + 1
        a = G[i, j]          # <a_i, a_j>
        b = G[i, k]
        c = G[j, k]
        det = (
            1.0
            - np.abs(a) ** 2
            - np.abs(b) ** 2
            - np.abs(c) ** 2
            + 2.0 * np.real(a * c * b.conj())
        )
        # trace(G_S^{-1} H_S) via the adjugate of the unit-diagonal Gram
        num = (
            (1.0 - np.abs(c) ** 2) * S[i]
            + (1.0 - np.abs(b) ** 2) * S[j]
            + (1.0 - np.abs(a) ** 2) * S[k]
            + 2.0
            * np.real(
                (b * c.conj() - a) * H[j, i]
                + (a * c - b) * H[k, i]
                + (a.conj() * b - c) * H[k, j]
            )
        )
        with np.errstate(divide="ignore", invalid="ignore"):
            score = np.where(det > 1e-10, num / det, -np.inf)
        m = int(np.argmax(score))
        if score[m] > best_score:
            best_score = float(score[m])
            best = (i, int(j[m]), int(k[m]))
    return np.array(best)


@dataclass(frozen=True)
class CsEstimate:
    """Sparse-recovery DOA estimate for a known source count."""

    doas_deg: np.ndarray
    indices: np.ndarray
    amplitudes: np.ndarray
    short: bool
    mu: float
    path_exhausted: bool


def cs_doa_estimate(
    A: SensingMatrix,
    Y,
    K: int,
    *,
    F: float = 0.9,
    overshoot: int = 2,
    min_sep_bins: int | None = None,
    opts: SolverOptions | None = None,
) -> CsEstimate:
    """DOAs of the K strongest separated components of a path solve.

    Runs the sparsity-targeted path with ``K + overshoot`` as the loop
    target (extra activations absorb coherence leakage), then keeps the K
    largest separated peaks of the solution row norms and debiases the
    amplitudes on those columns.
    """
    if min_sep_bins is None:
        min_sep_bins = default_min_sep_bins(A.grid.step_deg)
    result = run_path(
        A, Y, K, F, overshoot=overshoot, min_sep_bins=min_sep_bins, opts=opts
    )
    picks = greedy_separated_peaks(result.solution.row_norm, min_sep_bins)
    picks = [i for i in picks if result.solution.row_norm[i] > 0][:K]
    idx = np.sort(np.asarray(picks, dtype=int))
    return CsEstimate(
        doas_deg=A.grid.angles_deg[idx],
        indices=idx,
        amplitudes=debias(A, Y, idx),
        short=idx.size < K,
        mu=result.mu_final,
        path_exhausted=result.exhausted,
    )


@dataclass(frozen=True)
class EvalOptions:
    """Knobs of the Monte-Carlo harness."""

    solver: SolverOptions = field(default_factory=SolverOptions)
    path_f: float = 0.9
    overshoot: int = 2
    min_sep_bins: int | None = None
    diagonal_loading: float = 0.0
    workers: int = 1


@dataclass
class MethodSnrStats:
    """Per-method accumulation at one SNR point."""

    snr_db: float
    rmse_deg: float
    trial_count: int
    short_picks: int      # trials that returned fewer DOAs than sources
    missing_picks: int    # total DOA slots filled by the miss penalty
    failures: int
    mean_runtime_s: float
    histogram_angles: list[float]
    histogram_counts: list[int]


@dataclass
class EvalReport:
    scenario: dict
    seed: int
    snr_grid: list[float]
    num_snapshots: int
    trials: int
    methods: dict[str, list[MethodSnrStats]]

    def rmse_curve(self, method: str) -> np.ndarray:
        return np.array([s.rmse_deg for s in self.methods[method]])

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "seed": self.seed,
            "snr_grid": self.snr_grid,
            "num_snapshots": self.num_snapshots,
            "trials": self.trials,
            "methods": {
                name: [vars(s).copy() for s in stats]
                for name, stats in self.methods.items()
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        return cls(
            scenario=d["scenario"],
            seed=d["seed"],
            snr_grid=d["snr_grid"],
            num_snapshots=d["num_snapshots"],
            trials=d["trials"],
            methods={
                name: [MethodSnrStats(**s) for s in stats]
                for name, stats in d["methods"].items()
            },
        )


def _trial_seed(base_seed: int, i_snr: int, i_trial: int) -> int:
    seq = np.random.SeedSequence([int(base_seed), int(i_snr), int(i_trial)])
    return int(seq.generate_state(1, np.uint64)[0])


# per-worker state installed by the pool initializer
_CTX: dict = {}


def _init_worker(A, scenario, L, methods, options, K, limit_threads=True):
    if limit_threads:
        # workers share the machine; keep BLAS single-threaded per process
        try:
            from threadpoolctl import threadpool_limits

            threadpool_limits(limits=1)
        except Exception:
            pass
    _CTX.update(
        A=A, scenario=scenario, L=L, methods=methods, options=options, K=K
    )


def _run_methods(A, Y: SnapshotSet, K, methods, options):
    """Run every method on one snapshot set; returns per-method outcomes."""
    min_sep = options.min_sep_bins or default_min_sep_bins(A.grid.step_deg)
    out = {}
    cov = None
    for name in methods:
        t0 = time.perf_counter()
        angles = None
        short = False
        error = None
        try:
            if name in ("CBF", "MVDR", "MUSIC") and cov is None:
                cov = sample_covariance(Y)
            if name == "CBF":
                pick = peak_pick(cbf_spectrum(cov, A), K, min_sep)
                angles, short = pick.angles_deg, pick.short
            elif name == "MVDR":
                spec = mvdr_spectrum(cov, A, options.diagonal_loading)
                pick = peak_pick(spec, K, min_sep)
                angles, short = pick.angles_deg, pick.short
            elif name == "MUSIC":
                pick = peak_pick(music_spectrum(cov, A, K), K, min_sep)
                angles, short = pick.angles_deg, pick.short
            elif name == "CS":
                est = cs_doa_estimate(
                    A,
                    Y.data,
                    K,
                    F=options.path_f,
                    overshoot=options.overshoot,
                    min_sep_bins=min_sep,
                    opts=options.solver,
                )
                angles, short = est.doas_deg, est.short
            elif name == "EXHAUSTIVE":
                angles = exhaustive_ml(A, Y.data, K).doas_deg
            else:
                raise ValueError(f"unknown method {name!r}")
        except (ValueError, np.linalg.LinAlgError) as exc:
            error = f"{type(exc).__name__}: {exc}"
        out[name] = (angles, short, time.perf_counter() - t0, error)
    return out


def _worker_trial(task):
    i_snr, i_trial, snr_db, seed = task
    A = _CTX["A"]
    Y, _ = synthesize(_CTX["scenario"], A.array, _CTX["L"], snr_db, seed)
    return i_snr, i_trial, _run_methods(
        A, Y, _CTX["K"], _CTX["methods"], _CTX["options"]
    )


def monte_carlo(
    scenario: SourceScenario,
    A: SensingMatrix,
    methods,
    snr_grid,
    trials: int,
    L: int,
    seed: int,
    options: EvalOptions | None = None,
) -> EvalReport:
    """RMSE-versus-SNR study over independent noise realizations.

    Per (SNR, trial) a child seed is derived deterministically from
    ``seed``, so reruns are bit-reproducible and every method sees the
    same snapshot set within a trial. Trials run in parallel when
    ``options.workers > 1``; results are merged by (SNR, trial) index so
    the report does not depend on completion order. Per-method failures
    (e.g. the MVDR rank guard) are counted, not fatal.
    """
    options = options or EvalOptions()
    methods = [m.upper() for m in methods]
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}; expected subset of {METHODS}")
    snr_grid = [float(s) for s in snr_grid]
    truth = scenario.doas_deg
    K = scenario.num_sources

    tasks = [
        (i_snr, i_trial, snr, _trial_seed(seed, i_snr, i_trial))
        for i_snr, snr in enumerate(snr_grid)
        for i_trial in range(trials)
    ]
    results: dict[tuple[int, int], dict] = {}
    if options.workers > 1:
        with ProcessPoolExecutor(
            max_workers=options.workers,
            initializer=_init_worker,
            initargs=(A, scenario, L, methods, options, K),
        ) as pool:
            for i_snr, i_trial, out in pool.map(
                _worker_trial, tasks, chunksize=max(1, len(tasks) // (8 * options.workers))
            ):
                results[(i_snr, i_trial)] = out
    else:
        _init_worker(A, scenario, L, methods, options, K, limit_threads=False)
        for task in tasks:
            i_snr, i_trial, out = _worker_trial(task)
            results[(i_snr, i_trial)] = out

    report_methods: dict[str, list[MethodSnrStats]] = {m: [] for m in methods}
    for i_snr, snr in enumerate(snr_grid):
        per_method = {
            m: {"sq": [], "short": 0, "miss": 0, "fail": 0, "rt": [], "hist": Counter()}
            for m in methods
        }
        for i_trial in range(trials):
            out = results[(i_snr, i_trial)]
            for m in methods:
                angles, short, runtime, error = out[m]
                acc = per_method[m]
                acc["rt"].append(runtime)
                if error is not None:
                    acc["fail"] += 1
                    continue
                pair = pair_and_rmse(angles, truth)
                acc["sq"].append(pair.rmse**2)
                if short:
                    acc["short"] += 1
                    acc["miss"] += K - len(angles)
                acc["hist"].update(float(a) for a in angles)
        for m in methods:
            acc = per_method[m]
            rmse = math.sqrt(float(np.mean(acc["sq"]))) if acc["sq"] else math.nan
            hist_angles = sorted(acc["hist"])
            report_methods[m].append(
                MethodSnrStats(
                    snr_db=snr,
                    rmse_deg=rmse,
                    trial_count=len(acc["sq"]),
                    short_picks=acc["short"],
                    missing_picks=acc["miss"],
                    failures=acc["fail"],
                    mean_runtime_s=float(np.mean(acc["rt"])),
                    histogram_angles=[float(a) for a in hist_angles],
                    histogram_counts=[int(acc["hist"][a]) for a in hist_angles],
                )
            )

    return EvalReport(
        scenario={
            "doas_deg": scenario.doas_deg.tolist(),
            "magnitudes": scenario.magnitudes.tolist(),
            "phase_model": scenario.phase_model,
        },
        seed=int(seed),
        snr_grid=snr_grid,
        num_snapshots=int(L),
        trials=int(trials),
        methods=report_methods,
    )
