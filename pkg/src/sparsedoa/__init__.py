"""Sparse (compressive-sensing) DOA estimation for uniform linear arrays.

Single-snapshot LASSO and multi-snapshot group-LASSO source recovery with
regularization-path parameter selection, reference beamformers
(CBF/MVDR/MUSIC), an exhaustive maximum-likelihood oracle, and a
Monte-Carlo evaluation harness.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND as KERNEL_BACKEND
from .beamform import (
    BeamSpectrum,
    CovarianceMatrix,
    PeakPick,
    cbf_single,
    cbf_spectrum,
    music_spectrum,
    mvdr_spectrum,
    peak_pick,
    sample_covariance,
)
from .evaluation import (
    EvalOptions,
    EvalReport,
    cs_doa_estimate,
    exhaustive_ml,
    monte_carlo,
    pair_and_rmse,
)
from .geometry import (
    AngularGrid,
    ArraySpec,
    SensingMatrix,
    build_sensing_matrix,
    mutual_coherence,
    steering_vector,
)
from .path import PathRecord, PathResult, peak, run_path, sweep_path
from .solver import (
    SolverOptions,
    SparseSolution,
    active_set_of,
    beamformed_residual,
    debias,
    kkt_check,
    row_shrink,
    solve_lasso,
)
from .synthesis import (
    SnapshotSet,
    SourceScenario,
    empirical_snr,
    synthesize,
)

__all__ = [
    "KERNEL_BACKEND",
    "__version__",
    "AngularGrid",
    "ArraySpec",
    "BeamSpectrum",
    "CovarianceMatrix",
    "EvalOptions",
    "EvalReport",
    "PathRecord",
    "PathResult",
    "PeakPick",
    "SensingMatrix",
    "SnapshotSet",
    "SolverOptions",
    "SourceScenario",
    "SparseSolution",
    "active_set_of",
    "beamformed_residual",
    "build_sensing_matrix",
    "cbf_single",
    "cbf_spectrum",
    "cs_doa_estimate",
    "debias",
    "empirical_snr",
    "exhaustive_ml",
    "kkt_check",
    "monte_carlo",
    "music_spectrum",
    "mutual_coherence",
    "mvdr_spectrum",
    "pair_and_rmse",
    "peak",
    "peak_pick",
    "row_shrink",
    "run_path",
    "sample_covariance",
    "solve_lasso",
    "steering_vector",
    "sweep_path",
    "synthesize",
]
