"""Run configuration: a single JSON document, strictly validated.

Unknown keys are rejected at every level so typos fail loudly instead of
silently running with defaults. The manifest hash is computed over the
normalized (defaults filled in) form, so it changes exactly when an
effective field changes.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .evaluation import METHODS, EvalOptions
from .geometry import AngularGrid, ArraySpec
from .solver import SolverOptions
from .synthesis import SourceScenario, db_to_linear

__all__ = ["PathConfig", "ScenarioConfig", "config_hash"]


def _take(d: dict, context: str, **defaults):
    """Pop known keys with defaults; reject anything left over."""
    d = dict(d)
    out = {}
    for key, default in defaults.items():
        out[key] = d.pop(key, default)
    if d:
        raise ValueError(f"unknown keys in {context}: {sorted(d)}")
    return out

_REQUIRED = object()


def _require(values: dict, context: str):
    for key, value in values.items():
        if value is _REQUIRED:
            raise ValueError(f"missing required key {key!r} in {context}")


@dataclass(frozen=True)
class PathConfig:
    """Options of the sparsity-targeted path search."""

    target_sparsity: int | None = None  # default: number of scenario sources
    interpolation: float = 0.9
    overshoot: int = 2
    min_sep_bins: int | None = None     # default: scaled from the grid step
    max_outer: int = 12

    def __post_init__(self):
        if not 0.0 < self.interpolation < 1.0:
            raise ValueError("interpolation weight must lie in (0, 1)")
        if self.overshoot < 0 or self.max_outer < 1:
            raise ValueError("invalid path options")


@dataclass(frozen=True)
class ScenarioConfig:
    array: ArraySpec
    grid: AngularGrid
    scenario: SourceScenario
    num_snapshots: int
    snr_db: tuple[float, ...]
    methods: tuple[str, ...]
    solver: SolverOptions
    path: PathConfig
    trials: int
    seed: int
    output_dir: str
    normalized: dict = field(compare=False, repr=False, default_factory=dict)

    @classmethod
    def from_dict(cls, raw: dict) -> "ScenarioConfig":
        top = _take(
            raw,
            "config",
            array=_REQUIRED,
            grid=_REQUIRED,
            scenario=_REQUIRED,
            num_snapshots=1,
            snr_db=_REQUIRED,
            methods=_REQUIRED,
            solver={},
            path={},
            trials=1,
            seed=0,
            output_dir="out",
        )
        _require(top, "config")

        arr = _take(top["array"], "array", num_sensors=_REQUIRED,
                    spacing_over_wavelength=0.5)
        _require(arr, "array")
        array = ArraySpec(int(arr["num_sensors"]),
                          float(arr["spacing_over_wavelength"]))

        gr = _take(top["grid"], "grid", start_deg=-90.0, stop_deg=90.0,
                   step_deg=_REQUIRED)
        _require(gr, "grid")
        grid = AngularGrid.from_range(
            float(gr["start_deg"]), float(gr["stop_deg"]), float(gr["step_deg"])
        )

        sc = _take(
            top["scenario"],
            "scenario",
            doas_deg=_REQUIRED,
            magnitudes=_REQUIRED,
            magnitude_scale="db",
            phase_model="iid_uniform_per_snapshot",
        )
        _require(sc, "scenario")
        if sc["magnitude_scale"] == "db":
            mags = db_to_linear(sc["magnitudes"])
        elif sc["magnitude_scale"] == "linear":
            mags = sc["magnitudes"]
        else:
            raise ValueError(
                f"magnitude_scale must be 'db' or 'linear', got "
                f"{sc['magnitude_scale']!r}"
            )
        scenario = SourceScenario(sc["doas_deg"], mags, sc["phase_model"])

        sol = _take(
            top["solver"],
            "solver",
            rel_tol=1e-9,
            max_iters=20000,
            restart_every=500,
            epsilon_active=0.05,
            kkt_tol=5e-4,
        )
        solver = SolverOptions(
            rel_tol=float(sol["rel_tol"]),
            max_iters=int(sol["max_iters"]),
            restart_every=int(sol["restart_every"]),
            epsilon_active=float(sol["epsilon_active"]),
            kkt_tol=float(sol["kkt_tol"]),
        )

        pa = _take(
            top["path"],
            "path",
            target_sparsity=None,
            interpolation=0.9,
            overshoot=2,
            min_sep_bins=None,
            max_outer=12,
        )
        path = PathConfig(
            target_sparsity=None if pa["target_sparsity"] is None
            else int(pa["target_sparsity"]),
            interpolation=float(pa["interpolation"]),
            overshoot=int(pa["overshoot"]),
            min_sep_bins=None if pa["min_sep_bins"] is None
            else int(pa["min_sep_bins"]),
            max_outer=int(pa["max_outer"]),
        )

        snr_raw = top["snr_db"]
        snr = tuple(float(s) for s in
                    (snr_raw if isinstance(snr_raw, (list, tuple)) else [snr_raw]))
        methods = tuple(str(m).upper() for m in top["methods"])
        for m in methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}; expected one of {METHODS}")

        trials = int(top["trials"])
        num_snapshots = int(top["num_snapshots"])
        seed = int(top["seed"])
        if trials < 1 or num_snapshots < 1:
            raise ValueError("trials and num_snapshots must be positive")

        cfg = cls(
            array=array,
            grid=grid,
            scenario=scenario,
            num_snapshots=num_snapshots,
            snr_db=snr,
            methods=methods,
            solver=solver,
            path=path,
            trials=trials,
            seed=seed,
            output_dir=str(top["output_dir"]),
            normalized={},
        )
        object.__setattr__(cfg, "normalized", cfg._normalize())
        return cfg

    @classmethod
    def from_file(cls, path) -> "ScenarioConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def _normalize(self) -> dict:
        return {
            "array": {
                "num_sensors": self.array.num_sensors,
                "spacing_over_wavelength": self.array.spacing_over_wavelength,
            },
            "grid": {
                "start_deg": float(self.grid.angles_deg[0]),
                "stop_deg": float(self.grid.angles_deg[-1]),
                "step_deg": self.grid.step_deg,
            },
            "scenario": {
                "doas_deg": self.scenario.doas_deg.tolist(),
                "magnitudes": self.scenario.magnitudes.tolist(),
                "magnitude_scale": "linear",
                "phase_model": self.scenario.phase_model,
            },
            "num_snapshots": self.num_snapshots,
            "snr_db": list(self.snr_db),
            "methods": list(self.methods),
            "solver": {
                "rel_tol": self.solver.rel_tol,
                "max_iters": self.solver.max_iters,
                "restart_every": self.solver.restart_every,
                "epsilon_active": self.solver.epsilon_active,
                "kkt_tol": self.solver.kkt_tol,
            },
            "path": {
                "target_sparsity": self.path.target_sparsity,
                "interpolation": self.path.interpolation,
                "overshoot": self.path.overshoot,
                "min_sep_bins": self.path.min_sep_bins,
                "max_outer": self.path.max_outer,
            },
            "trials": self.trials,
            "seed": self.seed,
            "output_dir": self.output_dir,
        }

    @property
    def target_sparsity(self) -> int:
        return self.path.target_sparsity or self.scenario.num_sources

    def eval_options(self, workers: int = 1) -> EvalOptions:
        return EvalOptions(
            solver=self.solver,
            path_f=self.path.interpolation,
            overshoot=self.path.overshoot,
            min_sep_bins=self.path.min_sep_bins,
            workers=workers,
        )


def config_hash(config: ScenarioConfig) -> str:
    canon = json.dumps(config.normalized, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()
