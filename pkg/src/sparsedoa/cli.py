"""Command-line front end.

Subcommands: ``synth``, ``ingest``, ``beamform``, ``cs``, ``path``,
``bench``. All take a JSON config file (see README for the schema);
``SPARSEDOA_OUTPUT_DIR`` overrides the configured output directory.
Failures write a machine-readable ``error.json`` into the output
directory and exit nonzero.
"""

from __future__ import annotations

import argparse
import json
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from ._kernels import BACKEND
from .beamform import cbf_spectrum, music_spectrum, mvdr_spectrum, sample_covariance
from .config import ScenarioConfig, config_hash
from .evaluation import cs_doa_estimate, monte_carlo
from .geometry import build_sensing_matrix
from .io import (
    extract_snapshots,
    read_snapshots_csv,
    read_timeseries_csv,
    read_timeseries_raw,
    write_path_csv,
    write_rmse_csv,
    write_snapshots_csv,
    write_spectra_csv,
)
from .path import sweep_path
from .solver import beamformed_residual, row_norms
from .synthesis import synthesize

OUTPUT_DIR_ENV = "SPARSEDOA_OUTPUT_DIR"


def _outdir(config: ScenarioConfig) -> Path:
    out = Path(os.environ.get(OUTPUT_DIR_ENV) or config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_manifest(out: Path, config: ScenarioConfig) -> None:
    manifest = {
        "config_sha256": config_hash(config),
        "seed": config.seed,
        "kernel_backend": BACKEND,
        "versions": {
            "sparsedoa": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
        },
    }
    (out / "run_manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


def _load_or_synthesize(config: ScenarioConfig, snapshots_path: str | None):
    if snapshots_path:
        snaps = read_snapshots_csv(snapshots_path)
        if snaps.array.num_sensors != config.array.num_sensors:
            raise ValueError(
                f"snapshot file has {snaps.array.num_sensors} sensors, "
                f"config expects {config.array.num_sensors}"
            )
        return snaps
    snaps, _ = synthesize(
        config.scenario,
        config.array,
        config.num_snapshots,
        config.snr_db[0],
        config.seed,
    )
    return snaps


def cmd_synth(config: ScenarioConfig, args) -> int:
    out = _outdir(config)
    snaps, _ = synthesize(
        config.scenario, config.array, config.num_snapshots,
        config.snr_db[0], config.seed,
    )
    write_snapshots_csv(out / "snapshots.csv", snaps)
    _write_manifest(out, config)
    print(f"wrote {out / 'snapshots.csv'} "
          f"({snaps.array.num_sensors} sensors x {snaps.num_snapshots} snapshots)")
    return 0


def cmd_ingest(config: ScenarioConfig, args) -> int:
    out = _outdir(config)
    path = Path(args.input)
    if path.suffix.lower() == ".csv":
        ts = read_timeseries_csv(path)
    else:
        ts = read_timeseries_raw(path)
    snaps = extract_snapshots(
        ts, args.f0, args.nfft, args.overlap, args.window, array=config.array
    )
    write_snapshots_csv(out / "snapshots.csv", snaps)
    _write_manifest(out, config)
    print(f"extracted {snaps.num_snapshots} snapshots -> {out / 'snapshots.csv'}")
    return 0


def _beamform_spectra(config: ScenarioConfig, snaps):
    A = build_sensing_matrix(config.grid, config.array)
    cov = sample_covariance(snaps)
    spectra = []
    for method in config.methods:
        if method == "CBF":
            spectra.append(cbf_spectrum(cov, A))
        elif method == "MVDR":
            spectra.append(mvdr_spectrum(cov, A))
        elif method == "MUSIC":
            spectra.append(music_spectrum(cov, A, config.target_sparsity))
    return A, spectra


def cmd_beamform(config: ScenarioConfig, args) -> int:
    out = _outdir(config)
    snaps = _load_or_synthesize(config, args.snapshots)
    _, spectra = _beamform_spectra(config, snaps)
    if not spectra:
        raise ValueError("no covariance-based methods in config.methods")
    for spec in spectra:
        write_spectra_csv(out / f"spectrum_{spec.method}.csv", [spec])
    _write_manifest(out, config)
    print(f"wrote {len(spectra)} spectra to {out}")
    return 0


def cmd_cs(config: ScenarioConfig, args) -> int:
    out = _outdir(config)
    snaps = _load_or_synthesize(config, args.snapshots)
    A = build_sensing_matrix(config.grid, config.array)
    est = cs_doa_estimate(
        A,
        snaps.data,
        config.target_sparsity,
        F=config.path.interpolation,
        overshoot=config.path.overshoot,
        min_sep_bins=config.path.min_sep_bins,
        opts=config.solver,
    )
    result = {
        "doas_deg": est.doas_deg.tolist(),
        "indices": est.indices.tolist(),
        "amplitude_row_norms": row_norms(est.amplitudes).tolist(),
        "mu": est.mu,
        "short": est.short,
        "path_exhausted": est.path_exhausted,
    }
    (out / "cs_estimate.json").write_text(json.dumps(result, indent=2) + "\n")
    _write_manifest(out, config)
    print("estimated DOAs (deg):", ", ".join(f"{d:g}" for d in est.doas_deg))
    return 0


def _auto_mu_schedule(A, Y, points: int = 60, decades: float = 1.8):
    """Log-spaced mu grid from just above activation down ~`decades`."""
    mu_max = float(row_norms(2.0 * (A.entries.conj().T @ Y)).max())
    return np.geomspace(1.05 * mu_max, mu_max * 10.0 ** (-decades), points)


def cmd_path(config: ScenarioConfig, args) -> int:
    out = _outdir(config)
    snaps = _load_or_synthesize(config, args.snapshots)
    A = build_sensing_matrix(config.grid, config.array)
    Y = snaps.data
    mus = _auto_mu_schedule(A, Y, points=args.points)
    record, _ = sweep_path(A, Y, mus, opts=config.solver)
    write_path_csv(out / "path.csv", record)
    _write_manifest(out, config)
    print(f"swept {len(record.events)} mu values -> {out / 'path.csv'}")
    return 0


def cmd_bench(config: ScenarioConfig, args) -> int:
    return run(config, workers=args.workers)


def run(config: ScenarioConfig, workers: int = 1) -> int:
    """Full pipeline: one-realization spectra + path trace + Monte Carlo.

    Writes spectrum CSVs for the configured covariance methods and the
    sparse estimate, a mu-sweep path CSV, the evaluation report (JSON and
    RMSE CSV), and the run manifest. Any error is recorded as
    ``error.json`` in the output directory and a nonzero status returned.
    """
    out = _outdir(config)
    try:
        snaps = _load_or_synthesize(config, None)
        A, spectra = _beamform_spectra(config, snaps)
        for spec in spectra:
            write_spectra_csv(out / f"spectrum_{spec.method}.csv", [spec])
        if "CS" in config.methods:
            est = cs_doa_estimate(
                A,
                snaps.data,
                config.target_sparsity,
                F=config.path.interpolation,
                overshoot=config.path.overshoot,
                min_sep_bins=config.path.min_sep_bins,
                opts=config.solver,
            )
            _write_cs_spectrum(out, A, snaps, est)
            record, _ = sweep_path(
                A, snaps.data, _auto_mu_schedule(A, snaps.data), opts=config.solver
            )
            write_path_csv(out / "path.csv", record)
        report = monte_carlo(
            config.scenario,
            A,
            config.methods,
            config.snr_db,
            config.trials,
            config.num_snapshots,
            config.seed,
            options=config.eval_options(workers=workers),
        )
        (out / "report.json").write_text(
            json.dumps(report.to_dict(), indent=2) + "\n"
        )
        write_rmse_csv(out / "rmse_vs_snr.csv", report)
        _write_manifest(out, config)
        return 0
    except Exception as exc:  # contract: machine-readable error record
        (out / "error.json").write_text(
            json.dumps(
                {"error": type(exc).__name__, "message": str(exc)}, indent=2
            )
            + "\n"
        )
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _write_cs_spectrum(out: Path, A, snaps, est) -> None:
    """Sparse estimate exported in the spectra CSV schema.

    Rows carry the debiased per-angle power at the active bins and the
    final beamformed residual elsewhere (residual in linear power).
    """
    import csv as _csv

    from .io import FMT

    power = np.zeros(A.shape[1])
    if est.indices.size:
        power[est.indices] = row_norms(est.amplitudes) ** 2
    with (out / "spectrum_cs.csv").open("w", newline="") as fh:
        writer = _csv.writer(fh)
        writer.writerow(["angle_deg", "power_db", "method"])
        with np.errstate(divide="ignore"):
            db = np.maximum(10.0 * np.log10(power), -320.0)
        for angle, p in zip(A.grid.angles_deg, db):
            writer.writerow([FMT % angle, FMT % p, "cs"])


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="sparsedoa",
        description="Sparse (compressive-sensing) DOA estimation for "
        "uniform linear arrays",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="JSON config file")
        p.set_defaults(func=func)
        return p

    add("synth", cmd_synth, "synthesize snapshots from the configured scenario")

    p_ingest = add("ingest", cmd_ingest, "extract narrowband snapshots from a time series")
    p_ingest.add_argument("--input", required=True, help="time-series file (.csv or raw+sidecar)")
    p_ingest.add_argument("--f0", type=float, required=True, help="analysis frequency in Hz")
    p_ingest.add_argument("--nfft", type=int, required=True, help="DFT length in samples")
    p_ingest.add_argument("--overlap", type=float, default=0.0, help="window overlap fraction in [0,1)")
    p_ingest.add_argument("--window", choices=["rectangular", "hann"], default="rectangular")

    p_beam = add("beamform", cmd_beamform, "CBF/MVDR/MUSIC spectra")
    p_beam.add_argument("--snapshots", help="snapshot CSV (default: synthesize)")

    p_cs = add("cs", cmd_cs, "sparse DOA estimate via the path algorithm")
    p_cs.add_argument("--snapshots", help="snapshot CSV (default: synthesize)")

    p_path = add("path", cmd_path, "trace the regularization path over a mu sweep")
    p_path.add_argument("--snapshots", help="snapshot CSV (default: synthesize)")
    p_path.add_argument("--points", type=int, default=60, help="mu grid size")

    p_bench = add("bench", cmd_bench, "Monte-Carlo RMSE benchmark (full pipeline)")
    p_bench.add_argument("--workers", type=int, default=1, help="parallel trial workers")

    args = parser.parse_args(argv)
    config = ScenarioConfig.from_file(args.config)
    t0 = time.perf_counter()
    status = args.func(config, args)
    if status == 0:
        print(f"done in {time.perf_counter() - t0:.1f} s")
    return status


if __name__ == "__main__":
    sys.exit(main())
