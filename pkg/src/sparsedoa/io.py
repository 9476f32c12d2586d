"""File formats and narrowband snapshot extraction.

Formats
-------
Snapshot CSV: ``#``-prefixed header lines carrying the array geometry and
provenance, then one row per sensor with interleaved real/imag columns
(one re/im pair per snapshot), 17 significant digits so a write/read
round trip is exact at 64-bit precision.

Time series come in two containers: CSV with a leading ``fs,M`` row
followed by one row per channel, and raw little-endian float32 samples in
channel-major order next to a JSON sidecar describing the layout.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import ArraySpec
from .synthesis import SnapshotMeta, SnapshotSet

__all__ = [
    "TimeSeriesFile",
    "extract_snapshots",
    "write_snapshots_csv",
    "read_snapshots_csv",
    "write_timeseries_csv",
    "read_timeseries_csv",
    "write_timeseries_raw",
    "read_timeseries_raw",
    "write_spectra_csv",
    "write_path_csv",
    "write_rmse_csv",
]

FMT = "%.17g"  # round-trip safe for float64


@dataclass(frozen=True)
class TimeSeriesFile:
    """Real-valued multichannel record, channel-major samples."""

    sample_rate_hz: float
    samples: np.ndarray  # (num_channels, num_samples) float64

    def __post_init__(self):
        samples = np.ascontiguousarray(self.samples, dtype=np.float64)
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)
        if samples.ndim != 2 or samples.shape[0] < 1 or samples.shape[1] < 1:
            raise ValueError("time series must be a (channels, samples) matrix")
        if self.sample_rate_hz <= 0:
            raise ValueError("sample rate must be positive")

    @property
    def num_channels(self) -> int:
        return self.samples.shape[0]

    @property
    def num_samples(self) -> int:
        return self.samples.shape[1]


def extract_snapshots(
    ts: TimeSeriesFile,
    f0: float,
    nfft: int,
    overlap_fraction: float,
    window: str = "rectangular",
    array: ArraySpec | None = None,
) -> SnapshotSet:
    """Narrowband snapshots from overlapping windowed DFTs.

    Each hop of ``floor(nfft*(1-overlap))`` samples yields one snapshot:
    the window is applied per channel, a length-``nfft`` DFT taken, and
    the bin nearest ``f0`` stacked across channels. Snapshot count is
    ``floor((T - nfft)/hop) + 1``.
    """
    if not 0.0 <= overlap_fraction < 1.0:
        raise ValueError("overlap fraction must lie in [0, 1)")
    if nfft < 2:
        raise ValueError("nfft must be at least 2")
    if ts.num_samples < nfft:
        raise ValueError(
            f"record has {ts.num_samples} samples, shorter than nfft={nfft}"
        )
    fs = ts.sample_rate_hz
    if not 0.0 <= f0 < fs / 2.0:
        raise ValueError(f"f0={f0} Hz must lie in [0, fs/2={fs / 2.0} Hz)")

    if window == "rectangular":
        win = np.ones(nfft)
    elif window == "hann":
        win = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(nfft) / nfft)
    else:
        raise ValueError(f"unknown window {window!r}")

    hop = int(np.floor(nfft * (1.0 - overlap_fraction)))
    if hop < 1:
        raise ValueError("overlap too large: hop underflows to zero samples")
    count = (ts.num_samples - nfft) // hop + 1

    bin_width = fs / nfft
    k0 = int(round(f0 / bin_width))
    f_actual = k0 * bin_width
    if abs(f_actual - f0) > bin_width:
        warnings.warn(
            f"f0={f0} Hz is more than one bin width from a bin center; "
            f"using the nearest bin at {f_actual} Hz",
            stacklevel=2,
        )

    M = ts.num_channels
    data = np.empty((M, count), np.complex128)
    for s in range(count):
        seg = ts.samples[:, s * hop : s * hop + nfft] * win
        data[:, s] = np.fft.rfft(seg, axis=1)[:, k0]

    if array is None:
        array = ArraySpec(M)
    elif array.num_sensors != M:
        raise ValueError(
            f"record has {M} channels but the array spec expects "
            f"{array.num_sensors}"
        )
    meta = SnapshotMeta(provenance=f"timeseries f0={f_actual}Hz nfft={nfft}")
    return SnapshotSet(data, array, meta)


def write_snapshots_csv(path, snapshots: SnapshotSet) -> None:
    path = Path(path)
    m = snapshots.meta
    lines = [
        "# sparsedoa snapshots v1",
        f"# num_sensors={snapshots.array.num_sensors}",
        f"# spacing_over_wavelength={FMT % snapshots.array.spacing_over_wavelength}",
        f"# num_snapshots={snapshots.num_snapshots}",
        f"# provenance={m.provenance}",
    ]
    if m.snr_db is not None:
        lines.append(f"# snr_db={FMT % m.snr_db}")
    if m.seed is not None:
        lines.append(f"# seed={m.seed}")
    with path.open("w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
        writer = csv.writer(fh)
        for row in snapshots.data:
            flat = np.empty(2 * row.size)
            flat[0::2] = row.real
            flat[1::2] = row.imag
            writer.writerow([FMT % v for v in flat])


def read_snapshots_csv(path) -> SnapshotSet:
    path = Path(path)
    header: dict[str, str] = {}
    rows = []
    with path.open(newline="") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line.lstrip("#").strip()
                if "=" in body:
                    key, _, value = body.partition("=")
                    header[key.strip()] = value.strip()
                continue
            rows.append([float(v) for v in line.split(",")])
    flat = np.asarray(rows)
    data = flat[:, 0::2] + 1j * flat[:, 1::2]
    array = ArraySpec(
        int(header["num_sensors"]),
        float(header.get("spacing_over_wavelength", 0.5)),
    )
    meta = SnapshotMeta(
        provenance=header.get("provenance", "file"),
        snr_db=float(header["snr_db"]) if "snr_db" in header else None,
        seed=int(header["seed"]) if "seed" in header else None,
    )
    return SnapshotSet(data, array, meta)


def write_timeseries_csv(path, ts: TimeSeriesFile) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([FMT % ts.sample_rate_hz, ts.num_channels])
        for channel in ts.samples:
            writer.writerow([FMT % v for v in channel])


def read_timeseries_csv(path) -> TimeSeriesFile:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        first = next(reader)
        fs, m = float(first[0]), int(float(first[1]))
        channels = [np.asarray([float(v) for v in row]) for row in reader if row]
    if len(channels) != m:
        raise ValueError(f"header says {m} channels, file has {len(channels)}")
    return TimeSeriesFile(fs, np.vstack(channels))


def write_timeseries_raw(path, ts: TimeSeriesFile) -> None:
    path = Path(path)
    ts.samples.astype("<f4").tofile(path)
    sidecar = {
        "sample_rate_hz": ts.sample_rate_hz,
        "num_channels": ts.num_channels,
        "num_samples": ts.num_samples,
        "dtype": "float32",
        "byte_order": "little",
        "layout": "channel-major",
    }
    path.with_suffix(path.suffix + ".json").write_text(
        json.dumps(sidecar, indent=2) + "\n"
    )


def read_timeseries_raw(path) -> TimeSeriesFile:
    path = Path(path)
    sidecar_path = path.with_suffix(path.suffix + ".json")
    if not sidecar_path.exists():
        raise FileNotFoundError(f"missing sidecar descriptor {sidecar_path}")
    sidecar = json.loads(sidecar_path.read_text())
    m = int(sidecar["num_channels"])
    raw = np.fromfile(path, dtype="<f4").astype(np.float64)
    if raw.size % m:
        raise ValueError(f"{raw.size} samples not divisible by {m} channels")
    return TimeSeriesFile(float(sidecar["sample_rate_hz"]), raw.reshape(m, -1))


def write_spectra_csv(path, spectra) -> None:
    """Export beam spectra as (angle_deg, power_db, method) rows."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["angle_deg", "power_db", "method"])
        for spec in spectra:
            db = spec.power_db()
            for angle, p in zip(spec.grid.angles_deg, db):
                writer.writerow([FMT % angle, FMT % p, spec.method])


def write_path_csv(path, record) -> None:
    """Export a PathRecord as one row per solve event."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["mu", "sparsity", "residual_sup", "data_error", "l1_norm"])
        for e in record.events:
            writer.writerow(
                [FMT % e.mu, e.sparsity, FMT % e.residual_sup,
                 FMT % e.data_error, FMT % e.l1_norm]
            )


def write_rmse_csv(path, report) -> None:
    """Export RMSE curves; deterministic fields only (no runtimes)."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["method", "snr_db", "rmse_deg", "trial_count",
             "short_picks", "failures"]
        )
        for method, stats in report.methods.items():
            for s in stats:
                writer.writerow(
                    [method, FMT % s.snr_db, FMT % s.rmse_deg,
                     s.trial_count, s.short_picks, s.failures]
                )
