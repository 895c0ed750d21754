"""Transmission-loss grid files, run manifests, and timing CSV.

TL CSV layout: header lines prefixed ``#`` holding ``key=value`` pairs
(the last one lists the column names), then one
``range_m,azimuth_deg,depth_m,tl_db`` row per sample in (range, azimuth,
depth) order.

The binary grid is the same data without text overhead: an 8-byte magic,
a little-endian uint64 header length, a JSON header, then the raw
float64 samples in C order (range x azimuth x depth).
"""

from __future__ import annotations

import hashlib
import json
import math
import struct
from pathlib import Path

import numpy as np

from .environment import Grid3D
from .errors import ConfigError, InvariantError
from .marching import FrequencyResult

BINARY_MAGIC = b"PE3DTLG1"
MANIFEST_NAME = "run_manifest.json"
TL_CSV_COLUMNS = ("range_m", "azimuth_deg", "depth_m", "tl_db")
TIMING_CSV_COLUMNS = (
    "label", "threads", "workers", "nfreq", "nr", "ntheta", "nz",
    "wall_s", "speedup", "efficiency",
)


def tl_filename(frequency: float, tl_format: str) -> str:
    ext = "csv" if tl_format == "csv" else "bin"
    return f"tl_{frequency:012.4f}Hz.{ext}"


def _tl_header(result: FrequencyResult, grid: Grid3D) -> dict:
    if not np.all(np.isfinite(result.tl_field)):
        raise InvariantError("tl values finite (floor-clamped)")
    return {
        "frequency_hz": result.frequency,
        "n_range_samples": int(result.tl_field.shape[0]),
        "n_azimuth": grid.n_azimuth,
        "n_depth": grid.n_depth,
        "delta_r_m": grid.delta_r,
        "delta_theta_deg": math.degrees(grid.delta_theta),
        "delta_z_m": grid.delta_z,
        "r_start_m": grid.r_start,
        "output_stride": result.output_stride,
        "azimuth_topology": grid.azimuth_topology,
        "clamped_samples": result.clamped_samples,
        "units": "dB re 1 at 1 m",
    }


def write_tl_csv(path, result: FrequencyResult, grid: Grid3D) -> Path:
    path = Path(path)
    header = _tl_header(result, grid)
    s, m, l = result.tl_field.shape
    ranges = np.repeat(result.ranges, m * l)
    azimuths = np.tile(np.repeat(np.degrees(grid.azimuths()), l), s)
    depths = np.tile(grid.depths(), s * m)
    table = np.column_stack([ranges, azimuths, depths, result.tl_field.ravel()])
    lines = [f"# {key}={value}" for key, value in header.items()]
    lines.append("# columns=" + ",".join(TL_CSV_COLUMNS))
    np.savetxt(path, table, fmt="%.6f,%.6f,%.6f,%.6f",
               header="\n".join(lines), comments="")
    return path


def read_tl_csv(path):
    header = {}
    with open(path) as fh:
        data_start = 0
        for line in fh:
            if not line.startswith("#"):
                break
            data_start += 1
            body = line[1:].strip()
            if "=" in body:
                key, value = body.split("=", 1)
                header[key.strip()] = value.strip()
    table = np.loadtxt(path, delimiter=",", skiprows=data_start)
    shape = (
        int(header["n_range_samples"]),
        int(header["n_azimuth"]),
        int(header["n_depth"]),
    )
    tl = table[:, 3].reshape(shape)
    return header, tl


def write_tl_binary(path, result: FrequencyResult, grid: Grid3D) -> Path:
    path = Path(path)
    header = _tl_header(result, grid)
    header["ranges_m"] = [float(r) for r in result.ranges]
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    data = np.ascontiguousarray(result.tl_field, dtype=np.float64)
    with open(path, "wb") as fh:
        fh.write(BINARY_MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        fh.write(data.tobytes())
    return path


def read_tl_binary(path):
    with open(path, "rb") as fh:
        magic = fh.read(len(BINARY_MAGIC))
        if magic != BINARY_MAGIC:
            raise ConfigError(f"{path}: not a TL grid file")
        (blob_len,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(blob_len).decode("utf-8"))
        shape = (
            header["n_range_samples"], header["n_azimuth"], header["n_depth"]
        )
        tl = np.frombuffer(fh.read(), dtype=np.float64).reshape(shape)
    return header, tl


def write_tl_grid(path, result: FrequencyResult, grid: Grid3D,
                  tl_format: str) -> Path:
    if tl_format == "csv":
        return write_tl_csv(path, result, grid)
    if tl_format == "binary-grid":
        return write_tl_binary(path, result, grid)
    raise InvariantError("tl_format in (csv, binary-grid)", f"got {tl_format!r}")


def file_sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(directory, manifest: dict) -> Path:
    path = Path(directory) / MANIFEST_NAME
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def load_manifest(directory) -> dict:
    with open(Path(directory) / MANIFEST_NAME) as fh:
        return json.load(fh)


def write_timing_csv(path, records) -> Path:
    """Fixed-schema CSV of successful timing records."""
    path = Path(path)
    with open(path, "w") as fh:
        fh.write(",".join(TIMING_CSV_COLUMNS) + "\n")
        for rec in records:
            if rec.error is not None:
                continue
            nr, ntheta, nz = rec.grid_dims
            fh.write(
                f"{rec.label},{rec.intra_threads},{rec.freq_workers},"
                f"{rec.frequency_count},{nr},{ntheta},{nz},"
                f"{rec.wall_seconds:.6f},{rec.speedup:.4f},{rec.efficiency:.4f}\n"
            )
    return path


def read_timing_csv(path) -> list[dict]:
    rows = []
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if tuple(header) != TIMING_CSV_COLUMNS:
            raise ConfigError(f"{path}: unexpected timing CSV columns {header}")
        for line in fh:
            parts = line.strip().split(",")
            if not parts or parts == [""]:
                continue
            rows.append(dict(zip(header, parts)))
    return rows
