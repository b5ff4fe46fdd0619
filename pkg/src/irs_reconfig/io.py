"""Output writers: CSV tables, 8-bit PGM heatmaps and run manifests.

Nothing written here carries a timestamp, so reruns with the same config
and seed are byte-identical.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .field import SnrGrid

TRACE_COLUMNS = ("timestamp_s", "kind", "mu_x_m", "mu_y_m", "mu_z_m", "snr_db")
PROFILE_COLUMNS = ("element_index", "y_m", "z_m", "phase_rad")
MAP_COLUMNS = ("u_m", "v_m", "snr_db")


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return v


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            if len(row) != len(header):
                raise ValueError(f"row has {len(row)} fields, header has {len(header)}")
            w.writerow([_cell(v) for v in row])
    return path


def heatmap_bytes(snr_db: np.ndarray, db_min: float, db_max: float) -> np.ndarray:
    """Map dB values linearly onto 0..255, clipping outside the range."""
    if not db_max > db_min:
        raise ValueError("db_max must exceed db_min")
    scaled = (np.asarray(snr_db, dtype=float) - db_min) / (db_max - db_min)
    return np.clip(np.rint(255.0 * scaled), 0, 255).astype(np.uint8)


def write_pgm(path, grid: SnrGrid, db_min: float, db_max: float) -> tuple[Path, Path]:
    """Binary PGM with u across and v up, plus a ``.range.txt`` sidecar."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # image row 0 is the largest v
    img = heatmap_bytes(grid.snr_db, db_min, db_max).T[::-1]
    h, w = img.shape
    path.write_bytes(b"P5\n%d %d\n255\n" % (w, h) + img.tobytes())
    side = path.with_name(path.name + ".range.txt")
    side.write_text(
        f"db_min = {db_min!r}\n"
        f"db_max = {db_max!r}\n"
        f"axis_u = {grid.axis_u}\n"
        f"axis_v = {grid.axis_v}\n"
        f"u_range_m = {float(grid.u_offsets[0])!r},{float(grid.u_offsets[-1])!r}\n"
        f"v_range_m = {float(grid.v_offsets[0])!r},{float(grid.v_offsets[-1])!r}\n"
    )
    return path, side


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    magic, dims, maxval, body = data.split(b"\n", 3)
    if magic != b"P5" or maxval != b"255":
        raise ValueError("not an 8-bit binary PGM")
    w, h = (int(x) for x in dims.split())
    return np.frombuffer(body, dtype=np.uint8).reshape(h, w)


def write_map_csv(path, grid: SnrGrid) -> Path:
    return write_csv(path, MAP_COLUMNS, grid.rows())


def write_profile_csv(path, profile, panel) -> Path:
    return write_csv(path, PROFILE_COLUMNS, profile.to_rows(panel))


def write_trace_csv(path, trace) -> Path:
    return write_csv(path, TRACE_COLUMNS, trace.rows())


def write_manifest(path, cfg, seed: int, command: str, version: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        f"# irs-reconfig {version}\n"
        f"# command = {command}\n"
        f"# seed = {seed}\n"
        + cfg.echo()
    )
    return path

