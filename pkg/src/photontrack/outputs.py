"""Disk formats for run results: CSV tables, a JSON summary and PGM
projection images.

All text is written with LF line endings regardless of platform, and
floats use the shortest round-trippable-ish %.9g form so diffs between
runs stay meaningful.
"""
from __future__ import annotations

import json

import numpy as np

from .features import FEATURE_NAMES
from .pipeline import StepRecord
from .simulator import GroundTruth
from .voxelizer import max_projection

TRACKS_HEADER = ("step", "track_id", "state", "bad_count") + FEATURE_NAMES
LINKS_HEADER = ("step", "old_slot", "new_slot")


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".9g")
    return str(v)


def _write_rows(path, header, rows) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(c) for c in row) for row in rows)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_tracks_csv(steps: list[StepRecord], path) -> None:
    """One row per maintained track per step, in slot order."""
    rows = []
    for rec in steps:
        for snap in rec.tracks:
            rows.append(
                (rec.step, snap.track_id, snap.state.value, snap.bad_count)
                + tuple(float(x) for x in snap.features.to_array())
            )
    _write_rows(path, TRACKS_HEADER, rows)


def write_links_csv(steps: list[StepRecord], path) -> None:
    """Confirmed slot links between consecutive steps.

    The step column names the older of the two steps: a row
    ``n,a,b`` says slot a of step n continued as slot b of step n+1.
    """
    rows = []
    for rec in steps:
        for old_slot, new_slot in rec.links:
            rows.append((rec.step - 1, old_slot, new_slot))
    _write_rows(path, LINKS_HEADER, rows)


def write_summary_json(steps: list[StepRecord], path) -> None:
    """Per-track aggregate view over the whole run."""
    by_id: dict[int, dict] = {}
    for rec in steps:
        for snap in rec.tracks:
            info = by_id.setdefault(
                snap.track_id,
                {
                    "track_id": snap.track_id,
                    "first_step": rec.step,
                    "last_step": rec.step,
                    "n_steps": 0,
                    "final_state": snap.state.value,
                    "trajectory_points": [],
                },
            )
            info["last_step"] = rec.step
            info["n_steps"] += 1
            info["final_state"] = snap.state.value
            info["trajectory_points"].append([rec.step, *snap.centroid])
    summary = {
        "n_steps": len(steps),
        "tracks": [by_id[k] for k in sorted(by_id)],
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2)
        fh.write("\n")


def write_pgm(path, img: np.ndarray) -> None:
    """Binary PGM, intensities rescaled so the peak maps to 255."""
    if img.ndim != 2:
        raise ValueError("image must be 2D")
    a = np.asarray(img, dtype=np.float64)
    peak = a.max() if a.size else 0.0
    if peak > 0:
        scaled = np.rint(a * (255.0 / peak)).clip(0, 255).astype(np.uint8)
    else:
        scaled = np.zeros(a.shape, dtype=np.uint8)
    h, w = scaled.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(scaled.tobytes())


def projection_image(counts: np.ndarray, axis: int) -> np.ndarray:
    """Maximum-intensity projection as image rows x columns.

    Collapsing z gives an x-y view (rows y, columns x); collapsing y or
    x puts range on the rows instead.
    """
    return max_projection(counts, axis).T


def write_truth_csv(truth: GroundTruth, path) -> None:
    header = (
        "step",
        "target",
        "alive",
        "centroid_x",
        "centroid_y",
        "centroid_z",
        "bbox_min_x",
        "bbox_min_y",
        "bbox_min_z",
        "bbox_max_x",
        "bbox_max_y",
        "bbox_max_z",
    )
    rows = []
    for step, step_records in enumerate(truth.records):
        for target, rec in enumerate(step_records):
            box = (
                (*rec.bbox.min, *rec.bbox.max) if rec.bbox is not None else ("",) * 6
            )
            rows.append(
                (step, target, int(rec.alive))
                + tuple(float(c) for c in rec.centroid)
                + box
            )
    _write_rows(path, header, rows)
