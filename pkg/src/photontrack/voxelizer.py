"""3D photon-count histogram built from one pulse train."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigMismatchError
from .raw_ingest import FrameGroup, SensorConfig


@dataclass(frozen=True)
class VoxelGrid:
    """Photon-count histogram over (x, y, z), z being a shifted range bin.

    ``counts[x, y, z]`` is the number of pulses in the group whose pixel
    (x, y) returned range bin ``offset + z``.
    """

    counts: np.ndarray  # (nx, ny, nz) int32
    group_index: int

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.counts.shape


def build_histogram(group: FrameGroup, cfg: SensorConfig) -> VoxelGrid:
    """Tally range-bin occurrences of one pulse train into a voxel grid.

    Pixel values outside the usable window [offset, ceiling - offset - 1]
    (ceiling pixels in particular) contribute nothing.  The tally runs as
    a single flat bincount, which is far cheaper than per-frame indexing.
    """
    frames = group.frames
    if frames.ndim != 3 or frames.shape[1:] != (cfg.height, cfg.width):
        raise ConfigMismatchError(
            f"frame shape {frames.shape[1:]} does not match "
            f"{cfg.height}x{cfg.width} sensor"
        )
    nx, ny, nz = cfg.width, cfg.height, cfg.nz
    vals = frames.astype(np.int64, copy=False)
    valid = (vals >= cfg.zmin) & (vals <= cfg.zmax)
    ys, xs = np.indices((cfg.height, cfg.width))
    xv = np.broadcast_to(xs, vals.shape)[valid]
    yv = np.broadcast_to(ys, vals.shape)[valid]
    zv = vals[valid] - cfg.offset
    flat = (xv * ny + yv) * nz + zv
    counts = np.bincount(flat, minlength=nx * ny * nz).astype(np.int32)
    return VoxelGrid(counts.reshape(nx, ny, nz), group.group_index)


def max_projection(counts: np.ndarray, axis: int) -> np.ndarray:
    """Maximum-intensity projection along one grid axis (0=x, 1=y, 2=z)."""
    if axis not in (0, 1, 2):
        raise ValueError("axis must be 0, 1 or 2")
    return counts.max(axis=axis)
