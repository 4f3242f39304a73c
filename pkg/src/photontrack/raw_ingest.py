"""Raw frame file parsing and pulse-train grouping.

The on-disk format is headerless: frames are stored back to back, each
frame a row-major block of unsigned 16-bit little-endian range-bin
values.  Pixel (x, y) of frame f lives at byte offset
2 * (f * W * H + y * W + x).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import EmptyInputError, TruncatedFileError

log = logging.getLogger(__name__)

RAW_DTYPE = np.dtype("<u2")


@dataclass(frozen=True)
class SensorConfig:
    """Geometry and timing of the photon-counting sensor array.

    ``ceiling`` is the sentinel pixel value meaning "no photon detected
    during the integration window".  Range bins between ``offset`` and
    ``ceiling - offset - 1`` form the usable depth window, so the voxel
    histogram depth is ``ceiling - 2 * offset`` (600 with the defaults).
    """

    width: int = 32
    height: int = 32
    pulses_per_group: int = 200
    ceiling: int = 620
    offset: int = 10

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError("sensor dimensions must be positive")
        if self.pulses_per_group < 1:
            raise ValueError("pulses_per_group must be positive")
        if self.offset < 0:
            raise ValueError("offset must be nonnegative")
        if self.ceiling > 0xFFFF:
            raise ValueError("ceiling must fit in 16 bits")
        if self.ceiling - 2 * self.offset < 1:
            raise ValueError("ceiling - 2*offset must be at least 1")

    @property
    def nz(self) -> int:
        """Depth of the voxel histogram."""
        return self.ceiling - 2 * self.offset

    @property
    def frame_pixels(self) -> int:
        return self.width * self.height

    @property
    def frame_nbytes(self) -> int:
        return 2 * self.frame_pixels

    @property
    def zmin(self) -> int:
        """First usable range bin."""
        return self.offset

    @property
    def zmax(self) -> int:
        """Last usable range bin (inclusive)."""
        return self.ceiling - self.offset - 1


@dataclass(frozen=True)
class FrameGroup:
    """One train of pulses: ``frames`` has shape (pulses, height, width)."""

    frames: np.ndarray
    group_index: int


def parse_frames(data: bytes, cfg: SensorConfig) -> np.ndarray:
    """Decode a raw byte stream into an array of frames.

    Returns an array of shape (n_frames, height, width), dtype uint16,
    indexed [frame, y, x].  Values above ``cfg.ceiling`` are clamped to
    the ceiling; the number of clamped pixels is logged as a warning.
    """
    if len(data) == 0:
        raise EmptyInputError("no bytes to parse")
    if len(data) % cfg.frame_nbytes != 0:
        raise TruncatedFileError(
            f"{len(data)} bytes is not a multiple of the "
            f"{cfg.frame_nbytes}-byte frame size"
        )
    frames = np.frombuffer(data, dtype=RAW_DTYPE).reshape(-1, cfg.height, cfg.width)
    n_over = int(np.count_nonzero(frames > cfg.ceiling))
    if n_over:
        log.warning("clamped %d pixel values above ceiling %d", n_over, cfg.ceiling)
        frames = frames.clip(max=np.uint16(cfg.ceiling))
    return frames


def group_frames(frames: np.ndarray, cfg: SensorConfig) -> list[FrameGroup]:
    """Split frames into pulse-train groups of ``cfg.pulses_per_group``.

    A trailing partial group would bias photon counts, so it is discarded
    with a warning.
    """
    per = cfg.pulses_per_group
    n_groups = frames.shape[0] // per
    leftover = frames.shape[0] - n_groups * per
    if leftover:
        log.warning("discarding trailing partial group of %d frames", leftover)
    return [FrameGroup(frames[i * per : (i + 1) * per], i) for i in range(n_groups)]
