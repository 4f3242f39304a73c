"""Noise reduction over the voxel histogram.

Detection noise populates the raw histogram with many low-valued voxels
(typically one or two photons).  Three user-selectable schemes trade off
noise removal against shape preservation:

  * plain thresholding,
  * thresholding followed by a 3x3x3 majority vote,
  * Gaussian (Parzen-window) smoothing followed by thresholding.

All operations accept either a :class:`~photontrack.voxelizer.VoxelGrid`
or a bare array and return boolean masks of the same shape.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .voxelizer import VoxelGrid


class Scheme(Enum):
    THRESHOLD = "threshold"
    THRESHOLD_MAJORITY = "threshold_majority"
    PARZEN_THRESHOLD = "parzen_threshold"


@dataclass(frozen=True)
class Fixed:
    """Constant threshold."""

    t: float

    def __post_init__(self) -> None:
        if self.t < 0:
            raise ValueError("threshold must be nonnegative")


@dataclass(frozen=True)
class PeakFraction:
    """Threshold at a fraction of the current peak voxel value."""

    alpha: float

    def __post_init__(self) -> None:
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")


@dataclass(frozen=True)
class MovingAverage:
    """Convex blend of the current peak-fraction value with the past
    threshold; ``beta`` weighs the current term."""

    alpha: float
    beta: float

    def __post_init__(self) -> None:
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")
        if not 0 <= self.beta <= 1:
            raise ValueError("beta must lie in [0, 1]")


ThresholdMode = Fixed | PeakFraction | MovingAverage


@dataclass(frozen=True)
class DenoiseConfig:
    scheme: Scheme = Scheme.THRESHOLD
    threshold_mode: ThresholdMode = Fixed(2.0)
    majority_min: int = 2
    sigmas: tuple[float, float, float] = (1.0, 1.0, 1.0)
    kernel_radius_factor: float = 3.0

    def __post_init__(self) -> None:
        if not 0 <= self.majority_min <= 27:
            raise ValueError("majority_min must lie in [0, 27]")
        if any(s <= 0 for s in self.sigmas):
            raise ValueError("sigmas must be positive")
        if self.kernel_radius_factor < 0:
            raise ValueError("kernel_radius_factor must be nonnegative")


def _as_counts(grid) -> np.ndarray:
    return grid.counts if isinstance(grid, VoxelGrid) else np.asarray(grid)


def threshold_fixed(grid, t: float) -> np.ndarray:
    """Binary mask of voxels strictly above ``t``."""
    if t < 0:
        raise ValueError("threshold must be nonnegative")
    return _as_counts(grid) > t


def threshold_peak_fraction(grid, alpha: float) -> tuple[np.ndarray, float]:
    """Threshold at ``alpha`` times the peak voxel value.

    Returns (mask, threshold used).  An all-zero grid yields an empty
    mask and a zero threshold.
    """
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    a = _as_counts(grid)
    peak = float(a.max()) if a.size else 0.0
    t_used = alpha * peak
    return a > t_used, t_used


def threshold_moving_average(
    grid, alpha: float, beta: float, t_prev: float
) -> tuple[np.ndarray, float]:
    """Exponentially smoothed peak-fraction threshold.

    ``t_new = beta * (alpha * peak) + (1 - beta) * t_prev``; at the first
    step the caller seeds ``t_prev`` with the current peak-fraction value
    (which :func:`denoise` does automatically).
    """
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    if not 0 <= beta <= 1:
        raise ValueError("beta must lie in [0, 1]")
    if t_prev < 0:
        raise ValueError("t_prev must be nonnegative")
    a = _as_counts(grid)
    peak = float(a.max()) if a.size else 0.0
    t_new = beta * (alpha * peak) + (1.0 - beta) * t_prev
    return a > t_new, t_new


def majority_rule(mask: np.ndarray, majority_min: int = 2) -> np.ndarray:
    """3x3x3 voting: an internal voxel survives iff more than
    ``majority_min`` voxels of its neighborhood (center included) are set.

    The vote reads the input mask only, and boundary voxels (with any
    neighbor out of bounds) are always cleared.  The neighborhood sum is
    accumulated as 27 shifted adds, which beats a per-voxel gather by a
    wide margin on full-size grids.
    """
    if not 0 <= majority_min <= 27:
        raise ValueError("majority_min must lie in [0, 27]")
    nx, ny, nz = mask.shape
    out = np.zeros(mask.shape, dtype=bool)
    if nx < 3 or ny < 3 or nz < 3:
        return out
    m = mask.astype(np.int32)
    acc = np.zeros((nx - 2, ny - 2, nz - 2), dtype=np.int32)
    for dx in range(3):
        for dy in range(3):
            for dz in range(3):
                acc += m[dx : dx + nx - 2, dy : dy + ny - 2, dz : dz + nz - 2]
    out[1:-1, 1:-1, 1:-1] = acc > majority_min
    return out


def gaussian_kernel(sigma: float, radius_factor: float = 3.0) -> np.ndarray:
    """Symmetric 1D Gaussian taps normalized to sum 1.

    Half-width is ``ceil(radius_factor * sigma)``; a zero half-width
    degenerates to the identity kernel.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    r = math.ceil(radius_factor * sigma)
    x = np.arange(-r, r + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def _correlate1d(arr: np.ndarray, kernel: np.ndarray, axis: int) -> np.ndarray:
    """One zero-padded correlation pass along ``axis``."""
    r = len(kernel) // 2
    if r == 0:
        return arr * kernel[0]
    moved = np.moveaxis(arr, axis, -1)
    pad = [(0, 0)] * arr.ndim
    pad[-1] = (r, r)
    padded = np.pad(moved, pad)
    out = np.zeros_like(moved)
    n = moved.shape[-1]
    for i, w in enumerate(kernel):
        out += w * padded[..., i : i + n]
    return np.moveaxis(out, -1, axis)


def parzen_smooth(
    grid,
    sigmas: tuple[float, float, float],
    kernel_radius_factor: float = 3.0,
) -> np.ndarray:
    """Separable Gaussian density smoothing of the photon histogram.

    Three sequential 1D passes with per-axis kernels; boundaries are
    zero-padded because the space beyond the field of view genuinely
    contains no photons.
    """
    out = _as_counts(grid).astype(np.float64)
    for axis, sigma in enumerate(sigmas):
        out = _correlate1d(out, gaussian_kernel(sigma, kernel_radius_factor), axis)
    return out


def denoise(
    grid, cfg: DenoiseConfig, t_prev: float | None = None
) -> tuple[np.ndarray, float]:
    """Run the configured scheme; returns (mask, threshold actually used).

    ``t_prev`` feeds the moving-average mode and should be the threshold
    returned by the previous step; ``None`` marks the first step, which
    seeds the average with the current peak-fraction value.
    """
    source = _as_counts(grid)
    if cfg.scheme is Scheme.PARZEN_THRESHOLD:
        source = parzen_smooth(source, cfg.sigmas, cfg.kernel_radius_factor)
    mask, t_used = _apply_threshold(source, cfg.threshold_mode, t_prev)
    if cfg.scheme is Scheme.THRESHOLD_MAJORITY:
        mask = majority_rule(mask, cfg.majority_min)
    return mask, t_used


def _apply_threshold(
    a: np.ndarray, mode: ThresholdMode, t_prev: float | None
) -> tuple[np.ndarray, float]:
    match mode:
        case Fixed(t=t):
            return threshold_fixed(a, t), t
        case PeakFraction(alpha=alpha):
            return threshold_peak_fraction(a, alpha)
        case MovingAverage(alpha=alpha, beta=beta):
            if t_prev is None:
                peak = float(a.max()) if a.size else 0.0
                t_prev = alpha * peak
            return threshold_moving_average(a, alpha, beta, t_prev)
    raise TypeError(f"unknown threshold mode {mode!r}")
