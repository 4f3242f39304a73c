"""Constant-velocity Kalman filtering for target centroids and boxes.

State is [position, velocity] per axis with discrete white-noise
acceleration driving the velocity.  The transition and process-noise
matrices have a 2x2 block structure, so predict and update are written
against the d-dimensional blocks directly rather than materializing the
full 2d x 2d matrices.

Two usages share this module: one 3D filter per track centroid, and a
bank of six independent scalar filters for the faces of a bounding box.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularInnovationError
from .labeling import BoundingBox

_COND_LIMIT = 1e12


@dataclass(frozen=True)
class KalmanParams:
    """Noise intensities and initial uncertainty.

    q scales the white-noise acceleration spectral density, r the
    per-axis measurement variance; p0_* set the diagonal of the initial
    covariance (velocity is unobserved at birth, hence the larger
    default).
    """

    q: float = 0.01
    r: float = 0.1
    p0_pos: float = 1.0
    p0_vel: float = 10.0

    def __post_init__(self) -> None:
        if self.q < 0 or self.r < 0:
            raise ValueError("noise intensities must be nonnegative")
        if self.p0_pos <= 0 or self.p0_vel <= 0:
            raise ValueError("initial variances must be positive")


@dataclass(frozen=True)
class KalmanState:
    """Filter state: x stacks position then velocity, P is 2d x 2d."""

    x: np.ndarray
    P: np.ndarray
    params: KalmanParams

    @property
    def dim(self) -> int:
        return len(self.x) // 2

    @property
    def position(self) -> np.ndarray:
        return self.x[: self.dim]

    @property
    def velocity(self) -> np.ndarray:
        return self.x[self.dim :]


def kf_init(centroid: np.ndarray, params: KalmanParams) -> KalmanState:
    """Start a filter at a measured position with zero velocity."""
    pos = np.asarray(centroid, dtype=np.float64).ravel()
    d = len(pos)
    x = np.concatenate([pos, np.zeros(d)])
    P = np.diag([params.p0_pos] * d + [params.p0_vel] * d).astype(np.float64)
    return KalmanState(x=x, P=P, params=params)


def kf_predict(state: KalmanState, dt: float = 1.0) -> tuple[np.ndarray, KalmanState]:
    """Advance one step; returns (predicted position, predicted state).

    With F = [[I, dt I], [0, I]] and the white-noise-acceleration
    process covariance, F P F' + Q expands blockwise to the expressions
    below; this sidesteps building F at all.
    """
    if dt < 1.0:
        raise ValueError("dt must be at least one frame-group period")
    d = state.dim
    q = state.params.q
    x = state.x.copy()
    x[:d] += dt * state.x[d:]

    Ppp = state.P[:d, :d]
    Ppv = state.P[:d, d:]
    Pvp = state.P[d:, :d]
    Pvv = state.P[d:, d:]
    eye = np.eye(d)
    P = np.empty_like(state.P)
    P[:d, :d] = Ppp + dt * (Ppv + Pvp) + dt**2 * Pvv + q * dt**4 / 4.0 * eye
    P[:d, d:] = Ppv + dt * Pvv + q * dt**3 / 2.0 * eye
    P[d:, :d] = P[:d, d:].T
    P[d:, d:] = Pvv + q * dt**2 * eye
    new = KalmanState(x=x, P=P, params=state.params)
    return x[:d], new


def kf_update(state: KalmanState, z: np.ndarray) -> KalmanState:
    """Fold a position measurement into a predicted state.

    The innovation covariance S = Ppp + r I must stay well conditioned;
    a blown-up S means the filter diverged and the track should die
    rather than absorb garbage.
    """
    z = np.asarray(z, dtype=np.float64).ravel()
    d = state.dim
    if len(z) != d:
        raise ValueError(f"measurement dim {len(z)} != filter dim {d}")
    S = state.P[:d, :d] + state.params.r * np.eye(d)
    cond = np.linalg.cond(S)
    if not np.isfinite(cond) or cond > _COND_LIMIT:
        raise SingularInnovationError(f"innovation covariance condition {cond:.3g}")
    # K = P H' S^-1 with H = [I 0]; solve against S' instead of inverting
    K = np.linalg.solve(S.T, state.P[:, :d].T).T
    x = state.x + K @ (z - state.x[:d])
    P = state.P - K @ state.P[:d, :]
    P = 0.5 * (P + P.T)
    return KalmanState(x=x, P=P, params=state.params)


def centroid_gate(p: np.ndarray, q: np.ndarray, radius: float) -> bool:
    """True when the points sit within ``radius`` of each other
    (boundary inclusive)."""
    if radius <= 0:
        raise ValueError("gate radius must be positive")
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError("gate operands must share a dimension")
    return bool(np.linalg.norm(p - q) <= radius)


def bbox_kf_init(bbox: BoundingBox, params: KalmanParams) -> list[KalmanState]:
    """One scalar filter per box face, ordered min xyz then max xyz."""
    return [
        kf_init(np.array([float(v)]), params) for v in (*bbox.min, *bbox.max)
    ]


def bbox_kf_predict(
    filters: list[KalmanState], dt: float = 1.0
) -> tuple[np.ndarray, list[KalmanState]]:
    """Advance all six face filters; returns (predicted faces, states)."""
    preds = np.empty(len(filters))
    advanced = []
    for i, f in enumerate(filters):
        pos, nf = kf_predict(f, dt)
        preds[i] = pos[0]
        advanced.append(nf)
    return preds, advanced


def bbox_kf_update(filters: list[KalmanState], bbox: BoundingBox) -> list[KalmanState]:
    """Measure all six faces from an observed box."""
    faces = (*bbox.min, *bbox.max)
    return [kf_update(f, np.array([float(v)])) for f, v in zip(filters, faces)]
