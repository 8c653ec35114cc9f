"""Mirror plane estimation from masked point clouds.

The plane is recovered by principal component analysis: the normal is the
eigenvector of the masked points' covariance with the smallest eigenvalue,
and the plane passes through their centroid.  The normal sign is fixed to
face the observing camera (the frame origin for camera-frame clouds, +z for
world-frame clouds) so downstream symmetric losses see a stable orientation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateCloud, ShapeError, TooFewPoints
from .geometry import FrameTag, MirrorPlane, WORLD

# Eigenvalue gates, both relative to the largest eigenvalue: the cloud must
# spread in two directions, and the two smallest eigenvalues must not tie
# (an isotropic cloud has no preferred normal).
_SPREAD_RTOL = 1e-12
_TIE_RTOL = 1e-9

MIN_POINTS = 3


@dataclass(frozen=True)
class MaskedCloud:
    """Points (N, 3) with a boolean selection mask and a frame tag."""

    points: np.ndarray
    mask: np.ndarray
    frame: FrameTag = WORLD

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        msk = np.asarray(self.mask, dtype=bool).reshape(-1)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ShapeError(f"points must be (N, 3), got {pts.shape}")
        if len(msk) != len(pts):
            raise ShapeError(
                f"mask length {len(msk)} does not match {len(pts)} points")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "mask", msk)

    def selected(self) -> np.ndarray:
        return self.points[self.mask]


def _fix_sign(normal: np.ndarray, centroid: np.ndarray, frame: FrameTag) -> np.ndarray:
    if frame.kind == "camera":
        # Face the camera origin: n . (0 - centroid) > 0.
        facing = -float(normal @ centroid)
    else:
        facing = float(normal[2])
    if facing < 0:
        return -normal
    if facing > 0:
        return normal
    # Orientation undefined (plane through the reference); pick the first
    # nonzero component positive for determinism.
    for v in normal:
        if v != 0:
            return normal if v > 0 else -normal
    return normal


def estimate_plane(cloud: MaskedCloud) -> tuple[MirrorPlane, float]:
    """Fit a plane to the masked points.

    Returns the plane and the RMS point-to-plane residual of the masked
    points.  Raises TooFewPoints for fewer than three masked points and
    DegenerateCloud when the covariance spectrum does not single out a
    normal direction (collinear points, or an isotropic tie between the two
    smallest eigenvalues).
    """
    pts = cloud.selected()
    if len(pts) < MIN_POINTS:
        raise TooFewPoints(
            f"plane fit needs >= {MIN_POINTS} masked points, got {len(pts)}")
    centroid = pts.mean(axis=0)
    centered = pts - centroid
    cov = centered.T @ centered / len(pts)
    evals, evecs = np.linalg.eigh(cov)  # ascending
    lo, mid, hi = (float(v) for v in evals)
    if hi <= 0.0:
        raise DegenerateCloud("all masked points coincide")
    if mid <= _SPREAD_RTOL * hi:
        raise DegenerateCloud(
            "masked points are collinear; the plane is not unique")
    if (mid - lo) <= _TIE_RTOL * hi:
        raise DegenerateCloud(
            "smallest covariance eigenvalues tie; the normal is ambiguous")
    normal = _fix_sign(evecs[:, 0], centroid, cloud.frame)
    plane = MirrorPlane(normal, centroid, cloud.frame)
    rms = float(np.sqrt(np.mean(plane.signed_distance(pts) ** 2)))
    return plane, rms


def plane_residual(plane: MirrorPlane, cloud: MaskedCloud) -> float:
    """RMS point-to-plane distance of the masked points."""
    pts = cloud.selected()
    if len(pts) == 0:
        raise TooFewPoints("no masked points to evaluate")
    return float(np.sqrt(np.mean(plane.signed_distance(pts) ** 2)))
