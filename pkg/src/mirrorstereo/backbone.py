"""Stereo backbone substitutes: midpoint triangulation and a simulator.

A pair prediction mimics what a two-view pointmap regressor would output
for an edge (view A, view B): one pointmap per view, both expressed in view
A's camera frame, with per-pixel confidences.  Two substitutes are offered:

* :func:`triangulate_pair` builds predictions from pixel correspondences
  between the real view and the flipped virtual view by midpoint
  triangulation against the mirror-induced virtual camera.
* :func:`simulate_backbone` perturbs ground-truth pointmaps with a
  three-component noise model (per-point jitter, a rigid pair offset, log
  scale jitter), which is exactly the family of unknowns the global
  alignment has to undo.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from . import fileio
from .errors import (
    ConfigError,
    EmptyInput,
    IllConditioned,
    ShapeError,
    UnknownView,
)
from .geometry import (
    CameraPose,
    FrameTag,
    Intrinsics,
    ReflectionTransform,
    quat_from_axis_angle,
    quat_rotate,
    unit,
    virtual_camera,
)
from .pairgraph import Edge, ViewId

if TYPE_CHECKING:  # pragma: no cover
    from .scenegen import SceneGroundTruth

# Confidence falls off with residual / noise magnitude on this length scale
# (scene units; 0.01 = 1 cm at the 1 unit = 1 m convention).
CONFIDENCE_SCALE = 0.01

_MIN_RAY_ANGLE = 1e-6  # radians


@dataclass(frozen=True)
class Correspondence:
    """A pixel match between two views, in continuous image coordinates."""

    pixel_a: tuple[float, float]
    pixel_b: tuple[float, float]
    weight: float = 1.0

    def __post_init__(self):
        if self.weight < 0:
            raise ConfigError("correspondence weight must be non-negative")


@dataclass
class PointMap:
    """Per-pixel 3-d points with confidences and a validity mask."""

    points: np.ndarray      # (H, W, 3) float64
    confidence: np.ndarray  # (H, W) float64, zero where invalid
    valid: np.ndarray       # (H, W) bool
    frame: FrameTag

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        conf = np.asarray(self.confidence, dtype=float)
        val = np.asarray(self.valid, dtype=bool)
        if pts.ndim != 3 or pts.shape[2] != 3:
            raise ShapeError(f"points must be (H, W, 3), got {pts.shape}")
        if conf.shape != pts.shape[:2] or val.shape != pts.shape[:2]:
            raise ShapeError("confidence/valid grids must match the point grid")
        conf = np.where(val, conf, 0.0)
        self.points = pts
        self.confidence = conf
        self.valid = val

    @classmethod
    def empty(cls, height: int, width: int, frame: FrameTag) -> "PointMap":
        return cls(np.zeros((height, width, 3)), np.zeros((height, width)),
                   np.zeros((height, width), dtype=bool), frame)

    def copy(self) -> "PointMap":
        return PointMap(self.points.copy(), self.confidence.copy(),
                        self.valid.copy(), self.frame)


@dataclass
class PairPrediction:
    """Backbone output for one edge: both pointmaps in view A's camera frame."""

    edge: Edge
    pointmap_a: PointMap
    pointmap_b: PointMap


def _pixel_index(u: float, v: float, K: Intrinsics) -> tuple[int, int] | None:
    col = int(math.floor(u))
    row = int(math.floor(v))
    if 0 <= col < K.width and 0 <= row < K.height:
        return row, col
    return None


def _ray(K: Intrinsics, pose: CameraPose, u: float, v: float
         ) -> tuple[np.ndarray, np.ndarray]:
    """World-frame (origin, unit direction) of the viewing ray through (u, v)."""
    d_cam = np.array([(u - K.cx) / K.fx, (v - K.cy) / K.fy, 1.0])
    d = pose.rotation.T @ d_cam
    return pose.center(), unit(d)


def triangulate(K: Intrinsics, pose_a: CameraPose, pose_b: CameraPose,
                corr: Correspondence) -> tuple[np.ndarray, float]:
    """Midpoint triangulation of one correspondence.

    Back-projects a ray from each camera and returns the midpoint of the
    shortest segment between them, plus the segment length as a residual
    (zero for noiseless, consistent rays).  Raises IllConditioned when the
    rays are within 1e-6 rad of parallel or the camera centres coincide.
    """
    oa, da = _ray(K, pose_a, *corr.pixel_a)
    ob, db = _ray(K, pose_b, *corr.pixel_b)
    baseline = ob - oa
    if float(np.linalg.norm(baseline)) < 1e-12:
        raise IllConditioned("camera centres coincide; no baseline")
    b = float(da @ db)
    denom = 1.0 - b * b
    # sin(angle) between unit rays; guards the 2x2 solve below.
    if math.sqrt(max(denom, 0.0)) <= _MIN_RAY_ANGLE:
        raise IllConditioned("rays are (near-)parallel")
    d = float(da @ baseline)
    e = float(db @ baseline)
    ta = (d - b * e) / denom
    tb = (b * d - e) / denom
    pa = oa + ta * da
    pb = ob + tb * db
    midpoint = 0.5 * (pa + pb)
    residual = float(np.linalg.norm(pa - pb))
    return midpoint, residual


def triangulate_pair(K: Intrinsics, real: CameraPose,
                     reflect: ReflectionTransform,
                     corrs: list[Correspondence]) -> PairPrediction:
    """Predict the pair (real view, flipped virtual view) from correspondences.

    ``pixel_a`` addresses the real view, ``pixel_b`` the horizontally
    flipped virtual view, so the virtual-camera column is ``W - u_b``.
    Each correspondence contributes two triangulations:

    * the scene point, from the real ray through ``pixel_a`` and the
      virtual ray through the unflipped ``pixel_b``;
    * the mirror-surface point, from the real ray through ``pixel_b``
      (which is also a real-image pixel inside the mirror region) and the
      same virtual ray.  Those two rays meet exactly on the mirror plane,
      which is what later makes the plane recoverable from the real
      pointmap.

    Points are stored in the real camera's frame.  Confidence is
    ``exp(-residual / 0.01)``.  Correspondences that triangulate behind
    either camera or are ill-conditioned are dropped.
    """
    if not corrs:
        raise EmptyInput("no correspondences to triangulate")
    vir = virtual_camera(real, reflect)
    edge = (ViewId.real(0), ViewId.virtual(1, 0))
    frame = FrameTag.camera(str(edge[0]))
    map_a = PointMap.empty(K.height, K.width, frame)
    map_b = PointMap.empty(K.height, K.width, frame)

    def deposit(pm: PointMap, row: int, col: int, point: np.ndarray, conf: float):
        if not pm.valid[row, col] or conf > pm.confidence[row, col]:
            pm.points[row, col] = point
            pm.confidence[row, col] = conf
            pm.valid[row, col] = True

    for corr in corrs:
        ua, va = corr.pixel_a
        ub, vb = corr.pixel_b
        unflipped = (K.width - ub, vb)
        try:
            scene_pt, res_s = triangulate(
                K, real, vir, Correspondence((ua, va), unflipped, corr.weight))
            mirror_pt, res_m = triangulate(
                K, real, vir, Correspondence((ub, vb), unflipped, corr.weight))
        except IllConditioned:
            continue
        # Visibility filter: both triangulated points must sit in front of
        # the real camera (a point behind the mirror cannot be observed).
        if real.apply(scene_pt)[2] <= 0 or real.apply(mirror_pt)[2] <= 0:
            continue
        pix_a = _pixel_index(ua, va, K)
        pix_m = _pixel_index(ub, vb, K)
        pix_b = _pixel_index(ub, vb, K)
        conf_s = corr.weight * math.exp(-res_s / CONFIDENCE_SCALE)
        conf_m = corr.weight * math.exp(-res_m / CONFIDENCE_SCALE)
        scene_cam = real.apply(scene_pt)
        mirror_cam = real.apply(mirror_pt)
        if pix_a is not None:
            deposit(map_a, *pix_a, scene_cam, conf_s)
        if pix_m is not None:
            deposit(map_a, *pix_m, mirror_cam, conf_m)
        if pix_b is not None:
            deposit(map_b, *pix_b, scene_cam, conf_s)
    if not map_a.valid.any() and not map_b.valid.any():
        raise EmptyInput("all correspondences were filtered out")
    return PairPrediction(edge, map_a, map_b)


# ---------------------------------------------------------------------------
# Simulated backbone
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NoiseModel:
    """Noise applied by the simulated backbone.

    point: std-dev of iid Gaussian jitter per point coordinate (units).
    pose_deg / pose_trans: magnitude of one random rigid offset applied to
        the whole pair (degrees / units); the alignment's per-edge pose has
        to recover it.
    scale: std-dev of the log-scale jitter e^eps; recovered by the per-edge
        scale.
    """

    point: float = 0.0
    pose_deg: float = 0.0
    pose_trans: float = 0.0
    scale: float = 0.0

    def __post_init__(self):
        for name in ("point", "pose_deg", "pose_trans", "scale"):
            if getattr(self, name) < 0:
                raise ConfigError(f"noise component {name} must be >= 0")

    @classmethod
    def parse_pose(cls, text: str) -> tuple[float, float]:
        """Parse a pose-noise flag "DEG:TRANS" (also accepts ',' or '/')."""
        for sep in (":", "/", ","):
            if sep in text:
                a, b = text.split(sep, 1)
                return float(a), float(b)
        deg = float(text)
        return deg, deg / 100.0


def _edge_seed(seed: int, edge: Edge) -> np.random.Generator:
    a, b = edge
    key = [int(seed), 2, a.index, a.frame_time, b.index, b.frame_time,
           0 if a.kind == "real" else 1, 0 if b.kind == "real" else 1]
    return np.random.default_rng(np.random.SeedSequence(key))


def simulate_backbone(gt: "SceneGroundTruth", edge: Edge, noise: NoiseModel,
                      seed: int) -> PairPrediction:
    """Ground-truth pointmaps for one edge, degraded by the noise model.

    The clean pointmaps are the scene's per-pixel points for both views of
    the edge, expressed in view A's camera frame.  They are then mapped
    through one rigid offset and log-scale jitter shared by the pair, and
    each point receives iid Gaussian jitter.  Per-pixel confidence is
    ``1 / (1 + ||jitter|| / 0.01)``, so zero noise reproduces ground truth
    bit-exactly with unit confidence.  Random streams are keyed by
    (seed, edge), independent across edges.
    """
    a, b = edge
    if a.kind != "real" or b.kind != "virtual":
        raise UnknownView(f"edge ({a}, {b}) is not a real-virtual pair")
    if a.frame_time != b.frame_time or a.frame_time != 0:
        raise UnknownView("the scene is single-frame; edge must be at frame 0")
    if b.index != 1:
        raise UnknownView(f"scene has one mirror; no virtual view {b.index}")
    grids = gt.view_grids()
    rng = _edge_seed(seed, edge)

    # Shared pair perturbation. All draws happen regardless of which sigmas
    # are zero so the streams stay aligned across noise settings.
    axis_raw = rng.normal(size=3)
    angle = math.radians(noise.pose_deg) * rng.normal()
    dt = noise.pose_trans * rng.normal(size=3)
    eps = noise.scale * rng.normal()
    axis = axis_raw if np.linalg.norm(axis_raw) > 1e-12 else np.array([1.0, 0.0, 0.0])
    dq = quat_from_axis_angle(axis, angle)
    scale = math.exp(eps)

    cam = gt.camera
    out: list[PointMap] = []
    frame = FrameTag.camera(str(a))
    for key in ("real", "virtual"):
        grid = grids[key]
        H, W = grid.valid.shape
        pm = PointMap.empty(H, W, frame)
        pm.valid = grid.valid.copy()
        idx = np.argwhere(grid.valid)
        if len(idx):
            world = grid.points[grid.valid]
            cam_pts = cam.apply(world)
            moved = scale * (quat_rotate(dq, cam_pts) + dt)
            jitter = noise.point * rng.normal(size=moved.shape)
            pm.points[grid.valid] = moved + jitter
            mags = np.linalg.norm(jitter, axis=1)
            pm.confidence[grid.valid] = 1.0 / (1.0 + mags / CONFIDENCE_SCALE)
        out.append(pm)
    return PairPrediction(edge, out[0], out[1])


# ---------------------------------------------------------------------------
# On-disk form of a pair prediction
# ---------------------------------------------------------------------------

def write_prediction(directory: str | Path, pred: PairPrediction) -> None:
    """Write a pair prediction as two PLY pointmaps, confidence PGMs, and
    edge metadata."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for tag, pm in (("a", pred.pointmap_a), ("b", pred.pointmap_b)):
        rows, cols = np.nonzero(pm.valid)
        pts = pm.points[rows, cols]
        fileio.write_ply(directory / f"view_{tag}.ply", pts, {
            "row": rows.astype(np.int64),
            "col": cols.astype(np.int64),
            "confidence": pm.confidence[rows, cols],
        })
        conf8 = np.clip(np.round(pm.confidence * 255.0), 0, 255).astype(np.uint8)
        fileio.write_pgm(directory / f"conf_{tag}.pgm", conf8)
    fileio.write_json(directory / "edge.json", {
        "a": str(pred.edge[0]),
        "b": str(pred.edge[1]),
        "height": int(pred.pointmap_a.points.shape[0]),
        "width": int(pred.pointmap_a.points.shape[1]),
        "frame": str(pred.pointmap_a.frame),
    })


def read_prediction(directory: str | Path) -> PairPrediction:
    directory = Path(directory)
    meta = fileio.read_json(directory / "edge.json")
    edge = (ViewId.parse(meta["a"]), ViewId.parse(meta["b"]))
    frame = FrameTag.parse(meta["frame"])
    H, W = int(meta["height"]), int(meta["width"])
    maps = []
    for tag in ("a", "b"):
        pts, extras = fileio.read_ply(directory / f"view_{tag}.ply")
        pm = PointMap.empty(H, W, frame)
        rows = extras["row"].astype(int)
        cols = extras["col"].astype(int)
        pm.points[rows, cols] = pts
        pm.confidence[rows, cols] = extras["confidence"]
        pm.valid[rows, cols] = True
        maps.append(pm)
    return PairPrediction(edge, maps[0], maps[1])
