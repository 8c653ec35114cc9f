"""Procedural mirror scenes with exact ground truth.

A scene is a handful of primitive surfaces (boxes, spheres, walls) sampled
into a labeled point cloud, a rectangular mirror, and a camera.  Everything
downstream needs exact ground truth, so the generator produces:

* a world-frame cloud with per-point visibility labels,
* the mirror plane and the exactly reflected virtual camera,
* the mirror mask of the real view,
* per-view ground-truth pointmap grids.

Visibility is v1-simple: frustum plus the mirror-rectangle test.  A point
is seen directly unless the segment from the camera crosses the mirror
rectangle; it is seen via the mirror when its reflected image lies in the
frustum and that segment crosses the rectangle.  There is no inter-object
occlusion, and points behind the mirror plane are excluded at generation
time.  The mask is the rasterized mirror region minus pixels covered by
nearer direct geometry, which keeps every masked pixel's ground-truth depth
exactly on the plane.

Sampling is stratified with jitter, fully determined by the scene seed.
One scene unit is one metre; the default evaluation threshold 0.01 is 1 cm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import fileio
from .errors import ConfigError, ParseError, PlacementFailure
from .geometry import (
    WORLD,
    CameraPose,
    ImageGrid,
    Intrinsics,
    MirrorPlane,
    look_at,
    make_reflection,
    plane_to_camera,
    project_points,
    reflect_points,
    unit,
    virtual_camera,
)

LABEL_NEITHER = 0
LABEL_DIRECT = 1
LABEL_MIRROR = 2
LABEL_BOTH = 3
LABEL_SURFACE = 4  # a sample of the mirror surface itself

_PLACEMENT_ATTEMPTS = 1000
_EDGE_MARGIN = 3.0  # px margin required around the projected mirror


def _plane_axes(normal: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = unit(normal)
    ref = np.array([0.0, 0.0, 1.0]) if abs(n[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    u = unit(np.cross(ref, n))
    return u, np.cross(n, u)


# ---------------------------------------------------------------------------
# Scene description
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Box:
    """Axis-aligned box sampled on all six faces. ``size`` holds full edge lengths."""

    center: tuple[float, float, float]
    size: tuple[float, float, float]
    density: float  # samples per unit area

    def __post_init__(self):
        if self.density <= 0 or min(self.size) <= 0:
            raise ConfigError("box needs positive size and density")


@dataclass(frozen=True)
class Sphere:
    center: tuple[float, float, float]
    radius: float
    density: float

    def __post_init__(self):
        if self.density <= 0 or self.radius <= 0:
            raise ConfigError("sphere needs positive radius and density")


@dataclass(frozen=True)
class Wall:
    """A rectangle given by center, normal and half-extents; in-plane axes
    are derived deterministically from the normal."""

    center: tuple[float, float, float]
    normal: tuple[float, float, float]
    extent_u: float
    extent_v: float
    density: float

    def __post_init__(self):
        if self.density <= 0 or self.extent_u <= 0 or self.extent_v <= 0:
            raise ConfigError("wall needs positive extents and density")


@dataclass(frozen=True)
class MirrorRect:
    """The mirror: a rectangle with explicit in-plane axes and half-extents."""

    center: tuple[float, float, float]
    axis_u: tuple[float, float, float]
    axis_v: tuple[float, float, float]
    extent_u: float
    extent_v: float
    density: float = 1200.0

    def __post_init__(self):
        if self.extent_u <= 0 or self.extent_v <= 0 or self.density <= 0:
            raise ConfigError("mirror needs positive extents and density")
        u = np.asarray(self.axis_u, dtype=float)
        v = np.asarray(self.axis_v, dtype=float)
        u = unit(u)
        v = v - (v @ u) * u
        if np.linalg.norm(v) < 1e-9:
            raise ConfigError("mirror axes are parallel")
        v = unit(v)
        object.__setattr__(self, "axis_u", tuple(float(x) for x in u))
        object.__setattr__(self, "axis_v", tuple(float(x) for x in v))

    @property
    def normal(self) -> np.ndarray:
        return np.cross(np.asarray(self.axis_u), np.asarray(self.axis_v))

    def corners(self) -> np.ndarray:
        c = np.asarray(self.center, dtype=float)
        u = np.asarray(self.axis_u) * self.extent_u
        v = np.asarray(self.axis_v) * self.extent_v
        return np.array([c + u + v, c + u - v, c - u + v, c - u - v])

    def plane(self) -> MirrorPlane:
        return MirrorPlane(self.normal, np.asarray(self.center, dtype=float), WORLD)


Primitive = Box | Sphere | Wall


@dataclass(frozen=True)
class SceneSpec:
    """Everything needed to generate a scene deterministically."""

    seed: int
    mirror: MirrorRect
    primitives: tuple[Primitive, ...] = ()
    intrinsics: Intrinsics = Intrinsics(70.0, 70.0, 32.0, 24.0, 64, 48)
    camera: CameraPose | None = None  # None: place automatically

    def __post_init__(self):
        if not self.intrinsics.centered:
            raise ConfigError("scene cameras must have cx on the image midline")
        object.__setattr__(self, "primitives", tuple(self.primitives))


# ---------------------------------------------------------------------------
# Surface sampling (stratified, jittered)
# ---------------------------------------------------------------------------

def _sample_rect(center, axis_u, axis_v, eu, ev, density, rng) -> np.ndarray:
    nu = max(1, math.ceil(2.0 * eu * math.sqrt(density)))
    nv = max(1, math.ceil(2.0 * ev * math.sqrt(density)))
    iu, iv = np.meshgrid(np.arange(nu), np.arange(nv), indexing="ij")
    fu = (iu.ravel() + rng.random(nu * nv)) / nu * 2.0 * eu - eu
    fv = (iv.ravel() + rng.random(nu * nv)) / nv * 2.0 * ev - ev
    c = np.asarray(center, dtype=float)
    return c + np.outer(fu, np.asarray(axis_u)) + np.outer(fv, np.asarray(axis_v))


def _sample_box(box: Box, rng) -> np.ndarray:
    c = np.asarray(box.center, dtype=float)
    sx, sy, sz = (s / 2.0 for s in box.size)
    ex = np.array([1.0, 0, 0])
    ey = np.array([0, 1.0, 0])
    ez = np.array([0, 0, 1.0])
    faces = [
        (c + sx * ex, ey, ez, sy, sz), (c - sx * ex, ey, ez, sy, sz),
        (c + sy * ey, ex, ez, sx, sz), (c - sy * ey, ex, ez, sx, sz),
        (c + sz * ez, ex, ey, sx, sy), (c - sz * ez, ex, ey, sx, sy),
    ]
    return np.vstack([
        _sample_rect(fc, au, av, eu, ev, box.density, rng)
        for fc, au, av, eu, ev in faces])


def _sample_sphere(sphere: Sphere, rng) -> np.ndarray:
    area = 4.0 * math.pi * sphere.radius ** 2
    n_target = max(1, math.ceil(area * sphere.density))
    n_theta = max(1, round(math.sqrt(n_target / 2.0)))
    n_phi = max(1, 2 * n_theta)
    it, ip = np.meshgrid(np.arange(n_theta), np.arange(n_phi), indexing="ij")
    ct = (it.ravel() + rng.random(it.size)) / n_theta * 2.0 - 1.0
    ph = (ip.ravel() + rng.random(ip.size)) / n_phi * 2.0 * math.pi
    st = np.sqrt(np.clip(1.0 - ct ** 2, 0.0, 1.0))
    xyz = np.stack([st * np.cos(ph), st * np.sin(ph), ct], axis=1)
    return np.asarray(sphere.center, dtype=float) + sphere.radius * xyz


def _sample_primitive(prim: Primitive, rng) -> np.ndarray:
    if isinstance(prim, Box):
        return _sample_box(prim, rng)
    if isinstance(prim, Sphere):
        return _sample_sphere(prim, rng)
    if isinstance(prim, Wall):
        u, v = _plane_axes(np.asarray(prim.normal, dtype=float))
        return _sample_rect(prim.center, u, v, prim.extent_u, prim.extent_v,
                            prim.density, rng)
    raise ConfigError(f"unknown primitive type {type(prim).__name__}")


# ---------------------------------------------------------------------------
# Ground truth
# ---------------------------------------------------------------------------

@dataclass
class ViewGrid:
    """Per-pixel ground truth of one view: world points, depths, validity."""

    points: np.ndarray  # (H, W, 3) world frame
    depth: np.ndarray   # (H, W)
    valid: np.ndarray   # (H, W) bool


@dataclass
class SceneGroundTruth:
    spec: SceneSpec
    points: np.ndarray        # (N, 3) world frame
    labels: np.ndarray        # (N,) uint8, LABEL_* constants
    camera: CameraPose
    virtual_camera: CameraPose
    plane: MirrorPlane        # world frame, normal facing the camera
    mask: ImageGrid           # uint8, 255 inside the visible mirror region
    intrinsics: Intrinsics
    _grids: dict | None = field(default=None, repr=False, compare=False)

    def mask_bool(self) -> np.ndarray:
        return self.mask.data > 127

    def view_grids(self) -> dict[str, ViewGrid]:
        """Ground-truth pointmap grids for the real and the (flipped) virtual view."""
        if self._grids is None:
            self._grids = _build_grids(self)
        return self._grids


def _rect_hit(rect: MirrorRect, pts: np.ndarray) -> np.ndarray:
    rel = pts - np.asarray(rect.center, dtype=float)
    return ((np.abs(rel @ np.asarray(rect.axis_u)) <= rect.extent_u + 1e-12)
            & (np.abs(rel @ np.asarray(rect.axis_v)) <= rect.extent_v + 1e-12))


def _segment_crosses_rect(origin: np.ndarray, targets: np.ndarray,
                          rect: MirrorRect) -> np.ndarray:
    """True where the open segment origin->target crosses the mirror rectangle."""
    n = unit(rect.normal)
    c = np.asarray(rect.center, dtype=float)
    denom = (targets - origin) @ n
    num = float((c - origin) @ n)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(np.abs(denom) > 1e-15, num / denom, np.inf)
    inside = (s > 1e-9) & (s < 1.0 - 1e-9)
    crossings = origin + s[:, None] * (targets - origin)
    return inside & _rect_hit(rect, crossings)


def _first_per_pixel(pix: np.ndarray, depth: np.ndarray) -> np.ndarray:
    """Indices of the nearest entry per pixel id (stable, lowest index on ties)."""
    order = np.lexsort((depth, pix))
    _, first = np.unique(pix[order], return_index=True)
    return order[first]


def generate(spec: SceneSpec) -> SceneGroundTruth:
    """Sample the scene and derive exact ground truth. Deterministic in the seed."""
    rng = np.random.default_rng(np.random.SeedSequence([int(spec.seed), 0]))
    K = spec.intrinsics
    mirror = spec.mirror

    surface = _sample_rect(mirror.center, mirror.axis_u, mirror.axis_v,
                           mirror.extent_u, mirror.extent_v, mirror.density, rng)
    prim_pts = [_sample_primitive(p, rng) for p in spec.primitives]
    scene_pts = np.vstack(prim_pts) if prim_pts else np.zeros((0, 3))

    camera = spec.camera if spec.camera is not None else _auto_place(
        mirror, K, rng)
    plane = mirror.plane().oriented_toward(camera.center())
    if abs(float(plane.signed_distance(camera.center()))) < 1e-9:
        raise PlacementFailure("camera sits on the mirror plane")

    # No geometry behind the mirror: the virtual camera cannot see it and
    # the real camera would see the mirror instead.
    keep = plane.signed_distance(scene_pts) >= -1e-9 if len(scene_pts) else \
        np.zeros(0, dtype=bool)
    scene_pts = scene_pts[keep]

    points = np.vstack([surface, scene_pts])
    labels = np.full(len(points), LABEL_NEITHER, dtype=np.uint8)
    labels[:len(surface)] = LABEL_SURFACE

    cam_frame_plane = plane_to_camera(plane, camera, "real:0")
    vcam = virtual_camera(camera, make_reflection(cam_frame_plane))

    gt = SceneGroundTruth(
        spec=spec, points=points, labels=labels, camera=camera,
        virtual_camera=vcam, plane=plane,
        mask=ImageGrid(np.zeros((K.height, K.width), dtype=np.uint8)),
        intrinsics=K)
    _label_and_mask(gt)
    return gt


def _auto_place(mirror: MirrorRect, K: Intrinsics, rng) -> CameraPose:
    n = unit(mirror.normal)
    u = np.asarray(mirror.axis_u)
    v = np.asarray(mirror.axis_v)
    c = np.asarray(mirror.center, dtype=float)
    corners = mirror.corners()
    for _ in range(_PLACEMENT_ATTEMPTS):
        a, b = rng.uniform(-0.5, 0.5, size=2)
        dist = rng.uniform(2.8, 3.8)
        position = c + dist * unit(n + a * u + b * v)
        target = c + rng.uniform(-0.15, 0.15) * u + rng.uniform(-0.15, 0.15) * v
        try:
            cam = look_at(position, target)
        except ValueError:
            continue
        uv, _, in_front = project_points(K, cam, corners)
        if not in_front.all():
            continue
        if (uv[:, 0] > _EDGE_MARGIN).all() and (uv[:, 0] < K.width - _EDGE_MARGIN).all() \
                and (uv[:, 1] > _EDGE_MARGIN).all() \
                and (uv[:, 1] < K.height - _EDGE_MARGIN).all():
            return cam
    raise PlacementFailure(
        f"no valid camera pose in {_PLACEMENT_ATTEMPTS} attempts")


def _label_and_mask(gt: SceneGroundTruth) -> None:
    """Fill in visibility labels, the visible-mirror mask, and view grids."""
    K = gt.intrinsics
    cam = gt.camera
    center = cam.center()
    mirror = gt.spec.mirror
    pts = gt.points
    is_surface = gt.labels == LABEL_SURFACE

    uv, depth, in_front = project_points(K, cam, pts)
    in_bounds = ((uv[:, 0] >= 0) & (uv[:, 0] < K.width)
                 & (uv[:, 1] >= 0) & (uv[:, 1] < K.height))
    blocked = _segment_crosses_rect(center, pts, mirror)
    blocked[is_surface] = False
    direct = in_front & in_bounds & ~blocked

    mirrored = reflect_points(gt.plane, pts)
    uv_m, depth_m, in_front_m = project_points(K, cam, mirrored)
    in_bounds_m = ((uv_m[:, 0] >= 0) & (uv_m[:, 0] < K.width)
                   & (uv_m[:, 1] >= 0) & (uv_m[:, 1] < K.height))
    via_mirror = (in_front_m & in_bounds_m
                  & _segment_crosses_rect(center, mirrored, mirror))
    via_mirror[is_surface] = False

    labels = gt.labels
    plain = ~is_surface
    labels[plain & direct & via_mirror] = LABEL_BOTH
    labels[plain & direct & ~via_mirror] = LABEL_DIRECT
    labels[plain & ~direct & via_mirror] = LABEL_MIRROR
    labels[plain & ~direct & ~via_mirror] = LABEL_NEITHER

    # Real-view raster: nearest surface wins each pixel; a pixel belongs to
    # the mask exactly when that winner is a mirror-surface sample.
    real_grid = ViewGrid(np.zeros((K.height, K.width, 3)),
                         np.zeros((K.height, K.width)),
                         np.zeros((K.height, K.width), dtype=bool))
    cand = np.flatnonzero(direct | is_surface)
    mask8 = np.zeros((K.height, K.width), dtype=np.uint8)
    if len(cand):
        cols = np.floor(uv[cand, 0]).astype(int)
        rows = np.floor(uv[cand, 1]).astype(int)
        cols = np.clip(cols, 0, K.width - 1)
        rows = np.clip(rows, 0, K.height - 1)
        pix = rows * K.width + cols
        win = cand[_first_per_pixel(pix, depth[cand])]
        wr = np.floor(uv[win, 1]).astype(int)
        wc = np.floor(uv[win, 0]).astype(int)
        real_grid.points[wr, wc] = pts[win]
        real_grid.depth[wr, wc] = depth[win]
        real_grid.valid[wr, wc] = True
        mask8[wr[is_surface[win]], wc[is_surface[win]]] = 255

    # Virtual-view raster over flipped-view pixels; by the flip equivalence
    # those coincide with the real-image pixels of the reflected points.
    vir_grid = ViewGrid(np.zeros((K.height, K.width, 3)),
                        np.zeros((K.height, K.width)),
                        np.zeros((K.height, K.width), dtype=bool))
    vis = np.flatnonzero(via_mirror)
    if len(vis):
        vdepth = gt.virtual_camera.apply(pts[vis])[:, 2]
        cols = np.clip(np.floor(uv_m[vis, 0]).astype(int), 0, K.width - 1)
        rows = np.clip(np.floor(uv_m[vis, 1]).astype(int), 0, K.height - 1)
        pix = rows * K.width + cols
        sel = _first_per_pixel(pix, vdepth)
        win = vis[sel]
        wr, wc = rows[sel], cols[sel]
        vir_grid.points[wr, wc] = pts[win]
        vir_grid.depth[wr, wc] = vdepth[sel]
        vir_grid.valid[wr, wc] = True

    gt.mask = ImageGrid(mask8)
    gt._grids = {"real": real_grid, "virtual": vir_grid}


def _build_grids(gt: SceneGroundTruth) -> dict[str, ViewGrid]:
    _label_and_mask(gt)
    assert gt._grids is not None
    return gt._grids


# ---------------------------------------------------------------------------
# Observations
# ---------------------------------------------------------------------------

def render_observations(gt: SceneGroundTruth, noise_px: float = 0.0,
                        seed: int = 0) -> tuple[np.ndarray, ImageGrid]:
    """Pixel correspondences for doubly visible points, plus the mirror mask.

    Each point labeled as seen both directly and via the mirror yields one
    row (ua, va, ub, vb, weight): its direct pixel in the real view and its
    pixel in the horizontally flipped virtual view (which equals the real
    image location of its reflection).  Gaussian pixel noise of std-dev
    ``noise_px`` is added to all four coordinates.
    """
    if noise_px < 0:
        raise ConfigError("noise_px must be >= 0")
    K = gt.intrinsics
    both = np.flatnonzero(gt.labels == LABEL_BOTH)
    uv, _, _ = project_points(K, gt.camera, gt.points[both])
    uv_m, _, _ = project_points(K, gt.camera,
                                reflect_points(gt.plane, gt.points[both]))
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 1]))
    noise = noise_px * rng.normal(size=(len(both), 4))
    corrs = np.column_stack([
        uv[:, 0] + noise[:, 0], uv[:, 1] + noise[:, 1],
        uv_m[:, 0] + noise[:, 2], uv_m[:, 1] + noise[:, 3],
        np.ones(len(both)),
    ])
    return corrs, gt.mask


# ---------------------------------------------------------------------------
# Scene directory import/export
# ---------------------------------------------------------------------------

def _primitive_to_dict(p: Primitive) -> dict:
    if isinstance(p, Box):
        return {"type": "box", "center": list(p.center), "size": list(p.size),
                "density": p.density}
    if isinstance(p, Sphere):
        return {"type": "sphere", "center": list(p.center), "radius": p.radius,
                "density": p.density}
    if isinstance(p, Wall):
        return {"type": "wall", "center": list(p.center),
                "normal": list(p.normal), "extent_u": p.extent_u,
                "extent_v": p.extent_v, "density": p.density}
    raise ConfigError(f"unknown primitive type {type(p).__name__}")


def _primitive_from_dict(d: dict) -> Primitive:
    kind = d.get("type")
    if kind == "box":
        return Box(tuple(d["center"]), tuple(d["size"]), float(d["density"]))
    if kind == "sphere":
        return Sphere(tuple(d["center"]), float(d["radius"]), float(d["density"]))
    if kind == "wall":
        return Wall(tuple(d["center"]), tuple(d["normal"]),
                    float(d["extent_u"]), float(d["extent_v"]),
                    float(d["density"]))
    raise ParseError(f"unknown primitive type {kind!r}")


def export_scene(gt: SceneGroundTruth, directory: str | Path) -> None:
    """Write scene.json, cloud.ply and mask.pgm. Deterministic and lossless."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    m = gt.spec.mirror
    fileio.write_json(directory / "scene.json", {
        "format": "mirrorstereo-scene/1",
        "seed": int(gt.spec.seed),
        "intrinsics": fileio.intrinsics_to_dict(gt.intrinsics),
        "camera": fileio.pose_to_dict(gt.camera),
        "virtual_camera": fileio.pose_to_dict(gt.virtual_camera),
        "plane": fileio.plane_to_dict(gt.plane),
        "mirror": {"center": list(m.center), "axis_u": list(m.axis_u),
                   "axis_v": list(m.axis_v), "extent_u": m.extent_u,
                   "extent_v": m.extent_v, "density": m.density},
        "primitives": [_primitive_to_dict(p) for p in gt.spec.primitives],
        "auto_camera": gt.spec.camera is None,
    })
    fileio.write_ply(directory / "cloud.ply", gt.points,
                     {"label": gt.labels.astype(np.int64)})
    fileio.write_pgm(directory / "mask.pgm", gt.mask.data)


def import_scene(directory: str | Path) -> SceneGroundTruth:
    """Read back a scene directory written by :func:`export_scene`."""
    directory = Path(directory)
    meta = fileio.read_json(directory / "scene.json")
    if meta.get("format") != "mirrorstereo-scene/1":
        raise ParseError(f"unknown scene format {meta.get('format')!r}",
                         str(directory / "scene.json"))
    m = meta["mirror"]
    mirror = MirrorRect(tuple(m["center"]), tuple(m["axis_u"]),
                        tuple(m["axis_v"]), float(m["extent_u"]),
                        float(m["extent_v"]), float(m["density"]))
    camera = fileio.pose_from_dict(meta["camera"])
    spec = SceneSpec(
        seed=int(meta["seed"]), mirror=mirror,
        primitives=tuple(_primitive_from_dict(p) for p in meta["primitives"]),
        intrinsics=fileio.intrinsics_from_dict(meta["intrinsics"]),
        camera=None if meta.get("auto_camera") else camera)
    points, extras = fileio.read_ply(directory / "cloud.ply")
    if "label" not in extras:
        raise ParseError("cloud.ply lacks a label column",
                         str(directory / "cloud.ply"))
    mask = ImageGrid(fileio.read_pgm(directory / "mask.pgm"))
    return SceneGroundTruth(
        spec=spec, points=points,
        labels=extras["label"].astype(np.uint8),
        camera=camera,
        virtual_camera=fileio.pose_from_dict(meta["virtual_camera"]),
        plane=fileio.plane_from_dict(meta["plane"]),
        mask=mask, intrinsics=spec.intrinsics)


def scenes_equal(a: SceneGroundTruth, b: SceneGroundTruth) -> bool:
    """Bit-exact equality of the persisted ground-truth fields."""
    return (np.array_equal(a.points, b.points)
            and np.array_equal(a.labels, b.labels)
            and np.array_equal(a.mask.data, b.mask.data)
            and np.array_equal(a.camera.quaternion, b.camera.quaternion)
            and np.array_equal(a.camera.translation, b.camera.translation)
            and np.array_equal(a.virtual_camera.quaternion,
                               b.virtual_camera.quaternion)
            and np.array_equal(a.virtual_camera.translation,
                               b.virtual_camera.translation)
            and np.array_equal(a.plane.normal, b.plane.normal)
            and np.array_equal(a.plane.point, b.plane.point))


# ---------------------------------------------------------------------------
# Benchmark presets
# ---------------------------------------------------------------------------

def bench_spec(seed: int) -> SceneSpec:
    """One benchmark scene: a mirror, a floor, and a few objects in front."""
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 7]))
    eu = rng.uniform(0.55, 0.8)
    ev = rng.uniform(0.45, 0.62)
    cy = rng.uniform(-0.1, 0.1)
    cz = rng.uniform(-0.15, 0.15)
    mirror = MirrorRect(center=(0.0, cy, cz), axis_u=(0.0, 0.0, 1.0),
                        axis_v=(0.0, -1.0, 0.0), extent_u=eu, extent_v=ev)
    prims: list[Primitive] = [
        Wall(center=(1.7, 1.05, 0.0), normal=(0.0, -1.0, 0.0),
             extent_u=1.5, extent_v=1.5, density=90.0),
    ]
    n_boxes = 1 + int(rng.integers(0, 2))
    for _ in range(n_boxes):
        size = rng.uniform(0.3, 0.55, size=3)
        c = np.array([rng.uniform(1.0, 2.1), rng.uniform(0.1, 0.6),
                      rng.uniform(-0.7, 0.7)])
        prims.append(Box(tuple(c), tuple(size), density=rng.uniform(300, 420)))
    r = rng.uniform(0.2, 0.33)
    c = np.array([rng.uniform(1.1, 2.0), rng.uniform(-0.2, 0.4),
                  rng.uniform(-0.8, 0.8)])
    prims.append(Sphere(tuple(c), float(r), density=float(rng.uniform(320, 420))))
    return SceneSpec(seed=seed, mirror=mirror, primitives=tuple(prims))


def bench16_specs() -> list[SceneSpec]:
    """The 16-scene benchmark: seeds 0..15."""
    return [bench_spec(i) for i in range(16)]
