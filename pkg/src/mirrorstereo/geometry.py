"""Core mirror-stereo geometry: frames, cameras, planes, reflections.

Coordinate conventions used throughout the package:

* World frame: right-handed, arbitrary scene reference. Lengths are in
  abstract scene units; by convention 1 unit = 1 m.
* Camera frame: right-handed, computer-vision standard. Origin at the
  optical centre, x right, y down, z forward along the optical axis.
  A :class:`CameraPose` maps world points into this frame:
  ``x_cam = R @ x_world + t``.
* Image frame: origin at the top-left corner, u right, v down, in pixels.
  Coordinates are continuous; the pixel with integer index (i, j) has its
  centre at (i + 0.5, j + 0.5). A horizontal flip is ``u -> W - u``, which
  at pixel centres is exactly column reversal.

A mirror is a plane (unit normal ``n``, point ``p`` on the plane).
Reflecting space across it is the 4x4 Householder map
``[[I - 2 n n^T, 2 (n . p) n], [0, 1]]``.  The Householder map is improper
(det -1); composing it with ``diag(-1, 1, 1, 1)``, an x-axis flip, yields a
proper rigid motion.  Applying that proper motion to a camera gives the
virtual camera that observes the scene through the mirror, and the virtual
image is the horizontally flipped mirror content.

Planes and reflections carry a :class:`FrameTag` so that transforms are
never composed across mismatched frames.

Quaternions are stored scalar-first ``[w, x, y, z]`` and kept unit-norm.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    BehindCamera,
    FrameError,
    InvalidPlane,
    InvalidTransform,
    ShapeError,
)

# Reused constants.
_FLIP_X3 = np.diag([-1.0, 1.0, 1.0])
_FLIP_X4 = np.diag([-1.0, 1.0, 1.0, 1.0])
_MIN_DEPTH = 1e-9
_UNIT_TOL = 1e-6


def unit(v: np.ndarray) -> np.ndarray:
    """Return v / ||v||. Raises ValueError on a zero vector."""
    v = np.asarray(v, dtype=float)
    n = float(np.linalg.norm(v))
    if n == 0.0:
        raise ValueError("cannot normalize a zero vector")
    return v / n


# ---------------------------------------------------------------------------
# Quaternion helpers, scalar-first [w, x, y, z]
# ---------------------------------------------------------------------------

def quat_normalize(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    n = float(np.linalg.norm(q))
    if n < 1e-12:
        raise InvalidTransform("quaternion norm is zero")
    return q / n


def quat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hamilton product a * b."""
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def quat_conj(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array([w, -x, -y, -z])


def quat_from_axis_angle(axis: np.ndarray, angle: float) -> np.ndarray:
    axis = unit(axis)
    half = 0.5 * angle
    return np.concatenate(([math.cos(half)], math.sin(half) * axis))


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    """Rotation matrix of a unit quaternion."""
    w, x, y, z = quat_normalize(q)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def matrix_to_quat(R: np.ndarray) -> np.ndarray:
    """Unit quaternion of a rotation matrix (Shepperd's method, w >= 0)."""
    R = np.asarray(R, dtype=float)
    t = float(np.trace(R))
    if t > 0:
        s = math.sqrt(t + 1.0) * 2.0
        q = np.array([0.25 * s,
                      (R[2, 1] - R[1, 2]) / s,
                      (R[0, 2] - R[2, 0]) / s,
                      (R[1, 0] - R[0, 1]) / s])
    elif R[0, 0] > R[1, 1] and R[0, 0] > R[2, 2]:
        s = math.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2]) * 2.0
        q = np.array([(R[2, 1] - R[1, 2]) / s,
                      0.25 * s,
                      (R[0, 1] + R[1, 0]) / s,
                      (R[0, 2] + R[2, 0]) / s])
    elif R[1, 1] > R[2, 2]:
        s = math.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2]) * 2.0
        q = np.array([(R[0, 2] - R[2, 0]) / s,
                      (R[0, 1] + R[1, 0]) / s,
                      0.25 * s,
                      (R[1, 2] + R[2, 1]) / s])
    else:
        s = math.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1]) * 2.0
        q = np.array([(R[1, 0] - R[0, 1]) / s,
                      (R[0, 2] + R[2, 0]) / s,
                      (R[1, 2] + R[2, 1]) / s,
                      0.25 * s])
    if q[0] < 0:
        q = -q
    return quat_normalize(q)


def quat_rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate vector(s) v by unit quaternion q. Supports (3,) and (N, 3)."""
    return np.asarray(v, dtype=float) @ quat_to_matrix(q).T


def quat_angle_deg(qa: np.ndarray, qb: np.ndarray) -> float:
    """Geodesic angle in degrees between two rotations given as quaternions."""
    d = abs(float(np.dot(quat_normalize(qa), quat_normalize(qb))))
    return math.degrees(2.0 * math.acos(min(1.0, d)))


def rotation_angle_deg(Ra: np.ndarray, Rb: np.ndarray) -> float:
    """Geodesic angle in degrees between two rotation matrices."""
    return quat_angle_deg(matrix_to_quat(Ra), matrix_to_quat(Rb))


# ---------------------------------------------------------------------------
# Frames and planes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FrameTag:
    """Identifies the coordinate frame a geometric quantity lives in.

    ``kind`` is "world" or "camera"; camera frames carry the view id they
    belong to, e.g. ``FrameTag.camera("real:0")``.
    """

    kind: str
    view: str = ""

    def __post_init__(self):
        if self.kind not in ("world", "camera"):
            raise FrameError(f"unknown frame kind {self.kind!r}")
        if self.kind == "world" and self.view:
            raise FrameError("world frame takes no view id")
        if self.kind == "camera" and not self.view:
            raise FrameError("camera frame requires a view id")

    @classmethod
    def world(cls) -> "FrameTag":
        return cls("world")

    @classmethod
    def camera(cls, view: str) -> "FrameTag":
        return cls("camera", str(view))

    def __str__(self) -> str:
        return "world" if self.kind == "world" else f"camera:{self.view}"

    @classmethod
    def parse(cls, s: str) -> "FrameTag":
        if s == "world":
            return cls.world()
        if s.startswith("camera:"):
            return cls.camera(s.split(":", 1)[1])
        raise FrameError(f"cannot parse frame tag {s!r}")


WORLD = FrameTag.world()


@dataclass(frozen=True)
class MirrorPlane:
    """A mirror plane: unit normal, a point on the plane, and its frame.

    By convention the stored normal faces the observer: when estimated from
    data the sign is fixed so that ``normal . (camera_center - point) > 0``.
    The reflection maps themselves are invariant to the sign of the normal.
    """

    normal: np.ndarray
    point: np.ndarray
    frame: FrameTag = WORLD

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float).reshape(-1)
        p = np.asarray(self.point, dtype=float).reshape(-1)
        if n.shape != (3,) or p.shape != (3,):
            raise InvalidPlane("normal and point must be 3-vectors")
        if not (np.all(np.isfinite(n)) and np.all(np.isfinite(p))):
            raise InvalidPlane("plane parameters must be finite")
        nrm = float(np.linalg.norm(n))
        if abs(nrm - 1.0) > _UNIT_TOL:
            raise InvalidPlane(f"normal must be unit length, got ||n|| = {nrm}")
        object.__setattr__(self, "normal", n / nrm)
        object.__setattr__(self, "point", p)

    def signed_distance(self, pts: np.ndarray) -> np.ndarray:
        """Signed distance(s) of point(s) to the plane, positive on the normal side."""
        pts = np.asarray(pts, dtype=float)
        return (pts - self.point) @ self.normal

    def oriented_toward(self, observer: np.ndarray) -> "MirrorPlane":
        """Return a copy whose normal points toward ``observer``."""
        if float(self.signed_distance(observer)) < 0.0:
            return MirrorPlane(-self.normal, self.point.copy(), self.frame)
        return self


def reflect_points(plane: MirrorPlane, pts: np.ndarray) -> np.ndarray:
    """Mirror image of point(s) across the plane: x - 2 (n.(x - p)) n."""
    pts = np.asarray(pts, dtype=float)
    d = plane.signed_distance(pts)
    return pts - 2.0 * np.multiply.outer(d, plane.normal)


# ---------------------------------------------------------------------------
# Cameras
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Intrinsics:
    """Pinhole intrinsics. ``centered`` means cx sits on the vertical image
    midline, which is what makes the horizontal-flip equivalence exact."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image size must be positive")

    @property
    def centered(self) -> bool:
        return abs(self.cx - 0.5 * self.width) <= 1e-9

    def matrix(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx],
                         [0.0, self.fy, self.cy],
                         [0.0, 0.0, 1.0]])


class RigidTransform:
    """A rigid motion stored as a unit quaternion [w, x, y, z] plus translation.

    Acts on points as ``R @ x + t``. The quaternion is re-normalized on
    construction and after every composition.
    """

    __slots__ = ("quaternion", "translation")

    def __init__(self, quaternion: np.ndarray, translation: np.ndarray):
        q = np.asarray(quaternion, dtype=float).reshape(-1)
        t = np.asarray(translation, dtype=float).reshape(-1)
        if q.shape != (4,):
            raise InvalidTransform("quaternion must have 4 components")
        if t.shape != (3,):
            raise InvalidTransform("translation must have 3 components")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(t))):
            raise InvalidTransform("transform parameters must be finite")
        self.quaternion = quat_normalize(q)
        self.translation = t.copy()

    @classmethod
    def identity(cls):
        return cls(np.array([1.0, 0.0, 0.0, 0.0]), np.zeros(3))

    @classmethod
    def from_matrix(cls, M: np.ndarray):
        M = np.asarray(M, dtype=float)
        if M.shape != (4, 4):
            raise InvalidTransform("expected a 4x4 matrix")
        if not np.allclose(M[3], [0.0, 0.0, 0.0, 1.0], atol=1e-9):
            raise InvalidTransform("last row must be [0, 0, 0, 1]")
        R = M[:3, :3]
        if not np.allclose(R @ R.T, np.eye(3), atol=1e-8):
            raise InvalidTransform("rotation block is not orthogonal")
        if abs(float(np.linalg.det(R)) - 1.0) > 1e-8:
            raise InvalidTransform("rotation block must have det +1")
        return cls(matrix_to_quat(R), M[:3, 3])

    @classmethod
    def from_rotation(cls, R: np.ndarray, t: np.ndarray):
        M = np.eye(4)
        M[:3, :3] = R
        M[:3, 3] = t
        return cls.from_matrix(M)

    @property
    def rotation(self) -> np.ndarray:
        return quat_to_matrix(self.quaternion)

    def matrix(self) -> np.ndarray:
        M = np.eye(4)
        M[:3, :3] = self.rotation
        M[:3, 3] = self.translation
        return M

    def apply(self, pts: np.ndarray) -> np.ndarray:
        return quat_rotate(self.quaternion, pts) + self.translation

    def inverse(self):
        qc = quat_conj(self.quaternion)
        return type(self)(qc, -quat_rotate(qc, self.translation))

    def compose(self, other: "RigidTransform"):
        """self after other: (self . other)(x) = self(other(x))."""
        q = quat_normalize(quat_mul(self.quaternion, other.quaternion))
        t = quat_rotate(self.quaternion, other.translation) + self.translation
        return type(self)(q, t)

    def __repr__(self) -> str:
        q = np.array2string(self.quaternion, precision=6, suppress_small=True)
        t = np.array2string(self.translation, precision=6, suppress_small=True)
        return f"{type(self).__name__}(q={q}, t={t})"


class CameraPose(RigidTransform):
    """World-to-camera rigid transform: ``x_cam = R @ x_world + t``."""

    def center(self) -> np.ndarray:
        """Camera centre in world coordinates, -R^T t."""
        return -self.rotation.T @ self.translation

    def forward(self) -> np.ndarray:
        """Viewing direction (camera +z) expressed in world coordinates."""
        return self.rotation[2].copy()


def look_at(position: np.ndarray, target: np.ndarray,
            down: np.ndarray = (0.0, 1.0, 0.0)) -> CameraPose:
    """Camera pose at ``position`` looking toward ``target``.

    ``down`` is the world direction the image v axis should roughly follow
    (camera y points down in this package's convention).
    """
    position = np.asarray(position, dtype=float)
    z = unit(np.asarray(target, dtype=float) - position)
    d = np.asarray(down, dtype=float)
    x = np.cross(d, z)
    if np.linalg.norm(x) < 1e-9:
        raise ValueError("viewing direction parallel to the down hint")
    x = unit(x)
    y = np.cross(z, x)
    R = np.stack([x, y, z])
    return CameraPose(matrix_to_quat(R), -R @ position)


# ---------------------------------------------------------------------------
# Reflections
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ReflectionTransform:
    """The two 4x4 maps induced by a mirror plane.

    ``householder`` is the improper reflection across the plane;
    ``full`` composes it with an x-axis flip, ``diag(-1,1,1,1)``, giving the
    proper rigid motion that maps a real camera to its virtual counterpart.
    """

    householder: np.ndarray
    full: np.ndarray
    frame: FrameTag

    def __post_init__(self):
        H = np.asarray(self.householder, dtype=float)
        F = np.asarray(self.full, dtype=float)
        if H.shape != (4, 4) or F.shape != (4, 4):
            raise InvalidTransform("reflection blocks must be 4x4")
        object.__setattr__(self, "householder", H)
        object.__setattr__(self, "full", F)


def make_reflection(plane: MirrorPlane) -> ReflectionTransform:
    """Build the reflection pair for a mirror plane.

    The Householder block is ``[[I - 2nn^T, 2(n.p)n], [0, 1]]``; it is an
    involution and keeps every point of the plane fixed.  ``full`` multiplies
    it by ``diag(-1,1,1,1)`` so its linear part has det +1.
    """
    n = plane.normal
    if abs(float(np.linalg.norm(n)) - 1.0) > _UNIT_TOL:
        raise InvalidPlane("mirror normal must be unit length")
    H = np.eye(4)
    H[:3, :3] = np.eye(3) - 2.0 * np.outer(n, n)
    H[:3, 3] = 2.0 * float(n @ plane.point) * n
    return ReflectionTransform(householder=H, full=_FLIP_X4 @ H, frame=plane.frame)


def rigid_inverse_matrix(M: np.ndarray) -> np.ndarray:
    """Closed-form inverse of a rigid 4x4 matrix."""
    R = M[:3, :3]
    out = np.eye(4)
    out[:3, :3] = R.T
    out[:3, 3] = -R.T @ M[:3, 3]
    return out


def virtual_camera(real: CameraPose, reflect: ReflectionTransform,
                   view: str | None = None) -> CameraPose:
    """Pose of the virtual camera induced by a mirror.

    ``reflect`` must be expressed in the real camera's frame, matching the
    left multiplication ``C_vir = full @ C_real``. The result is a proper
    camera pose; the virtual image equals the horizontally flipped mirror
    content of the real image.
    """
    if reflect.frame.kind != "camera":
        raise FrameError(
            f"reflection must be in a camera frame, got {reflect.frame}")
    if view is not None and reflect.frame.view != str(view):
        raise FrameError(
            f"reflection frame {reflect.frame} does not match view {view!r}")
    return CameraPose.from_matrix(reflect.full @ real.matrix())


def change_frame(reflect: ReflectionTransform, transform: np.ndarray,
                 frame: FrameTag | None = None) -> ReflectionTransform:
    """Conjugate a reflection by a rigid change of coordinates.

    ``transform`` maps old-frame coordinates to new-frame coordinates; the
    Householder block becomes ``T H T^-1`` and the full map is rebuilt from
    it.  ``frame`` tags the result; when omitted the original tag is kept
    (identity re-expressions).
    """
    T = np.asarray(transform, dtype=float)
    if T.shape != (4, 4):
        raise InvalidTransform("change-of-frame transform must be 4x4")
    if not np.allclose(T[3], [0.0, 0.0, 0.0, 1.0], atol=1e-9):
        raise InvalidTransform("last row must be [0, 0, 0, 1]")
    R = T[:3, :3]
    if not np.allclose(R @ R.T, np.eye(3), atol=1e-8) or \
            abs(float(np.linalg.det(R)) - 1.0) > 1e-8:
        raise InvalidTransform("change-of-frame transform must be rigid")
    H = T @ reflect.householder @ rigid_inverse_matrix(T)
    return ReflectionTransform(householder=H, full=_FLIP_X4 @ H,
                               frame=frame if frame is not None else reflect.frame)


def plane_to_camera(plane: MirrorPlane, pose: CameraPose, view: str) -> MirrorPlane:
    """Re-express a world-frame plane in a camera frame."""
    if plane.frame.kind != "world":
        raise FrameError(f"expected a world-frame plane, got {plane.frame}")
    R = pose.rotation
    return MirrorPlane(R @ plane.normal, pose.apply(plane.point),
                       FrameTag.camera(view))


def plane_to_world(plane: MirrorPlane, pose: CameraPose) -> MirrorPlane:
    """Re-express a camera-frame plane in the world frame."""
    if plane.frame.kind != "camera":
        raise FrameError(f"expected a camera-frame plane, got {plane.frame}")
    R = pose.rotation
    return MirrorPlane(R.T @ plane.normal,
                       R.T @ (plane.point - pose.translation), WORLD)


# ---------------------------------------------------------------------------
# Projection and the flip equivalence
# ---------------------------------------------------------------------------

def project(K: Intrinsics, pose: CameraPose, X: np.ndarray) -> tuple[float, float, float]:
    """Project a world point: returns (u, v, depth).

    Raises BehindCamera when the camera-frame depth is not positive.
    """
    xc = pose.apply(np.asarray(X, dtype=float))
    z = float(xc[2])
    if z <= _MIN_DEPTH:
        raise BehindCamera(f"point depth {z} is not in front of the camera")
    return (K.fx * float(xc[0]) / z + K.cx,
            K.fy * float(xc[1]) / z + K.cy,
            z)


def project_points(K: Intrinsics, pose: CameraPose, pts: np.ndarray
                   ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized projection. Returns (uv (N,2), depth (N,), in_front (N,)).

    Does not raise on non-positive depth; consult the mask instead.
    """
    xc = pose.apply(np.asarray(pts, dtype=float).reshape(-1, 3))
    z = xc[:, 2]
    in_front = z > _MIN_DEPTH
    safe = np.where(in_front, z, 1.0)
    uv = np.stack([K.fx * xc[:, 0] / safe + K.cx,
                   K.fy * xc[:, 1] / safe + K.cy], axis=1)
    return uv, z, in_front


def flip_equivalence_residual(K: Intrinsics, real: CameraPose,
                              reflect: ReflectionTransform,
                              X: np.ndarray) -> tuple[float, float]:
    """Residual of the mirror flip identity for a world point X.

    Let X' be the mirror image of X. The real camera images X' inside the
    mirror region; the virtual camera images X directly. For centered
    intrinsics these pixels satisfy ``u_real + u_vir = W`` and
    ``v_real = v_vir`` exactly; the returned pair is
    ``(u_real + u_vir - W, v_real - v_vir)``, which measures the deviation
    for off-center principal points.
    """
    if reflect.frame.kind != "camera":
        raise FrameError(
            f"reflection must be in the real camera frame, got {reflect.frame}")
    C = real.matrix()
    H_world = rigid_inverse_matrix(C) @ reflect.householder @ C
    Xh = np.append(np.asarray(X, dtype=float), 1.0)
    Xm = (H_world @ Xh)[:3]
    u_r, v_r, _ = project(K, real, Xm)
    u_v, v_v, _ = project(K, virtual_camera(real, reflect), X)
    return (u_r + u_v - K.width, v_r - v_v)


# ---------------------------------------------------------------------------
# Images
# ---------------------------------------------------------------------------

@dataclass
class ImageGrid:
    """A row-major raster: (H, W) or (H, W, C) samples plus a view tag."""

    data: np.ndarray
    view: str = "real"

    def __post_init__(self):
        d = np.asarray(self.data)
        if d.ndim not in (2, 3):
            raise ShapeError(f"image must be (H, W) or (H, W, C), got {d.shape}")
        self.data = d

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return 1 if self.data.ndim == 2 else self.data.shape[2]


def flip_view(img: ImageGrid, mask: ImageGrid,
              intrinsics: Intrinsics | None = None) -> tuple[ImageGrid, ImageGrid]:
    """Horizontally flip an image and its mirror mask.

    Simulates the virtual camera's image: with pixel centres at
    half-integers, ``u -> W - u`` is exact column reversal.  When intrinsics
    are supplied and cx is off the midline a warning is emitted, since the
    flip equivalence then only holds up to ``2 cx - W`` pixels.
    """
    if img.data.shape[:2] != mask.data.shape[:2]:
        raise ShapeError(
            f"image {img.data.shape[:2]} and mask {mask.data.shape[:2]} differ")
    if intrinsics is not None and not intrinsics.centered:
        warnings.warn(
            "flipping with off-center cx: the mirror flip identity is inexact",
            RuntimeWarning, stacklevel=2)
    return (ImageGrid(img.data[:, ::-1].copy(), view=f"virtual(of {img.view})"),
            ImageGrid(mask.data[:, ::-1].copy(), view=f"virtual(of {mask.view})"))
