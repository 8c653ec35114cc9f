"""Reconstruction and pose metrics.

Cloud metrics use exact nearest neighbours (scipy cKDTree, verified against
brute force in the test suite).  Distances are unsquared Euclidean:

* accuracy: % of predicted points whose nearest ground-truth point is
  closer than tau;
* completeness: % of ground-truth points whose nearest prediction is
  closer than tau;
* f1: harmonic mean of the two percentages;
* chamfer: 0.5 * (mean nearest distance pred->gt + mean gt->pred).

Pose errors compare an estimated pose against ground truth after both have
been registered to a common reference (register the real poses first, then
read off the virtual pose error): rotation error is the geodesic angle in
degrees, translation error is the relative distance
``100 * ||t_est - t_gt|| / ||t_gt||`` in percent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import ConfigError, EmptyCloud, ShapeError
from .geometry import CameraPose, quat_angle_deg

DEFAULT_TAU = 0.01  # 1 cm at the 1 unit = 1 m convention


def _as_cloud(pts: np.ndarray, name: str) -> np.ndarray:
    arr = np.asarray(pts, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ShapeError(f"{name} must be (N, 3), got {arr.shape}")
    if len(arr) == 0:
        raise EmptyCloud(f"{name} is empty")
    return arr


def nearest_distances(query: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Exact nearest-neighbour distance from each query point to the reference."""
    query = _as_cloud(query, "query")
    reference = _as_cloud(reference, "reference")
    d, _ = cKDTree(reference).query(query, k=1, workers=1)
    return np.asarray(d, dtype=float)


def accuracy(pred: np.ndarray, gt: np.ndarray, tau: float = DEFAULT_TAU) -> float:
    """Percentage of predicted points within tau of the ground truth."""
    if tau <= 0:
        raise ConfigError("tau must be positive")
    d = nearest_distances(pred, gt)
    return 100.0 * float(np.mean(d < tau))


def completeness(pred: np.ndarray, gt: np.ndarray, tau: float = DEFAULT_TAU) -> float:
    """Percentage of ground-truth points within tau of the prediction."""
    if tau <= 0:
        raise ConfigError("tau must be positive")
    d = nearest_distances(gt, pred)
    return 100.0 * float(np.mean(d < tau))


def f1(acc: float, comp: float) -> float:
    """Harmonic mean of accuracy and completeness percentages."""
    if acc < 0 or comp < 0:
        raise ConfigError("percentages must be non-negative")
    if acc + comp == 0:
        return 0.0
    return 2.0 * acc * comp / (acc + comp)


def chamfer(pred: np.ndarray, gt: np.ndarray) -> float:
    """Symmetric mean nearest-neighbour distance (unsquared)."""
    d_pg = nearest_distances(pred, gt)
    d_gp = nearest_distances(gt, pred)
    return 0.5 * (float(np.mean(d_pg)) + float(np.mean(d_gp)))


@dataclass(frozen=True)
class MetricsReport:
    completeness: float
    accuracy: float
    f1: float
    chamfer: float
    tau: float
    n_pred: int
    n_gt: int

    def to_dict(self) -> dict:
        return {"completeness": self.completeness, "accuracy": self.accuracy,
                "f1": self.f1, "chamfer": self.chamfer, "tau": self.tau,
                "n_pred": self.n_pred, "n_gt": self.n_gt}

    def markdown(self) -> str:
        head = "| Comp. | Accuracy | F1 | Chamfer |"
        rule = "|---|---|---|---|"
        row = (f"| {self.completeness:.2f} | {self.accuracy:.2f} "
               f"| {self.f1:.2f} | {self.chamfer:.4f} |")
        return "\n".join([head, rule, row])


def evaluate_clouds(pred: np.ndarray, gt: np.ndarray,
                    tau: float = DEFAULT_TAU) -> MetricsReport:
    acc = accuracy(pred, gt, tau)
    comp = completeness(pred, gt, tau)
    return MetricsReport(completeness=comp, accuracy=acc, f1=f1(acc, comp),
                         chamfer=chamfer(pred, gt), tau=tau,
                         n_pred=len(np.asarray(pred)), n_gt=len(np.asarray(gt)))


# ---------------------------------------------------------------------------
# Pose errors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PoseError:
    """Rotation error in degrees; translation error in percent of ||t_gt||.

    When the ground-truth translation is (near) zero the relative error is
    undefined; ``translation_absolute`` flags that the translation field then
    holds the absolute distance instead.
    """

    rotation_deg: float
    translation: float
    translation_absolute: bool = False


def pose_errors(est: CameraPose, gt: CameraPose) -> PoseError:
    """Compare two poses already registered to a common reference."""
    r_err = quat_angle_deg(est.quaternion, gt.quaternion)
    diff = float(np.linalg.norm(est.translation - gt.translation))
    denom = float(np.linalg.norm(gt.translation))
    if denom < 1e-12:
        return PoseError(r_err, diff, translation_absolute=True)
    return PoseError(r_err, 100.0 * diff / denom)


def register_virtual(est_real: CameraPose, est_vir: CameraPose,
                     gt_real: CameraPose) -> CameraPose:
    """Re-gauge an estimated virtual pose so the real poses coincide.

    Applies the world transform that maps the estimated real pose onto the
    ground-truth real pose; what remains of the virtual pose mismatch is
    the actual relative-pose error.
    """
    gauge = est_real.inverse().compose(gt_real)  # world_gt -> world_est
    return est_vir.compose(gauge)
