"""Global alignment of pair predictions with a mirror-symmetry prior.

The state holds one global pointmap per view, one camera pose per view, and
one similarity (rigid pose + log scale) per pair-graph edge.  Three terms
are minimized jointly:

* pairwise: sum over edges e, views v in e, and valid pixels j of
  ``O * || U_v^j - sigma_e * (R_e S_{v;e}^j + t_e) ||`` with the unsquared
  Euclidean norm, tying every prediction to the shared global maps;
* rot: for each (real, virtual) pair, ``1 - | q'^T q_vir |`` where q' is
  the real pose reflected across the mirror plane (the absolute value
  handles the quaternion double cover);
* trans: ``|| t' - t_vir ||^2`` for the same reflected pose.

The reflected rotation has a closed quaternion form.  Reflecting across a
plane through the origin with unit normal n maps a vector x to the
quaternion sandwich ``n x n``; composing plane reflection with the x-axis
flip gives the proper rotation ``R' = diag(-1,1,1) R (I - 2 n n^T)`` whose
quaternion is exactly ``e_x * q * n`` with ``e_x = (0,1,0,0)`` and
``n = (0, nx, ny, nz)``.  That product is linear in q, which keeps the
analytic gradient simple; the translation part is
``t' = diag(-1,1,1) (R h + t)`` with ``h = 2 (n . p) n``.

The optimizer is deterministic full-batch first-order descent: a
block-diagonally scaled negative gradient direction with Armijo
backtracking (c = 1e-4, at most 20 halvings), quaternion re-normalization
after every accepted step, and a product-one gauge on the edge scales.
The mirror plane used by the symmetric terms is re-estimated from the
masked real pointmap every ``plane_refresh_every`` iterations and treated
as a constant in between, so the loss trace stays monotone.

Real camera poses are gauge anchors, not variables: the global frame is
defined by them (a lone real view IS the frame), so the symmetric terms
pull only the virtual poses toward the reflected real poses.  Leaving the
real poses free would let a pair drift jointly, which no term in the loss
can see but which conjugates the mirror and corrupts the recovered
relative pose.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .backbone import PairPrediction, PointMap
from .errors import (
    ConfigError,
    NumericalFailure,
    PlaneUnavailable,
    UnknownView,
)
from .geometry import (
    CameraPose,
    MirrorPlane,
    RigidTransform,
    make_reflection,
    quat_angle_deg,
    quat_mul,
    quat_normalize,
    quat_to_matrix,
)
from .pairgraph import Edge, ViewId
from .planefit import MaskedCloud, estimate_plane
from .errors import DegenerateCloud, TooFewPoints
from .geometry import WORLD

_D3 = np.diag([-1.0, 1.0, 1.0])
_D4 = np.diag([-1.0, 1.0, 1.0, 1.0])
_EX = np.array([0.0, 1.0, 0.0, 0.0])
_NORM_GUARD = 1e-15

ARMIJO_C = 1e-4
MAX_HALVINGS = 20


# ---------------------------------------------------------------------------
# State
# ---------------------------------------------------------------------------

@dataclass
class EdgeParams:
    """Per-edge similarity: rigid pose (pair frame -> global) and log scale."""

    pose: RigidTransform
    log_scale: float = 0.0

    @classmethod
    def identity(cls) -> "EdgeParams":
        return cls(RigidTransform.identity(), 0.0)

    def copy(self) -> "EdgeParams":
        return EdgeParams(RigidTransform(self.pose.quaternion,
                                         self.pose.translation),
                          self.log_scale)


@dataclass
class GlobalState:
    """Everything the alignment optimizes, plus the current plane estimates."""

    pointmaps: dict[ViewId, PointMap]
    poses: dict[ViewId, CameraPose]
    edges: dict[Edge, EdgeParams]
    planes: dict[ViewId, MirrorPlane] = field(default_factory=dict)
    mirror_masks: dict[ViewId, np.ndarray] = field(default_factory=dict)

    def copy(self) -> "GlobalState":
        return GlobalState(
            pointmaps={v: pm.copy() for v, pm in self.pointmaps.items()},
            poses={v: CameraPose(p.quaternion, p.translation)
                   for v, p in self.poses.items()},
            edges={e: ep.copy() for e, ep in self.edges.items()},
            planes=dict(self.planes),
            mirror_masks={v: m.copy() for v, m in self.mirror_masks.items()},
        )

    def sym_pairs(self) -> list[tuple[ViewId, ViewId]]:
        """(real, virtual) pose pairs that have a symmetric constraint."""
        out = []
        for v in self.poses:
            if v.kind == "virtual":
                r = ViewId.real(v.frame_time)
                if r not in self.poses:
                    raise UnknownView(f"virtual view {v} has no real partner")
                out.append((r, v))
        return out


@dataclass(frozen=True)
class LossWeights:
    pairwise: float = 1.0
    rot: float = 1.0
    trans: float = 1.0

    def __post_init__(self):
        if min(self.pairwise, self.rot, self.trans) < 0:
            raise ConfigError("loss weights must be non-negative")


@dataclass
class LossBreakdown:
    """Raw term values plus the weighted total."""

    pairwise: float
    rot: float
    trans: float
    total: float
    per_edge: dict[Edge, float] = field(default_factory=dict)


@dataclass
class TraceRow:
    iteration: int
    pairwise: float
    rot: float
    trans: float
    total: float
    step: float


@dataclass
class OptimizeConfig:
    max_iters: int = 200
    lr: float = 1.0
    tol: float = 1e-10
    use_sym: bool = True
    weights: LossWeights = field(default_factory=LossWeights)
    plane_refresh_every: int = 10  # 0 freezes the plane

    def __post_init__(self):
        if self.max_iters < 1:
            raise ConfigError("max_iters must be >= 1")
        if self.lr <= 0:
            raise ConfigError("lr must be positive")
        if self.tol < 0:
            raise ConfigError("tol must be >= 0")
        if self.plane_refresh_every < 0:
            raise ConfigError("plane_refresh_every must be >= 0")


# ---------------------------------------------------------------------------
# Reflected pose
# ---------------------------------------------------------------------------

def _plane_quat(plane: MirrorPlane) -> np.ndarray:
    return np.concatenate(([0.0], plane.normal))


def reflected_quat(q_real: np.ndarray, plane: MirrorPlane) -> np.ndarray:
    """Quaternion of diag(-1,1,1) R(q) (I - 2nn^T): the product e_x * q * n."""
    return quat_mul(quat_mul(_EX, quat_normalize(q_real)), _plane_quat(plane))


def reflected_pose(real: CameraPose, plane: MirrorPlane) -> CameraPose:
    """The real pose mapped to its mirror counterpart.

    For a camera-frame plane this is the left product ``full @ C_real``;
    for a world-frame plane the Householder acts on world coordinates
    first: ``diag(-1,1,1,1) @ C_real @ H``.  Both yield a proper pose.
    """
    if plane.frame.kind == "camera":
        M = make_reflection(plane).full @ real.matrix()
    else:
        M = _D4 @ real.matrix() @ make_reflection(plane).householder
    return CameraPose.from_matrix(M)


def symmetry_residual(real: CameraPose, vir: CameraPose,
                      plane: MirrorPlane) -> tuple[float, float]:
    """(rotation gap in degrees, translation gap in units) between the
    reflected real pose and the virtual pose."""
    ref = reflected_pose(real, plane)
    return (quat_angle_deg(ref.quaternion, vir.quaternion),
            float(np.linalg.norm(ref.translation - vir.translation)))


# ---------------------------------------------------------------------------
# Loss terms and gradients
# ---------------------------------------------------------------------------

@dataclass
class GradState:
    points: dict[ViewId, np.ndarray]
    quats: dict[ViewId, np.ndarray]
    trans: dict[ViewId, np.ndarray]
    edge_quats: dict[Edge, np.ndarray]
    edge_trans: dict[Edge, np.ndarray]
    edge_logs: dict[Edge, float]

    @classmethod
    def zeros_like(cls, state: GlobalState) -> "GradState":
        return cls(
            points={v: np.zeros_like(pm.points)
                    for v, pm in state.pointmaps.items()},
            quats={v: np.zeros(4) for v in state.poses},
            trans={v: np.zeros(3) for v in state.poses},
            edge_quats={e: np.zeros(4) for e in state.edges},
            edge_trans={e: np.zeros(3) for e in state.edges},
            edge_logs={e: 0.0 for e in state.edges},
        )


def _project_unit(q: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Ambient gradient through q -> q/||q|| at a stored unit quaternion."""
    n = float(np.linalg.norm(q))
    qh = q / n
    return (g - qh * float(qh @ g)) / n


def _rot_jac_apply_T(q: np.ndarray, V: np.ndarray, G: np.ndarray) -> np.ndarray:
    """Sum_j J^T G_j where J = d(R(q) v)/dq at unit q, for rows v = V_j."""
    w = float(q[0])
    qv = q[1:]
    gw = 2.0 * float(np.sum(G * (w * V + np.cross(np.broadcast_to(qv, V.shape), V))))
    gv = 2.0 * (
        (V @ qv)[:, None] * G
        + (G @ qv)[:, None] * V
        - np.sum(V * G, axis=1)[:, None] * qv[None, :]
        + w * np.cross(V, G)
    ).sum(axis=0)
    return np.concatenate(([gw], gv))


def _edge_views(pred: PairPrediction) -> list[tuple[ViewId, PointMap]]:
    a, b = pred.edge
    return [(a, pred.pointmap_a), (b, pred.pointmap_b)]


def _pairwise(state: GlobalState, preds: list[PairPrediction],
              grad: GradState | None) -> tuple[float, dict[Edge, float]]:
    total = 0.0
    per_edge: dict[Edge, float] = {}
    for pred in preds:
        e = pred.edge
        if e not in state.edges:
            raise ConfigError(f"no edge parameters for ({e[0]}, {e[1]})")
        ep = state.edges[e]
        sigma = math.exp(ep.log_scale)
        q = quat_normalize(ep.pose.quaternion)
        R = quat_to_matrix(q)
        t = ep.pose.translation
        edge_sum = 0.0
        for v, pm in _edge_views(pred):
            if v not in state.pointmaps:
                raise UnknownView(f"no global pointmap for view {v}")
            sel = pm.valid
            if not sel.any():
                continue
            S = pm.points[sel]
            O = pm.confidence[sel]
            U = state.pointmaps[v].points[sel]
            y = S @ R.T + t
            r = U - sigma * y
            nrm = np.linalg.norm(r, axis=1)
            edge_sum += float(np.sum(O * nrm))
            if grad is not None:
                coef = np.where(nrm > _NORM_GUARD, O / np.maximum(nrm, _NORM_GUARD), 0.0)
                Gr = coef[:, None] * r
                gp = grad.points[v]
                np.add.at(gp.reshape(-1, 3),
                          np.flatnonzero(sel.ravel()), Gr)
                grad.edge_trans[e] += -sigma * Gr.sum(axis=0)
                grad.edge_logs[e] += -sigma * float(np.sum(Gr * y))
                grad.edge_quats[e] += -sigma * _rot_jac_apply_T(q, S, Gr)
        per_edge[e] = edge_sum
        total += edge_sum
    return total, per_edge


def _sym_terms(state: GlobalState, grad: GradState | None,
               w_rot: float, w_trans: float) -> tuple[float, float]:
    rot_total = 0.0
    trans_total = 0.0
    for r, v in state.sym_pairs():
        plane = state.planes.get(v)
        if plane is None:
            raise PlaneUnavailable(f"no plane estimate for virtual view {v}")
        if plane.frame.kind != "world":
            raise PlaneUnavailable(
                f"symmetric terms expect a global-frame plane, got {plane.frame}")
        q_r = state.poses[r].quaternion
        q_v = state.poses[v].quaternion
        qh_r = quat_normalize(q_r)
        qh_v = quat_normalize(q_v)
        qp = reflected_quat(qh_r, plane)
        d = float(qp @ qh_v)
        rot_total += max(0.0, 1.0 - abs(d))  # |d| can pass 1 by rounding

        n = plane.normal
        h = 2.0 * float(n @ plane.point) * n
        t_r = state.poses[r].translation
        t_v = state.poses[v].translation
        Rr = quat_to_matrix(qh_r)
        tp = _D3 @ (Rr @ h + t_r)
        delta = tp - t_v
        trans_total += float(delta @ delta)

        if grad is not None:
            # Real poses anchor the reconstruction frame and are held fixed;
            # only the virtual pose receives a pull toward the reflection.
            s = 1.0 if d >= 0 else -1.0
            grad.quats[v] += w_rot * _project_unit(q_v, -s * qp)
            grad.trans[v] += w_trans * (-2.0 * delta)
    return rot_total, trans_total


def pairwise_loss(state: GlobalState, preds: list[PairPrediction]) -> float:
    """Confidence-weighted unsquared alignment residual over all edges."""
    total, _ = _pairwise(state, preds, None)
    return total


def rot_loss(state: GlobalState) -> float:
    """Sum of 1 - |q'^T q_vir| over all (real, virtual) pairs."""
    rot, _ = _sym_terms(state, None, 0.0, 0.0)
    return rot


def trans_loss(state: GlobalState) -> float:
    """Sum of squared distances between reflected and virtual translations."""
    _, trans = _sym_terms(state, None, 0.0, 0.0)
    return trans


def total_loss(state: GlobalState, preds: list[PairPrediction],
               weights: LossWeights | None = None,
               use_sym: bool = True) -> LossBreakdown:
    w = weights or LossWeights()
    pw, per_edge = _pairwise(state, preds, None)
    if use_sym:
        rot, trans = _sym_terms(state, None, w.rot, w.trans)
    else:
        rot, trans = 0.0, 0.0
    total = w.pairwise * pw + w.rot * rot + w.trans * trans
    return LossBreakdown(pw, rot, trans, total, per_edge)


def total_loss_grad(state: GlobalState, preds: list[PairPrediction],
                    weights: LossWeights | None = None,
                    use_sym: bool = True) -> tuple[LossBreakdown, GradState]:
    """Loss plus analytic gradients with respect to every state variable.

    The plane estimates are treated as constants; pointmap gradients are
    scaled by ``weights.pairwise``, pose gradients by the symmetric-term
    weights.
    """
    w = weights or LossWeights()
    grad = GradState.zeros_like(state)
    pw, per_edge = _pairwise(state, preds, grad)
    if w.pairwise != 1.0:
        for v in grad.points:
            grad.points[v] *= w.pairwise
        for e in grad.edge_quats:
            grad.edge_quats[e] *= w.pairwise
            grad.edge_trans[e] *= w.pairwise
            grad.edge_logs[e] *= w.pairwise
    if use_sym:
        rot, trans = _sym_terms(state, grad, w.rot, w.trans)
    else:
        rot, trans = 0.0, 0.0
    for e, ep in state.edges.items():
        grad.edge_quats[e] = _project_unit(ep.pose.quaternion, grad.edge_quats[e])
    total = w.pairwise * pw + w.rot * rot + w.trans * trans
    return LossBreakdown(pw, rot, trans, total, per_edge), grad


# ---------------------------------------------------------------------------
# Optimizer
# ---------------------------------------------------------------------------

def _grad_is_finite(g: GradState) -> bool:
    for coll in (g.points, g.quats, g.trans, g.edge_quats, g.edge_trans):
        for arr in coll.values():
            if not np.all(np.isfinite(arr)):
                return False
    return all(math.isfinite(v) for v in g.edge_logs.values())


def _edge_weight_scales(state: GlobalState, preds: list[PairPrediction],
                        w_pair: float) -> tuple[dict[ViewId, np.ndarray],
                                                dict[Edge, float], float]:
    """Fixed block-diagonal scaling for the descent direction.

    Pixel blocks are scaled by their total confidence, edge blocks by their
    total confidence mass; pose blocks are O(1) already.  This keeps the
    per-block curvatures comparable so one line search serves all of them.
    """
    pix: dict[ViewId, np.ndarray] = {
        v: np.zeros(pm.points.shape[:2]) for v, pm in state.pointmaps.items()}
    edge: dict[Edge, float] = {e: 0.0 for e in state.edges}
    for pred in preds:
        for v, pm in _edge_views(pred):
            if v not in pix:
                raise UnknownView(f"no global pointmap for view {v}")
            pix[v] += pm.confidence
            edge[pred.edge] += float(pm.confidence.sum())
    pix = {v: np.maximum(w_pair * p, 1e-3) for v, p in pix.items()}
    edge = {e: max(w_pair * s, 1e-3) for e, s in edge.items()}
    shared_ls = max(edge.values(), default=1.0)
    return pix, edge, shared_ls


def _direction(grad: GradState, pix_scale, edge_scale, ls_scale) -> GradState:
    d = GradState(
        points={v: -g / pix_scale[v][:, :, None] for v, g in grad.points.items()},
        quats={v: -g for v, g in grad.quats.items()},
        trans={v: -g for v, g in grad.trans.items()},
        edge_quats={e: -g / edge_scale[e] for e, g in grad.edge_quats.items()},
        edge_trans={e: -g / edge_scale[e] for e, g in grad.edge_trans.items()},
        edge_logs={e: -g / ls_scale for e, g in grad.edge_logs.items()},
    )
    # Keep the product-one scale gauge: a shared ls scale makes projecting
    # the direction equivalent to projecting the gradient.
    if d.edge_logs:
        mean = sum(d.edge_logs.values()) / len(d.edge_logs)
        d.edge_logs = {e: v - mean for e, v in d.edge_logs.items()}
    return d


def _dot(grad: GradState, d: GradState) -> float:
    acc = 0.0
    for v in grad.points:
        acc += float(np.sum(grad.points[v] * d.points[v]))
    for v in grad.quats:
        acc += float(grad.quats[v] @ d.quats[v])
        acc += float(grad.trans[v] @ d.trans[v])
    for e in grad.edge_quats:
        acc += float(grad.edge_quats[e] @ d.edge_quats[e])
        acc += float(grad.edge_trans[e] @ d.edge_trans[e])
        acc += grad.edge_logs[e] * d.edge_logs[e]
    return acc


def _step(state: GlobalState, d: GradState, alpha: float) -> GlobalState:
    out = state.copy()
    for v, pm in out.pointmaps.items():
        pm.points += alpha * d.points[v]
    for v in out.poses:
        p = out.poses[v]
        out.poses[v] = CameraPose(p.quaternion + alpha * d.quats[v],
                                  p.translation + alpha * d.trans[v])
    for e, ep in out.edges.items():
        out.edges[e] = EdgeParams(
            RigidTransform(ep.pose.quaternion + alpha * d.edge_quats[e],
                           ep.pose.translation + alpha * d.edge_trans[e]),
            ep.log_scale + alpha * d.edge_logs[e])
    return out


def refresh_planes(state: GlobalState) -> dict[ViewId, MirrorPlane]:
    """Plane candidates from the current masked real pointmaps.

    Returns {virtual view: plane} for every pair whose real view has a
    mirror mask and enough valid masked pixels; estimation failures leave
    the existing plane in place.
    """
    out: dict[ViewId, MirrorPlane] = {}
    for r, v in state.sym_pairs():
        mask = state.mirror_masks.get(r)
        if mask is None:
            continue
        pm = state.pointmaps[r]
        sel = mask & pm.valid
        if int(sel.sum()) < 3:
            continue
        try:
            plane, _ = estimate_plane(MaskedCloud(
                pm.points[sel], np.ones(int(sel.sum()), dtype=bool), WORLD))
        except (TooFewPoints, DegenerateCloud):
            continue
        out[v] = plane
    return out


def optimize(initial: GlobalState, preds: list[PairPrediction],
             config: OptimizeConfig | None = None
             ) -> tuple[GlobalState, list[TraceRow]]:
    """Descend the total loss from ``initial``; returns (state, trace).

    Deterministic: no randomness, fixed iteration order.  The trace has one
    row for the initial loss and one per iteration; its totals are
    non-increasing.  Raises NumericalFailure (with the iteration) if the
    loss or gradient turns non-finite.
    """
    cfg = config or OptimizeConfig()
    state = initial.copy()
    if cfg.use_sym and not state.planes:
        state.planes = refresh_planes(state)
    pix_scale, edge_scale, ls_scale = _edge_weight_scales(
        state, preds, cfg.weights.pairwise)

    bd = total_loss(state, preds, cfg.weights, cfg.use_sym)
    if not math.isfinite(bd.total):
        exc = NumericalFailure("initial loss is not finite", iteration=0)
        exc.trace = []
        raise exc
    trace = [TraceRow(0, bd.pairwise, bd.rot, bd.trans, bd.total, 0.0)]
    current = bd.total

    for it in range(1, cfg.max_iters + 1):
        if cfg.use_sym and cfg.plane_refresh_every and \
                it > 1 and (it - 1) % cfg.plane_refresh_every == 0:
            candidates = refresh_planes(state)
            if candidates:
                trial = replace_planes(state, candidates)
                bd_new = total_loss(trial, preds, cfg.weights, cfg.use_sym)
                if bd_new.total <= current:
                    state = trial
                    current = bd_new.total

        bd, grad = total_loss_grad(state, preds, cfg.weights, cfg.use_sym)
        if not math.isfinite(bd.total) or not _grad_is_finite(grad):
            exc = NumericalFailure("non-finite loss or gradient", iteration=it)
            exc.trace = list(trace)  # lets callers flush the partial trace
            raise exc
        d = _direction(grad, pix_scale, edge_scale, ls_scale)
        slope = _dot(grad, d)
        if slope >= 0.0:
            break  # no descent direction left
        alpha = cfg.lr
        accepted = None
        for _ in range(MAX_HALVINGS + 1):
            trial = _step(state, d, alpha)
            bd_t = total_loss(trial, preds, cfg.weights, cfg.use_sym)
            if math.isfinite(bd_t.total) and \
                    bd_t.total <= current + ARMIJO_C * alpha * slope:
                accepted = (trial, bd_t, alpha)
                break
            alpha *= 0.5
        if accepted is None:
            break  # line search stalled at the resolution limit
        state, bd, alpha = accepted
        trace.append(TraceRow(it, bd.pairwise, bd.rot, bd.trans, bd.total, alpha))
        prev, current = current, bd.total
        rel = abs(prev - current) / max(abs(prev), 1e-30)
        if rel < cfg.tol:
            break

    if state.edges:
        mean = sum(ep.log_scale for ep in state.edges.values()) / len(state.edges)
        if abs(mean) > 0.0:
            for ep in state.edges.values():
                ep.log_scale -= mean
    return state, trace


def replace_planes(state: GlobalState,
                   planes: dict[ViewId, MirrorPlane]) -> GlobalState:
    out = state.copy()
    out.planes = {**state.planes, **planes}
    return out
