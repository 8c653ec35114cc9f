"""Shared test utilities: random alignment states and a finite-difference
gradient check against the analytic gradient."""
import numpy as np

from mirrorstereo.alignment import (
    EdgeParams,
    GlobalState,
    total_loss,
    total_loss_grad,
)
from mirrorstereo.backbone import PairPrediction, PointMap
from mirrorstereo.geometry import (
    WORLD,
    CameraPose,
    MirrorPlane,
    RigidTransform,
    quat_normalize,
)
from mirrorstereo.pairgraph import ViewId


def unit_vec(rng):
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def _raw_pose(q, t):
    # bypass __init__ so the stored quaternion stays un-normalized; the
    # analytic gradient is taken in these ambient coordinates
    p = CameraPose.__new__(CameraPose)
    p.quaternion = np.asarray(q, dtype=float)
    p.translation = np.asarray(t, dtype=float)
    return p


def _raw_rigid(q, t):
    r = RigidTransform.__new__(RigidTransform)
    r.quaternion = np.asarray(q, dtype=float)
    r.translation = np.asarray(t, dtype=float)
    return r


def random_state(rng, n_pix=5, n_virtual=1):
    """A small random global state with one real and n virtual views."""
    H = W = n_pix
    real = ViewId.real(0)

    def rand_pm():
        pts = rng.normal(size=(H, W, 3))
        conf = rng.uniform(0.2, 1.0, size=(H, W))
        valid = rng.random((H, W)) > 0.3
        return PointMap(pts, conf, valid, WORLD)

    pointmaps = {real: rand_pm()}
    poses = {real: CameraPose.identity()}
    edges = {}
    planes = {}
    preds = []
    for i in range(1, n_virtual + 1):
        vir = ViewId.virtual(i, 0)
        edge = (real, vir)
        pointmaps[vir] = rand_pm()
        poses[vir] = CameraPose(quat_normalize(rng.normal(size=4)),
                                rng.normal(size=3))
        edges[edge] = EdgeParams(
            RigidTransform(quat_normalize(rng.normal(size=4)),
                           rng.normal(size=3)),
            float(rng.normal() * 0.3))
        planes[vir] = MirrorPlane(unit_vec(rng), rng.normal(size=3), WORLD)
        preds.append(PairPrediction(edge, rand_pm(), rand_pm()))
    state = GlobalState(pointmaps=pointmaps, poses=poses, edges=edges,
                        planes=planes, mirror_masks={})
    return state, preds


def fd_gradcheck(state, preds, h=1e-6, n_pix_samples=4, use_sym=True):
    """Worst relative error between analytic and central-difference
    gradients over the free variables.  Real-pose gradient entries must be
    identically zero (they anchor the gauge) and are asserted, not
    differenced."""
    _, grad = total_loss_grad(state, preds, use_sym=use_sym)

    def f(s):
        return total_loss(s, preds, use_sym=use_sym).total

    def rel(fd, an):
        return abs(fd - an) / max(1.0, abs(fd), abs(an))

    worst = 0.0
    for v in state.pointmaps:
        pm = state.pointmaps[v]
        for r, c in np.argwhere(pm.valid)[:n_pix_samples]:
            for k in range(3):
                s1 = state.copy()
                s1.pointmaps[v].points[r, c, k] += h
                s2 = state.copy()
                s2.pointmaps[v].points[r, c, k] -= h
                fd = (f(s1) - f(s2)) / (2 * h)
                worst = max(worst, rel(fd, grad.points[v][r, c, k]))
    for v in state.poses:
        if v.kind == "real":
            assert np.all(grad.quats[v] == 0.0)
            assert np.all(grad.trans[v] == 0.0)
            continue
        pose = state.poses[v]
        for k in range(4):
            q1 = pose.quaternion.copy()
            q1[k] += h
            q2 = pose.quaternion.copy()
            q2[k] -= h
            s1 = state.copy()
            s1.poses[v] = _raw_pose(q1, pose.translation)
            s2 = state.copy()
            s2.poses[v] = _raw_pose(q2, pose.translation)
            fd = (f(s1) - f(s2)) / (2 * h)
            worst = max(worst, rel(fd, grad.quats[v][k]))
        for k in range(3):
            s1 = state.copy()
            s1.poses[v].translation[k] += h
            s2 = state.copy()
            s2.poses[v].translation[k] -= h
            fd = (f(s1) - f(s2)) / (2 * h)
            worst = max(worst, rel(fd, grad.trans[v][k]))
    for e in state.edges:
        ep = state.edges[e]
        for k in range(4):
            q1 = ep.pose.quaternion.copy()
            q1[k] += h
            q2 = ep.pose.quaternion.copy()
            q2[k] -= h
            s1 = state.copy()
            s1.edges[e].pose = _raw_rigid(q1, ep.pose.translation)
            s2 = state.copy()
            s2.edges[e].pose = _raw_rigid(q2, ep.pose.translation)
            fd = (f(s1) - f(s2)) / (2 * h)
            worst = max(worst, rel(fd, grad.edge_quats[e][k]))
        for k in range(3):
            s1 = state.copy()
            s1.edges[e].pose.translation[k] += h
            s2 = state.copy()
            s2.edges[e].pose.translation[k] -= h
            fd = (f(s1) - f(s2)) / (2 * h)
            worst = max(worst, rel(fd, grad.edge_trans[e][k]))
        s1 = state.copy()
        s1.edges[e].log_scale += h
        s2 = state.copy()
        s2.edges[e].log_scale -= h
        fd = (f(s1) - f(s2)) / (2 * h)
        worst = max(worst, rel(fd, grad.edge_logs[e]))
    return worst


def assert_monotone(trace, slack=1e-12):
    totals = [row.total for row in trace]
    for a, b in zip(totals, totals[1:]):
        assert b <= a + slack, f"trace increased: {a} -> {b}"
