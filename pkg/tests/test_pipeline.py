"""End-to-end reconstruction, evaluation, persistence, and ablation."""

import numpy as np
import pytest
from helpers import assert_monotone

from mirrorstereo.alignment import reflected_pose
from mirrorstereo.backbone import NoiseModel, simulate_backbone
from mirrorstereo.errors import ConfigError, ParseError, PlaneUnavailable
from mirrorstereo.geometry import CameraPose
from mirrorstereo.pairgraph import ViewId, build_static
from mirrorstereo.pipeline import (
    FUSED_PLANE,
    FUSED_REAL,
    FUSED_VIRTUAL,
    PipelineConfig,
    evaluate_recon,
    initial_state,
    plane_polygon,
    read_recon,
    read_trace_csv,
    reconstruct,
    reference_cloud,
    run_ablation,
    write_ablation,
    write_evaluation,
    write_recon,
    write_trace_csv,
)

REAL = ViewId.real(0)
VIR = ViewId.virtual(1, 0)

SCATTER = NoiseModel(pose_deg=5.0, pose_trans=0.05)


def clean_preds(scene, seed=0):
    return [simulate_backbone(scene, e, NoiseModel(), seed)
            for e in build_static(1).edges]


@pytest.fixture(scope="module")
def recon_clean(scene0):
    return reconstruct(scene0, PipelineConfig())


class TestInitialState:
    def test_real_pose_is_exact_identity(self, scene0):
        K = scene0.intrinsics
        state = initial_state(clean_preds(scene0), scene0.mask_bool(),
                              K.height, K.width, SCATTER, seed=7)
        assert np.array_equal(state.poses[REAL].quaternion, [1.0, 0, 0, 0])
        assert np.array_equal(state.poses[REAL].translation, [0.0, 0, 0])

    def test_virtual_starts_at_reflection_without_noise(self, scene0):
        K = scene0.intrinsics
        state = initial_state(clean_preds(scene0), scene0.mask_bool(),
                              K.height, K.width)
        want = reflected_pose(CameraPose.identity(), state.planes[VIR])
        assert np.allclose(state.poses[VIR].quaternion, want.quaternion,
                           atol=1e-12)
        assert np.allclose(state.poses[VIR].translation, want.translation,
                           atol=1e-12)

    def test_scatter_is_seeded(self, scene0):
        K = scene0.intrinsics
        preds = clean_preds(scene0)
        mk = lambda seed: initial_state(preds, scene0.mask_bool(),
                                        K.height, K.width, SCATTER, seed)
        a, b, c = mk(1), mk(1), mk(2)
        assert np.array_equal(a.poses[VIR].quaternion, b.poses[VIR].quaternion)
        assert not np.allclose(a.poses[VIR].quaternion, c.poses[VIR].quaternion)

    def test_empty_mask_raises(self, scene0):
        K = scene0.intrinsics
        empty = np.zeros((K.height, K.width), dtype=bool)
        with pytest.raises(PlaneUnavailable):
            initial_state(clean_preds(scene0), empty, K.height, K.width)

    def test_no_predictions_raises(self, scene0):
        K = scene0.intrinsics
        with pytest.raises(PlaneUnavailable):
            initial_state([], scene0.mask_bool(), K.height, K.width)


class TestReconstructClean:
    def test_cloud_matches_ground_truth(self, scene0, recon_clean):
        ev = evaluate_recon(recon_clean.fused_points, recon_clean.state.poses,
                            scene0)
        assert ev.metrics.chamfer < 1e-6
        assert ev.metrics.completeness == pytest.approx(100.0)
        assert ev.metrics.accuracy == pytest.approx(100.0)
        assert ev.pose.rotation_deg < 1e-6
        assert ev.pose.translation < 1e-6

    def test_trace_monotone_and_short(self, recon_clean):
        assert_monotone(recon_clean.trace)
        assert len(recon_clean.trace) <= 3

    def test_symmetry_residual_tiny(self, recon_clean):
        rot, trans = recon_clean.sym_residual
        assert rot < 1e-8
        assert trans < 1e-8

    def test_fused_labels_cover_all_sources(self, recon_clean):
        assert set(np.unique(recon_clean.fused_labels)) == {
            FUSED_REAL, FUSED_VIRTUAL, FUSED_PLANE}


class TestReconstructTriangulate:
    def test_noiseless_correspondences(self, scene0, scene0_obs):
        corrs, _ = scene0_obs
        cfg = PipelineConfig(backbone="triangulate")
        rec = reconstruct(scene0, cfg, corrs)
        ev = evaluate_recon(rec.fused_points, rec.state.poses, scene0)
        # Accuracy is bounded by pixel quantization of the reference cloud,
        # not by the triangulation itself.
        assert ev.metrics.accuracy > 80.0
        assert ev.metrics.completeness > 70.0
        assert ev.metrics.chamfer < 0.05
        assert ev.pose.rotation_deg < 0.5

    def test_requires_correspondences(self, scene0):
        cfg = PipelineConfig(backbone="triangulate")
        with pytest.raises(ConfigError):
            reconstruct(scene0, cfg, None)


class TestPoseScatter:
    def test_symmetric_terms_recover_scattered_pose(self, scene0):
        cfg = PipelineConfig(noise=SCATTER, seed=1)
        rec = reconstruct(scene0, cfg)
        rot, trans = rec.sym_residual
        assert rot < 0.5
        assert trans < 0.005
        assert_monotone(rec.trace)

    def test_disabled_terms_leave_poses_scattered(self, scene0):
        K = scene0.intrinsics
        cfg = PipelineConfig(noise=SCATTER, seed=1, use_sym=False)
        rec = reconstruct(scene0, cfg)
        state0 = initial_state(clean_preds(scene0, cfg.seed), scene0.mask_bool(),
                               K.height, K.width, SCATTER, cfg.seed)
        assert np.allclose(rec.state.poses[VIR].quaternion,
                           state0.poses[VIR].quaternion, atol=1e-12)
        assert np.allclose(rec.state.poses[VIR].translation,
                           state0.poses[VIR].translation, atol=1e-12)


class TestGeometryHelpers:
    def test_plane_polygon_lies_on_plane(self, scene0):
        poly = plane_polygon(scene0.mask_bool(), scene0.intrinsics,
                             scene0.camera, scene0.plane)
        assert len(poly) == int(scene0.mask_bool().sum())
        d = (poly - scene0.plane.point) @ scene0.plane.normal
        assert np.max(np.abs(d)) < 1e-9

    def test_reference_cloud_nonempty(self, scene0):
        ref = reference_cloud(scene0)
        assert ref.ndim == 2 and ref.shape[1] == 3
        assert len(ref) > 1000


class TestPersistence:
    def test_trace_csv_round_trip(self, tmp_path, recon_clean):
        path = tmp_path / "trace.csv"
        write_trace_csv(path, recon_clean.trace)
        back = read_trace_csv(path)
        assert back == recon_clean.trace

    def test_trace_csv_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("nope\n1,2,3,4,5,6\n")
        with pytest.raises(ParseError):
            read_trace_csv(path)

    def test_recon_directory_round_trip(self, tmp_path, recon_clean):
        out = tmp_path / "recon"
        write_recon(out, recon_clean, PipelineConfig())
        names = {p.name for p in out.iterdir()}
        assert names == {"config.json", "fused.ply", "plane.json",
                         "poses.json", "trace.csv", "trace.png"}
        pts, labels, poses = read_recon(out)
        assert np.array_equal(pts, recon_clean.fused_points)
        assert np.array_equal(labels, recon_clean.fused_labels)
        assert set(poses) == set(recon_clean.state.poses)
        for v, p in poses.items():
            assert np.allclose(p.quaternion,
                               recon_clean.state.poses[v].quaternion,
                               atol=1e-15)

    def test_evaluation_files(self, tmp_path, scene0, recon_clean):
        ev = evaluate_recon(recon_clean.fused_points, recon_clean.state.poses,
                            scene0)
        out = tmp_path / "eval"
        write_evaluation(out, ev)
        names = {p.name for p in out.iterdir()}
        assert names == {"metrics.json", "metrics.md", "metrics.png"}
        import json
        payload = json.loads((out / "metrics.json").read_text())
        assert "rotation_error_deg" in payload
        assert payload["f1"] == pytest.approx(ev.metrics.f1)

    def test_evaluate_needs_both_poses(self, scene0, recon_clean):
        with pytest.raises(ConfigError):
            evaluate_recon(recon_clean.fused_points,
                           {REAL: CameraPose.identity()}, scene0)


class TestConfig:
    def test_dict_round_trip(self):
        cfg = PipelineConfig(backbone="triangulate", noise=SCATTER,
                             noise_px=0.5, seed=9, tau=0.02, use_sym=False,
                             max_iters=37, lr=0.5, tol=1e-8,
                             plane_refresh_every=3)
        assert PipelineConfig.from_dict(cfg.to_dict()) == cfg

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            PipelineConfig.from_dict({"learning_rate": 0.1})

    def test_validation(self):
        with pytest.raises(ConfigError):
            PipelineConfig(backbone="magic")
        with pytest.raises(ConfigError):
            PipelineConfig(tau=0.0)
        with pytest.raises(ConfigError):
            PipelineConfig(noise_px=-0.1)


class TestAblation:
    def test_paired_runs_favor_symmetric_terms(self, tmp_path, scene0):
        cfg = PipelineConfig(noise=SCATTER)
        result = run_ablation([("scene0", scene0, None)], cfg, n_runs=2)
        assert len(result.runs) == 2
        assert not result.degenerate
        s = result.summary()
        assert s["mean_r_err_sym"] < s["mean_r_err_nosym"]
        assert s["mean_t_err_sym"] < s["mean_t_err_nosym"]
        out = tmp_path / "ablation"
        write_ablation(out, result)
        names = {p.name for p in out.iterdir()}
        assert names == {"ablation.csv", "ablation.json", "ablation.md",
                         "ablation.png"}

    def test_zero_pose_noise_flagged_degenerate(self, scene0):
        result = run_ablation([("scene0", scene0, None)], PipelineConfig(),
                              n_runs=1)
        assert result.degenerate

    def test_needs_scenes_and_runs(self, scene0):
        with pytest.raises(ConfigError):
            run_ablation([], PipelineConfig(), n_runs=1)
        with pytest.raises(ConfigError):
            run_ablation([("s", scene0, None)], PipelineConfig(), n_runs=0)
