"""Mirror-based single-view stereo: geometry, alignment, and pipeline.

A mirror in the field of view turns one image into a calibrated two-view
stereo problem: the mirror induces a virtual camera whose image is the
horizontally flipped mirror content.  This package builds that virtual
view, estimates the mirror plane from masked pointmaps, reconstructs
geometry with either a triangulation or a simulated backbone, and refines
real/virtual poses jointly under a symmetry-aware loss, all verified on
procedurally generated scenes with exact ground truth.
"""

from .alignment import (
    EdgeParams,
    GlobalState,
    LossBreakdown,
    LossWeights,
    OptimizeConfig,
    TraceRow,
    optimize,
    pairwise_loss,
    reflected_pose,
    reflected_quat,
    rot_loss,
    symmetry_residual,
    total_loss,
    total_loss_grad,
    trans_loss,
)
from .backbone import (
    Correspondence,
    NoiseModel,
    PairPrediction,
    PointMap,
    read_prediction,
    simulate_backbone,
    triangulate,
    triangulate_pair,
    write_prediction,
)
from .errors import (
    BehindCamera,
    ConfigError,
    DegenerateCloud,
    EmptyCloud,
    EmptyInput,
    EmptyVideo,
    FrameError,
    IllConditioned,
    InvalidPlane,
    InvalidTransform,
    MirrorStereoError,
    NoVirtualViews,
    NumericalFailure,
    ParseError,
    PlacementFailure,
    PlaneUnavailable,
    ShapeError,
    TooFewPoints,
    UnknownView,
)
from .geometry import (
    WORLD,
    CameraPose,
    FrameTag,
    ImageGrid,
    Intrinsics,
    MirrorPlane,
    ReflectionTransform,
    RigidTransform,
    change_frame,
    flip_equivalence_residual,
    flip_view,
    look_at,
    make_reflection,
    plane_to_camera,
    plane_to_world,
    project,
    project_points,
    reflect_points,
    virtual_camera,
)
from .metrics import (
    DEFAULT_TAU,
    MetricsReport,
    PoseError,
    accuracy,
    chamfer,
    completeness,
    evaluate_clouds,
    f1,
    nearest_distances,
    pose_errors,
    register_virtual,
)
from .pairgraph import PairGraph, ViewId, build_static, build_video
from .pipeline import (
    EvalResult,
    PipelineConfig,
    ReconResult,
    evaluate_recon,
    fuse_cloud,
    initial_state,
    reconstruct,
    run_ablation,
)
from .planefit import MaskedCloud, estimate_plane, plane_residual
from .scenegen import (
    Box,
    MirrorRect,
    SceneGroundTruth,
    SceneSpec,
    Sphere,
    Wall,
    bench16_specs,
    bench_spec,
    export_scene,
    generate,
    import_scene,
    render_observations,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
