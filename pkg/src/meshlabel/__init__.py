"""meshlabel: body-mesh label images for GAN conditioning.

A procedural parametric humanoid (shape blendshapes + linear blend
skinning) is colored by its three lowest non-trivial Laplacian
eigenfunctions, projected with a z-buffer, and combined with a rendered
2D skeleton into 6-channel label images. Around that core: temporal
smoothing, adjacent-frame pairing, cross-domain alignment and blending,
reference GAN objectives, and SSIM evaluation, all deterministic and
file-format stable.
"""

from .body import (
    BodyTemplate, PoseParams, PosedMesh, ShapeParams, TemplateConfig,
    apply_shape, build_template, joint_positions, recombine, skin,
)
from .errors import (
    ConfigError, ConvergenceError, DataError, MeshLabelError, MeshTopologyError,
)
from .intrinsic import (
    EigenBasis, cotangent_laplacian, eigvecs_to_colors,
    smallest_nontrivial_eigvecs, subject_colors,
)
from .metrics import SsimConfig, pixel_l1, ssim
from .objectives import (
    FeatureStack, LossWeights, ScoreBatch, de_full_objective,
    feature_matching, gan_objective, mt_full_objective, perceptual_l1,
    sum_over_scales,
)
from .render import (
    Camera, RasterImage, SkeletonFigureSpec, default_skeleton_spec,
    make_label_image, project_vertices, rasterize_mesh, render_skeleton,
)
from .sequence import (
    FramePair, MeshSequence, MotionSequence, demo_motion, label_pairs,
    pose_sequence_to_meshes, smooth_pose_params, smooth_vertices,
)
from .transfer import (
    PairingPlan, PairRecord, SimilarityTransform2D, aggregate_alignment,
    blend_mean, compute_alignment, make_pairing_plan, warp_image,
)

__version__ = "0.1.0"

__all__ = [
    "BodyTemplate", "Camera", "ConfigError", "ConvergenceError", "DataError",
    "EigenBasis", "FeatureStack", "FramePair", "LossWeights", "MeshLabelError",
    "MeshSequence", "MeshTopologyError", "MotionSequence", "PairRecord",
    "PairingPlan", "PoseParams", "PosedMesh", "RasterImage", "ScoreBatch",
    "ShapeParams", "SimilarityTransform2D", "SkeletonFigureSpec", "SsimConfig",
    "TemplateConfig", "aggregate_alignment", "apply_shape", "blend_mean",
    "build_template", "compute_alignment", "cotangent_laplacian",
    "de_full_objective", "default_skeleton_spec", "demo_motion",
    "eigvecs_to_colors", "feature_matching", "gan_objective", "joint_positions",
    "label_pairs", "make_label_image", "make_pairing_plan", "mt_full_objective",
    "perceptual_l1", "pixel_l1", "pose_sequence_to_meshes", "project_vertices",
    "rasterize_mesh", "recombine", "render_skeleton", "skin",
    "smallest_nontrivial_eigvecs", "smooth_pose_params", "smooth_vertices",
    "ssim", "subject_colors", "sum_over_scales", "warp_image",
]
