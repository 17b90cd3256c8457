"""Cross-domain data preparation: alignment, blending, and pairing plans.

Subjects filmed at different distances or with different builds do not
overlap in the image plane; the aligning transform rescales and shifts the
source-shaped rendering so its projected bounding box matches the
target-shaped one. Blending is the plain per-pixel mean the detail stage
consumes. Pairing plans encode which appearance frame accompanies which
pose frame at each stage, including the domain swap between supervised
training and actual transfer.
"""

import random
from dataclasses import dataclass

import numpy as np

from .body import PosedMesh
from .errors import ConfigError, DataError
from .render import Camera, RasterImage, project_vertices

PRETRAIN_MT = "pretrain-mt"
TRAIN_DE = "train-de"
TRANSFER = "transfer"
STAGES = (PRETRAIN_MT, TRAIN_DE, TRANSFER)

ROLE_RECONSTRUCTION = "reconstruction"
ROLE_TRANSFER = "transfer"


@dataclass(frozen=True)
class SimilarityTransform2D:
    """p -> scale * p + (tx, ty) in pixel coordinates."""

    scale: float
    tx: float
    ty: float

    def __post_init__(self):
        if not (self.scale > 0 and np.isfinite(self.scale)):
            raise ConfigError(f"scale must be positive and finite, got {self.scale}")

    def apply(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=np.float64) * self.scale + (self.tx, self.ty)

    def inverse(self) -> "SimilarityTransform2D":
        return SimilarityTransform2D(
            scale=1.0 / self.scale, tx=-self.tx / self.scale, ty=-self.ty / self.scale
        )

    @classmethod
    def identity(cls) -> "SimilarityTransform2D":
        return cls(scale=1.0, tx=0.0, ty=0.0)


@dataclass(frozen=True)
class PairRecord:
    appearance_id: str
    appearance_domain: str
    pose_id: str
    pose_domain: str
    role: str
    ground_truth_id: str | None = None


@dataclass(frozen=True)
class PairingPlan:
    stage: str
    seed: int
    records: tuple[PairRecord, ...]


def _projected_bbox(mesh: PosedMesh, camera: Camera) -> tuple[float, float, float, float]:
    coords, clipped = project_vertices(camera, mesh.vertices)
    visible = coords[~clipped]
    if len(visible) == 0:
        raise DataError("mesh is entirely clipped; no projected extent")
    xs, ys = visible[:, 0], visible[:, 1]
    return float(xs.min()), float(xs.max()), float(ys.min()), float(ys.max())


def compute_alignment(
    source_mesh: PosedMesh, target_mesh: PosedMesh, camera: Camera
) -> SimilarityTransform2D:
    """Similarity transform taking the source projection onto the target's.

    Scale is the ratio of projected bounding-box heights; the translation
    maps the source box's bottom-center (stable under arm raises) onto the
    target's after scaling.
    """
    sx0, sx1, sy0, sy1 = _projected_bbox(source_mesh, camera)
    tx0, tx1, ty0, ty1 = _projected_bbox(target_mesh, camera)
    source_height = sy1 - sy0
    if source_height < 1.0:
        raise DataError(f"source projected bbox height {source_height:.3g}px is degenerate")
    scale = (ty1 - ty0) / source_height
    source_anchor = ((sx0 + sx1) / 2.0, sy1)
    target_anchor = ((tx0 + tx1) / 2.0, ty1)
    return SimilarityTransform2D(
        scale=scale,
        tx=target_anchor[0] - scale * source_anchor[0],
        ty=target_anchor[1] - scale * source_anchor[1],
    )


def aggregate_alignment(transforms: list[SimilarityTransform2D]) -> SimilarityTransform2D:
    """Per-video alignment: componentwise median of per-frame transforms."""
    if not transforms:
        raise DataError("no transforms to aggregate")
    return SimilarityTransform2D(
        scale=float(np.median([t.scale for t in transforms])),
        tx=float(np.median([t.tx for t in transforms])),
        ty=float(np.median([t.ty for t in transforms])),
    )


def warp_image(img: RasterImage, transform: SimilarityTransform2D) -> RasterImage:
    """Resample the image under the transform (inverse-mapped bilinear).

    Output pixel centers pull from the source location (q - t) / s;
    samples outside the image read as black. Output keeps the input size.
    The identity transform reproduces the input bit-exactly, as does any
    pure integer translation.
    """
    pixels = img.pixels
    height, width = pixels.shape[:2]
    cols = np.arange(width) + 0.5
    rows = (np.arange(height) + 0.5)[:, None]
    u = (cols - transform.tx) / transform.scale - 0.5
    v = (rows - transform.ty) / transform.scale - 0.5
    u = np.broadcast_to(u, (height, width))
    v = np.broadcast_to(v, (height, width))

    u0 = np.floor(u).astype(np.int64)
    v0 = np.floor(v).astype(np.int64)
    fu = u - u0
    fv = v - v0

    def sample(vi, ui):
        inside = (ui >= 0) & (ui < width) & (vi >= 0) & (vi < height)
        out = np.zeros(pixels.shape)
        safe_v = np.clip(vi, 0, height - 1)
        safe_u = np.clip(ui, 0, width - 1)
        out[inside] = pixels[safe_v[inside], safe_u[inside]]
        return out

    w00 = ((1.0 - fv) * (1.0 - fu))[..., None]
    w01 = ((1.0 - fv) * fu)[..., None]
    w10 = (fv * (1.0 - fu))[..., None]
    w11 = (fv * fu)[..., None]
    out = (
        w00 * sample(v0, u0)
        + w01 * sample(v0, u0 + 1)
        + w10 * sample(v0 + 1, u0)
        + w11 * sample(v0 + 1, u0 + 1)
    )
    return RasterImage(pixels=out)


def blend_mean(a: RasterImage, b: RasterImage) -> RasterImage:
    """Per-pixel, per-channel arithmetic mean of two same-shape images."""
    if a.pixels.shape != b.pixels.shape:
        raise DataError(f"shape mismatch: {a.pixels.shape} vs {b.pixels.shape}")
    return RasterImage(pixels=(a.pixels + b.pixels) / 2.0)


def make_pairing_plan(
    stage: str, source_ids: list[str], target_ids: list[str], seed: int
) -> PairingPlan:
    """Deterministic appearance/pose pairing for one stage.

    pretrain-mt: within each domain, one appearance frame is drawn by seed
    and fixed; every pose frame of the domain pairs with it (supervised,
    ground truth is the pose frame itself).
    train-de: appearance from the source domain, pose from the target; the
    expected output reconstructs the target pose frame, which is available
    as ground truth.
    transfer: the exact domain swap of train-de (appearance from target,
    pose from source); no ground truth exists.
    """
    if stage not in STAGES:
        raise ConfigError(f"unknown stage {stage!r}; expected one of {STAGES}")
    if not source_ids:
        raise ConfigError("source domain is empty")
    if not target_ids:
        raise ConfigError("target domain is empty")
    rng = random.Random(seed)
    records: list[PairRecord] = []

    if stage == PRETRAIN_MT:
        for domain, ids in (("source", source_ids), ("target", target_ids)):
            appearance = rng.choice(ids)
            for pose in ids:
                records.append(
                    PairRecord(appearance, domain, pose, domain,
                               ROLE_RECONSTRUCTION, ground_truth_id=pose)
                )
    elif stage == TRAIN_DE:
        appearance = rng.choice(source_ids)
        for pose in target_ids:
            records.append(
                PairRecord(appearance, "source", pose, "target",
                           ROLE_RECONSTRUCTION, ground_truth_id=pose)
            )
    else:  # TRANSFER: domains swapped relative to TRAIN_DE
        appearance = rng.choice(target_ids)
        for pose in source_ids:
            records.append(
                PairRecord(appearance, "target", pose, "source",
                           ROLE_TRANSFER, ground_truth_id=None)
            )

    return PairingPlan(stage=stage, seed=seed, records=tuple(records))
