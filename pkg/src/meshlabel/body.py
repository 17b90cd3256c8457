"""Procedural parametric humanoid: blendshapes, forward kinematics, skinning.

The template is a closed genus-0 quad-modeled body (torso box with extruded
head, mitten arms, and legs, Loop-subdivided), a 21-joint skeleton, smooth
distance-based skin weights, and K linear shape displacement fields. Shape
coefficients deform the surface only; joint locations are shape-independent,
which keeps forward kinematics a function of pose alone.

All operations are pure: they never mutate their inputs and never change
mesh connectivity.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, MeshTopologyError
from .mesh import QuadSurface, euler_characteristic, subdivide_loop, validate_closed_manifold
from .rotations import axis_angles_to_matrices

JOINT_NAMES = (
    "pelvis", "spine", "chest", "neck", "head",
    "l_shoulder", "l_elbow", "l_wrist", "l_hand",
    "r_shoulder", "r_elbow", "r_wrist", "r_hand",
    "l_hip", "l_knee", "l_ankle", "l_foot",
    "r_hip", "r_knee", "r_ankle", "r_foot",
)

SHAPE_DIR_GENERATORS = ("stature", "bulk")


@dataclass(frozen=True)
class TemplateConfig:
    """Parameters of the procedural humanoid.

    height is the nominal body height in meters; subdivision counts Loop
    rounds applied to the box model (each quadruples the face count);
    torso_segments sets the vertical quad rows of the torso box; arm_scale
    and leg_scale stretch limb segment lengths; shape_dirs names the
    blendshape generators ("stature" lifts vertices proportionally to their
    height, "bulk" pushes them away from the vertical axis).
    """

    height: float = 1.70
    subdivision: int = 2
    torso_segments: int = 3
    arm_scale: float = 1.0
    leg_scale: float = 1.0
    shape_dirs: tuple[str, ...] = ("stature", "bulk")

    def validate(self) -> None:
        if not (self.height > 0 and np.isfinite(self.height)):
            raise ConfigError(f"height must be positive, got {self.height}")
        if self.subdivision < 0:
            raise ConfigError("subdivision must be >= 0")
        if self.torso_segments < 2:
            raise ConfigError("torso_segments must be >= 2")
        if self.arm_scale <= 0 or self.leg_scale <= 0:
            raise ConfigError("arm_scale and leg_scale must be positive")
        for name in self.shape_dirs:
            if name not in SHAPE_DIR_GENERATORS:
                raise ConfigError(
                    f"unknown shape direction {name!r}; known: {SHAPE_DIR_GENERATORS}"
                )


@dataclass(frozen=True, eq=False)
class BodyTemplate:
    """Rest-pose mesh, skeleton, skin weights, and shape blendshapes."""

    rest_vertices: np.ndarray        # (V, 3) meters
    faces: np.ndarray                # (F, 3) vertex indices
    joints_rest: np.ndarray          # (J, 3) meters
    joint_parents: np.ndarray        # (J,) parent index, -1 for the root
    skin_weights: np.ndarray         # (V, J), non-negative, rows sum to 1
    shape_dirs: np.ndarray           # (K, V, 3) displacement fields
    joint_names: tuple[str, ...] = ()

    def __post_init__(self):
        v, j = len(self.rest_vertices), len(self.joints_rest)
        if self.faces.size and self.faces.max() >= v:
            raise ConfigError("face index exceeds vertex count")
        if self.skin_weights.shape != (v, j):
            raise ConfigError("skin_weights must be (V, J)")
        if (self.skin_weights < 0).any():
            raise ConfigError("skin weights must be non-negative")
        if np.abs(self.skin_weights.sum(axis=1) - 1.0).max() > 1e-6:
            raise ConfigError("skin weights must sum to 1 per vertex")
        if self.shape_dirs.ndim != 3 or self.shape_dirs.shape[1:] != (v, 3):
            raise ConfigError("shape_dirs must be (K, V, 3)")
        roots = np.nonzero(self.joint_parents < 0)[0]
        if len(roots) != 1:
            raise ConfigError(f"joint tree needs exactly one root, found {len(roots)}")
        for start in range(j):
            seen, p = set(), start
            while p >= 0:
                if p in seen:
                    raise ConfigError("joint_parents contains a cycle")
                seen.add(p)
                p = int(self.joint_parents[p])

    @property
    def vertex_count(self) -> int:
        return len(self.rest_vertices)

    @property
    def joint_count(self) -> int:
        return len(self.joints_rest)

    @property
    def shape_dim(self) -> int:
        return len(self.shape_dirs)

    @property
    def root_joint(self) -> int:
        return int(np.nonzero(self.joint_parents < 0)[0][0])


@dataclass(frozen=True, eq=False)
class ShapeParams:
    beta: np.ndarray  # (K,)

    def __post_init__(self):
        if not np.isfinite(self.beta).all():
            raise ConfigError("beta must be finite")

    @classmethod
    def zeros(cls, k: int) -> "ShapeParams":
        return cls(np.zeros(k))


@dataclass(frozen=True, eq=False)
class PoseParams:
    theta: np.ndarray                                   # (J, 3) axis-angle
    root_translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        if not (np.isfinite(self.theta).all() and np.isfinite(self.root_translation).all()):
            raise ConfigError("pose parameters must be finite")

    @classmethod
    def rest(cls, joint_count: int) -> "PoseParams":
        return cls(np.zeros((joint_count, 3)))


@dataclass(frozen=True, eq=False)
class PosedMesh:
    """Deformed vertices over the template's connectivity (shared, not copied)."""

    vertices: np.ndarray
    faces: np.ndarray


def _point_segment_distances(points: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distances from each point (V, 3) to the segment a-b."""
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return np.linalg.norm(points - a, axis=1)
    t = np.clip((points - a) @ ab / denom, 0.0, 1.0)
    closest = a + t[:, None] * ab
    return np.linalg.norm(points - closest, axis=1)


def _skin_weights(
    vertices: np.ndarray,
    joints: np.ndarray,
    parents: np.ndarray,
    smoothing_radius: float,
) -> np.ndarray:
    """Blend the two nearest bones with an inverse-quartic falloff.

    A joint's bones are the segments to each of its children; leaf joints
    carry no bone (tip joints such as hands and feet act as anchors only).
    Mid-limb vertices come out effectively rigid, junction vertices blended.
    """
    nj = len(joints)
    dist = np.full((len(vertices), nj), np.inf)
    for child in range(nj):
        parent = int(parents[child])
        if parent < 0:
            continue
        d = _point_segment_distances(vertices, joints[parent], joints[child])
        dist[:, parent] = np.minimum(dist[:, parent], d)

    order = np.argsort(dist, axis=1, kind="stable")[:, :2]
    weights = np.zeros((len(vertices), nj))
    rows = np.arange(len(vertices))
    picked = dist[rows[:, None], order]
    w = 1.0 / (picked**4 + smoothing_radius**4)
    w /= w.sum(axis=1, keepdims=True)
    weights[rows[:, None], order] = w
    return weights


def build_template(config: TemplateConfig = TemplateConfig()) -> BodyTemplate:
    """Build the procedural humanoid described by ``config``.

    Deterministic for a fixed config. Raises MeshTopologyError if the
    modeling sequence produced invalid geometry (it cannot for valid
    configs, but imported or future geometry goes through the same gate).
    """
    config.validate()
    h = config.height

    torso_w, torso_d = 0.24 * h, 0.12 * h
    torso_bottom, torso_top = 0.50 * h, 0.77 * h

    surf = QuadSurface()
    surf.add_box(
        center=(0.0, 0.5 * (torso_bottom + torso_top), 0.0),
        size=(torso_w, torso_top - torso_bottom, torso_d),
        segments=(3, config.torso_segments, 1),
    )

    # Neck and head chain from the top-center cell.
    cap = surf.face_nearest((0.0, torso_top, 0.0))
    cap = surf.extrude(cap, (0.0, 0.04 * h, 0.0), scale=0.45)
    cap = surf.extrude(cap, (0.0, 0.02 * h, 0.0), scale=2.6)
    cap = surf.extrude(cap, (0.0, 0.14 * h, 0.0), scale=1.0)
    surf.extrude(cap, (0.0, 0.03 * h, 0.0), scale=0.55)

    # Arms from the top cell of each side, straight out (T-pose).
    upper_len = 0.14 * h * config.arm_scale
    fore_len = 0.14 * h * config.arm_scale
    hand_len = 0.08 * h * config.arm_scale
    row_h = (torso_top - torso_bottom) / config.torso_segments
    arm_anchor = {}
    for sign in (+1, -1):
        fid = surf.face_nearest((sign * 0.5 * torso_w, torso_top - 0.5 * row_h, 0.0))
        arm_anchor[sign] = surf.face_centroid(fid)
        fid = surf.extrude(fid, (sign * upper_len, 0.0, 0.0), scale=0.75)
        fid = surf.extrude(fid, (sign * fore_len, 0.0, 0.0), scale=0.85)
        surf.extrude(fid, (sign * hand_len, 0.0, 0.0), scale=0.9)

    # Legs from the outer cells of the bottom face.
    thigh_len = 0.22 * h * config.leg_scale
    shin_len = 0.24 * h * config.leg_scale
    foot_drop, foot_reach = 0.04 * h, 0.05 * h
    leg_anchor = {}
    for sign in (+1, -1):
        fid = surf.face_nearest((sign * torso_w / 3.0, torso_bottom, 0.0))
        leg_anchor[sign] = surf.face_centroid(fid)
        fid = surf.extrude(fid, (0.0, -thigh_len, 0.0), scale=0.8)
        fid = surf.extrude(fid, (0.0, -shin_len, 0.0), scale=0.8)
        surf.extrude(fid, (0.0, -foot_drop, foot_reach), scale=1.0)

    vertices, faces = surf.triangulate()
    for _ in range(config.subdivision):
        vertices, faces = subdivide_loop(vertices, faces)

    validate_closed_manifold(vertices, faces)
    if euler_characteristic(vertices, faces) != 2:
        raise MeshTopologyError("template is not genus 0")

    joints, parents = _skeleton(h, arm_anchor, leg_anchor, upper_len, fore_len,
                                hand_len, thigh_len, shin_len, foot_drop, foot_reach,
                                torso_bottom)
    weights = _skin_weights(vertices, joints, parents, smoothing_radius=0.02 * h)
    dirs = np.stack([_shape_dir(name, vertices) for name in config.shape_dirs]) \
        if config.shape_dirs else np.zeros((0, len(vertices), 3))

    return BodyTemplate(
        rest_vertices=vertices,
        faces=faces,
        joints_rest=joints,
        joint_parents=parents,
        skin_weights=weights,
        shape_dirs=dirs,
        joint_names=JOINT_NAMES,
    )


def _skeleton(h, arm_anchor, leg_anchor, upper_len, fore_len, hand_len,
              thigh_len, shin_len, foot_drop, foot_reach, torso_bottom):
    def arm(sign):
        sx, sy, _ = arm_anchor[sign]
        reach = np.cumsum([0.0, upper_len, fore_len, hand_len])
        return [(sx + sign * r, sy, 0.0) for r in reach]

    def leg(sign):
        lx = leg_anchor[sign][0]
        knee_y = torso_bottom - thigh_len
        ankle_y = knee_y - shin_len
        return [
            (lx, torso_bottom, 0.0),
            (lx, knee_y, 0.0),
            (lx, ankle_y, 0.0),
            (lx, ankle_y - foot_drop, foot_reach),
        ]

    joints = np.array(
        [
            (0.0, 0.52 * h, 0.0),   # pelvis
            (0.0, 0.62 * h, 0.0),   # spine
            (0.0, 0.72 * h, 0.0),   # chest
            (0.0, 0.79 * h, 0.0),   # neck
            (0.0, 0.90 * h, 0.0),   # head
            *arm(+1), *arm(-1), *leg(+1), *leg(-1),
        ],
        dtype=np.float64,
    )
    parents = np.array(
        [-1, 0, 1, 2, 3,
         2, 5, 6, 7,
         2, 9, 10, 11,
         0, 13, 14, 15,
         0, 17, 18, 19],
        dtype=np.int64,
    )
    return joints, parents


def _shape_dir(name: str, vertices: np.ndarray) -> np.ndarray:
    if name == "stature":
        lift = vertices[:, 1] - vertices[:, 1].min()
        d = np.zeros_like(vertices)
        d[:, 1] = 0.1 * lift
        return d
    if name == "bulk":
        d = vertices * np.array([0.1, 0.0, 0.1])
        return d
    raise ConfigError(f"unknown shape direction {name!r}")


def apply_shape(template: BodyTemplate, beta: ShapeParams) -> PosedMesh:
    """Rest vertices plus the beta-weighted sum of blendshape displacements."""
    if len(beta.beta) != template.shape_dim:
        raise ConfigError(
            f"beta has {len(beta.beta)} coefficients, template expects {template.shape_dim}"
        )
    vertices = template.rest_vertices + np.einsum(
        "k,kvd->vd", np.asarray(beta.beta, dtype=np.float64), template.shape_dirs
    )
    return PosedMesh(vertices=vertices, faces=template.faces)


def _fk_world_transforms(template: BodyTemplate, theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """World rotation (J, 3, 3) and joint position (J, 3) per joint.

    Local frames are world-aligned at rest; rotations compose parent to
    child; each joint's offset is its rest position relative to its parent.
    """
    local = axis_angles_to_matrices(theta)
    nj = template.joint_count
    rot = np.empty((nj, 3, 3))
    pos = np.empty((nj, 3))
    # joint_parents is topologically ordered by construction; walk in order
    # but tolerate arbitrary order by resolving parents already computed.
    pending = list(range(nj))
    done = np.zeros(nj, dtype=bool)
    while pending:
        remaining = []
        for j in pending:
            p = int(template.joint_parents[j])
            if p < 0:
                rot[j] = local[j]
                pos[j] = template.joints_rest[j]
                done[j] = True
            elif done[p]:
                offset = template.joints_rest[j] - template.joints_rest[p]
                rot[j] = rot[p] @ local[j]
                pos[j] = rot[p] @ offset + pos[p]
                done[j] = True
            else:
                remaining.append(j)
        pending = remaining
    return rot, pos


def skin(template: BodyTemplate, beta: ShapeParams, theta: PoseParams) -> PosedMesh:
    """Linear blend skinning of the shaped mesh under the posed skeleton."""
    if theta.theta.shape != (template.joint_count, 3):
        raise ConfigError(
            f"theta has shape {theta.theta.shape}, template expects ({template.joint_count}, 3)"
        )
    shaped = apply_shape(template, beta).vertices
    rot, pos = _fk_world_transforms(template, theta.theta)
    # Per-joint skinning transform maps a rest-space point x to
    # rot @ (x - joint_rest) + joint_pos; blend those affinely.
    trans = pos - np.einsum("jab,jb->ja", rot, template.joints_rest)
    w = template.skin_weights
    blended_rot = np.einsum("vj,jab->vab", w, rot)
    blended_trans = w @ trans
    vertices = np.einsum("vab,vb->va", blended_rot, shaped) + blended_trans
    vertices = vertices + theta.root_translation
    return PosedMesh(vertices=vertices, faces=template.faces)


def recombine(
    template: BodyTemplate, beta_target: ShapeParams, theta_source: PoseParams
) -> PosedMesh:
    """Cross-domain recombination: target shape driven by source pose.

    Equal to skin(template, beta_target, theta_source) by construction of
    the parametric model.
    """
    return skin(template, beta_target, theta_source)


def joint_positions(
    template: BodyTemplate, beta: ShapeParams, theta: PoseParams
) -> np.ndarray:
    """World joint positions (J, 3) under the pose; shape leaves joints fixed."""
    if len(beta.beta) != template.shape_dim:
        raise ConfigError("beta dimension mismatch")
    _, pos = _fk_world_transforms(template, theta.theta)
    return pos + theta.root_translation
