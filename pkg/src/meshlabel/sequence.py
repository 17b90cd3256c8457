"""Motion sequences, temporal vertex smoothing, and adjacent-frame pairs."""

from dataclasses import dataclass

import numpy as np

from .body import BodyTemplate, PoseParams, PosedMesh, ShapeParams, skin
from .errors import ConfigError
from .render import RasterImage

SOURCE = "source"
TARGET = "target"


@dataclass(frozen=True, eq=False)
class MotionSequence:
    """Ordered pose frames of one subject, tagged with its domain."""

    thetas: np.ndarray         # (N, J, 3) axis-angle per joint
    translations: np.ndarray   # (N, 3) root offsets
    fps: float
    subject: str = ""
    domain: str = SOURCE

    def __post_init__(self):
        if self.thetas.ndim != 3 or self.thetas.shape[2] != 3 or len(self.thetas) < 1:
            raise ConfigError("thetas must be (N, J, 3) with N >= 1")
        if self.translations.shape != (len(self.thetas), 3):
            raise ConfigError("translations must be (N, 3)")
        if not (np.isfinite(self.thetas).all() and np.isfinite(self.translations).all()):
            raise ConfigError("pose sequence must be finite")
        if self.fps <= 0:
            raise ConfigError("fps must be positive")
        if self.domain not in (SOURCE, TARGET):
            raise ConfigError(f"domain must be {SOURCE!r} or {TARGET!r}")

    def __len__(self) -> int:
        return len(self.thetas)

    @property
    def joint_count(self) -> int:
        return self.thetas.shape[1]

    def frame(self, t: int) -> PoseParams:
        return PoseParams(theta=self.thetas[t], root_translation=self.translations[t])


@dataclass(frozen=True, eq=False)
class MeshSequence:
    """Posed vertex frames over one shared connectivity."""

    vertices: np.ndarray  # (N, V, 3)
    faces: np.ndarray     # (F, 3), shared by every frame

    def __post_init__(self):
        if self.vertices.ndim != 3 or self.vertices.shape[2] != 3:
            raise ConfigError("vertices must be (N, V, 3)")

    def __len__(self) -> int:
        return len(self.vertices)

    def frame(self, t: int) -> PosedMesh:
        return PosedMesh(vertices=self.vertices[t], faces=self.faces)


@dataclass(frozen=True, eq=False)
class FramePair:
    """A label image with its previous frame (all-zero at the boundary)."""

    current: RasterImage
    previous: RasterImage


def pose_sequence_to_meshes(
    template: BodyTemplate, beta: ShapeParams, seq: MotionSequence
) -> MeshSequence:
    """Skin every frame of the sequence; deterministic frame-wise map."""
    frames = [skin(template, beta, seq.frame(t)).vertices for t in range(len(seq))]
    return MeshSequence(vertices=np.stack(frames), faces=template.faces)


def smooth_vertices(seq: MeshSequence, window: int) -> MeshSequence:
    """Centered moving average of vertex positions over time.

    window must be odd, >= 1, and <= 2 * frames - 1; boundary frames use a
    truncated window renormalized over the frames that exist. window == 1
    returns the input unchanged. The average is anchored at the center
    frame (mean of differences added back), so constant sequences are
    exact fixed points.
    """
    n = len(seq)
    if window < 1 or window % 2 == 0:
        raise ConfigError(f"window must be odd and >= 1, got {window}")
    if window > 2 * n - 1:
        raise ConfigError(f"window {window} too wide for {n} frames")
    if window == 1:
        return seq

    half = (window - 1) // 2
    x = seq.vertices
    out = np.empty_like(x)
    for t in range(n):
        lo, hi = max(0, t - half), min(n - 1, t + half)
        diffs = x[lo : hi + 1] - x[t]
        out[t] = x[t] + diffs.sum(axis=0) / (hi - lo + 1)
    return MeshSequence(vertices=out, faces=seq.faces)


def smooth_pose_params(seq: MotionSequence, window: int) -> MotionSequence:
    """Moving-average variant operating on pose parameters instead of vertices.

    Off by default in the pipeline: averaging axis-angle components is only
    a heuristic, and forward kinematics will not preserve the averaging the
    way vertex-space smoothing does.
    """
    n = len(seq)
    if window < 1 or window % 2 == 0:
        raise ConfigError(f"window must be odd and >= 1, got {window}")
    if window > 2 * n - 1:
        raise ConfigError(f"window {window} too wide for {n} frames")
    if window == 1:
        return seq
    half = (window - 1) // 2
    thetas = np.empty_like(seq.thetas)
    trans = np.empty_like(seq.translations)
    for t in range(n):
        lo, hi = max(0, t - half), min(n - 1, t + half)
        count = hi - lo + 1
        thetas[t] = seq.thetas[t] + (seq.thetas[lo : hi + 1] - seq.thetas[t]).sum(axis=0) / count
        trans[t] = seq.translations[t] + (
            seq.translations[lo : hi + 1] - seq.translations[t]
        ).sum(axis=0) / count
    return MotionSequence(
        thetas=thetas, translations=trans, fps=seq.fps,
        subject=seq.subject, domain=seq.domain,
    )


def demo_motion(
    frames: int,
    fps: float = 30.0,
    joint_count: int = 21,
    subject: str = "demo",
    domain: str = SOURCE,
) -> MotionSequence:
    """Deterministic arm-wave clip for the default 21-joint skeleton.

    Useful for quickstarts and fixtures; indices 5/6 and 9/10 are the
    shoulder and elbow joints of the default template.
    """
    if joint_count < 11:
        raise ConfigError("demo motion needs the default 21-joint layout")
    t = np.arange(frames) / fps
    thetas = np.zeros((frames, joint_count, 3))
    thetas[:, 5, 2] = 0.6 * np.sin(2.0 * np.pi * 0.5 * t)    # l_shoulder swing
    thetas[:, 6, 2] = 0.8 * np.abs(np.sin(2.0 * np.pi * 1.0 * t))  # l_elbow wave
    thetas[:, 9, 2] = -0.3 * np.sin(2.0 * np.pi * 0.5 * t)   # r_shoulder counter
    thetas[:, 10, 2] = -0.4 * np.abs(np.cos(2.0 * np.pi * 0.5 * t))
    translations = np.zeros((frames, 3))
    translations[:, 1] = 0.01 * np.sin(2.0 * np.pi * 1.0 * t)  # slight bob
    return MotionSequence(
        thetas=thetas, translations=translations, fps=fps,
        subject=subject, domain=domain,
    )


def label_pairs(labels: list[RasterImage]) -> list[FramePair]:
    """Pair each label image with its predecessor; frame 0 gets all zeros."""
    if not labels:
        raise ConfigError("need at least one label image")
    pairs = []
    for t, current in enumerate(labels):
        if t == 0:
            previous = RasterImage(pixels=np.zeros_like(current.pixels))
        else:
            previous = labels[t - 1]
        pairs.append(FramePair(current=current, previous=previous))
    return pairs
