"""Deterministic software rendering of the conditioning signal.

Conventions, pinned so independent reimplementations can match bit for bit:

* Pixel (column i, row j) has its center at (i + 0.5, j + 0.5); y grows
  downward.
* The edge function is E(a, b, p) = (bx-ax)*(py-ay) - (by-ay)*(px-ax);
  triangles are wound so their doubled signed area E(v0, v1, v2) is
  positive (v1/v2 swapped otherwise).
* A pixel center on an edge (E == 0) is covered only if the edge satisfies
  the tie rule: direction d = b - a with dy > 0, or dy == 0 and dx > 0.
  Exactly one of an edge and its reverse passes, so triangles sharing an
  edge never double-fill or crack.
* Depth ties at a pixel keep the earlier triangle (strict less-than test).
* Colors interpolate barycentrically in screen space; depth interpolates
  linearly for weak-perspective cameras and via 1/z for pinhole.

No anti-aliasing, shading, or back-face culling: meshes are closed and the
z-buffer resolves orientation; the output is a conditioning signal, not a
picture.
"""

from dataclasses import dataclass, field

import numpy as np

from .body import PosedMesh
from .errors import ConfigError

WEAK_PERSPECTIVE = "weak_perspective"
PINHOLE = "pinhole"
NEAR_PLANE = 0.01  # meters; pinhole points at or behind this are clipped

# Fixed 20-color limb/joint palette (documented in docs/palette; values are
# exact eighths so files round-trip cleanly through 8-bit previews).
PALETTE = np.array(
    [
        (1.000, 0.250, 0.250), (1.000, 0.625, 0.250), (1.000, 1.000, 0.250),
        (0.625, 1.000, 0.250), (0.250, 1.000, 0.250), (0.250, 1.000, 0.625),
        (0.250, 1.000, 1.000), (0.250, 0.625, 1.000), (0.250, 0.250, 1.000),
        (0.625, 0.250, 1.000), (1.000, 0.250, 1.000), (1.000, 0.250, 0.625),
        (0.875, 0.500, 0.375), (0.375, 0.875, 0.500), (0.500, 0.375, 0.875),
        (0.875, 0.875, 0.500), (0.500, 0.875, 0.875), (0.875, 0.500, 0.875),
        (0.750, 0.750, 0.750), (0.500, 0.500, 0.500),
    ]
)


@dataclass(frozen=True, eq=False)
class Camera:
    """Rigid view transform plus a weak-perspective or pinhole projection.

    Camera space: x right, y down, z forward; a point projects from
    X_cam = rotation @ X_world + translation. Weak perspective maps
    (X, Y) to scale * (X, Y) + principal with depth Z; pinhole divides by Z
    first and scales by focal.
    """

    mode: str
    width: int
    height: int
    principal: tuple[float, float]
    scale: float | None = None   # pixels per meter (weak perspective)
    focal: float | None = None   # pixels (pinhole)
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        if self.mode not in (WEAK_PERSPECTIVE, PINHOLE):
            raise ConfigError(f"unknown camera mode {self.mode!r}")
        if self.width <= 0 or self.height <= 0:
            raise ConfigError("image size must be positive")
        if self.mode == WEAK_PERSPECTIVE and not (self.scale and self.scale > 0):
            raise ConfigError("weak-perspective camera needs scale > 0")
        if self.mode == PINHOLE and not (self.focal and self.focal > 0):
            raise ConfigError("pinhole camera needs focal > 0")

    @classmethod
    def front_view(
        cls,
        width: int,
        height: int,
        mode: str = WEAK_PERSPECTIVE,
        distance: float = 3.0,
        look_height: float = 0.85,
        scale: float | None = None,
        focal: float | None = None,
        principal: tuple[float, float] | None = None,
    ) -> "Camera":
        """Camera on the +z world axis looking back at an upright y-up body."""
        rotation = np.diag([1.0, -1.0, -1.0])
        center = np.array([0.0, look_height, distance])
        if principal is None:
            principal = (width / 2.0, height / 2.0)
        if mode == WEAK_PERSPECTIVE and scale is None:
            scale = 120.0
        if mode == PINHOLE and focal is None:
            focal = 300.0
        return cls(
            mode=mode, width=width, height=height, principal=principal,
            scale=scale, focal=focal, rotation=rotation, translation=-rotation @ center,
        )


@dataclass(eq=False)
class RasterImage:
    """Float image, (H, W, C) values in [0, 1]; optional camera-space depth.

    depth is (H, W) with +inf where no geometry was drawn.
    """

    pixels: np.ndarray
    depth: np.ndarray | None = None

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]

    @classmethod
    def blank(cls, width: int, height: int, channels: int, with_depth: bool = False):
        depth = np.full((height, width), np.inf) if with_depth else None
        return cls(pixels=np.zeros((height, width, channels)), depth=depth)


@dataclass(frozen=True, eq=False)
class SkeletonFigureSpec:
    """How to draw the 2D pose figure: limbs as colored capsules, joints as discs."""

    limbs: tuple[tuple[int, int], ...]
    limb_colors: np.ndarray           # (L, 3) in [0, 1]
    thickness: float = 4.0            # full capsule width, pixels
    joint_radius: float = 3.0

    def __post_init__(self):
        if self.thickness < 1:
            raise ConfigError("limb thickness must be >= 1 pixel")
        if len(self.limb_colors) != len(self.limbs):
            raise ConfigError("need one color per limb")


def default_skeleton_spec(joint_parents: np.ndarray) -> SkeletonFigureSpec:
    """One limb per (parent, child) bone, palette colors cycling in order."""
    limbs = tuple(
        (int(p), int(c)) for c, p in enumerate(np.asarray(joint_parents)) if p >= 0
    )
    colors = PALETTE[np.arange(len(limbs)) % len(PALETTE)]
    return SkeletonFigureSpec(limbs=limbs, limb_colors=colors)


def project_vertices(camera: Camera, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Project world points to (x_px, y_px, depth); also return the clip mask.

    Depth is camera-space Z for both modes. Pinhole points with
    Z <= NEAR_PLANE are flagged clipped and carry NaN pixel coordinates.
    """
    pts = np.asarray(points, dtype=np.float64)
    if not np.isfinite(pts).all():
        raise ValueError("points must be finite")
    cam = pts @ camera.rotation.T + camera.translation
    x, y, z = cam[:, 0], cam[:, 1], cam[:, 2]
    out = np.empty_like(cam)
    out[:, 2] = z
    if camera.mode == WEAK_PERSPECTIVE:
        out[:, 0] = camera.scale * x + camera.principal[0]
        out[:, 1] = camera.scale * y + camera.principal[1]
        clipped = np.zeros(len(pts), dtype=bool)
    else:
        clipped = z <= NEAR_PLANE
        with np.errstate(divide="ignore", invalid="ignore"):
            out[:, 0] = camera.focal * (x / z) + camera.principal[0]
            out[:, 1] = camera.focal * (y / z) + camera.principal[1]
        out[clipped, 0] = np.nan
        out[clipped, 1] = np.nan
    return out, clipped


def _tie_rule(ax: float, ay: float, bx: float, by: float) -> bool:
    """Whether edge a->b wins pixel centers that sit exactly on it."""
    dy = by - ay
    dx = bx - ax
    return dy > 0 or (dy == 0 and dx > 0)


def rasterize_mesh(mesh: PosedMesh, colors: np.ndarray, camera: Camera) -> RasterImage:
    """Z-buffered projection of the mesh with barycentric vertex colors.

    Background is black with depth +inf. Triangles touching a clipped
    vertex are dropped; off-screen geometry clips silently. Output is a
    pure function of the inputs.
    """
    colors = np.asarray(colors, dtype=np.float64)
    if colors.shape != (len(mesh.vertices), 3):
        raise ConfigError("colors must be (V, 3) matching the mesh")
    img = RasterImage.blank(camera.width, camera.height, 3, with_depth=True)
    coords, clipped = project_vertices(camera, mesh.vertices)
    perspective = camera.mode == PINHOLE
    for i0, i1, i2 in np.asarray(mesh.faces):
        if clipped[i0] or clipped[i1] or clipped[i2]:
            continue
        _fill_triangle(
            img.pixels, img.depth,
            coords[i0], coords[i1], coords[i2],
            colors[i0], colors[i1], colors[i2],
            perspective,
        )
    return img


def _fill_triangle(pixels, depthbuf, p0, p1, p2, c0, c1, c2, perspective):
    x0, y0, z0 = p0
    x1, y1, z1 = p1
    x2, y2, z2 = p2
    area2 = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)
    if area2 == 0.0:
        return
    if area2 < 0.0:
        x1, y1, z1, c1, x2, y2, z2, c2 = x2, y2, z2, c2, x1, y1, z1, c1
        area2 = -area2

    height, width = depthbuf.shape
    # Pad the bound by one pixel so boundary rounding can never drop a
    # center that the coverage test would accept.
    lo_i = max(0, int(np.ceil(min(x0, x1, x2) - 0.5)) - 1)
    hi_i = min(width - 1, int(np.floor(max(x0, x1, x2) - 0.5)) + 1)
    lo_j = max(0, int(np.ceil(min(y0, y1, y2) - 0.5)) - 1)
    hi_j = min(height - 1, int(np.floor(max(y0, y1, y2) - 0.5)) + 1)
    if hi_i < lo_i or hi_j < lo_j:
        return

    px = np.arange(lo_i, hi_i + 1) + 0.5
    py = (np.arange(lo_j, hi_j + 1) + 0.5)[:, None]
    w0 = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)
    w1 = (x0 - x2) * (py - y2) - (y0 - y2) * (px - x2)
    w2 = (x1 - x0) * (py - y0) - (y1 - y0) * (px - x0)
    cover = (
        ((w0 > 0) | ((w0 == 0) & _tie_rule(x1, y1, x2, y2)))
        & ((w1 > 0) | ((w1 == 0) & _tie_rule(x2, y2, x0, y0)))
        & ((w2 > 0) | ((w2 == 0) & _tie_rule(x0, y0, x1, y1)))
    )
    if not cover.any():
        return

    b0 = w0 / area2
    b1 = w1 / area2
    b2 = w2 / area2
    if perspective:
        z = 1.0 / (b0 / z0 + b1 / z1 + b2 / z2)
    else:
        z = b0 * z0 + b1 * z1 + b2 * z2

    window = depthbuf[lo_j : hi_j + 1, lo_i : hi_i + 1]
    win = cover & (z < window)
    if not win.any():
        return
    color = np.clip(b0[..., None] * c0 + b1[..., None] * c1 + b2[..., None] * c2, 0.0, 1.0)
    window[win] = z[win]
    pixels[lo_j : hi_j + 1, lo_i : hi_i + 1][win] = color[win]


def render_skeleton(
    joints2d: np.ndarray, spec: SkeletonFigureSpec, width: int, height: int
) -> RasterImage:
    """Draw the pose figure: capsule limbs in list order, joint discs on top.

    joints2d is the (J, 3) output of project_vertices; rows with
    non-finite pixel coordinates (clipped joints) are skipped, as are
    limbs touching them. A pixel belongs to a capsule when its center is
    within thickness/2 of the segment (boundary inclusive).
    """
    joints2d = np.asarray(joints2d, dtype=np.float64)
    img = RasterImage.blank(width, height, 3)
    ok = np.isfinite(joints2d[:, 0]) & np.isfinite(joints2d[:, 1])
    for (a, b), color in zip(spec.limbs, spec.limb_colors):
        if not (ok[a] and ok[b]):
            continue
        _fill_capsule(img.pixels, joints2d[a, :2], joints2d[b, :2],
                      spec.thickness / 2.0, color)
    for j in range(len(joints2d)):
        if not ok[j]:
            continue
        _fill_capsule(img.pixels, joints2d[j, :2], joints2d[j, :2],
                      spec.joint_radius, PALETTE[j % len(PALETTE)])
    return img


def _fill_capsule(pixels, a, b, radius, color):
    height, width = pixels.shape[:2]
    lo_i = max(0, int(np.floor(min(a[0], b[0]) - radius - 0.5)))
    hi_i = min(width - 1, int(np.ceil(max(a[0], b[0]) + radius - 0.5)))
    lo_j = max(0, int(np.floor(min(a[1], b[1]) - radius - 0.5)))
    hi_j = min(height - 1, int(np.ceil(max(a[1], b[1]) + radius - 0.5)))
    if hi_i < lo_i or hi_j < lo_j:
        return
    px = np.arange(lo_i, hi_i + 1) + 0.5
    py = (np.arange(lo_j, hi_j + 1) + 0.5)[:, None]
    ab = (b[0] - a[0], b[1] - a[1])
    denom = ab[0] * ab[0] + ab[1] * ab[1]
    if denom == 0.0:
        dx = px - a[0]
        dy = py - a[1]
    else:
        t = np.clip(((px - a[0]) * ab[0] + (py - a[1]) * ab[1]) / denom, 0.0, 1.0)
        dx = px - (a[0] + t * ab[0])
        dy = py - (a[1] + t * ab[1])
    mask = dx * dx + dy * dy <= radius * radius
    pixels[lo_j : hi_j + 1, lo_i : hi_i + 1][mask] = color


def make_label_image(mesh_img: RasterImage, pose_img: RasterImage) -> RasterImage:
    """Concatenate the mesh projection (channels 0-2) and pose figure (3-5)."""
    if mesh_img.pixels.shape != pose_img.pixels.shape:
        raise ConfigError(
            f"size mismatch: {mesh_img.pixels.shape} vs {pose_img.pixels.shape}"
        )
    if mesh_img.channels != 3:
        raise ConfigError("label halves must each have 3 channels")
    return RasterImage(
        pixels=np.concatenate([mesh_img.pixels, pose_img.pixels], axis=2),
        depth=mesh_img.depth,
    )
