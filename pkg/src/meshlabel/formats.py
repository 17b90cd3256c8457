"""On-disk interchange formats.

Text formats (OBJ, BTPL/1, MSEQ/1, PAIR/1) write floats with Python's
shortest round-trip repr, so write -> read -> write is byte-identical.
Binary formats (EIGB/1, LBL1) are little-endian with fixed dtypes. Each
format has a one-page description under docs/formats/.
"""

import struct
from pathlib import Path

import numpy as np
from PIL import Image

from .body import BodyTemplate
from .errors import DataError
from .render import RasterImage
from .sequence import MotionSequence
from .transfer import PairingPlan, PairRecord


def _fmt(x: float) -> str:
    return repr(float(x))


def _token(value: str, what: str) -> str:
    value = str(value)
    if not value or any(c.isspace() for c in value):
        raise DataError(f"{what} must be a non-empty token without whitespace: {value!r}")
    return value


def _expect(line: str, prefix: str, path) -> list[str]:
    parts = line.split()
    if not parts or parts[0] != prefix:
        raise DataError(f"{path}: expected {prefix!r}, got {line!r}")
    return parts[1:]


# ---------------------------------------------------------------------------
# OBJ geometry
# ---------------------------------------------------------------------------

def write_obj(path, vertices: np.ndarray, faces: np.ndarray) -> None:
    lines = [f"v {_fmt(x)} {_fmt(y)} {_fmt(z)}" for x, y, z in vertices]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in faces]
    Path(path).write_text("\n".join(lines) + "\n")


def read_obj(path) -> tuple[np.ndarray, np.ndarray]:
    """Triangle OBJ reader: v/f records only, 1-based indices, v/vt/vn splits allowed."""
    vertices, faces = [], []
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "v":
            if len(parts) < 4:
                raise DataError(f"{path}: malformed vertex line {raw!r}")
            vertices.append([float(parts[1]), float(parts[2]), float(parts[3])])
        elif parts[0] == "f":
            ids = [int(p.split("/")[0]) for p in parts[1:]]
            if len(ids) != 3:
                raise DataError(f"{path}: only triangle faces are supported, got {raw!r}")
            faces.append([i - 1 for i in ids])
    if not vertices or not faces:
        raise DataError(f"{path}: no geometry found")
    return np.array(vertices, dtype=np.float64), np.array(faces, dtype=np.int64)


# ---------------------------------------------------------------------------
# BTPL/1 template sidecar (joints, parents, weights, shape dirs)
# ---------------------------------------------------------------------------

BTPL_MAGIC = "BTPL/1"


def write_template(obj_path, sidecar_path, template: BodyTemplate) -> None:
    """Geometry to OBJ, everything else to the BTPL/1 sidecar."""
    write_obj(obj_path, template.rest_vertices, template.faces)
    v = template.vertex_count
    names = template.joint_names or tuple(f"j{i}" for i in range(template.joint_count))
    out = [BTPL_MAGIC, f"vertices {v}", f"joints {template.joint_count}"]
    for name, (x, y, z) in zip(names, template.joints_rest):
        out.append(f"joint {_token(name, 'joint name')} {_fmt(x)} {_fmt(y)} {_fmt(z)}")
    out.append("parents " + " ".join(str(int(p)) for p in template.joint_parents))
    out.append(f"shape_dirs {template.shape_dim}")
    for k in range(template.shape_dim):
        for x, y, z in template.shape_dirs[k]:
            out.append(f"{_fmt(x)} {_fmt(y)} {_fmt(z)}")
    out.append("weights")
    for row in template.skin_weights:
        nz = np.nonzero(row)[0]
        out.append(
            f"{len(nz)} " + " ".join(f"{j} {_fmt(row[j])}" for j in nz)
        )
    Path(sidecar_path).write_text("\n".join(out) + "\n")


def read_template(obj_path, sidecar_path) -> BodyTemplate:
    vertices, faces = read_obj(obj_path)
    lines = Path(sidecar_path).read_text().splitlines()
    if not lines or lines[0] != BTPL_MAGIC:
        head = lines[0] if lines else ""
        raise DataError(f"{sidecar_path}: bad schema version {head!r}, expected {BTPL_MAGIC}")
    pos = 1
    (v_count,) = _expect(lines[pos], "vertices", sidecar_path)
    pos += 1
    if int(v_count) != len(vertices):
        raise DataError(
            f"{sidecar_path}: sidecar expects {v_count} vertices, OBJ has {len(vertices)}"
        )
    (j_count,) = _expect(lines[pos], "joints", sidecar_path)
    nj = int(j_count)
    pos += 1
    names, joints = [], []
    for _ in range(nj):
        parts = _expect(lines[pos], "joint", sidecar_path)
        names.append(parts[0])
        joints.append([float(parts[1]), float(parts[2]), float(parts[3])])
        pos += 1
    parents = np.array([int(p) for p in _expect(lines[pos], "parents", sidecar_path)])
    pos += 1
    if len(parents) != nj:
        raise DataError(f"{sidecar_path}: parent list length != joint count")
    (k_count,) = _expect(lines[pos], "shape_dirs", sidecar_path)
    nk = int(k_count)
    pos += 1
    dirs = np.zeros((nk, len(vertices), 3))
    for k in range(nk):
        for v in range(len(vertices)):
            x, y, z = lines[pos].split()
            dirs[k, v] = (float(x), float(y), float(z))
            pos += 1
    _expect(lines[pos], "weights", sidecar_path)
    pos += 1
    weights = np.zeros((len(vertices), nj))
    for v in range(len(vertices)):
        parts = lines[pos].split()
        count = int(parts[0])
        for e in range(count):
            weights[v, int(parts[1 + 2 * e])] = float(parts[2 + 2 * e])
        pos += 1
    return BodyTemplate(
        rest_vertices=vertices, faces=faces,
        joints_rest=np.array(joints), joint_parents=parents,
        skin_weights=weights, shape_dirs=dirs, joint_names=tuple(names),
    )


# ---------------------------------------------------------------------------
# MSEQ/1 motion sequence
# ---------------------------------------------------------------------------

MSEQ_MAGIC = "MSEQ/1"


def write_motion(path, seq: MotionSequence, shape_dims: int = 0) -> None:
    """One header block, then one line of 3J+3 floats per frame.

    shape_dims declares how many blendshape coefficients the companion
    template expects, so loaders can validate subject configs against the
    motion file.
    """
    out = [
        MSEQ_MAGIC,
        f"fps {_fmt(seq.fps)}",
        f"joints {seq.joint_count}",
        f"frames {len(seq)}",
        f"shape_dims {int(shape_dims)}",
        f"subject {_token(seq.subject or 'anonymous', 'subject id')}",
        f"domain {seq.domain}",
    ]
    flat = np.concatenate(
        [seq.thetas.reshape(len(seq), -1), seq.translations], axis=1
    )
    for row in flat:
        out.append(" ".join(_fmt(x) for x in row))
    Path(path).write_text("\n".join(out) + "\n")


def read_motion(path) -> tuple[MotionSequence, int]:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != MSEQ_MAGIC:
        head = lines[0] if lines else ""
        raise DataError(f"{path}: bad schema version {head!r}, expected {MSEQ_MAGIC}")
    (fps,) = _expect(lines[1], "fps", path)
    (joints,) = _expect(lines[2], "joints", path)
    (frames,) = _expect(lines[3], "frames", path)
    (shape_dims,) = _expect(lines[4], "shape_dims", path)
    (subject,) = _expect(lines[5], "subject", path)
    (domain,) = _expect(lines[6], "domain", path)
    nj, n = int(joints), int(frames)
    rows = lines[7 : 7 + n]
    if len(rows) != n:
        raise DataError(f"{path}: expected {n} frame lines, found {len(rows)}")
    data = np.array([[float(x) for x in row.split()] for row in rows])
    if data.shape != (n, 3 * nj + 3):
        raise DataError(f"{path}: frame lines must carry {3 * nj + 3} values")
    seq = MotionSequence(
        thetas=data[:, : 3 * nj].reshape(n, nj, 3),
        translations=data[:, 3 * nj :],
        fps=float(fps), subject=subject, domain=domain,
    )
    return seq, int(shape_dims)


# ---------------------------------------------------------------------------
# EIGB/1 eigenbasis + colors cache (binary)
# ---------------------------------------------------------------------------

EIGB_MAGIC = b"EIGB/1\n\x00"


def write_eigenbasis(path, eigenvalues, eigenvectors, mass, colors) -> None:
    eigenvalues = np.asarray(eigenvalues, dtype="<f8")
    eigenvectors = np.asarray(eigenvectors, dtype="<f8")
    mass = np.asarray(mass, dtype="<f8")
    colors = np.asarray(colors, dtype="<f8")
    v, k = eigenvectors.shape
    if eigenvalues.shape != (k,) or mass.shape != (v,) or colors.shape != (v, 3):
        raise DataError("inconsistent eigenbasis shapes")
    with open(path, "wb") as fh:
        fh.write(EIGB_MAGIC)
        fh.write(struct.pack("<II", v, k))
        fh.write(eigenvalues.tobytes())
        fh.write(mass.tobytes())
        fh.write(eigenvectors.tobytes())
        fh.write(colors.tobytes())


def read_eigenbasis(path) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Returns (eigenvalues, eigenvectors (V, k), mass, colors (V, 3))."""
    blob = Path(path).read_bytes()
    if blob[: len(EIGB_MAGIC)] != EIGB_MAGIC:
        raise DataError(f"{path}: bad magic, expected EIGB/1")
    v, k = struct.unpack_from("<II", blob, len(EIGB_MAGIC))
    offset = len(EIGB_MAGIC) + 8
    expected = offset + 8 * (k + v + v * k + 3 * v)
    if len(blob) != expected:
        raise DataError(f"{path}: truncated (got {len(blob)} bytes, expected {expected})")

    def take(count, shape):
        nonlocal offset
        arr = np.frombuffer(blob, dtype="<f8", count=count, offset=offset).reshape(shape)
        offset += 8 * count
        return arr.copy()

    eigenvalues = take(k, (k,))
    mass = take(v, (v,))
    eigenvectors = take(v * k, (v, k))
    colors = take(3 * v, (v, 3))
    return eigenvalues, eigenvectors, mass, colors


# ---------------------------------------------------------------------------
# LBL1 raw tensor (binary)
# ---------------------------------------------------------------------------

LBL_MAGIC = b"LBL1"


def write_tensor(path, pixels: np.ndarray) -> None:
    """Raw tensor file: magic, little-endian u32 W, H, C, then C x H x W f32 planes.

    This is the GAN-conditioning interchange format; C is 6 for label
    images but the container accepts any channel count (the losses CLI
    reuses it for feature layers and score vectors).
    """
    pixels = np.asarray(pixels)
    if pixels.ndim != 3:
        raise DataError("tensor must be (H, W, C)")
    h, w, c = pixels.shape
    planes = np.ascontiguousarray(pixels.transpose(2, 0, 1).astype("<f4"))
    with open(path, "wb") as fh:
        fh.write(LBL_MAGIC)
        fh.write(struct.pack("<III", w, h, c))
        fh.write(planes.tobytes())


def read_tensor(path) -> np.ndarray:
    """Read an LBL1 file back to (H, W, C) float64."""
    blob = Path(path).read_bytes()
    if blob[:4] != LBL_MAGIC:
        raise DataError(f"{path}: bad magic, expected LBL1")
    w, h, c = struct.unpack_from("<III", blob, 4)
    expected = 16 + 4 * w * h * c
    if len(blob) != expected:
        raise DataError(f"{path}: truncated (got {len(blob)} bytes, expected {expected})")
    planes = np.frombuffer(blob, dtype="<f4", count=w * h * c, offset=16)
    return planes.reshape(c, h, w).transpose(1, 2, 0).astype(np.float64)


def write_label_image(path, label: RasterImage) -> None:
    write_tensor(path, label.pixels)


def read_label_image(path) -> RasterImage:
    return RasterImage(pixels=read_tensor(path))


# ---------------------------------------------------------------------------
# PAIR/1 pairing plan
# ---------------------------------------------------------------------------

PAIR_MAGIC = "PAIR/1"


def write_pairing_plan(path, plan: PairingPlan) -> None:
    out = [
        PAIR_MAGIC,
        f"stage {plan.stage}",
        f"seed {plan.seed}",
        f"records {len(plan.records)}",
    ]
    for r in plan.records:
        gt = r.ground_truth_id if r.ground_truth_id is not None else "-"
        out.append(
            " ".join(
                (
                    _token(r.appearance_id, "appearance id"), r.appearance_domain,
                    _token(r.pose_id, "pose id"), r.pose_domain,
                    r.role, _token(gt, "ground truth id"),
                )
            )
        )
    Path(path).write_text("\n".join(out) + "\n")


def read_pairing_plan(path) -> PairingPlan:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != PAIR_MAGIC:
        head = lines[0] if lines else ""
        raise DataError(f"{path}: bad schema version {head!r}, expected {PAIR_MAGIC}")
    (stage,) = _expect(lines[1], "stage", path)
    (seed,) = _expect(lines[2], "seed", path)
    (count,) = _expect(lines[3], "records", path)
    records = []
    for line in lines[4 : 4 + int(count)]:
        app, app_dom, pose, pose_dom, role, gt = line.split()
        records.append(
            PairRecord(app, app_dom, pose, pose_dom, role,
                       ground_truth_id=None if gt == "-" else gt)
        )
    if len(records) != int(count):
        raise DataError(f"{path}: expected {count} records, found {len(records)}")
    return PairingPlan(stage=stage, seed=int(seed), records=tuple(records))


# ---------------------------------------------------------------------------
# PNG previews (8-bit)
# ---------------------------------------------------------------------------

def write_png(path, pixels: np.ndarray) -> None:
    """3-channel preview: values clipped to [0, 1], x255, rounded half-up."""
    pixels = np.asarray(pixels)
    if pixels.ndim != 3 or pixels.shape[2] != 3:
        raise DataError("PNG preview needs (H, W, 3) pixels")
    u8 = np.floor(np.clip(pixels, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
    Image.fromarray(u8, mode="RGB").save(path, format="PNG")


def read_png(path) -> np.ndarray:
    """Read a PNG back to (H, W, 3) float64 in [0, 1]."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float64)
    return arr / 255.0
