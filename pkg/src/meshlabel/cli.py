"""Batch CLI wiring the pipeline end to end.

Subcommands: template, labels, prepare, metrics, losses. Every command is
deterministic for a fixed config and seed, never mutates its inputs, and
writes only under the configured output directory. Frame-level work may run
on several threads (--jobs) without changing a single output byte.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
failure (eigensolver).
"""

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import formats
from .body import ShapeParams, build_template, joint_positions, skin
from .config import PipelineConfig, load_config
from .errors import ConfigError, ConvergenceError, DataError, MeshTopologyError
from .intrinsic import subject_colors
from .metrics import SsimConfig, pixel_l1, ssim
from .objectives import (
    FeatureStack, LossWeights, ScoreBatch, de_full_objective,
    feature_matching, gan_objective, mt_full_objective, perceptual_l1,
)
from .render import (
    RasterImage, default_skeleton_spec, make_label_image,
    project_vertices, rasterize_mesh, render_skeleton,
)
from .sequence import MeshSequence, label_pairs, pose_sequence_to_meshes, smooth_vertices
from .transfer import (
    PRETRAIN_MT, STAGES, TRAIN_DE, aggregate_alignment, blend_mean,
    compute_alignment, make_pairing_plan, warp_image,
)

TEMPLATE_OBJ = "template.obj"
TEMPLATE_SIDECAR = "template.btpl"


def _load_or_build_template(cfg: PipelineConfig, out_dir: Path):
    obj = out_dir / TEMPLATE_OBJ
    sidecar = out_dir / TEMPLATE_SIDECAR
    if obj.exists() and sidecar.exists():
        return formats.read_template(obj, sidecar)
    return build_template(cfg.template)


def _subject_motion(cfg: PipelineConfig, subject):
    path = cfg.resolve(subject.motion)
    if not path.exists():
        raise DataError(f"motion file for subject {subject.id!r} not found: {path}")
    seq, shape_dims = formats.read_motion(path)
    if shape_dims and shape_dims != len(subject.beta):
        raise DataError(
            f"{path}: motion declares {shape_dims} shape dims, "
            f"subject {subject.id!r} has {len(subject.beta)}"
        )
    return seq


def _cached_colors(cfg: PipelineConfig, template, subject, out_dir: Path) -> np.ndarray:
    cache_dir = out_dir / "cache"
    cache_dir.mkdir(parents=True, exist_ok=True)
    cache = cache_dir / f"{subject.id}.eigb"
    if cache.exists():
        _, vecs, _, colors = formats.read_eigenbasis(cache)
        if len(colors) == template.vertex_count:
            return colors
    colors, basis = subject_colors(template, ShapeParams(subject.beta))
    formats.write_eigenbasis(cache, basis.eigenvalues, basis.eigenvectors, basis.mass, colors)
    return colors


def cmd_template(args) -> int:
    cfg = load_config(args.config)
    out_dir = Path(args.out) if args.out else cfg.resolve(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    template = build_template(cfg.template)
    formats.write_template(out_dir / TEMPLATE_OBJ, out_dir / TEMPLATE_SIDECAR, template)
    print(f"template: {template.vertex_count} vertices, {len(template.faces)} faces, "
          f"{template.joint_count} joints -> {out_dir}")
    return 0


def cmd_labels(args) -> int:
    cfg = load_config(args.config)
    out_root = Path(args.out) if args.out else cfg.resolve(cfg.output_dir)
    window = args.smoothing_window if args.smoothing_window else cfg.smoothing_window
    template = _load_or_build_template(cfg, out_root)

    subject = cfg.subject(args.subject)
    beta = ShapeParams(np.asarray(subject.beta, dtype=np.float64))
    if len(subject.beta) != template.shape_dim:
        raise ConfigError(
            f"subject {subject.id!r} has {len(subject.beta)} beta coefficients, "
            f"template expects {template.shape_dim}"
        )
    pose_subject = cfg.subject(args.pose_source) if args.pose_source else subject
    pose_seq = _subject_motion(cfg, pose_subject)
    if pose_seq.joint_count != template.joint_count:
        raise DataError(
            f"motion has {pose_seq.joint_count} joints, template {template.joint_count}"
        )

    meshes = pose_sequence_to_meshes(template, beta, pose_seq)
    meshes = smooth_vertices(meshes, window)
    colors = _cached_colors(cfg, template, subject, out_root)
    spec = default_skeleton_spec(template.joint_parents)

    run_name = subject.id if not args.pose_source else f"{subject.id}_pose-{pose_subject.id}"
    out_dir = out_root / "labels" / run_name
    out_dir.mkdir(parents=True, exist_ok=True)

    def render_frame(t: int) -> str:
        mesh_img = rasterize_mesh(meshes.frame(t), colors, cfg.camera)
        joints = joint_positions(template, beta, pose_seq.frame(t))
        joints2d, _ = project_vertices(cfg.camera, joints)
        pose_img = render_skeleton(joints2d, spec, cfg.camera.width, cfg.camera.height)
        label = make_label_image(mesh_img, pose_img)
        name = f"frame_{t:04d}"
        formats.write_label_image(out_dir / f"{name}.lbl1", label)
        formats.write_png(out_dir / f"{name}_mesh.png", mesh_img.pixels)
        formats.write_png(out_dir / f"{name}_pose.png", pose_img.pixels)
        return name

    jobs = max(1, args.jobs)
    if jobs == 1:
        names = [render_frame(t) for t in range(len(meshes))]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            names = list(pool.map(render_frame, range(len(meshes))))

    index = ["PAIRS/1"]
    for t, name in enumerate(names):
        prev = f"{names[t - 1]}.lbl1" if t > 0 else "ZERO"
        index.append(f"{name}.lbl1 {prev}")
    (out_dir / "pair_index.txt").write_text("\n".join(index) + "\n")
    print(f"labels: {len(names)} frames -> {out_dir}")
    return 0


def _pick_pair(cfg: PipelineConfig, args):
    sources = cfg.domain_subjects("source")
    targets = cfg.domain_subjects("target")
    if not sources or not targets:
        raise ConfigError("prepare needs at least one source-domain and one target-domain subject")
    src = cfg.subject(args.source_subject) if args.source_subject else sources[0]
    tgt = cfg.subject(args.target_subject) if args.target_subject else targets[0]
    return src, tgt


def cmd_prepare(args) -> int:
    cfg = load_config(args.config)
    out_root = Path(args.out) if args.out else cfg.resolve(cfg.output_dir)
    seed = args.seed if args.seed is not None else cfg.seed
    template = _load_or_build_template(cfg, out_root)
    src, tgt = _pick_pair(cfg, args)
    src_seq = _subject_motion(cfg, src)
    tgt_seq = _subject_motion(cfg, tgt)

    source_ids = [f"{src.id}:{t:04d}" for t in range(len(src_seq))]
    target_ids = [f"{tgt.id}:{t:04d}" for t in range(len(tgt_seq))]
    plan = make_pairing_plan(args.stage, source_ids, target_ids, seed)

    stage_dir = out_root / "prepare" / args.stage
    stage_dir.mkdir(parents=True, exist_ok=True)
    formats.write_pairing_plan(stage_dir / "plan.pair", plan)

    if args.stage == PRETRAIN_MT:
        print(f"prepare[{args.stage}]: {len(plan.records)} records -> {stage_dir}")
        return 0

    # Supervised detail training poses come from the target clip; transfer
    # poses from the source clip. Either way the source-shaped rendering is
    # warped into target-shape alignment and blended with the target-shaped
    # rendering.
    pose_seq = tgt_seq if args.stage == TRAIN_DE else src_seq
    beta_src = ShapeParams(np.asarray(src.beta, dtype=np.float64))
    beta_tgt = ShapeParams(np.asarray(tgt.beta, dtype=np.float64))
    colors_src = _cached_colors(cfg, template, src, out_root)
    colors_tgt = _cached_colors(cfg, template, tgt, out_root)

    frames = range(len(pose_seq))
    src_meshes = [skin(template, beta_src, pose_seq.frame(t)) for t in frames]
    tgt_meshes = [skin(template, beta_tgt, pose_seq.frame(t)) for t in frames]
    per_frame = [
        compute_alignment(src_meshes[t], tgt_meshes[t], cfg.camera) for t in frames
    ]
    if cfg.alignment == "per-video":
        shared = aggregate_alignment(per_frame)
        transforms = [shared] * len(per_frame)
    else:
        transforms = per_frame

    for sub in ("source", "aligned", "target", "blended"):
        (stage_dir / sub).mkdir(exist_ok=True)
    for t in frames:
        img_src = rasterize_mesh(src_meshes[t], colors_src, cfg.camera)
        img_tgt = rasterize_mesh(tgt_meshes[t], colors_tgt, cfg.camera)
        aligned = warp_image(img_src, transforms[t])
        blended = blend_mean(aligned, img_tgt)
        name = f"{t:04d}.png"
        formats.write_png(stage_dir / "source" / name, img_src.pixels)
        formats.write_png(stage_dir / "aligned" / name, aligned.pixels)
        formats.write_png(stage_dir / "target" / name, img_tgt.pixels)
        formats.write_png(stage_dir / "blended" / name, blended.pixels)
    print(f"prepare[{args.stage}]: {len(plan.records)} records, "
          f"{len(pose_seq)} blended frames -> {stage_dir}")
    return 0


def _image_set(path: Path) -> dict[str, Path]:
    path = Path(path)
    if path.is_file():
        return {path.name: path}
    if not path.is_dir():
        raise DataError(f"no such image path: {path}")
    return {p.name: p for p in sorted(path.glob("*.png"))}


def cmd_metrics(args) -> int:
    set_a = _image_set(Path(args.dir_a))
    set_b = _image_set(Path(args.dir_b))
    if set_a.keys() != set_b.keys():
        only_a = sorted(set_a.keys() - set_b.keys())
        only_b = sorted(set_b.keys() - set_a.keys())
        raise DataError(f"file sets differ (only in A: {only_a}, only in B: {only_b})")
    if not set_a:
        raise DataError("no PNG files to compare")
    cfg = SsimConfig(window=args.window)
    ssims, l1s = [], []
    for name in sorted(set_a):
        a = RasterImage(pixels=formats.read_png(set_a[name]))
        b = RasterImage(pixels=formats.read_png(set_b[name]))
        s = ssim(a, b, cfg)
        d = pixel_l1(a, b)
        ssims.append(s)
        l1s.append(d)
        print(f"frame {name} ssim {s:.9f} l1 {d:.9f}")
    print(f"summary count {len(ssims)} mean_ssim {np.mean(ssims):.9f} "
          f"min_ssim {np.min(ssims):.9f} mean_l1 {np.mean(l1s):.9f}")
    return 0


def _stack_from(path_spec: str) -> FeatureStack:
    path = Path(path_spec)
    if path.is_dir():
        files = sorted(path.glob("*.lbl1"))
        if not files:
            raise DataError(f"{path}: no .lbl1 layer files")
    else:
        files = [Path(p) for p in path_spec.split(",")]
    return FeatureStack(layers=tuple(formats.read_tensor(f).ravel() for f in files))


def cmd_losses(args) -> int:
    weights = LossWeights(lambda_p=args.lambda_p, lambda_fm=args.lambda_fm)
    if args.kind == "gan":
        scores = ScoreBatch(
            real=formats.read_tensor(args.real).ravel(),
            fake=formats.read_tensor(args.fake).ravel(),
        )
        print(f"gan_objective {gan_objective(scores)!r}")
    elif args.kind == "perceptual":
        value = perceptual_l1(_stack_from(args.a), _stack_from(args.b))
        print(f"perceptual_l1 {value!r}")
    elif args.kind == "fm":
        value = feature_matching(_stack_from(args.real), _stack_from(args.fake))
        print(f"feature_matching {value!r}")
    elif args.kind == "mt":
        value = mt_full_objective(
            args.gan_source, args.gan_target, args.perceptual,
            args.fm_source, args.fm_target, weights,
        )
        print(f"mt_full_objective {value!r}")
    else:
        value = de_full_objective(args.gan, args.perceptual, args.fm, weights)
        print(f"de_full_objective {value!r}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="meshlabel",
        description="Body-mesh label images for GAN conditioning, plus the "
                    "pairing/alignment/metrics machinery around them.",
        epilog="Exit codes: 0 ok, 2 config error, 3 data error, 4 numerical failure.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("template", help="build the body template and write OBJ + BTPL/1")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="output directory (overrides config)")
    p.set_defaults(func=cmd_template)

    p = sub.add_parser("labels", help="render per-frame 6-channel label images (LBL1)")
    p.add_argument("--config", required=True)
    p.add_argument("--subject", required=True, help="subject whose shape and colors to use")
    p.add_argument("--pose-source", default=None,
                   help="drive with this subject's motion instead (shape stays --subject)")
    p.add_argument("--jobs", type=int, default=1, help="frame-parallel threads (never affects bytes)")
    p.add_argument("--smoothing-window", type=int, default=None,
                   help="odd moving-average width (overrides config)")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_labels)

    p = sub.add_parser("prepare", help="pairing plan plus aligned/blended image directories")
    p.add_argument("--config", required=True)
    p.add_argument("--stage", required=True, choices=STAGES)
    p.add_argument("--source-subject", default=None)
    p.add_argument("--target-subject", default=None)
    p.add_argument("--seed", type=int, default=None, help="pairing seed (overrides config)")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("metrics", help="SSIM + pixel L1 between two images or directories")
    p.add_argument("dir_a")
    p.add_argument("dir_b")
    p.add_argument("--window", type=int, default=11)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("losses", help="evaluate reference objectives from tensors or terms")
    p.add_argument("--kind", required=True, choices=("gan", "perceptual", "fm", "mt", "de"))
    p.add_argument("--real", default=None, help="tensor file (gan) or layer dir/list (fm)")
    p.add_argument("--fake", default=None)
    p.add_argument("--a", default=None, help="layer dir or comma-separated .lbl1 list")
    p.add_argument("--b", default=None)
    p.add_argument("--gan", type=float, default=0.0)
    p.add_argument("--gan-source", type=float, default=0.0)
    p.add_argument("--gan-target", type=float, default=0.0)
    p.add_argument("--perceptual", type=float, default=0.0)
    p.add_argument("--fm", type=float, default=0.0)
    p.add_argument("--fm-source", type=float, default=0.0)
    p.add_argument("--fm-target", type=float, default=0.0)
    p.add_argument("--lambda-p", type=float, default=5.0)
    p.add_argument("--lambda-fm", type=float, default=10.0)
    p.set_defaults(func=cmd_losses)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (DataError, MeshTopologyError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except ConvergenceError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
