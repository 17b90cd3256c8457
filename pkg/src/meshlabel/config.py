"""Pipeline configuration: one JSON file drives every CLI command.

Example
-------
{
  "template": {"height": 1.7, "subdivision": 2},
  "camera": {"mode": "weak_perspective", "width": 256, "height": 256,
             "scale": 120.0, "distance": 3.0, "look_height": 0.85},
  "subjects": [
    {"id": "lead", "beta": [0.4, 0.1], "motion": "lead.mseq", "domain": "source"},
    {"id": "fan", "beta": [-0.3, 0.6], "motion": "fan.mseq", "domain": "target"}
  ],
  "smoothing_window": 5,
  "alignment": "per-video",
  "seed": 7,
  "output_dir": "out"
}

Relative paths resolve against the config file's directory. Every CLI flag
overrides its config-file equivalent.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .body import TemplateConfig
from .errors import ConfigError
from .render import Camera

ALIGNMENT_MODES = ("per-video", "per-frame")


@dataclass(frozen=True, eq=False)
class SubjectConfig:
    id: str
    beta: np.ndarray
    motion: Path
    domain: str

    def __post_init__(self):
        if not self.id or any(c.isspace() for c in self.id):
            raise ConfigError(f"subject id must be a whitespace-free token: {self.id!r}")
        if self.domain not in ("source", "target"):
            raise ConfigError(f"subject {self.id}: domain must be source or target")
        if not np.isfinite(self.beta).all():
            raise ConfigError(f"subject {self.id}: beta must be finite")


@dataclass(frozen=True, eq=False)
class PipelineConfig:
    template: TemplateConfig
    camera: Camera
    subjects: tuple[SubjectConfig, ...]
    smoothing_window: int = 5
    alignment: str = "per-video"
    seed: int = 0
    output_dir: Path = Path("out")
    base_dir: Path = field(default_factory=Path)

    def __post_init__(self):
        if self.smoothing_window < 1 or self.smoothing_window % 2 == 0:
            raise ConfigError("smoothing_window must be odd and >= 1")
        if self.alignment not in ALIGNMENT_MODES:
            raise ConfigError(f"alignment must be one of {ALIGNMENT_MODES}")
        ids = [s.id for s in self.subjects]
        if len(set(ids)) != len(ids):
            raise ConfigError("subject ids must be unique")

    def subject(self, subject_id: str) -> SubjectConfig:
        for s in self.subjects:
            if s.id == subject_id:
                return s
        raise ConfigError(f"unknown subject {subject_id!r}; have {[s.id for s in self.subjects]}")

    def domain_subjects(self, domain: str) -> list[SubjectConfig]:
        return [s for s in self.subjects if s.domain == domain]

    def resolve(self, path: Path) -> Path:
        path = Path(path)
        return path if path.is_absolute() else self.base_dir / path


def _camera_from_dict(spec: dict) -> Camera:
    spec = dict(spec)
    width = int(spec.pop("width", 256))
    height = int(spec.pop("height", 256))
    mode = spec.pop("mode", "weak_perspective")
    principal = spec.pop("principal", None)
    if principal is not None:
        principal = (float(principal[0]), float(principal[1]))
    kwargs = {}
    for key in ("distance", "look_height", "scale", "focal"):
        if key in spec:
            kwargs[key] = float(spec.pop(key))
    if spec:
        raise ConfigError(f"unknown camera keys: {sorted(spec)}")
    return Camera.front_view(
        width=width, height=height, mode=mode, principal=principal, **kwargs
    )


def load_config(path) -> PipelineConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})")
    return config_from_dict(raw, base_dir=path.parent)


def config_from_dict(raw: dict, base_dir: Path = Path(".")) -> PipelineConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    known = {
        "template", "camera", "subjects", "smoothing_window",
        "alignment", "seed", "output_dir",
    }
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    tmpl_spec = dict(raw.get("template", {}))
    if "shape_dirs" in tmpl_spec:
        tmpl_spec["shape_dirs"] = tuple(tmpl_spec["shape_dirs"])
    try:
        template = TemplateConfig(**tmpl_spec)
    except TypeError as exc:
        raise ConfigError(f"bad template block: {exc}")
    template.validate()

    camera = _camera_from_dict(raw.get("camera", {}))

    subjects = []
    for entry in raw.get("subjects", []):
        try:
            subjects.append(
                SubjectConfig(
                    id=str(entry["id"]),
                    beta=np.asarray(entry.get("beta", []), dtype=np.float64),
                    motion=Path(entry["motion"]),
                    domain=str(entry.get("domain", "source")),
                )
            )
        except KeyError as exc:
            raise ConfigError(f"subject entry missing key {exc}")

    return PipelineConfig(
        template=template,
        camera=camera,
        subjects=tuple(subjects),
        smoothing_window=int(raw.get("smoothing_window", 5)),
        alignment=str(raw.get("alignment", "per-video")),
        seed=int(raw.get("seed", 0)),
        output_dir=Path(raw.get("output_dir", "out")),
        base_dir=base_dir,
    )
