"""Reference training objectives as pure numeric functions.

These take discriminator probabilities and flattened feature maps that some
external trainer produced and return exact scalar values, so that trainer
can be regression-tested against a fixed reference. Nothing here touches a
network or a gradient. Expectations are realized as arithmetic means over
the supplied batch.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DataError

# Probabilities are clamped into [CLAMP, 1 - CLAMP] before any log; the
# adversarial objective is undefined at exactly 0 or 1.
CLAMP = 1e-7


@dataclass(frozen=True, eq=False)
class ScoreBatch:
    """Discriminator probabilities for real-labeled and fake-labeled inputs."""

    real: np.ndarray
    fake: np.ndarray

    def __post_init__(self):
        for name, arr in (("real", self.real), ("fake", self.fake)):
            if arr.size == 0:
                raise DataError(f"{name} scores are empty")
            if not np.isfinite(arr).all():
                raise DataError(f"{name} scores must be finite")


@dataclass(frozen=True, eq=False)
class FeatureStack:
    """Flattened per-layer feature values; layer i carries N_i elements."""

    layers: tuple[np.ndarray, ...]

    def __post_init__(self):
        if not self.layers:
            raise DataError("feature stack has no layers")
        for i, layer in enumerate(self.layers):
            if layer.size == 0:
                raise DataError(f"layer {i} is empty")
            if not np.isfinite(layer).all():
                raise DataError(f"layer {i} has non-finite values")

    @property
    def element_counts(self) -> tuple[int, ...]:
        return tuple(layer.size for layer in self.layers)


@dataclass(frozen=True)
class LossWeights:
    """Perceptual and feature-matching weights; defaults are the reference values."""

    lambda_p: float = 5.0
    lambda_fm: float = 10.0

    def __post_init__(self):
        if self.lambda_p < 0 or self.lambda_fm < 0:
            raise DataError("loss weights must be non-negative")


def _check_matched(a: FeatureStack, b: FeatureStack) -> None:
    if len(a.layers) != len(b.layers):
        raise DataError(f"layer count mismatch: {len(a.layers)} vs {len(b.layers)}")
    for i, (la, lb) in enumerate(zip(a.layers, b.layers)):
        if la.shape != lb.shape:
            raise DataError(f"layer {i} shape mismatch: {la.shape} vs {lb.shape}")


def gan_objective(scores: ScoreBatch) -> float:
    """Adversarial value: mean log p over real plus mean log(1 - p) over fake.

    Natural logs; probabilities clamped to [1e-7, 1 - 1e-7] first. A perfect
    discriminator (real near 1, fake near 0) scores near 0; maximal
    confusion at p = 0.5 everywhere scores 2 log 0.5.
    """
    real = np.clip(np.asarray(scores.real, dtype=np.float64), CLAMP, 1.0 - CLAMP)
    fake = np.clip(np.asarray(scores.fake, dtype=np.float64), CLAMP, 1.0 - CLAMP)
    return float(np.mean(np.log(real)) + np.mean(np.log(1.0 - fake)))


def perceptual_l1(fa: FeatureStack, fb: FeatureStack) -> float:
    """Sum over layers of the L1 distance between corresponding elements.

    The feature extractor itself is external; this is only the distance.
    """
    _check_matched(fa, fb)
    return float(sum(np.abs(la - lb).sum() for la, lb in zip(fa.layers, fb.layers)))


def feature_matching(real_feats: FeatureStack, fake_feats: FeatureStack) -> float:
    """Element-count-normalized L1 over layers: sum_i ||real_i - fake_i||_1 / N_i.

    This is the per-discriminator-scale value; sum over scales in the
    caller (or via sum_over_scales).
    """
    _check_matched(real_feats, fake_feats)
    total = 0.0
    for la, lb in zip(real_feats.layers, fake_feats.layers):
        total += float(np.abs(la - lb).sum()) / la.size
    return total


def sum_over_scales(values: list[float]) -> float:
    """Convenience: total a per-scale objective over a multi-scale discriminator."""
    return float(sum(values))


def mt_full_objective(
    gan_source: float,
    gan_target: float,
    perceptual: float,
    fm_source: float,
    fm_target: float,
    weights: LossWeights = LossWeights(),
) -> float:
    """Full motion-transfer objective.

    Both domains' adversarial terms, plus lambda_p times the perceptual
    distance, plus lambda_fm times each domain's feature-matching term.
    """
    return (
        gan_source
        + gan_target
        + weights.lambda_p * perceptual
        + weights.lambda_fm * (fm_source + fm_target)
    )


def de_full_objective(
    gan: float,
    perceptual: float,
    fm: float,
    weights: LossWeights = LossWeights(),
) -> float:
    """Full detail-enhancement objective: gan + lambda_p * perceptual + lambda_fm * fm."""
    return gan + weights.lambda_p * perceptual + weights.lambda_fm * fm
