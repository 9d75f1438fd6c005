"""Scikit-learn style wrappers so the pipeline composes with that ecosystem.

Each estimator is a thin facade over the functional modules: constructor
parameters mirror the underlying configs one-to-one (so ``get_params`` /
``set_params`` / ``clone`` behave), ``fit`` trains or validates, and
``transform`` / ``predict`` map over sequences of images or masks.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from . import gan, preprocess
from .errors import ValidationError
from .refine import mock_refine
from .synthgen import SamplePair
from .vectorize import PolySet, simplify_polyset, trace_contours


def check_photo(photo: np.ndarray) -> np.ndarray:
    arr = np.asarray(photo, dtype=np.float32)
    if arr.ndim not in (2, 3):
        raise ValidationError(f"expected HxW or HxWxC image, got {arr.shape}")
    if arr.size == 0:
        raise ValidationError("empty image")
    if float(arr.min()) < 0.0 or float(arr.max()) > 1.0:
        raise ValidationError("photo values must lie in [0, 1]")
    return arr


def check_mask(mask: np.ndarray) -> np.ndarray:
    arr = np.asarray(mask)
    if arr.ndim != 2:
        raise ValidationError(f"expected HxW mask, got {arr.shape}")
    if arr.dtype != bool:
        uniq = np.unique(arr)
        if not np.all(np.isin(uniq, (0, 1))):
            raise ValidationError("mask must be binary")
        arr = arr.astype(bool)
    return arr


def _as_list(X) -> list:
    if isinstance(X, np.ndarray) and X.ndim in (3, 4):
        return list(X)
    return list(X)


class ImageStandardizer(BaseEstimator, TransformerMixin):
    """Stateless transformer applying the square crop/pad standardization."""

    def __init__(self, target_size: int = 1024):
        self.target_size = target_size

    def fit(self, X, y=None):
        return self

    def transform(self, X) -> list[np.ndarray]:
        return [preprocess.standardize(check_photo(img), self.target_size)
                for img in _as_list(X)]


class PairAugmenter(BaseEstimator, TransformerMixin):
    """Deterministic paired augmentation; sample index seeds the stream."""

    def __init__(self, hflip_prob: float = 0.5, rotation_degrees_max: float = 15.0,
                 brightness_delta_max: float = 0.1, seed: int = 0):
        self.hflip_prob = hflip_prob
        self.rotation_degrees_max = rotation_degrees_max
        self.brightness_delta_max = brightness_delta_max
        self.seed = seed

    def _policy(self) -> preprocess.AugmentPolicy:
        policy = preprocess.AugmentPolicy(
            hflip_prob=self.hflip_prob,
            rotation_degrees_max=self.rotation_degrees_max,
            brightness_delta_max=self.brightness_delta_max,
            seed=self.seed)
        policy.validate()
        return policy

    def fit(self, X, y=None):
        self._policy()
        return self

    def transform(self, X: Sequence[SamplePair]) -> list[SamplePair]:
        policy = self._policy()
        return [preprocess.augment(pair, policy, i) for i, pair in enumerate(X)]


class ContourTranslator(BaseEstimator):
    """fit(photos, masks) trains the adversarial translator; predict maps
    photos to binary masks. Parameters mirror GanConfig plus the step count.
    """

    def __init__(self, learning_rate: float = 2e-4, l1_weight: float = 100.0,
                 gan_mode: str = "vanilla", generator_depth: int = 6,
                 norm: str = "batch", batch_size: int = 1, image_size: int = 64,
                 base_channels: int = 16, seed: int = 0, steps: int = 500):
        self.learning_rate = learning_rate
        self.l1_weight = l1_weight
        self.gan_mode = gan_mode
        self.generator_depth = generator_depth
        self.norm = norm
        self.batch_size = batch_size
        self.image_size = image_size
        self.base_channels = base_channels
        self.seed = seed
        self.steps = steps

    def _config(self) -> gan.GanConfig:
        config = gan.GanConfig(
            learning_rate=self.learning_rate, l1_weight=self.l1_weight,
            gan_mode=self.gan_mode, generator_depth=self.generator_depth,
            norm=self.norm, batch_size=self.batch_size,
            image_size=self.image_size, base_channels=self.base_channels,
            seed=self.seed)
        config.validate()
        return config

    def fit(self, X, y):
        photos = [check_photo(p) for p in _as_list(X)]
        masks = [check_mask(m) for m in _as_list(y)]
        if len(photos) != len(masks):
            raise ValidationError(
                f"{len(photos)} photos but {len(masks)} masks")
        pairs = [SamplePair(photo=p, mask=m, spec_seed=i, id=f"fit{i:05d}")
                 for i, (p, m) in enumerate(zip(photos, masks))]
        config = self._config()
        state = gan.train(pairs, config, self.steps)
        self.generator_ = state.generator
        self.config_ = config
        return self

    def predict(self, X) -> list[np.ndarray]:
        if not hasattr(self, "generator_"):
            raise NotFittedError("ContourTranslator is not fitted")
        return [gan.infer(self.generator_, check_photo(p)) for p in _as_list(X)]

    def save(self, path) -> None:
        if not hasattr(self, "generator_"):
            raise NotFittedError("ContourTranslator is not fitted")
        gan.save_checkpoint(path, self.config_, self.generator_)

    @classmethod
    def from_checkpoint(cls, path) -> "ContourTranslator":
        config, generator, _ = gan.load_checkpoint(path)
        est = cls(**config.to_dict())
        est.generator_ = generator
        est.config_ = config
        return est


class MaskRefiner(BaseEstimator, TransformerMixin):
    """Offline morphological refinement as a transformer over masks."""

    def __init__(self, close_radius: int = 2, min_component_area: int = 16,
                 hole_roundness_fix: bool = False):
        self.close_radius = close_radius
        self.min_component_area = min_component_area
        self.hole_roundness_fix = hole_roundness_fix

    def fit(self, X, y=None):
        return self

    def transform(self, X) -> list[np.ndarray]:
        return [mock_refine(check_mask(m), self.close_radius,
                            self.min_component_area, self.hole_roundness_fix)
                for m in _as_list(X)]


class ContourVectorizer(BaseEstimator, TransformerMixin):
    """Masks to simplified polyline contour sets."""

    def __init__(self, simplify_epsilon: float = 1.0):
        self.simplify_epsilon = simplify_epsilon

    def fit(self, X, y=None):
        return self

    def transform(self, X) -> list[PolySet]:
        return [simplify_polyset(trace_contours(check_mask(m)),
                                 self.simplify_epsilon)
                for m in _as_list(X)]
