"""Evaluation protocol: SSIM, perceptual distance, Hausdorff, IoU, reports.

SSIM follows the classic windowed formulation: 11x11 Gaussian window with
sigma 1.5, K1=0.01, K2=0.03, dynamic range 1.0, averaged over windows that
fit entirely inside the image. The default perceptual backend is a
documented proxy (1 - mean SSIM over 3 dyadic scales); a learned metric can
be plugged in behind the same interface and reports always name the backend
in use.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .errors import ShapeMismatchError, UndefinedMetricError, ValidationError
from .imageio import load_mask, luminance
from .synthgen import DatasetManifest


@dataclass
class SsimParams:
    window: int = 11
    sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 1.0

    def validate(self) -> None:
        if self.window < 3 or self.window % 2 == 0:
            raise ValidationError(f"window must be odd and >= 3, got {self.window}")
        if self.sigma <= 0:
            raise ValidationError("sigma must be > 0")


def gaussian_window(window: int, sigma: float) -> np.ndarray:
    """Normalized 2D Gaussian kernel sampled on the window grid."""
    half = window // 2
    x = np.arange(-half, half + 1, dtype=np.float64)
    g = np.exp(-(x ** 2) / (2.0 * sigma ** 2))
    k = np.outer(g, g)
    return k / k.sum()


def _check_pair(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ShapeMismatchError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def ssim(a: np.ndarray, b: np.ndarray, params: SsimParams | None = None) -> float:
    """Mean local SSIM over all fully supported window positions."""
    p = params or SsimParams()
    p.validate()
    a, b = _check_pair(a, b)
    if a.ndim != 2:
        raise ValidationError("ssim expects grayscale HxW inputs")
    if min(a.shape) < p.window:
        raise ValidationError(
            f"image {a.shape} smaller than ssim window {p.window}")
    a = a.astype(np.float64)
    b = b.astype(np.float64)

    kernel = gaussian_window(p.window, p.sigma)
    half = p.window // 2

    def filt(img: np.ndarray) -> np.ndarray:
        full = ndimage.correlate(img, kernel, mode="constant")
        return full[half:img.shape[0] - half, half:img.shape[1] - half]

    mu_a = filt(a)
    mu_b = filt(b)
    var_a = filt(a * a) - mu_a * mu_a
    var_b = filt(b * b) - mu_b * mu_b
    cov = filt(a * b) - mu_a * mu_b

    c1 = (p.k1 * p.dynamic_range) ** 2
    c2 = (p.k2 * p.dynamic_range) ** 2
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a ** 2 + mu_b ** 2 + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def iou(a: np.ndarray, b: np.ndarray) -> float:
    """Intersection over union of two binary masks; 1.0 when both empty."""
    a, b = _check_pair(a, b)
    a = a.astype(bool)
    b = b.astype(bool)
    union = int(np.count_nonzero(a | b))
    if union == 0:
        return 1.0
    return float(np.count_nonzero(a & b) / union)


def hausdorff(a: np.ndarray, b: np.ndarray, variant: str = "max") -> float:
    """Symmetric Hausdorff distance between mask foregrounds, in pixels.

    max: classic sup-inf in both directions. mean: average of the two
    directed mean nearest-neighbor distances.
    """
    if variant not in ("max", "mean"):
        raise ValidationError(f"unknown hausdorff variant {variant!r}")
    a, b = _check_pair(a, b)
    pts_a = np.argwhere(np.asarray(a, dtype=bool)).astype(np.float64)
    pts_b = np.argwhere(np.asarray(b, dtype=bool)).astype(np.float64)
    if len(pts_a) == 0 or len(pts_b) == 0:
        raise UndefinedMetricError("hausdorff undefined for empty foreground")
    d_ab = cKDTree(pts_b).query(pts_a)[0]
    d_ba = cKDTree(pts_a).query(pts_b)[0]
    if variant == "max":
        return float(max(d_ab.max(), d_ba.max()))
    return float(0.5 * (d_ab.mean() + d_ba.mean()))


def _downsample2(img: np.ndarray) -> np.ndarray:
    h, w = img.shape
    h2, w2 = h - h % 2, w - w % 2
    v = img[:h2, :w2]
    return 0.25 * (v[0::2, 0::2] + v[1::2, 0::2] + v[0::2, 1::2] + v[1::2, 1::2])


def _msssim_proxy(a: np.ndarray, b: np.ndarray) -> float:
    """1 - mean SSIM over up to 3 dyadic scales (documented proxy metric)."""
    p = SsimParams()
    vals = []
    for _ in range(3):
        if min(a.shape) < p.window:
            break
        vals.append(ssim(a, b, p))
        a = _downsample2(a)
        b = _downsample2(b)
    if not vals:
        raise ValidationError("image too small for the multi-scale ssim proxy")
    return float(1.0 - np.mean(vals))


PerceptualBackend = Callable[[np.ndarray, np.ndarray], float]

PERCEPTUAL_BACKENDS: dict[str, PerceptualBackend] = {
    "msssim_proxy": _msssim_proxy,
}

DEFAULT_PERCEPTUAL_BACKEND = "msssim_proxy"


def perceptual_distance(a: np.ndarray, b: np.ndarray,
                        backend: str = DEFAULT_PERCEPTUAL_BACKEND) -> float:
    a, b = _check_pair(a, b)
    try:
        fn = PERCEPTUAL_BACKENDS[backend]
    except KeyError:
        raise ValidationError(
            f"perceptual backend {backend!r} unavailable; "
            f"registered: {sorted(PERCEPTUAL_BACKENDS)}") from None
    gray_a = luminance(a).astype(np.float64)
    gray_b = luminance(b).astype(np.float64)
    return float(fn(gray_a, gray_b))


METRIC_KEYS = ("ssim", "perceptual", "hausdorff_mean", "hausdorff_max", "iou")


@dataclass
class MetricsReport:
    method_label: str
    perceptual_backend: str
    per_sample: list[dict] = field(default_factory=list)
    errors: list[dict] = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.per_sample)

    def aggregate(self) -> dict[str, dict[str, float]]:
        agg = {}
        for key in METRIC_KEYS:
            vals = np.array([s[key] for s in self.per_sample], dtype=np.float64)
            if vals.size == 0:
                agg[key] = {"mean": float("nan"), "std": float("nan")}
            else:
                agg[key] = {"mean": float(vals.mean()), "std": float(vals.std())}
        return agg

    def to_json(self) -> str:
        payload = {
            "method_label": self.method_label,
            "perceptual_backend": self.perceptual_backend,
            "n": self.n,
            "aggregate": self.aggregate(),
            "per_sample": self.per_sample,
            "errors": self.errors,
        }
        return json.dumps(payload, indent=2)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def from_json(cls, text: str) -> "MetricsReport":
        data = json.loads(text)
        return cls(method_label=data["method_label"],
                   perceptual_backend=data.get("perceptual_backend",
                                               DEFAULT_PERCEPTUAL_BACKEND),
                   per_sample=data["per_sample"],
                   errors=data.get("errors", []))

    @classmethod
    def load(cls, path: str | Path) -> "MetricsReport":
        p = Path(path)
        if not p.is_file():
            raise ValidationError(f"report not found: {p}")
        return cls.from_json(p.read_text())


def compute_sample_metrics(pred: np.ndarray, truth: np.ndarray,
                           backend: str = DEFAULT_PERCEPTUAL_BACKEND) -> dict:
    """All four metrics for one (prediction, ground truth) mask pair."""
    pred_f = np.asarray(pred, dtype=bool).astype(np.float64)
    truth_f = np.asarray(truth, dtype=bool).astype(np.float64)
    return {
        "ssim": ssim(pred_f, truth_f),
        "perceptual": perceptual_distance(pred_f, truth_f, backend),
        "hausdorff_mean": hausdorff(pred, truth, "mean"),
        "hausdorff_max": hausdorff(pred, truth, "max"),
        "iou": iou(pred, truth),
    }


def evaluate_pairset(manifest: DatasetManifest, predictions_dir: str | Path,
                     method_label: str,
                     backend: str = DEFAULT_PERCEPTUAL_BACKEND,
                     split: str = "test") -> MetricsReport:
    """Score every prediction against its ground truth for one split.

    Samples with a missing prediction file or an undefined metric are
    recorded as error entries and excluded from the aggregates.
    """
    pred_dir = Path(predictions_dir)
    report = MetricsReport(method_label=method_label, perceptual_backend=backend)
    for entry in sorted(manifest.split_entries(split), key=lambda e: e.id):
        pred_path = pred_dir / f"{entry.id}.png"
        if not pred_path.is_file():
            report.errors.append({"id": entry.id,
                                  "error": f"missing prediction: {pred_path.name}"})
            continue
        truth = load_mask(manifest.entry_path(entry.mask))
        pred = load_mask(pred_path)
        try:
            row = {"id": entry.id}
            row.update(compute_sample_metrics(pred, truth, backend))
        except (UndefinedMetricError, ValidationError) as exc:
            report.errors.append({"id": entry.id, "error": str(exc)})
            continue
        report.per_sample.append(row)
    return report


_TABLE_ROWS = (
    ("SSIM", "ssim", "{:.4f}"),
    ("Perceptual ({backend})", "perceptual", "{:.4f}"),
    ("Hausdorff Dist. (mean)", "hausdorff_mean", "{:.3f}"),
    ("Hausdorff Dist. (max)", "hausdorff_max", "{:.3f}"),
    ("IoU", "iou", "{:.4f}"),
)


def render_table(report: MetricsReport) -> str:
    """Single-method table: Metric | Value columns."""
    agg = report.aggregate()
    title = f"{report.method_label} (n={report.n})"
    rows = [(name.format(backend=report.perceptual_backend),
             fmt.format(agg[key]["mean"])) for name, key, fmt in _TABLE_ROWS]
    w1 = max(len("Metric"), max(len(r[0]) for r in rows))
    w2 = max(len("Value"), max(len(r[1]) for r in rows))
    lines = [title,
             f"{'Metric':<{w1}} | {'Value':>{w2}}",
             f"{'-' * w1}-+-{'-' * w2}"]
    lines += [f"{name:<{w1}} | {val:>{w2}}" for name, val in rows]
    if report.errors:
        lines.append(f"excluded samples: {len(report.errors)}")
    return "\n".join(lines) + "\n"


def render_comparison(a: MetricsReport, b: MetricsReport) -> str:
    """Two-method table: Metric | <label a> | <label b> columns."""
    agg_a, agg_b = a.aggregate(), b.aggregate()
    col_a = f"{a.method_label} (n={a.n})"
    col_b = f"{b.method_label} (n={b.n})"
    backend = (a.perceptual_backend if a.perceptual_backend == b.perceptual_backend
               else f"{a.perceptual_backend}/{b.perceptual_backend}")
    rows = []
    for name, key, fmt in _TABLE_ROWS:
        label = name.format(backend=backend)
        rows.append((label, fmt.format(agg_a[key]["mean"]),
                     fmt.format(agg_b[key]["mean"])))
    w1 = max(len("Metric"), max(len(r[0]) for r in rows))
    w2 = max(len(col_a), max(len(r[1]) for r in rows))
    w3 = max(len(col_b), max(len(r[2]) for r in rows))
    lines = [f"{'Metric':<{w1}} | {col_a:>{w2}} | {col_b:>{w3}}",
             f"{'-' * w1}-+-{'-' * w2}-+-{'-' * w3}"]
    lines += [f"{r[0]:<{w1}} | {r[1]:>{w2}} | {r[2]:>{w3}}" for r in rows]
    return "\n".join(lines) + "\n"
