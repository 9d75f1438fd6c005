"""Synthetic paired (remnant photo, contour mask) sample generation.

Every sample is a simple star-shaped outer polygon (mostly convex, mildly
dented, optionally carrying one smooth concave bite) with circular and
rectangular holes, rasterized exactly with the even-odd rule and rendered
into a photo-like image: per-region shade, texture modulation, a linear
lighting gradient, and additive Gaussian noise.

Generation is a pure function of (seed, config). Rejection sampling retries
with a fresh per-attempt random stream, so a given seed always produces the
same sample for a given config.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from . import geometry, imageio
from .errors import GenerationFailedError, ValidationError

TEXTURES = ("flat", "brushed", "speckled")
_CIRCLE_SIDES = 32


@dataclass
class RemnantSpec:
    """One sampled remnant: geometry plus rendering parameters.

    ``outer_polygon`` and each hole are (N, 2) float arrays of (x, y) pixel
    coordinates snapped to the rasterizer lattice. The lighting gradient is
    a per-pixel shade slope (gx, gy).
    """

    outer_polygon: np.ndarray
    holes: list[np.ndarray]
    texture: str
    lighting_gradient: tuple[float, float]
    noise_sigma: float
    background_shade: float
    foreground_shade: float

    def validate(self) -> None:
        if self.texture not in TEXTURES:
            raise ValidationError(f"unknown texture {self.texture!r}")
        if not 0.0 <= self.noise_sigma <= 0.3:
            raise ValidationError(f"noise_sigma {self.noise_sigma} outside [0, 0.3]")
        for name, v in (("background_shade", self.background_shade),
                        ("foreground_shade", self.foreground_shade)):
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"{name} {v} outside [0, 1]")
        if len(self.outer_polygon) < 3:
            raise ValidationError("outer polygon needs at least 3 vertices")


@dataclass
class SamplePair:
    """A (photo, ground-truth mask) pair with its generation provenance."""

    photo: np.ndarray
    mask: np.ndarray
    spec_seed: int
    id: str

    def validate(self) -> None:
        if self.photo.shape[:2] != self.mask.shape:
            raise ValidationError(
                f"photo {self.photo.shape[:2]} and mask {self.mask.shape} differ")
        frac = float(self.mask.mean())
        if not 0.0 < frac < 1.0:
            raise ValidationError(f"mask foreground fraction {frac} not in (0, 1)")


@dataclass
class GenerationConfig:
    """Sampling ranges for :func:`generate_remnant`.

    All ranges are inclusive (lo, hi). Shade bands for background and
    foreground are kept disjoint so the noiseless render is separable by a
    luminance threshold.
    """

    image_size: int = 256
    vertex_range: tuple[int, int] = (8, 24)
    radius_range: tuple[float, float] = (0.55, 0.92)  # fraction of half-size
    dent_max: float = 0.22          # per-vertex inward radius perturbation
    bite_prob: float = 0.5          # chance of one smooth concave arc bite
    bite_depth_range: tuple[float, float] = (0.15, 0.35)
    hole_count_range: tuple[int, int] = (0, 3)
    hole_radius_range: tuple[float, float] = (0.04, 0.11)  # fraction of size
    textures: tuple[str, ...] = TEXTURES
    background_shade_range: tuple[float, float] = (0.08, 0.38)
    foreground_shade_range: tuple[float, float] = (0.58, 0.92)
    gradient_max: float = 0.0008    # shade slope per px
    noise_sigma_range: tuple[float, float] = (0.0, 0.06)
    foreground_fraction_band: tuple[float, float] = (0.15, 0.85)
    max_attempts: int = 25

    def validate(self) -> None:
        if self.image_size < 16:
            raise ValidationError("image_size must be >= 16")
        lo, hi = self.vertex_range
        if not (3 <= lo <= hi <= 64):
            raise ValidationError(f"bad vertex_range {self.vertex_range}")
        for name in ("radius_range", "bite_depth_range", "hole_radius_range",
                     "background_shade_range", "foreground_shade_range",
                     "noise_sigma_range", "foreground_fraction_band"):
            a, b = getattr(self, name)
            if not a <= b:
                raise ValidationError(f"empty range {name}={getattr(self, name)}")
        if self.noise_sigma_range[0] < 0 or self.noise_sigma_range[1] > 0.3:
            raise ValidationError("noise_sigma_range outside [0, 0.3]")
        if self.hole_count_range[0] < 0:
            raise ValidationError("hole count cannot be negative")
        if not set(self.textures) <= set(TEXTURES):
            raise ValidationError(f"unknown textures in {self.textures}")
        fb = self.foreground_fraction_band
        if not 0.0 < fb[0] <= fb[1] < 1.0:
            raise ValidationError("foreground_fraction_band must sit inside (0, 1)")

    def content_hash(self) -> str:
        blob = json.dumps(dataclasses.asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]


def _sample_outer(rng: np.random.Generator, cfg: GenerationConfig) -> np.ndarray:
    """Star-shaped outer polygon: jittered angles, dented radii, one bite.

    Star-shaped-by-construction keeps the polygon simple for any draw.
    """
    size = cfg.image_size
    half = size / 2.0
    n = int(rng.integers(cfg.vertex_range[0], cfg.vertex_range[1] + 1))
    spacing = 2.0 * math.pi / n
    angles = np.arange(n) * spacing + rng.uniform(-0.45, 0.45, n) * spacing
    base_r = rng.uniform(*cfg.radius_range) * half
    radii = base_r * (1.0 - cfg.dent_max * rng.uniform(0.0, 1.0, n))

    do_bite = rng.uniform() < cfg.bite_prob
    bite_center = rng.uniform(0.0, 2.0 * math.pi)
    bite_width = rng.uniform(0.6, 1.6)
    bite_depth = rng.uniform(*cfg.bite_depth_range)
    if do_bite:
        # Smooth radial dip over an angular window reads as an arc bite.
        delta = np.angle(np.exp(1j * (angles - bite_center)))
        inside = np.abs(delta) < bite_width / 2.0
        profile = 0.5 * (1.0 + np.cos(2.0 * math.pi * delta / bite_width))
        radii = radii * (1.0 - bite_depth * profile * inside)

    center = half + rng.uniform(-0.05, 0.05, 2) * size
    pts = np.stack([center[0] + radii * np.cos(angles),
                    center[1] + radii * np.sin(angles)], axis=1)
    return geometry.snap_points(pts)


def _circle_ring(cx: float, cy: float, r: float) -> np.ndarray:
    th = np.linspace(0.0, 2.0 * math.pi, _CIRCLE_SIDES, endpoint=False)
    return geometry.snap_points(
        np.stack([cx + r * np.cos(th), cy + r * np.sin(th)], axis=1))


def _rect_ring(cx: float, cy: float, hw: float, hh: float, theta: float) -> np.ndarray:
    corners = np.array([[-hw, -hh], [hw, -hh], [hw, hh], [-hw, hh]])
    rot = np.array([[math.cos(theta), -math.sin(theta)],
                    [math.sin(theta), math.cos(theta)]])
    return geometry.snap_points(corners @ rot.T + [cx, cy])


def _hole_fits(hole: np.ndarray, outer: np.ndarray,
               others: list[np.ndarray], margin: float) -> bool:
    if not bool(np.all(geometry.points_in_polygon(hole, outer))):
        return False
    if geometry.polygon_min_distance(hole, outer) < margin:
        return False
    for other in others:
        if geometry.polygon_min_distance(hole, other) < margin:
            return False
        if bool(np.any(geometry.points_in_polygon(hole[:1], other))):
            return False
        if bool(np.any(geometry.points_in_polygon(other[:1], hole))):
            return False
    return True


def _sample_holes(rng: np.random.Generator, cfg: GenerationConfig,
                  outer: np.ndarray) -> list[np.ndarray] | None:
    """Place the drawn number of disjoint holes; None when placement fails."""
    count = int(rng.integers(cfg.hole_count_range[0], cfg.hole_count_range[1] + 1))
    size = cfg.image_size
    margin = max(2.0, size / 128.0)
    holes: list[np.ndarray] = []
    for _ in range(count):
        placed = False
        for _ in range(12):
            kind_circle = rng.uniform() < 0.5
            cx = rng.uniform(0.15, 0.85) * size
            cy = rng.uniform(0.15, 0.85) * size
            r = rng.uniform(*cfg.hole_radius_range) * size
            theta = rng.uniform(0.0, math.pi)
            if kind_circle:
                ring = _circle_ring(cx, cy, r)
            else:
                aspect = rng.uniform(0.5, 1.8)
                ring = _rect_ring(cx, cy, r, r * aspect, theta)
            if _hole_fits(ring, outer, holes, margin):
                holes.append(ring)
                placed = True
                break
        if not placed:
            return None
    return holes


def rasterize_spec(spec: RemnantSpec, size: int) -> np.ndarray:
    """Exact even-odd mask of the polygon-with-holes (boundary = foreground)."""
    return geometry.rasterize_rings([spec.outer_polygon] + list(spec.holes),
                                    (size, size))


def _render_photo(spec: RemnantSpec, mask: np.ndarray,
                  rng_appearance: np.random.Generator,
                  noise_field: np.ndarray) -> np.ndarray:
    h, w = mask.shape
    img = np.where(mask, spec.foreground_shade, spec.background_shade)

    if spec.texture == "brushed":
        theta = rng_appearance.uniform(0.0, math.pi)
        period = rng_appearance.uniform(4.0, 12.0)
        phase = rng_appearance.uniform(0.0, 2.0 * math.pi)
        yy, xx = np.mgrid[0:h, 0:w]
        stripes = 0.03 * np.sin(
            2.0 * math.pi * (math.cos(theta) * xx + math.sin(theta) * yy) / period
            + phase)
        img = img + stripes * mask
    elif spec.texture == "speckled":
        coarse = rng_appearance.standard_normal((h // 8 + 2, w // 8 + 2))
        blotches = ndimage.zoom(coarse, (h / coarse.shape[0], w / coarse.shape[1]),
                                order=1)[:h, :w]
        img = img + 0.05 * np.clip(blotches, -2.0, 2.0) * mask

    gx, gy = spec.lighting_gradient
    yy, xx = np.mgrid[0:h, 0:w]
    img = img + gx * (xx - w / 2.0) + gy * (yy - h / 2.0)

    img = img + spec.noise_sigma * noise_field
    return imageio.to_rgb(np.clip(img, 0.0, 1.0).astype(np.float32))


def generate_remnant(seed: int, config: GenerationConfig | None = None) -> SamplePair:
    """Deterministically generate one (photo, mask) sample for a seed."""
    cfg = config or GenerationConfig()
    cfg.validate()
    if seed < 0:
        raise ValidationError("seed must be >= 0")

    last_constraint = "unknown"
    for attempt in range(cfg.max_attempts):
        rng_geom = np.random.default_rng(np.random.SeedSequence([seed, attempt, 0]))
        rng_look = np.random.default_rng(np.random.SeedSequence([seed, attempt, 1]))
        rng_noise = np.random.default_rng(np.random.SeedSequence([seed, attempt, 2]))

        outer = _sample_outer(rng_geom, cfg)
        holes = _sample_holes(rng_geom, cfg, outer)
        if holes is None:
            last_constraint = "holes strictly inside the outer polygon, pairwise disjoint"
            continue

        texture = cfg.textures[int(rng_look.integers(len(cfg.textures)))]
        bg = rng_look.uniform(*cfg.background_shade_range)
        fg = rng_look.uniform(*cfg.foreground_shade_range)
        grad_angle = rng_look.uniform(0.0, 2.0 * math.pi)
        grad_mag = rng_look.uniform(0.0, cfg.gradient_max)
        sigma = rng_look.uniform(*cfg.noise_sigma_range)

        spec = RemnantSpec(
            outer_polygon=outer,
            holes=holes,
            texture=texture,
            lighting_gradient=(grad_mag * math.cos(grad_angle),
                               grad_mag * math.sin(grad_angle)),
            noise_sigma=sigma,
            background_shade=bg,
            foreground_shade=fg,
        )
        spec.validate()

        mask = rasterize_spec(spec, cfg.image_size)
        frac = float(mask.mean())
        lo, hi = cfg.foreground_fraction_band
        if not lo <= frac <= hi:
            last_constraint = f"foreground fraction {frac:.3f} in [{lo}, {hi}]"
            continue

        noise_field = rng_noise.standard_normal(mask.shape)
        photo = _render_photo(spec, mask, rng_look, noise_field)
        pair = SamplePair(photo=photo, mask=mask, spec_seed=seed,
                          id=f"s{seed:08d}")
        pair.validate()
        return pair

    raise GenerationFailedError(
        f"no valid sample for seed {seed} after {cfg.max_attempts} attempts",
        constraint=last_constraint)


@dataclass
class ManifestEntry:
    id: str
    photo: str
    mask: str
    split: str
    seed: int


@dataclass
class DatasetManifest:
    root_path: Path
    created_with: str
    entries: list[ManifestEntry] = field(default_factory=list)

    def split_entries(self, split: str) -> list[ManifestEntry]:
        return [e for e in self.entries if e.split == split]

    def entry_path(self, rel: str) -> Path:
        return self.root_path / rel


def _split_sizes(n: int, ratios: tuple[float, float, float]) -> tuple[int, int, int]:
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValidationError(f"split ratios {ratios} do not sum to 1")
    if any(r < 0 for r in ratios):
        raise ValidationError("split ratios must be non-negative")
    sizes = [int(math.floor(n * r)) for r in ratios]
    sizes[0] += n - sum(sizes)  # leftover goes to train
    for r, s, name in zip(ratios, sizes, ("train", "val", "test")):
        if r > 0 and s == 0:
            raise ValidationError(
                f"n={n} too small to populate split {name!r} at ratio {r}")
    return tuple(sizes)


def generate_dataset(n: int, config: GenerationConfig | None = None,
                     split_ratios: tuple[float, float, float] = (0.8, 0.1, 0.1),
                     out: str | Path = ".", base_seed: int = 0) -> DatasetManifest:
    """Write n generated pairs plus manifest.json under ``out``."""
    if n < 3:
        raise ValidationError("n must be >= 3")
    cfg = config or GenerationConfig()
    cfg.validate()
    train_n, val_n, _test_n = _split_sizes(n, split_ratios)

    root = Path(out)
    try:
        (root / "photos").mkdir(parents=True, exist_ok=True)
        (root / "masks").mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ValidationError(f"cannot create dataset directory {root}: {exc}") from exc

    manifest = DatasetManifest(root_path=root, created_with=cfg.content_hash())
    for i in range(n):
        pair = generate_remnant(base_seed + i, cfg)
        split = "train" if i < train_n else ("val" if i < train_n + val_n else "test")
        photo_rel = f"photos/{pair.id}.png"
        mask_rel = f"masks/{pair.id}.png"
        imageio.save_photo(root / photo_rel, pair.photo)
        imageio.save_mask(root / mask_rel, pair.mask)
        manifest.entries.append(ManifestEntry(
            id=pair.id, photo=photo_rel, mask=mask_rel, split=split,
            seed=pair.spec_seed))

    save_manifest(manifest)
    return manifest


def save_manifest(manifest: DatasetManifest) -> Path:
    payload = {
        "root": ".",
        "created_with": manifest.created_with,
        "entries": [{"id": e.id, "photo": e.photo, "mask": e.mask,
                     "split": e.split, "seed": e.seed}
                    for e in manifest.entries],
    }
    path = manifest.root_path / "manifest.json"
    imageio._atomic_write(path, json.dumps(payload, indent=2).encode())
    return path


def load_manifest(path: str | Path) -> DatasetManifest:
    """Load manifest.json; the manifest's directory is the dataset root."""
    p = Path(path)
    if p.is_dir():
        p = p / "manifest.json"
    if not p.is_file():
        raise ValidationError(f"manifest not found: {p}")
    data = json.loads(p.read_text())
    root = p.parent
    entries = [ManifestEntry(id=e["id"], photo=e["photo"], mask=e["mask"],
                             split=e["split"], seed=int(e["seed"]))
               for e in data["entries"]]
    ids = [e.id for e in entries]
    if len(set(ids)) != len(ids):
        raise ValidationError("manifest ids are not unique")
    for e in entries:
        if e.split not in ("train", "val", "test"):
            raise ValidationError(f"bad split {e.split!r} for id {e.id}")
        for rel in (e.photo, e.mask):
            if not (root / rel).is_file():
                raise ValidationError(f"manifest references missing file: {rel}")
    return DatasetManifest(root_path=root, created_with=data["created_with"],
                           entries=entries)
