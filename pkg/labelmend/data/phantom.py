"""Deterministic echo-like phantom generator with LV, LVM ring and LA structures."""

from dataclasses import dataclass
from typing import List, Optional, Tuple
import logging

import numpy as np
from scipy import ndimage

from ..corruption.morphology import StructuringElement, dilate
from ..errors import ConfigError, DataError
from .sample import LabeledSample

logger = logging.getLogger(__name__)

MAX_ATTEMPTS = 100
MIN_CLASS_PIXELS = 16

# Base intensities: tissue background, blood pools dark, myocardium bright
CLASS_INTENSITY = np.array([0.30, 0.08, 0.70, 0.12], dtype=np.float64)
SPECKLE_SIGMA = 0.15
BLUR_SIGMA = 1.0


@dataclass(frozen=True)
class Ellipse:
    row: float
    col: float
    semi_rows: float  # semi-axis along the (unrotated) vertical
    semi_cols: float
    angle: float

    def raster(self, shape: Tuple[int, int]) -> np.ndarray:
        rr, cc = np.mgrid[0 : shape[0], 0 : shape[1]]
        dy = rr - self.row
        dx = cc - self.col
        cos, sin = np.cos(self.angle), np.sin(self.angle)
        u = (dy * cos + dx * sin) / self.semi_rows
        v = (-dy * sin + dx * cos) / self.semi_cols
        return u * u + v * v <= 1.0


@dataclass(frozen=True)
class PhantomLayout:
    """Sampled geometry of one phantom."""
    lv: Ellipse
    la: Ellipse
    ring_thickness: int


def quantize(image: np.ndarray) -> np.ndarray:
    """[0, 1] floats to 8-bit codes."""
    return np.clip(np.floor(image * 255.0 + 0.5), 0, 255).astype(np.uint8)


def dequantize(codes: np.ndarray) -> np.ndarray:
    return (codes.astype(np.float32) / np.float32(255.0)).astype(np.float32)


def sample_layout(shape: Tuple[int, int], rng: np.random.Generator) -> PhantomLayout:
    h, w = shape
    lv = Ellipse(
        row=h * rng.uniform(0.30, 0.40),
        col=w * rng.uniform(0.42, 0.58),
        semi_rows=h * rng.uniform(0.14, 0.20),
        semi_cols=w * rng.uniform(0.08, 0.12),
        angle=rng.uniform(-0.35, 0.35),
    )
    thickness = int(rng.integers(2, 5))
    la_semi_rows = h * rng.uniform(0.07, 0.10)
    la = Ellipse(
        row=lv.row + lv.semi_rows + thickness + la_semi_rows + rng.uniform(1.0, 3.0),
        col=lv.col + w * rng.uniform(-0.05, 0.05),
        semi_rows=la_semi_rows,
        semi_cols=w * rng.uniform(0.08, 0.12),
        angle=rng.uniform(-0.3, 0.3),
    )
    return PhantomLayout(lv=lv, la=la, ring_thickness=thickness)


def _touches_border(region: np.ndarray) -> bool:
    return bool(region[0].any() or region[-1].any() or region[:, 0].any() or region[:, -1].any())


def rasterize_layout(shape: Tuple[int, int], layout: PhantomLayout) -> Optional[np.ndarray]:
    """Class-index mask for ``layout``, or None when it does not fit the canvas."""
    lv = layout.lv.raster(shape)
    la = layout.la.raster(shape)
    wall = dilate(lv, StructuringElement(layout.ring_thickness))
    ring = wall & ~lv
    if _touches_border(wall) or _touches_border(la) or (la & wall).any():
        return None
    if min(lv.sum(), ring.sum(), la.sum()) < MIN_CLASS_PIXELS:
        return None
    mask = np.zeros(shape, dtype=np.uint8)
    mask[ring] = 2
    mask[lv] = 1
    mask[la] = 3
    return mask


def render_image(mask: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Echo-like texture: class intensities, illumination ramp, speckle, blur."""
    h, w = mask.shape
    image = CLASS_INTENSITY[mask]

    direction = rng.uniform(0.0, 2.0 * np.pi)
    strength = rng.uniform(-0.3, 0.3)
    rr, cc = np.mgrid[0:h, 0:w]
    ramp = (rr / (h - 1) - 0.5) * np.cos(direction) + (cc / (w - 1) - 0.5) * np.sin(direction)
    image = image * (1.0 + strength * ramp)

    image = image * (1.0 + SPECKLE_SIGMA * rng.standard_normal((h, w)))
    image = ndimage.gaussian_filter(image, sigma=BLUR_SIGMA, truncate=1.0)
    return dequantize(quantize(np.clip(image, 0.0, 1.0)))[None]


def generate_one(index: int, shape: Tuple[int, int], seed: int) -> LabeledSample:
    rng = np.random.default_rng([seed, index])
    for attempt in range(MAX_ATTEMPTS):
        mask = rasterize_layout(shape, sample_layout(shape, rng))
        if mask is not None:
            break
        logger.debug(f"Phantom {index}: layout attempt {attempt + 1} did not fit, resampling")
    else:
        raise DataError(
            f"phantom {index}: no layout fit a {shape[0]}x{shape[1]} canvas "
            f"after {MAX_ATTEMPTS} attempts"
        )
    image = render_image(mask, rng)
    return LabeledSample(
        id=f"phantom-{index:04d}", image=image, mask=mask, clean_mask=mask.copy()
    )


def generate_phantom(n: int, size: Tuple[int, int], seed: int) -> List[LabeledSample]:
    """Generate ``n`` phantoms; sample i draws from a generator seeded by (seed, i)."""
    h, w = size
    for extent in (h, w):
        if extent < 32 or extent & (extent - 1):
            raise ConfigError(f"phantom extents must be powers of two >= 32, got {h}x{w}")
    if n < 1:
        raise ConfigError(f"phantom count must be positive, got {n}")
    samples = [generate_one(i, (h, w), seed) for i in range(n)]
    logger.info(f"Generated {n} phantoms at {h}x{w} (seed {seed})")
    return samples
