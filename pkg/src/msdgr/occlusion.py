"""Synthetic occlusions: side bands, random rectangles and random blobs."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

KINDS = ("rectangle-region", "random-rectangle", "random-shape")
REGIONS = ("right", "left", "upper", "bottom", "bilateral")
TOLERANCE = 0.02
USABLE_AREA_BINS = ((70.0, 80.0), (60.0, 70.0), (50.0, 60.0))


@dataclass(frozen=True)
class OcclusionSpec:
    kind: str = "rectangle-region"
    area_fraction: float = 0.3
    region: str = "upper"
    fill: object = "random-noise"  # or a constant pixel value
    seed: int = 0


@dataclass(eq=False)
class OcclusionRecord:
    image: np.ndarray
    mask: np.ndarray  # bool (H, W)
    fraction: float


def _band_mask(H, W, f, region):
    m = np.zeros((H, W), dtype=bool)
    if region in ("upper", "bottom"):
        k = math.ceil(f * H)
        if region == "upper":
            m[:k] = True
        elif k:
            m[H - k:] = True
    elif region in ("left", "right"):
        k = math.ceil(f * W)
        if region == "left":
            m[:, :k] = True
        elif k:
            m[:, W - k:] = True
    elif region == "bilateral":
        k = math.ceil(f * W / 2)
        if k:
            m[:, :k] = True
            m[:, W - k:] = True
    else:
        raise ParameterError(f"unknown region {region!r}; choose from {REGIONS}")
    return m


def _rect_mask(H, W, f, rng):
    area = f * H * W
    lo = max(1, math.ceil(area / W))
    for _ in range(1000):
        h = int(rng.integers(lo, H + 1))
        w = min(W, max(1, round(area / h)))
        if abs(h * w / (H * W) - f) <= TOLERANCE:
            break
    else:
        raise ParameterError(f"cannot place a rectangle covering {f:.0%} of {H}x{W}")
    i = int(rng.integers(0, H - h + 1))
    j = int(rng.integers(0, W - w + 1))
    m = np.zeros((H, W), dtype=bool)
    m[i:i + h, j:j + w] = True
    return m


def _shape_mask(H, W, f, rng):
    # union of 1-4 random ellipses, all grown by one common factor until
    # exactly round(f*H*W) pixels are covered
    y, x = np.mgrid[0:H, 0:W].astype(np.float64)
    field = np.full((H, W), np.inf)
    for _ in range(int(rng.integers(1, 5))):
        cy, cx = rng.uniform(0, H), rng.uniform(0, W)
        a, b = rng.uniform(0.3, 1.0, size=2) * np.array([H, W])
        th = rng.uniform(0, math.pi)
        u = ((y - cy) * math.cos(th) + (x - cx) * math.sin(th)) / a
        v = (-(y - cy) * math.sin(th) + (x - cx) * math.cos(th)) / b
        field = np.minimum(field, np.hypot(u, v))
    k = round(f * H * W)
    m = np.zeros(H * W, dtype=bool)
    m[np.argsort(field.ravel(), kind="stable")[:k]] = True
    return m.reshape(H, W)


def _noise(image, shape, rng):
    img = np.asarray(image)
    lo, hi = img.min(), img.max()
    if np.issubdtype(img.dtype, np.integer):
        if lo == hi:
            lo, hi = np.iinfo(img.dtype).min, np.iinfo(img.dtype).max
        return rng.integers(int(lo), int(hi) + 1, size=shape).astype(img.dtype)
    if lo == hi:
        lo, hi = 0.0, 1.0
    return rng.uniform(float(lo), float(hi), size=shape).astype(img.dtype)


def occlude(image, spec):
    """Occlude ``image`` (H, W) or (H, W, C) according to ``spec``."""
    img = np.asarray(image)
    if img.ndim not in (2, 3):
        raise ParameterError(f"expected an image array, got shape {img.shape}")
    f = spec.area_fraction
    if not 0 <= f < 1:
        raise ParameterError(f"area fraction must lie in [0, 1), got {f}")
    H, W = img.shape[:2]
    rng = np.random.default_rng(spec.seed)
    if f == 0:
        mask = np.zeros((H, W), dtype=bool)
    elif spec.kind == "rectangle-region":
        mask = _band_mask(H, W, f, spec.region)
    elif spec.kind == "random-rectangle":
        mask = _rect_mask(H, W, f, rng)
    elif spec.kind == "random-shape":
        mask = _shape_mask(H, W, f, rng)
    else:
        raise ParameterError(f"unknown occlusion kind {spec.kind!r}; choose from {KINDS}")
    frac = float(mask.mean())
    if abs(frac - f) > TOLERANCE:
        raise ParameterError(f"{H}x{W} image cannot realize {f:.0%} occlusion "
                             f"within {TOLERANCE:.0%} (got {frac:.2%})")
    out = img.copy()
    n = int(mask.sum())
    if n:
        shape = (n,) + img.shape[2:]
        if isinstance(spec.fill, str):
            if spec.fill != "random-noise":
                raise ParameterError(f"unknown fill {spec.fill!r}")
            out[mask] = _noise(img, shape, rng)
        else:
            out[mask] = spec.fill
    return OcclusionRecord(out, mask, frac)


def usable_area(mask, iris_area):
    """Percentage of the iris region left unoccluded.

    ``mask`` is an occlusion mask or a pixel count; ``iris_area`` is the iris
    pixel count or a boolean iris mask (occlusion outside it is ignored).
    """
    if np.ndim(iris_area) == 0:
        n_iris = int(iris_area)
        n_occ = int(np.count_nonzero(mask)) if np.ndim(mask) else int(mask)
    else:
        iris = np.asarray(iris_area, dtype=bool)
        n_iris = int(iris.sum())
        n_occ = int(np.count_nonzero(np.asarray(mask, dtype=bool) & iris))
    if n_iris <= 0:
        raise ParameterError("iris area must be positive")
    if not 0 <= n_occ <= n_iris:
        raise ParameterError(f"occluded count {n_occ} exceeds iris area {n_iris}")
    return (1.0 - n_occ / n_iris) * 100.0


def usable_area_bin(percent):
    """Label of the reporting bin holding ``percent`` (upper edge exclusive), or None."""
    for lo, hi in USABLE_AREA_BINS:
        if lo <= percent < hi:
            return f"{lo:.0f}%-{hi:.0f}%"
    return None
