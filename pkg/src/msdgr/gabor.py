"""Handcrafted front end: a 40-filter 2D Gabor bank and patch-node graphs.

Each filter contributes three channels to the feature tensor: the sign of the
real response, the sign of the imaginary response (both in {-1, +1}, with
sign(0) = +1) and the response magnitude.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import FormatError, ParameterError, ShapeError
from .graph import FeatureGraph, build_adjacency

N_ORIENTATIONS = 8
WAVELENGTHS = tuple(2.5 * 2 ** (k / 2) for k in range(5))  # 2.5 .. 10 px, half-octave steps
SIGMA_PER_WAVELENGTH = 0.5
ENVELOPE_EXTENT = 2.5  # kernel half-width in envelope sigmas
PATCH_SCALE = 9


@dataclass(frozen=True)
class GaborParams:
    orientation: float  # radians
    wavelength: float
    sigma: float
    aspect: float = 1.0
    phase: float = 0.0


@dataclass(frozen=True, eq=False)
class GaborBank:
    params: tuple
    real: np.ndarray  # (F, K, K)
    imag: np.ndarray

    @property
    def size(self):
        return len(self.params)

    @property
    def kernel_size(self):
        return self.real.shape[-1]

    @property
    def n_channels(self):
        return 3 * self.size

    def energy_channels(self):
        return list(range(2, self.n_channels, 3))


def default_params():
    return [GaborParams(k * math.pi / N_ORIENTATIONS, lam, SIGMA_PER_WAVELENGTH * lam)
            for lam in WAVELENGTHS for k in range(N_ORIENTATIONS)]


def _kernel(p, half):
    y, x = np.mgrid[-half:half + 1, -half:half + 1].astype(np.float64)
    xr = x * math.cos(p.orientation) + y * math.sin(p.orientation)
    yr = -x * math.sin(p.orientation) + y * math.cos(p.orientation)
    env = np.exp(-(xr ** 2 + (p.aspect * yr) ** 2) / (2.0 * p.sigma ** 2))
    k = env * np.exp(1j * (2.0 * math.pi * xr / p.wavelength + p.phase))
    return k - k.mean()


def build_bank(params=None):
    params = tuple(default_params() if params is None else params)
    if not params:
        raise ParameterError("empty filter bank")
    for p in params:
        if p.wavelength <= 0 or p.sigma <= 0 or p.aspect <= 0:
            raise ParameterError(f"non-positive wavelength/sigma/aspect in {p}")
    half = max(math.ceil(ENVELOPE_EXTENT * p.sigma / min(p.aspect, 1.0)) for p in params)
    ks = np.stack([_kernel(p, half) for p in params])
    return GaborBank(params, np.ascontiguousarray(ks.real), np.ascontiguousarray(ks.imag))


def read_bank_config(path):
    """Parse ``orientation_deg wavelength sigma aspect phase_deg`` lines."""
    params = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].replace(",", " ").strip()
            if not line:
                continue
            try:
                o, lam, sig, asp, ph = (float(v) for v in line.split())
            except ValueError:
                raise FormatError(f"{path}:{lineno}: expected 5 numbers") from None
            params.append(GaborParams(math.radians(o), lam, sig, asp, math.radians(ph)))
    return params


def write_bank_config(path, params):
    with open(path, "w") as fh:
        fh.write("# orientation_deg wavelength sigma aspect phase_deg\n")
        for p in params:
            fh.write(f"{math.degrees(p.orientation)!r} {p.wavelength!r} {p.sigma!r} "
                     f"{p.aspect!r} {math.degrees(p.phase)!r}\n")


def responses(bank, image):
    """Complex filter responses, same spatial size (reflect padding)."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2:
        raise ShapeError(f"expected a 2-D image, got shape {img.shape}")
    K = bank.kernel_size
    if img.shape[0] < K or img.shape[1] < K:
        raise ShapeError(f"image {img.shape} smaller than the {K}x{K} Gabor kernel")
    h = K // 2
    padded = np.pad(img, h, mode="reflect")[None]
    w = np.concatenate([bank.real, bank.imag])[:, None]
    out = _backend.kernels.conv2d(np.ascontiguousarray(padded), np.ascontiguousarray(w),
                                  np.zeros(w.shape[0]), 1, 1, 0, 0)
    F = bank.size
    re, im = out[:F], out[F:]
    # responses at rounding level of a zero-sum kernel are exact zeros
    scale = max(1.0, float(np.abs(img).max()))
    tol_re = 1e-12 * scale * np.abs(bank.real).sum(axis=(1, 2))[:, None, None]
    tol_im = 1e-12 * scale * np.abs(bank.imag).sum(axis=(1, 2))[:, None, None]
    re = np.where(np.abs(re) <= tol_re, 0.0, re)
    im = np.where(np.abs(im) <= tol_im, 0.0, im)
    return re, im


def extract(bank, image):
    """Binary Gabor feature tensor of shape ``(3 * filters, H, W)``."""
    re, im = responses(bank, image)
    out = np.empty((3 * bank.size,) + re.shape[1:])
    out[0::3] = np.where(re >= 0, 1.0, -1.0)
    out[1::3] = np.where(im >= 0, 1.0, -1.0)
    out[2::3] = np.hypot(re, im)
    return out


def patch_centers(coords, height, width, s):
    h = s // 2
    c = np.rint(np.asarray(coords, dtype=np.float64).reshape(-1, 2)).astype(np.int64)
    c[:, 0] = np.clip(c[:, 0], h, height - 1 - h)
    c[:, 1] = np.clip(c[:, 1], h, width - 1 - h)
    return c


def graph_from_gabor(feat, coords, s=PATCH_SCALE, scale_id="medium"):
    """Nodes are flattened ``C x s x s`` patches; edges use radius ``s``."""
    if s < 1 or s % 2 == 0:
        raise ParameterError(f"patch scale must be a positive odd integer, got {s}")
    C, H, W = feat.shape
    if H < s or W < s:
        raise ShapeError(f"feature tensor {H}x{W} smaller than patch {s}x{s}")
    h = s // 2
    centers = patch_centers(coords, H, W, s)
    nodes = np.stack([feat[:, i - h:i + h + 1, j - h:j + h + 1].ravel() for i, j in centers])
    cf = centers.astype(np.float64)
    return FeatureGraph(nodes, cf, build_adjacency(cf, float(s)), float(s), scale_id)
