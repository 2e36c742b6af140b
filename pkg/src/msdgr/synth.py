"""Synthetic identity datasets for desk-scale experiments."""

import math

import numpy as np

from .graph import SCALES, FeatureGraph, build_adjacency
from .matcher import MultiscaleRepresentation


def texture(rng, height, width, n_waves=6, wavelengths=(3.0, 10.0)):
    """Random superposition of oriented gratings, scaled to [0, 1]."""
    y, x = np.mgrid[0:height, 0:width].astype(np.float64)
    img = np.zeros((height, width))
    for _ in range(n_waves):
        th = rng.uniform(0, math.pi)
        lam = math.exp(rng.uniform(math.log(wavelengths[0]), math.log(wavelengths[1])))
        ph = rng.uniform(0, 2 * math.pi)
        # localized blob of grating so each region of the texture differs
        cy, cx = rng.uniform(0, height), rng.uniform(0, width)
        s = rng.uniform(0.25, 0.6) * max(height, width)
        env = np.exp(-((y - cy) ** 2 + (x - cx) ** 2) / (2 * s * s))
        img += env * np.cos(2 * math.pi * (x * math.cos(th) + y * math.sin(th)) / lam + ph)
    img -= img.min()
    return img / max(img.max(), 1e-12)


def texture_dataset(n_classes, per_class, height=64, width=128, noise=0.08, seed=0):
    """``(images, labels)``: each class is one texture seen through additive noise."""
    rng = np.random.default_rng(seed)
    images, labels = [], []
    for c in range(n_classes):
        base = texture(rng, height, width)
        for _ in range(per_class):
            img = base * rng.uniform(0.85, 1.0) + rng.normal(0, noise, base.shape)
            images.append(np.clip(img, 0.0, 1.0))
            labels.append(f"c{c:03d}")
    return images, labels


def graph_dataset(n_classes, per_class, nodes=(16, 8), dim=16, noise=0.5, map_size=16,
                  nuisance=0, nuisance_std=3.0, seed=0):
    """Representations built directly from class-prototype node features.

    Samples of a class share prototype features and node layout; each sample
    adds Gaussian feature noise of std ``noise`` and small coordinate jitter.
    The last ``nuisance`` channels carry no class information, only per-sample
    noise of std ``nuisance_std``.
    """
    rng = np.random.default_rng(seed)
    reps = []
    for c in range(n_classes):
        protos = [(rng.normal(size=(n, dim)), rng.uniform(0, map_size - 1, size=(n, 2)))
                  for n in nodes]
        for _ in range(per_class):
            graphs = []
            for k, (feat, xy) in enumerate(protos):
                n = feat.shape[0]
                f = feat + noise * rng.normal(size=feat.shape)
                if nuisance:
                    f[:, dim - nuisance:] = nuisance_std * rng.normal(size=(n, nuisance))
                xy_s = np.clip(xy + rng.normal(0, 0.3, size=xy.shape), 0, map_size - 1)
                r = 2.0 * math.sqrt(map_size * map_size / n)
                graphs.append(FeatureGraph(f, xy_s, build_adjacency(xy_s, r), r, SCALES[k]))
            reps.append(MultiscaleRepresentation(graphs, np.zeros(0), f"c{c:03d}"))
    return reps
