"""Feature graphs: node localization, node sampling and Gaussian adjacency."""

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import tensor
from .errors import FormatError, InfeasibleError, MissingWeightsError, ParameterError, ShapeError

SCALES = ("small", "medium", "large")
DEFAULT_NODES = {"small": 64, "medium": 32, "large": 16}


@dataclass(frozen=True, eq=False)
class FeatureGraph:
    nodes: np.ndarray        # (N, C)
    coords: np.ndarray       # (N, 2) fractional (i, j) in map pixels
    adjacency: np.ndarray    # (N, N)
    radius: float
    scale_id: str = "small"

    def __post_init__(self):
        n = self.nodes.shape[0]
        if self.nodes.ndim != 2 or self.coords.shape != (n, 2) or self.adjacency.shape != (n, n):
            raise ShapeError(f"inconsistent graph arrays: nodes {self.nodes.shape}, "
                             f"coords {self.coords.shape}, adjacency {self.adjacency.shape}")
        if self.scale_id not in SCALES:
            raise ParameterError(f"unknown scale id {self.scale_id!r}")

    @property
    def n_nodes(self):
        return self.nodes.shape[0]

    @property
    def dim(self):
        return self.nodes.shape[1]

    def with_nodes(self, nodes):
        return replace(self, nodes=nodes)

    def permuted(self, perm):
        perm = np.asarray(perm)
        return replace(self, nodes=self.nodes[perm], coords=self.coords[perm],
                       adjacency=self.adjacency[np.ix_(perm, perm)])


@dataclass(frozen=True)
class LocalizerSpec:
    """How node locations are chosen.

    mode: ``sln`` (weights + prefix), ``grid``, ``energy-peak`` (optionally
    restricted to ``channels``) or ``external`` (``path`` to an i,j CSV, or
    ``coords`` given directly).
    """

    mode: str = "grid"
    weights: object = None
    prefix: str = "sln."
    path: str = None
    coords: np.ndarray = None
    channels: object = field(default=None, hash=False)


def build_adjacency(coords, r):
    """Gaussian-kernel adjacency with a hard cutoff at distance ``r``."""
    if not r > 0:
        raise ParameterError(f"radius must be positive, got {r}")
    c = np.asarray(coords, dtype=np.float64).reshape(-1, 2)
    diff = c[:, None, :] - c[None, :, :]
    d2 = np.einsum("abk,abk->ab", diff, diff)
    adj = np.where(d2 < r * r, np.exp(-d2 / (2.0 * r * r)), 0.0)
    np.fill_diagonal(adj, 1.0)
    return adj


def default_radius(height, width, n):
    return 2.0 * math.sqrt(height * width / n)


def grid_coords(height, width, n):
    k = math.ceil(math.sqrt(n))
    ii = (height - 1) * (np.arange(k) + 0.5) / k
    jj = (width - 1) * (np.arange(k) + 0.5) / k
    pts = np.array([(i, j) for i in ii for j in jj], dtype=np.float64)
    return pts[:n]


def energy_peaks(fmap, n, channels=None):
    """``n`` locations of largest channel L2 norm, 3x3 non-maximum suppressed.

    Suppressed pixels back-fill (by energy) when fewer than ``n`` peaks exist.
    Ties break by raster order.
    """
    f = fmap if channels is None else fmap[list(channels)]
    energy = np.sqrt(np.einsum("chw,chw->hw", f, f))
    H, W = energy.shape
    padded = np.pad(energy, 1, constant_values=-np.inf)
    win = np.lib.stride_tricks.sliding_window_view(padded, (3, 3))
    is_peak = (energy >= win.max(axis=(2, 3))).ravel()
    flat = energy.ravel()
    # stable sort on descending energy keeps raster order among ties
    order = np.argsort(-flat, kind="stable")
    chosen = np.concatenate([order[is_peak[order]], order[~is_peak[order]]])[:n]
    return np.stack([chosen // W, chosen % W], axis=1).astype(np.float64)


def read_coords_csv(path):
    rows = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            if not row or not "".join(row).strip():
                continue
            try:
                rows.append((float(row[0]), float(row[1])))
            except (ValueError, IndexError):
                if lineno == 1:
                    continue  # header
                raise FormatError(f"{path}:{lineno}: expected two numeric columns i,j") from None
    return np.array(rows, dtype=np.float64).reshape(-1, 2)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def localize_nodes(fmap, spec, n):
    """Return ``n`` in-bounds (i, j) node coordinates for ``fmap``."""
    fmap = tensor.as_tensor3(fmap)
    C, H, W = fmap.shape
    if n < 1:
        raise ParameterError("node count must be at least 1")
    if n > H * W:
        raise InfeasibleError(f"{n} nodes requested from a {H}x{W} map")
    if spec.mode == "grid":
        coords = grid_coords(H, W, n)
    elif spec.mode == "energy-peak":
        coords = energy_peaks(fmap, n, spec.channels)
    elif spec.mode == "sln":
        if spec.weights is None:
            raise MissingWeightsError("sln localizer requires weights")
        net = tensor.sln_spec(C, H, W, n, prefix=spec.prefix)
        out = _sigmoid(tensor.forward_network(net, spec.weights, fmap)).reshape(n, 2)
        coords = out * np.array([H - 1, W - 1], dtype=np.float64)
    elif spec.mode == "external":
        coords = spec.coords if spec.coords is not None else read_coords_csv(spec.path)
        coords = np.asarray(coords, dtype=np.float64).reshape(-1, 2)
        if coords.shape[0] != n:
            raise InfeasibleError(f"external localizer supplies {coords.shape[0]} "
                                  f"coordinates, {n} requested")
        if ((coords < 0) | (coords > np.array([H - 1, W - 1]))).any():
            raise InfeasibleError("external coordinates fall outside the feature map")
    else:
        raise ParameterError(f"unknown localizer mode {spec.mode!r}")
    return np.ascontiguousarray(coords)


def make_feature_graph(fmap, spec, n, r=None, scale_id="small"):
    fmap = tensor.as_tensor3(fmap)
    _, H, W = fmap.shape
    coords = localize_nodes(fmap, spec, n)
    if r is None:
        r = default_radius(H, W, n)
    nodes = tensor.bilinear_sample_many(fmap, coords)
    return FeatureGraph(nodes, coords, build_adjacency(coords, r), float(r), scale_id)


def graph_to_arrays(g, prefix=""):
    return {
        prefix + "nodes": g.nodes,
        prefix + "coords": g.coords,
        prefix + "adjacency": g.adjacency,
        prefix + "radius": np.array([g.radius]),
        prefix + "scale_id": np.array([SCALES.index(g.scale_id)]),
    }


def graph_from_arrays(arrays, prefix=""):
    try:
        return FeatureGraph(
            nodes=np.asarray(arrays[prefix + "nodes"], dtype=np.float64),
            coords=np.asarray(arrays[prefix + "coords"], dtype=np.float64),
            adjacency=np.asarray(arrays[prefix + "adjacency"], dtype=np.float64),
            radius=float(arrays[prefix + "radius"][0]),
            scale_id=SCALES[int(arrays[prefix + "scale_id"][0])],
        )
    except KeyError as exc:
        raise FormatError(f"missing graph array {exc.args[0]!r}") from None
