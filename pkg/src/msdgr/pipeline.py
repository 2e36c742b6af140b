"""Image -> multiscale representation pipelines, manifests and repr files."""

import csv
import os
from dataclasses import dataclass

import numpy as np

from . import container, gabor, graph, imageio, segat, tensor
from .errors import DataError, FormatError, MissingWeightsError, ShapeError
from .matcher import MultiscaleRepresentation


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    label: str
    split: str = ""


def load_manifest(path):
    """CSV with header ``path,label[,split]``; paths relative to the file."""
    base = os.path.dirname(os.path.abspath(path))
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:2] != ["path", "label"]:
            raise FormatError(f"{path}:1: manifest header must start with path,label")
        for lineno, row in enumerate(reader, 2):
            if not row:
                continue
            if len(row) < 2 or not row[1]:
                raise FormatError(f"{path}:{lineno}: expected path,label")
            p = row[0] if os.path.isabs(row[0]) else os.path.join(base, row[0])
            if not os.path.exists(p):
                raise DataError(f"{path}:{lineno}: file not found: {row[0]}")
            out.append(ManifestEntry(p, row[1], row[2] if len(row) > 2 else ""))
    return out


def write_manifest(path, entries):
    base = os.path.dirname(os.path.abspath(path))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["path", "label", "split"])
        for e in entries:
            w.writerow([os.path.relpath(e.path, base), e.label, e.split])


def _f32(x):
    return np.asarray(x, dtype=np.float32).astype(np.float64)


def quantize(rep):
    """Round every array to float32 so in-memory and on-disk reps agree."""
    gs = [graph.FeatureGraph(_f32(g.nodes), _f32(g.coords), _f32(g.adjacency),
                             float(np.float32(g.radius)), g.scale_id) for g in rep.graphs]
    return MultiscaleRepresentation(gs, _f32(rep.global_feature), rep.label)


def _localizer(cfg, **extra):
    mode = cfg["localizer.mode"]
    if mode == "external":
        return graph.LocalizerSpec("external", path=cfg["localizer.path"] or None, **extra)
    return graph.LocalizerSpec(mode, **extra)


class GaborPipeline:
    def __init__(self, cfg):
        self.cfg = cfg
        params = gabor.read_bank_config(cfg["gabor.bank"]) if cfg["gabor.bank"] else None
        self.bank = gabor.build_bank(params)

    def __call__(self, image, label=""):
        feat = gabor.extract(self.bank, image)
        n = self.cfg["gabor.nodes"]
        loc = _localizer(self.cfg, channels=self.bank.energy_channels())
        coords = graph.localize_nodes(feat, loc, n)
        g = gabor.graph_from_gabor(feat, coords, self.cfg["gabor.patch"])
        return quantize(MultiscaleRepresentation([g], np.zeros(0), label))


class CNNPipeline:
    """Backbone feature maps at three blocks, one graph per block.

    Weight names: backbone rows as in :func:`tensor.backbone_spec`,
    localizers under ``sln<k>.``, optional graph blocks under ``block<k>.``.
    """

    def __init__(self, cfg, weights=None):
        self.cfg = cfg
        if weights is None:
            if not cfg["backbone.weights"]:
                raise MissingWeightsError("cnn-weights pipeline needs backbone.weights")
            weights = tensor.WeightStore.load(cfg["backbone.weights"])
        self.weights = weights
        n_classes = weights.get("fc2.weight").shape[0]
        self.spec = tensor.backbone_spec(n_classes, cfg["backbone.height"], cfg["backbone.width"])
        self.nodes = cfg["scales.nodes"]
        if len(self.nodes) != len(tensor.BACKBONE_TAPS):
            raise ShapeError(f"need {len(tensor.BACKBONE_TAPS)} node counts, got {self.nodes}")
        radii = cfg["scales.radii"]
        self.radii = (None,) * 3 if radii == "auto" else radii
        self.blocks = {}
        for k in range(3):
            names = [n for n in weights.names() if n.startswith(f"block{k}.")]
            if names:
                self.blocks[k] = segat.GraphBlockParams.from_dict(weights.to_dict(), f"block{k}.")

    def __call__(self, image, label=""):
        img = np.asarray(image, dtype=np.float64)
        if img.ndim == 2:
            img = img[None]
        _, kept = tensor.forward_network(self.spec, self.weights, img,
                                         capture=tensor.BACKBONE_TAPS + (tensor.GLOBAL_TAP,))
        graphs = []
        for k, tap in enumerate(tensor.BACKBONE_TAPS):
            loc = _localizer(self.cfg, weights=self.weights, prefix=f"sln{k}.")
            g = graph.make_feature_graph(kept[tap], loc, self.nodes[k], self.radii[k],
                                         graph.SCALES[k])
            if k in self.blocks:
                g = segat.graph_block_forward(g, self.blocks[k])
            graphs.append(g)
        return quantize(MultiscaleRepresentation(graphs, kept[tensor.GLOBAL_TAP], label))


def make_pipeline(cfg, weights=None):
    if cfg["pipeline"] == "gabor":
        return GaborPipeline(cfg)
    return CNNPipeline(cfg, weights)


def load_image(path):
    try:
        return imageio.read_gray(path)
    except OSError as exc:
        raise DataError(f"cannot read image {path}: {exc}") from None
    except FormatError as exc:
        raise DataError(f"cannot read image {path}: {exc}") from None


def extract_dataset(cfg, entries, pipeline=None):
    pipe = pipeline or make_pipeline(cfg)
    return [pipe(load_image(e.path), e.label) for e in entries]


# -- representation files --------------------------------------------------

def reps_to_arrays(reps, seed=0):
    arrays = {"meta/seed": container.encode_int(seed),
              "meta/count": container.encode_int(len(reps))}
    for k, rep in enumerate(reps):
        p = f"r{k:05d}/"
        arrays[p + "label"] = container.encode_text(rep.label)
        arrays[p + "global"] = rep.global_feature
        for i, g in enumerate(rep.graphs):
            arrays.update(graph.graph_to_arrays(g, f"{p}g{i}/"))
    return arrays


def reps_from_arrays(arrays):
    try:
        n = container.decode_int(arrays["meta/count"])
    except KeyError:
        raise FormatError("not a representation file (meta/count missing)") from None
    reps = []
    for k in range(n):
        p = f"r{k:05d}/"
        graphs, i = [], 0
        while f"{p}g{i}/nodes" in arrays:
            graphs.append(graph.graph_from_arrays(arrays, f"{p}g{i}/"))
            i += 1
        try:
            label = container.decode_text(arrays[p + "label"])
            glob = np.asarray(arrays[p + "global"], dtype=np.float64)
        except KeyError as exc:
            raise FormatError(f"record {k}: missing {exc.args[0]!r}") from None
        reps.append(MultiscaleRepresentation(graphs, glob, label))
    return reps


def save_reps(path, reps, seed=0):
    container.save(path, reps_to_arrays(reps, seed))


def load_reps(path):
    arrays = container.load(path)
    return reps_from_arrays(arrays), container.decode_int(arrays["meta/seed"])
