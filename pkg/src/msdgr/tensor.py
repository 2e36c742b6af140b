"""Dense feature maps, weight storage and fixed-architecture forward passes.

Feature maps are plain ``float64`` arrays laid out ``(C, H, W)``. Networks are
described as a list of :class:`LayerSpec` rows and run with weights pulled
from a :class:`WeightStore`; the two builders :func:`sln_spec` and
:func:`backbone_spec` encode the localization network and the lightweight
iris backbone.
"""

from dataclasses import dataclass

import numpy as np

from . import _backend, container
from .errors import MissingWeightsError, OutOfBoundsError, ShapeError


def as_tensor3(x):
    a = np.ascontiguousarray(x, dtype=np.float64)
    if a.ndim != 3 or min(a.shape) < 1:
        raise ShapeError(f"expected a non-empty (C, H, W) array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("feature map contains non-finite values")
    return a


def bilinear_sample(fmap, coord):
    """Channel vector of ``fmap`` at fractional position ``coord = (i, j)``.

    Integer coordinates reproduce direct indexing exactly.
    """
    return bilinear_sample_many(fmap, np.asarray([coord], dtype=np.float64))[0]


def bilinear_sample_many(fmap, coords):
    fmap = as_tensor3(fmap)
    coords = np.ascontiguousarray(coords, dtype=np.float64).reshape(-1, 2)
    _, H, W = fmap.shape
    bad = ((coords[:, 0] < 0) | (coords[:, 0] > H - 1)
           | (coords[:, 1] < 0) | (coords[:, 1] > W - 1) | ~np.isfinite(coords).all(1))
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        raise OutOfBoundsError(
            f"coordinate {tuple(coords[k])} outside [0, {H - 1}] x [0, {W - 1}]")
    return _backend.kernels.bilinear_sample(fmap, coords)


class WeightStore:
    """Read-only named arrays. Lookups check shapes and fail loudly."""

    def __init__(self, arrays=None):
        self._arrays = {}
        for name, arr in (arrays or {}).items():
            a = np.array(arr, dtype=np.float64)
            a.flags.writeable = False
            self._arrays[name] = a

    def __contains__(self, name):
        return name in self._arrays

    def __len__(self):
        return len(self._arrays)

    def names(self):
        return list(self._arrays)

    def get(self, name, shape=None):
        try:
            a = self._arrays[name]
        except KeyError:
            raise MissingWeightsError(f"weight array {name!r} not found") from None
        if shape is not None and tuple(a.shape) != tuple(shape):
            raise ShapeError(f"array {name!r} has shape {a.shape}, expected {tuple(shape)}")
        return a

    def to_dict(self):
        return dict(self._arrays)

    @classmethod
    def load(cls, path):
        return cls(container.load(path))

    def save(self, path):
        container.save(path, self._arrays)


@dataclass(frozen=True)
class LayerSpec:
    """One table row.

    For ``fc`` layers ``in_shape``/``out_shape`` are 1-tuples of vector length.
    ``activation`` is "relu" or "none" (pooling ignores it).
    """

    name: str
    kind: str
    in_shape: tuple
    out_shape: tuple
    kernel: tuple = (1, 1)
    stride: tuple = (1, 1)
    padding: tuple = (0, 0)
    activation: str = "relu"

    @property
    def in_channels(self):
        return self.in_shape[0]

    @property
    def out_channels(self):
        return self.out_shape[0]

    def computed_out_shape(self, in_shape=None):
        c, *hw = in_shape if in_shape is not None else self.in_shape
        if self.kind == "conv":
            (kh, kw), (sh, sw), (ph, pw) = self.kernel, self.stride, self.padding
            h, w = hw
            return (self.out_shape[0], (h + 2 * ph - kh) // sh + 1, (w + 2 * pw - kw) // sw + 1)
        if self.kind == "pool":
            h, w = hw
            return (c, h // 2, w // 2)
        if self.kind == "fc":
            return (self.out_shape[0],)
        raise ShapeError(f"unknown layer kind {self.kind!r}", layer=self.name)

    def param_shapes(self):
        if self.kind == "conv":
            cout, cin = self.out_shape[0], self.in_shape[0]
            return {f"{self.name}.weight": (cout, cin) + tuple(self.kernel),
                    f"{self.name}.bias": (cout,)}
        if self.kind == "fc":
            n_in = int(np.prod(self.in_shape))
            return {f"{self.name}.weight": (self.out_shape[0], n_in),
                    f"{self.name}.bias": (self.out_shape[0],)}
        return {}


def validate_spec(spec):
    """Check every row's arithmetic and that rows chain together."""
    prev = None
    for layer in spec:
        if prev is not None:
            expect = prev.out_shape
            got = layer.in_shape
            if layer.kind == "fc" and len(expect) == 3:
                expect = (int(np.prod(expect)),)
            if tuple(got) != tuple(expect):
                raise ShapeError(f"input {got} does not follow previous output {expect}",
                                 layer=layer.name)
        if layer.kind == "pool" and (layer.kernel, layer.stride) != ((2, 2), (2, 2)):
            raise ShapeError("pooling must be 2x2 with stride 2", layer=layer.name)
        if tuple(layer.computed_out_shape()) != tuple(layer.out_shape):
            raise ShapeError(f"declared output {layer.out_shape} but kernel/stride/padding give "
                             f"{layer.computed_out_shape()}", layer=layer.name)
        prev = layer
    return spec


def forward_network(spec, weights, x, capture=()):
    """Run ``x`` through ``spec``.

    Returns the final activation, or ``(final, {name: activation})`` when
    ``capture`` names intermediate layers to keep.
    """
    x = as_tensor3(x) if len(spec[0].in_shape) == 3 else np.asarray(x, dtype=np.float64)
    if tuple(x.shape) != tuple(spec[0].in_shape):
        raise ShapeError(f"input shape {x.shape} != expected {spec[0].in_shape}",
                         layer=spec[0].name)
    k = _backend.kernels
    kept = {}
    for layer in spec:
        shapes = layer.param_shapes()
        if layer.kind == "conv":
            if x.ndim != 3 or x.shape[0] != layer.in_shape[0]:
                raise ShapeError(f"got input {x.shape}", layer=layer.name)
            w = weights.get(f"{layer.name}.weight", shapes[f"{layer.name}.weight"])
            b = weights.get(f"{layer.name}.bias", shapes[f"{layer.name}.bias"])
            x = k.conv2d(np.ascontiguousarray(x), np.ascontiguousarray(w), np.ascontiguousarray(b),
                         *layer.stride, *layer.padding)
        elif layer.kind == "pool":
            x = k.max_pool2x2(np.ascontiguousarray(x))
        elif layer.kind == "fc":
            v = x.reshape(-1)
            w = weights.get(f"{layer.name}.weight", shapes[f"{layer.name}.weight"])
            b = weights.get(f"{layer.name}.bias", shapes[f"{layer.name}.bias"])
            if v.shape[0] != w.shape[1]:
                raise ShapeError(f"flattened input length {v.shape[0]} != {w.shape[1]}",
                                 layer=layer.name)
            x = w @ v + b
        else:
            raise ShapeError(f"unknown layer kind {layer.kind!r}", layer=layer.name)
        if layer.kind != "pool" and layer.activation == "relu":
            x = np.maximum(x, 0.0)
        if tuple(x.shape) != tuple(layer.out_shape):
            raise ShapeError(f"produced {x.shape}, table says {layer.out_shape}", layer=layer.name)
        if layer.name in capture:
            kept[layer.name] = x
    return (x, kept) if capture else x


def sln_spec(channels, height, width, n_nodes, prefix="sln."):
    """Spatial location network: pool, conv5x5, pool, conv5x5, FC 128, FC 2N."""
    C, H, W = channels, height, width
    if H % 4 or W % 4 or C % 4:
        raise ShapeError(f"localizer needs H, W, C divisible by 4, got {(C, H, W)}", layer=prefix)
    p = prefix
    spec = [
        LayerSpec(p + "pool1", "pool", (C, H, W), (C, H // 2, W // 2), (2, 2), (2, 2)),
        LayerSpec(p + "conv1", "conv", (C, H // 2, W // 2), (C // 2, H // 2, W // 2),
                  (5, 5), (1, 1), (2, 2)),
        LayerSpec(p + "pool2", "pool", (C // 2, H // 2, W // 2), (C // 2, H // 4, W // 4),
                  (2, 2), (2, 2)),
        LayerSpec(p + "conv2", "conv", (C // 2, H // 4, W // 4), (C // 4, H // 4, W // 4),
                  (5, 5), (1, 1), (2, 2)),
        LayerSpec(p + "fc1", "fc", (H * W * C // 64,), (128,)),
        LayerSpec(p + "fc2", "fc", (128,), (2 * n_nodes,), activation="none"),
    ]
    return validate_spec(spec)


# Layer names of the backbone whose outputs feed the three graph scales.
BACKBONE_TAPS = ("conv3", "conv4", "conv5")
GLOBAL_TAP = "fc1"


def backbone_spec(num_classes, height=128, width=256, prefix=""):
    """Lightweight iris CNN: three conv blocks and an FC block."""
    H, W = height, width
    if H % 32 or W % 32:
        raise ShapeError(f"backbone needs H, W divisible by 32, got {(H, W)}", layer=prefix + "conv1")
    p = prefix

    def conv(name, cin, cout, h, w, k, pad):
        return LayerSpec(p + name, "conv", (cin, h, w), (cout, h, w), k, (1, 1), pad)

    def pool(name, c, h, w):
        return LayerSpec(p + name, "pool", (c, h, w), (c, h // 2, w // 2), (2, 2), (2, 2))

    spec = [
        conv("conv1", 1, 24, H, W, (5, 9), (2, 4)),
        pool("pool1", 24, H, W),
        conv("conv2", 24, 48, H // 2, W // 2, (5, 7), (2, 3)),
        pool("pool2", 48, H // 2, W // 2),
        conv("conv3", 48, 64, H // 4, W // 4, (5, 5), (2, 2)),
        pool("pool3", 64, H // 4, W // 4),
        conv("conv4", 64, 96, H // 8, W // 8, (5, 5), (2, 2)),
        pool("pool4", 96, H // 8, W // 8),
        conv("conv5", 96, 96, H // 16, W // 16, (5, 5), (2, 2)),
        pool("pool5", 96, H // 16, W // 16),
        LayerSpec(p + "fc1", "fc", (96 * (H // 32) * (W // 32),), (256,)),
        LayerSpec(p + "fc2", "fc", (256,), (num_classes,), activation="none"),
    ]
    return validate_spec(spec)


def init_weights(spec, rng, scale=1.0):
    """Glorot-uniform weights and zero biases for every parametrized row."""
    out = {}
    for layer in spec:
        for name, shape in layer.param_shapes().items():
            if name.endswith(".bias"):
                out[name] = np.zeros(shape)
                continue
            if layer.kind == "conv":
                rf = shape[2] * shape[3]
                fan_in, fan_out = shape[1] * rf, shape[0] * rf
            else:
                fan_in, fan_out = shape[1], shape[0]
            lim = scale * np.sqrt(6.0 / (fan_in + fan_out))
            out[name] = rng.uniform(-lim, lim, size=shape)
    return out
