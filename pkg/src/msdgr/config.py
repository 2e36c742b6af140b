"""Experiment configuration: ``key = value`` lines with dotted keys.

Blank lines and ``#`` comments are ignored. Every key has a typed default;
unknown keys and unparsable values are rejected. ``MSDGR_SEED`` in the
environment overrides ``seed``.
"""

import os

from .errors import FormatError


def _ints(text):
    return tuple(int(v) for v in text.split(",") if v.strip())


def _radii(text):
    if text.strip() == "auto":
        return "auto"
    return tuple(float(v) for v in text.split(",") if v.strip())


def _choice(*options):
    def parse(text):
        if text not in options:
            raise ValueError(f"expected one of {options}")
        return text
    return parse


def _sign(text):
    v = int(text)
    if v not in (1, -1):
        raise ValueError("expected +1 or -1")
    return v


def _fill(text):
    return text if text == "random-noise" else float(text)


def _str(text):
    return text


# key: (parser, default)
SCHEMA = {
    "seed": (int, 0),
    "pipeline": (_choice("gabor", "cnn-weights"), "gabor"),
    "localizer.mode": (_choice("sln", "grid", "energy-peak", "external"), "energy-peak"),
    "localizer.path": (_str, ""),
    "scales.nodes": (_ints, (64, 32, 16)),
    "scales.radii": (_radii, "auto"),
    "gabor.bank": (_str, ""),
    "gabor.nodes": (int, 32),
    "gabor.patch": (int, 9),
    "backbone.weights": (_str, ""),
    "backbone.height": (int, 128),
    "backbone.width": (int, 256),
    "matching.mode": (_choice("static", "dynamic"), "dynamic"),
    "matching.adj_sign": (_sign, -1),
    "occlusion.kind": (_choice("rectangle-region", "random-rectangle", "random-shape"),
                       "rectangle-region"),
    "occlusion.region": (_choice("right", "left", "upper", "bottom", "bilateral", "random"),
                         "random"),
    "occlusion.area_fraction": (float, 0.3),
    "occlusion.fill": (_fill, "random-noise"),
    "optim.lr": (float, 0.001),
    "optim.lr_decay": (float, 0.5),
    "optim.lr_step": (int, 10),
    "optim.momentum": (float, 0.9),
    "optim.weight_decay": (float, 0.0001),
    "optim.batch_size": (int, 64),
    "optim.epochs": (int, 40),
    "optim.margin": (float, 1.0),
    "optim.iters_per_epoch": (int, 0),
    "optim.loss_reduction": (_choice("sum", "mean"), "sum"),
    "train.out_dim_ratio": (float, 0.5),
    "train.se_ratio": (int, 4),
    "train.eval_triplets": (int, 256),
}


def defaults():
    return {k: v for k, (_, v) in SCHEMA.items()}


def parse_lines(lines, source="<config>"):
    cfg = defaults()
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError(f"{source}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in SCHEMA:
            raise FormatError(f"{source}:{lineno}: unknown key {key!r}")
        try:
            cfg[key] = SCHEMA[key][0](value)
        except ValueError as exc:
            raise FormatError(f"{source}:{lineno}: bad value for {key}: {exc}") from None
    return cfg


def load(path=None, overrides=()):
    """Defaults, then the file at ``path``, then ``key=value`` overrides."""
    lines = []
    if path:
        with open(path) as fh:
            lines = fh.read().splitlines()
    cfg = parse_lines(list(lines) + list(overrides), source=path or "<overrides>")
    env = os.environ.get("MSDGR_SEED")
    if env is not None and env.strip():
        try:
            cfg["seed"] = int(env)
        except ValueError:
            raise FormatError(f"MSDGR_SEED must be an integer, got {env!r}") from None
    return cfg


def dumps(cfg):
    def fmt(v):
        if isinstance(v, tuple):
            return ",".join(repr(x) for x in v)
        return str(v)
    return "".join(f"{k} = {fmt(cfg[k])}\n" for k in SCHEMA)
