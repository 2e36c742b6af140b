"""Toy-scale training of per-scale graph blocks with the graph triplet loss."""

import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from . import segat
from .errors import DataError
from .matcher import MultiscaleRepresentation, TripletBatch, triplet_loss


@dataclass
class TrainLog:
    initial_loss: float = math.nan
    final_loss: float = math.nan
    epochs: list = field(default_factory=list)  # (epoch, lr, mean batch loss)


def init_params(reps, rng, out_dim_ratio=0.5, se_ratio=segat.SE_RATIO):
    params = []
    for g in reps[0].graphs:
        c = g.dim
        params.append(segat.init_block(rng, c, max(1, int(c * out_dim_ratio)), se_ratio))
    return params


def params_to_dict(params):
    d = {}
    for k, p in enumerate(params):
        d.update(p.to_dict(f"block{k}."))
    return d


def params_from_dict(d, n_scales):
    return [segat.GraphBlockParams.from_dict(d, f"block{k}.") for k in range(n_scales)]


def forward(rep, params):
    outs, caches = [], []
    for g, p in zip(rep.graphs, params):
        y, cache = segat.block_forward_nodes(g.nodes, g.adjacency, p)
        outs.append(g.with_nodes(y))
        caches.append(cache)
    return MultiscaleRepresentation(outs, rep.global_feature, rep.label), caches


def sample_triplets(labels, count, rng):
    by_label = defaultdict(list)
    for i, lab in enumerate(labels):
        by_label[lab].append(i)
    usable = [lab for lab, idx in by_label.items() if len(idx) >= 2]
    if len(by_label) < 2 or not usable:
        raise DataError("triplet sampling needs >= 2 classes and a class with >= 2 samples")
    out = []
    for _ in range(count):
        lab = usable[rng.integers(len(usable))]
        a, p = rng.choice(by_label[lab], size=2, replace=False)
        neg = [i for i in range(len(labels)) if labels[i] != lab]
        out.append((int(a), int(p), int(neg[rng.integers(len(neg))])))
    return out


def epoch_triplets(labels, rng):
    """Every ordered anchor-positive pair once, each with a random negative, shuffled."""
    out = []
    for a, la in enumerate(labels):
        neg = [i for i, lab in enumerate(labels) if lab != la]
        if not neg:
            continue
        for p, lp in enumerate(labels):
            if p != a and lp == la:
                out.append((a, p, neg[rng.integers(len(neg))]))
    if not out:
        raise DataError("triplet sampling needs >= 2 classes and a class with >= 2 samples")
    return [out[i] for i in rng.permutation(len(out))]


def batch_loss(reps, params, triplets, margin=1.0, adj_sign=-1, with_grad=True,
               reduction="mean"):
    """Hinge loss over ``triplets`` (mean or sum) and its parameter gradients.

    The returned loss value is always the mean; ``reduction`` only decides
    how per-triplet gradients are combined.
    """
    needed = sorted({i for t in triplets for i in t})
    fwd = {i: forward(reps[i], params) for i in needed}
    node_grads = {i: [np.zeros_like(g.nodes) for g in fwd[i][0].graphs] for i in needed}
    total = 0.0
    for a, p, n in triplets:
        loss, grads = triplet_loss(TripletBatch(fwd[a][0], fwd[p][0], fwd[n][0], margin),
                                   adj_sign)
        total += loss
        if with_grad and loss > 0:
            for role, idx in (("anchor", a), ("positive", p), ("negative", n)):
                for acc, gr in zip(node_grads[idx], grads[role][0]):
                    acc += gr
    mean = total / len(triplets)
    if not with_grad:
        return mean, None
    pgrads = [defaultdict(float) for _ in params]
    for i in needed:
        for k, cache in enumerate(fwd[i][1]):
            dy = node_grads[i][k] / (len(triplets) if reduction == "mean" else 1)
            if not dy.any():
                continue
            _, g = segat.block_backward(cache, dy)
            for name, v in g.items():
                pgrads[k][name] = pgrads[k][name] + v
    return mean, pgrads


def lr_at(epoch, cfg):
    return cfg["optim.lr"] * cfg["optim.lr_decay"] ** (epoch // cfg["optim.lr_step"])


def train(reps, cfg, params=None, log=None, on_epoch=None):
    """SGD with momentum and weight decay on per-scale graph blocks.

    One epoch visits every ordered anchor-positive pair once (random
    negatives) unless ``optim.iters_per_epoch`` fixes a batch count. Returns ``(params, TrainLog)``. Initial/final losses are measured on a
    fixed evaluation set of triplets sampled once from the seed.
    """
    rng = np.random.default_rng(cfg["seed"])
    labels = [r.label for r in reps]
    if params is None:
        params = init_params(reps, rng, cfg["train.out_dim_ratio"], cfg["train.se_ratio"])
    eval_set = sample_triplets(labels, cfg["train.eval_triplets"], rng)
    margin, sign = cfg["optim.margin"], cfg["matching.adj_sign"]
    log = log or TrainLog()
    log.initial_loss = batch_loss(reps, params, eval_set, margin, sign, with_grad=False)[0]
    bs = cfg["optim.batch_size"]
    reduction = cfg["optim.loss_reduction"]
    flat = [p.to_dict() for p in params]
    velocity = [{k: np.zeros_like(v) for k, v in d.items()} for d in flat]
    mu, wd = cfg["optim.momentum"], cfg["optim.weight_decay"]
    for epoch in range(cfg["optim.epochs"]):
        lr = lr_at(epoch, cfg)
        losses = []
        if cfg["optim.iters_per_epoch"]:
            batches = [sample_triplets(labels, bs, rng) for _ in range(cfg["optim.iters_per_epoch"])]
        else:
            trip = epoch_triplets(labels, rng)
            batches = [trip[i:i + bs] for i in range(0, len(trip), bs)]
        for batch in batches:
            loss, grads = batch_loss(reps, params, batch, margin, sign, reduction=reduction)
            losses.append(loss)
            for d, vel, g in zip(flat, velocity, grads):
                for name, w in d.items():
                    step = np.asarray(g.get(name, 0.0)) + wd * w
                    vel[name] = mu * vel[name] + step
                    w -= lr * vel[name]
        log.epochs.append((epoch, lr, float(np.mean(losses))))
        if on_epoch:
            on_epoch(epoch, lr, log.epochs[-1][2])
    log.final_loss = batch_loss(reps, params, eval_set, margin, sign, with_grad=False)[0]
    return params, log
