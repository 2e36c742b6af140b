"""Central finite-difference verification of every analytic gradient."""

import time
from dataclasses import dataclass, field

import numpy as np

from . import segat
from .graph import SCALES, FeatureGraph, build_adjacency
from .matcher import MultiscaleRepresentation, TripletBatch, similarity, triplet_loss

STEP = 1e-4
TOLERANCE = 1e-3
FLOOR = 1e-8


def rel_error(analytic, numeric):
    a = np.asarray(analytic, dtype=np.float64).ravel()
    n = np.asarray(numeric, dtype=np.float64).ravel()
    den = max(np.linalg.norm(a), np.linalg.norm(n), FLOOR)
    return float(np.linalg.norm(a - n) / den)


def numeric_grad(f, x, h=STEP):
    """Central differences of scalar ``f()`` with respect to array ``x`` (in place)."""
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        old = x[i]
        x[i] = old + h
        fp = f()
        x[i] = old - h
        fm = f()
        x[i] = old
        g[i] = (fp - fm) / (2 * h)
    return g


@dataclass
class Report:
    errors: dict = field(default_factory=dict)  # check name -> max relative error
    seeds: int = 0
    seconds: float = 0.0

    def record(self, name, err):
        self.errors[name] = max(self.errors.get(name, 0.0), err)

    @property
    def passed(self):
        return all(e < TOLERANCE for e in self.errors.values())

    def lines(self):
        out = [f"{name:<28s} max_rel_err={err:.3e} {'PASS' if err < TOLERANCE else 'FAIL'}"
               for name, err in sorted(self.errors.items())]
        out.append(f"{'overall':<28s} seeds={self.seeds} time={self.seconds:.1f}s "
                   f"{'PASS' if self.passed else 'FAIL'}")
        return out


def random_graph(rng, n, c, scale_id="small"):
    xy = rng.uniform(0, 4, size=(n, 2))
    return FeatureGraph(rng.normal(size=(n, c)), xy, build_adjacency(xy, 2.5), 2.5, scale_id)


def _check_layer(report, prefix, g, params, forward, corrupt):
    U = np.random.default_rng(0).normal(size=forward().shape)
    dX, grads = segat.backward(g, params, U)
    if corrupt is not None and corrupt.startswith(prefix + "."):
        key = corrupt[len(prefix) + 1:]
        if key == "X":
            dX = dX * 1.1
        else:
            grads[key] = grads[key] * 1.1

    def loss():
        return float(np.sum(U * forward()))

    report.record(f"{prefix}.X", rel_error(dX, numeric_grad(loss, g.nodes)))
    named = params.to_dict() if isinstance(params, segat.GraphBlockParams) else vars(params)
    for key, arr in named.items():
        report.record(f"{prefix}.{key}", rel_error(grads[key], numeric_grad(loss, arr)))


def check_seed(seed, report, corrupt=None, n=5, c=8):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, n, c)
    se = segat.init_se(rng, c)
    se.W1 *= 3.0
    se.W2 *= 3.0
    _check_layer(report, "se", g, se, lambda: segat.se_forward_nodes(g.nodes, se)[0], corrupt)
    gat = segat.init_gat(rng, c)
    _check_layer(report, "gat", g, gat,
                 lambda: segat.gat_forward_nodes(g.nodes, g.adjacency, gat)[0], corrupt)
    blk = segat.init_block(rng, c, c // 2)
    _check_layer(report, "block", g, blk,
                 lambda: segat.block_forward_nodes(g.nodes, g.adjacency, blk)[0], corrupt)
    _check_triplet(rng, report, corrupt)


def _rep(rng, label):
    gs = [random_graph(rng, 4, 3, SCALES[0]), random_graph(rng, 3, 3, SCALES[1])]
    return MultiscaleRepresentation(gs, rng.normal(size=2), label)


def _check_triplet(rng, report, corrupt):
    # margin large enough that the hinge is active for any cosines
    batch = TripletBatch(_rep(rng, "a"), _rep(rng, "a"), _rep(rng, "b"), margin=3.0)
    _, grads = triplet_loss(batch)

    def loss():
        return batch.margin + similarity(batch.anchor, batch.negative) \
            - similarity(batch.anchor, batch.positive)

    for role in ("anchor", "positive", "negative"):
        rep = getattr(batch, role)
        node_grads, glob_grad = grads[role]
        for k, g in enumerate(rep.graphs):
            an = node_grads[k]
            if corrupt == f"triplet.{role}":
                an = an * 1.1
            report.record(f"triplet.{role}.nodes", rel_error(an, numeric_grad(loss, g.nodes)))
        report.record(f"triplet.{role}.global",
                      rel_error(glob_grad, numeric_grad(loss, rep.global_feature)))


def run(seed=0, trials=100, corrupt=None):
    report = Report()
    t0 = time.perf_counter()
    for s in range(seed, seed + trials):
        check_seed(s, report, corrupt)
    report.seeds = trials
    report.seconds = time.perf_counter() - t0
    return report
