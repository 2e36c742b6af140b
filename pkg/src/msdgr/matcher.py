"""Graph similarity, graph triplet loss and dynamic graph matching.

A sample is a :class:`MultiscaleRepresentation`: one feature graph per scale
plus a global feature vector (possibly empty). Node ``i`` of one sample is
compared with node ``i`` of the other; dynamic matching drops, per scale,
every index whose pair cosine falls below that scale's mean pair cosine.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .errors import EmptyMatchError, ParameterError, ShapeError, UndefinedSimilarityError


@dataclass(frozen=True, eq=False)
class MultiscaleRepresentation:
    graphs: tuple
    global_feature: np.ndarray = field(default_factory=lambda: np.zeros(0))
    label: str = ""

    def __post_init__(self):
        ids = [g.scale_id for g in self.graphs]
        if len(set(ids)) != len(ids):
            raise ShapeError(f"duplicate scale ids {ids}")
        object.__setattr__(self, "graphs", tuple(self.graphs))
        object.__setattr__(self, "global_feature",
                           np.asarray(self.global_feature, dtype=np.float64).reshape(-1))

    def full_index(self):
        return [np.arange(g.n_nodes) for g in self.graphs]


@dataclass(frozen=True)
class TripletBatch:
    anchor: MultiscaleRepresentation
    positive: MultiscaleRepresentation
    negative: MultiscaleRepresentation
    margin: float = 1.0

    def __post_init__(self):
        if not self.margin > 0:
            raise ParameterError(f"margin must be positive, got {self.margin}")


@dataclass(eq=False)
class MatchResult:
    similarity: float
    gates: list         # per scale
    retained: list      # per scale, sorted index arrays
    pair_scores: list   # per scale, cosine of every index pair
    s_fea: float
    s_adj: float


def check_compatible(a, b):
    if len(a.graphs) != len(b.graphs):
        raise ShapeError(f"scale count differs: {len(a.graphs)} vs {len(b.graphs)}")
    for ga, gb in zip(a.graphs, b.graphs):
        if ga.scale_id != gb.scale_id or ga.nodes.shape != gb.nodes.shape:
            raise ShapeError(f"scale {ga.scale_id!r}: node arrays {ga.nodes.shape} vs "
                             f"{gb.scale_id!r} {gb.nodes.shape}")
    if a.global_feature.shape != b.global_feature.shape:
        raise ShapeError(f"global feature length {a.global_feature.size} vs "
                         f"{b.global_feature.size}")


def _cos(x, y):
    """Cosine with the property cos(x, x) == 1.0 exactly."""
    xx, yy = float(x @ x), float(y @ y)
    if xx == 0.0 or yy == 0.0:
        raise UndefinedSimilarityError("cosine of a zero vector is undefined")
    return min(1.0, max(-1.0, float(x @ y) / math.sqrt(xx * yy)))


def concatenate(rep, retained=None):
    retained = rep.full_index() if retained is None else retained
    parts = [g.nodes[idx].ravel() for g, idx in zip(rep.graphs, retained)]
    parts.append(rep.global_feature)
    return np.concatenate(parts)


def s_fea(a, b, retained=None):
    check_compatible(a, b)
    return _cos(concatenate(a, retained), concatenate(b, retained))


def s_adj(a, b, retained=None):
    check_compatible(a, b)
    retained = a.full_index() if retained is None else retained
    total = 0.0
    for ga, gb, idx in zip(a.graphs, b.graphs, retained):
        n = len(idx)
        if n == 0:
            continue
        sub = np.ix_(idx, idx)
        total += float(np.linalg.norm(ga.adjacency[sub] - gb.adjacency[sub])) / (n * n)
    return total / len(a.graphs)


def similarity(a, b, retained=None, adj_sign=-1):
    if adj_sign not in (1, -1):
        raise ParameterError(f"adj_sign must be +1 or -1, got {adj_sign}")
    return s_fea(a, b, retained) + adj_sign * s_adj(a, b, retained)


def _cos_grad(x, y):
    """Gradient of cos(x, y) with respect to x."""
    nx, ny = math.sqrt(float(x @ x)), math.sqrt(float(y @ y))
    if nx == 0.0 or ny == 0.0:
        raise UndefinedSimilarityError("cosine of a zero vector is undefined")
    c = float(x @ y) / (nx * ny)
    return y / (nx * ny) - c * x / (nx * nx)


def _split(vec, rep):
    out, pos = [], 0
    for g in rep.graphs:
        out.append(vec[pos:pos + g.nodes.size].reshape(g.nodes.shape))
        pos += g.nodes.size
    return out, vec[pos:]


def triplet_loss(batch, adj_sign=-1):
    """Hinge loss on composite similarity over full graphs.

    Returns ``(loss, grads)`` where ``grads[role] = (node_grads, global_grad)``
    for role in anchor/positive/negative. The adjacency term does not depend
    on node features, so it only shifts the hinge.
    """
    a, p, n = batch.anchor, batch.positive, batch.negative
    s_ap = similarity(a, p, adj_sign=adj_sign)
    s_an = similarity(a, n, adj_sign=adj_sign)
    loss = batch.margin + s_an - s_ap
    fa, fp, fn = concatenate(a), concatenate(p), concatenate(n)
    if loss < 0:
        zero = {r: _split(np.zeros_like(v), rep) for r, v, rep in
                (("anchor", fa, a), ("positive", fp, p), ("negative", fn, n))}
        return 0.0, zero
    ga = _cos_grad(fa, fn) - _cos_grad(fa, fp)
    gp = -_cos_grad(fp, fa)
    gn = _cos_grad(fn, fa)
    return loss, {"anchor": _split(ga, a), "positive": _split(gp, p),
                  "negative": _split(gn, n)}


def pair_cosines(ga, gb):
    return _backend.kernels.row_cosines(np.ascontiguousarray(ga.nodes, dtype=np.float64),
                                        np.ascontiguousarray(gb.nodes, dtype=np.float64))


def dynamic_match(a, b, adj_sign=-1):
    check_compatible(a, b)
    gates, retained, scores = [], [], []
    for ga, gb in zip(a.graphs, b.graphs):
        cos = pair_cosines(ga, gb)
        if cos.size == 0:
            gate = 0.0
        else:
            # the mean can round above the max when all cosines are equal
            gate = min(float(np.mean(cos)), float(cos.max()))
        gates.append(gate)
        scores.append(cos)
        retained.append(np.flatnonzero(cos >= gate))
    if all(len(r) == 0 for r in retained):
        raise EmptyMatchError("every node pair was removed at every scale")
    fea = s_fea(a, b, retained)
    adj = s_adj(a, b, retained)
    return MatchResult(fea + adj_sign * adj, gates, retained, scores, fea, adj)


def match_score(a, b, mode="dynamic", adj_sign=-1):
    if mode == "static":
        return similarity(a, b, adj_sign=adj_sign)
    if mode == "dynamic":
        return dynamic_match(a, b, adj_sign).similarity
    raise ParameterError(f"unknown matching mode {mode!r}")


MATCH_CSV_HEADER = ["label_a", "label_b", "scale", "index", "cosine", "gate", "retained"]


def write_match_csv(fh, result, scales=None, pair=("", ""), header=True):
    """One row per node pair: scale, index, cosine, gate, retained flag."""
    w = csv.writer(fh, lineterminator="\n")
    if header:
        w.writerow(MATCH_CSV_HEADER)
    for k, (cos, gate, kept) in enumerate(zip(result.pair_scores, result.gates, result.retained)):
        scale = scales[k] if scales is not None else k
        kept = set(int(i) for i in kept)
        for i, c in enumerate(cos):
            w.writerow([pair[0], pair[1], scale, i, repr(float(c)), repr(float(gate)),
                        int(i in kept)])
