"""Squeeze-excitation and edge-weighted attention layers over feature graphs.

Each layer has a ``*_forward_nodes`` function working on the raw ``(N, C)``
node matrix that returns the output together with a cache, and a matching
``*_backward`` that turns an upstream gradient into gradients for the input
nodes and for every parameter. Graph-level wrappers leave adjacency and
coordinates untouched.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError

LEAKY_SLOPE = 0.2
ELU_ALPHA = 1.0
SE_RATIO = 4


@dataclass
class SEParams:
    W1: np.ndarray  # (C / ratio, C)
    W2: np.ndarray  # (C, C / ratio)

    @property
    def dim(self):
        return self.W1.shape[1]

    def check(self, c):
        r, c1 = self.W1.shape
        if c1 != c or self.W2.shape != (c, r):
            raise ShapeError(f"SE weights {self.W1.shape}/{self.W2.shape} do not fit node dim {c}")


@dataclass
class GATParams:
    W: np.ndarray      # (C, C)
    w_att: np.ndarray  # (2C,)

    def check(self, c):
        if self.W.shape != (c, c) or self.w_att.shape != (2 * c,):
            raise ShapeError(f"GAT weights {self.W.shape}/{self.w_att.shape} do not fit node dim {c}")


@dataclass
class GraphBlockParams:
    se1: SEParams
    gat1: GATParams
    se2: SEParams
    gat2: GATParams
    reduce: np.ndarray  # (C', C)

    PARTS = ("se1", "gat1", "se2", "gat2")

    @property
    def in_dim(self):
        return self.reduce.shape[1]

    @property
    def out_dim(self):
        return self.reduce.shape[0]

    def to_dict(self, prefix=""):
        d = {}
        for part in self.PARTS:
            p = getattr(self, part)
            for k, v in vars(p).items():
                d[f"{prefix}{part}.{k}"] = v
        d[f"{prefix}reduce.W"] = self.reduce
        return d

    @classmethod
    def from_dict(cls, d, prefix=""):
        def get(name):
            return np.asarray(d[prefix + name], dtype=np.float64)
        return cls(
            se1=SEParams(get("se1.W1"), get("se1.W2")),
            gat1=GATParams(get("gat1.W"), get("gat1.w_att")),
            se2=SEParams(get("se2.W1"), get("se2.W2")),
            gat2=GATParams(get("gat2.W"), get("gat2.w_att")),
            reduce=get("reduce.W"),
        )

    def copy(self):
        return GraphBlockParams.from_dict({k: v.copy() for k, v in self.to_dict().items()})


def glorot(rng, shape, fan_in, fan_out):
    lim = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-lim, lim, size=shape)


def init_se(rng, c, ratio=SE_RATIO):
    if c % ratio:
        raise ShapeError(f"node dim {c} not divisible by SE ratio {ratio}")
    r = c // ratio
    return SEParams(glorot(rng, (r, c), c, r), glorot(rng, (c, r), r, c))


def init_gat(rng, c):
    return GATParams(glorot(rng, (c, c), c, c), glorot(rng, (2 * c,), 2 * c, 1))


def init_block(rng, c, c_out, ratio=SE_RATIO):
    if not c_out < c:
        raise ShapeError(f"reduction must shrink the node dim ({c} -> {c_out})")
    return GraphBlockParams(init_se(rng, c, ratio), init_gat(rng, c), init_se(rng, c, ratio),
                            init_gat(rng, c), glorot(rng, (c_out, c), c, c_out))


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


# -- squeeze and excitation ------------------------------------------------

def se_forward_nodes(X, p):
    p.check(X.shape[1])
    z = X.mean(axis=0)
    u = p.W1 @ z
    h = np.maximum(u, 0.0)
    s = _sigmoid(p.W2 @ h)
    return X * s, (X, z, u, h, s, p)


def se_backward(cache, dY):
    X, z, u, h, s, p = cache
    ds = np.einsum("nc,nc->c", dY, X)
    dv = ds * s * (1.0 - s)
    dW2 = np.outer(dv, h)
    du = (p.W2.T @ dv) * (u > 0)
    dW1 = np.outer(du, z)
    dz = p.W1.T @ du
    dX = dY * s + dz / X.shape[0]
    return dX, {"W1": dW1, "W2": dW2}


def se_forward(g, p):
    return g.with_nodes(se_forward_nodes(g.nodes, p)[0])


# -- graph attention -------------------------------------------------------

def attention(X, adj, p):
    """Attention matrix; row ``a`` is a distribution over a's neighbourhood."""
    return _gat_core(X, adj, p)[0]


def _gat_core(X, adj, p):
    n, c = X.shape
    p.check(c)
    if adj.shape != (n, n):
        raise ShapeError(f"adjacency {adj.shape} does not match {n} nodes")
    H = X @ p.W.T
    w1, w2 = p.w_att[:c], p.w_att[c:]
    e = (H @ w1)[:, None] + (H @ w2)[None, :]
    t = adj * e
    l = np.where(t > 0, t, LEAKY_SLOPE * t)
    mask = (adj > 0) | np.eye(n, dtype=bool)
    lm = np.where(mask, l, -np.inf)
    ex = np.exp(lm - lm.max(axis=1, keepdims=True))
    alpha = ex / ex.sum(axis=1, keepdims=True)
    return alpha, H, t


def gat_forward_nodes(X, adj, p):
    alpha, H, t = _gat_core(X, adj, p)
    P = alpha @ H
    Y = np.where(P > 0, P, ELU_ALPHA * np.expm1(np.minimum(P, 0.0)))
    return Y, (X, adj, p, alpha, H, t, P)


def gat_backward(cache, dY):
    X, adj, p, alpha, H, t, P = cache
    c = X.shape[1]
    w1, w2 = p.w_att[:c], p.w_att[c:]
    dP = dY * np.where(P > 0, 1.0, ELU_ALPHA * np.exp(np.minimum(P, 0.0)))
    dalpha = dP @ H.T
    dH = alpha.T @ dP
    dl = alpha * (dalpha - np.einsum("ab,ab->a", alpha, dalpha)[:, None])
    de = dl * np.where(t > 0, 1.0, LEAKY_SLOPE) * adj
    rs, cs = de.sum(axis=1), de.sum(axis=0)
    dH += np.outer(rs, w1) + np.outer(cs, w2)
    dw_att = np.concatenate([H.T @ rs, H.T @ cs])
    dW = dH.T @ X
    dX = dH @ p.W
    return dX, {"W": dW, "w_att": dw_att}


def gat_forward(g, p):
    return g.with_nodes(gat_forward_nodes(g.nodes, g.adjacency, p)[0])


# -- residual block + reduction -------------------------------------------

def block_forward_nodes(X, adj, p):
    if X.shape[1] != p.in_dim:
        raise ShapeError(f"node dim {X.shape[1]} != block input dim {p.in_dim}")
    Y1, c1 = se_forward_nodes(X, p.se1)
    Y2, c2 = gat_forward_nodes(Y1, adj, p.gat1)
    Y3, c3 = se_forward_nodes(Y2, p.se2)
    Y4, c4 = gat_forward_nodes(Y3, adj, p.gat2)
    R = Y4 + X
    Z = R @ p.reduce.T
    return np.maximum(Z, 0.0), (R, Z, p, c1, c2, c3, c4)


def block_backward(cache, dOut):
    R, Z, p, c1, c2, c3, c4 = cache
    dZ = dOut * (Z > 0)
    grads = {"reduce.W": dZ.T @ R}
    dR = dZ @ p.reduce
    d, g = gat_backward(c4, dR)
    grads.update({f"gat2.{k}": v for k, v in g.items()})
    d, g = se_backward(c3, d)
    grads.update({f"se2.{k}": v for k, v in g.items()})
    d, g = gat_backward(c2, d)
    grads.update({f"gat1.{k}": v for k, v in g.items()})
    d, g = se_backward(c1, d)
    grads.update({f"se1.{k}": v for k, v in g.items()})
    return d + dR, grads


def graph_block_forward(g, p):
    return g.with_nodes(block_forward_nodes(g.nodes, g.adjacency, p)[0])


def backward(g, params, upstream):
    """Input-node and parameter gradients of ``sum(upstream * layer(g))``.

    ``params`` selects the layer: SEParams, GATParams or GraphBlockParams.
    """
    upstream = np.asarray(upstream, dtype=np.float64)
    if isinstance(params, SEParams):
        out, cache = se_forward_nodes(g.nodes, params)
        back = se_backward
    elif isinstance(params, GATParams):
        out, cache = gat_forward_nodes(g.nodes, g.adjacency, params)
        back = gat_backward
    elif isinstance(params, GraphBlockParams):
        out, cache = block_forward_nodes(g.nodes, g.adjacency, params)
        back = block_backward
    else:
        raise TypeError(f"unsupported parameter type {type(params).__name__}")
    if upstream.shape != out.shape:
        raise ShapeError(f"upstream gradient {upstream.shape} != output {out.shape}")
    return back(cache, upstream)
