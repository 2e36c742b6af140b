"""Pure-numpy versions of the compiled inner loops.

Every function here has the same signature and contract as its twin in
``_ckernels.pyx``; results agree to floating-point reassociation error.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def conv2d(x, w, b, sh, sw, ph, pw):
    kh, kw = w.shape[2], w.shape[3]
    xp = np.pad(x, ((0, 0), (ph, ph), (pw, pw)))
    win = sliding_window_view(xp, (kh, kw), axis=(1, 2))[:, ::sh, ::sw]
    out = np.tensordot(w, win, axes=([1, 2, 3], [0, 3, 4]))
    return np.ascontiguousarray(out + b[:, None, None])


def max_pool2x2(x):
    C, H, W = x.shape
    ho, wo = H // 2, W // 2
    v = x[:, : 2 * ho, : 2 * wo].reshape(C, ho, 2, wo, 2)
    return np.ascontiguousarray(v.max(axis=(2, 4)))


def bilinear_sample(fmap, coords):
    _, H, W = fmap.shape
    i0 = np.minimum(np.floor(coords[:, 0]).astype(np.intp), H - 1)
    j0 = np.minimum(np.floor(coords[:, 1]).astype(np.intp), W - 1)
    i1 = np.minimum(i0 + 1, H - 1)
    j1 = np.minimum(j0 + 1, W - 1)
    di = (coords[:, 0] - i0)[:, None]
    dj = (coords[:, 1] - j0)[:, None]
    f00 = fmap[:, i0, j0].T
    f01 = fmap[:, i0, j1].T
    f10 = fmap[:, i1, j0].T
    f11 = fmap[:, i1, j1].T
    return ((1.0 - di) * (1.0 - dj) * f00 + (1.0 - di) * dj * f01
            + di * (1.0 - dj) * f10 + di * dj * f11)


def row_cosines(a, b):
    ab = np.einsum("ij,ij->i", a, b)
    aa = np.einsum("ij,ij->i", a, a)
    bb = np.einsum("ij,ij->i", b, b)
    out = np.zeros(a.shape[0])
    ok = (aa != 0.0) & (bb != 0.0)
    out[ok] = ab[ok] / np.sqrt(aa[ok] * bb[ok])
    return np.clip(out, -1.0, 1.0)
