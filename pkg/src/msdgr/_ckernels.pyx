# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. Same contracts as ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport floor, sqrt

cnp.import_array()


def conv2d(const double[:, :, ::1] x, const double[:, :, :, ::1] w,
           const double[::1] b, Py_ssize_t sh, Py_ssize_t sw,
           Py_ssize_t ph, Py_ssize_t pw):
    cdef Py_ssize_t cin = x.shape[0], H = x.shape[1], W = x.shape[2]
    cdef Py_ssize_t cout = w.shape[0], kh = w.shape[2], kw = w.shape[3]
    cdef Py_ssize_t ho = (H + 2 * ph - kh) // sh + 1
    cdef Py_ssize_t wo = (W + 2 * pw - kw) // sw + 1
    cols_arr = np.zeros((cin * kh * kw, ho * wo), dtype=np.float64)
    cdef double[:, ::1] cols = cols_arr
    cdef Py_ssize_t c, u, v, r, q, ii, jj, row
    # im2col with implicit zero padding; the product itself goes to BLAS
    with nogil:
        for c in range(cin):
            for u in range(kh):
                for v in range(kw):
                    row = (c * kh + u) * kw + v
                    for r in range(ho):
                        ii = r * sh - ph + u
                        if ii < 0 or ii >= H:
                            continue
                        for q in range(wo):
                            jj = q * sw - pw + v
                            if 0 <= jj < W:
                                cols[row, r * wo + q] = x[c, ii, jj]
    wmat = np.asarray(w).reshape(cout, cin * kh * kw)
    out = wmat @ cols_arr
    out += np.asarray(b)[:, None]
    return out.reshape(cout, ho, wo)


def max_pool2x2(const double[:, :, ::1] x):
    cdef Py_ssize_t C = x.shape[0], ho = x.shape[1] // 2, wo = x.shape[2] // 2
    out_arr = np.empty((C, ho, wo), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t c, r, q
    cdef double m
    with nogil:
        for c in range(C):
            for r in range(ho):
                for q in range(wo):
                    m = x[c, 2 * r, 2 * q]
                    if x[c, 2 * r, 2 * q + 1] > m:
                        m = x[c, 2 * r, 2 * q + 1]
                    if x[c, 2 * r + 1, 2 * q] > m:
                        m = x[c, 2 * r + 1, 2 * q]
                    if x[c, 2 * r + 1, 2 * q + 1] > m:
                        m = x[c, 2 * r + 1, 2 * q + 1]
                    out[c, r, q] = m
    return out_arr


def bilinear_sample(const double[:, :, ::1] fmap, const double[:, ::1] coords):
    cdef Py_ssize_t C = fmap.shape[0], H = fmap.shape[1], W = fmap.shape[2]
    cdef Py_ssize_t n = coords.shape[0]
    out_arr = np.empty((n, C), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t k, c, i0, i1, j0, j1
    cdef double di, dj, w00, w01, w10, w11
    with nogil:
        for k in range(n):
            i0 = <Py_ssize_t>floor(coords[k, 0])
            j0 = <Py_ssize_t>floor(coords[k, 1])
            if i0 > H - 1:
                i0 = H - 1
            if j0 > W - 1:
                j0 = W - 1
            i1 = i0 + 1 if i0 + 1 < H else H - 1
            j1 = j0 + 1 if j0 + 1 < W else W - 1
            di = coords[k, 0] - i0
            dj = coords[k, 1] - j0
            w00 = (1.0 - di) * (1.0 - dj)
            w01 = (1.0 - di) * dj
            w10 = di * (1.0 - dj)
            w11 = di * dj
            for c in range(C):
                out[k, c] = (w00 * fmap[c, i0, j0] + w01 * fmap[c, i0, j1]
                             + w10 * fmap[c, i1, j0] + w11 * fmap[c, i1, j1])
    return out_arr


def row_cosines(const double[:, ::1] a, const double[:, ::1] b):
    cdef Py_ssize_t n = a.shape[0], C = a.shape[1]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t k, c
    cdef double ab, aa, bb, v
    with nogil:
        for k in range(n):
            ab = 0.0
            aa = 0.0
            bb = 0.0
            for c in range(C):
                ab = ab + a[k, c] * b[k, c]
                aa = aa + a[k, c] * a[k, c]
                bb = bb + b[k, c] * b[k, c]
            if aa == 0.0 or bb == 0.0:
                out[k] = 0.0
            else:
                v = ab / sqrt(aa * bb)
                if v > 1.0:
                    v = 1.0
                elif v < -1.0:
                    v = -1.0
                out[k] = v
    return out_arr
