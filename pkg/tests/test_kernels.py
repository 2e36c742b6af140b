import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from msdgr import _backend, _pykernels

try:
    from msdgr import _ckernels
except ImportError:  # extension not built
    _ckernels = None

needs_ext = pytest.mark.skipif(_ckernels is None, reason="compiled kernels not built")


@needs_ext
@settings(max_examples=60, deadline=None)
@given(cin=st.integers(1, 3), cout=st.integers(1, 3), h=st.integers(3, 9), w=st.integers(3, 9),
       kh=st.integers(1, 3), kw=st.integers(1, 3), s=st.integers(1, 2), ph=st.integers(0, 2),
       pw=st.integers(0, 2), seed=st.integers(0, 2 ** 16))
def test_conv2d_backends_agree(cin, cout, h, w, kh, kw, s, ph, pw, seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(cin, h, w))
    k = rng.normal(size=(cout, cin, kh, kw))
    b = rng.normal(size=cout)
    a = _ckernels.conv2d(x, k, b, s, s, ph, pw)
    p = _pykernels.conv2d(x, k, b, s, s, ph, pw)
    assert a.shape == p.shape
    np.testing.assert_allclose(a, p, rtol=1e-12, atol=1e-12)


def direct_conv(x, k, b, s, ph, pw):
    cin, H, W = x.shape
    cout, _, kh, kw = k.shape
    xp = np.zeros((cin, H + 2 * ph, W + 2 * pw))
    xp[:, ph:ph + H, pw:pw + W] = x
    ho, wo = (H + 2 * ph - kh) // s + 1, (W + 2 * pw - kw) // s + 1
    out = np.zeros((cout, ho, wo))
    for o in range(cout):
        for r in range(ho):
            for q in range(wo):
                out[o, r, q] = np.sum(k[o] * xp[:, r * s:r * s + kh, q * s:q * s + kw]) + b[o]
    return out


def test_conv2d_matches_direct_loop(backend, rng):
    x = rng.normal(size=(2, 6, 7))
    k = rng.normal(size=(3, 2, 3, 2))
    b = rng.normal(size=3)
    got = _backend.kernels.conv2d(x, k, b, 2, 2, 1, 1)
    np.testing.assert_allclose(got, direct_conv(x, k, b, 2, 1, 1), atol=1e-12)


@needs_ext
def test_pool_sample_cosine_agree(rng):
    f = rng.normal(size=(4, 7, 9))
    np.testing.assert_array_equal(_ckernels.max_pool2x2(f), _pykernels.max_pool2x2(f))
    c = np.column_stack([rng.uniform(0, 6, 20), rng.uniform(0, 8, 20)])
    c[:3] = [[0, 0], [6, 8], [3, 4]]
    np.testing.assert_allclose(_ckernels.bilinear_sample(f, c), _pykernels.bilinear_sample(f, c),
                               atol=1e-14)
    a, b = rng.normal(size=(10, 33)), rng.normal(size=(10, 33))
    a[2] = 0.0
    b[5] = a[5]
    cc, pc = _ckernels.row_cosines(a, b), _pykernels.row_cosines(a, b)
    np.testing.assert_allclose(cc, pc, atol=1e-14)
    assert cc[2] == pc[2] == 0.0
    assert cc[5] == pc[5] == 1.0


def test_pure_python_env_switch():
    code = "import msdgr._backend as b; print(b.NAME)"
    env = dict(os.environ, MSDGR_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.stdout.strip() == "python"


def test_unknown_backend():
    with pytest.raises(ValueError):
        _backend.get("fortran")
