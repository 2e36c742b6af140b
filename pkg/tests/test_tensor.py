import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from msdgr import tensor
from msdgr.errors import MissingWeightsError, OutOfBoundsError, ShapeError


def test_integer_coordinate_is_direct_indexing(backend):
    f = np.zeros((5, 4, 6))
    f[:, 2, 3] = np.arange(5)
    np.testing.assert_array_equal(tensor.bilinear_sample(f, (2.0, 3.0)), np.arange(5.0))


def test_constant_map(backend, rng):
    f = np.full((3, 5, 5), 2.5)
    for _ in range(10):
        c = rng.uniform(0, 4, size=2)
        np.testing.assert_allclose(tensor.bilinear_sample(f, c), 2.5, rtol=1e-15)


def test_bilinear_hand_value(backend):
    f = np.array([[[0.0, 1.0], [2.0, 3.0]]])
    assert tensor.bilinear_sample(f, (0.5, 0.5))[0] == 1.5


def test_corners_exact(backend, rng):
    f = rng.normal(size=(2, 3, 4))
    for i, j in [(0, 0), (2, 3), (2, 0), (0, 3), (1, 2)]:
        np.testing.assert_array_equal(tensor.bilinear_sample(f, (i, j)), f[:, i, j])


@pytest.mark.parametrize("coord", [(-0.01, 0), (0, 3.5), (2.0001, 1), (np.nan, 0)])
def test_out_of_bounds(coord):
    with pytest.raises(OutOfBoundsError):
        tensor.bilinear_sample(np.zeros((1, 3, 4)), coord)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), eps=st.floats(1e-6, 0.5))
def test_lipschitz_bound(seed, eps):
    rng = np.random.default_rng(seed)
    f = rng.normal(size=(3, 6, 7))
    c = rng.uniform(0, [5 - eps, 6 - eps])
    d = rng.normal(size=2)
    d = eps * d / np.linalg.norm(d)
    c2 = np.clip(c + d, 0, [5, 6])
    moved = np.linalg.norm(c2 - c)
    diff = np.abs(tensor.bilinear_sample(f, c2) - tensor.bilinear_sample(f, c)).max()
    assert diff <= moved * 2 * np.abs(f).max() + 1e-12


def test_sln_output_length():
    spec = tensor.sln_spec(64, 32, 64, 64)
    assert spec[-1].out_shape == (128,)
    assert spec[4].in_shape == (32 * 64 * 64 // 64,)
    w = tensor.WeightStore(tensor.init_weights(spec, np.random.default_rng(0)))
    out = tensor.forward_network(spec, w, np.random.default_rng(1).normal(size=(64, 32, 64)))
    assert out.shape == (128,)


def test_identity_conv(backend, rng):
    spec = [tensor.LayerSpec("id", "conv", (1, 4, 5), (1, 4, 5), (1, 1), (1, 1), (0, 0))]
    w = tensor.WeightStore({"id.weight": np.ones((1, 1, 1, 1)), "id.bias": np.zeros(1)})
    x = rng.uniform(0, 1, size=(1, 4, 5))  # nonnegative so the rectifier is inert
    np.testing.assert_array_equal(tensor.forward_network(spec, w, x), x)


def test_backbone_shapes():
    spec = tensor.backbone_spec(10)
    by = {l.name: l for l in spec}
    assert by["conv1"].out_shape == (24, 128, 256)
    assert by["conv3"].out_shape == (64, 32, 64)
    assert by["conv4"].out_shape == (96, 16, 32)
    assert by["conv5"].out_shape == (96, 8, 16)
    assert by["fc1"].in_shape == (3072,)
    assert by["fc2"].out_shape == (10,)


def test_backbone_conv_block1_forward(backend):
    spec = tensor.backbone_spec(10)
    w = tensor.WeightStore(tensor.init_weights(spec, np.random.default_rng(0)))
    x = np.random.default_rng(1).uniform(size=(1, 128, 256))
    out, kept = tensor.forward_network(spec, w, x, capture=("conv3", "conv4", "conv5", "fc1"))
    assert kept["conv3"].shape == (64, 32, 64)
    assert kept["conv5"].shape == (96, 8, 16)
    assert kept["fc1"].shape == (256,)
    assert out.shape == (10,)


def test_pool_values_come_from_window(backend, rng):
    spec = [tensor.LayerSpec("p", "pool", (2, 6, 7), (2, 3, 3), (2, 2), (2, 2))]
    x = rng.normal(size=(2, 6, 7))
    y = tensor.forward_network(spec, tensor.WeightStore(), x)
    for c in range(2):
        for i in range(3):
            for j in range(3):
                win = x[c, 2 * i:2 * i + 2, 2 * j:2 * j + 2]
                assert y[c, i, j] in win and y[c, i, j] == win.max()


def test_declared_shape_mismatch_names_layer():
    bad = tensor.LayerSpec("convX", "conv", (1, 8, 8), (2, 8, 8), (5, 5), (1, 1), (1, 1))
    with pytest.raises(ShapeError, match="convX"):
        tensor.validate_spec([bad])


def test_weight_shape_mismatch_names_layer():
    spec = [tensor.LayerSpec("c1", "conv", (1, 4, 4), (2, 4, 4), (3, 3), (1, 1), (1, 1))]
    w = tensor.WeightStore({"c1.weight": np.zeros((2, 1, 5, 5)), "c1.bias": np.zeros(2)})
    with pytest.raises(ShapeError, match="c1.weight"):
        tensor.forward_network(spec, w, np.zeros((1, 4, 4)))


def test_missing_weights():
    spec = tensor.sln_spec(4, 8, 8, 2)
    with pytest.raises(MissingWeightsError):
        tensor.forward_network(spec, tensor.WeightStore(), np.zeros((4, 8, 8)))


def test_input_shape_checked():
    spec = tensor.sln_spec(4, 8, 8, 2)
    with pytest.raises(ShapeError, match="pool1"):
        tensor.forward_network(spec, tensor.WeightStore(), np.zeros((4, 8, 12)))


def test_weightstore_file_round_trip(tmp_path):
    spec = tensor.sln_spec(4, 8, 8, 3)
    w = tensor.WeightStore(tensor.init_weights(spec, np.random.default_rng(0)))
    w.save(tmp_path / "w.msdg")
    back = tensor.WeightStore.load(tmp_path / "w.msdg")
    assert set(back.names()) == set(w.names())
    x = np.random.default_rng(2).normal(size=(4, 8, 8))
    np.testing.assert_allclose(tensor.forward_network(spec, back, x),
                               tensor.forward_network(spec, w, x), rtol=1e-5, atol=1e-6)


def test_weightstore_readonly():
    w = tensor.WeightStore({"a": np.zeros(3)})
    with pytest.raises(ValueError):
        w.get("a")[0] = 1.0
