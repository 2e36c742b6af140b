import math

import numpy as np
import pytest

from msdgr import graph, tensor
from msdgr.errors import InfeasibleError, MissingWeightsError, ParameterError
from msdgr.graph import LocalizerSpec


def test_adjacency_values():
    r = 4.0
    adj = graph.build_adjacency([(0, 0), (0, 2), (0, 4), (3, 0)], r)
    assert adj[0, 0] == 1.0
    assert adj[0, 1] == pytest.approx(math.exp(-1 / 8), abs=1e-12)
    assert adj[0, 1] == pytest.approx(0.88250, abs=5e-6)
    assert adj[0, 2] == 0.0  # d == r is cut off
    assert adj[0, 3] == pytest.approx(math.exp(-9 / 32))


def test_adjacency_invariants(rng):
    c = rng.uniform(0, 10, size=(30, 2))
    adj = graph.build_adjacency(c, 3.0)
    np.testing.assert_array_equal(adj, adj.T)
    np.testing.assert_array_equal(np.diag(adj), 1.0)
    assert ((adj >= 0) & (adj <= 1)).all()
    d = np.linalg.norm(c[:, None] - c[None], axis=2)
    off = ~np.eye(30, dtype=bool)
    assert (adj[off & (d >= 3.0)] == 0).all()


def test_adjacency_bad_radius():
    with pytest.raises(ParameterError):
        graph.build_adjacency([(0, 0)], 0.0)


def test_grid_example():
    coords = graph.localize_nodes(np.zeros((1, 4, 4)), LocalizerSpec("grid"), 4)
    assert {tuple(c) for c in coords} == {(0.75, 0.75), (0.75, 2.25), (2.25, 0.75), (2.25, 2.25)}


def test_energy_peak_single_pixel():
    f = np.zeros((3, 6, 7))
    f[1, 4, 2] = 5.0
    coords = graph.localize_nodes(f, LocalizerSpec("energy-peak"), 1)
    np.testing.assert_array_equal(coords, [[4, 2]])


def test_energy_peaks_distinct_and_backfilled(rng):
    f = rng.normal(size=(2, 5, 5))
    coords = graph.energy_peaks(f, 25)
    assert len({tuple(c) for c in coords}) == 25


def test_sln_zero_weights_gives_center():
    C, H, W, n = 8, 8, 12, 5
    spec = tensor.sln_spec(C, H, W, n)
    w = tensor.init_weights(spec, np.random.default_rng(0))
    w["sln.fc2.weight"][:] = 0.0
    w["sln.fc2.bias"][:] = 0.0
    loc = LocalizerSpec("sln", weights=tensor.WeightStore(w))
    coords = graph.localize_nodes(np.random.default_rng(1).normal(size=(C, H, W)), loc, n)
    np.testing.assert_allclose(coords, [[(H - 1) / 2, (W - 1) / 2]] * n)


def test_sln_requires_weights():
    with pytest.raises(MissingWeightsError):
        graph.localize_nodes(np.zeros((4, 8, 8)), LocalizerSpec("sln"), 2)


def test_too_many_nodes():
    with pytest.raises(InfeasibleError):
        graph.localize_nodes(np.zeros((1, 3, 3)), LocalizerSpec("grid"), 10)


def test_external_csv(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text("i,j\n0.5,1\n2,3.25\n")
    loc = LocalizerSpec("external", path=str(p))
    np.testing.assert_array_equal(graph.localize_nodes(np.zeros((1, 4, 5)), loc, 2),
                                  [[0.5, 1], [2, 3.25]])
    with pytest.raises(InfeasibleError):
        graph.localize_nodes(np.zeros((1, 4, 5)), loc, 3)
    with pytest.raises(InfeasibleError):
        graph.localize_nodes(np.zeros((1, 2, 2)), loc, 2)


def test_constant_map_nodes_identical():
    g = graph.make_feature_graph(np.full((3, 9, 9), 0.7), LocalizerSpec("grid"), 9)
    np.testing.assert_allclose(g.nodes, 0.7)


def test_single_node_graph():
    g = graph.make_feature_graph(np.ones((2, 4, 4)), LocalizerSpec("grid"), 1)
    np.testing.assert_array_equal(g.adjacency, [[1.0]])


def test_permutation_equivariance(rng):
    f = rng.normal(size=(4, 10, 12))
    g = graph.make_feature_graph(f, LocalizerSpec("grid"), 9)
    perm = rng.permutation(9)
    loc = LocalizerSpec("external", coords=g.coords[perm])
    h = graph.make_feature_graph(f, loc, 9, r=g.radius)
    np.testing.assert_array_equal(h.nodes, g.nodes[perm])
    np.testing.assert_array_equal(h.adjacency, g.adjacency[np.ix_(perm, perm)])


def test_deterministic(rng):
    f = rng.normal(size=(4, 10, 12))
    a = graph.make_feature_graph(f, LocalizerSpec("energy-peak"), 7)
    b = graph.make_feature_graph(f.copy(), LocalizerSpec("energy-peak"), 7)
    np.testing.assert_array_equal(a.nodes, b.nodes)
    np.testing.assert_array_equal(a.coords, b.coords)


def test_arrays_round_trip(rng):
    g = graph.make_feature_graph(rng.normal(size=(2, 6, 6)), LocalizerSpec("grid"), 4,
                                 scale_id="large")
    h = graph.graph_from_arrays(graph.graph_to_arrays(g, "x/"), "x/")
    assert h.scale_id == "large" and h.radius == g.radius
    np.testing.assert_array_equal(h.nodes, g.nodes)
    np.testing.assert_array_equal(h.adjacency, g.adjacency)


def test_unknown_scale():
    with pytest.raises(ParameterError):
        graph.FeatureGraph(np.zeros((1, 1)), np.zeros((1, 2)), np.ones((1, 1)), 1.0, "huge")
