import numpy as np
import pytest

from msdgr import config, imageio, matcher, pipeline, tensor
from msdgr.errors import DataError, FormatError, MissingWeightsError


def test_defaults():
    cfg = config.load()
    assert cfg["optim.lr"] == 0.001 and cfg["optim.lr_decay"] == 0.5
    assert cfg["optim.lr_step"] == 10 and cfg["optim.weight_decay"] == 1e-4
    assert cfg["optim.batch_size"] == 64
    assert cfg["scales.nodes"] == (64, 32, 16)
    assert cfg["matching.adj_sign"] == -1


def test_file_and_overrides(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("# comment\nseed = 5\nscales.nodes = 8, 4, 2\n\nmatching.mode = static\n")
    cfg = config.load(str(p), ["seed=6"])
    assert cfg["seed"] == 6 and cfg["scales.nodes"] == (8, 4, 2)
    assert cfg["matching.mode"] == "static"
    assert config.parse_lines(config.dumps(cfg).splitlines()) == cfg


@pytest.mark.parametrize("line", ["nonsense.key = 1", "seed = x", "matching.adj_sign = 0",
                                  "matching.mode = fuzzy", "no equals sign"])
def test_rejected(line):
    with pytest.raises(FormatError):
        config.parse_lines([line])


def test_env_seed(monkeypatch):
    monkeypatch.setenv("MSDGR_SEED", "42")
    assert config.load(overrides=["seed=1"])["seed"] == 42
    monkeypatch.setenv("MSDGR_SEED", "forty")
    with pytest.raises(FormatError):
        config.load()


@pytest.fixture
def two_images(tmp_path, rng):
    paths = []
    for k in range(2):
        p = tmp_path / f"im{k}.pgm"
        imageio.write(p, rng.integers(0, 256, size=(48, 64)).astype(np.uint8))
        paths.append(p)
    m = tmp_path / "manifest.csv"
    m.write_text("path,label,split\nim0.pgm,a,train\nim1.pgm,b,test\n")
    return m


def test_manifest(two_images):
    entries = pipeline.load_manifest(two_images)
    assert [(e.label, e.split) for e in entries] == [("a", "train"), ("b", "test")]


def test_manifest_errors(tmp_path):
    bad = tmp_path / "m.csv"
    bad.write_text("file,label\nx.pgm,a\n")
    with pytest.raises(FormatError):
        pipeline.load_manifest(bad)
    bad.write_text("path,label\nmissing.pgm,a\n")
    with pytest.raises(DataError):
        pipeline.load_manifest(bad)


def test_gabor_pipeline_dims(two_images):
    cfg = config.load(overrides=["gabor.nodes = 6"])
    reps = pipeline.extract_dataset(cfg, pipeline.load_manifest(two_images))
    assert len(reps) == 2
    g = reps[0].graphs[0]
    assert g.nodes.shape == (6, 120 * 81)
    assert g.scale_id == "medium" and reps[0].global_feature.size == 0


def test_cnn_requires_weights():
    with pytest.raises(MissingWeightsError):
        pipeline.make_pipeline(config.load(overrides=["pipeline = cnn-weights"]))


@pytest.mark.slow
def test_cnn_pipeline_shapes(rng):
    spec = tensor.backbone_spec(5)
    w = tensor.WeightStore(tensor.init_weights(spec, rng))
    cfg = config.load(overrides=["pipeline = cnn-weights", "localizer.mode = grid",
                                 "scales.nodes = 8,4,2"])
    rep = pipeline.make_pipeline(cfg, w)(rng.uniform(size=(128, 256)), "x")
    assert [g.nodes.shape for g in rep.graphs] == [(8, 64), (4, 96), (2, 96)]
    assert [g.scale_id for g in rep.graphs] == ["small", "medium", "large"]
    assert rep.global_feature.shape == (256,)


def test_reps_file_round_trip(tmp_path, two_images):
    cfg = config.load(overrides=["gabor.nodes = 4"])
    reps = pipeline.extract_dataset(cfg, pipeline.load_manifest(two_images))
    pipeline.save_reps(tmp_path / "r.msdg", reps, seed=9)
    back, seed = pipeline.load_reps(tmp_path / "r.msdg")
    assert seed == 9 and [r.label for r in back] == ["a", "b"]
    for mode in ("static", "dynamic"):
        assert (matcher.match_score(back[0], back[1], mode)
                == matcher.match_score(reps[0], reps[1], mode))
