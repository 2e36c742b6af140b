import numpy as np
import pytest

from msdgr import config, pipeline, synth, train
from msdgr.errors import DataError


def small_set(n_classes=4, per_class=8):
    return [pipeline.quantize(r) for r in synth.graph_dataset(
        n_classes, per_class, nodes=(8, 4), dim=16, nuisance=8, seed=1)]


def test_loss_decreases():
    reps = small_set()
    cfg = config.load(overrides=["optim.epochs = 5", "train.eval_triplets = 64"])
    _, log = train.train(reps, cfg)
    assert log.final_loss < log.initial_loss


def test_zero_epochs_keeps_init():
    reps = small_set()
    cfg = config.load(overrides=["optim.epochs = 0"])
    init = train.init_params(reps, np.random.default_rng(cfg["seed"]))
    params, log = train.train(reps, cfg)
    a, b = train.params_to_dict(init), train.params_to_dict(params)
    assert a.keys() == b.keys()
    for k in a:
        np.testing.assert_array_equal(a[k], b[k])
    assert log.final_loss == log.initial_loss and log.epochs == []


def test_lr_schedule():
    cfg = config.load()
    lrs = [train.lr_at(e, cfg) for e in range(40)]
    assert lrs[0] == lrs[9] == 0.001
    assert lrs[10] == lrs[19] == 0.0005
    assert lrs[20] == 0.00025 and lrs[30] == 0.000125


def test_schedule_logged():
    reps = small_set(2, 3)
    cfg = config.load(overrides=["optim.epochs = 12", "train.eval_triplets = 4"])
    _, log = train.train(reps, cfg)
    assert [e[1] for e in log.epochs] == [0.001] * 10 + [0.0005] * 2


def test_infeasible_triplets():
    reps = small_set(1, 4)
    with pytest.raises(DataError):
        train.train(reps, config.load(overrides=["optim.epochs = 1"]))
    with pytest.raises(DataError):
        train.sample_triplets(["a", "b", "c"], 3, np.random.default_rng(0))


def test_epoch_triplets_cover_pairs():
    labels = ["a", "a", "b", "b", "b"]
    trip = train.epoch_triplets(labels, np.random.default_rng(0))
    assert len(trip) == 2 + 6
    for a, p, n in trip:
        assert a != p and labels[a] == labels[p] != labels[n]


def test_deterministic():
    reps = small_set(3, 3)
    cfg = config.load(overrides=["optim.epochs = 2", "train.eval_triplets = 8"])
    a = train.params_to_dict(train.train(reps, cfg)[0])
    b = train.params_to_dict(train.train(reps, cfg)[0])
    for k in a:
        np.testing.assert_array_equal(a[k], b[k])
