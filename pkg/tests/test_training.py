import numpy as np
import pytest

from roomedit.datagen import GenConfig, generate_pairs_for_scene, sample_toy_scenes
from roomedit.diffusion.data import TrainingSet
from roomedit.diffusion.training import (
    DivergenceError,
    TrainConfig,
    Trainer,
    load_checkpoint,
    save_checkpoint,
    write_loss_curve,
)


@pytest.fixture(scope="module")
def remove_dataset(catalog):
    scenes = sample_toy_scenes(catalog, 40, seed=11, n_objects=(3, 4), distinct=True)
    config = GenConfig(attempts=2, types=("remove",), seed=11)
    pairs = []
    for i, scene in enumerate(scenes):
        pairs.extend(generate_pairs_for_scene(scene, i, catalog, config))
    return TrainingSet.from_pairs(pairs, catalog)


@pytest.fixture(scope="module")
def catalog():
    from roomedit.catalog import default_catalog

    return default_catalog()


def moving_average(values, k):
    return [sum(values[i : i + k]) / k for i in range(len(values) - k + 1)]


def test_loss_decreases_over_first_100_steps(remove_dataset):
    trainer = Trainer(remove_dataset, TrainConfig(kind="graph", steps=100, seed=1, d=32))
    trainer.run(steps=100)
    losses = [l for _, l in trainer.loss_curve]
    ma = moving_average(losses, 20)
    assert ma[-1] < ma[0] * 0.5


def test_same_seed_identical_curves(remove_dataset):
    a = Trainer(remove_dataset, TrainConfig(kind="graph", steps=25, seed=2, d=16))
    a.run(steps=25)
    b = Trainer(remove_dataset, TrainConfig(kind="graph", steps=25, seed=2, d=16))
    b.run(steps=25)
    assert a.loss_curve == b.loss_curve


def test_checkpoint_reload_bit_identical(remove_dataset, tmp_path):
    config = TrainConfig(kind="layout", steps=30, seed=3, d=16)
    full = Trainer(remove_dataset, config)
    full.run(steps=10)
    save_checkpoint(tmp_path / "mid.npz", full)
    full.run(steps=10)

    resumed = load_checkpoint(tmp_path / "mid.npz", remove_dataset)
    resumed.run(steps=10)
    assert resumed.loss_curve == full.loss_curve
    for key in full.params:
        assert np.array_equal(full.params[key], resumed.params[key])


def test_checkpoint_roundtrips_params_and_meta(remove_dataset, tmp_path):
    trainer = Trainer(remove_dataset, TrainConfig(kind="graph", steps=5, seed=4, d=16))
    trainer.run(steps=5)
    save_checkpoint(tmp_path / "ckpt.npz", trainer)
    params, model_config, meta = load_checkpoint(tmp_path / "ckpt.npz")
    assert model_config == trainer.model_config
    assert meta["train_config"]["seed"] == 4
    assert set(params) == set(trainer.params)
    for key in params:
        assert np.array_equal(params[key], trainer.params[key])


def test_divergence_detection(remove_dataset):
    trainer = Trainer(remove_dataset, TrainConfig(kind="graph", steps=5, seed=5, d=16))
    trainer.params["head/cat_w"][:] = np.inf
    with pytest.raises(DivergenceError):
        trainer.step()


def test_loss_curve_csv(remove_dataset, tmp_path):
    trainer = Trainer(remove_dataset, TrainConfig(kind="graph", steps=5, seed=6, d=16))
    trainer.run(steps=5)
    path = tmp_path / "curve.csv"
    write_loss_curve(path, trainer.loss_curve)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "step,loss"
    assert len(lines) == 6
    step, loss = lines[1].split(",")
    assert int(step) == 1 and float(loss) == trainer.loss_curve[0][1]
