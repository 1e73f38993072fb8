import json
from pathlib import Path

import numpy as np
import pytest

from tiny_raman_cnn.core.model import init_model, predict
from tiny_raman_cnn.core.settings import TrainConfig
from tiny_raman_cnn.core.trainer import train
from tiny_raman_cnn.errors import CheckpointError
from tiny_raman_cnn.storage.checkpoint import (
    FORMAT_VERSION,
    Checkpoint,
    checkpoint_load,
    checkpoint_save,
    dumps_checkpoint,
    loads_checkpoint,
)
from tests.utils import peak_dataset, tiny_arch


def trained_checkpoint() -> Checkpoint:
    cfg = TrainConfig(epochs=2, batch_size=4, seed=3)
    params, _ = train(tiny_arch(), peak_dataset([8, 24], per_class=4), cfg)
    return Checkpoint(params=params, train_config=cfg)


def test_save_load_save_is_byte_identical(tmp_path: Path) -> None:
    first = checkpoint_save(trained_checkpoint(), tmp_path / "first.json")
    second = checkpoint_save(checkpoint_load(first), tmp_path / "second.json")

    assert first.read_bytes() == second.read_bytes()


def test_loaded_model_predicts_bitwise_equal(tmp_path: Path) -> None:
    checkpoint = trained_checkpoint()
    inputs = peak_dataset([8, 24], per_class=3, seed=9).inputs

    loaded = checkpoint_load(checkpoint_save(checkpoint, tmp_path / "model.json"))

    before, _ = predict(checkpoint.params, inputs)
    after, _ = predict(loaded.params, inputs)
    np.testing.assert_array_equal(before, after)
    assert loaded.train_config == checkpoint.train_config
    assert loaded.arch == checkpoint.arch


def test_identical_runs_give_identical_checkpoints() -> None:
    assert dumps_checkpoint(trained_checkpoint()) == dumps_checkpoint(trained_checkpoint())


def test_checkpoint_without_train_config() -> None:
    checkpoint = Checkpoint(params=init_model(tiny_arch(), seed=0))

    loaded = loads_checkpoint(dumps_checkpoint(checkpoint))

    assert loaded.train_config is None
    assert loaded.format_version == FORMAT_VERSION
    assert loaded.created == checkpoint.created


def test_truncated_checkpoint(tmp_path: Path) -> None:
    path = checkpoint_save(Checkpoint(params=init_model(tiny_arch(), seed=0)), tmp_path / "model.json")
    text = path.read_text(encoding="utf-8")
    path.write_text(text[: len(text) // 2], encoding="utf-8")

    with pytest.raises(CheckpointError, match="Corrupt"):
        checkpoint_load(path)


def test_version_mismatch() -> None:
    document = json.loads(dumps_checkpoint(Checkpoint(params=init_model(tiny_arch(), seed=0))))
    document["format_version"] = FORMAT_VERSION + 1

    with pytest.raises(CheckpointError, match="version"):
        loads_checkpoint(json.dumps(document))


def test_declared_shape_mismatch() -> None:
    document = json.loads(dumps_checkpoint(Checkpoint(params=init_model(tiny_arch(), seed=0))))
    document["tensors"]["fc1.bias"]["shape"] = [5]

    with pytest.raises(CheckpointError):
        loads_checkpoint(json.dumps(document))


def test_missing_tensor() -> None:
    document = json.loads(dumps_checkpoint(Checkpoint(params=init_model(tiny_arch(), seed=0))))
    del document["tensors"]["conv0.weights"]

    with pytest.raises(CheckpointError):
        loads_checkpoint(json.dumps(document))


def test_missing_file(tmp_path: Path) -> None:
    with pytest.raises(CheckpointError):
        checkpoint_load(tmp_path / "absent.json")


def test_tensors_are_hex_encoded() -> None:
    document = json.loads(dumps_checkpoint(Checkpoint(params=init_model(tiny_arch(), seed=0))))
    entry = document["tensors"]["fc2.weights"]

    assert entry["shape"] == [4, 2]
    assert all(token.startswith(("0x", "-0x")) for token in entry["data"].split())
