import numpy as np
import pytest

from conserva.checkpoint import MANIFEST, load_model, save_model
from conserva.errors import DatasetFormatError
from conserva.neural.mlp import init_mlp
from conserva.neural.training import DynamicsModel, PhiModel, Standardizer


def _standardizer(dim, rng):
    return Standardizer(mean=rng.normal(size=dim), std=rng.uniform(0.5, 2.0, size=dim))


@pytest.fixture
def dynamics_model(rng):
    return DynamicsModel(init_mlp([2, 8, 2], rng), _standardizer(2, rng), _standardizer(2, rng))


def test_dynamics_roundtrip(tmp_path, dynamics_model):
    """Should reproduce predictions exactly after reload"""
    save_model(dynamics_model, tmp_path / "dyn")
    loaded = load_model(tmp_path / "dyn")
    assert isinstance(loaded, DynamicsModel)
    x = np.random.default_rng(1).normal(size=(10, 2))
    assert np.array_equal(loaded.predict(x), dynamics_model.predict(x))


def test_phi_roundtrip(tmp_path, rng):
    """Should restore a phi model as a phi model"""
    model = PhiModel(init_mlp([4, 8, 8, 1], rng), _standardizer(4, rng))
    save_model(model, tmp_path / "phi")
    loaded = load_model(tmp_path / "phi")
    assert isinstance(loaded, PhiModel)
    x = np.random.default_rng(2).normal(size=(5, 4))
    assert np.array_equal(loaded.evaluate(x), model.evaluate(x))


def test_corrupt_blob(tmp_path, dynamics_model):
    """Should detect a modified weight file"""
    path = save_model(dynamics_model, tmp_path / "dyn")
    blob = path / "layer0.weight.f64"
    data = bytearray(blob.read_bytes())
    data[0] ^= 0xFF
    blob.write_bytes(bytes(data))
    with pytest.raises(DatasetFormatError):
        load_model(path)


def test_truncated_blob(tmp_path, dynamics_model):
    path = save_model(dynamics_model, tmp_path / "dyn")
    blob = path / "input_std.f64"
    blob.write_bytes(blob.read_bytes()[:-8])
    with pytest.raises(DatasetFormatError):
        load_model(path)


def test_missing_manifest(tmp_path, dynamics_model):
    """Should refuse a directory without a manifest"""
    path = save_model(dynamics_model, tmp_path / "dyn")
    (path / MANIFEST).unlink()
    with pytest.raises(DatasetFormatError):
        load_model(path)
