import pytest
import yaml

from conserva.config import SCALES, ConfigLoader, deep_merge


@pytest.fixture
def loader():
    return ConfigLoader()


def test_packaged_files_load(loader):
    """Should read both packaged YAML files"""
    systems = loader.load_systems()
    assert {"mass_spring", "lorenz", "burgers"} <= set(systems)
    pipeline = loader.load_pipeline()
    assert set(pipeline["scales"]) == set(SCALES)


def test_resolve_merges_scale_over_defaults(loader):
    """Should let the scale section override nested defaults only where it names keys"""
    desk = loader.resolve("desk")
    assert desk["scale"] == "desk"
    assert desk["phi"]["max_epochs"] == 100
    assert desk["phi"]["hidden"] == [64, 64, 64]
    full = loader.resolve("full")
    assert full["restarts"] == 10
    assert full["n_traj"] is None


def test_resolve_overrides(loader):
    """Should apply explicit overrides last and ignore None values"""
    config = loader.resolve("desk", {"restarts": 7, "gate": {"tau": 0.2}, "jobs": None})
    assert config["restarts"] == 7
    assert config["gate"]["tau"] == 0.2
    assert config["gate"]["rho_min"] == 10.0
    assert config["jobs"] == 1


@pytest.mark.parametrize("overrides", [
    {"gate": {"tau": 0.0}},
    {"gate": {"rho_min": -1.0}},
    {"restarts": 0},
    {"parametric": "maybe"},
    {"phi": {"max_epochs": 301}},
    {"dynamics": {"schedule": "step"}},
])
def test_validation_rejects(loader, overrides):
    """Should refuse out-of-range settings"""
    with pytest.raises(ValueError):
        loader.resolve("desk", overrides)


def test_unknown_scale(loader):
    with pytest.raises(ValueError):
        loader.resolve("huge")


def test_missing_file(tmp_path):
    """Should wrap unreadable config files"""
    with pytest.raises(RuntimeError):
        ConfigLoader(tmp_path).load_pipeline()


def test_defaults_fill_minimal_file(tmp_path):
    """Should fill every section a minimal pipeline file leaves out"""
    (tmp_path / "pipeline.yaml").write_text(yaml.safe_dump({
        "defaults": {"dynamics": {"schedule": "one_cycle"}, "phi": {"schedule": "cosine"},
                     "gate": {"tau": 0.01, "rho_min": 10.0}},
    }))
    config = ConfigLoader(tmp_path).resolve("desk")
    assert config["restarts"] == 10
    assert config["adjudication"] == {}


def test_deep_merge_leaves_inputs_alone():
    base = {"a": {"b": 1, "c": 2}}
    merged = deep_merge(base, {"a": {"b": 5}, "d": None})
    assert merged == {"a": {"b": 5, "c": 2}}
    assert base == {"a": {"b": 1, "c": 2}}
