"""Tests for run manifests, report writers and budgets."""

import json

import pytest

from asymptotic_invariants import __version__, config, reports
from asymptotic_invariants.reports import RunManifest


@pytest.fixture
def manifest():
    """Manifest for a fixed command line."""
    return RunManifest.start({"n_pairs": 10, "dt": 0.01}, seed=3, threads=2, command=["asyminv"])


def test_config_hash_is_canonical():
    """Test key order does not change the hash."""
    assert reports.config_hash({"a": 1, "b": 2}) == reports.config_hash({"b": 2, "a": 1})
    assert reports.config_hash({"a": 1}) != reports.config_hash({"a": 2})


def test_manifest_start(manifest: RunManifest):
    """Test a started manifest records its inputs."""
    assert manifest.command == ["asyminv"]
    assert manifest.seed == 3
    assert manifest.threads == 2
    assert manifest.version == __version__
    assert manifest.budgets == {"n_pairs": 10, "dt": 0.01}
    assert manifest.config_hash == reports.config_hash({"n_pairs": 10, "dt": 0.01})


def test_manifest_finished(manifest: RunManifest):
    """Test finishing turns the start mark into elapsed seconds."""
    done = manifest.finished()
    assert 0.0 <= done.wall_seconds < 60.0
    assert done.config_hash == manifest.config_hash
    assert done.to_dict()["seed"] == 3


def test_write_json(tmp_path, manifest: RunManifest):
    """Test JSON reports embed the manifest."""
    path = tmp_path / "out" / "report.json"
    reports.write_json(path, {"value": 1.25}, manifest)

    loaded = reports.load_report(path)
    assert loaded["value"] == 1.25
    assert isinstance(loaded["manifest"], dict)
    assert loaded["manifest"]["seed"] == 3
    assert [p.name for p in path.parent.iterdir()] == ["report.json"]


def test_load_report_missing(tmp_path):
    """Test a missing report."""
    with pytest.raises(FileNotFoundError, match="report not found"):
        _ = reports.load_report(tmp_path / "missing.json")


def test_render_csv_uses_repr():
    """Test floats are written with full precision."""
    rows: list[reports.Row] = [{"quantity": "helicity", "T": 25.0, "estimate": 0.1 + 0.2}]
    text = reports.render_csv(rows)
    assert text.splitlines() == ["quantity,T,estimate", "helicity,25.0,0.30000000000000004"]
    assert reports.render_csv([]) == ""


def test_write_csv_with_manifest(tmp_path, manifest: RunManifest):
    """Test CSV ladders get a sibling manifest."""
    path = tmp_path / "helicity.csv"
    reports.write_csv(path, [{"quantity": "helicity", "T": 1.0}], manifest)

    assert path.read_text().startswith("quantity,T\n")
    sibling = reports.manifest_path(path)
    assert sibling.name == "helicity.manifest.json"
    assert json.loads(sibling.read_text())["config_hash"] == manifest.config_hash


def test_atomic_write_replaces(tmp_path):
    """Test an existing file is replaced in one step."""
    path = tmp_path / "a.txt"
    _ = path.write_text("old")
    reports.atomic_write(path, "new")
    assert path.read_text() == "new"
    assert len(list(tmp_path.iterdir())) == 1


def test_load_shipped_budgets():
    """Test the shipped budgets define all three levels."""
    budgets = reports.load_budgets(config.get_budgets_file())
    assert set(budgets) == {"small", "medium", "full"}
    assert budgets["small"]["times"] == [10.0, 20.0, 40.0]
    assert budgets["full"]["dt"] == 0.001


def test_load_budgets_missing_key(tmp_path):
    """Test a level missing a key is rejected."""
    path = tmp_path / "budgets.yaml"
    _ = path.write_text("budgets:\n  small:\n    curve_points: 64\n")
    with pytest.raises(ValueError, match="missing mc_samples"):
        _ = reports.load_budgets(path)


def test_load_budgets_no_top_level(tmp_path):
    """Test the top-level mapping is required."""
    path = tmp_path / "budgets.yaml"
    _ = path.write_text("small: {}\n")
    with pytest.raises(ValueError, match="top-level"):
        _ = reports.load_budgets(path)


def test_load_budgets_missing_file(tmp_path):
    """Test a missing budgets file."""
    with pytest.raises(FileNotFoundError, match="budgets not found"):
        _ = reports.load_budgets(tmp_path / "budgets.yaml")
