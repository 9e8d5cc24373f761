"""Tests for CLI commands."""

import json

import pytest
from click.testing import CliRunner

from asymptotic_invariants import curves, main, reports
from asymptotic_invariants.asymptotics import (
    AsymptoticEstimate,
    BoundsReport,
    ConvergenceReport,
    Inequality,
)
from asymptotic_invariants.confint import IntegralEstimate
from asymptotic_invariants.selftest import Check

# Short ladder on the rigid rotation keeps CLI runs fast.
FAST = ["--T", "1,2,4", "--dt", "0.01", "--points", "32"]


@pytest.fixture
def runner():
    """Fixture for Click CLI runner."""
    return CliRunner()


@pytest.fixture
def hopf_file(tmp_path):
    """Knot file holding a Hopf link."""
    path = tmp_path / "hopf.txt"
    curves.write_knot(path, curves.hopf_link(64))
    return path


@pytest.fixture
def trefoil_file(tmp_path):
    """Knot file holding a trefoil."""
    path = tmp_path / "trefoil.txt"
    curves.write_knot(path, curves.trefoil(64))
    return path


def test_cli_version(runner):
    """Test CLI version command."""
    result = runner.invoke(main.cli, ["--version"])

    assert result.exit_code == 0
    assert "version" in result.output.lower()


def test_cli_help(runner):
    """Test CLI help command."""
    result = runner.invoke(main.cli, ["--help"])

    assert result.exit_code == 0
    assert "Asymptotic Invariants" in result.output
    assert "Commands:" in result.output
    for command in ("invariant", "helicity", "qhelicity", "bounds", "converge", "selftest"):
        assert command in result.output


def test_invariant_lk(runner, hopf_file, tmp_path):
    """Test the linking number of a Hopf link file."""
    out = tmp_path / "lk.json"

    result = runner.invoke(
        main.cli, ["invariant", "--knot", str(hopf_file), "--which", "lk", "--out", str(out)]
    )

    assert result.exit_code == 0
    report = json.loads(out.read_text())
    assert report["value"] == pytest.approx(1.0, abs=5e-2)
    assert report["oracle"] == 1
    assert report["method"] == "grid"
    assert report["manifest"]["command"]
    assert report["config"]["which"] == "lk"


def test_invariant_lk_needs_link(runner, trefoil_file):
    """Test lk on a single component is an input error."""
    result = runner.invoke(main.cli, ["invariant", "--knot", str(trefoil_file), "--which", "lk"])

    assert result.exit_code == 2
    assert "needs a link" in result.output


def test_invariant_writhe(runner, trefoil_file, tmp_path):
    """Test writhe reports a grid estimate."""
    out = tmp_path / "writhe.json"

    result = runner.invoke(
        main.cli, ["invariant", "--knot", str(trefoil_file), "--which", "writhe", "--out", str(out)]
    )

    assert result.exit_code == 0
    report = reports.load_report(out)
    assert report["which"] == "writhe"
    assert report["value"] != 0.0


def test_invariant_missing_knot(runner, tmp_path):
    """Test a missing knot file exits with an input error."""
    result = runner.invoke(
        main.cli, ["invariant", "--knot", str(tmp_path / "none.txt"), "--which", "writhe"]
    )

    assert result.exit_code == 2
    assert "not found" in result.output


def test_invariant_id_needs_diagram(runner, trefoil_file):
    """Test --which ID without --diagram."""
    result = runner.invoke(main.cli, ["invariant", "--knot", str(trefoil_file), "--which", "ID"])

    assert result.exit_code == 2
    assert "--diagram" in result.output


def test_invariant_id_invalid_diagram(runner, trefoil_file, tmp_path):
    """Test every problem of an invalid diagram is listed."""
    diagram = tmp_path / "bad.txt"
    _ = diagram.write_text("2; circle=[1,2,3,4]; free=[]; edges=[(1,2),(1,3)]\n")

    result = runner.invoke(
        main.cli,
        ["invariant", "--knot", str(trefoil_file), "--which", "ID", "--diagram", str(diagram)],
    )

    assert result.exit_code == 2
    assert "invalid diagram" in result.output
    assert "non-trivalent vertex 1" in result.output
    assert "non-trivalent vertex 4" in result.output


def test_invariant_id_several_diagrams(runner, trefoil_file, tmp_path):
    """Test a diagram file with several lines gives one result per diagram."""
    diagram = tmp_path / "chords.txt"
    _ = diagram.write_text(
        "1; circle=[1,2]; free=[]; edges=[(1,2)]\n"
        "2; circle=[1,2,3,4]; free=[]; edges=[(1,3),(2,4)]\n"
    )
    out = tmp_path / "id.json"

    result = runner.invoke(
        main.cli,
        ["invariant", "--knot", str(trefoil_file), "--which", "ID", "--diagram", str(diagram)]
        + ["--out", str(out)],
    )

    assert result.exit_code == 0
    report = json.loads(out.read_text())
    assert len(report["results"]) == 2
    assert report["results"][0]["diagram"].startswith("1;")


def test_helicity_missing_config(runner, tmp_path):
    """Test an unknown field config exits with an input error."""
    result = runner.invoke(main.cli, ["helicity", "--field", str(tmp_path / "missing.cfg")])

    assert result.exit_code == 2
    assert "config not found" in result.output


def test_helicity_bad_ladder(runner):
    """Test a decreasing ladder is an input error."""
    result = runner.invoke(main.cli, ["helicity", "--field", "rotation_torus", "--T", "10,5,20"])

    assert result.exit_code == 2
    assert "increasing" in result.output


def test_helicity_bad_thread_count(runner, monkeypatch):
    """Test an invalid AI_THREADS value is an input error."""
    monkeypatch.setenv("AI_THREADS", "many")

    result = runner.invoke(main.cli, ["helicity", "--field", "rotation_torus", *FAST])

    assert result.exit_code == 2
    assert "AI_THREADS" in result.output


def test_helicity_csv(runner, tmp_path):
    """Test helicity writes a CSV ladder and its manifest."""
    out = tmp_path / "helicity.csv"

    result = runner.invoke(
        main.cli,
        ["helicity", "--field", "rotation_torus", "--pairs", "3", *FAST, "--out", str(out)],
    )

    assert result.exit_code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == (
        "quantity,T,estimate,std_error,n_pairs,dt,seed,normalized_estimate,normalized_std_error"
    )
    assert len(lines) == 4
    assert lines[1].startswith("helicity,1.0,")
    manifest = json.loads(reports.manifest_path(out).read_text())
    assert manifest["seed"] == 0
    assert manifest["budgets"]["pairs"] == 3


def test_qhelicity_stdout(runner):
    """Test qhelicity prints its CSV without --out."""
    result = runner.invoke(
        main.cli, ["qhelicity", "--field", "rotation_torus", "--pairs", "2", *FAST]
    )

    assert result.exit_code == 0
    assert "quadratic_helicity,1.0," in result.output


def test_asymptotic_builtin_diagram(runner, tmp_path):
    """Test asymptotic writhe along rigid-rotation orbits."""
    out = tmp_path / "writhe.csv"

    result = runner.invoke(
        main.cli,
        ["asymptotic", "--field", "rotation_torus", "--diagram", "chord", "--seeds", "2", *FAST]
        + ["--out", str(out)],
    )

    assert result.exit_code == 0
    assert out.read_text().splitlines()[1].startswith("I_D[1-2],1.0,")


def test_asymptotic_missing_diagram_file(runner, tmp_path):
    """Test an unknown diagram name or path."""
    result = runner.invoke(
        main.cli, ["asymptotic", "--field", "rotation_torus", "--diagram", str(tmp_path / "d.txt")]
    )

    assert result.exit_code == 2
    assert "not found" in result.output


def test_converge_single_rule(runner, tmp_path):
    """Test the pair ladder of two seeds."""
    out = tmp_path / "pair.csv"

    result = runner.invoke(
        main.cli,
        ["converge", "--field", "rotation_torus", "--x", "2,0,0", "--y", "2.5,0,0.3", *FAST]
        + ["--out", str(out)],
    )

    assert result.exit_code == 0
    assert out.read_text().splitlines()[1].startswith("pair_lk,1.0,")


def test_converge_compare(runner, tmp_path):
    """Test comparing two short path rules writes gap rows."""
    out = tmp_path / "gaps.csv"

    result = runner.invoke(
        main.cli,
        ["converge", "--field", "rotation_torus", "--x", "2,0,0", "--y", "2.5,0,0.3"]
        + ["--compare", "dogleg", *FAST, "--out", str(out)],
    )

    assert result.exit_code == 0
    header = out.read_text().splitlines()[0]
    assert header == "T,crossing_rate_sp1,crossing_rate_sp2,gap,lk_gap,dt,seed"


def test_converge_bad_point(runner):
    """Test malformed seeds are input errors."""
    result = runner.invoke(
        main.cli, ["converge", "--field", "rotation_torus", "--x", "2,0", "--y", "2.5,0,0.3"]
    )

    assert result.exit_code == 2
    assert "Malformed point" in result.output


def test_converge_same_seed(runner):
    """Test coincident seeds are input errors."""
    result = runner.invoke(
        main.cli, ["converge", "--field", "rotation_torus", "--x", "2,0,0", "--y", "2,0,0", *FAST]
    )

    assert result.exit_code == 2
    assert "distinct" in result.output


def _fake_estimate(quantity: str) -> AsymptoticEstimate:
    ladder = ConvergenceReport(quantity, 2, (1.0, 2.0, 4.0), (1.0, 1.0, 1.0), (0.0, 0.0, 0.0))
    return AsymptoticEstimate(quantity, 1.0, 0.0, 4.0, 1, 1.0, (1.0,), ladder)


def test_bounds_failure_exits_one(runner, monkeypatch, tmp_path):
    """Test a failed inequality exits 1 after writing the report."""
    failing = BoundsReport(
        field_name="rotation_torus",
        volume=1.0,
        energy=IntegralEstimate(1.0),
        energy_32=IntegralEstimate(1.0),
        helicity=_fake_estimate("helicity"),
        quadratic_helicity=_fake_estimate("quadratic_helicity"),
        crossing_number=_fake_estimate("crossing_number"),
        inequalities=(Inequality("E32 >= K c^3/4", 0.0, 0.0, 1.0, 0.0),),
    )
    monkeypatch.setattr("asymptotic_invariants.asymptotics.bounds_report", lambda *_: failing)
    out = tmp_path / "bounds.json"

    result = runner.invoke(main.cli, ["bounds", "--field", "rotation_torus", "--out", str(out)])

    assert result.exit_code == 1
    assert "inequality check failed" in result.output
    report = json.loads(out.read_text())
    assert report["passed"] is False
    assert report["inequalities"][0]["holds"] is False
    assert report["volume_inequalities"] == []


def test_selftest_passes(runner, monkeypatch):
    """Test selftest reports success."""
    monkeypatch.setattr(
        "asymptotic_invariants.selftest.run_selftest", lambda *_: [Check("lk hopf", True, "1.0")]
    )

    result = runner.invoke(main.cli, ["selftest", "--budget", "small"])

    assert result.exit_code == 0
    assert "All 1 checks passed" in result.output


def test_selftest_failure_exits_one(runner, monkeypatch):
    """Test a failed check exits 1."""
    checks = [Check("lk hopf", True, "1.0"), Check("v2 trefoil", False, "0.5")]
    monkeypatch.setattr("asymptotic_invariants.selftest.run_selftest", lambda *_: checks)

    result = runner.invoke(main.cli, ["selftest"])

    assert result.exit_code == 1
    assert "1 of 2 checks failed" in result.output


def test_selftest_unknown_budget(runner):
    """Test budget levels are restricted."""
    result = runner.invoke(main.cli, ["selftest", "--budget", "huge"])

    assert result.exit_code == 2
