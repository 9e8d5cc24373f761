"""Tests for the asymptotic estimators and energy bounds."""

import dataclasses
import math

import numpy as np
import pytest

from asymptotic_invariants import asymptotics, curves, diagrams, fields
from asymptotic_invariants.asymptotics import (
    ConvergenceReport,
    EstimatorConfig,
    Inequality,
    SensitivityReport,
    TLadder,
)

LADDER = TLadder((5.0, 10.0, 20.0), 0.01)
SMALL = EstimatorConfig(n_pairs=6, dt=0.01, curve_points=64, seed=3, energy_samples=20_000)

# Seeds on either tube, at distance 0.15 from the cores.
TUBE_SEEDS = ((1.0, 0.0, 0.15), (1.0, 0.15, 1.0))


def test_ladder_validation():
    """Test ladders need three positive increasing times."""
    with pytest.raises(ValueError, match="at least 3"):
        _ = TLadder((1.0, 2.0))
    with pytest.raises(ValueError, match="increasing"):
        _ = TLadder((1.0, 3.0, 2.0))
    with pytest.raises(ValueError, match="increasing"):
        _ = TLadder((0.0, 1.0, 2.0))
    with pytest.raises(ValueError, match="Step"):
        _ = TLadder((1.0, 2.0, 3.0), dt=0.0)


def test_ladder_parse():
    """Test comma-separated ladders."""
    ladder = TLadder.parse("25, 50,100,200", 0.001)
    assert ladder.times == (25.0, 50.0, 100.0, 200.0)
    assert ladder.t_max == 200.0
    with pytest.raises(ValueError, match="Malformed"):
        _ = TLadder.parse("25,fifty,100")


def test_estimator_config_validation():
    """Test estimator budgets must be positive."""
    with pytest.raises(ValueError):
        _ = EstimatorConfig(n_pairs=0)
    with pytest.raises(ValueError):
        _ = EstimatorConfig(curve_points=2)


def test_convergence_report_slope():
    """Test the decay slope of gaps shrinking like 1/T."""
    times = (10.0, 20.0, 40.0, 80.0)
    report = ConvergenceReport(
        quantity="q",
        order=2,
        times=times,
        estimates=(1.1, 1.05, 1.025, 1.0),
        std_errors=(0.0, 0.0, 0.0, 0.0),
    )
    assert report.value == 1.0
    assert report.decay_slope == pytest.approx(-1.0)
    assert not report.divergent


def test_convergence_report_divergent():
    """Test a ladder that keeps growing is flagged."""
    report = ConvergenceReport("q", 1, (1.0, 2.0, 4.0), (1.0, 3.0, 9.0), (0.1, 0.1, 0.1))
    assert report.divergent


def test_orbit_bank_records():
    """Test the orbit bank covers the ladder and rejects other times."""
    x = fields.RigidRotation()
    bank = asymptotics.integrate_orbits(x, [[2.0, 0.0, 0.0]], LADDER, curve_points=64)

    assert bank.records.shape[1] - 1 >= round(LADDER.t_max / bank.record_dt)
    assert bank.record_dt == pytest.approx(7 * LADDER.dt)
    with pytest.raises(ValueError, match="outside"):
        _ = bank.index(100.0)


def test_orbit_bank_closed_orbit():
    """Test a closed rigid-rotation orbit is a planar arc plus chord."""
    x = fields.RigidRotation()
    bank = asymptotics.integrate_orbits(x, [[2.0, 0.0, 0.0]], LADDER, curve_points=64)

    knot = bank.closed(0, 5.0, curves.STRAIGHT, 64)

    assert knot is not None
    assert knot.closed_curve.closed
    np.testing.assert_allclose(knot.closed_curve.points[:, 2], 0.0, atol=1e-12)
    assert knot.closure_length == pytest.approx(4.0 * math.sin(knot.T / 2), rel=1e-6)


def test_orbit_bank_closure_escapes():
    """Test a chord across the hole of the torus is detected."""
    x = fields.RigidRotation()
    bank = asymptotics.integrate_orbits(x, [[2.0, 0.0, 0.0]], LADDER, curve_points=64)

    inside = bank.closed(0, 5.0, curves.STRAIGHT, 64)
    across = bank.closed(0, 10.0, curves.STRAIGHT, 64)

    assert inside is not None and not bank.escapes(inside)
    assert across is not None and bank.escapes(across)


def test_pairwise_lk_tube_pair():
    """Test the linking rate of one orbit in each tube approaches 1 / (P1 P2)."""
    x = fields.TubePairField()
    ladder = TLadder((20.0, 40.0, 80.0), 0.01)
    report = asymptotics.pairwise_asymptotic_lk(x, *TUBE_SEEDS, ladder, curve_points=256)

    speed = float(x.profile(np.array([0.15]))[0])
    expected = (speed / (2 * math.pi)) ** 2
    assert report.value == pytest.approx(expected, rel=0.2)
    assert report.order == 2
    assert len(report.estimates) == 3


def test_pairwise_lk_errors():
    """Test coincident and outside seeds are rejected."""
    x = fields.TubePairField()
    with pytest.raises(ValueError, match="distinct"):
        _ = asymptotics.pairwise_asymptotic_lk(x, TUBE_SEEDS[0], TUBE_SEEDS[0], LADDER)
    with pytest.raises(fields.DomainError):
        _ = asymptotics.pairwise_asymptotic_lk(x, TUBE_SEEDS[0], (5.0, 5.0, 5.0), LADDER)


def test_helicity_rigid_rotation_vanishes():
    """Test orbits in parallel planes never link."""
    h = asymptotics.helicity(fields.RigidRotation(), LADDER, SMALL)

    assert abs(h.normalized_value) < 1e-10
    assert h.n == SMALL.n_pairs
    assert h.normalization == pytest.approx(fields.SolidTorus().volume ** 2)
    assert len(h.ladder.estimates) == len(LADDER.times)


def test_crossing_number_dominates_helicity():
    """Test c >= |H| and H2 >= 0 on the same seed pairs."""
    x = fields.TubePairField()
    cfg = EstimatorConfig(n_pairs=6, dt=0.01, curve_points=64, seed=1)

    h = asymptotics.helicity(x, LADDER, cfg)
    h2 = asymptotics.quadratic_helicity(x, LADDER, cfg)
    c = asymptotics.crossing_number(x, LADDER, cfg)

    assert c.value >= abs(h.value)
    assert all(v >= 0 for v in h2.per_seed)
    assert h2.value >= 0


def test_helicity_thread_independent():
    """Test pair estimates are identical for one and several workers."""
    x = fields.TubePairField()
    one = EstimatorConfig(n_pairs=4, dt=0.01, curve_points=64, seed=2, threads=1)
    many = EstimatorConfig(n_pairs=4, dt=0.01, curve_points=64, seed=2, threads=3)

    a = asymptotics.helicity(x, LADDER, one)
    b = asymptotics.helicity(x, LADDER, many)

    assert a.per_seed == b.per_seed
    assert a.ladder.estimates == b.ladder.estimates


def test_helicity_beltrami_ball_matches_energy():
    """Test H = E / lambda on the Beltrami ball."""
    x = fields.BeltramiBall()
    ladder = TLadder((10.0, 20.0, 40.0), 0.01)
    cfg = EstimatorConfig(n_pairs=60, dt=0.01, curve_points=256, seed=0)

    h = asymptotics.helicity(x, ladder, cfg)
    e = fields.energy(x, 2.0, 200_000, seed=0)

    target = e.value / x.eigenvalue
    assert h.value == pytest.approx(target, abs=max(0.1 * target, 3 * h.std_error))


def test_biot_savart_beltrami_ball_matches_energy():
    """Test the Biot-Savart helicity of the Beltrami ball against E / lambda."""
    x = fields.BeltramiBall()
    bs = asymptotics.biot_savart_helicity(x, 400_000, seed=0)
    e = fields.energy(x, 2.0, 200_000, seed=0)

    target = e.value / x.eigenvalue
    sigma = math.hypot(bs.std_error, e.std_error / x.eigenvalue)
    assert bs.value == pytest.approx(target, abs=max(0.02 * target, 3 * sigma))


def test_biot_savart_reproducible():
    """Test the Biot-Savart estimate repeats for a fixed seed."""
    x = fields.TubePairField()
    first = asymptotics.biot_savart_helicity(x, 20_000, seed=5)
    second = asymptotics.biot_savart_helicity(x, 20_000, seed=5)
    assert first == second
    assert first.samples == 20_000
    assert first.method == "monte-carlo"


def test_asymptotic_writhe_rigid_rotation():
    """Test planar closed orbits have zero asymptotic writhe."""
    # Orbit times below one period keep each closed orbit simple.
    ladder = TLadder((1.0, 2.0, 4.0), 0.01)
    est = asymptotics.asymptotic_I_D(
        fields.RigidRotation(), diagrams.CHORD, ladder, SMALL, n_seeds=4
    )
    assert abs(est.value) < 1e-8
    assert est.ladder.order == 2
    assert est.n == 4


def test_asymptotic_I_D_order():
    """Test the order must be positive."""
    with pytest.raises(ValueError, match="Order"):
        _ = asymptotics.asymptotic_I_D(
            fields.RigidRotation(), diagrams.CHORD, LADDER, SMALL, order=0
        )


def test_short_path_sensitivity_same_rule():
    """Test comparing a rule with itself gives zero gaps."""
    report = asymptotics.short_path_sensitivity(
        fields.TubePairField(),
        *TUBE_SEEDS,
        LADDER,
        curves.STRAIGHT,
        curves.STRAIGHT,
        curve_points=64,
    )
    assert report.gaps == (0.0, 0.0, 0.0)
    assert report.lk_gaps == (0.0, 0.0, 0.0)
    assert report.first == report.second
    assert report.slope is None
    assert report.identical
    assert report.decays


def test_sensitivity_report_decays():
    """Test decay needs a fitted slope at or below -0.8 unless the closures agree."""
    times = (25.0, 50.0, 100.0, 200.0)
    falling = SensitivityReport(times, (1.0,) * 4, (1.0,) * 4, tuple(1 / t for t in times))
    flat = SensitivityReport(times, (1.0,) * 4, (1.0,) * 4, (1e-3,) * 4)
    noisy = SensitivityReport(times, (1.0,) * 4, (1.0,) * 4, (1e-3, 1e-9, 1e-3, 1e-9))

    assert falling.slope == pytest.approx(-1.0)
    assert falling.decays
    assert flat.slope == pytest.approx(0.0, abs=1e-12)
    assert not flat.decays
    assert noisy.slope is None
    assert not noisy.identical
    assert not noisy.decays


def test_short_path_sensitivity_tube_pair_decays():
    """Test straight and dogleg closures of tube orbits differ by a gap falling like 1/T."""
    x = fields.TubePairField()
    ladder = TLadder((25.0, 50.0, 100.0, 200.0), 0.01)
    first, second = asymptotics.pair_seeds(x, 24, seed=0)

    report = asymptotics.short_path_sensitivity(
        x,
        first,
        second,
        ladder,
        curves.STRAIGHT,
        curves.dogleg((0.0, 0.1, 0.1)),
        curve_points=512,
    )

    assert not report.identical
    assert all(g > 0 for g in report.gaps)
    assert report.slope is not None
    assert report.slope <= -0.8
    assert report.decays


def test_invariance_under_rotation():
    """Test helicity of the rigid rotation is unchanged by rotating about its axis."""
    report = asymptotics.invariance_check(
        fields.RigidRotation(), fields.RotationDiffeo(), "helicity", LADDER, SMALL
    )
    assert report.passed
    assert report.quantity == "helicity"


def test_inequality():
    """Test the 3 sigma allowance."""
    assert Inequality("a", 1.0, 0.0, 2.0, 0.5).holds
    assert not Inequality("b", 1.0, 0.0, 2.0, 0.1).holds
    d = Inequality("c", 3.0, 0.3, 1.0, 0.4).to_dict()
    assert d["margin"] == 2.0
    assert d["holds"] is True


def test_bounds_report_tube_pair():
    """Test the inequality chain on the tube pair at a small budget."""
    cfg = EstimatorConfig(n_pairs=6, dt=0.01, curve_points=64, seed=0, energy_samples=50_000)
    report = asymptotics.bounds_report(fields.TubePairField(), LADDER, cfg)

    names = [i.name for i in report.inequalities]
    assert len(names) == 6
    assert "K c^3/4 >= K |H|^3/4" in names
    assert report.arnold_bound is None
    assert report.volume == pytest.approx(fields.TubePair().volume)
    holder = next(i for i in report.inequalities if i.name.startswith("vol^1/4"))
    assert holder.holds

    volume = {i.name: i for i in report.volume_inequalities}
    assert set(volume) == {"E32 >= K c^3/4 (volume)", "K c^3/4 >= K |H|^3/4 (volume)"}
    assert volume["E32 >= K c^3/4 (volume)"].lhs == report.energy_32.value


def test_bounds_report_ball_has_arnold_bound():
    """Test the Beltrami ball reports the first curl eigenvalue."""
    cfg = EstimatorConfig(n_pairs=4, dt=0.01, curve_points=64, seed=0, energy_samples=20_000)
    report = asymptotics.bounds_report(fields.BeltramiBall(), LADDER, cfg)
    assert report.arnold_bound == pytest.approx(fields.beltrami_eigenvalue())


def test_bounds_report_volume_measure_counts():
    """Test a chain failing only under the volume measure fails the report."""
    report = asymptotics.bounds_report(fields.RigidRotation(), LADDER, SMALL)
    broken = Inequality("E32 >= K c^3/4 (volume)", 0.0, 0.0, 1.0, 0.0)

    failing = dataclasses.replace(report, volume_inequalities=(broken,))

    assert all(i.holds for i in report.volume_inequalities)
    assert failing.inequalities == report.inequalities
    assert not failing.passed


def test_convergence_table():
    """Test CSV rows carry raw and normalized columns."""
    report = ConvergenceReport(
        "helicity", 2, (1.0, 2.0, 4.0), (4.0, 2.0, 1.0), (0.4, 0.2, 0.1), normalization=2.0
    )
    rows = asymptotics.convergence_table(report, dt=0.01, seed=7)
    assert len(rows) == 3
    assert rows[0]["quantity"] == "helicity"
    assert rows[0]["normalized_estimate"] == 2.0
    assert rows[2]["normalized_std_error"] == 0.05
    assert rows[1]["seed"] == 7
