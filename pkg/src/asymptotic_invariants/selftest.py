"""Acceptance checks run by ``asyminv selftest`` at reduced budgets."""

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass
from typing import Literal

from asymptotic_invariants import asymptotics, confint, curves, diagrams, fields
from asymptotic_invariants.asymptotics import EstimatorConfig, TLadder
from asymptotic_invariants.confint import QuadratureConfig
from asymptotic_invariants.reports import SelftestBudget

logger = logging.getLogger(__name__)

# A seed off the first tube core and a waypoint for the dogleg rule.
TUBE_SEED = (1.0, 0.0, 0.15)
DOGLEG_WAYPOINT = (0.0, 0.1, 0.1)


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str


def _close(value: float, target: float, tol: float, se: float = 0.0) -> bool:
    return abs(value - target) <= max(tol, 3 * se)


def _ladder(b: SelftestBudget) -> TLadder:
    return TLadder(tuple(b["times"]), b["dt"])


def _estimator(b: SelftestBudget, seed: int, threads: int | None) -> EstimatorConfig:
    return EstimatorConfig(
        n_pairs=b["n_pairs"],
        dt=b["dt"],
        curve_points=b["curve_points"],
        seed=seed,
        threads=threads,
        energy_samples=b["energy_samples"],
    )


def check_linking(b: SelftestBudget, seed: int, threads: int | None) -> list[Check]:
    m = b["curve_points"]
    out: list[Check] = []
    for name, link, target, tol in (
        ("lk hopf", curves.hopf_link(m), 1.0, 1e-2),
        ("lk torus(2,4)", curves.torus_link(m, 2), 2.0, 2e-2),
        ("lk split", curves.split_link(m), 0.0, 1e-3),
    ):
        a, c = link.components
        lk = confint.linking_number(a, c).value
        oracle = confint.crossing_projection_lk(a, c, seed)
        ok = _close(lk, target, tol) and oracle == round(target)
        out.append(Check(name, ok, f"{lk:.6f} (crossings {oracle})"))
    return out


def check_writhe(b: SelftestBudget, seed: int, threads: int | None) -> list[Check]:
    w = confint.writhe(curves.circle(b["curve_points"])).value
    coarse = confint.writhe(curves.trefoil(b["curve_points"])).value
    fine = confint.writhe(curves.trefoil(4 * b["curve_points"])).value
    return [
        Check("writhe circle", abs(w) < 1e-3, f"{w:.2e}"),
        Check(
            "writhe trefoil",
            abs(coarse - fine) <= 5e-3 * abs(fine),
            f"{coarse:.5f} vs {fine:.5f}",
        ),
    ]


def check_v2(b: SelftestBudget, seed: int, threads: int | None) -> list[Check]:
    q = QuadratureConfig(free_vertex_samples=b["mc_samples"], rng_seed=seed)
    m = b["curve_points"]
    out: list[Check] = []
    for name, knot in (
        ("v2 unknot", curves.circle(m)),
        ("v2 trefoil", curves.trefoil(m)),
        ("v2 figure-eight", curves.figure_eight(m)),
        ("v2 granny", curves.granny_knot(m)),
    ):
        est = confint.v2(knot, q)
        oracle = confint.polyak_viro_v2(knot, seed)
        ok = _close(est.value, oracle, 0.1, est.std_error)
        detail = f"{est.value:.4f} +/- {est.std_error:.2g} (Polyak-Viro {oracle})"
        out.append(Check(name, ok, detail))
    return out


def check_energy(b: SelftestBudget, seed: int, threads: int | None) -> list[Check]:
    est = fields.energy(fields.RigidRotation(), 2.0, b["energy_samples"], seed)
    target = fields.rotation_torus_energy()
    ok = _close(est.value, target, 0.01 * target, est.std_error)
    return [Check("energy rotation torus", ok, f"{est.value:.4f} vs {target:.4f}")]


def check_helicity(b: SelftestBudget, seed: int, threads: int | None) -> list[Check]:
    ladder = _ladder(b)
    cfg = _estimator(b, seed, threads)
    out: list[Check] = []

    rot = fields.RigidRotation()
    h_rot = asymptotics.helicity(rot, ladder, cfg)
    vol2 = rot.domain.volume ** 2
    ok = abs(h_rot.value) <= 5e-3 * vol2
    out.append(Check("helicity rotation torus", ok, f"{h_rot.value:.3e}"))

    tubes = fields.TubePairField()
    target = fields.tube_pair_helicity()
    h = asymptotics.helicity(tubes, ladder, cfg)
    out.append(
        Check(
            "helicity tube pair",
            _close(h.value, target, 0.1 * target, h.std_error),
            f"{h.value:.5f} +/- {h.std_error:.2g} vs {target:.5f}",
        )
    )

    # Curl X = lambda X makes X / lambda a vector potential, so H = E / lambda.
    ball = fields.BeltramiBall()
    lam = ball.eigenvalue
    e = fields.energy(ball, 2.0, b["energy_samples"], seed)
    h_ball = asymptotics.helicity(ball, ladder, cfg)
    b_target = e.value / lam
    sigma = math.hypot(h_ball.std_error, e.std_error / lam)
    out.append(
        Check(
            "helicity beltrami ball",
            _close(h_ball.value, b_target, 0.1 * b_target, sigma),
            f"{h_ball.value:.5f} +/- {h_ball.std_error:.2g} vs E/lambda {b_target:.5f}",
        )
    )

    for x, asymptotic in ((rot, h_rot), (tubes, h), (ball, h_ball)):
        bs = asymptotics.biot_savart_helicity(x, b["biot_savart_pairs"], seed)
        sigma = math.hypot(asymptotic.std_error, bs.std_error)
        out.append(
            Check(
                f"helicity vs Biot-Savart {x.name}",
                abs(asymptotic.value - bs.value) <= 2 * sigma,
                f"{asymptotic.value:.5f} vs {bs.value:.5f} (2 sigma {2 * sigma:.2g})",
            )
        )

    h2 = asymptotics.quadratic_helicity(tubes, ladder, cfg)
    q_target = fields.tube_pair_quadratic_helicity()
    out.append(
        Check(
            "quadratic helicity tube pair",
            _close(h2.value, q_target, 0.1 * q_target, h2.std_error),
            f"{h2.value:.5f} vs {q_target:.5f}",
        )
    )
    cs_gap = h2.normalized_value - h.normalized_value**2
    ok = cs_gap >= -3 * h2.normalized_std_error
    out.append(Check("Cauchy-Schwarz H2 >= H^2", ok, f"gap {cs_gap:.3e}"))
    return out


def check_bounds(b: SelftestBudget, seed: int, threads: int | None) -> list[Check]:
    ladder = _ladder(b)
    cfg = _estimator(b, seed, threads)
    out: list[Check] = []
    for x in (fields.RigidRotation(), fields.TubePairField(), fields.BeltramiBall()):
        report = asymptotics.bounds_report(x, ladder, cfg)
        checked = (*report.inequalities, *report.volume_inequalities)
        failed = [i.name for i in checked if not i.holds]
        detail = "; ".join(failed) if failed else "ok"
        out.append(Check(f"bounds {x.name}", report.passed, detail))
    return out


def check_short_paths(b: SelftestBudget, seed: int, threads: int | None) -> list[Check]:
    ladder = _ladder(b)
    tubes = fields.TubePairField()
    first, second = asymptotics.pair_seeds(tubes, b["n_pairs"], seed)
    report = asymptotics.short_path_sensitivity(
        tubes,
        first,
        second,
        ladder,
        curves.STRAIGHT,
        curves.dogleg(DOGLEG_WAYPOINT),
        curve_points=b["curve_points"],
        threads=threads,
    )
    gaps = ", ".join(f"{g:.2e}" for g in report.gaps)
    trend = "identical closures" if report.identical else f"slope {report.slope}"
    return [Check("short path decay", report.decays, f"{trend} (gaps {gaps})")]


def check_invariance(b: SelftestBudget, seed: int, threads: int | None) -> list[Check]:
    ladder = _ladder(b)
    cfg = _estimator(b, seed, threads)
    shear = fields.ShearDiffeo(amplitude=0.2)
    out: list[Check] = []
    quantities: tuple[Literal["helicity", "quadratic_helicity"], ...] = (
        "helicity",
        "quadratic_helicity",
    )
    for quantity in quantities:
        r = asymptotics.invariance_check(fields.TubePairField(), shear, quantity, ladder, cfg)
        detail = f"diff {r.difference:.3e}, sigma {r.combined_std_error:.2e}"
        out.append(Check(f"shear invariance {quantity}", r.passed, detail))
    return out


def check_structure(b: SelftestBudget, seed: int, threads: int | None) -> list[Check]:
    worst = 0.0
    for n in range(1, diagrams.MAX_ENUMERATE_DEGREE + 1):
        for w in diagrams.weight_system_basis(n):
            for d, _, t_minus_u in diagrams.stu_triples(n):
                s = diagrams.DiagramSum.of(d)
                worst = max(worst, abs(diagrams.eval_weight(w, s - t_minus_u)))

    vp = fields.volume_preservation_check(fields.TubePairField(), TUBE_SEED, 10.0, b["dt"])

    ladder = _ladder(b)
    cfg = _estimator(b, seed, 1)
    one = asymptotics.helicity(fields.TubePairField(), ladder, cfg)
    many = asymptotics.helicity(fields.TubePairField(), ladder, _estimator(b, seed, 4))
    same = one.ladder.estimates == many.ladder.estimates and one.per_seed == many.per_seed
    return [
        Check("STU well-defined", worst < 1e-9, f"max |w(S - T + U)| {worst:.1e}"),
        Check("volume preservation", vp < 1e-5, f"|det J - 1| {vp:.1e}"),
        Check("determinism across threads", same, "identical" if same else "differs"),
    ]


CHECKS: tuple[Callable[[SelftestBudget, int, int | None], list[Check]], ...] = (
    check_structure,
    check_linking,
    check_writhe,
    check_v2,
    check_energy,
    check_helicity,
    check_bounds,
    check_short_paths,
    check_invariance,
)


def run_selftest(budget: SelftestBudget, seed: int = 0, threads: int | None = None) -> list[Check]:
    """Run every acceptance check; a check that raises is recorded as failed."""
    results: list[Check] = []
    for check in CHECKS:
        name = check.__name__.removeprefix("check_")
        try:
            results.extend(check(budget, seed, threads))
        except (ValueError, RuntimeError) as e:
            logger.exception("selftest %s raised", name)
            results.append(Check(name, False, f"{type(e).__name__}: {e}"))
    return results
