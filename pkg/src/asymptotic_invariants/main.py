"""Main CLI entry point for asymptotic invariants."""

import sys
from collections.abc import Iterator
from contextlib import contextmanager
from pathlib import Path
from typing import cast

import click
from rich.console import Console
from rich.table import Table

from asymptotic_invariants import (
    asymptotics,
    config,
    confint,
    curves,
    diagrams,
    fields,
    reports,
    selftest,
)
from asymptotic_invariants.asymptotics import EstimatorConfig, TLadder
from asymptotic_invariants.confint import IntegralEstimate, QuadratureConfig
from asymptotic_invariants.fields import DEFAULT_DT, VectorField

console = Console()

EXIT_CHECK_FAILED = 1
EXIT_INPUT_ERROR = 2

BUILTIN_DIAGRAMS = {
    "chord": diagrams.CHORD,
    "crossed": diagrams.CROSSED,
    "parallel": diagrams.PARALLEL,
    "tripod": diagrams.TRIPOD,
}


@contextmanager
def _errors() -> Iterator[None]:
    """Map library errors to messages and exit codes."""
    try:
        yield
    except FileNotFoundError as e:
        console.print(f"[red]Error:[/red] {e}")
        sys.exit(EXIT_INPUT_ERROR)
    except diagrams.DiagramError as e:
        console.print(f"[red]Error:[/red] invalid diagram: {e}")
        for problem in e.errors:
            console.print(f"  - {problem}")
        sys.exit(EXIT_INPUT_ERROR)
    except ValueError as e:
        console.print(f"[red]Error:[/red] {e}")
        sys.exit(EXIT_INPUT_ERROR)
    except RuntimeError as e:
        console.print(f"[red]Error:[/red] {e}")
        sys.exit(EXIT_CHECK_FAILED)


def _field_path(value: str) -> Path:
    """A config path, or the name of a shipped config such as ``tube_pair``."""
    path = Path(value)
    if not path.exists() and not path.suffix:
        shipped = config.get_field_config(value)
        if shipped.exists():
            return shipped
    return path


def _load_field(value: str) -> tuple[VectorField, fields.FieldConfig]:
    cfg = fields.load_field_config(_field_path(value))
    return fields.build_field(cfg), cfg


def _point(text: str) -> tuple[float, float, float]:
    try:
        parts = [float(p) for p in text.split(",")]
    except ValueError as e:
        msg = f"Malformed point {text!r}; expected x,y,z"
        raise ValueError(msg) from e
    if len(parts) != 3:
        msg = f"Malformed point {text!r}; expected x,y,z"
        raise ValueError(msg)
    return parts[0], parts[1], parts[2]


def _emit_json(body: dict[str, object], manifest: reports.RunManifest, out: Path | None) -> None:
    if out is None:
        click.echo(reports.render_json(body, manifest), nl=False)
        return
    reports.write_json(out, body, manifest)
    console.print(f"[green]✓[/green] Wrote {out}")


def _emit_csv(rows: list[reports.Row], manifest: reports.RunManifest, out: Path | None) -> None:
    if out is None:
        click.echo(reports.render_csv(rows), nl=False)
        return
    reports.write_csv(out, rows, manifest)
    console.print(f"[green]✓[/green] Wrote {out} and {reports.manifest_path(out).name}")


def _estimate_body(est: IntegralEstimate) -> dict[str, object]:
    return dict(est.to_dict())


ladder_options = [
    click.option("--T", "times", default="25,50,100,200", show_default=True, help="Time ladder"),
    click.option("--dt", type=float, default=DEFAULT_DT, show_default=True, help="RK4 step"),
    click.option("--seed", type=int, default=0, show_default=True, help="RNG seed"),
    click.option(
        "--points",
        "curve_points",
        type=int,
        default=512,
        show_default=True,
        help="Vertices per closed orbit",
    ),
    click.option("--out", type=click.Path(dir_okay=False, path_type=Path), help="Output file"),
]


def with_ladder_options[F](fn: F) -> F:
    for option in reversed(ladder_options):
        fn = option(fn)
    return fn


@click.group()
@click.version_option()
@click.option("-v", "--verbose", is_flag=True, help="Log at DEBUG level")
def cli(verbose: bool) -> None:
    """Asymptotic Invariants - Vassiliev integrals of knots and helicities of flows."""
    config.setup_logging(verbose)


@cli.command()
@click.option("--knot", "knot_file", required=True, type=click.Path(path_type=Path))
@click.option("--which", type=click.Choice(["lk", "writhe", "v2", "ID"]), required=True)
@click.option("--diagram", "diagram_file", type=click.Path(path_type=Path), help="For --which ID")
@click.option("--points", type=int, help="Resample each component to N points")
@click.option("--mc", type=int, default=100_000, show_default=True, help="Free-vertex samples")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), help="JSON report path")
def invariant(
    knot_file: Path,
    which: str,
    diagram_file: Path | None,
    points: int | None,
    mc: int,
    seed: int,
    out: Path | None,
) -> None:
    """Compute lk, writhe, v2 or a raw I_D of a polygonal knot or link."""
    with _errors():
        q = QuadratureConfig(circle_subdivision=points, free_vertex_samples=mc, rng_seed=seed)
        link = curves.read_knot(knot_file)
        effective: dict[str, object] = {
            "command": "invariant",
            "knot": str(knot_file),
            "which": which,
            "points": points,
            "mc": mc,
            "seed": seed,
            "diagram": str(diagram_file) if diagram_file is not None else None,
        }
        manifest = reports.RunManifest.start(effective, seed, config.get_thread_count())
        body: dict[str, object] = {"which": which, "knot": knot_file.name}

        if which == "lk":
            if len(link) < 2:
                msg = f"--which lk needs a link with 2 components, {knot_file} has {len(link)}"
                raise ValueError(msg)
            a, b = link.components[0], link.components[1]
            body |= _estimate_body(confint.linking_number(a, b, q))
            body["oracle"] = confint.crossing_projection_lk(a, b, seed)
            if len(link) > 2:
                body["matrix"] = confint.linking_matrix(link, q).tolist()
        else:
            if len(link) != 1:
                msg = f"--which {which} needs a knot, {knot_file} has {len(link)} components"
                raise ValueError(msg)
            knot = link.components[0]
            if which == "writhe":
                body |= _estimate_body(confint.writhe(knot, q))
            elif which == "v2":
                body |= _estimate_body(confint.v2(knot, q))
                body["oracle"] = confint.polyak_viro_v2(knot, seed)
            else:
                if diagram_file is None:
                    msg = "--which ID needs --diagram"
                    raise ValueError(msg)
                ds = diagrams.load_diagrams(diagram_file)
                results = [
                    {
                        "diagram": diagrams.format_diagram(d),
                        **confint.integral_I_D(knot, d, q).to_dict(),
                    }
                    for d in ds
                ]
                if len(results) == 1:
                    body |= results[0]
                else:
                    body["results"] = results

        body["config"] = effective
        _emit_json(body, manifest.finished(), out)


def _pair_command(
    quantity: str,
    field_value: str,
    pairs: int,
    times: str,
    dt: float,
    seed: int,
    curve_points: int,
    out: Path | None,
) -> None:
    with _errors():
        x, field_cfg = _load_field(field_value)
        ladder = TLadder.parse(times, dt)
        threads = config.get_thread_count()
        cfg = EstimatorConfig(
            n_pairs=pairs,
            dt=dt,
            curve_points=curve_points,
            seed=seed,
            threads=threads,
        )
        effective: dict[str, object] = {
            "command": quantity,
            "field": dict(field_cfg),
            "pairs": pairs,
            "times": list(ladder.times),
            "dt": dt,
            "curve_points": curve_points,
        }
        manifest = reports.RunManifest.start(effective, seed, threads)

        if quantity == "helicity":
            est = asymptotics.helicity(x, ladder, cfg)
        else:
            est = asymptotics.quadratic_helicity(x, ladder, cfg)
        rows = cast(list[reports.Row], asymptotics.convergence_table(est.ladder, dt, seed))
        _emit_csv(rows, manifest.finished(), out)
        if out is not None:
            console.print(f"{quantity} = {est.value:.6g} ± {est.std_error:.2g} at T={est.t_max:g}")


@cli.command()
@click.option("--field", "field_value", required=True, help="Field config file or shipped name")
@click.option("--pairs", type=int, default=200, show_default=True, help="Seed pairs")
@with_ladder_options
def helicity(
    field_value: str,
    pairs: int,
    times: str,
    dt: float,
    seed: int,
    curve_points: int,
    out: Path | None,
) -> None:
    """Helicity as the mean asymptotic linking number of orbit pairs (CSV ladder)."""
    _pair_command("helicity", field_value, pairs, times, dt, seed, curve_points, out)


@cli.command()
@click.option("--field", "field_value", required=True, help="Field config file or shipped name")
@click.option("--pairs", type=int, default=200, show_default=True, help="Seed pairs")
@with_ladder_options
def qhelicity(
    field_value: str,
    pairs: int,
    times: str,
    dt: float,
    seed: int,
    curve_points: int,
    out: Path | None,
) -> None:
    """Quadratic helicity as the mean squared asymptotic linking number (CSV ladder)."""
    _pair_command("quadratic_helicity", field_value, pairs, times, dt, seed, curve_points, out)


@cli.command()
@click.option("--field", "field_value", required=True, help="Field config file or shipped name")
@click.option(
    "--diagram",
    "diagram_value",
    default="crossed",
    show_default=True,
    help="Diagram file, or one of chord, crossed, parallel, tripod",
)
@click.option("--order", type=int, help="Scaling order; defaults to the number of circle vertices")
@click.option("--seeds", "n_seeds", type=int, default=50, show_default=True, help="Orbit seeds")
@click.option("--mc", type=int, default=100_000, show_default=True, help="Free-vertex samples")
@with_ladder_options
def asymptotic(
    field_value: str,
    diagram_value: str,
    order: int | None,
    n_seeds: int,
    mc: int,
    times: str,
    dt: float,
    seed: int,
    curve_points: int,
    out: Path | None,
) -> None:
    """Asymptotic I_D of a diagram along orbits of a field (CSV ladder)."""
    with _errors():
        if diagram_value in BUILTIN_DIAGRAMS:
            d = BUILTIN_DIAGRAMS[diagram_value]
        else:
            ds = diagrams.load_diagrams(Path(diagram_value))
            if len(ds) != 1:
                msg = f"{diagram_value}: expected exactly one diagram, found {len(ds)}"
                raise ValueError(msg)
            d = ds[0]

        x, field_cfg = _load_field(field_value)
        ladder = TLadder.parse(times, dt)
        threads = config.get_thread_count()
        cfg = EstimatorConfig(
            n_pairs=n_seeds,
            dt=dt,
            curve_points=curve_points,
            seed=seed,
            threads=threads,
            quadrature=QuadratureConfig(free_vertex_samples=mc, rng_seed=seed),
        )
        effective: dict[str, object] = {
            "command": "asymptotic",
            "field": dict(field_cfg),
            "diagram": diagrams.format_diagram(d),
            "order": order,
            "seeds": n_seeds,
            "mc": mc,
            "times": list(ladder.times),
            "dt": dt,
            "curve_points": curve_points,
        }
        manifest = reports.RunManifest.start(effective, seed, threads)
        est = asymptotics.asymptotic_I_D(x, d, ladder, cfg, order=order)
        rows = cast(list[reports.Row], asymptotics.convergence_table(est.ladder, dt, seed))
        _emit_csv(rows, manifest.finished(), out)
        if est.ladder.divergent:
            console.print(f"[yellow]Warning:[/yellow] ladder grows at order {est.ladder.order}")


@cli.command()
@click.option("--field", "field_value", required=True, help="Field config file or shipped name")
@click.option("--pairs", type=int, default=200, show_default=True, help="Seed pairs")
@click.option("--energy-samples", type=int, default=1_000_000, show_default=True)
@with_ladder_options
def bounds(
    field_value: str,
    pairs: int,
    energy_samples: int,
    times: str,
    dt: float,
    seed: int,
    curve_points: int,
    out: Path | None,
) -> None:
    """Energy bounds for helicity, quadratic helicity and crossing number (JSON).

    Exits 1 when an inequality fails beyond 3 sigma.
    """
    with _errors():
        x, field_cfg = _load_field(field_value)
        ladder = TLadder.parse(times, dt)
        threads = config.get_thread_count()
        cfg = EstimatorConfig(
            n_pairs=pairs,
            dt=dt,
            curve_points=curve_points,
            seed=seed,
            threads=threads,
            energy_samples=energy_samples,
        )
        effective: dict[str, object] = {
            "command": "bounds",
            "field": dict(field_cfg),
            "pairs": pairs,
            "energy_samples": energy_samples,
            "times": list(ladder.times),
            "dt": dt,
            "curve_points": curve_points,
        }
        manifest = reports.RunManifest.start(effective, seed, threads)
        report = asymptotics.bounds_report(x, ladder, cfg)

        def summary(est: asymptotics.AsymptoticEstimate) -> dict[str, float]:
            return {
                "value": est.value,
                "std_error": est.std_error,
                "normalized_value": est.normalized_value,
                "normalized_std_error": est.normalized_std_error,
            }

        body: dict[str, object] = {
            "field": report.field_name,
            "volume": report.volume,
            "energy": report.energy.to_dict(),
            "energy_32": report.energy_32.to_dict(),
            "helicity": summary(report.helicity),
            "quadratic_helicity": summary(report.quadratic_helicity),
            "crossing_number": summary(report.crossing_number),
            "inequalities": [i.to_dict() for i in report.inequalities],
            "volume_inequalities": [i.to_dict() for i in report.volume_inequalities],
            "arnold_ratio": report.arnold_ratio,
            "arnold_bound": report.arnold_bound,
            "passed": report.passed,
        }
        _emit_json(body, manifest.finished(), out)

        if not report.passed:
            checked = (*report.inequalities, *report.volume_inequalities)
            failed = ", ".join(i.name for i in checked if not i.holds)
            console.print(f"[red]Error:[/red] inequality check failed: {failed}")
            sys.exit(EXIT_CHECK_FAILED)


_RULES = click.Choice(["straight", "dogleg"])


@cli.command()
@click.option("--field", "field_value", required=True, help="Field config file or shipped name")
@click.option("--x", "x_text", required=True, help="First seed x,y,z")
@click.option("--y", "y_text", required=True, help="Second seed x,y,z")
@click.option("--sp", type=_RULES, default="straight", show_default=True)
@click.option("--compare", type=_RULES, help="Second short path rule")
@click.option("--waypoint", default="0,0.1,0.1", show_default=True, help="Dogleg waypoint x,y,z")
@with_ladder_options
def converge(
    field_value: str,
    x_text: str,
    y_text: str,
    sp: str,
    compare: str | None,
    waypoint: str,
    times: str,
    dt: float,
    seed: int,
    curve_points: int,
    out: Path | None,
) -> None:
    """Asymptotic linking ladder of one seed pair, optionally against a second short path rule."""
    with _errors():
        x, field_cfg = _load_field(field_value)
        ladder = TLadder.parse(times, dt)
        a, b = _point(x_text), _point(y_text)

        def rule(name: str) -> curves.ShortPathSystem:
            return curves.dogleg(_point(waypoint)) if name == "dogleg" else curves.STRAIGHT

        effective: dict[str, object] = {
            "command": "converge",
            "field": dict(field_cfg),
            "x": list(a),
            "y": list(b),
            "sp": sp,
            "compare": compare,
            "waypoint": waypoint,
            "times": list(ladder.times),
            "dt": dt,
            "curve_points": curve_points,
        }
        threads = config.get_thread_count()
        manifest = reports.RunManifest.start(effective, seed, threads)

        if compare is None:
            report = asymptotics.pairwise_asymptotic_lk(x, a, b, ladder, rule(sp), curve_points)
            rows = cast(list[reports.Row], asymptotics.convergence_table(report, dt, seed))
            _emit_csv(rows, manifest.finished(), out)
            return

        sens = asymptotics.short_path_sensitivity(
            x, a, b, ladder, rule(sp), rule(compare), curve_points, threads
        )
        gap_rows: list[reports.Row] = [
            {
                "T": t,
                "crossing_rate_sp1": first,
                "crossing_rate_sp2": second,
                "gap": gap,
                "lk_gap": lk_gap,
                "dt": dt,
                "seed": seed,
            }
            for t, first, second, gap, lk_gap in zip(
                sens.times, sens.first, sens.second, sens.gaps, sens.lk_gaps, strict=True
            )
        ]
        _emit_csv(gap_rows, manifest.finished(), out)
        if sens.identical:
            console.print("gap decay: identical closures")
        else:
            console.print(f"gap decay slope: {sens.slope}")


@cli.command(name="selftest")
@click.option(
    "--budget",
    type=click.Choice(["small", "medium", "full"]),
    default="small",
    show_default=True,
)
@click.option("--seed", type=int, default=0, show_default=True)
def selftest_cmd(budget: str, seed: int) -> None:
    """Run the acceptance checks at the budgets in data/budgets.yaml."""
    with _errors():
        budgets = reports.load_budgets(config.get_budgets_file())
        if budget not in budgets:
            msg = f"budget '{budget}' not defined in {config.get_budgets_file()}"
            raise ValueError(msg)
        threads = config.get_thread_count()
        results = selftest.run_selftest(budgets[budget], seed, threads)
        _print_checks(budget, results)

        failed = [c for c in results if not c.passed]
        if failed:
            console.print(f"[red]Error:[/red] {len(failed)} of {len(results)} checks failed")
            sys.exit(EXIT_CHECK_FAILED)
        console.print(f"[green]✓[/green] All {len(results)} checks passed")


def _print_checks(budget: str, results: list[selftest.Check]) -> None:
    table = Table(title=f"selftest ({budget})")
    table.add_column("check")
    table.add_column("result")
    table.add_column("detail")
    for check in results:
        mark = "[green]✓[/green]" if check.passed else "[red]✗[/red]"
        table.add_row(check.name, mark, check.detail)
    console.print(table)


if __name__ == "__main__":
    cli()
