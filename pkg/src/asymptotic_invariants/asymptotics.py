"""Time-averaged invariants of flows: helicity, quadratic helicity, crossing number.

Every quantity is measured on a ladder of orbit times. Orbits are integrated
once up to the largest time, closed with a short path system at each rung, and
the knot or link invariant of the closed orbits is divided by T to the
quantity's order. Pair quantities integrate over S x S, so the reported value
is vol(S)^2 times the mean over uniformly drawn seed pairs; single-seed
quantities use vol(S).
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

from asymptotic_invariants import confint, curves, fields, sampling
from asymptotic_invariants.confint import DEFAULT_QUADRATURE, IntegralEstimate, QuadratureConfig
from asymptotic_invariants.curves import STRAIGHT, CurveError, OrbitKnot, ShortPathSystem
from asymptotic_invariants.diagrams import TrivalentDiagram
from asymptotic_invariants.fields import DEFAULT_DT, Ball, VectorField, VolumeDiffeo

logger = logging.getLogger(__name__)

ENERGY_CONSTANT = (16 / math.pi) ** 0.25
SLOPE_RESIDUAL_MAX = 0.5
DECAY_SLOPE_MAX = -0.8
GAP_FLOOR = 1e-12

Seeds = NDArray[np.float64]


@dataclass(frozen=True)
class TLadder:
    """Increasing orbit times at which a quantity is measured."""

    times: tuple[float, ...]
    dt: float = DEFAULT_DT

    def __post_init__(self) -> None:
        if len(self.times) < 3:
            msg = f"A ladder needs at least 3 times, got {len(self.times)}"
            raise ValueError(msg)
        steps = zip(self.times, self.times[1:], strict=False)
        if self.times[0] <= 0 or any(b <= a for a, b in steps):
            msg = f"Ladder times must be positive and increasing: {self.times}"
            raise ValueError(msg)
        if self.dt <= 0:
            msg = f"Step must be positive, got {self.dt}"
            raise ValueError(msg)

    @property
    def t_max(self) -> float:
        return self.times[-1]

    @classmethod
    def parse(cls, text: str, dt: float = DEFAULT_DT) -> "TLadder":
        """Ladder from a comma-separated list such as ``25,50,100,200``."""
        try:
            times = tuple(float(t) for t in text.split(",") if t.strip())
        except ValueError as e:
            msg = f"Malformed time ladder {text!r}"
            raise ValueError(msg) from e
        return cls(times, dt)


@dataclass(frozen=True)
class EstimatorConfig:
    """Budgets shared by the asymptotic estimators."""

    n_pairs: int = 200
    dt: float = DEFAULT_DT
    curve_points: int = 512
    seed: int = 0
    short_path: ShortPathSystem = STRAIGHT
    threads: int | None = None
    energy_samples: int = 1_000_000
    quadrature: QuadratureConfig = DEFAULT_QUADRATURE

    def __post_init__(self) -> None:
        if self.n_pairs < 1 or self.curve_points < 3:
            msg = "n_pairs must be positive and curve_points at least 3"
            raise ValueError(msg)


DEFAULT_ESTIMATOR = EstimatorConfig()


def _fit_slope(points: list[tuple[float, float]]) -> float | None:
    if len(points) < 2:
        return None
    x = np.array([p[0] for p in points])
    y = np.array([p[1] for p in points])
    slope, intercept = np.polyfit(x, y, 1)
    if len(points) > 2:
        residual = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
        if residual > SLOPE_RESIDUAL_MAX:
            return None
    return float(slope)


@dataclass(frozen=True)
class ConvergenceReport:
    """Per-rung estimates of one quantity along a time ladder."""

    quantity: str
    order: int
    times: tuple[float, ...]
    estimates: tuple[float, ...]
    std_errors: tuple[float, ...]
    normalization: float = 1.0
    flagged: tuple[bool, ...] = ()
    samples: int = 0

    @property
    def value(self) -> float:
        """Largest-time estimate; no extrapolation is attempted."""
        return self.estimates[-1]

    @property
    def std_error(self) -> float:
        return self.std_errors[-1]

    @property
    def decay_slope(self) -> float | None:
        """log-log slope of |estimate(T) - estimate(T_max)|, when the fit is clean."""
        gaps = [abs(e - self.value) for e in self.estimates[:-1]]
        pts = [(math.log(t), math.log(g)) for t, g in zip(self.times, gaps, strict=False) if g > 0]
        return _fit_slope(pts)

    @property
    def divergent(self) -> bool:
        """True when magnitudes keep growing along the ladder."""
        mags = [abs(e) for e in self.estimates]
        growing = all(b > a for a, b in zip(mags, mags[1:], strict=False))
        return growing and mags[-1] > 2 * mags[0] + 2 * self.std_errors[-1]


@dataclass(frozen=True)
class AsymptoticEstimate:
    """Largest-rung estimate with its ladder and per-seed values."""

    quantity: str
    value: float
    std_error: float
    t_max: float
    n: int
    normalization: float
    per_seed: tuple[float, ...]
    ladder: ConvergenceReport

    @property
    def normalized_value(self) -> float:
        """Value under the probability measure on S (or S x S)."""
        return self.value / self.normalization

    @property
    def normalized_std_error(self) -> float:
        return self.std_error / self.normalization


@dataclass(frozen=True, eq=False)
class OrbitBank:
    """Orbits of many seeds recorded at a fixed time spacing."""

    field_name: str
    seeds: Seeds
    records: NDArray[np.float64]
    record_dt: float
    dt: float
    domain: fields.Domain | None = None

    def index(self, T: float) -> int:
        n = round(T / self.record_dt)
        if not 1 <= n < self.records.shape[1]:
            msg = f"Time {T} is outside the integrated range"
            raise ValueError(msg)
        return n

    def closed(
        self,
        i: int,
        T: float,
        sp: ShortPathSystem,
        curve_points: int,
        back: int = 0,
    ) -> OrbitKnot | None:
        """Closed orbit of seed i at time T with about ``curve_points`` vertices.

        ``back`` moves the end of the orbit that many records earlier. Returns
        None for orbits that do not move (stagnation points).
        """
        n = self.index(T) - back
        step = max(1, math.ceil(n / curve_points))
        idx = np.arange(0, n + 1, step)
        if idx[-1] != n:
            idx = np.append(idx, n)
        try:
            orbit = curves.PolyCurve.from_points(self.records[i, idx], closed=False, tol=1e-12)
            return curves.close_orbit(orbit, sp, T=n * self.record_dt, dt=self.dt)
        except CurveError:
            return None

    def escapes(self, knot: OrbitKnot) -> bool:
        """True when the closure arc of ``knot`` leaves the domain."""
        if self.domain is None:
            return False
        return not bool(np.all(self.domain.contains(knot.closure)))


def integrate_orbits(
    x: VectorField,
    seeds: ArrayLike,
    ladder: TLadder,
    curve_points: int,
) -> OrbitBank:
    """Integrate all seeds once up to the ladder's largest time.

    Records are spaced so that the shortest rung has about ``curve_points`` of them.
    """
    pts = np.atleast_2d(np.asarray(seeds, dtype=np.float64))
    stride = max(1, math.floor(ladder.times[0] / ladder.dt / curve_points))
    record_dt = stride * ladder.dt
    t_end = record_dt * math.ceil(ladder.t_max / record_dt - 1e-9)
    records = fields.flow(x, pts, t_end, ladder.dt, stride)
    logger.debug("%s: orbit bank of %d seeds x %d records", x.name, len(pts), records.shape[1])
    return OrbitBank(x.name, pts, records, record_dt, ladder.dt, x.domain)


def pair_seeds(x: VectorField, n_pairs: int, seed: int) -> tuple[Seeds, Seeds]:
    """Independent uniform seed pairs, deterministic in ``seed``."""
    both = fields.seed_sampler(x.domain, 2 * n_pairs, seed)
    return both[:n_pairs], both[n_pairs:]


@dataclass(frozen=True)
class _PairResult:
    lk: float
    crossing: float
    flagged: bool
    escaped: bool = False


def _pair_at(
    bank: OrbitBank,
    i: int,
    j: int,
    T: float,
    sp: ShortPathSystem,
    curve_points: int,
) -> _PairResult:
    for back in (0, 1):
        a = bank.closed(i, T, sp, curve_points, back)
        b = bank.closed(j, T, sp, curve_points, back)
        if a is None or b is None:
            return _PairResult(0.0, 0.0, back > 0)
        try:
            lk, crossing = confint.gauss_pair_sums(a.closed_curve, b.closed_curve)
        except CurveError:
            logger.warning("closed orbits %d and %d touch at T=%g; moving T back", i, j, T)
            continue
        return _PairResult(lk, crossing, back > 0, bank.escapes(a) or bank.escapes(b))
    return _PairResult(0.0, 0.0, True)


@dataclass(frozen=True)
class PairLadder:
    """lk / T^2 and |Gauss| / T^2 for every seed pair at every rung."""

    times: tuple[float, ...]
    lk_rate: NDArray[np.float64]
    crossing_rate: NDArray[np.float64]
    flagged: NDArray[np.bool_]
    volume: float


def pair_ladder(
    x: VectorField,
    ladder: TLadder,
    cfg: EstimatorConfig,
    seeds: tuple[Seeds, Seeds] | None = None,
) -> PairLadder:
    """Linking and crossing rates of seed pairs along the ladder.

    Args:
        x: Vector field
        ladder: Orbit times
        cfg: Budgets; ``n_pairs`` uniform pairs are drawn unless ``seeds`` is given
        seeds: Explicit (first, second) seed arrays of equal length
    """
    first, second = seeds if seeds is not None else pair_seeds(x, cfg.n_pairs, cfg.seed)
    first = np.atleast_2d(first)
    second = np.atleast_2d(second)
    n = len(first)
    bank = integrate_orbits(x, np.vstack([first, second]), ladder, cfg.curve_points)

    tasks = [(rung, p) for rung in range(len(ladder.times)) for p in range(n)]

    def run(task: tuple[int, int]) -> _PairResult:
        rung, p = task
        return _pair_at(bank, p, n + p, ladder.times[rung], cfg.short_path, cfg.curve_points)

    results = sampling.map_ordered(run, tasks, cfg.threads)
    shape = (len(ladder.times), n)
    t2 = np.array(ladder.times)[:, None] ** 2
    lk = np.array([r.lk for r in results]).reshape(shape) / t2
    crossing = np.array([r.crossing for r in results]).reshape(shape) / t2
    flagged = np.array([r.flagged for r in results]).reshape(shape)
    if flagged.any():
        logger.warning("%d pair evaluations needed a T jitter", int(flagged.sum()))
    escaped = sum(r.escaped for r in results)
    if escaped:
        logger.warning("%d pair closures left the domain of %s", escaped, x.name)
    return PairLadder(ladder.times, lk, crossing, flagged, x.domain.volume)


def _estimate(
    quantity: str,
    values: NDArray[np.float64],
    times: tuple[float, ...],
    scale: float,
    order: int,
    flagged: NDArray[np.bool_] | None = None,
) -> AsymptoticEstimate:
    """Scaled means over seeds (columns) at each rung (rows)."""
    n = values.shape[1]
    means = scale * values.mean(axis=1)
    if n > 1:
        errors = scale * values.std(axis=1, ddof=1) / math.sqrt(n)
    else:
        errors = np.zeros(len(times))
    rung_flags = flagged.any(axis=1) if flagged is not None else np.zeros(len(times), dtype=bool)

    report = ConvergenceReport(
        quantity=quantity,
        order=order,
        times=times,
        estimates=tuple(float(v) for v in means),
        std_errors=tuple(float(e) for e in errors),
        normalization=scale,
        flagged=tuple(bool(f) for f in rung_flags),
        samples=n,
    )
    if report.divergent:
        logger.warning("%s ladder looks divergent at order %d", quantity, order)
    logger.info(
        "%s = %.6g +/- %.2g at T=%g (%d seeds)",
        quantity,
        report.value,
        report.std_error,
        times[-1],
        n,
    )
    return AsymptoticEstimate(
        quantity=quantity,
        value=report.value,
        std_error=report.std_error,
        t_max=times[-1],
        n=n,
        normalization=scale,
        per_seed=tuple(float(v) for v in values[-1]),
        ladder=report,
    )


def pairwise_asymptotic_lk(
    x: VectorField,
    a: ArrayLike,
    b: ArrayLike,
    ladder: TLadder,
    sp: ShortPathSystem = STRAIGHT,
    curve_points: int = 512,
) -> ConvergenceReport:
    """lk of the two closed orbits through a and b, divided by T^2, at each rung.

    Raises:
        ValueError: If a and b coincide
        DomainError: If a seed is outside the domain
    """
    pa = np.asarray(a, dtype=np.float64).reshape(1, 3)
    pb = np.asarray(b, dtype=np.float64).reshape(1, 3)
    if np.allclose(pa, pb):
        msg = "pairwise_asymptotic_lk needs two distinct seeds"
        raise ValueError(msg)
    if not (x.domain.contains(pa)[0] and x.domain.contains(pb)[0]):
        msg = "Seeds must lie inside the domain"
        raise fields.DomainError(msg)

    cfg = EstimatorConfig(n_pairs=1, dt=ladder.dt, curve_points=curve_points, short_path=sp)
    pairs = pair_ladder(x, ladder, replace(cfg, threads=1), seeds=(pa, pb))
    rates = pairs.lk_rate[:, 0]
    return ConvergenceReport(
        quantity="pair_lk",
        order=2,
        times=ladder.times,
        estimates=tuple(float(v) for v in rates),
        std_errors=tuple(0.0 for _ in rates),
        flagged=tuple(bool(f) for f in pairs.flagged[:, 0]),
        samples=1,
    )


def helicity(
    x: VectorField,
    ladder: TLadder,
    cfg: EstimatorConfig = DEFAULT_ESTIMATOR,
) -> AsymptoticEstimate:
    """Helicity as vol^2 times the mean asymptotic linking rate of seed pairs."""
    p = pair_ladder(x, ladder, cfg)
    return _estimate("helicity", p.lk_rate, ladder.times, p.volume**2, 2, p.flagged)


def quadratic_helicity(
    x: VectorField,
    ladder: TLadder,
    cfg: EstimatorConfig = DEFAULT_ESTIMATOR,
) -> AsymptoticEstimate:
    """Quadratic helicity as vol^2 times the mean squared linking rate; never negative."""
    p = pair_ladder(x, ladder, cfg)
    return _estimate("quadratic_helicity", p.lk_rate**2, ladder.times, p.volume**2, 4, p.flagged)


def crossing_number(
    x: VectorField,
    ladder: TLadder,
    cfg: EstimatorConfig = DEFAULT_ESTIMATOR,
) -> AsymptoticEstimate:
    """Asymptotic crossing number: vol^2 times the mean absolute Gauss integral rate."""
    p = pair_ladder(x, ladder, cfg)
    return _estimate("crossing_number", p.crossing_rate, ladder.times, p.volume**2, 2, p.flagged)


def biot_savart_helicity(
    x: VectorField,
    mc_pairs: int = 1_000_000,
    seed: int = 0,
    cutoff: float = confint.EPS_DIAG_REL,
) -> IntegralEstimate:
    """Monte Carlo of (1/4 pi) double integral of (p - q) . (X(p) x X(q)) / |p - q|^3.

    Pairs closer than ``cutoff`` times the domain diameter are rejected.
    """
    domain = x.domain
    scale = domain.volume**2
    limit = cutoff * domain.diameter

    def block(rng: np.random.Generator, size: int) -> sampling.BlockResult:
        p, _ = domain.sample_uniform(rng, size)
        q, _ = domain.sample_uniform(rng, size)
        sep = p - q
        dist = np.linalg.norm(sep, axis=1)
        rejected = dist < limit
        with np.errstate(divide="ignore", invalid="ignore"):
            kernel = np.einsum("ni,ni->n", sep, np.cross(x(p), x(q))) / (4 * math.pi * dist**3)
        values = np.where(rejected, 0.0, scale * kernel)
        return sampling.summarize(values, int(rejected.sum()))

    r = sampling.run_blocks(block, mc_pairs, seed, "biot_savart")
    logger.info("Biot-Savart helicity of %s: %.6g +/- %.2g", x.name, r.mean, r.std_error)
    return IntegralEstimate(r.mean, r.std_error, r.samples, "monte-carlo", r.rejections)


def asymptotic_I_D(
    x: VectorField,
    d: TrivalentDiagram,
    ladder: TLadder,
    cfg: EstimatorConfig = DEFAULT_ESTIMATOR,
    order: int | None = None,
    n_seeds: int | None = None,
) -> AsymptoticEstimate:
    """vol times the mean over seeds of I_D(closed orbit) / T^order at each rung.

    ``order`` defaults to the diagram's number of circle vertices. Lower
    orders are allowed; a ladder that keeps growing is logged as divergent.
    """
    k = d.k if order is None else order
    if k < 1:
        msg = f"Order must be positive, got {k}"
        raise ValueError(msg)

    count = n_seeds or cfg.n_pairs
    seeds = fields.seed_sampler(x.domain, count, cfg.seed)
    bank = integrate_orbits(x, seeds, ladder, cfg.curve_points)

    tasks = [(rung, i) for rung in range(len(ladder.times)) for i in range(count)]

    def run(task: tuple[int, int]) -> tuple[float, bool]:
        rung, i = task
        T = ladder.times[rung]
        knot = bank.closed(i, T, cfg.short_path, cfg.curve_points)
        if knot is None:
            return 0.0, False
        value = confint.integral_I_D(knot.closed_curve, d, cfg.quadrature).value / T**k
        return value, bank.escapes(knot)

    results = sampling.map_ordered(run, tasks, cfg.threads)
    escaped = sum(e for _, e in results)
    if escaped:
        logger.warning("%d closures left the domain of %s", escaped, x.name)
    values = np.array([v for v, _ in results])
    values = values.reshape(len(ladder.times), count)
    label = " ".join(f"{i}-{j}" for i, j in d.edges)
    return _estimate(f"I_D[{label}]", values, ladder.times, x.domain.volume, k)


@dataclass(frozen=True)
class SensitivityReport:
    """Gap between two short path systems along a ladder.

    ``gaps`` compare crossing rates, which move with the closure arc; ``lk_gaps``
    compare linking rates, which only move when a closure changes the link type.
    """

    times: tuple[float, ...]
    first: tuple[float, ...]
    second: tuple[float, ...]
    gaps: tuple[float, ...]
    lk_gaps: tuple[float, ...] = ()

    @property
    def identical(self) -> bool:
        """Both rules produced the same closed orbits at every rung."""
        return all(g == 0.0 for g in self.gaps)

    @property
    def slope(self) -> float | None:
        pairs = zip(self.times, self.gaps, strict=True)
        return _fit_slope([(math.log(t), math.log(g)) for t, g in pairs if g > 0])

    @property
    def decays(self) -> bool:
        if self.identical:
            return True
        slope = self.slope
        return slope is not None and slope <= DECAY_SLOPE_MAX


def short_path_sensitivity(
    x: VectorField,
    a: ArrayLike,
    b: ArrayLike,
    ladder: TLadder,
    sp1: ShortPathSystem,
    sp2: ShortPathSystem,
    curve_points: int = 512,
    threads: int | None = None,
) -> SensitivityReport:
    """Mean |crossing_sp1 - crossing_sp2| / T^2 over seed pairs at each rung.

    ``a`` and ``b`` are single seeds or equally long arrays of seeds. Per-pair
    gaps below ``GAP_FLOOR`` count as zero.
    """
    pa = np.atleast_2d(np.asarray(a, dtype=np.float64))
    pb = np.atleast_2d(np.asarray(b, dtype=np.float64))
    base = EstimatorConfig(
        n_pairs=len(pa),
        dt=ladder.dt,
        curve_points=curve_points,
        threads=threads,
    )
    one = pair_ladder(x, ladder, replace(base, short_path=sp1), seeds=(pa, pb))
    two = one if sp1 == sp2 else pair_ladder(x, ladder, replace(base, short_path=sp2), (pa, pb))

    crossing = np.abs(one.crossing_rate - two.crossing_rate)
    crossing[crossing < GAP_FLOOR] = 0.0
    lk = np.abs(one.lk_rate - two.lk_rate)
    lk[lk < GAP_FLOOR] = 0.0
    report = SensitivityReport(
        times=ladder.times,
        first=tuple(float(v) for v in one.crossing_rate.mean(axis=1)),
        second=tuple(float(v) for v in two.crossing_rate.mean(axis=1)),
        gaps=tuple(float(g) for g in crossing.mean(axis=1)),
        lk_gaps=tuple(float(g) for g in lk.mean(axis=1)),
    )
    trend = "identical" if report.identical else f"slope {report.slope}"
    logger.info("%s: %s vs %s closures, crossing gaps %s", x.name, sp1.rule, sp2.rule, trend)
    return report


@dataclass(frozen=True)
class InvarianceReport:
    quantity: str
    original: AsymptoticEstimate
    pushed: AsymptoticEstimate

    @property
    def difference(self) -> float:
        return self.pushed.value - self.original.value

    @property
    def combined_std_error(self) -> float:
        return math.hypot(self.original.std_error, self.pushed.std_error)

    @property
    def passed(self) -> bool:
        return abs(self.difference) <= 2 * self.combined_std_error + 1e-12


def invariance_check(
    x: VectorField,
    g: VolumeDiffeo,
    quantity: Literal["helicity", "quadratic_helicity"],
    ladder: TLadder,
    cfg: EstimatorConfig = DEFAULT_ESTIMATOR,
) -> InvarianceReport:
    """Measure a quantity for X and for g_* X with matched budgets and seeds."""
    estimator = helicity if quantity == "helicity" else quadratic_helicity
    original = estimator(x, ladder, cfg)
    pushed = estimator(fields.pushforward(x, g), ladder, cfg)
    report = InvarianceReport(quantity, original, pushed)
    logger.info(
        "%s under %s: difference %.3g, combined error %.3g",
        quantity,
        g.name,
        report.difference,
        report.combined_std_error,
    )
    return report


@dataclass(frozen=True)
class Inequality:
    """lhs >= rhs, judged with a 3 sigma allowance."""

    name: str
    lhs: float
    lhs_error: float
    rhs: float
    rhs_error: float

    @property
    def margin(self) -> float:
        return self.lhs - self.rhs

    @property
    def sigma(self) -> float:
        return math.hypot(self.lhs_error, self.rhs_error)

    @property
    def holds(self) -> bool:
        return self.margin >= -3 * self.sigma - 1e-12

    def to_dict(self) -> dict[str, float | str | bool]:
        return {
            "name": self.name,
            "lhs": self.lhs,
            "lhs_error": self.lhs_error,
            "rhs": self.rhs,
            "rhs_error": self.rhs_error,
            "margin": self.margin,
            "holds": self.holds,
        }


def _power(value: float, error: float, exponent: float, factor: float = 1.0) -> tuple[float, float]:
    """factor * value^exponent with first-order error propagation."""
    if value <= 0:
        # The derivative blows up at 0; bound the spread by the error itself.
        return 0.0, factor * error**exponent
    return factor * value**exponent, factor * exponent * value ** (exponent - 1) * error


@dataclass(frozen=True)
class BoundsReport:
    """Energies, helicities and the inequality chain between them."""

    field_name: str
    volume: float
    energy: IntegralEstimate
    energy_32: IntegralEstimate
    helicity: AsymptoticEstimate
    quadratic_helicity: AsymptoticEstimate
    crossing_number: AsymptoticEstimate
    inequalities: tuple[Inequality, ...]
    arnold_ratio: float | None = None
    arnold_bound: float | None = None
    volume_inequalities: tuple[Inequality, ...] = ()

    @property
    def passed(self) -> bool:
        return all(i.holds for i in (*self.inequalities, *self.volume_inequalities))


def bounds_report(
    x: VectorField,
    ladder: TLadder,
    cfg: EstimatorConfig = DEFAULT_ESTIMATOR,
) -> BoundsReport:
    """Evaluate the energy bounds for helicity, quadratic helicity and crossing number.

    The chain E_3/2 >= K c^3/4 >= K |H|^3/4 and E_3/2 >= K (H2)^3/8 >= K |H|^3/4,
    with K = (16/pi)^1/4, is checked under the probability measure on S (each
    pair quantity divided by vol^2, the energy by vol). The crossing number half
    is scale invariant and is checked under the volume measure as well; the
    quadratic helicity half is not, since H2 >= H^2 needs a probability measure.
    The Hoelder bound E_3/2 <= vol^1/4 E^3/4 and, on balls, Arnold's
    E / |H| >= lambda_1 use the volume measure.
    """
    pairs = pair_ladder(x, ladder, cfg)
    vol = pairs.volume
    times = ladder.times
    h = _estimate("helicity", pairs.lk_rate, times, vol**2, 2, pairs.flagged)
    h2 = _estimate("quadratic_helicity", pairs.lk_rate**2, times, vol**2, 4, pairs.flagged)
    c = _estimate("crossing_number", pairs.crossing_rate, times, vol**2, 2, pairs.flagged)
    e2 = fields.energy(x, 2.0, cfg.energy_samples, cfg.seed)
    e32 = fields.energy(x, 1.5, cfg.energy_samples, cfg.seed)

    e_p, e_err = e32.value / vol, e32.std_error / vol
    k = ENERGY_CONSTANT
    c_term = _power(c.normalized_value, c.normalized_std_error, 0.75, k)
    h_term = _power(abs(h.normalized_value), h.normalized_std_error, 0.75, k)
    h2_term = _power(h2.normalized_value, h2.normalized_std_error, 0.375, k)
    c_sq = _power(c.normalized_value, c.normalized_std_error, 2.0)
    holder = _power(e2.value, e2.std_error, 0.75, vol**0.25)

    inequalities = (
        Inequality("E32 >= K c^3/4", e_p, e_err, *c_term),
        Inequality("K c^3/4 >= K |H|^3/4", *c_term, *h_term),
        Inequality("E32 >= K (H2)^3/8", e_p, e_err, *h2_term),
        Inequality("K (H2)^3/8 >= K |H|^3/4", *h2_term, *h_term),
        Inequality("c^2 >= H2", *c_sq, h2.normalized_value, h2.normalized_std_error),
        Inequality("vol^1/4 E^3/4 >= E32", *holder, e32.value, e32.std_error),
    )
    c_raw = _power(c.value, c.std_error, 0.75, k)
    h_raw = _power(abs(h.value), h.std_error, 0.75, k)
    volume_inequalities = (
        Inequality("E32 >= K c^3/4 (volume)", e32.value, e32.std_error, *c_raw),
        Inequality("K c^3/4 >= K |H|^3/4 (volume)", *c_raw, *h_raw),
    )

    arnold_ratio = None
    arnold_bound = None
    domain = x.domain
    if isinstance(domain, Ball) and abs(h.value) > 0:
        arnold_ratio = e2.value / abs(h.value)
        arnold_bound = fields.beltrami_eigenvalue(domain.radius)

    for ineq in (*inequalities, *volume_inequalities):
        if not ineq.holds:
            logger.warning(
                "%s fails for %s: margin %.3g (sigma %.3g)",
                ineq.name,
                x.name,
                ineq.margin,
                ineq.sigma,
            )

    return BoundsReport(
        field_name=x.name,
        volume=vol,
        energy=e2,
        energy_32=e32,
        helicity=h,
        quadratic_helicity=h2,
        crossing_number=c,
        inequalities=inequalities,
        arnold_ratio=arnold_ratio,
        arnold_bound=arnold_bound,
        volume_inequalities=volume_inequalities,
    )


def convergence_table(
    report: ConvergenceReport,
    dt: float,
    seed: int,
) -> list[dict[str, float | int | str]]:
    """CSV rows ``quantity,T,estimate,std_error,n_pairs,dt,seed`` plus normalized columns."""
    rows: list[dict[str, float | int | str]] = []
    for T, est, err in zip(report.times, report.estimates, report.std_errors, strict=True):
        rows.append(
            {
                "quantity": report.quantity,
                "T": T,
                "estimate": est,
                "std_error": err,
                "n_pairs": report.samples,
                "dt": dt,
                "seed": seed,
                "normalized_estimate": est / report.normalization,
                "normalized_std_error": err / report.normalization,
            }
        )
    return rows
