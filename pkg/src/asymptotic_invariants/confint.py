"""Configuration space integrals on knots and their combinatorial oracles.

Pair kernel convention: for points p_i, p_j with unit tangents t_i, t_j,

    G(i, j) = (p_i - p_j) . (t_i x t_j) / (4 pi |p_i - p_j|^3)

which is symmetric in (i, j) and gives the right-handed Hopf link lk = +1.
On polygons the grid methods integrate G exactly over each segment pair,
as the solid angle the pair subtends divided by 4 pi.
"""

import logging
import math
from dataclasses import dataclass, replace
from functools import cache
from itertools import combinations
from typing import Literal

import numpy as np
from numpy.typing import NDArray
from scipy.spatial import cKDTree
from scipy.spatial.transform import Rotation

from asymptotic_invariants import curves, diagrams, sampling
from asymptotic_invariants.curves import Link, PolyCurve
from asymptotic_invariants.diagrams import TrivalentDiagram

logger = logging.getLogger(__name__)

EPS_DIAG_REL = 1e-6
IMPORTANCE_SIGMA_REL = 0.25
MAX_PROJECTION_ATTEMPTS = 50
MIN_REFINEMENT_POINTS = 16

_ROW_CHUNK = 256
_FOUR_PI = 4 * math.pi

# Importance mixture weights: gaussian, near-point 1/r^2, cauchy tail.
_MIX = (0.4, 0.4, 0.2)

Method = Literal["grid", "monte-carlo", "hybrid"]


class ProjectionError(RuntimeError):
    """Raised when no generic planar projection is found."""


@dataclass(frozen=True)
class QuadratureConfig:
    """Discretization budget for configuration space integrals.

    ``circle_subdivision`` of None integrates on the curve's own vertices;
    an integer resamples each curve to that many arclength-uniform points.
    ``diagonal_cutoff`` is relative to the curve diameter. ``refinement_check``
    adds the change of v2 between half and full resolution to its error bar.
    """

    circle_subdivision: int | None = None
    free_vertex_samples: int = 100_000
    diagonal_cutoff: float = EPS_DIAG_REL
    rng_seed: int = 0
    refinement_check: bool = True

    def __post_init__(self) -> None:
        if self.diagonal_cutoff <= 0:
            msg = f"diagonal_cutoff must be positive, got {self.diagonal_cutoff}"
            raise ValueError(msg)
        if self.free_vertex_samples < 1:
            msg = f"free_vertex_samples must be positive, got {self.free_vertex_samples}"
            raise ValueError(msg)
        if self.circle_subdivision is not None and self.circle_subdivision < 3:
            msg = f"circle_subdivision must be at least 3, got {self.circle_subdivision}"
            raise ValueError(msg)
        if self.rng_seed < 0:
            msg = f"rng_seed must be non-negative, got {self.rng_seed}"
            raise ValueError(msg)


DEFAULT_QUADRATURE = QuadratureConfig()


@dataclass(frozen=True)
class IntegralEstimate:
    value: float
    std_error: float = 0.0
    samples: int = 0
    method: Method = "grid"
    rejections: int = 0
    near_diagonal: bool = False
    discretization: float = 0.0

    def to_dict(self) -> dict[str, float | int | str | bool]:
        return {
            "value": self.value,
            "std_error": self.std_error,
            "samples": self.samples,
            "method": self.method,
            "rejections": self.rejections,
            "near_diagonal": self.near_diagonal,
            "discretization": self.discretization,
        }


def _prepare(k: PolyCurve, q: QuadratureConfig) -> PolyCurve:
    if q.circle_subdivision is None or q.circle_subdivision == len(k):
        return k
    return curves.resample(k, q.circle_subdivision)


def _solid_angle(
    k0: NDArray[np.float64],
    k1: NDArray[np.float64],
    l0: NDArray[np.float64],
    l1: NDArray[np.float64],
) -> NDArray[np.float64]:
    """Signed solid angle / 4 pi of segment pairs (k0,k1), (l0,l1) broadcast together."""
    a = l0 - k0
    b = l0 - k1
    c = l1 - k1
    d = l1 - k0
    p = np.einsum("...i,...i->...", a, np.cross(b, c))
    an = np.linalg.norm(a, axis=-1)
    bn = np.linalg.norm(b, axis=-1)
    cn = np.linalg.norm(c, axis=-1)
    dn = np.linalg.norm(d, axis=-1)

    def dot(x: NDArray[np.float64], y: NDArray[np.float64]) -> NDArray[np.float64]:
        return np.einsum("...i,...i->...", x, y)

    d1 = an * bn * cn + dot(a, b) * cn + dot(b, c) * an + dot(c, a) * bn
    d2 = an * dn * cn + dot(a, d) * cn + dot(d, c) * an + dot(c, a) * dn
    return (np.arctan2(p, d1) + np.arctan2(p, d2)) / (2 * math.pi)


def _rows(a: PolyCurve, b: PolyCurve, start: int, stop: int) -> NDArray[np.float64]:
    ka = a.points[start:stop, None, :]
    kb = np.roll(a.points, -1, axis=0)[start:stop, None, :]
    la = b.points[None, :, :]
    lb = np.roll(b.points, -1, axis=0)[None, :, :]
    return _solid_angle(ka, kb, la, lb)


def _mask_local(block: NDArray[np.float64], start: int, m: int) -> None:
    # A segment and its neighbours are coplanar and subtend no solid angle.
    rows = np.arange(block.shape[0])
    for offset in (-1, 0, 1):
        block[rows, (start + rows + offset) % m] = 0.0


def segment_pair_matrix(a: PolyCurve, b: PolyCurve | None = None) -> NDArray[np.float64]:
    """Matrix of exact pair integrals of G over segment i of ``a`` and j of ``b``.

    With ``b`` omitted the pairs are taken within ``a`` and the diagonal and
    adjacent pairs are zero.
    """
    other = a if b is None else b
    out = np.empty((len(a), len(other)))
    for start in range(0, len(a), _ROW_CHUNK):
        stop = min(start + _ROW_CHUNK, len(a))
        block = _rows(a, other, start, stop)
        if b is None:
            _mask_local(block, start, len(a))
        out[start:stop] = block
    return out


def _pair_totals(a: PolyCurve, b: PolyCurve | None = None) -> tuple[float, float]:
    """Signed and absolute sums of the segment pair integrals."""
    other = a if b is None else b
    signed = 0.0
    absolute = 0.0
    for start in range(0, len(a), _ROW_CHUNK):
        stop = min(start + _ROW_CHUNK, len(a))
        block = _rows(a, other, start, stop)
        if b is None:
            _mask_local(block, start, len(a))
        signed += float(block.sum())
        absolute += float(np.abs(block).sum())
    return signed, absolute


def _pair_total(a: PolyCurve, b: PolyCurve | None = None) -> float:
    return _pair_totals(a, b)[0]


def _ordered(k1: PolyCurve, k2: PolyCurve) -> tuple[PolyCurve, PolyCurve]:
    # Fixed evaluation order makes pair sums symmetric bit for bit.
    key_1 = (len(k1), tuple(k1.points[0]))
    key_2 = (len(k2), tuple(k2.points[0]))
    return (k2, k1) if key_2 < key_1 else (k1, k2)


def linking_number(
    k1: PolyCurve,
    k2: PolyCurve,
    q: QuadratureConfig = DEFAULT_QUADRATURE,
) -> IntegralEstimate:
    """Gauss linking integral of two disjoint closed curves.

    Raises:
        CurveError: If the curves come within the separation tolerance
    """
    a, b = _ordered(_prepare(k1, q), _prepare(k2, q))
    _ = curves.check_disjoint(a, b)

    value = _pair_total(a, b)
    logger.info("linking number %.6f on %d x %d segments", value, len(a), len(b))
    return IntegralEstimate(value=value, samples=len(a) * len(b), method="grid")


def gauss_pair_sums(k1: PolyCurve, k2: PolyCurve) -> tuple[float, float]:
    """Linking number and the integral of the absolute Gauss kernel over a curve pair.

    Raises:
        CurveError: If the curves come within the separation tolerance
    """
    a, b = _ordered(k1, k2)
    _ = curves.check_disjoint(a, b)
    return _pair_totals(a, b)


def linking_matrix(link: Link, q: QuadratureConfig = DEFAULT_QUADRATURE) -> NDArray[np.float64]:
    """Symmetric matrix of pairwise linking numbers, zero diagonal."""
    n = len(link)
    out = np.zeros((n, n))
    for i, j in combinations(range(n), 2):
        out[i, j] = out[j, i] = linking_number(link.components[i], link.components[j], q).value
    return out


def _near_self_intersection(k: PolyCurve, cutoff: float) -> bool:
    m = len(k)
    for i, j in cKDTree(k.points).query_pairs(cutoff * k.diameter):
        gap = (j - i) % m
        if 1 < gap < m - 1:
            return True
    return False


def writhe(k: PolyCurve, q: QuadratureConfig = DEFAULT_QUADRATURE) -> IntegralEstimate:
    """Gauss self-integral over off-diagonal pairs.

    Flags ``near_diagonal`` (and logs a warning) when two non-adjacent
    vertices are closer than the diagonal cutoff.
    """
    return integral_I_D(k, diagrams.CHORD, q)


def _chord_pattern(d: TrivalentDiagram, r: int) -> tuple[tuple[int, int], ...]:
    """Edges of ``d`` written in sorted-sample positions for circle rotation r."""
    k = d.k
    position = {d.circle[(r + i) % k]: i for i in range(k)}
    pairs = ((position[a], position[b]) for a, b in d.edges)
    return tuple(sorted((min(p), max(p)) for p in pairs))


def _chord_sign(d: TrivalentDiagram) -> int:
    order = sorted(d.circle)
    index = {label: i for i, label in enumerate(order)}
    seq = [index[v] for e in d.edges for v in e]
    inversions = sum(1 for x, y in combinations(seq, 2) if x > y)
    parity = -1 if inversions % 2 else 1
    return parity * (-1) ** (len(d.edges) + 1)


def _simplex_sum(w: NDArray[np.float64], pattern: tuple[tuple[int, int], ...]) -> float:
    """Sum over i<j<k<l of the product of w over ``pattern`` (k = 2 or 4)."""
    m = w.shape[0]
    upper = np.triu(np.ones((m, m), dtype=bool), 1)

    if pattern == ((0, 1),):
        return float(w[upper].sum())

    if pattern == ((0, 2), (1, 3)):
        # crossed: sum_{i<k} w[i,k] sum_{i<j<k} sum_{l>k} w[j,l]
        suffix = np.cumsum(w[:, ::-1], axis=1)[:, ::-1]
        beyond = np.zeros_like(w)
        beyond[:, :-1] = suffix[:, 1:]
        acc = np.cumsum(beyond, axis=0)
        last = np.zeros(m)
        last[1:] = acc[np.arange(m - 1), np.arange(1, m)]
        inner = last[None, :] - acc
        return float((w * inner)[upper].sum())

    if pattern == ((0, 1), (2, 3)):
        strict = np.where(upper, w, 0.0)
        before = strict.sum(axis=0)
        after = strict.sum(axis=1)
        tail = np.concatenate([np.cumsum(after[::-1])[::-1][1:], [0.0]])
        return float(before @ tail)

    if pattern == ((0, 3), (1, 2)):
        strict = np.where(upper, w, 0.0)
        outer = np.cumsum(np.cumsum(strict[:, ::-1], axis=1)[:, ::-1], axis=0)
        shifted = np.zeros_like(w)
        shifted[1:, :-1] = outer[:-1, 1:]
        return float((strict * shifted).sum())

    msg = f"No grid rule for chord pattern {pattern}"
    raise ValueError(msg)


def _chord_grid(k: PolyCurve, d: TrivalentDiagram) -> float:
    if d.k == 2:
        # Both rotations of the single chord give the same pattern.
        return _chord_sign(d) * _pair_total(k)

    w = segment_pair_matrix(k)
    patterns: dict[tuple[tuple[int, int], ...], int] = {}
    for r in range(d.k):
        pattern = _chord_pattern(d, r)
        patterns[pattern] = patterns.get(pattern, 0) + 1
    total = sum(count * _simplex_sum(w, p) for p, count in patterns.items())
    return _chord_sign(d) * total


@dataclass(frozen=True)
class _Integrand:
    """Top-degree coefficient of the wedge of edge forms, as a term list."""

    diagram: TrivalentDiagram
    coord_of: dict[int, tuple[int, ...]]
    terms: tuple[tuple[int, tuple[tuple[int, int, int], ...]], ...]


@cache
def _integrand(d: TrivalentDiagram) -> _Integrand:
    coord_of: dict[int, tuple[int, ...]] = {}
    n = 0
    for c in sorted(d.circle):
        coord_of[c] = (n,)
        n += 1
    for v in sorted(d.free):
        coord_of[v] = (n, n + 1, n + 2)
        n += 3

    supports = [sorted((*coord_of[a], *coord_of[b])) for a, b in d.edges]
    terms: list[tuple[int, tuple[tuple[int, int, int], ...]]] = []

    def walk(e: int, used: frozenset[int], chosen: list[tuple[int, int, int]]) -> None:
        if e == len(d.edges):
            if len(used) == n:
                seq = [x for _, p, q in chosen for x in (p, q)]
                inversions = sum(1 for x, y in combinations(seq, 2) if x > y)
                terms.append((-1 if inversions % 2 else 1, tuple(chosen)))
            return
        free = [c for c in supports[e] if c not in used]
        for p, q in combinations(free, 2):
            walk(e + 1, used | {p, q}, [*chosen, (e, p, q)])

    walk(0, frozenset(), [])
    return _Integrand(d, coord_of, tuple(terms))


def _evaluate(
    expansion: _Integrand,
    positions: dict[int, NDArray[np.float64]],
    tangents: dict[int, NDArray[np.float64]],
) -> NDArray[np.float64]:
    """Integrand values for a batch of configurations (circle and free positions)."""
    d = expansion.diagram
    size = next(iter(positions.values())).shape[0]
    cache: dict[tuple[int, int, int], NDArray[np.float64]] = {}
    geometry: list[tuple[NDArray[np.float64], NDArray[np.float64]]] = []
    for a, b in d.edges:
        sep = positions[b] - positions[a]
        norm = np.linalg.norm(sep, axis=1)
        geometry.append((sep, 1.0 / (_FOUR_PI * norm**3)))

    def jacobian(e: int, coord: int) -> NDArray[np.float64]:
        a, b = d.edges[e]
        for vertex, sign in ((b, 1.0), (a, -1.0)):
            coords = expansion.coord_of[vertex]
            if coord in coords:
                if vertex in tangents:
                    return sign * tangents[vertex]
                unit = np.zeros((size, 3))
                unit[:, coords.index(coord)] = sign
                return unit
        msg = f"coordinate {coord} outside edge {d.edges[e]}"
        raise ValueError(msg)

    def factor(e: int, p: int, q: int) -> NDArray[np.float64]:
        key = (e, p, q)
        if key not in cache:
            sep, scale = geometry[e]
            triple = np.einsum("ni,ni->n", sep, np.cross(jacobian(e, p), jacobian(e, q)))
            cache[key] = triple * scale
        return cache[key]

    total = np.zeros(size)
    for sign, factors in expansion.terms:
        product = np.full(size, float(sign))
        for e, p, q in factors:
            product = product * factor(e, p, q)
        total += product
    return (-1) ** (len(d.edges) + 1) * total


def _cauchy_density(
    y: NDArray[np.float64],
    center: NDArray[np.float64],
    scale: float,
) -> NDArray[np.float64]:
    r2 = np.sum((y - center) ** 2, axis=-1) / scale**2
    return 1.0 / (math.pi**2 * scale**3 * (1.0 + r2) ** 2)


def _draw_free(
    rng: np.random.Generator,
    centers: NDArray[np.float64],
    sigma: float,
    middle: NDArray[np.float64],
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Draw one free vertex per row from the importance mixture around ``centers``.

    Returns:
        (points, density) with points of shape (N, 3)
    """
    n, c, _ = centers.shape
    pick = centers[np.arange(n), rng.integers(0, c, size=n)]
    component = rng.random(n)

    gauss = pick + sigma * rng.standard_normal((n, 3))
    direction = rng.standard_normal((n, 3))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    near = pick + sigma * rng.random(n)[:, None] * direction
    chi = np.abs(rng.standard_normal(n))[:, None]
    tail = middle + sigma * 2 * rng.standard_normal((n, 3)) / chi

    y = np.where(
        (component < _MIX[0])[:, None],
        gauss,
        np.where((component < _MIX[0] + _MIX[1])[:, None], near, tail),
    )

    r2 = np.sum((y[:, None, :] - centers) ** 2, axis=-1)
    r = np.sqrt(r2)
    gauss_pdf = np.exp(-r2 / (2 * sigma**2)) / (2 * math.pi * sigma**2) ** 1.5
    with np.errstate(divide="ignore"):
        near_pdf = np.where(r < sigma, 1.0 / (_FOUR_PI * sigma * r2), 0.0)
    density = (
        _MIX[0] * gauss_pdf.mean(axis=1)
        + _MIX[1] * near_pdf.mean(axis=1)
        + _MIX[2] * _cauchy_density(y, middle, 2 * sigma)
    )
    return y, density


def _monte_carlo(k: PolyCurve, d: TrivalentDiagram, q: QuadratureConfig) -> IntegralEstimate:
    expansion = _integrand(d)
    length = k.length
    scale = k.diameter
    sigma = IMPORTANCE_SIGMA_REL * scale
    cutoff = q.diagonal_cutoff * scale
    middle = k.points.mean(axis=0)
    n_circle = d.k
    simplex_volume = length**n_circle / math.factorial(n_circle)
    free_labels = sorted(d.free)

    def block(rng: np.random.Generator, size: int) -> sampling.BlockResult:
        params = np.sort(rng.random((size, n_circle)) * length, axis=1)
        pts, tans = curves.point_at(k, params)

        weight = np.full(size, simplex_volume)
        free_pos: dict[int, NDArray[np.float64]] = {}
        centers = pts
        for v in free_labels:
            y, density = _draw_free(rng, centers, sigma, middle)
            free_pos[v] = y
            weight = weight / density
            centers = np.concatenate([centers, y[:, None, :]], axis=1)

        everything = centers
        gaps = np.linalg.norm(everything[:, :, None, :] - everything[:, None, :, :], axis=-1)
        iu = np.triu_indices(everything.shape[1], 1)
        if len(iu[0]):
            rejected = np.min(gaps[:, iu[0], iu[1]], axis=1) < cutoff
        else:
            rejected = np.zeros(size, bool)

        values = np.zeros(size)
        for r in range(n_circle):
            positions = dict(free_pos)
            tangents: dict[int, NDArray[np.float64]] = {}
            for i in range(n_circle):
                label = d.circle[(r + i) % n_circle]
                positions[label] = pts[:, i]
                tangents[label] = tans[:, i]
            with np.errstate(divide="ignore", invalid="ignore"):
                values += _evaluate(expansion, positions, tangents)

        values = np.where(rejected | ~np.isfinite(values), 0.0, values * weight)
        return sampling.summarize(values, int(rejected.sum()))

    tag = f"I_D:{diagrams.format_diagram(d)}"
    result = sampling.run_blocks(block, q.free_vertex_samples, q.rng_seed, tag)
    logger.info(
        "I_D %s: %.6g +/- %.2g (%d samples, %d rejected)",
        diagrams.format_diagram(d),
        result.mean,
        result.std_error,
        result.samples,
        result.rejections,
    )
    return IntegralEstimate(
        value=result.mean,
        std_error=result.std_error,
        samples=result.samples,
        method="monte-carlo",
        rejections=result.rejections,
    )


def integral_I_D(
    k: PolyCurve,
    d: TrivalentDiagram,
    q: QuadratureConfig = DEFAULT_QUADRATURE,
) -> IntegralEstimate:
    """Configuration space integral of diagram ``d`` over knot ``k``.

    Circle points range over configurations in the diagram's cyclic order;
    free vertices range over all of space. Chord diagrams with at most four
    circle vertices are summed exactly on the segment grid; everything else
    is estimated by Monte Carlo.

    Args:
        k: Closed knot polygon
        d: Trivalent diagram, canonicalized before integration
        q: Quadrature budget

    Returns:
        Estimate with std_error for Monte Carlo methods
    """
    if not k.closed:
        msg = "integral_I_D needs a closed curve"
        raise curves.CurveError(msg)

    d = diagrams.canonicalize(d)
    curve = _prepare(k, q)

    if d.is_chord_diagram and d.k <= 4:
        value = _chord_grid(curve, d)
        near = _near_self_intersection(curve, q.diagonal_cutoff)
        if near:
            logger.warning("curve comes within the diagonal cutoff of itself")
        samples = len(curve) ** d.k
        return IntegralEstimate(value=value, samples=samples, method="grid", near_diagonal=near)

    return _monte_carlo(curve, d, q)


def _v2_raw(k: PolyCurve, q: QuadratureConfig) -> tuple[float, float, int, int]:
    value = 0.0
    variance = 0.0
    samples = 0
    rejections = 0
    for d in diagrams.enumerate_diagrams(2):
        weight = diagrams.V2_WEIGHTS.value(d)
        if weight == 0:
            continue
        coeff = weight / d.automorphism_count()
        estimate = integral_I_D(k, d, q)
        value += coeff * estimate.value
        variance += (coeff * estimate.std_error) ** 2
        samples += estimate.samples if estimate.method == "monte-carlo" else 0
        rejections += estimate.rejections
    return value, math.sqrt(variance), samples, rejections


@cache
def _unknot_offset(points: int, q: QuadratureConfig) -> tuple[float, float]:
    value, error, _, _ = _v2_raw(curves.circle(points), q)
    logger.info("v2 unknot offset at %d points: %.6f +/- %.2g", points, value, error)
    return value, error


def _v2_calibrated(k: PolyCurve, q: QuadratureConfig) -> tuple[float, float, int, int]:
    value, error, samples, rejections = _v2_raw(k, q)
    offset, offset_error = _unknot_offset(len(k), q)
    return value - offset, math.hypot(error, offset_error), samples, rejections


def v2(k: PolyCurve, q: QuadratureConfig = DEFAULT_QUADRATURE) -> IntegralEstimate:
    """Type-2 invariant from degree-2 configuration integrals, calibrated on the round unknot.

    With ``q.refinement_check`` the same estimate at half the points bounds the
    discretization error, which joins the Monte Carlo error in quadrature.
    """
    curve = _prepare(k, q)
    value, error, samples, rejections = _v2_calibrated(curve, q)
    discretization = 0.0
    if q.refinement_check and len(curve) >= MIN_REFINEMENT_POINTS:
        half = curves.resample(curve, len(curve) // 2)
        coarse, _, coarse_samples, _ = _v2_calibrated(half, replace(q, circle_subdivision=None))
        discretization = abs(value - coarse)
        samples += coarse_samples
        logger.debug("v2 at %d vs %d points: %.3g apart", len(curve), len(half), discretization)
    return IntegralEstimate(
        value=value,
        std_error=math.hypot(error, discretization),
        samples=samples,
        method="hybrid",
        rejections=rejections,
        discretization=discretization,
    )


@dataclass(frozen=True)
class Crossing:
    """A crossing of a generic projection.

    Parameters are curve positions (segment index plus fraction) of the over
    and under passages; ``over_component``/``under_component`` index the link.
    """

    over: float
    under: float
    sign: int
    over_component: int = 0
    under_component: int = 0


def _segment_crossings(
    a: NDArray[np.float64],
    b: NDArray[np.float64],
    same: bool,
) -> tuple[NDArray[np.intp], NDArray[np.intp], NDArray[np.float64], NDArray[np.float64], bool]:
    """Intersections of the (x, y) shadows of the segments of closed polygons a and b.

    Returns:
        (i, j, s, u, generic) with s, u the fractions along segments i and j
    """
    r = (np.roll(a, -1, axis=0) - a)[:, None, :2]
    w = (np.roll(b, -1, axis=0) - b)[None, :, :2]
    delta = b[None, :, :2] - a[:, None, :2]
    denom = r[..., 0] * w[..., 1] - r[..., 1] * w[..., 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        s = (delta[..., 0] * w[..., 1] - delta[..., 1] * w[..., 0]) / denom
        u = (delta[..., 0] * r[..., 1] - delta[..., 1] * r[..., 0]) / denom

    hit = (s >= 0) & (s <= 1) & (u >= 0) & (u <= 1)
    if same:
        m = len(a)
        rows, cols = np.indices(hit.shape)
        hit &= (rows < cols) & ((cols - rows) % m > 1) & ((rows - cols) % m > 1)
    i, j = np.nonzero(hit)
    s_hit, u_hit = s[i, j], u[i, j]

    tol = 1e-9
    scale = np.linalg.norm(r[i, 0], axis=-1) * np.linalg.norm(w[0, j], axis=-1)
    generic = bool(
        np.all((s_hit > tol) & (s_hit < 1 - tol) & (u_hit > tol) & (u_hit < 1 - tol))
        and np.all(np.abs(denom[i, j]) > 1e-8 * scale)
    )
    return i, j, s_hit, u_hit, generic


def _project(components: list[PolyCurve], seed: int) -> list[Crossing]:
    """Crossings of the first generic random projection found, viewed from +z."""
    scale = max(c.diameter for c in components)
    for attempt in range(MAX_PROJECTION_ATTEMPTS):
        rotation = Rotation.random(None, sampling.block_rng(seed, "projection", attempt))
        rotated = [rotation.apply(c.points) for c in components]

        found: list[Crossing] = []
        generic = True
        for ca, cb in [(x, y) for x in range(len(rotated)) for y in range(x, len(rotated))]:
            a, b = rotated[ca], rotated[cb]
            i, j, s, u, generic = _segment_crossings(a, b, same=ca == cb)
            if not generic:
                break
            found.extend(_classify(a, b, i, j, s, u, ca, cb, scale))

        if generic and all(c.sign != 0 for c in found):
            logger.debug("projection %d: %d crossings", attempt + 1, len(found))
            return found
        logger.debug("projection attempt %d not generic", attempt + 1)

    msg = f"No generic projection after {MAX_PROJECTION_ATTEMPTS} attempts"
    raise ProjectionError(msg)


def _classify(
    a: NDArray[np.float64],
    b: NDArray[np.float64],
    i: NDArray[np.intp],
    j: NDArray[np.intp],
    s: NDArray[np.float64],
    u: NDArray[np.float64],
    ca: int,
    cb: int,
    scale: float,
) -> list[Crossing]:
    da = np.roll(a, -1, axis=0) - a
    db = np.roll(b, -1, axis=0) - b
    out: list[Crossing] = []
    for ii, jj, ss, uu in zip(i, j, s, u, strict=True):
        za = a[ii, 2] + ss * da[ii, 2]
        zb = b[jj, 2] + uu * db[jj, 2]
        if abs(za - zb) <= 1e-9 * scale:
            out.append(Crossing(0.0, 0.0, 0))
            continue
        if za > zb:
            over, under = (ii + ss, ca, da[ii]), (jj + uu, cb, db[jj])
        else:
            over, under = (jj + uu, cb, db[jj]), (ii + ss, ca, da[ii])
        cross = over[2][0] * under[2][1] - over[2][1] * under[2][0]
        out.append(
            Crossing(
                over=float(over[0]),
                under=float(under[0]),
                sign=1 if cross > 0 else -1,
                over_component=over[1],
                under_component=under[1],
            )
        )
    return out


def crossings(k: PolyCurve | Link, seed: int = 0) -> list[Crossing]:
    """Signed crossings of a generic projection of a knot or link."""
    components = list(k.components) if isinstance(k, Link) else [k]
    return _project(components, seed)


def crossing_projection_lk(k1: PolyCurve, k2: PolyCurve, seed: int = 0) -> int:
    """Linking number as half the signed count of inter-component crossings.

    Raises:
        ProjectionError: If no generic projection is found
    """
    found = _project([k1, k2], seed)
    total = sum(c.sign for c in found if c.over_component != c.under_component)
    return round(total / 2)


def polyak_viro_v2(k: PolyCurve, seed: int = 0) -> int:
    """Gauss-diagram count of the type-2 invariant on a generic projection.

    With the basepoint at parameter 0, sums the sign products of crossing
    pairs (a, b) whose passages occur in the order under_a, over_b, over_a,
    under_b along the knot.

    Raises:
        ProjectionError: If no generic projection is found
    """
    found = _project([k], seed)
    total = 0
    for a in found:
        for b in found:
            if a.under < b.over < a.over < b.under:
                total += a.sign * b.sign
    logger.info("Polyak-Viro count over %d crossings: %d", len(found), total)
    return total
