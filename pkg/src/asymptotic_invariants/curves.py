"""Sampled closed curves, links, knot files and orbit closure by short paths."""

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import quad
from scipy.spatial import ConvexHull, QhullError, cKDTree
from scipy.spatial.distance import pdist

from asymptotic_invariants import reports

logger = logging.getLogger(__name__)

EPS_SEP_REL = 1e-9

Points = NDArray[np.float64]


class CurveError(ValueError):
    """Raised for degenerate curves, malformed knot files and touching components."""


@dataclass(frozen=True, eq=False)
class PolyCurve:
    """Piecewise-linear curve through ``points``; closed curves join last to first."""

    points: Points
    closed: bool = True

    def __post_init__(self) -> None:
        pts = np.array(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 3:
            msg = f"Curve points must have shape (m, 3), got {pts.shape}"
            raise CurveError(msg)
        if not np.all(np.isfinite(pts)):
            msg = "Curve points must be finite"
            raise CurveError(msg)

        minimum = 3 if self.closed else 2
        if len(pts) < minimum:
            msg = f"{'Closed' if self.closed else 'Open'} curve needs at least {minimum} points"
            raise CurveError(msg)

        steps = np.linalg.norm(_segments(pts, self.closed), axis=1)
        if np.any(steps == 0):
            msg = "Consecutive curve points must be distinct"
            raise CurveError(msg)

        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_points(cls, points: ArrayLike, closed: bool = True, tol: float = 0.0) -> "PolyCurve":
        """Build a curve after dropping consecutive points closer than ``tol``."""
        pts = np.asarray(points, dtype=np.float64)
        if len(pts) == 0:
            msg = "Curve has no points"
            raise CurveError(msg)

        keep = [0]
        for i in range(1, len(pts)):
            if np.linalg.norm(pts[i] - pts[keep[-1]]) > tol:
                keep.append(i)
        if closed and len(keep) > 1 and np.linalg.norm(pts[keep[-1]] - pts[0]) <= tol:
            _ = keep.pop()
        return cls(pts[keep], closed)

    def __len__(self) -> int:
        return len(self.points)

    def segments(self) -> Points:
        """Segment vectors; a closed curve includes the closing segment."""
        return _segments(self.points, self.closed)

    def midpoints(self) -> Points:
        return self.points[: len(self.segments())] + 0.5 * self.segments()

    @cached_property
    def cumulative_arclength(self) -> NDArray[np.float64]:
        """Arclength at each vertex, ending with the total length."""
        steps = np.linalg.norm(self.segments(), axis=1)
        return np.concatenate([[0.0], np.cumsum(steps)])

    @property
    def length(self) -> float:
        return float(self.cumulative_arclength[-1])

    @cached_property
    def diameter(self) -> float:
        return _diameter(self.points)

    def transformed(self, matrix: ArrayLike, offset: ArrayLike = (0.0, 0.0, 0.0)) -> "PolyCurve":
        """Image under p -> matrix @ p + offset."""
        m = np.asarray(matrix, dtype=np.float64)
        return PolyCurve(self.points @ m.T + np.asarray(offset, dtype=np.float64), self.closed)


def _segments(points: Points, closed: bool) -> Points:
    if closed:
        return np.roll(points, -1, axis=0) - points
    return np.diff(points, axis=0)


def _diameter(points: Points) -> float:
    candidates = points
    if len(points) > 64:
        try:
            candidates = points[ConvexHull(points, qhull_options="QJ").vertices]
        except QhullError:
            candidates = points
    return float(np.max(pdist(candidates))) if len(candidates) > 1 else 0.0


@dataclass(frozen=True, eq=False)
class Link:
    """Closed, pairwise disjoint components."""

    components: tuple[PolyCurve, ...]

    def __post_init__(self) -> None:
        if not self.components:
            msg = "Link needs at least one component"
            raise CurveError(msg)
        for c in self.components:
            if not c.closed:
                msg = "Link components must be closed"
                raise CurveError(msg)
        for i in range(len(self.components)):
            for j in range(i + 1, len(self.components)):
                check_disjoint(self.components[i], self.components[j])

    def __len__(self) -> int:
        return len(self.components)

    @property
    def diameter(self) -> float:
        return _diameter(np.concatenate([c.points for c in self.components]))


def check_disjoint(a: PolyCurve, b: PolyCurve) -> float:
    """Minimum vertex distance between two curves.

    Raises:
        CurveError: If the curves come within EPS_SEP_REL of the joint diameter
    """
    gap = float(cKDTree(b.points).query(a.points)[0].min())
    scale = _diameter(np.concatenate([a.points, b.points]))
    if gap < EPS_SEP_REL * scale:
        msg = f"Curves intersect within tolerance (gap {gap:.3e})"
        raise CurveError(msg)
    return gap


def resample(c: PolyCurve, m: int) -> PolyCurve:
    """Arclength-uniform resampling to ``m`` points, starting at the first vertex.

    Raises:
        CurveError: If m is too small or the curve has zero length
    """
    if m < (3 if c.closed else 2):
        msg = f"Resample count too small: {m}"
        raise CurveError(msg)
    total = c.length
    if total <= 0:
        msg = "Cannot resample a zero-length curve"
        raise CurveError(msg)

    nodes = np.vstack([c.points, c.points[:1]]) if c.closed else c.points
    s = c.cumulative_arclength
    targets = np.arange(m) * (total / m) if c.closed else np.linspace(0.0, total, m)
    out = np.column_stack([np.interp(targets, s, nodes[:, k]) for k in range(3)])
    return PolyCurve(out, c.closed)


def tangent(c: PolyCurve, i: int, central: bool = False) -> NDArray[np.float64]:
    """Unit tangent of segment ``i``, or the central-difference tangent at vertex ``i``.

    Raises:
        IndexError: If i is not a valid segment index
    """
    n_seg = len(c.segments())
    if not 0 <= i < n_seg:
        msg = f"Segment index {i} out of range for {n_seg} segments"
        raise IndexError(msg)

    if central and c.closed:
        m = len(c)
        v = c.points[(i + 1) % m] - c.points[(i - 1) % m]
    else:
        v = c.segments()[i]
    return v / np.linalg.norm(v)


def tangents(c: PolyCurve) -> Points:
    """Unit tangents of all segments."""
    seg = c.segments()
    return seg / np.linalg.norm(seg, axis=1, keepdims=True)


def point_at(c: PolyCurve, s: NDArray[np.float64]) -> tuple[Points, Points]:
    """Positions and unit tangents at arclength parameters ``s`` in [0, length)."""
    cum = c.cumulative_arclength
    index = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(cum) - 2)
    seg = c.segments()
    frac = (s - cum[index]) / (cum[index + 1] - cum[index])
    points = c.points[index] + frac[..., None] * seg[index]
    return points, tangents(c)[index]


DOGLEG_PULL = 0.1


@dataclass(frozen=True)
class ShortPathSystem:
    """Rule closing an orbit segment from its end back to its start.

    ``straight`` joins the endpoints by a segment. ``dogleg`` turns at a corner
    near a fixed interior waypoint, pulled a fraction ``DOGLEG_PULL`` of the
    way toward the chord midpoint so closures of different orbits stay apart.
    """

    rule: Literal["straight", "dogleg"] = "straight"
    waypoint: tuple[float, float, float] | None = None

    def __post_init__(self) -> None:
        if self.rule == "dogleg" and self.waypoint is None:
            msg = "dogleg short paths need a waypoint"
            raise ValueError(msg)

    def arc(self, a: ArrayLike, b: ArrayLike, spacing: float) -> Points:
        """Arc from a to b, both included, subdivided to ``spacing``."""
        start = np.asarray(a, dtype=np.float64)
        end = np.asarray(b, dtype=np.float64)
        if self.rule == "straight" or self.waypoint is None:
            return _subdivide([start, end], spacing)
        w = np.asarray(self.waypoint, dtype=np.float64)
        corner = w + DOGLEG_PULL * ((start + end) / 2 - w)
        return _subdivide([start, corner, end], spacing)


def _subdivide(corners: list[NDArray[np.float64]], spacing: float) -> Points:
    out = [corners[0]]
    for p, q in zip(corners, corners[1:], strict=False):
        gap = float(np.linalg.norm(q - p))
        if gap == 0:
            continue
        pieces = max(1, math.ceil(gap / spacing)) if spacing > 0 else 1
        frac = np.arange(1, pieces + 1)[:, None] / pieces
        out.extend(p + frac * (q - p))
    return np.array(out)


STRAIGHT = ShortPathSystem()


def dogleg(waypoint: ArrayLike) -> ShortPathSystem:
    """Two-leg short path system through ``waypoint``."""
    w = np.asarray(waypoint, dtype=np.float64)
    return ShortPathSystem("dogleg", (float(w[0]), float(w[1]), float(w[2])))


@dataclass(frozen=True, eq=False)
class OrbitKnot:
    """An orbit segment closed up by a short path."""

    seed: NDArray[np.float64]
    T: float
    dt: float
    orbit: PolyCurve
    closure: Points
    closed_curve: PolyCurve

    @property
    def closure_length(self) -> float:
        if len(self.closure) < 2:
            return 0.0
        return float(np.sum(np.linalg.norm(np.diff(self.closure, axis=0), axis=1)))


def close_orbit(
    orbit: PolyCurve,
    sp: ShortPathSystem = STRAIGHT,
    spacing: float | None = None,
    T: float = 0.0,
    dt: float = 0.0,
) -> OrbitKnot:
    """Close an open orbit with the short path from its end to its start.

    Args:
        orbit: Open orbit polygon, at least 2 points
        sp: Short path rule
        spacing: Closure subdivision; defaults to the orbit's mean step
        T: Orbit time, recorded on the result
        dt: Integration step, recorded on the result

    Returns:
        OrbitKnot whose closed curve is the orbit followed by the closure arc
    """
    if orbit.closed:
        msg = "close_orbit expects an open orbit"
        raise CurveError(msg)

    pts = orbit.points
    if spacing is None:
        spacing = orbit.length / max(len(pts) - 1, 1)

    start, end = pts[0], pts[-1]
    if len(pts) < 3:
        # Two vertices need an inner closure point to make a closed polygon.
        spacing = min(spacing, float(np.linalg.norm(end - start)) / 2)
    tol = EPS_SEP_REL * max(orbit.diameter, 1.0)
    if np.linalg.norm(end - start) <= tol:
        # Periodic orbit: the end already sits on the start.
        closure = np.array([end, start])
        closed = PolyCurve.from_points(pts[:-1], closed=True)
    else:
        closure = sp.arc(end, start, spacing)
        closed = PolyCurve.from_points(np.vstack([pts, closure[1:-1]]), closed=True)

    return OrbitKnot(
        seed=pts[0].copy(),
        T=T,
        dt=dt,
        orbit=orbit,
        closure=closure,
        closed_curve=closed,
    )


def sample_parametric(
    f: Callable[[NDArray[np.float64]], Points],
    m: int,
    t0: float = 0.0,
    t1: float = 2 * math.pi,
) -> PolyCurve:
    """Closed polygon through f at m equally spaced parameters in [t0, t1)."""
    t = t0 + (t1 - t0) * np.arange(m) / m
    return PolyCurve(f(t), closed=True)


def parametric_length(
    f: Callable[[NDArray[np.float64]], Points],
    t0: float = 0.0,
    t1: float = 2 * math.pi,
) -> float:
    """Arclength of a smooth parametric curve by adaptive quadrature of its speed."""
    h = 1e-6

    def speed(t: float) -> float:
        ts = np.array([t - h, t + h])
        p = f(ts)
        return float(np.linalg.norm(p[1] - p[0]) / (2 * h))

    value, _ = quad(speed, t0, t1, limit=1000)
    return float(value)


Vector = NDArray[np.float64]


def _frame(normal: ArrayLike) -> tuple[Vector, Vector, Vector]:
    n = np.asarray(normal, dtype=np.float64)
    n = n / np.linalg.norm(n)
    ref = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = ref - (ref @ n) * n
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(n, e1), n


def circle_points(
    t: NDArray[np.float64],
    radius: float = 1.0,
    center: ArrayLike = (0.0, 0.0, 0.0),
    normal: ArrayLike = (0.0, 0.0, 1.0),
) -> Points:
    """Points of a circle turning counterclockwise about ``normal``."""
    e1, e2, _ = _frame(normal)
    c = np.asarray(center, dtype=np.float64)
    return c + radius * (np.cos(t)[:, None] * e1 + np.sin(t)[:, None] * e2)


def circle(
    m: int,
    radius: float = 1.0,
    center: ArrayLike = (0.0, 0.0, 0.0),
    normal: ArrayLike = (0.0, 0.0, 1.0),
) -> PolyCurve:
    return sample_parametric(lambda t: circle_points(t, radius, center, normal), m)


def hopf_link(m: int = 512) -> Link:
    """Unit circle in z=0 and unit circle in y=0 centred (1,0,0); lk = +1."""
    return Link((circle(m), circle(m, center=(1.0, 0.0, 0.0), normal=(0.0, 1.0, 0.0))))


def split_link(m: int = 512, height: float = 10.0) -> Link:
    """Two coaxial unit circles in the planes z=0 and z=height."""
    return Link((circle(m), circle(m, center=(0.0, 0.0, height))))


def torus_link_points(
    t: NDArray[np.float64],
    component: int,
    turns: int,
    major: float = 2.0,
    minor: float = 1.0,
) -> Points:
    theta = -turns * t + component * math.pi
    rho = major + minor * np.cos(theta)
    return np.column_stack([rho * np.cos(t), rho * np.sin(t), minor * np.sin(theta)])


def torus_link(m: int = 512, turns: int = 2) -> Link:
    """(2, 2*turns) torus link on the standard torus; lk = +turns."""
    return Link(
        tuple(sample_parametric(lambda t, c=c: torus_link_points(t, c, turns), m) for c in (0, 1))
    )


def trefoil_points(t: NDArray[np.float64]) -> Points:
    return np.column_stack(
        [np.sin(t) + 2 * np.sin(2 * t), np.cos(t) - 2 * np.cos(2 * t), -np.sin(3 * t)]
    )


def figure_eight_points(t: NDArray[np.float64]) -> Points:
    rho = 2 + np.cos(2 * t)
    return np.column_stack([rho * np.cos(3 * t), rho * np.sin(3 * t), np.sin(4 * t)])


def trefoil(m: int = 512) -> PolyCurve:
    return sample_parametric(trefoil_points, m)


def figure_eight(m: int = 512) -> PolyCurve:
    return sample_parametric(figure_eight_points, m)


def connected_sum(a: PolyCurve, b: PolyCurve, gap: float = 1.0) -> PolyCurve:
    """Band sum of two knots placed on either side of a plane x = const.

    ``b`` is translated so its leftmost vertex sits ``gap`` to the right of
    the rightmost vertex of ``a``; two short bridges join those vertices and
    their successors. ``b`` is turned half a revolution about the x-axis when
    needed so the bridges do not cross.
    """
    i = int(np.argmax(a.points[:, 0]))
    ta = a.points[(i + 1) % len(a)] - a.points[i]

    def place(curve: PolyCurve) -> tuple[Points, int]:
        j = int(np.argmin(curve.points[:, 0]))
        shift = a.points[i] - curve.points[j] + np.array([gap, 0.0, 0.0])
        return curve.points + shift, j

    pb, j = place(b)
    tb = pb[(j + 1) % len(pb)] - pb[j]
    if ta[1] * tb[1] + ta[2] * tb[2] > 0:
        flip = np.diag([1.0, -1.0, -1.0])
        pb, j = place(b.transformed(flip))

    n = len(pb)
    around_b = pb[(j + 1 + np.arange(n)) % n]
    joined = np.vstack([a.points[: i + 1], around_b, a.points[i + 1 :]])
    return PolyCurve(joined, closed=True)


def granny_knot(m: int = 512, gap: float = 1.0) -> PolyCurve:
    """Connected sum of two copies of the trefoil."""
    return connected_sum(trefoil(m), trefoil(m), gap)


def read_knot(path: Path) -> Link:
    """Read ``x y z`` lines; blank lines separate components.

    Raises:
        FileNotFoundError: If the file doesn't exist
        CurveError: On malformed lines or invalid components
    """
    if not path.exists():
        msg = f"Knot file not found: {path}"
        raise FileNotFoundError(msg)

    components: list[list[list[float]]] = [[]]
    with path.open() as f:
        for number, line in enumerate(f, start=1):
            stripped = line.strip()
            if not stripped:
                if components[-1]:
                    components.append([])
                continue
            if stripped.startswith("#"):
                continue
            parts = stripped.split()
            try:
                if len(parts) != 3:
                    raise ValueError
                components[-1].append([float(x) for x in parts])
            except ValueError as e:
                msg = f"line {number}: expected 'x y z', got {stripped!r}"
                raise CurveError(msg) from e

    curves = tuple(PolyCurve(np.array(c), closed=True) for c in components if c)
    if not curves:
        msg = f"Knot file has no points: {path}"
        raise CurveError(msg)
    return Link(curves)


def format_knot(link: Link | PolyCurve) -> str:
    """Knot file text with 17 significant digits per coordinate."""
    comps = link.components if isinstance(link, Link) else (link,)
    blocks = ["\n".join(f"{x:.17g} {y:.17g} {z:.17g}" for x, y, z in c.points) for c in comps]
    return "\n\n".join(blocks) + "\n"


def write_knot(path: Path, link: Link | PolyCurve) -> None:
    """Write a knot file."""
    reports.atomic_write(path, format_knot(link))
