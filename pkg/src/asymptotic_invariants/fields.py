"""Divergence-free vector fields on compact domains, their flows and energies.

Shipped fields:

- ``rotation_torus``: rigid rotation (-y, x, 0) on the solid torus with major
  radius 2 and minor radius 1 around the z-axis.
- ``tube_pair``: two flux tubes of radius r around the unit circles
  C1 (z=0, centred at the origin) and C2 (y=0, centred at (1,0,0)), which form
  a Hopf link. Inside a tube the field runs along the core direction with
  speed v0 (1 - (s/r)^2)^2, s being the distance to the core.
- ``beltrami_ball``: the lowest axisymmetric Beltrami field on a ball,
  curl X = lambda X, tangent to the sphere and scaled to |X(0)| = 1.

Field config files hold ``key=value`` lines. ``#`` starts a comment. Keys:

    field      rotation_torus | tube_pair | beltrami_ball   (required)
    v0, r      tube_pair speed and tube radius (defaults 1.0, 0.4)
    radius     beltrami_ball radius (default 1.0)
    diffeo     shear | rotation                               (optional)
    amplitude  shear amplitude (default 0.2)
    axis       rotation axis as x,y,z (default 0,0,1)
    angle      rotation angle in radians (default pi/2)
"""

import itertools
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from functools import cache
from pathlib import Path
from typing import Literal, NotRequired, TypedDict, override

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import dblquad
from scipy.optimize import brentq
from scipy.spatial.transform import Rotation
from scipy.special import spherical_jn

from asymptotic_invariants import sampling
from asymptotic_invariants.confint import IntegralEstimate

logger = logging.getLogger(__name__)

DEFAULT_DT = 1e-3

Points = NDArray[np.float64]
Bounds = tuple[NDArray[np.float64], NDArray[np.float64]]


class ConfigError(ValueError):
    """Raised for malformed field configs and unknown fields or diffeos."""


class DomainError(RuntimeError):
    """Raised when a stencil or an orbit leaves its domain."""


def _as_points(p: ArrayLike) -> Points:
    return np.atleast_2d(np.asarray(p, dtype=np.float64))


class Domain(ABC):
    """Compact region of space with closed-form volume."""

    @property
    @abstractmethod
    def volume(self) -> float: ...

    @abstractmethod
    def contains(self, p: ArrayLike, tol: float = 0.0) -> NDArray[np.bool_]:
        """Membership of each point, allowing ``tol`` outside the boundary."""

    @abstractmethod
    def bounds(self) -> Bounds:
        """Axis-aligned bounding box (lower, upper)."""

    @abstractmethod
    def boundary_sample(self, rng: np.random.Generator, n: int) -> tuple[Points, Points]:
        """Points on the boundary and their unit outward normals."""

    @property
    @abstractmethod
    def interior_point(self) -> NDArray[np.float64]:
        """A fixed interior point, used as a short-path waypoint."""

    @property
    def diameter(self) -> float:
        lo, hi = self.bounds()
        return float(np.linalg.norm(hi - lo))

    def sample_uniform(self, rng: np.random.Generator, size: int) -> tuple[Points, int]:
        """Uniform points by rejection in the bounding box.

        Returns:
            (points, candidates drawn)
        """
        lo, hi = self.bounds()
        accepted: list[Points] = []
        have = 0
        drawn = 0
        while have < size:
            need = size - have
            candidates = lo + (hi - lo) * rng.random((max(2 * need, 64), 3))
            hits = np.flatnonzero(self.contains(candidates))
            if len(hits) >= need:
                hits = hits[:need]
                drawn += int(hits[-1]) + 1
            else:
                drawn += len(candidates)
            accepted.append(candidates[hits])
            have += len(hits)
        return np.concatenate(accepted), drawn


@dataclass(frozen=True)
class Ball(Domain):
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)
    radius: float = 1.0

    @property
    @override
    def volume(self) -> float:
        return 4.0 / 3.0 * math.pi * self.radius**3

    @override
    def contains(self, p: ArrayLike, tol: float = 0.0) -> NDArray[np.bool_]:
        q = _as_points(p) - np.asarray(self.center)
        return np.linalg.norm(q, axis=1) <= self.radius + tol

    @override
    def bounds(self) -> Bounds:
        c = np.asarray(self.center, dtype=np.float64)
        return c - self.radius, c + self.radius

    @override
    def boundary_sample(self, rng: np.random.Generator, n: int) -> tuple[Points, Points]:
        normals = rng.standard_normal((n, 3))
        normals /= np.linalg.norm(normals, axis=1, keepdims=True)
        return np.asarray(self.center) + self.radius * normals, normals

    @property
    @override
    def interior_point(self) -> NDArray[np.float64]:
        return np.asarray(self.center, dtype=np.float64)


def _tube_coordinates(
    p: Points,
    center: NDArray[np.float64],
    normal: NDArray[np.float64],
    core_radius: float,
) -> tuple[NDArray[np.float64], Points, NDArray[np.float64], NDArray[np.float64]]:
    """(height, in-plane offset, in-plane distance, distance to the core circle)."""
    q = p - center
    height = q @ normal
    offset = q - height[:, None] * normal
    rho = np.linalg.norm(offset, axis=1)
    s = np.sqrt((rho - core_radius) ** 2 + height**2)
    return height, offset, rho, s


def _torus_boundary(
    rng: np.random.Generator,
    n: int,
    center: NDArray[np.float64],
    normal: NDArray[np.float64],
    major: float,
    minor: float,
) -> tuple[Points, Points]:
    ref = np.array([1.0, 0.0, 0.0]) if abs(normal[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = ref - (ref @ normal) * normal
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(normal, e1)

    phi = rng.random(n) * 2 * math.pi
    theta = rng.random(n) * 2 * math.pi
    radial = np.cos(phi)[:, None] * e1 + np.sin(phi)[:, None] * e2
    normals = np.cos(theta)[:, None] * radial + np.sin(theta)[:, None] * normal
    points = center + major * radial + minor * normals
    return points, normals


@dataclass(frozen=True)
class SolidTorus(Domain):
    """Solid torus around the z-axis through the origin."""

    major: float = 2.0
    minor: float = 1.0

    @property
    @override
    def volume(self) -> float:
        return 2 * math.pi**2 * self.major * self.minor**2

    @override
    def contains(self, p: ArrayLike, tol: float = 0.0) -> NDArray[np.bool_]:
        q = _as_points(p)
        _, _, _, s = _tube_coordinates(q, np.zeros(3), np.array([0.0, 0.0, 1.0]), self.major)
        return s <= self.minor + tol

    @override
    def bounds(self) -> Bounds:
        outer = self.major + self.minor
        return np.array([-outer, -outer, -self.minor]), np.array([outer, outer, self.minor])

    @override
    def boundary_sample(self, rng: np.random.Generator, n: int) -> tuple[Points, Points]:
        axis = np.array([0.0, 0.0, 1.0])
        return _torus_boundary(rng, n, np.zeros(3), axis, self.major, self.minor)

    @property
    @override
    def interior_point(self) -> NDArray[np.float64]:
        return np.array([self.major, 0.0, 0.0])


TUBE_CENTERS = (np.zeros(3), np.array([1.0, 0.0, 0.0]))
TUBE_NORMALS = (np.array([0.0, 0.0, 1.0]), np.array([0.0, 1.0, 0.0]))


@dataclass(frozen=True)
class TubePair(Domain):
    """Two solid tubes of radius r around the Hopf-linked unit circles."""

    r: float = 0.4

    def __post_init__(self) -> None:
        if not 0 < self.r < 0.5:
            msg = f"Tube radius must be in (0, 0.5) for disjoint tubes, got {self.r}"
            raise ConfigError(msg)

    @property
    @override
    def volume(self) -> float:
        return 4 * math.pi**2 * self.r**2

    def tube_distances(self, p: ArrayLike) -> list[NDArray[np.float64]]:
        """Distance from each point to each core circle."""
        q = _as_points(p)
        cores = zip(TUBE_CENTERS, TUBE_NORMALS, strict=True)
        return [_tube_coordinates(q, c, n, 1.0)[3] for c, n in cores]

    @override
    def contains(self, p: ArrayLike, tol: float = 0.0) -> NDArray[np.bool_]:
        s1, s2 = self.tube_distances(p)
        return (s1 <= self.r + tol) | (s2 <= self.r + tol)

    @override
    def bounds(self) -> Bounds:
        r = self.r
        return np.array([-1 - r, -1 - r, -1 - r]), np.array([2 + r, 1 + r, 1 + r])

    @override
    def boundary_sample(self, rng: np.random.Generator, n: int) -> tuple[Points, Points]:
        half = n // 2
        parts = [
            _torus_boundary(rng, size, c, nrm, 1.0, self.r)
            for size, c, nrm in zip((half, n - half), TUBE_CENTERS, TUBE_NORMALS, strict=True)
        ]
        return np.vstack([p for p, _ in parts]), np.vstack([nm for _, nm in parts])

    @property
    @override
    def interior_point(self) -> NDArray[np.float64]:
        return np.array([1.0, 0.0, 0.0])


class VolumeDiffeo(ABC):
    """Volume-preserving diffeomorphism of space."""

    name: str = "diffeo"

    @abstractmethod
    def forward(self, p: ArrayLike) -> Points: ...

    @abstractmethod
    def inverse(self, p: ArrayLike) -> Points: ...

    @abstractmethod
    def jacobian(self, p: ArrayLike) -> NDArray[np.float64]:
        """Derivative of ``forward`` at each point, shape (N, 3, 3)."""

    def bounds(self, box: Bounds) -> Bounds:
        """A box containing the image of ``box``."""
        lo, hi = box
        corners = np.array(list(itertools.product(*zip(lo, hi, strict=True))), dtype=np.float64)
        image = self.forward(corners)
        return image.min(axis=0), image.max(axis=0)

    def describe(self) -> dict[str, object]:
        return {"kind": self.name}


@dataclass(frozen=True)
class IdentityDiffeo(VolumeDiffeo):
    name: str = "identity"

    @override
    def forward(self, p: ArrayLike) -> Points:
        return _as_points(p).copy()

    @override
    def inverse(self, p: ArrayLike) -> Points:
        return _as_points(p).copy()

    @override
    def jacobian(self, p: ArrayLike) -> NDArray[np.float64]:
        return np.broadcast_to(np.eye(3), (len(_as_points(p)), 3, 3)).copy()


@dataclass(frozen=True)
class RotationDiffeo(VolumeDiffeo):
    axis: tuple[float, float, float] = (0.0, 0.0, 1.0)
    angle: float = math.pi / 2
    name: str = "rotation"

    @property
    def matrix(self) -> NDArray[np.float64]:
        axis = np.asarray(self.axis, dtype=np.float64)
        return Rotation.from_rotvec(self.angle * axis / np.linalg.norm(axis)).as_matrix()

    @override
    def forward(self, p: ArrayLike) -> Points:
        return _as_points(p) @ self.matrix.T

    @override
    def inverse(self, p: ArrayLike) -> Points:
        return _as_points(p) @ self.matrix

    @override
    def jacobian(self, p: ArrayLike) -> NDArray[np.float64]:
        return np.broadcast_to(self.matrix, (len(_as_points(p)), 3, 3)).copy()

    @override
    def describe(self) -> dict[str, object]:
        return {"kind": self.name, "axis": list(self.axis), "angle": self.angle}


@dataclass(frozen=True)
class ShearDiffeo(VolumeDiffeo):
    """p[direction] += amplitude * sin(p[transverse]); the default is (x + A sin z, y, z)."""

    amplitude: float = 0.2
    direction: int = 0
    transverse: int = 2
    name: str = "shear"

    def __post_init__(self) -> None:
        if self.direction == self.transverse:
            msg = "Shear direction and transverse coordinate must differ"
            raise ConfigError(msg)

    def _shift(self, p: Points, sign: float) -> Points:
        out = p.copy()
        out[:, self.direction] += sign * self.amplitude * np.sin(p[:, self.transverse])
        return out

    @override
    def forward(self, p: ArrayLike) -> Points:
        return self._shift(_as_points(p), 1.0)

    @override
    def inverse(self, p: ArrayLike) -> Points:
        return self._shift(_as_points(p), -1.0)

    @override
    def jacobian(self, p: ArrayLike) -> NDArray[np.float64]:
        q = _as_points(p)
        jac = np.broadcast_to(np.eye(3), (len(q), 3, 3)).copy()
        jac[:, self.direction, self.transverse] = self.amplitude * np.cos(q[:, self.transverse])
        return jac

    @override
    def bounds(self, box: Bounds) -> Bounds:
        lo, hi = box[0].copy(), box[1].copy()
        lo[self.direction] -= abs(self.amplitude)
        hi[self.direction] += abs(self.amplitude)
        return lo, hi

    @override
    def describe(self) -> dict[str, object]:
        return {"kind": self.name, "amplitude": self.amplitude}


@dataclass(frozen=True)
class PushedDomain(Domain):
    """Image g(S) of a domain under a volume-preserving map."""

    inner: Domain
    diffeo: VolumeDiffeo

    @property
    @override
    def volume(self) -> float:
        return self.inner.volume

    @override
    def contains(self, p: ArrayLike, tol: float = 0.0) -> NDArray[np.bool_]:
        return self.inner.contains(self.diffeo.inverse(p), tol)

    @override
    def bounds(self) -> Bounds:
        return self.diffeo.bounds(self.inner.bounds())

    @override
    def boundary_sample(self, rng: np.random.Generator, n: int) -> tuple[Points, Points]:
        points, normals = self.inner.boundary_sample(rng, n)
        # Normals transform with the inverse transpose of the derivative.
        inv_t = np.linalg.inv(self.diffeo.jacobian(points)).transpose(0, 2, 1)
        pushed = np.einsum("nij,nj->ni", inv_t, normals)
        pushed /= np.linalg.norm(pushed, axis=1, keepdims=True)
        return self.diffeo.forward(points), pushed

    @property
    @override
    def interior_point(self) -> NDArray[np.float64]:
        return self.diffeo.forward(self.inner.interior_point)[0]

    @override
    def sample_uniform(self, rng: np.random.Generator, size: int) -> tuple[Points, int]:
        # g preserves volume, so images of uniform points are uniform.
        points, drawn = self.inner.sample_uniform(rng, size)
        return self.diffeo.forward(points), drawn


class VectorField(ABC):
    """Smooth vector field on a compact domain."""

    name: str = "field"

    @property
    @abstractmethod
    def domain(self) -> Domain: ...

    @abstractmethod
    def __call__(self, p: ArrayLike) -> Points:
        """Field values at each point, shape (N, 3)."""

    def describe(self) -> dict[str, object]:
        return {"field": self.name}


@dataclass(frozen=True)
class RigidRotation(VectorField):
    torus: SolidTorus = field(default_factory=SolidTorus)
    name: str = "rotation_torus"

    @property
    @override
    def domain(self) -> Domain:
        return self.torus

    @override
    def __call__(self, p: ArrayLike) -> Points:
        q = _as_points(p)
        return np.column_stack([-q[:, 1], q[:, 0], np.zeros(len(q))])


@dataclass(frozen=True)
class TubePairField(VectorField):
    v0: float = 1.0
    r: float = 0.4
    name: str = "tube_pair"

    @property
    @override
    def domain(self) -> Domain:
        return TubePair(self.r)

    def profile(self, s: NDArray[np.float64]) -> NDArray[np.float64]:
        """Speed as a function of the distance to the core."""
        inside = s < self.r
        return np.where(inside, self.v0 * (1 - (s / self.r) ** 2) ** 2, 0.0)

    @override
    def __call__(self, p: ArrayLike) -> Points:
        q = _as_points(p)
        out = np.zeros_like(q)
        for center, normal in zip(TUBE_CENTERS, TUBE_NORMALS, strict=True):
            _, offset, rho, s = _tube_coordinates(q, center, normal, 1.0)
            speed = self.profile(s)
            with np.errstate(divide="ignore", invalid="ignore"):
                direction = np.cross(normal, offset) / rho[:, None]
            out += np.where((speed > 0)[:, None], speed[:, None] * direction, 0.0)
        return out

    @override
    def describe(self) -> dict[str, object]:
        return {"field": self.name, "v0": self.v0, "r": self.r}


def beltrami_eigenvalue(radius: float = 1.0) -> float:
    """Smallest lambda with j1(lambda * radius) = 0, i.e. the first root of j1 over radius."""
    root = brentq(lambda x: float(spherical_jn(1, x)), 4.0, 5.0, xtol=1e-14)
    return float(root) / radius


@dataclass(frozen=True)
class BeltramiBall(VectorField):
    """Axisymmetric field with curl X = lambda X, tangent to the sphere of ``radius``."""

    radius: float = 1.0
    name: str = "beltrami_ball"

    @property
    @override
    def domain(self) -> Domain:
        return Ball(radius=self.radius)

    @property
    def eigenvalue(self) -> float:
        return _cached_eigenvalue(self.radius)

    def _radial(self, r: NDArray[np.float64]) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        """h(r) = j1(lam r) / r and h'(r) / r, with series values near r = 0."""
        lam = self.eigenvalue
        small = r < 1e-4
        safe = np.where(small, 1.0, r)
        x = lam * safe
        j = spherical_jn(1, x)
        dj = spherical_jn(1, x, derivative=True)
        h = j / safe
        dh_over_r = (lam * dj * safe - j) / safe**3
        h = np.where(small, lam / 3 - lam**3 * r**2 / 30, h)
        dh_over_r = np.where(small, -(lam**3) / 15, dh_over_r)
        return h, dh_over_r

    @override
    def __call__(self, p: ArrayLike) -> Points:
        q = _as_points(p)
        lam = self.eigenvalue
        x, y, z = q[:, 0], q[:, 1], q[:, 2]
        h, g = self._radial(np.linalg.norm(q, axis=1))
        c = 3 / (2 * lam)
        return c * np.column_stack(
            [-x * z * g - lam * y * h, -y * z * g + lam * x * h, 2 * h + (x * x + y * y) * g]
        )

    @override
    def describe(self) -> dict[str, object]:
        return {"field": self.name, "radius": self.radius, "eigenvalue": self.eigenvalue}


@cache
def _cached_eigenvalue(radius: float) -> float:
    return beltrami_eigenvalue(radius)


@dataclass(frozen=True)
class PushforwardField(VectorField):
    """(g_* X)(x) = Dg(g^-1 x) X(g^-1 x) on g(S)."""

    inner: VectorField
    diffeo: VolumeDiffeo
    name: str = field(init=False, default="")

    def __post_init__(self) -> None:
        object.__setattr__(self, "name", f"{self.inner.name}@{self.diffeo.name}")

    @property
    @override
    def domain(self) -> Domain:
        return PushedDomain(self.inner.domain, self.diffeo)

    @override
    def __call__(self, p: ArrayLike) -> Points:
        back = self.diffeo.inverse(p)
        return np.einsum("nij,nj->ni", self.diffeo.jacobian(back), self.inner(back))

    @override
    def describe(self) -> dict[str, object]:
        return {**self.inner.describe(), "diffeo": self.diffeo.describe()}


def pushforward(x: VectorField, g: VolumeDiffeo) -> VectorField:
    """Push a field forward along a volume-preserving diffeomorphism."""
    if isinstance(g, IdentityDiffeo):
        return x
    return PushforwardField(x, g)


def divergence(x: VectorField, p: ArrayLike, h: float = 1e-4) -> NDArray[np.float64]:
    """Central-difference divergence at each point.

    Raises:
        DomainError: If a stencil point lies outside the domain
    """
    q = _as_points(p)
    total = np.zeros(len(q))
    for axis in range(3):
        step = np.zeros(3)
        step[axis] = h
        plus, minus = q + step, q - step
        if not (np.all(x.domain.contains(plus)) and np.all(x.domain.contains(minus))):
            msg = f"Divergence stencil of width {h} leaves the domain"
            raise DomainError(msg)
        total += (x(plus)[:, axis] - x(minus)[:, axis]) / (2 * h)
    return total


def seed_sampler(domain: Domain, n: int, seed: int) -> Points:
    """``n`` i.i.d. uniform points of the domain, deterministic in ``seed``."""
    sizes = sampling.block_sizes(n)
    blocks = [
        domain.sample_uniform(sampling.block_rng(seed, "seeds", b), size)[0]
        for b, size in enumerate(sizes)
    ]
    return np.concatenate(blocks)


def acceptance_rate(domain: Domain, n: int, seed: int) -> float:
    """Fraction of bounding-box candidates accepted while drawing n points."""
    _, drawn = domain.sample_uniform(sampling.block_rng(seed, "acceptance", 0), n)
    return n / drawn


def _gradient_norms(x: VectorField, points: Points, h: float) -> NDArray[np.float64]:
    jac = np.empty((len(points), 3, 3))
    for axis in range(3):
        step = np.zeros(3)
        step[axis] = h
        jac[:, :, axis] = (x(points + step) - x(points - step)) / (2 * h)
    return np.linalg.norm(jac, ord=2, axis=(1, 2))


@cache
def dt_max(x: VectorField, n: int = 1000, seed: int = 0) -> float:
    """Stable step bound 0.1 / max |grad X| over sampled interior points."""
    points = seed_sampler(x.domain, n, seed)
    largest = float(np.max(_gradient_norms(x, points, 1e-5)))
    return math.inf if largest == 0 else 0.1 / largest


def boundary_tangency(x: VectorField, n: int = 10_000, seed: int = 0) -> float:
    """Largest |X . n| / |X| over boundary samples where X is not negligible."""
    points, normals = x.domain.boundary_sample(sampling.block_rng(seed, "boundary", 0), n)
    values = x(points)
    size = np.linalg.norm(values, axis=1)
    live = size > 1e-12
    if not np.any(live):
        return 0.0
    return float(np.max(np.abs(np.einsum("ni,ni->n", values[live], normals[live])) / size[live]))


def max_divergence(x: VectorField, n: int = 10_000, seed: int = 0, h: float = 1e-4) -> float:
    """Largest |div X| over interior points whose stencils stay in the domain."""
    points = seed_sampler(x.domain, 2 * n, seed)
    keep = np.ones(len(points), dtype=bool)
    for axis in range(3):
        step = np.zeros(3)
        step[axis] = h
        keep &= x.domain.contains(points + step) & x.domain.contains(points - step)
    return float(np.max(np.abs(divergence(x, points[keep][:n], h))))


def _rk4_step(x: VectorField, p: Points, dt: float) -> Points:
    k1 = x(p)
    k2 = x(p + 0.5 * dt * k1)
    k3 = x(p + 0.5 * dt * k2)
    k4 = x(p + dt * k3)
    return p + dt * (k1 + 2 * k2 + 2 * k3 + k4) / 6


def flow(
    x: VectorField,
    seeds: ArrayLike,
    T: float,
    dt: float = DEFAULT_DT,
    stride: int = 1,
) -> Points:
    """Fixed-step RK4 orbits of all seeds at once.

    Args:
        x: Vector field
        seeds: Start points, shape (N, 3)
        T: Flow time
        dt: Nominal step; adjusted down so that T is a whole number of steps
        stride: Record every ``stride`` steps (the final state is always recorded)

    Returns:
        Array of shape (N, records, 3)

    Raises:
        ValueError: If dt exceeds dt_max(x) or T is negative
        DomainError: If an orbit leaves the domain beyond tolerance
    """
    if T < 0:
        msg = f"Flow time must be non-negative, got {T}"
        raise ValueError(msg)
    if dt > dt_max(x):
        msg = f"Step {dt} exceeds dt_max {dt_max(x):.3g} for {x.name}"
        raise ValueError(msg)

    p = _as_points(seeds).copy()
    steps = max(1, math.ceil(T / dt - 1e-9)) if T > 0 else 0
    h = T / steps if steps else 0.0
    tol = 1e-6 * x.domain.diameter

    records = [p.copy()]
    for step in range(1, steps + 1):
        p = _rk4_step(x, p, h)
        if step % stride == 0 or step == steps:
            if not np.all(x.domain.contains(p, tol)):
                msg = f"Orbit of {x.name} left the domain at t={step * h:.4g}"
                raise DomainError(msg)
            records.append(p.copy())

    logger.debug("%s: %d orbits, %d steps of %.3g", x.name, len(p), steps, h)
    return np.stack(records, axis=1)


def integrate_orbit(
    x: VectorField,
    x0: ArrayLike,
    T: float,
    dt: float = DEFAULT_DT,
    stride: int = 1,
) -> Points:
    """RK4 orbit of one seed, shape (records, 3).

    Raises:
        DomainError: If the seed is outside the domain or the orbit escapes
    """
    seed = _as_points(x0)
    if not np.all(x.domain.contains(seed)):
        msg = f"Seed {seed[0]} is outside the domain of {x.name}"
        raise DomainError(msg)
    return flow(x, seed, T, dt, stride)[0]


def volume_preservation_check(
    x: VectorField,
    x0: ArrayLike,
    T: float,
    dt: float = DEFAULT_DT,
    h: float = 1e-5,
) -> float:
    """|det(d phi_T / dx) - 1| at x0, by central differences of the flow map."""
    base = _as_points(x0)[0]
    stencil = np.array([base + sign * h * np.eye(3)[axis] for axis in range(3) for sign in (1, -1)])
    if not np.all(x.domain.contains(stencil)):
        msg = "Jacobian stencil leaves the domain"
        raise DomainError(msg)

    ends = flow(x, stencil, T, dt)[:, -1]
    jac = np.column_stack([(ends[2 * a] - ends[2 * a + 1]) / (2 * h) for a in range(3)])
    return abs(float(np.linalg.det(jac)) - 1.0)


def energy(
    x: VectorField,
    exponent: float = 2.0,
    mc: int = 1_000_000,
    seed: int = 0,
) -> IntegralEstimate:
    """Monte Carlo estimate of the integral of |X|^exponent over the domain."""
    if exponent not in (2.0, 1.5):
        msg = f"Energy exponent must be 2 or 3/2, got {exponent}"
        raise ValueError(msg)

    volume = x.domain.volume

    def block(rng: np.random.Generator, size: int) -> sampling.BlockResult:
        points, _ = x.domain.sample_uniform(rng, size)
        return sampling.summarize(volume * np.linalg.norm(x(points), axis=1) ** exponent)

    result = sampling.run_blocks(block, mc, seed, f"energy{exponent:g}")
    logger.info("E_%g(%s) = %.6g +/- %.2g", exponent, x.name, result.mean, result.std_error)
    return IntegralEstimate(result.mean, result.std_error, result.samples, "monte-carlo")


def tube_flux(v0: float = 1.0, r: float = 0.4) -> float:
    """Flux of one tube, pi v0 r^2 / 3."""
    return math.pi * v0 * r**2 / 3


def tube_pair_helicity(v0: float = 1.0, r: float = 0.4) -> float:
    """Helicity 2 Phi^2 of the linked tube pair (lk = 1)."""
    return 2 * tube_flux(v0, r) ** 2


def tube_pair_quadratic_helicity(v0: float = 1.0, r: float = 0.4) -> float:
    """Quadratic helicity 2 Q^2 of the tube pair.

    Q is the integral over one tube of (v / L)^2, L = 2 pi rho being the length
    of the orbit through the point; over a tube cross-section this is the
    integral of v^2 / (2 pi rho) s ds dtheta with rho = 1 + s cos theta.
    """
    tube = TubePairField(v0, r)

    def integrand(s: float, theta: float) -> float:
        rho = 1 + s * math.cos(theta)
        v = float(tube.profile(np.array([s]))[0])
        return v * v / (2 * math.pi * rho) * s

    q, _ = dblquad(integrand, 0.0, 2 * math.pi, 0.0, r, epsabs=1e-12, epsrel=1e-10)
    return 2 * q * q


def rotation_torus_energy(major: float = 2.0, minor: float = 1.0) -> float:
    """L2 energy of (-y, x, 0) on the solid torus: 2 pi^2 (R^3 + 3 R r^2 / 4) r^2."""
    return 2 * math.pi**2 * (major**3 + 0.75 * major * minor**2) * minor**2


class FieldConfig(TypedDict):
    field: Literal["rotation_torus", "tube_pair", "beltrami_ball"]
    v0: NotRequired[float]
    r: NotRequired[float]
    radius: NotRequired[float]
    diffeo: NotRequired[Literal["shear", "rotation"]]
    amplitude: NotRequired[float]
    axis: NotRequired[tuple[float, float, float]]
    angle: NotRequired[float]


_FIELDS = ("rotation_torus", "tube_pair", "beltrami_ball")
_DIFFEOS = ("shear", "rotation")
_FLOAT_KEYS = ("v0", "r", "radius", "amplitude", "angle")


def parse_field_config(text: str, source: str = "<string>") -> FieldConfig:
    """Parse ``key=value`` lines into a field config.

    Raises:
        ConfigError: On malformed lines, unknown keys or values
    """
    raw: dict[str, str] = {}
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            msg = f"{source}:{number}: expected key=value, got {stripped!r}"
            raise ConfigError(msg)
        key, value = (part.strip() for part in stripped.split("=", 1))
        if key not in ("field", "diffeo", "axis", *_FLOAT_KEYS):
            msg = f"{source}:{number}: unknown key {key!r}"
            raise ConfigError(msg)
        raw[key] = value

    name = raw.get("field")
    if name not in _FIELDS:
        msg = f"{source}: unknown or missing field {name!r}; expected one of {', '.join(_FIELDS)}"
        raise ConfigError(msg)
    config: FieldConfig = {"field": name}

    try:
        for key in _FLOAT_KEYS:
            if key in raw:
                config[key] = float(raw[key])
        if "axis" in raw:
            parts = [float(v) for v in raw["axis"].split(",")]
            if len(parts) != 3:
                raise ValueError(raw["axis"])
            config["axis"] = (parts[0], parts[1], parts[2])
    except ValueError as e:
        msg = f"{source}: malformed number {e}"
        raise ConfigError(msg) from e

    if "diffeo" in raw:
        diffeo = raw["diffeo"]
        if diffeo not in _DIFFEOS:
            msg = f"{source}: unknown diffeo {diffeo!r}; expected one of {', '.join(_DIFFEOS)}"
            raise ConfigError(msg)
        config["diffeo"] = diffeo

    return config


def load_field_config(path: Path) -> FieldConfig:
    """Load a field config file.

    Raises:
        FileNotFoundError: If the file doesn't exist
        ConfigError: If the file is malformed
    """
    if not path.exists():
        msg = f"config not found: {path}"
        raise FileNotFoundError(msg)
    return parse_field_config(path.read_text(), str(path))


def build_diffeo(config: FieldConfig) -> VolumeDiffeo:
    match config.get("diffeo"):
        case None:
            return IdentityDiffeo()
        case "shear":
            return ShearDiffeo(amplitude=config.get("amplitude", 0.2))
        case "rotation":
            return RotationDiffeo(
                axis=config.get("axis", (0.0, 0.0, 1.0)),
                angle=config.get("angle", math.pi / 2),
            )
        case other:
            msg = f"unknown diffeo {other!r}"
            raise ConfigError(msg)


def build_field(config: FieldConfig) -> VectorField:
    """Construct the field a config describes, pushed forward if it names a diffeo."""
    match config["field"]:
        case "rotation_torus":
            base: VectorField = RigidRotation()
        case "tube_pair":
            base = TubePairField(config.get("v0", 1.0), config.get("r", 0.4))
        case "beltrami_ball":
            base = BeltramiBall(config.get("radius", 1.0))
        case other:
            msg = f"unknown field {other!r}"
            raise ConfigError(msg)
    field_ = pushforward(base, build_diffeo(config))
    logger.info("built field %s", field_.describe())
    return field_
