"""Tests for domains, fields, flows and field configs."""

import math

import numpy as np
import pytest

from asymptotic_invariants import config, fields
from asymptotic_invariants.fields import ConfigError, DomainError

FIELDS = [fields.RigidRotation(), fields.TubePairField(), fields.BeltramiBall()]


def test_domain_volumes():
    """Test closed-form volumes of the shipped domains."""
    assert fields.SolidTorus().volume == pytest.approx(4 * math.pi**2)
    assert fields.TubePair(0.4).volume == pytest.approx(4 * math.pi**2 * 0.16)
    assert fields.Ball(radius=2.0).volume == pytest.approx(32 * math.pi / 3)


def test_acceptance_rate_matches_volume():
    """Test rejection sampling accepts the volume fraction of the bounding box."""
    torus = fields.SolidTorus()
    lo, hi = torus.bounds()
    expected = torus.volume / float(np.prod(hi - lo))
    assert fields.acceptance_rate(torus, 20_000, seed=0) == pytest.approx(expected, abs=0.02)


def test_seed_sampler():
    """Test uniform seeds are inside the domain and reproducible."""
    domain = fields.TubePair()
    seeds = fields.seed_sampler(domain, 500, seed=4)
    assert seeds.shape == (500, 3)
    assert np.all(domain.contains(seeds))
    np.testing.assert_array_equal(seeds, fields.seed_sampler(domain, 500, seed=4))


def test_tube_radius_must_keep_tubes_disjoint():
    """Test tube radii of 0.5 or more are rejected."""
    with pytest.raises(ConfigError, match="radius"):
        _ = fields.TubePair(0.6)


def test_beltrami_eigenvalue():
    """Test the eigenvalue is the first zero of j1."""
    assert fields.beltrami_eigenvalue() == pytest.approx(4.493409457909064, rel=1e-10)
    assert fields.beltrami_eigenvalue(2.0) == pytest.approx(4.493409457909064 / 2, rel=1e-10)


@pytest.mark.parametrize("x", FIELDS, ids=lambda x: x.name)
def test_divergence_free(x: fields.VectorField):
    """Test every shipped field is divergence-free."""
    assert fields.max_divergence(x, n=2000) < 1e-5


def test_divergence_stencil_leaves_domain():
    """Test a stencil poking out of the ball is rejected."""
    x = fields.BeltramiBall()
    assert abs(fields.divergence(x, [[0.1, 0.2, 0.3]])[0]) < 1e-5
    with pytest.raises(DomainError, match="leaves the domain"):
        _ = fields.divergence(x, [[1.0, 0.0, 0.0]])


@pytest.mark.parametrize("x", FIELDS, ids=lambda x: x.name)
def test_tangent_to_boundary(x: fields.VectorField):
    """Test every shipped field is tangent to its boundary."""
    assert fields.boundary_tangency(x, n=2000) < 1e-6


def test_beltrami_curl():
    """Test curl X = lambda X at interior points."""
    x = fields.BeltramiBall()
    points = fields.seed_sampler(fields.Ball(radius=0.8), 50, seed=1)
    h = 1e-5
    jac = np.empty((len(points), 3, 3))
    for axis in range(3):
        step = np.zeros(3)
        step[axis] = h
        jac[:, :, axis] = (x(points + step) - x(points - step)) / (2 * h)
    curl = np.column_stack(
        [jac[:, 2, 1] - jac[:, 1, 2], jac[:, 0, 2] - jac[:, 2, 0], jac[:, 1, 0] - jac[:, 0, 1]]
    )
    np.testing.assert_allclose(curl, x.eigenvalue * x(points), atol=1e-6)


def test_shear_diffeo():
    """Test the shear is invertible with unit Jacobian determinant."""
    g = fields.ShearDiffeo(amplitude=0.3)
    p = fields.seed_sampler(fields.Ball(), 20, seed=2)
    np.testing.assert_allclose(g.inverse(g.forward(p)), p, atol=1e-12)
    np.testing.assert_allclose(np.linalg.det(g.jacobian(p)), 1.0)
    with pytest.raises(ConfigError):
        _ = fields.ShearDiffeo(direction=1, transverse=1)


def test_rotation_diffeo_is_orthogonal():
    """Test the rotation diffeo is a rotation."""
    m = fields.RotationDiffeo(axis=(1.0, 1.0, 0.0), angle=0.7).matrix
    np.testing.assert_allclose(m @ m.T, np.eye(3), atol=1e-12)
    assert np.linalg.det(m) == pytest.approx(1.0)


def test_pushforward():
    """Test pushed fields keep the volume and map orbits to orbits."""
    x = fields.TubePairField()
    g = fields.ShearDiffeo(amplitude=0.2)
    pushed = fields.pushforward(x, g)

    assert pushed.name == "tube_pair@shear"
    assert pushed.domain.volume == x.domain.volume
    assert fields.pushforward(x, fields.IdentityDiffeo()) is x

    p = np.array([[1.0, 0.0, 0.15]])
    orbit = fields.integrate_orbit(x, p, 1.0, 0.01)
    pushed_orbit = fields.integrate_orbit(pushed, g.forward(p), 1.0, 0.01)
    np.testing.assert_allclose(pushed_orbit, g.forward(orbit), atol=1e-6)


def test_rigid_rotation_period():
    """Test the rigid rotation returns every point after time 2 pi."""
    x = fields.RigidRotation()
    seeds = fields.seed_sampler(x.domain, 10, seed=0)
    ends = fields.flow(x, seeds, 2 * math.pi, 0.01)[:, -1]
    np.testing.assert_allclose(ends, seeds, atol=1e-7)


def test_flow_stride_records():
    """Test strided flows record the start, every stride and the end."""
    x = fields.RigidRotation()
    out = fields.flow(x, [[2.0, 0.0, 0.0]], 1.0, 0.01, stride=10)
    assert out.shape == (1, 11, 3)


def test_flow_rejects_bad_arguments():
    """Test negative times and unstable steps."""
    x = fields.RigidRotation()
    with pytest.raises(ValueError, match="non-negative"):
        _ = fields.flow(x, [[2.0, 0.0, 0.0]], -1.0)
    with pytest.raises(ValueError, match="dt_max"):
        _ = fields.flow(x, [[2.0, 0.0, 0.0]], 1.0, dt=0.5)


def test_integrate_orbit_outside_seed():
    """Test seeds outside the domain are rejected."""
    with pytest.raises(DomainError, match="outside"):
        _ = fields.integrate_orbit(fields.RigidRotation(), [0.0, 0.0, 0.0], 1.0)


def test_volume_preservation():
    """Test the flow map has unit Jacobian determinant."""
    x = fields.TubePairField()
    assert fields.volume_preservation_check(x, [1.0, 0.0, 0.15], 5.0, 0.01) < 1e-5


def test_energy_rotation_torus():
    """Test the Monte Carlo L2 energy against its closed form."""
    est = fields.energy(fields.RigidRotation(), 2.0, 200_000, seed=0)
    target = fields.rotation_torus_energy()
    assert abs(est.value - target) <= 4 * est.std_error
    assert est.samples == 200_000


def test_energy_exponent():
    """Test only the two supported exponents are accepted."""
    with pytest.raises(ValueError, match="exponent"):
        _ = fields.energy(fields.RigidRotation(), 3.0, 100)


def test_closed_forms():
    """Test tube pair helicity and quadratic helicity."""
    flux = math.pi * 0.16 / 3
    assert fields.tube_pair_helicity() == pytest.approx(2 * flux**2)
    q2 = fields.tube_pair_quadratic_helicity()
    assert q2 > 0
    # Cauchy-Schwarz against the probability measure.
    vol = fields.TubePair().volume
    assert q2 / vol**2 >= (fields.tube_pair_helicity() / vol**2) ** 2


def test_parse_field_config():
    """Test a config with a diffeo."""
    cfg = fields.parse_field_config("field = tube_pair  # tubes\nr=0.3\ndiffeo=shear\n")
    assert cfg == {"field": "tube_pair", "r": 0.3, "diffeo": "shear"}


@pytest.mark.parametrize(
    ("text", "message"),
    [
        ("field=tube_pair\nspeed=2\n", "unknown key"),
        ("r=0.3\n", "unknown or missing field"),
        ("field=tube_pair\nr=wide\n", "malformed number"),
        ("field=tube_pair\ndiffeo=twist\n", "unknown diffeo"),
        ("field tube_pair\n", "expected key=value"),
        ("field=beltrami_ball\ndiffeo=rotation\naxis=1,0\n", "malformed number"),
    ],
)
def test_parse_field_config_errors(text: str, message: str):
    """Test malformed configs name the problem."""
    with pytest.raises(ConfigError, match=message):
        _ = fields.parse_field_config(text)


def test_load_field_config_missing(tmp_path):
    """Test a missing config file."""
    with pytest.raises(FileNotFoundError, match="config not found"):
        _ = fields.load_field_config(tmp_path / "missing.cfg")


@pytest.mark.parametrize(
    ("name", "field_name"),
    [
        ("tube_pair", "tube_pair"),
        ("rotation_torus", "rotation_torus"),
        ("beltrami_ball", "beltrami_ball"),
        ("tube_pair_shear", "tube_pair@shear"),
    ],
)
def test_build_shipped_fields(name: str, field_name: str):
    """Test every shipped config builds its field."""
    cfg = fields.load_field_config(config.get_field_config(name))
    assert fields.build_field(cfg).name == field_name
