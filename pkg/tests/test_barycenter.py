from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semirigid import barycenter as bc
from semirigid.manifold import SPD, Euclidean, Hyperbolic, ModelError, Product, Sphere

MODELS = [Sphere(2), Hyperbolic(2), Hyperbolic(2, a=1.3), SPD(2), Product([Hyperbolic(2), Hyperbolic(2)])]
IDS = [repr(m) for m in MODELS]
seeds = st.integers(0, 2**32 - 1)


def _measure(m, seed, frac=0.8):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 7))
    return bc.random_measure(m, rng, n, frac * bc.guard_radius(m), m.random_point(rng, radius=0.8))


def test_euclidean_barycenter_is_weighted_mean():
    m = Euclidean(3)
    rng = np.random.default_rng(0)
    pts = rng.standard_normal((4, 3))
    w = rng.dirichlet(np.ones(4))
    mu = bc.WeightedDirac(m, w, list(pts))
    assert np.allclose(bc.barycenter(mu, guard=False), w @ pts, atol=1e-12)


def test_two_point_barycenter_sits_on_geodesic():
    m = Hyperbolic(2)
    p = m.origin()
    q = m.exp(p, np.array([0.2, 0.0, 0.0]))
    mu = bc.WeightedDirac(m, [0.25, 0.75], [p, q])
    bar = bc.barycenter(mu)
    assert m.dist(p, bar) == pytest.approx(0.75 * m.dist(p, q), abs=1e-12)


def test_weighted_dirac_validates_weights():
    m = Sphere(2)
    p = m.origin()
    with pytest.raises(ModelError):
        bc.WeightedDirac(m, [0.5, 0.6], [p, p])
    with pytest.raises(ModelError):
        bc.WeightedDirac(m, [1.0], [p, p])
    with pytest.raises(ModelError):
        bc.WeightedDirac(m, [], [])


def test_guard_rejects_wide_measures():
    m = Sphere(2)
    p = m.origin()
    q = m.exp(p, np.array([1.0, 0.0, 0.0]))
    with pytest.raises(bc.GuardError):
        bc.solve(bc.WeightedDirac(m, [0.5, 0.5], [p, q]))


@pytest.mark.parametrize("m", MODELS, ids=IDS)
@settings(max_examples=20, deadline=None)
@given(seed=seeds)
def test_gradient_vanishes_and_Q_is_near_identity(m, seed):
    mu = _measure(m, seed)
    res = bc.solve(mu, tol=1e-13)
    assert res.gradient_residual < 1e-12
    Q = bc.hessian_Q(mu, res.point)
    kappa = max(m.a**2, m.b**2)
    assert np.linalg.norm(Q - np.eye(m.dim), 2) <= 2 * kappa * mu.diameter() ** 2 + 1e-12
    assert np.linalg.eigvalsh(Q)[0] >= 0.75


@pytest.mark.parametrize("m", MODELS, ids=IDS)
@settings(max_examples=15, deadline=None)
@given(seed=seeds)
def test_barycenter_within_twice_enclosing_radius(m, seed):
    mu = _measure(m, seed)
    bar = bc.barycenter(mu, tol=1e-13)
    for x in mu.points:
        eps = max(m.dist(x, z) for z in mu.points)
        assert m.dist(bar, x) <= 2 * eps + 1e-12


@pytest.mark.parametrize("m", [Sphere(2), Hyperbolic(2), SPD(2)], ids=str)
def test_weight_and_point_derivatives_match_resolve(m):
    rng = np.random.default_rng(5)
    mu = _measure(m, 5, frac=0.5)
    bar = bc.barycenter(mu, tol=1e-14)
    h = 1e-5
    i = 0
    e = np.zeros(mu.n)
    e[i] = 1.0
    w_plus = mu.weights + h * (e - mu.weights)
    w_minus = mu.weights - h * (e - mu.weights)
    fd = m.log(bar, bc.barycenter(bc.WeightedDirac(m, w_plus, mu.points), tol=1e-14))
    fd -= m.log(bar, bc.barycenter(bc.WeightedDirac(m, w_minus, mu.points), tol=1e-14))
    fd /= 2 * h
    assert np.allclose(m.coefficients(bar, fd), m.coefficients(bar, bc.d_bar_d_weight(mu, i, bar)), atol=1e-6)

    D = bc.d_bar_d_point(mu, i, bar)
    z = mu.points[i]
    v = rng.standard_normal(m.dim)
    pts = list(mu.points)
    pts[i] = m.exp(z, m.from_coefficients(z, h * v))
    plus = bc.barycenter(bc.WeightedDirac(m, mu.weights, pts), tol=1e-14)
    pts[i] = m.exp(z, m.from_coefficients(z, -h * v))
    minus = bc.barycenter(bc.WeightedDirac(m, mu.weights, pts), tol=1e-14)
    fd = m.coefficients(bar, m.log(bar, plus) - m.log(bar, minus)) / (2 * h)
    assert np.allclose(fd, D @ v, atol=1e-6)


@pytest.mark.parametrize("kind", ["S2", "H2", "SPD2", "H2xH2"])
def test_total_derivative_certified_and_matches_resolve(kind):
    fam = bc.family_for(kind)
    rng = np.random.default_rng(2)
    for _ in range(3):
        inst = bc.random_instance(fam, rng)
        td = bc.d_bar_total(inst)
        assert td.certified
        fd = bc.resolve_derivative(inst)
        assert np.linalg.norm(td.derivative - fd) <= 1e-4 * max(np.linalg.norm(fd), 1e-6)


def test_constant_family_has_zero_metric_derivative():
    fam = bc.family_for("SPD2")
    inst = bc.random_instance(fam, np.random.default_rng(0))
    assert np.all(bc.d_bar_d_metric(inst) == 0)


@pytest.mark.parametrize("kind", ["S2", "H2", "SPD2", "H2xH2"])
def test_closed_form_chart_metric_matches_frame_route(kind):
    fam = bc.family_for(kind)
    rng = np.random.default_rng(1)
    s = 0.1 * rng.standard_normal(fam.param_dim)
    m = fam.model(s)
    x = fam.chart(s, m.random_point(rng, radius=0.5))
    assert np.allclose(fam.chart_metric(s, x), bc.MetricFamily.chart_metric(fam, s, x), atol=1e-12)


def test_homogeneous_c12_cache_is_point_independent():
    fam = bc.family_for("SPD2")
    s0 = np.zeros(fam.param_dim)
    m = fam.model(s0)
    rng = np.random.default_rng(3)
    x = fam.chart(s0, m.random_point(rng, radius=0.5))
    cached = fam.c12_norm(s0, x)
    direct = bc._c12_norm(fam, s0, x, 1e-3)
    assert direct == pytest.approx(cached, rel=1e-6)


def test_weight_paths_must_stay_normalized():
    fam = bc.family_for("H2")
    inst = bc.random_instance(fam, np.random.default_rng(0))
    with pytest.raises(ModelError):
        bc.MetricFamilyInstance(fam, inst.s0, inst.atoms, inst.weights, inst.atom_velocities, inst.weight_velocities + 1.0)


def test_grassmann_distance_properties():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((5, 2))
    assert bc.grassmann_distance(a, a @ rng.standard_normal((2, 2))) < 1e-12
    b = rng.standard_normal((5, 2))
    assert 0 <= bc.grassmann_distance(a, b) <= 1 + 1e-12


@pytest.mark.parametrize("kind", ["S2", "H2", "SPD2", "H2xH2"])
def test_graph_tilt_shrinks_with_atom_spread(kind):
    fam = bc.family_for(kind)
    inst = bc.random_instance(fam, np.random.default_rng(0), n_atoms=4, diameter_fraction=0.5)
    c = inst.atoms.mean(axis=0)
    d0 = inst.measure(inst.s0).diameter()
    tilts = []
    for r in (0.2, 0.1, 0.05, 0.025):
        atoms = c + (r / d0) * (inst.atoms - c)
        shrunk = bc.MetricFamilyInstance(fam, inst.s0, atoms, inst.weights, inst.atom_velocities, inst.weight_velocities)
        tilts.append(bc.graph_tilt(shrunk))
    assert all(a > b for a, b in zip(tilts, tilts[1:]))
    assert tilts[-1] < 0.05
