from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semirigid.manifold import (
    SPD,
    Euclidean,
    Hyperbolic,
    Manifold,
    ModelError,
    Product,
    Sphere,
    comparison_tensor_1,
    comparison_tensor_2,
    hyperbolic_isometry,
    model_from_descriptor,
    random_sl2,
    spd_congruence,
)

MODELS = [
    Euclidean(2),
    Sphere(2),
    Sphere(2, radius=2.0),
    Hyperbolic(2),
    Hyperbolic(2, a=0.5),
    SPD(2),
    SPD(3),
    Product([Hyperbolic(2), Hyperbolic(2)]),
    Product([Sphere(2), SPD(2)]),
]
IDS = [repr(m) for m in MODELS]
seeds = st.integers(0, 2**32 - 1)


def _pair(m: Manifold, seed: int, radius: float = 0.8) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    p = m.random_point(rng, radius=radius)
    q = m.random_point(rng, center=p, radius=radius)
    return p, q


@pytest.mark.parametrize("m", MODELS, ids=IDS)
def test_basis_is_orthonormal(m):
    rng = np.random.default_rng(0)
    for _ in range(10):
        p = m.random_point(rng)
        B = m.basis(p)
        gram = B.T @ m.metric_matrix(p) @ B
        assert np.allclose(gram, np.eye(m.dim), atol=1e-10)


@pytest.mark.parametrize("m", MODELS, ids=IDS)
@settings(max_examples=25, deadline=None)
@given(seed=seeds)
def test_exp_inverts_log(m, seed):
    p, q = _pair(m, seed)
    v = m.log(p, q)
    assert m.tangent_residual(p, v) < 1e-9
    assert np.allclose(m.exp(p, v), q, atol=1e-9)
    assert m.dist(p, q) == pytest.approx(m.norm(p, v), abs=1e-10)


@pytest.mark.parametrize("m", MODELS, ids=IDS)
@settings(max_examples=25, deadline=None)
@given(seed=seeds)
def test_distance_is_symmetric_and_triangular(m, seed):
    rng = np.random.default_rng(seed)
    p, q, r = (m.random_point(rng, radius=0.6) for _ in range(3))
    assert m.dist(p, q) == pytest.approx(m.dist(q, p), abs=1e-10)
    assert m.dist(p, r) <= m.dist(p, q) + m.dist(q, r) + 1e-10


@pytest.mark.parametrize("m", MODELS, ids=IDS)
@settings(max_examples=20, deadline=None)
@given(seed=seeds)
def test_transport_is_an_isometry_and_reverses(m, seed):
    p, q = _pair(m, seed)
    P = m.transport_matrix(p, q)
    assert np.allclose(P.T @ P, np.eye(m.dim), atol=1e-9)
    assert np.allclose(m.transport_matrix(q, p) @ P, np.eye(m.dim), atol=1e-9)
    # the geodesic direction is carried to minus the reverse direction
    u = m.coefficients(p, m.log(p, q))
    w = m.coefficients(q, m.log(q, p))
    assert np.allclose(P @ u, -w, atol=1e-9)


@pytest.mark.parametrize("m", MODELS, ids=IDS)
def test_fast_transport_matches_columnwise_route(m):
    for seed in range(5):
        p, q = _pair(m, seed)
        assert np.allclose(m.transport_matrix(p, q), Manifold.transport_matrix(m, p, q), atol=1e-10)


@pytest.mark.parametrize("m", MODELS, ids=IDS)
def test_closed_form_dlog_matches_finite_differences(m):
    for seed in range(5):
        p, q = _pair(m, seed, radius=0.5)
        assert np.allclose(m.dlog(p, q), m.dlog_dpoint(p, q), atol=1e-6)


@pytest.mark.parametrize("m", MODELS, ids=IDS)
def test_hessian_of_half_square_matches_finite_differences(m):
    p, q = _pair(m, 3, radius=0.5)
    H = m.hess_half_sq(p, q)
    h = 1e-5
    cols = []
    B = m.basis(p)
    for j in range(m.dim):
        xp = m.exp(p, h * B[:, j])
        xm = m.exp(p, -h * B[:, j])
        g_plus = -m.transport_matrix(xp, p) @ m.coefficients(xp, m.log(xp, q))
        g_minus = -m.transport_matrix(xm, p) @ m.coefficients(xm, m.log(xm, q))
        cols.append((g_plus - g_minus) / (2 * h))
    assert np.allclose(H, np.column_stack(cols), atol=1e-5)


@pytest.mark.parametrize("m", [Sphere(2), Hyperbolic(2), Hyperbolic(2, a=0.5), SPD(2)], ids=str)
def test_sectional_curvature_in_band(m):
    rng = np.random.default_rng(1)
    for _ in range(20):
        p = m.random_point(rng)
        u, v = m.random_tangent(rng, p), m.random_tangent(rng, p)
        k = m.sectional_curvature(p, u, v)
        assert -m.a**2 - 1e-9 <= k <= m.b**2 + 1e-9


def test_spd_curvature_constant_is_attained():
    m = SPD(2)
    p = m.origin()
    u = np.array([1.0, 0.0, 0.0, -1.0])
    v = np.array([0.0, 1.0, 1.0, 0.0])
    assert m.sectional_curvature(p, u, v) == pytest.approx(-0.5)


@pytest.mark.parametrize("m", [Sphere(2), Hyperbolic(2), SPD(2), Product([Hyperbolic(2), Sphere(2)])], ids=str)
@settings(max_examples=15, deadline=None)
@given(seed=seeds)
def test_comparison_tensors_within_bounds(m, seed):
    p, q = _pair(m, seed, radius=0.4)
    r1, b1 = comparison_tensor_1(m, p, q)
    r2, b2 = comparison_tensor_2(m, p, q)
    assert r1 <= b1 * (1 + 1e-6) + 1e-9
    assert r2 <= b2 * (1 + 1e-6) + 1e-6


def test_isometries_preserve_distance():
    rng = np.random.default_rng(4)
    H, S = Hyperbolic(2, a=0.7), SPD(2)
    for _ in range(20):
        g = random_sl2(rng)
        f = hyperbolic_isometry(g)
        p, q = H.random_point(rng), H.random_point(rng)
        assert H.dist(f(p), f(q)) == pytest.approx(H.dist(p, q), abs=1e-9)
        c = spd_congruence(g)
        p, q = S.random_point(rng), S.random_point(rng)
        assert S.dist(c(p), c(q)) == pytest.approx(S.dist(p, q), abs=1e-9)


@pytest.mark.parametrize("m", MODELS, ids=IDS)
def test_descriptor_round_trip(m):
    assert model_from_descriptor(m.descriptor()) == m


def test_sphere_antipodal_log_raises():
    m = Sphere(2)
    p = m.origin()
    with pytest.raises(ModelError):
        m.log(p, -p)


def test_hyperbolic_rejects_nonpositive_scale():
    with pytest.raises(ModelError):
        Hyperbolic(2, a=0.0)


def test_sphere_geodesic_distance_closed_form():
    m = Sphere(2, radius=3.0)
    p = np.array([0.0, 0.0, 3.0])
    q = 3.0 * np.array([math.sin(0.4), 0.0, math.cos(0.4)])
    assert m.dist(p, q) == pytest.approx(1.2)
