from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semirigid import lie
from semirigid.lie import PSL2, PSL2xPSL2, SL, GroupElement, GroupError, ParabolicData

GROUPS = [SL(2), SL(3), SL(4), PSL2, PSL2xPSL2]
seeds = st.integers(0, 2**32 - 1)


def _prod(*gs: GroupElement) -> GroupElement:
    out = gs[0]
    for g in gs[1:]:
        out = out @ g
    return out


@pytest.mark.parametrize("G", GROUPS, ids=lambda g: g.name)
@settings(max_examples=30, deadline=None)
@given(seed=seeds)
def test_iwasawa_factors_and_reconstructs(G, seed):
    g = lie.random_element(G, np.random.default_rng(seed))
    k, a, n = lie.iwasawa(g)
    assert _prod(k, a, n).distance(g) < 1e-12 * max(1.0, max(np.abs(f).max() for f in g.factors))
    for kf, af, nf in zip(k.factors, a.factors, n.factors):
        assert np.allclose(kf.T @ kf, np.eye(kf.shape[0]), atol=1e-12)
        assert np.allclose(af, np.diag(np.diag(af))) and np.all(np.diag(af) > 0)
        assert np.allclose(np.tril(nf, -1), 0) and np.allclose(np.diag(nf), 1)


@pytest.mark.parametrize("G,theta", [(SL(3), {2}), (SL(3), {1}), (SL(4), {2}), (PSL2xPSL2, {1, 2})], ids=str)
@settings(max_examples=20, deadline=None)
@given(seed=seeds)
def test_generalized_iwasawa_lands_in_the_parabolic_pieces(G, theta, seed):
    Q = ParabolicData(G, theta)
    g = lie.random_element(G, np.random.default_rng(seed))
    k, a, n = lie.generalized_iwasawa(g, Q)
    assert _prod(k, a, n).distance(g) < 1e-10
    assert Q.in_A(a, 1e-9)
    assert Q.in_N(n, 1e-9)
    for kf in k.factors:
        assert np.allclose(kf.T @ kf, np.eye(kf.shape[0]), atol=1e-10)


@pytest.mark.parametrize("G", GROUPS, ids=lambda g: g.name)
def test_cartan_singular_values_are_ordered(G):
    rng = np.random.default_rng(1)
    for _ in range(20):
        g = lie.random_element(G, rng)
        k1, hs, k2 = lie.cartan(g)
        rebuilt = GroupElement(G, [u @ np.diag(np.exp(np.diag(h))) @ v for u, h, v in zip(k1.factors, hs, k2.factors)], check=False)
        assert rebuilt.distance(g) < 1e-10
        for h in hs:
            d = np.diag(h)
            assert np.all(np.diff(d) <= 1e-12)
            assert abs(d.sum()) < 1e-10


def test_q_minus_blocks_of_sl3():
    Q = ParabolicData(SL(3), {2})
    assert Q.blocks == ((2, 1),)
    a = Q.A_prime([[0.7, 0.0]])
    t = math.log(a.factors[0][0, 0])
    assert np.allclose(a.factors[0], np.diag([math.exp(t), math.exp(t), math.exp(-2 * t)]))
    rng = np.random.default_rng(0)
    m = Q.random_M(rng).factors[0]
    assert m[2, 2] == pytest.approx(np.linalg.det(m[:2, :2]))
    assert np.allclose(m[:2, 2], 0) and np.allclose(m[2, :2], 0)
    n = Q.random_N(rng).factors[0]
    assert np.allclose(n[:2, :2], np.eye(2)) and np.allclose(n[2, :2], 0) and n[2, 2] == 1
    assert Q.in_Q(Q.random_M(rng) @ Q.random_A(rng) @ Q.random_N(rng))


@pytest.mark.parametrize("order", ["MAN", "NAM"])
def test_q_factorization_orders(order):
    Q = ParabolicData(SL(3), {2})
    rng = np.random.default_rng(2)
    q = Q.random_M(rng) @ Q.random_A(rng) @ Q.random_N(rng)
    x, y, z = lie.q_factorization(q, Q, order)
    assert _prod(x, y, z).distance(q) < 1e-10
    assert Q.in_A(y, 1e-9)
    if order == "MAN":
        assert Q.in_M(x, 1e-9) and Q.in_N(z, 1e-9)
    else:
        assert Q.in_N(x, 1e-9) and Q.in_M(z, 1e-9)


def test_q_factorization_rejects_outsiders():
    Q = ParabolicData(SL(3), {2})
    g = lie.random_element(SL(3), np.random.default_rng(0))
    with pytest.raises(GroupError):
        lie.q_factorization(g, Q)


def test_parabolic_rejects_bad_roots():
    with pytest.raises(GroupError):
        ParabolicData(SL(3), {3})


def test_group_element_checks_determinant():
    with pytest.raises(GroupError):
        GroupElement(SL(2), [2 * np.eye(2)])
    with pytest.raises(GroupError):
        GroupElement(SL(2), [np.eye(3)])


def test_projective_sign_is_canonical():
    g = GroupElement(PSL2, [-lie.rotation(0.3)])
    h = GroupElement(PSL2, [lie.rotation(0.3)])
    assert g.distance(h) == 0


def test_json_round_trip():
    g = lie.random_element(PSL2xPSL2, np.random.default_rng(3))
    assert GroupElement.from_json(g.to_json()).distance(g) == 0


@settings(max_examples=50, deadline=None)
@given(seed=seeds)
def test_cocycle_identity(seed):
    rng = np.random.default_rng(seed)
    g, h = lie.random_element(PSL2xPSL2, rng), lie.random_element(PSL2xPSL2, rng)
    x = rng.uniform(0, 2 * math.pi, 2)
    lhs = lie.cocycle(g @ h, x)
    rhs = lie.cocycle(g, lie.act_angles(h, x)) * lie.cocycle(h, x)
    assert lhs == pytest.approx(rhs, rel=1e-9)


def test_circle_derivative_matches_finite_difference():
    rng = np.random.default_rng(0)
    m = lie.random_element(PSL2, rng).factors[0]
    x = 1.1
    h = 1e-6
    fd = (lie.circle_action(m, x + h) - lie.circle_action(m, x - h)) / (2 * h)
    assert lie.circle_derivative(m, x) == pytest.approx(fd, rel=1e-6)


def test_flag_action_is_an_action():
    Q = ParabolicData.minimal(SL(3))
    rng = np.random.default_rng(4)
    xi = lie.flag_of(lie.random_element(SL(3), rng), Q)
    g, h = lie.random_element(SL(3), rng), lie.random_element(SL(3), rng)
    a = lie.flag_action(g @ h, xi)
    b = lie.flag_action(g, lie.flag_action(h, xi))
    assert a.equals(b)
    # the stabilizer of the base flag is the parabolic
    base = lie.BoundaryPoint.base(Q)
    q = Q.random_M(rng) @ Q.random_A(rng) @ Q.random_N(rng)
    assert lie.flag_action(q, base).equals(base)


def test_angles_round_trip():
    Q = ParabolicData.minimal(PSL2xPSL2)
    xi = lie.BoundaryPoint.from_angles(Q, [0.4, 5.0])
    assert np.allclose(xi.angles(), [0.4, 5.0])
    g = lie.random_element(PSL2xPSL2, np.random.default_rng(5))
    assert np.allclose(lie.flag_action(g, xi).angles(), lie.act_angles(g, [0.4, 5.0]), atol=1e-10)


def test_opposite_flag_of_asymmetric_type_switches_blocks():
    Q = ParabolicData(SL(3), {2})
    opp = lie.opposite_flag(lie.BoundaryPoint.base(Q))
    assert opp.parabolic.blocks == ((1, 2),)
