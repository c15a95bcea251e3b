from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semirigid import chamber as ch
from semirigid import lie
from semirigid.lie import PSL2xPSL2, SL, GroupError, ParabolicData

CASES = [
    ParabolicData.minimal(SL(3)),
    ParabolicData(SL(3), {2}),
    ParabolicData(SL(4), {2}),
    ParabolicData.minimal(PSL2xPSL2),
]
IDS = [str(Q.to_json()["blocks"]) + Q.group.name for Q in CASES]
seeds = st.integers(0, 2**32 - 1)


@pytest.mark.parametrize("Q", CASES, ids=IDS)
@settings(max_examples=25, deadline=None)
@given(seed=seeds)
def test_trivialization_round_trip(Q, seed):
    g = lie.random_element(Q.group, np.random.default_rng(seed))
    assert ch.round_trip_error(g, Q) < 1e-10
    v = ch.ChamberBundlePoint(g, Q)
    x, xi = ch.trivialize(v)
    w = ch.inverse_trivialize(x, xi)
    assert w.distance_to_coset(v) < 1e-10
    assert ch.project(v).distance(x) < 1e-10


@pytest.mark.parametrize("Q", CASES, ids=IDS)
def test_coset_representative_ignores_M(Q):
    rng = np.random.default_rng(1)
    g = lie.random_element(Q.group, rng)
    v = ch.ChamberBundlePoint(g, Q)
    w = ch.ChamberBundlePoint(g @ Q.random_M(rng), Q)
    assert v.distance_to_coset(w) < 1e-9


@pytest.mark.parametrize("Q", CASES, ids=IDS)
def test_trivialization_is_equivariant(Q):
    rng = np.random.default_rng(2)
    v = ch.ChamberBundlePoint(lie.random_element(Q.group, rng), Q)
    h = lie.random_element(Q.group, rng)
    x, xi = ch.trivialize(v.act(h))
    x0, xi0 = ch.trivialize(v)
    assert x.distance(x0.act(h)) < 1e-9
    assert xi.equals(lie.flag_action(h, xi0))


@pytest.mark.parametrize("Q", CASES, ids=IDS)
def test_flow_keeps_the_forward_face(Q):
    v = ch.ChamberBundlePoint(lie.random_element(Q.group, np.random.default_rng(3)), Q)
    assert ch.flow_drift(v, np.linspace(0, 10, 21)) < 1e-10
    w = ch.chamber_flow(v, ch.flow_element(Q, 2.0))
    assert ch.leaf_membership(w, ch.trivialize(v)[1], "cs")[0]


def test_flow_rejects_non_split_elements():
    Q = ParabolicData(SL(3), {2})
    v = ch.ChamberBundlePoint.base(Q)
    with pytest.raises(GroupError):
        ch.chamber_flow(v, lie.random_element(SL(3), np.random.default_rng(0)))


def test_flow_moves_the_base_point_at_unit_speed_per_direction_norm():
    Q = ParabolicData.minimal(SL(3))
    v = ch.ChamberBundlePoint.base(Q)
    o = ch.project(v)
    d1 = ch.project(ch.chamber_flow(v, ch.flow_element(Q, 1.0))).distance(o)
    d2 = ch.project(ch.chamber_flow(v, ch.flow_element(Q, 2.0))).distance(o)
    assert d2 == pytest.approx(2 * d1, rel=1e-10)


@pytest.mark.parametrize("Q", [CASES[0], CASES[3]], ids=[IDS[0], IDS[3]])
def test_common_point_lies_on_both_leaves(Q):
    rng = np.random.default_rng(4)
    xi = lie.flag_of(lie.random_element(Q.group, rng), Q)
    eta_src = lie.flag_of(lie.random_element(Q.group, rng), Q)
    eta = lie.flag_action(eta_src.as_element(), lie.opposite_flag(lie.BoundaryPoint.base(Q)))
    v = ch.common_point(xi, eta)
    assert ch.leaf_membership(v, xi, "cs", 1e-8)[0]
    assert ch.leaf_membership(v, eta, "cu", 1e-8)[0]


@pytest.mark.parametrize("Q", CASES, ids=IDS)
def test_retraction_fixes_the_parallel_set_and_kills_N(Q):
    s = ch.parallel_set_sample(Q, np.linspace(-2, 2, 9), np.random.default_rng(5))
    assert s.fix_defect < 1e-10
    assert s.fiber_defect < 1e-10
    for x in s.retractions:
        assert ch.in_parallel_set(Q, x)


@pytest.mark.parametrize("Q", CASES, ids=IDS)
def test_retraction_is_nonexpanding(Q):
    bad, worst = ch.retraction_nonexpansion(Q, 300, np.random.default_rng(6))
    assert bad == 0 and worst <= 1 + 1e-12


def test_retraction_of_n_a_o_is_a_o():
    Q = ParabolicData(SL(3), {2})
    rng = np.random.default_rng(7)
    a, n = Q.random_A(rng), Q.random_N(rng)
    x = ch.SymmetricSpacePoint.of(n @ a)
    assert ch.retraction(Q, x).distance(ch.parallel_set_point(Q, a)) < 1e-10


def test_symmetric_distance_is_invariant():
    rng = np.random.default_rng(8)
    x = ch.random_symmetric_point((3,), rng)
    y = ch.random_symmetric_point((3,), rng)
    g = lie.random_element(SL(3), rng)
    assert ch.symmetric_distance(x.act(g), y.act(g)) == pytest.approx(ch.symmetric_distance(x, y), rel=1e-9)


def test_flow_orbit_csv_header_and_rows():
    Q = ParabolicData(SL(3), {2})
    text = ch.flow_orbit_csv(ch.ChamberBundlePoint.base(Q), [0.0, 1.0, 2.0])
    rows = text.strip().splitlines()
    assert rows[0].startswith("t,x0") and rows[0].endswith("fiber_defect")
    assert len(rows) == 4
