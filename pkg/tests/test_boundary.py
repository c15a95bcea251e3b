from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semirigid import boundary as bd
from semirigid import lie
from semirigid.equivariant import FuchsianLattice
from semirigid.suites import GOLDEN, collapse_element, z2_rotation_action

TWO_PI = bd.TWO_PI
seeds = st.integers(0, 2**32 - 1)
angles = st.floats(0.0, TWO_PI, allow_nan=False, exclude_max=True)


def test_word_parsing_round_trip():
    w = bd.parse_word("a b^-1 c^2")
    assert bd.format_word(bd.parse_word(bd.format_word(w))) == bd.format_word(w)
    inv = bd.invert_word(w)
    assert bd.format_word(bd.invert_word(inv)) == bd.format_word(w)


@pytest.mark.parametrize(
    "f",
    [
        bd.Rotation(1.3),
        bd.Mobius(np.array([[2.0, 1.0], [1.0, 1.0]])),
        bd.TrigHomeo([(2, 0.1, 0.3), (3, 0.05, 1.0)]),
        bd.Composite([bd.Rotation(0.4), bd.TrigHomeo([(1, 0.2, 0.0)])]),
    ],
    ids=["rotation", "mobius", "trig", "composite"],
)
def test_inverses_invert(f):
    x = np.linspace(0, TWO_PI, 500, endpoint=False)
    assert np.max(bd.circle_distance(f.inverse()(f(x)), x)) < 1e-9
    assert np.max(bd.circle_distance(bd.NumericInverse(f)(f(x)), x)) < 1e-9


def test_trig_homeo_must_be_monotone():
    with pytest.raises(bd.ActionError):
        bd.TrigHomeo([(2, 0.6, 0.0)])


def test_finite_action_rejects_false_relations():
    with pytest.raises(bd.ActionError):
        bd.FiniteAction({"a": bd.Rotation(1.0)}, [bd.parse_word("a")])


def test_rotation_number_of_rotation_and_conjugate():
    r = bd.Rotation(TWO_PI * GOLDEN)
    h = bd.TrigHomeo([(1, 0.3, 0.2)])
    assert bd.rotation_number(r, n=2000) == pytest.approx(GOLDEN, abs=1e-12)
    assert bd.rotation_number(bd.conjugate(h, r), n=20000) == pytest.approx(GOLDEN, abs=1e-3)


def test_denjoy_blowup_small_cap():
    base = z2_rotation_action()
    act, phi, B = bd.denjoy_blowup(base, 0.1, total=0.4, cap=2000)
    rng = np.random.default_rng(0)
    assert act.relation_residual(2000, rng) < 1e-8
    assert bd.semiconjugacy_residual(act, base, phi, 2000, rng) < 1e-8
    s, e = B.interval_endpoints(0)
    assert e > s
    assert float(bd.circle_distance(phi(np.array([s])), phi(np.array([e])))[0]) < 1e-12
    # collapse is monotone of degree one
    x = np.linspace(0, TWO_PI, 4001)
    y = np.unwrap(phi(x), period=TWO_PI)
    assert np.all(np.diff(y) >= -1e-12)
    assert y[-1] - y[0] == pytest.approx(TWO_PI, abs=1e-9)


def test_truncated_schedule_sums_and_vanishes():
    r = bd.truncated_schedule(100, 0.5)
    assert r.sum() == pytest.approx(0.5)
    assert np.all(r > 0) and np.all(np.diff(r) < 0)


def test_expansion_certificate_for_lattice_action():
    rho0 = FuchsianLattice().boundary_action()
    cert = bd.find_expansion_certificate(rho0, 1.1, 6)
    assert cert.success and cert.word_length <= 6
    ok, lam = bd.verify_certificate(rho0, cert, rng=np.random.default_rng(0))
    assert ok and lam >= 1.1
    eps, _ = bd.lebesgue_number(cert.arcs)
    assert eps == pytest.approx(cert.lebesgue, rel=1e-6)


def test_uniqueness_probe_identity_and_far_maps():
    rho0 = FuchsianLattice().boundary_action()
    cert = bd.find_expansion_certificate(rho0, 1.1, 6)
    ident = bd.Identity(rho0.period)
    rep = bd.uniqueness_probe(rho0, rho0, ident, ident, cert)
    assert rep.preconditions_met and rep.passed
    far = bd.Rotation(1.0)
    rep = bd.uniqueness_probe(rho0, rho0, ident, far, cert)
    assert not rep.preconditions_met and rep.passed is None


@settings(max_examples=50, deadline=None)
@given(seed=seeds, alpha=st.sampled_from([0.0, 0.5, 1.0, 2.0]))
def test_rho_alpha_is_an_action(seed, alpha):
    rng = np.random.default_rng(seed)
    g, h = lie.random_element(lie.PSL2xPSL2, rng), lie.random_element(lie.PSL2xPSL2, rng)
    p = bd.ChamberCoordinate(*rng.uniform(0, TWO_PI, 2), rng.uniform(0, 0.5 * math.pi))
    assert bd.RhoAlpha(alpha).action_residual(g, h, p) < 1e-9


@settings(max_examples=50, deadline=None)
@given(seed=seeds, xi=angles, eta=angles, face=st.sampled_from([0.0, 0.5 * math.pi]))
def test_faces_are_fixed(seed, xi, eta, face):
    g = lie.random_element(lie.PSL2xPSL2, np.random.default_rng(seed))
    q = bd.RhoAlpha(2.0).act(g, bd.ChamberCoordinate(xi, eta, face))
    assert q.theta == face and q.on_face


def test_alpha_zero_leaves_theta_alone():
    rng = np.random.default_rng(1)
    g = lie.random_element(lie.PSL2xPSL2, rng)
    p = bd.ChamberCoordinate(0.3, 2.0, 0.9)
    q = bd.RhoAlpha(0.0).act(g, p)
    assert q.theta == pytest.approx(0.9, abs=1e-15)
    assert np.allclose([q.xi, q.eta], lie.act_angles(g, [0.3, 2.0]))


def test_negative_alpha_rejected():
    with pytest.raises(bd.ActionError):
        bd.RhoAlpha(-0.1)


def test_tau_chart_inverts():
    th = np.linspace(1e-6, 0.5 * math.pi - 1e-6, 200)
    assert np.allclose(bd.tau_inv(bd.tau(th)), th, atol=1e-12)
    assert bd.tau(math.pi / 4) == pytest.approx(0.0, abs=1e-15)
    assert float(bd.tau_inv(1e6)) == 0.5 * math.pi


def test_collapse_witness_converges_to_center_and_is_seed_independent():
    g = collapse_element()
    a = bd.chamber_collapse_witness(1.0, g, 0.0, 1.0, 0.2)
    b = bd.chamber_collapse_witness(1.0, g, 0.0, 1.0, 1.3)
    assert a.cocycle_value == pytest.approx(math.exp(-2))
    assert a.converged and b.converged
    assert a.limit == b.limit == pytest.approx(math.pi / 4)
    assert a.monotone_from is not None


def test_collapse_witness_requires_fixed_faces():
    with pytest.raises(bd.ActionError):
        bd.chamber_collapse_witness(1.0, collapse_element(), 1.0, 1.0, 0.3)


def test_deformation_shrinks_with_alpha():
    g = collapse_element()
    sups = [bd.deformation_sup(a, g, n=200) for a in (0.2, 0.1, 0.05)]
    assert sups[0] >= sups[1] >= sups[2] > 0
