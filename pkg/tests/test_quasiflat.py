from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semirigid import quasiflat as qf
from semirigid.manifold import Hyperbolic
from semirigid.suites import intersection_geodesics

H = Hyperbolic(2)
seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=40, deadline=None)
@given(seed=seeds)
def test_geodesic_is_unit_speed_and_projects(seed):
    rng = np.random.default_rng(seed)
    g = qf.Geodesic(*rng.uniform(0, qf.TWO_PI, 2))
    t = np.array([-1.3, 0.0, 0.4, 2.0])
    p = g(t)
    assert np.allclose(qf.lorentz(p, p), -1.0)
    assert float(qf.h2_dist(p[0], p[3])) == pytest.approx(3.3, abs=1e-9)
    assert np.allclose(g.project(p), t, atol=1e-9)
    assert np.allclose(g.distance(p), 0.0, atol=1e-9)


def test_geodesic_origin_parameter():
    g = qf.Geodesic(0.4, 2.9)
    o = np.array([0.0, 0.0, 1.0])
    assert float(g.project(o)) == pytest.approx(0.0, abs=1e-12)


def test_degenerate_geodesic_rejected():
    with pytest.raises(qf.FlatError):
        qf.Geodesic(1.0, 1.0 + qf.TWO_PI)


def test_fermi_offset_distance():
    g = qf.Geodesic(0.0, math.pi)
    p = g.fermi(0.7, 0.35)
    assert float(g.distance(p)) == pytest.approx(0.35, abs=1e-12)
    assert float(g.project(p)) == pytest.approx(0.7, abs=1e-12)


def test_geodesic_through_passes_through_point():
    rng = np.random.default_rng(1)
    p = qf.random_point(rng)
    g = qf.geodesic_through(p, 0.8)
    assert float(g.distance(p)) < 1e-9


def test_crossing_geodesic_angle():
    shared, a, b, c = intersection_geodesics()
    assert float(b.distance(a(0.0))) < 1e-9
    assert float(c.distance(a(2.0))) < 1e-9
    # b leaves a(0) at angle pi/3: distance from a(0) along b of s reaches sinh^-1(sinh s sin(pi/3)) from a
    s = 1.0
    t0 = float(b.project(a(0.0)))
    q = b(t0 + s)
    assert float(a.distance(q)) == pytest.approx(math.asinh(math.sinh(s) * math.sin(math.pi / 3)), abs=1e-9)


def test_isometric_flat_has_zero_defect_and_fits():
    q = qf.make_bilipschitz_flat(1.0, seed=3, window=4.0, n=30)
    assert qf.product_distance_defect(q) < 1e-9
    fit = qf.fit_flat(q)
    assert fit.forward <= 0.01


def test_amplitude_for_peak_speed():
    assert qf.amplitude_for(1.0) == 0.0
    with pytest.raises(qf.FlatError):
        qf.amplitude_for(0.9)
    A = qf.amplitude_for(1.05, 2.0)
    g = qf.Geodesic(0.0, math.pi)
    t = np.linspace(0, 2 * math.pi, 20001)
    curve = g.fermi(t, A * np.sin(2.0 * t))
    speeds = qf.h2_dist(curve[1:], curve[:-1]) / np.diff(t)
    assert float(np.max(speeds)) == pytest.approx(1.05, rel=1e-4)


def test_fit_distance_grows_with_L():
    fits = qf.shadowing_regression((1.0, 1.05), window=4.0, n=30)
    assert fits[0].forward < fits[1].forward


def test_coarse_intersection_within_3R():
    shared, a, b, _ = intersection_geodesics()
    rep = qf.coarse_intersection_probe(shared, a, b, 2.0, window=4.0, n_samples=800)
    assert not rep.degenerate
    assert rep.within_3R
    assert rep.containment <= 3.0


def test_parallel_flats_are_flagged_degenerate():
    shared, a, _, _ = intersection_geodesics()
    rep = qf.coarse_intersection_probe(shared, a, a, 2.0, window=4.0, n_samples=200)
    assert rep.degenerate and rep.within_3R


def test_three_flat_parallelism():
    shared, a, b, c = intersection_geodesics()
    out = qf.three_flat_parallelism(shared, a, b, c, R=2.0, window=4.0)
    assert out["passed"]
    assert out["hausdorff"] <= out["hausdorff_bound"]
