from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semirigid import equivariant as eq

seeds = st.integers(0, 2**32 - 1)


@pytest.fixture(scope="module")
def lattice():
    return eq.FuchsianLattice()


@pytest.fixture(scope="module")
def partition(lattice):
    return eq.build_partition(lattice, 0.7, seed=0)


@pytest.fixture(scope="module")
def perturbed(partition):
    return eq.FTilde(partition, eq.ConjugateRepresentation(eq.trig_perturbation(0.01)))


@pytest.fixture(scope="module")
def standard(partition):
    return eq.FTilde(partition, eq.StandardRepresentation())


def test_relator_and_side_pairings(lattice):
    assert lattice.relator_residual() < 1e-9
    assert lattice.side_pairing_residual() < 1e-8


def test_relator_search_recovers_the_octagon_relator(lattice):
    found = eq.relator_search(lattice.generators)
    assert found
    for w in found:
        assert np.allclose(eq._canon(eq.word_matrix(lattice.generators, w)), np.eye(2), atol=1e-9)


def test_reduce_lands_in_the_domain(lattice):
    rng = np.random.default_rng(0)
    for _ in range(30):
        X = eq.exp_point(np.eye(2), rng.uniform(-3, 3, 2))
        X0, gw = lattice.reduce(X)
        assert lattice.in_domain(X0, 1e-9)
        assert eq.h2_distance(eq.h2_act(gw.matrix, X0), X) < 1e-8


def test_h2_helpers_agree():
    rng = np.random.default_rng(1)
    s = rng.uniform(-1, 1, 2)
    X = eq.exp_point(np.eye(2), s)
    assert eq.h2_distance(np.eye(2), X) == pytest.approx(float(np.hypot(*s)))
    assert np.allclose(eq.h2_point(eq.h2_coords(X)), X)
    g = eq.translation(rng.uniform(-1, 1, 2))
    Y = eq.exp_point(np.eye(2), rng.uniform(-1, 1, 2))
    assert eq.h2_distance(eq.h2_act(g, X), eq.h2_act(g, Y)) == pytest.approx(eq.h2_distance(X, Y))


def test_suspension_point_checks_base():
    with pytest.raises(eq.LatticeError):
        eq.SuspensionPoint(np.array([0.0, 0.0, 2.0]), 0.0)


def test_partition_covers_and_sums_to_one(lattice, partition):
    pts = lattice.sample_domain(300, np.random.default_rng(2))
    assert eq.partition_sum_residual(partition, pts) < 1e-12
    assert eq.lift_isometry_residual(partition, np.random.default_rng(3), 50) < 1e-10
    assert all(partition.multiplicity(X) >= 1 for X in pts)


def test_partition_radius_guard(lattice):
    with pytest.raises(eq.LatticeError):
        eq.build_partition(lattice, 5.0)


def test_standard_representation_gives_exact_section(lattice, partition, standard):
    rng = np.random.default_rng(4)
    for X in eq.seam_samples(partition, 10, rng):
        xi = rng.uniform(0, eq.TWO_PI)
        assert eq.section_residual(standard, X, xi) < 1e-12


@settings(max_examples=30, deadline=None)
@given(seed=seeds)
def test_f_tilde_is_equivariant(lattice, perturbed, seed):
    rng = np.random.default_rng(seed)
    X = lattice.sample_domain(1, rng)[0]
    xi = rng.uniform(0, eq.TWO_PI)
    for g in eq.generator_elements(lattice):
        assert eq.equivariance_residual(perturbed, X, xi, g) < 1e-8


def test_f_tilde_covers_identity(lattice, perturbed):
    rng = np.random.default_rng(5)
    pts = lattice.sample_domain(20, rng)
    assert eq.covers_identity_residual(perturbed, pts, rng.uniform(0, eq.TWO_PI, 20)) == 0.0


def test_leaf_and_tilt_shrink_with_amplitude(partition):
    rng = np.random.default_rng(6)
    pts = eq.seam_samples(partition, 4, rng)
    xis = rng.uniform(0, eq.TWO_PI, 4)
    leaf, tilt = [], []
    for a in (0.02, 0.01, 0.005):
        ft = eq.FTilde(partition, eq.ConjugateRepresentation(eq.trig_perturbation(a)))
        leaf.append(eq.leaf_scan(ft, pts, xis, 0.5).value)
        tilt.append(eq.tilt_scan(ft, pts, xis)[0].value)
    assert leaf[0] >= leaf[1] >= leaf[2]
    assert tilt[0] >= tilt[1] >= tilt[2]


def test_trig_perturbation_displacement():
    h = eq.trig_perturbation(0.03)
    x = np.linspace(0, eq.TWO_PI, 1000)
    assert np.max(eq.circle_distance(h(x), x)) == pytest.approx(0.03, rel=1e-3)
    assert h.sup_displacement == 0.03


def test_fiber_map_is_a_rotation():
    rng = np.random.default_rng(7)
    g = eq.translation(rng.uniform(-1, 1, 2))
    X = eq.exp_point(np.eye(2), rng.uniform(-1, 1, 2))
    f = eq.fiber_map(g, X)
    psi = np.linspace(0, eq.TWO_PI, 50, endpoint=False)
    d = np.mod(f(psi) - psi, eq.TWO_PI)
    assert np.ptp(np.unwrap(d)) < 1e-10
    assert math.isfinite(float(d[0]))
