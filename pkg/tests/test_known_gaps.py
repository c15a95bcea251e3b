"""Targets the implementation measures but does not reach.

Both are strict xfails: if a later change meets the target, the xpass turns
the run red so the marker gets removed.
"""
from __future__ import annotations

import numpy as np
import pytest

from semirigid import equivariant as eq

AMPLITUDE = 0.01


@pytest.fixture(scope="module")
def perturbed_and_seams():
    part = eq.build_partition(eq.FuchsianLattice(), 0.7, seed=0)
    rng = np.random.default_rng(0)
    seams = eq.seam_samples(part, 20, rng)
    xis = rng.uniform(0, eq.TWO_PI, 20)
    return eq.FTilde(part, eq.ConjugateRepresentation(eq.trig_perturbation(AMPLITUDE))), seams, xis


@pytest.mark.xfail(strict=True, reason="measured part-3 sup is about 0.075 at amplitude 0.01")
def test_part3_sup_below_0_05_at_amplitude_0_01(perturbed_and_seams):
    ft, seams, _ = perturbed_and_seams
    value = eq.part3_sup(ft, seams, n_xi=32)
    print(f"part-3 sup at amplitude {AMPLITUDE}: {value:.4g} (target < 0.05)")
    assert value < 0.05


@pytest.mark.xfail(strict=True, reason="measured atom diameter is about 9x the amplitude")
def test_atom_diameter_at_most_four_amplitudes(perturbed_and_seams):
    ft, seams, xis = perturbed_and_seams
    ratio = eq.max_atom_diameter(ft, seams, xis) / AMPLITUDE
    print(f"atom diameter / amplitude: {ratio:.4g} (target <= 4)")
    assert ratio <= 4.0
