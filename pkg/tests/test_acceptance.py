"""End-to-end acceptance checks, one per criterion, at full size.

Each test runs the matching suite with its default parameters, prints the
suite's check lines followed by one PASS/FAIL summary line, then asserts.
Run just these with ``pytest -m acceptance -s``.
"""
from __future__ import annotations

import pytest

from semirigid import suites
from semirigid.suites import SuiteReport

pytestmark = pytest.mark.acceptance


def _report(number: int, what: str, rep: SuiteReport, extra: bool = True, note: str = "") -> bool:
    for line in rep.lines():
        print("   ", line)
    ok = rep.passed and extra
    tail = f"; {note}" if note else ""
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {what} ({rep.runtime:.1f} s{tail})")
    return ok


def test_criterion_01_bound_suite():
    rep = suites.bound_suite()
    assert rep.params["n"] >= 1000
    fast = rep.runtime < 60.0
    assert _report(1, "curvature bounds hold on 1000 instances per model", rep, fast, "runtime < 60 s")


def test_criterion_02_derivatives_match_resolve():
    rep = suites.derivative_suite()
    assert rep.params["n"] >= 500 and rep.params["tol"] == 1e-4
    fast = rep.runtime < 120.0
    assert _report(2, "barycenter derivative vs re-solve difference quotient, rel < 1e-4", rep, fast, "runtime < 120 s")


def test_criterion_03_containment_and_equivariance():
    rep = suites.containment_suite()
    assert rep.params["n"] >= 200 and rep.params["tol"] == 1e-8
    assert _report(3, "2-eps containment and isometry equivariance < 1e-8", rep)


def test_criterion_04_decompositions():
    rep = suites.iwasawa_suite()
    assert rep.params["n"] >= 10_000 and rep.params["tol"] == 1e-12
    assert _report(4, "Iwasawa, generalized Iwasawa and Cartan < 1e-12, opposite parabolic shapes exact", rep)


def test_criterion_05_chamber_bundle():
    rep = suites.chamber_suite()
    assert rep.params["pairs"] >= 10_000 and rep.params["tol"] == 1e-10
    assert _report(5, "bundle chart round trip and flow drift < 1e-10, retraction non-expanding", rep)


def test_criterion_06_deformed_action():
    rep = suites.rho_alpha_suite()
    assert _report(6, "cocycle, action, fixed faces, alpha = 0, collapse witness", rep)


def test_criterion_07_denjoy_blowup():
    rep = suites.denjoy_suite()
    assert _report(7, "Denjoy blow-up relations, semi-conjugacy and collapse", rep)


def test_criterion_08_expansion_certificate():
    rep = suites.expansion_suite()
    assert rep.params["lam"] == 1.1
    assert _report(8, "lambda = 1.1 certificate, uniqueness, upgrade and Denjoy witnesses", rep)


def test_criterion_09_equivariant_map():
    rep = suites.f_tilde_suite()
    assert rep.params["tol"] == 1e-8
    assert _report(9, "relator, equivariance, leaf and tilt monotone in amplitude", rep)


def test_criterion_10_quasiflats():
    rep = suites.quasiflat_suite()
    assert rep.params["tol"] == 0.01
    assert _report(10, "L = 1 fit <= 0.01, monotone in L, coarse intersection within 3R, three flats", rep)
