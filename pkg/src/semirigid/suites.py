"""Experiment suites shared by the CLI and the acceptance tests.

Each suite takes a seed plus keyword parameters and returns a ``SuiteReport``:
a list of checks (asserted or informational), a JSON-ready data block and
optional CSV scans. Wall-clock time is kept out of the JSON so that reports
are byte-identical for identical inputs.
"""

from __future__ import annotations

import functools
import math
import time
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from . import barycenter as bc
from . import boundary as bd
from . import chamber as ch
from . import equivariant as eq
from . import lie
from . import quasiflat as qf
from .manifold import Hyperbolic, Product, hyperbolic_isometry, random_sl2, spd_congruence


@dataclass
class Check:
    name: str
    passed: bool
    value: Any
    threshold: str
    asserted: bool = True

    def line(self) -> str:
        tag = ("PASS" if self.passed else "FAIL") if self.asserted else "INFO"
        return f"[{tag}] {self.name}: {_fmt(self.value)} ({self.threshold})"

    def to_json(self) -> dict[str, Any]:
        return {"name": self.name, "passed": bool(self.passed), "value": _clean(self.value), "threshold": self.threshold, "asserted": self.asserted}


@dataclass
class SuiteReport:
    name: str
    params: dict[str, Any]
    checks: list[Check] = field(default_factory=list)
    data: dict[str, Any] = field(default_factory=dict)
    scans: dict[str, str] = field(default_factory=dict)
    runtime: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.asserted)

    def check(self, name: str, passed: bool, value: Any, threshold: str, asserted: bool = True) -> bool:
        self.checks.append(Check(name, bool(passed), value, threshold, asserted))
        return bool(passed)

    def get(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def lines(self) -> list[str]:
        return [c.line() for c in self.checks]

    def to_json(self) -> dict[str, Any]:
        return {
            "suite": self.name,
            "params": _clean(self.params),
            "passed": self.passed,
            "checks": [c.to_json() for c in self.checks],
            "data": _clean(self.data),
        }


def _fmt(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.6g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def _clean(v: Any) -> Any:
    """Convert numpy scalars and arrays into plain JSON values; non-finite floats become strings."""
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.ndarray):
        return _clean(v.tolist())
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        f = float(v)
        return f if math.isfinite(f) else str(f)
    return v


def _timed(fn: Callable[..., SuiteReport]) -> Callable[..., SuiteReport]:
    @functools.wraps(fn)
    def run(*args: Any, **kwargs: Any) -> SuiteReport:
        t0 = time.perf_counter()
        rep = fn(*args, **kwargs)
        rep.runtime = time.perf_counter() - t0
        return rep

    return run


def _monotone_nonincreasing(values: list[float], slack: float = 0.0) -> bool:
    return all(b <= a + slack for a, b in zip(values, values[1:]))


def _monotone_nondecreasing(values: list[float], slack: float = 0.0) -> bool:
    return all(b >= a - slack for a, b in zip(values, values[1:]))


MODEL_KINDS = ("S2", "H2", "SPD2", "H2xH2")


# ---------------------------------------------------------------------------
# barycenter bounds


@_timed
def bound_suite(seed: int = 7, n: int = 1000, kinds: tuple[str, ...] = MODEL_KINDS) -> SuiteReport:
    """Q near the identity, Q invertible with ||Q^-1|| <= 4/3, and the barycenter-derivative deviation bound."""
    rep = SuiteReport("bounds", {"seed": seed, "n": n, "kinds": list(kinds)})
    rng = np.random.default_rng(seed)
    for kind in kinds:
        fam = bc.family_for(kind)
        model = fam.model(np.zeros(fam.param_dim))
        kappa = max(model.a**2, model.b**2)
        limit = 1.0 / (3.0 * max(model.a, model.b))
        v_qi = v_sharp = v_eig = v_inv = v_dev = v_diam = 0
        worst_qi = worst_dev = 0.0
        min_eig = math.inf
        max_inv = 0.0
        for _ in range(n):
            inst = bc.random_instance(fam, rng)
            td = bc.d_bar_total(inst)
            mu = inst.measure(inst.s0)
            diam = mu.diameter()
            if not diam < limit:
                v_diam += 1
            Q = td.Q
            qi = float(np.linalg.norm(Q - np.eye(model.dim), 2))
            rmax = max(model.dist(td.point, z) for z in mu.points)
            if qi > 2 * kappa * diam**2 * (1 + 1e-9) + 1e-12:
                v_qi += 1
            if qi > max(model.a**2 / 3, model.b**2 / 2) * rmax**2 * (1 + 1e-9) + 1e-12:
                v_sharp += 1
            lam = np.linalg.eigvalsh(Q)
            inv = float(1.0 / lam[0])
            if lam[0] < 0.75:
                v_eig += 1
            if inv > 4.0 / 3.0:
                v_inv += 1
            if not td.certified:
                v_dev += 1
            worst_qi = max(worst_qi, qi / max(2 * kappa * diam**2, 1e-300))
            worst_dev = max(worst_dev, td.deviation / max(td.bound, 1e-300))
            min_eig = min(min_eig, float(lam[0]))
            max_inv = max(max_inv, inv)
        rep.check(f"{kind} diameter below 1/(3 max(a,b))", v_diam == 0, v_diam, "violations == 0")
        rep.check(f"{kind} ||Q-I|| <= 2 max(a^2,b^2) diam^2", v_qi == 0, v_qi, "violations == 0")
        rep.check(f"{kind} ||Q-I|| <= max(a^2/3,b^2/2) max d(bar,z)^2", v_sharp == 0, v_sharp, "violations == 0")
        rep.check(f"{kind} min eig Q >= 3/4", v_eig == 0, v_eig, "violations == 0")
        rep.check(f"{kind} ||Q^-1|| <= 4/3", v_inv == 0, v_inv, "violations == 0")
        rep.check(f"{kind} derivative deviation <= 32 max(a^2,b^2) L r", v_dev == 0, v_dev, "violations == 0")
        rep.data[kind] = {
            "instances": n,
            "worst_QI_over_bound": worst_qi,
            "worst_deviation_over_bound": worst_dev,
            "min_eigenvalue": min_eig,
            "max_inverse_norm": max_inv,
        }
    return rep


def _random_isometry(kind: str, model, rng: np.random.Generator) -> Callable[[np.ndarray], np.ndarray]:
    if kind == "S2":
        R = lie.random_orthogonal(3, rng)
        return lambda p: R @ p
    if kind == "H2":
        return hyperbolic_isometry(random_sl2(rng, 0.5))
    if kind == "SPD2":
        return spd_congruence(random_sl2(rng, 0.5))
    if kind == "H2xH2":
        fs = [hyperbolic_isometry(random_sl2(rng, 0.5)) for _ in model.factors]
        return lambda p: Product.join([f(x) for f, x in zip(fs, model.split(p))])
    raise ValueError(kind)


@_timed
def containment_suite(seed: int = 7, n: int = 200, kinds: tuple[str, ...] = MODEL_KINDS, tol: float = 1e-8) -> SuiteReport:
    """Barycenter inside the doubled ball around any ball holding the atoms, and isometry equivariance."""
    rep = SuiteReport("containment", {"seed": seed, "n": n, "kinds": list(kinds), "tol": tol})
    rng = np.random.default_rng(seed + 1)
    for kind in kinds:
        model = bc.family_for(kind).model(np.zeros(1))
        guard = bc.guard_radius(model)
        v_ball = v_diam = 0
        worst_eq = 0.0
        for _ in range(n):
            center = model.random_point(rng, radius=1.0)
            mu = bc.random_measure(model, rng, int(rng.integers(2, 7)), rng.uniform(0.05, 0.95) * guard, center)
            bar = bc.solve(mu, tol=1e-13).point
            x = model.random_point(rng, center=center, radius=0.1 * guard)
            eps = max(model.dist(x, z) for z in mu.points)
            if model.dist(bar, x) > 2 * eps * (1 + 1e-12):
                v_ball += 1
            if max(model.dist(bar, z) for z in mu.points) > 2 * mu.diameter() * (1 + 1e-12):
                v_diam += 1
            f = _random_isometry(kind, model, rng)
            worst_eq = max(worst_eq, bc.affine_equivariance_check(mu, f))
        rep.check(f"{kind} bar in 2 eps ball", v_ball == 0, v_ball, "violations == 0")
        rep.check(f"{kind} max d(bar, z_i) <= 2 diam", v_diam == 0, v_diam, "violations == 0")
        rep.check(f"{kind} isometry equivariance", worst_eq < tol, worst_eq, f"< {tol:g}")
    return rep


@_timed
def barycenter_suite(seed: int = 7, n: int = 1000, n_equivariance: int = 200, tol: float = 1e-8) -> SuiteReport:
    """Bound suite followed by the containment and equivariance suite."""
    a = bound_suite(seed, n)
    b = containment_suite(seed, n_equivariance, tol=tol)
    rep = SuiteReport("barycenter-suite", {"seed": seed, "n": n, "n_equivariance": n_equivariance, "tol": tol})
    rep.checks = a.checks + b.checks
    rep.data = {"bounds": a.data, "containment": b.data}
    return rep


# ---------------------------------------------------------------------------
# derivative oracles


def _fd_weight(mu: bc.WeightedDirac, i: int, bar: np.ndarray, h: float = 1e-3) -> np.ndarray:
    """Five-point difference of the re-solved barycenter along w + t (e_i - w), read through log_bar."""
    m = mu.model
    e = np.zeros(mu.n)
    e[i] = 1.0
    d = e - mu.weights
    vals = []
    for k in (-2, -1, 1, 2):
        nu = bc.WeightedDirac(m, mu.weights + k * h * d, mu.points)
        vals.append(m.coefficients(bar, m.log(bar, bc.solve(nu, tol=1e-13, guard=False, start=bar).point)))
    return (vals[0] - 8 * vals[1] + 8 * vals[2] - vals[3]) / (12 * h)


def _fd_point(mu: bc.WeightedDirac, i: int, bar: np.ndarray, h: float = 1e-3) -> np.ndarray:
    m = mu.model
    B = m.basis(mu.points[i])
    cols = []
    for j in range(m.dim):
        vals = []
        for k in (-2, -1, 1, 2):
            pts = list(mu.points)
            pts[i] = m.exp(pts[i], k * h * B[:, j])
            nu = bc.WeightedDirac(m, mu.weights, pts)
            vals.append(m.coefficients(bar, m.log(bar, bc.solve(nu, tol=1e-13, guard=False, start=bar).point)))
        cols.append((vals[0] - 8 * vals[1] + 8 * vals[2] - vals[3]) / (12 * h))
    return np.column_stack(cols)


def _rel(a: np.ndarray, b: np.ndarray, floor: float = 1e-6) -> float:
    return float(np.linalg.norm(a - b) / max(float(np.linalg.norm(b)), floor))


@_timed
def derivative_suite(seed: int = 11, n: int = 500, tol: float = 1e-4) -> SuiteReport:
    """Closed-form barycenter derivatives against finite differences of re-solved barycenters."""
    rep = SuiteReport("derivative-suite", {"seed": seed, "n": n, "tol": tol})
    rng = np.random.default_rng(seed)
    fams = {k: bc.family_for(k) for k in MODEL_KINDS}
    worst = {"weight": 0.0, "point": 0.0, "metric": 0.0, "total": 0.0}
    counts = {k: 0 for k in MODEL_KINDS}
    for t in range(n):
        kind = MODEL_KINDS[t % len(MODEL_KINDS)]
        counts[kind] += 1
        fam = fams[kind]
        inst = bc.random_instance(fam, rng, diameter_fraction=rng.uniform(0.1, 0.9), velocity_scale=0.5)
        mu = inst.measure(inst.s0)
        m = mu.model
        bar = bc.solve(mu, tol=1e-13).point
        i = int(rng.integers(mu.n))
        dw = m.coefficients(bar, bc.d_bar_d_weight(mu, i, bar))
        worst["weight"] = max(worst["weight"], _rel(dw, _fd_weight(mu, i, bar)))
        dp = bc.d_bar_d_point(mu, i, bar)
        worst["point"] = max(worst["point"], _rel(dp, _fd_point(mu, i, bar)))
        dm = bc.d_bar_d_metric(inst)
        worst["metric"] = max(worst["metric"], _rel(dm, bc.resolve_derivative(inst, frozen=True)))
        td = bc.d_bar_total(inst)
        worst["total"] = max(worst["total"], _rel(td.derivative, bc.resolve_derivative(inst)))
    for k, v in worst.items():
        rep.check(f"d_bar_d_{k} vs re-solve" if k != "total" else "d_bar_total vs re-solve", v < tol, v, f"rel err < {tol:g}")
    rep.data = {"instances_per_model": counts, "worst_relative_error": worst}
    return rep


# ---------------------------------------------------------------------------
# decompositions


Q_MINUS_DISPLAY = {
    # free entries of each subgroup for the (2, 1) parabolic of SL(3), as displayed
    "Q": [[1, 1, 1], [1, 1, 1], [0, 0, 1]],
    "Z": [[1, 1, 0], [1, 1, 0], [0, 0, 1]],
    "N": [[0, 0, 1], [0, 0, 1], [0, 0, 0]],
}


def _pattern(samples: list[np.ndarray], tol: float = 1e-12) -> list[list[int]]:
    nz = np.zeros_like(samples[0], dtype=bool)
    for s in samples:
        nz |= np.abs(s) > tol
    return nz.astype(int).tolist()


@_timed
def iwasawa_suite(seed: int = 3, n: int = 10_000, tol: float = 1e-12) -> SuiteReport:
    """Reconstruction of Iwasawa, generalized Iwasawa and Cartan factorizations, plus the Q_- block shapes."""
    rep = SuiteReport("iwasawa-suite", {"seed": seed, "n": n, "tol": tol})
    rng = np.random.default_rng(seed)
    groups = [lie.SL(2), lie.SL(3), lie.PSL2xPSL2]
    parabolics = {
        "SL(2)": [lie.ParabolicData.minimal(lie.SL(2))],
        "SL(3)": [lie.ParabolicData(lie.SL(3), {2}), lie.ParabolicData(lie.SL(3), {1}), lie.ParabolicData.minimal(lie.SL(3))],
        "PSL(2)xPSL(2)": [lie.ParabolicData.minimal(lie.PSL2xPSL2), lie.ParabolicData(lie.PSL2xPSL2, {1})],
    }

    def err(g: lie.GroupElement, parts: list[lie.GroupElement]) -> float:
        prod = parts[0]
        for p in parts[1:]:
            prod = prod @ p
        scale = max(1.0, max(float(np.max(np.abs(f))) for f in g.factors))
        return max(float(np.max(np.abs(a - b))) for a, b in zip(g.factors, prod.factors)) / scale

    for G in groups:
        wi = wg = wc = 0.0
        struct = 0
        for _ in range(n):
            g = lie.random_element(G, rng)
            k, a, nn = lie.iwasawa(g)
            wi = max(wi, err(g, [k, a, nn]))
            minimal = lie.ParabolicData.minimal(G)
            if not (minimal.in_Z(a) and minimal.in_N(nn)):
                struct += 1
            for Q in parabolics[G.name]:
                k2, a2, n2 = lie.generalized_iwasawa(g, Q)
                wg = max(wg, err(g, [k2, a2, n2]))
                if not (Q.in_A(a2, 1e-9) and Q.in_N(n2, 1e-9)):
                    struct += 1
            k1, H, k3 = lie.cartan(g)
            A = lie.GroupElement(G, [np.diag(np.exp(np.diag(h))) for h in H], check=False)
            wc = max(wc, err(g, [k1, A, k3]))
        rep.check(f"{G.name} iwasawa reconstruction", wi < tol, wi, f"< {tol:g}")
        rep.check(f"{G.name} generalized iwasawa reconstruction", wg < tol, wg, f"< {tol:g}")
        rep.check(f"{G.name} cartan reconstruction", wc < tol, wc, f"< {tol:g}")
        rep.check(f"{G.name} factor shapes", struct == 0, struct, "violations == 0")

    Qm = lie.ParabolicData(lie.SL(3), {2})
    shapes_ok = Qm.blocks == ((2, 1),)
    samples = {"Q": [], "Z": [], "N": [], "A": [], "M": [], "Aprime": []}
    for _ in range(200):
        g = lie.random_element(lie.SL(3), rng)
        _, a2, n2 = lie.generalized_iwasawa(g, Qm)
        samples["Z"].append(a2.factors[0])
        samples["N"].append(n2.factors[0] - np.eye(3))
        samples["Q"].append((a2 @ n2).factors[0])
        samples["A"].append(Qm.random_A(rng).factors[0])
        samples["M"].append(Qm.random_M(rng).factors[0])
        samples["Aprime"].append(Qm.A_prime([[rng.normal(), rng.normal()]]).factors[0])
    observed = {k: _pattern(v) for k, v in samples.items()}
    for key in ("Q", "Z", "N"):
        shapes_ok &= observed[key] == Q_MINUS_DISPLAY[key]
    shapes_ok &= observed["A"] == Q_MINUS_DISPLAY["Z"]
    shapes_ok &= all(np.allclose(a, a.T) for a in samples["A"])
    # M: an O(2) block and its determinant in the corner
    shapes_ok &= all(abs(m[2, 2] - np.linalg.det(m[:2, :2])) < 1e-12 and np.allclose(m[:2, :2].T @ m[:2, :2], np.eye(2)) for m in samples["M"])
    shapes_ok &= observed["M"][2] == [0, 0, 1] and [r[2] for r in observed["M"][:2]] == [0, 0]
    # A': diag(e^t, e^t, e^-2t)
    shapes_ok &= all(abs(a[0, 0] - a[1, 1]) < 1e-12 and abs(a[2, 2] * a[0, 0] ** 2 - 1) < 1e-12 for a in samples["Aprime"])
    rep.check("Q_- block shapes match the displayed subgroups", shapes_ok, shapes_ok, "exact pattern match")
    rep.data["Q_minus_patterns"] = observed
    return rep


# ---------------------------------------------------------------------------
# chamber bundle


@_timed
def chamber_suite(seed: int = 5, n: int = 2000, pairs: int = 10_000, t_max: float = 10.0, n_times: int = 101, tol: float = 1e-10) -> SuiteReport:
    """Phi round trip, boundary component constant along the chamber flow, retraction non-expansion."""
    rep = SuiteReport("chamber-suite", {"seed": seed, "n": n, "pairs": pairs, "t_max": t_max, "tol": tol})
    rng = np.random.default_rng(seed)
    cases = [
        ("PSL(2)xPSL(2)", lie.ParabolicData.minimal(lie.PSL2xPSL2)),
        ("SL(3) Q_-", lie.ParabolicData(lie.SL(3), {2})),
        ("SL(3) Q_+", lie.ParabolicData(lie.SL(3), {1})),
        ("SL(3) minimal", lie.ParabolicData.minimal(lie.SL(3))),
    ]
    times = np.linspace(0.0, t_max, n_times)
    for name, Q in cases:
        rt = max(ch.round_trip_error(lie.random_element(Q.group, rng), Q) for _ in range(n))
        rep.check(f"{name} Phi round trip", rt < tol, rt, f"< {tol:g}")
        drift = 0.0
        for _ in range(20):
            v = ch.ChamberBundlePoint(lie.random_element(Q.group, rng), Q)
            drift = max(drift, ch.flow_drift(v, times))
        rep.check(f"{name} flow drift of boundary component", drift < tol, drift, f"< {tol:g} on t in [0, {t_max:g}]")
    for name, Q in cases[:2]:
        bad, worst = ch.retraction_nonexpansion(Q, pairs, rng)
        rep.check(f"{name} retraction non-expansion", bad == 0, bad, f"violations == 0 on {pairs} pairs")
        rep.data[f"{name} worst retraction ratio"] = worst
    v = ch.ChamberBundlePoint(lie.random_element(lie.PSL2xPSL2, rng), cases[0][1])
    rep.scans["flow_orbit"] = ch.flow_orbit_csv(v, times)
    return rep


# ---------------------------------------------------------------------------
# rho_alpha and the chamber collapse


def collapse_element() -> lie.GroupElement:
    """diag(e, 1/e) in the first factor: fixes the face pair (0, eta) with cocycle e^-2."""
    return lie.GroupElement(lie.PSL2xPSL2, [np.diag([math.e, 1.0 / math.e]), np.eye(2)])


@_timed
def collapse_witness_suite(seed: int = 0, alpha: float = 1.0, theta0: float | None = None, eta: float = 1.0, n_iter: int = 50, tol: float = 1e-6) -> SuiteReport:
    """Iterate a chamber-stabilizing element on an interior angle and record the limit."""
    rep = SuiteReport("collapse-witness", {"seed": seed, "alpha": alpha, "theta0": theta0, "eta": eta, "n_iter": n_iter, "tol": tol})
    rng = np.random.default_rng(seed)
    th = float(rng.uniform(0.05, 0.5 * math.pi - 0.05)) if theta0 is None else float(theta0)
    tr = bd.chamber_collapse_witness(alpha, collapse_element(), 0.0, eta, th, n_iter, tol)
    rep.check("cocycle differs from 1", abs(tr.cocycle_value - 1.0) > 1e-12, tr.cocycle_value, "!= 1")
    rep.check("trace converges", tr.converged, abs(tr.thetas[-1] - tr.limit), f"|theta_n - limit| < {tol:g}")
    rep.data = {"theta0": th, **tr.to_json()}
    rep.scans["collapse_trace"] = tr.csv()
    return rep


@_timed
def rho_alpha_suite(seed: int = 2, n: int = 1000, alphas: tuple[float, ...] = (0.0, 0.5, 1.0, 2.0), alpha: float | None = None, tol: float = 1e-9) -> SuiteReport:
    """Cocycle identity, action property of rho_alpha, fixed faces, alpha = 0 agreement and the collapse witness.

    A single ``alpha`` replaces the list.
    """
    if alpha is not None:
        alphas = (float(alpha),)
    rep = SuiteReport("rho-alpha", {"seed": seed, "n": n, "alphas": list(alphas), "tol": tol})
    rng = np.random.default_rng(seed)
    G = lie.PSL2xPSL2
    triples = [(lie.random_element(G, rng), lie.random_element(G, rng), rng.uniform(0, bd.TWO_PI, 2)) for _ in range(n)]
    coc = 0.0
    for g, h, x in triples:
        lhs = lie.cocycle(g @ h, list(x))
        rhs = lie.cocycle(g, list(lie.act_angles(h, list(x)))) * lie.cocycle(h, list(x))
        coc = max(coc, abs(lhs - rhs) / max(abs(lhs), 1e-300))
    rep.check("cocycle identity", coc < tol, coc, f"relative residual < {tol:g}")
    thetas = rng.uniform(0.0, 0.5 * math.pi, n)
    for a in alphas:
        r = bd.RhoAlpha(a)
        worst = max(r.action_residual(g, h, bd.ChamberCoordinate(x[0], x[1], th)) for (g, h, x), th in zip(triples, thetas))
        rep.check(f"alpha={a:g} action property", worst < tol, worst, f"< {tol:g}")
        faces = all(r.act(g, bd.ChamberCoordinate(x[0], x[1], f)).theta == f for g, _, x in triples[:200] for f in (0.0, 0.5 * math.pi))
        rep.check(f"alpha={a:g} faces fixed exactly", faces, faces, "theta in {0, pi/2} preserved bit for bit")
    r0 = bd.RhoAlpha(0.0)
    dev = 0.0
    for (g, _, x), th in zip(triples, thetas):
        q = r0.act(g, bd.ChamberCoordinate(x[0], x[1], th))
        ref = lie.act_angles(g, list(x))
        dev = max(dev, float(bd.circle_distance(q.xi, ref[0])), float(bd.circle_distance(q.eta, ref[1])), abs(q.theta - th))
    rep.check("alpha=0 equals rho_0", dev < 1e-12, dev, "< 1e-12")
    limits = []
    for s in (seed, seed + 1):
        w = collapse_witness_suite(s, alpha=1.0)
        rep.check(f"collapse witness seed {s}", w.passed, w.data["limit"], "converges")
        limits.append(w.data["thetas"][-1])
        rep.scans[f"collapse_seed{s}"] = w.scans["collapse_trace"]
    rep.check("two seeds share the limit", abs(limits[0] - limits[1]) < 1e-6, abs(limits[0] - limits[1]), "< 1e-6")
    g = collapse_element()
    sups = [bd.deformation_sup(a, g, rng=np.random.default_rng(seed)) for a in (0.1, 0.05, 0.025, 0.0125)]
    rep.check("deformation sup shrinks with alpha", _monotone_nonincreasing(sups), sups, "non-increasing", asserted=False)
    rep.data["deformation_sup"] = {"alphas": [0.1, 0.05, 0.025, 0.0125], "sup": sups}
    return rep


# ---------------------------------------------------------------------------
# Denjoy blow-up


GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
SILVER = math.sqrt(2.0) - 1.0


def z2_rotation_action() -> bd.FiniteAction:
    return bd.FiniteAction(
        {"a": bd.Rotation(bd.TWO_PI * GOLDEN), "b": bd.Rotation(bd.TWO_PI * SILVER)},
        [bd.parse_word("a b a^-1 b^-1")],
    )


@_timed
def denjoy_suite(seed: int = 5, x0: float = 0.1, cap: int = 200_000, steps: int = 10_000, total: float = 0.5, tol: float = 1e-8) -> SuiteReport:
    """Blown-up Z^2 rotation action: relation, semi-conjugacy and invariance of the inserted intervals."""
    rep = SuiteReport("denjoy", {"seed": seed, "x0": x0, "cap": cap, "steps": steps, "total": total, "tol": tol})
    base = z2_rotation_action()
    act, phi, B = bd.denjoy_blowup(base, x0, total=total, cap=cap)
    rng = np.random.default_rng(seed)
    rel = act.relation_residual(rng=rng)
    rep.check("blown-up relation residual", rel < tol, rel, f"< {tol:g}")
    semi = bd.semiconjugacy_residual(act, base, phi, rng=rng)
    rep.check("collapsing map semi-conjugacy residual", semi < tol, semi, f"< {tol:g}")
    dbl = bd.sup_distance(phi, B.collapse_by_bisection, act.period, rng=rng)
    rep.check("collapse map agrees with bisection inverse", dbl < tol, dbl, f"< {tol:g}")
    s, e = B.interval_endpoints(0)
    x = np.array([0.5 * (s + e)])
    letters = act.letters()
    left_at = None
    for i in range(steps):
        x = act.letter(*letters[int(rng.integers(len(letters)))])(x)
        if not B.inserted(x)[0]:
            left_at = i
            break
    rep.check("orbit of an interior sample stays in inserted intervals", left_at is None, steps if left_at is None else left_at, f"{steps} iterates")
    # phi collapses a nondegenerate interval: semi-conjugate but not conjugate
    width = float(bd.circle_distance(phi(np.array([s + 1e-9 * (e - s)])), phi(np.array([e - 1e-9 * (e - s)])))[0])
    rep.check("collapse map is not injective", width < 1e-12 and e - s > 0, e - s, "interval of positive length collapses to a point")
    rep.data = {"orbit_points": len(B.p), "total_length": B.total_length, "interval_0": [s, e]}
    return rep


# ---------------------------------------------------------------------------
# expansion, uniqueness and upgrade


@_timed
def expansion_suite(seed: int = 0, lam: float = 1.1, max_word_length: int = 6, amplitude: float = 1e-4, denjoy_cap: int = 3000, denjoy_total: float = 0.3) -> SuiteReport:
    """Expansion certificate of the genus-2 boundary action, uniqueness and upgrade probes."""
    rep = SuiteReport("expansion", {"seed": seed, "lam": lam, "max_word_length": max_word_length, "amplitude": amplitude, "denjoy_cap": denjoy_cap, "denjoy_total": denjoy_total})
    lat = eq.FuchsianLattice()
    rho0 = lat.boundary_action()
    cert = bd.find_expansion_certificate(rho0, lam, max_word_length)
    rep.check("certificate found", cert.success and cert.word_length <= max_word_length, cert.word_length, f"word length <= {max_word_length}")
    ok, lam_seen = bd.verify_certificate(rho0, cert, rng=np.random.default_rng(seed)) if cert.success else (False, 0.0)
    rep.check("certificate verified", ok and lam_seen >= lam, lam_seen, f"expansion >= {lam:g}")
    rep.data["certificate"] = cert.to_json()

    # uniqueness: two routes to the same conjugacy
    h = eq.trig_perturbation(amplitude, 2, 0.3)
    rho = bd.conjugated_action(rho0, h)
    cases = {
        "identity": (rho0, bd.Identity(rho0.period), bd.NumericInverse(bd.Identity(rho0.period))),
        "conjugated": (rho, h, bd.NumericInverse(h.inverse())),
    }
    for name, (r, p1, p2) in cases.items():
        pr = bd.uniqueness_probe(r, rho0, p1, p2, cert, seed=seed)
        rep.check(f"uniqueness probe ({name})", pr.preconditions_met and bool(pr.passed), pr.value, "preconditions met and maps agree")
        rep.data[f"uniqueness_{name}"] = pr.to_json()

    up = bd.conjugacy_upgrade_probe(rho, rho0, h, cert, seed=seed)
    rep.check("upgrade probe reports injectivity on a Lipschitz-near conjugacy", up.preconditions_met and bool(up.passed), up.details["n_collapses"], "preconditions met, no collapses")
    rep.data["upgrade_conjugated"] = up.to_json()

    act, phi, B = bd.denjoy_blowup(rho0, 0.1, total=denjoy_total, cap=denjoy_cap)
    dn = bd.conjugacy_upgrade_probe(act, rho0, phi, cert, seed=seed)
    rep.check("upgrade probe reports collapse witnesses on a Denjoy action", dn.details["n_collapses"] > 0, dn.details["n_collapses"], "> 0 witnesses")
    rep.check("Denjoy case fails the Lipschitz precondition", not dn.preconditions_met, dn.details["lipschitz_distance"], "preconditions unmet", asserted=False)
    rep.data["upgrade_denjoy"] = {k: v for k, v in dn.to_json().items() if k != "collapse_witnesses"}
    rep.data["upgrade_denjoy"]["collapse_witnesses"] = dn.details["collapse_witnesses"][:5]
    rel = act.relation_residual()
    rep.check("genus-2 Denjoy relation residual (truncated orbit)", rel < 1e-8, rel, "< 1e-8", asserted=False)
    return rep


# ---------------------------------------------------------------------------
# equivariant map


@_timed
def f_tilde_suite(
    seed: int = 0,
    amplitudes: tuple[float, ...] = (0.02, 0.01, 0.005),
    n_equivariance: int = 1000,
    n_trend: int = 12,
    R: float = 0.5,
    radius: float = 0.7,
    tol: float = 1e-8,
) -> SuiteReport:
    """Lattice checks, equivariance of f~ and the leaf-proximity and tilt trends."""
    rep = SuiteReport("f-tilde", {"seed": seed, "amplitudes": list(amplitudes), "n_equivariance": n_equivariance, "n_trend": n_trend, "R": R, "radius": radius, "tol": tol})
    rng = np.random.default_rng(seed)
    lat = eq.FuchsianLattice()
    rel = lat.relator_residual()
    rep.check("relator residual", rel < 1e-9, rel, "< 1e-9")
    side = lat.side_pairing_residual()
    rep.check("side pairings match midpoints", side < 1e-8, side, "< 1e-8")
    part = eq.build_partition(lat, radius, seed=seed)
    dom = lat.sample_domain(2000, rng)
    rep.check("partition weights sum to 1", eq.partition_sum_residual(part, dom) < 1e-10, eq.partition_sum_residual(part, dom), "< 1e-10")
    rep.check("charts lift isometrically", eq.lift_isometry_residual(part, rng) < 1e-10, eq.lift_isometry_residual(part, rng), "< 1e-10")
    rep.data["partition"] = {"centers": len(part.centers), "lifts": len(part.lifts), "max_multiplicity": max(part.multiplicity(X) for X in dom[:500])}

    ft0 = eq.FTilde(part, eq.StandardRepresentation())
    seams = eq.seam_samples(part, n_trend, rng)
    xis = rng.uniform(0, eq.TWO_PI, n_trend)
    p3 = max(eq.section_residual(ft0, X, xi) for X, xi in zip(seams, xis))
    rep.check("rho = rho_0 gives the exact section", p3 < 1e-12, p3, "< 1e-12")

    pts = lat.sample_domain(n_equivariance // 2, rng) + eq.seam_samples(part, n_equivariance - n_equivariance // 2, rng)
    xis_eq = rng.uniform(0, eq.TWO_PI, len(pts))
    fts = {a: eq.FTilde(part, eq.ConjugateRepresentation(eq.trig_perturbation(a))) for a in amplitudes}
    mid = fts[amplitudes[len(amplitudes) // 2]]
    res = eq.equivariance_report(mid, pts, xis_eq)
    rep.check("f~ equivariance over all generators", res < tol, res, f"< {tol:g}")
    cov = eq.covers_identity_residual(mid, pts[:100], xis_eq[:100])
    rep.check("f~ covers the identity", cov == 0.0, cov, "== 0")

    leaf, tilt, ratio, p3s, diam, cont = [], [], [], [], [], []
    for a in amplitudes:
        ft = fts[a]
        ls = eq.leaf_scan(ft, seams, xis, R)
        ts, worst = eq.tilt_scan(ft, seams, xis)
        leaf.append(ls.value)
        tilt.append(ts.value)
        ratio.append(worst)
        p3s.append(eq.part3_sup(ft, seams, n_xi=32))
        diam.append(eq.max_atom_diameter(ft, seams, xis) / a)
        cont.append(eq.f_tilde_sup_distance(ft, ft0, seams[:6], n_xi=16) / eq.generator_sup_distance(ft.rho, ft0.rho, lat, 400))
        rep.scans[f"leaf_amp{a:g}"] = ls.csv()
        rep.scans[f"tilt_amp{a:g}"] = ts.csv()
    rep.check("leaf proximity non-increasing as amplitude shrinks", _monotone_nonincreasing(leaf), leaf, "non-increasing over amplitudes")
    rep.check("tangent tilt non-increasing as amplitude shrinks", _monotone_nonincreasing(tilt), tilt, "non-increasing over amplitudes")
    rep.check("tilt within the atom-spread budget", max(ratio) <= 1.0, max(ratio), "tilt / budget <= 1")
    rep.check("part-3 sup at the middle amplitude", p3s[len(p3s) // 2] < 0.05, p3s, "< 0.05", asserted=False)
    rep.check("atom diameter over amplitude", max(diam) <= 4.0, diam, "<= 4", asserted=False)
    rep.check("continuity constant (f~ sup distance / generator sup distance)", True, cont, "recorded", asserted=False)
    rep.data["trend"] = {"amplitudes": list(amplitudes), "leaf": leaf, "tilt": tilt, "tilt_over_budget": ratio, "part3_sup": p3s, "diameter_over_amplitude": diam, "continuity": cont}
    return rep


# ---------------------------------------------------------------------------
# quasiflats


def intersection_geodesics() -> tuple[qf.Geodesic, qf.Geodesic, qf.Geodesic, qf.Geodesic]:
    """A shared first factor and three second factors: b meets a at a(0), c meets a at a(2)."""
    shared = qf.Geodesic(0.0, math.pi)
    a = qf.geodesic_through(np.array([0.0, 0.0, 1.0]), 0.0)
    b = qf.crossing_geodesic(a, 0.0, math.pi / 3)
    c = qf.crossing_geodesic(a, 2.0, math.pi / 2)
    return shared, a, b, c


@_timed
def coarse_intersect_suite(seed: int = 0, R: float = 2.0, window: float = 6.0, n_samples: int = 2000) -> SuiteReport:
    rep = SuiteReport("coarse-intersect", {"seed": seed, "R": R, "window": window, "n_samples": n_samples})
    shared, a, b, _ = intersection_geodesics()
    r = qf.coarse_intersection_probe(shared, a, b, R, window, n_samples, np.random.default_rng(seed))
    rep.check(f"R={R:g} fitted singular geodesic within 3R", r.within_3R, r.fit_distance, f"fit distance <= {3 * R:g}, containment <= 3R")
    deg = qf.coarse_intersection_probe(shared, a, a, R, window, n_samples, np.random.default_rng(seed))
    rep.check("identical flats flagged as degenerate", deg.degenerate and deg.dimension == 2, deg.dimension, "dimension 2")
    rep.data = {"report": r.to_json()}
    return rep


@_timed
def quasiflat_suite(
    seed: int = 0,
    Ls: tuple[float, ...] = (1.0, 1.01, 1.02, 1.05),
    window: float = 10.0,
    n: int = 100,
    Rs: tuple[float, ...] = (2.0, 4.0, 8.0),
    tol: float = 0.01,
) -> SuiteReport:
    """Shadowing regression, the flat characterization, coarse intersections and three-flat parallelism."""
    rep = SuiteReport("quasiflat", {"seed": seed, "Ls": list(Ls), "window": window, "n": n, "Rs": list(Rs), "tol": tol})
    fits = qf.shadowing_regression(Ls, seed, window, n)
    dists = [f.forward for f in fits]
    rep.check("fit distance at L = 1", dists[0] <= tol, dists[0], f"<= {tol:g}")
    rep.check("fit distance monotone in L", _monotone_nondecreasing(dists, qf.GRID_SLACK), dists, f"non-decreasing (slack {qf.GRID_SLACK:g})")
    rep.data["fits"] = [f.to_json() for f in fits]
    rng = np.random.default_rng(seed)
    ident = []
    for L in Ls:
        q = qf.make_bilipschitz_flat(L, seed, window, n)
        defect = qf.product_distance_defect(q, rng=rng)
        is_flat = defect < 1e-9
        ident.append(is_flat == (q.L_hat <= 1 + qf.GRID_SLACK))
        rep.data.setdefault("characterization", []).append({"L": L, "L_hat": q.L_hat, "product_defect": defect})
        rep.scans[f"flat_L{L:g}"] = q.csv()
    rep.check("product-distance identity iff L_hat <= 1 + slack", all(ident), ident, "agreement for every L")
    for R in Rs:
        shared, a, b, c = intersection_geodesics()
        r = qf.coarse_intersection_probe(shared, a, b, R, rng=np.random.default_rng(seed))
        rep.check(f"coarse intersection R={R:g} within 3R", r.within_3R, r.fit_distance, f"<= {3 * R:g}")
        rep.data[f"coarse_R{R:g}"] = r.to_json()
    shared, a, b, c = intersection_geodesics()
    three = qf.three_flat_parallelism(shared, a, b, c, rng=np.random.default_rng(seed))
    rep.check("three-flat parallelism", three["passed"], three["parallel_defect"], "defect <= 0.1, Hausdorff bounded")
    rep.data["three_flat"] = three
    return rep


SUITES: dict[str, Callable[..., SuiteReport]] = {
    "barycenter-suite": barycenter_suite,
    "derivative-suite": derivative_suite,
    "iwasawa-suite": iwasawa_suite,
    "chamber-suite": chamber_suite,
    "expansion": expansion_suite,
    "denjoy": denjoy_suite,
    "rho-alpha": rho_alpha_suite,
    "collapse-witness": collapse_witness_suite,
    "f-tilde": f_tilde_suite,
    "quasiflat": quasiflat_suite,
    "coarse-intersect": coarse_intersect_suite,
}
