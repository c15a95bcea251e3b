"""Group actions on circles: expansion certificates, semi-conjugacy checks,
the Denjoy blow-up and the chamber deformation rho_alpha of PSL(2) x PSL(2).

Circle maps act on arrays of angles in [0, period). Words are tuples of
(label, +-1) and act as rho(s1) o rho(s2) o ... o rho(sn).
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping, Sequence

import numpy as np

from .lie import circle_action, circle_derivative, cocycle, GroupElement, PSL2xPSL2

TWO_PI = 2.0 * math.pi
RELATION_TOL = 1e-8

Word = tuple[tuple[str, int], ...]


class ActionError(ValueError):
    pass


def circle_distance(x: np.ndarray | float, y: np.ndarray | float, period: float = TWO_PI) -> np.ndarray:
    d = np.mod(np.asarray(x) - np.asarray(y), period)
    return np.minimum(d, period - d)


def parse_word(text: str) -> Word:
    """'a b^-1 c' -> (('a', 1), ('b', -1), ('c', 1))."""
    out = []
    for tok in text.split():
        if tok.endswith("^-1"):
            out.append((tok[:-3], -1))
        else:
            out.append((tok, 1))
    return tuple(out)


def format_word(w: Word) -> str:
    return " ".join(s if e == 1 else f"{s}^-1" for s, e in w)


def invert_word(w: Word) -> Word:
    return tuple((s, -e) for s, e in reversed(w))


# ---------------------------------------------------------------------------
# circle maps


class CircleMap:
    period: float = TWO_PI

    def __call__(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def derivative(self, x: np.ndarray) -> np.ndarray:
        """Derivative of the lift; piecewise maps fall back to central differences."""
        x = np.asarray(x, dtype=float)
        h = 1e-7 * self.period
        d = np.mod(self(x + h) - self(x - h), self.period)
        return d / (2 * h)

    def inverse(self) -> "CircleMap":
        return NumericInverse(self)


class Identity(CircleMap):
    def __init__(self, period: float = TWO_PI):
        self.period = period

    def __call__(self, x):
        return np.mod(np.asarray(x, dtype=float), self.period)

    def derivative(self, x):
        return np.ones_like(np.asarray(x, dtype=float))

    def inverse(self):
        return self


class Mobius(CircleMap):
    """A PSL(2, R) element acting on the circle of lines (angle = twice the line angle)."""

    def __init__(self, m: np.ndarray):
        self.m = np.asarray(m, dtype=float)
        self.period = TWO_PI

    def __call__(self, x):
        return np.mod(circle_action(self.m, x), TWO_PI)

    def derivative(self, x):
        return circle_derivative(self.m, x)

    def inverse(self):
        return Mobius(np.linalg.inv(self.m))


class Rotation(CircleMap):
    def __init__(self, shift: float, period: float = TWO_PI):
        self.shift = float(shift)
        self.period = float(period)

    def __call__(self, x):
        return np.mod(np.asarray(x, dtype=float) + self.shift, self.period)

    def derivative(self, x):
        return np.ones_like(np.asarray(x, dtype=float))

    def inverse(self):
        return Rotation(-self.shift, self.period)


class TrigHomeo(CircleMap):
    """x -> x + sum_k a_k sin(2 pi k x / P + phase_k); a homeomorphism when sum 2 pi k |a_k| / P < 1."""

    def __init__(self, terms: Sequence[tuple[int, float, float]], period: float = TWO_PI):
        self.terms = tuple((int(k), float(a), float(p)) for k, a, p in terms)
        self.period = float(period)
        w = TWO_PI / self.period
        if sum(w * k * abs(a) for k, a, _ in self.terms) >= 1.0:
            raise ActionError("displacement too large: map is not monotone")

    @property
    def sup_displacement(self) -> float:
        return float(sum(abs(a) for _, a, _ in self.terms))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        w = TWO_PI / self.period
        y = x + sum(a * np.sin(w * k * x + p) for k, a, p in self.terms)
        return np.mod(y, self.period)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        w = TWO_PI / self.period
        return 1.0 + sum(a * w * k * np.cos(w * k * x + p) for k, a, p in self.terms)

    def lift(self, x):
        x = np.asarray(x, dtype=float)
        w = TWO_PI / self.period
        return x + sum(a * np.sin(w * k * x + p) for k, a, p in self.terms)

    def inverse(self):
        return TrigHomeoInverse(self)


class TrigHomeoInverse(CircleMap):
    """Newton inversion of a TrigHomeo lift, safeguarded by its displacement bound."""

    def __init__(self, h: TrigHomeo):
        self.h = h
        self.period = h.period

    def __call__(self, y):
        y = np.mod(np.asarray(y, dtype=float), self.period)
        x = y.copy()
        for _ in range(60):
            r = self.h.lift(x) - y
            x = x - r / self.h.derivative(x)
            if np.max(np.abs(r), initial=0.0) < 1e-15 * self.period:
                break
        return np.mod(x, self.period)

    def derivative(self, y):
        return 1.0 / self.h.derivative(self(y))

    def inverse(self):
        return self.h


class Composite(CircleMap):
    """maps[0] o maps[1] o ... o maps[-1]."""

    def __init__(self, maps: Sequence[CircleMap]):
        if not maps:
            raise ActionError("empty composition")
        self.maps = tuple(maps)
        self.period = maps[0].period

    def __call__(self, x):
        y = np.asarray(x, dtype=float)
        for f in reversed(self.maps):
            y = f(y)
        return y

    def derivative(self, x):
        y = np.asarray(x, dtype=float)
        d = np.ones_like(y)
        for f in reversed(self.maps):
            d = d * f.derivative(y)
            y = f(y)
        return d

    def inverse(self):
        return Composite([f.inverse() for f in reversed(self.maps)])


def conjugate(h: CircleMap, f: CircleMap) -> CircleMap:
    """h^-1 o f o h."""
    return Composite([h.inverse(), f, h])


class NumericInverse(CircleMap):
    """Inverse of an orientation-preserving circle homeomorphism by bisection on its lift."""

    def __init__(self, f: CircleMap):
        self.f = f
        self.period = f.period

    def __call__(self, y):
        P = self.period
        y = np.mod(np.asarray(y, dtype=float), P)
        f0 = float(self.f(np.array([0.0]))[0])
        # lift F with F(0) = f0 in [0, P); solve F(x) = y or y + P
        target = np.where(y >= f0, y, y + P)
        lo = np.zeros_like(y)
        hi = np.full_like(y, P)
        for _ in range(64):
            mid = 0.5 * (lo + hi)
            fm = f0 + np.mod(self.f(mid) - f0, P)
            below = fm < target
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return np.mod(0.5 * (lo + hi), P)

    def inverse(self):
        return self.f


# ---------------------------------------------------------------------------
# finite actions


class FiniteAction:
    """Generators by label, their inverses, and relation words checked at construction."""

    def __init__(
        self,
        generators: Mapping[str, CircleMap],
        relations: Iterable[Word] = (),
        inverses: Mapping[str, CircleMap] | None = None,
        check: bool = True,
        n_check: int = 10_000,
        seed: int = 0,
        tol: float = RELATION_TOL,
    ):
        if not generators:
            raise ActionError("no generators")
        self.generators = dict(generators)
        periods = {f.period for f in self.generators.values()}
        if len(periods) != 1:
            raise ActionError("generators act on circles of different length")
        self.period = periods.pop()
        self.inverses = dict(inverses) if inverses is not None else {k: f.inverse() for k, f in self.generators.items()}
        self.relations = tuple(relations)
        for w in self.relations:
            for s, _ in w:
                if s not in self.generators:
                    raise ActionError(f"unknown label {s!r} in relation")
        if check and self.relations:
            r = self.relation_residual(n_check, np.random.default_rng(seed))
            if r > tol:
                raise ActionError(f"relations fail: residual {r:.3e}")

    @property
    def labels(self) -> list[str]:
        return list(self.generators)

    def letter(self, s: str, e: int) -> CircleMap:
        return self.generators[s] if e == 1 else self.inverses[s]

    def word_map(self, w: Word) -> CircleMap:
        if not w:
            return Identity(self.period)
        return Composite([self.letter(s, e) for s, e in w])

    def apply(self, w: Word, x: np.ndarray) -> np.ndarray:
        return self.word_map(w)(x)

    def relation_residual(self, n: int = 10_000, rng: np.random.Generator | None = None) -> float:
        rng = np.random.default_rng(0) if rng is None else rng
        x = rng.uniform(0.0, self.period, n)
        worst = 0.0
        for w in self.relations:
            worst = max(worst, float(np.max(circle_distance(self.apply(w, x), x, self.period))))
        return worst

    def letters(self) -> list[tuple[str, int]]:
        return [(s, e) for s in self.generators for e in (1, -1)]


def mobius_action(mats: Mapping[str, np.ndarray], relations: Iterable[Word] = (), **kw: Any) -> FiniteAction:
    return FiniteAction({k: Mobius(m) for k, m in mats.items()}, relations, **kw)


def conjugated_action(rho0: FiniteAction, h: CircleMap) -> FiniteAction:
    """rho = h^-1 rho0 h; h is then a (rho, rho0) conjugacy."""
    gens = {k: conjugate(h, f) for k, f in rho0.generators.items()}
    invs = {k: conjugate(h, f) for k, f in rho0.inverses.items()}
    return FiniteAction(gens, rho0.relations, invs, check=False)


def all_reduced_words(labels: Sequence[str], length: int, inverse_pairs: Mapping[tuple[str, int], tuple[str, int]] | None = None) -> list[Word]:
    """Freely reduced words of the given length in the letters (s, +-1)."""
    letters = [(s, e) for s in labels for e in (1, -1)]
    inv = inverse_pairs or {}

    def cancels(a, b):
        return (a[0] == b[0] and a[1] == -b[1]) or inv.get(a) == b

    words: list[Word] = [()]
    for _ in range(length):
        words = [w + (c,) for w in words for c in letters if not w or not cancels(w[-1], c)]
    return words


def semiconjugacy_residual(rho: FiniteAction, rho0: FiniteAction, phi: Callable[[np.ndarray], np.ndarray], n: int = 10_000, rng: np.random.Generator | None = None) -> float:
    """max over generators (and inverses) and samples of d(rho0(s) phi x, phi rho(s) x)."""
    if set(rho.labels) != set(rho0.labels):
        raise ActionError("generator labels differ")
    rng = rng or np.random.default_rng(0)
    x = rng.uniform(0.0, rho.period, n)
    px = phi(x)
    worst = 0.0
    for s, e in rho.letters():
        lhs = rho0.letter(s, e)(px)
        rhs = phi(rho.letter(s, e)(x))
        worst = max(worst, float(np.max(circle_distance(lhs, rhs, rho0.period))))
    return worst


def sup_distance(f: Callable, g: Callable, period: float, n: int = 10_000, rng: np.random.Generator | None = None) -> float:
    rng = rng or np.random.default_rng(0)
    x = np.concatenate([np.linspace(0.0, period, n, endpoint=False), rng.uniform(0.0, period, n)])
    return float(np.max(circle_distance(f(x), g(x), period)))


# ---------------------------------------------------------------------------
# expansion certificates


@dataclass(frozen=True)
class Arc:
    center: float
    half_width: float
    word: Word

    def contains(self, x: np.ndarray, period: float = TWO_PI) -> np.ndarray:
        return circle_distance(x, self.center, period) < self.half_width

    def depth(self, x: np.ndarray, period: float = TWO_PI) -> np.ndarray:
        """Distance from x to the complement of the arc (negative outside)."""
        return self.half_width - circle_distance(x, self.center, period)

    def to_json(self) -> dict[str, Any]:
        return {"center": self.center, "half_width": self.half_width, "word": format_word(self.word)}


@dataclass
class ExpansionCertificate:
    lam: float
    arcs: list[Arc]
    lebesgue: float
    success: bool
    best_lambda: float
    word_length: int
    period: float = TWO_PI
    message: str = ""

    def to_json(self) -> dict[str, Any]:
        return {
            "lambda": self.lam,
            "success": self.success,
            "lebesgue_number": self.lebesgue,
            "best_lambda": self.best_lambda,
            "word_length": self.word_length,
            "cover": [a.to_json() for a in self.arcs],
            "message": self.message,
        }


def _mobius_expanding_arc(m: np.ndarray, lam: float) -> tuple[float, float] | None:
    """Closed-form arc {theta : derivative >= lam} for a Mobius map, or None."""
    _, s, vt = np.linalg.svd(m)
    s1, s2 = s[0] ** 2, s[1] ** 2
    if s2 >= 1.0 / lam or s1 - s2 < 1e-14:
        return None
    # |m v(theta/2)|^2 = (s1+s2)/2 + (s1-s2)/2 cos(theta - theta1)
    th1 = 2.0 * math.atan2(vt[0, 1], vt[0, 0])
    c = (2.0 / lam - s1 - s2) / (s1 - s2)
    w = math.acos(max(-1.0, min(1.0, -c)))
    return float(np.mod(th1 + math.pi, TWO_PI)), w


def _split_by_image(f: CircleMap, center: float, w: float, period: float, overlap: float = 0.02) -> list[tuple[float, float]]:
    """Overlapping sub-arcs of [center - w, center + w] whose images are at most half the circle.

    On such a sub-arc circle distances of images are image arc lengths, so a
    derivative bound becomes the pairwise expansion bound. Consecutive pieces
    overlap by an image length of `overlap` times the half circle.
    """
    half = 0.5 * period

    def image_len(a: float, b: float) -> float:
        fa, fb = f(np.array([a, b]))
        return float(np.mod(fb - fa, period)) if b > a else 0.0

    a, end = center - w, center + w
    out = []
    while True:
        if end - a <= half and image_len(a, end) <= half:
            out.append((float(np.mod(0.5 * (a + end), period)), 0.5 * (end - a)))
            return out
        lo, hi = a, min(end, a + half)
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if image_len(a, mid) <= half:
                lo = mid
            else:
                hi = mid
        b = lo
        if b - a < 1e-12:
            return out
        out.append((float(np.mod(0.5 * (a + b), period)), 0.5 * (b - a)))
        # step back so that the overlap has image length overlap * half
        lo2, hi2 = a, b
        for _ in range(60):
            mid = 0.5 * (lo2 + hi2)
            if image_len(mid, b) >= overlap * half:
                lo2 = mid
            else:
                hi2 = mid
        a = lo2 if lo2 > a else 0.5 * (a + b)


def _grid_expanding_arcs(f: CircleMap, lam: float, grid: np.ndarray, period: float) -> list[tuple[float, float]]:
    d = np.abs(f.derivative(grid))
    good = d >= lam
    if not good.any():
        return []
    h = grid[1] - grid[0]
    if good.all():
        return [(0.0, 0.5 * period)]
    # runs on the cyclic grid, shrunk by one cell on each side
    start = int(np.argmin(good))
    g = np.roll(good, -start)
    out, i, n = [], 0, len(g)
    while i < n:
        if g[i]:
            j = i
            while j < n and g[j]:
                j += 1
            a, b = (i + start) * h + h, (j - 1 + start) * h - h
            if b > a:
                out.append((float(np.mod(0.5 * (a + b), period)), 0.5 * (b - a)))
            i = j
        else:
            i += 1
    return out


def lebesgue_number(arcs: Sequence[Arc], period: float = TWO_PI, n_grid: int = 20_000) -> tuple[float, list[int]]:
    """(Lebesgue number, indices of arcs realizing it) for a cover of the circle by open arcs.

    The depth function is 1-Lipschitz, so the grid minimum minus half a grid
    step is a lower bound.
    """
    if not arcs:
        return -math.inf, []
    x = np.linspace(0.0, period, n_grid, endpoint=False)
    best = np.full(n_grid, -math.inf)
    arg = np.zeros(n_grid, dtype=int)
    for i, a in enumerate(arcs):
        d = a.depth(x, period)
        better = d > best
        best = np.where(better, d, best)
        arg = np.where(better, i, arg)
    return float(best.min() - 0.5 * period / n_grid), sorted(set(arg.tolist()))


def find_expansion_certificate(action: FiniteAction, lam: float, max_word_length: int = 6, n_grid: int = 4096) -> ExpansionCertificate:
    """Breadth-first search over reduced words for a cover by lam-expanding arcs."""
    if lam <= 1.0:
        raise ActionError("lambda must exceed 1")
    P = action.period
    is_mobius = all(isinstance(f, Mobius) for f in action.generators.values())
    grid = np.linspace(0.0, P, n_grid, endpoint=False)
    candidates: list[Arc] = []
    best_lambda = 1.0 if is_mobius else 0.0
    mats = {}
    if is_mobius:
        for s, f in action.generators.items():
            mats[(s, 1)] = f.m
            mats[(s, -1)] = np.linalg.inv(f.m)
    for length in range(1, max_word_length + 1):
        for w in all_reduced_words(action.labels, length):
            f = action.word_map(w)
            if is_mobius:
                m = np.eye(2)
                for c in w:
                    m = m @ mats[c]
                s = np.linalg.svd(m, compute_uv=False)
                best_lambda = max(best_lambda, 1.0 / s[1] ** 2)
                arc = _mobius_expanding_arc(m, lam)
                raw = [] if arc is None else [arc]
            else:
                best_lambda = max(best_lambda, float(np.max(np.abs(f.derivative(grid)))))
                raw = _grid_expanding_arcs(f, lam, grid, P)
            for c, hw in raw:
                for cc, ww in _split_by_image(f, c, 0.999 * hw, P):
                    candidates.append(Arc(cc, ww, w))
        leb, used = lebesgue_number(candidates, P)
        if leb > 0:
            return ExpansionCertificate(lam, [candidates[i] for i in used], leb, True, best_lambda, length, P)
    return ExpansionCertificate(lam, [], 0.0, False, best_lambda, max_word_length, P, f"no cover within word length {max_word_length}; best lambda {best_lambda:.6g}")


def verify_certificate(action: FiniteAction, cert: ExpansionCertificate, refine: int = 10, n_pairs: int = 2000, rng: np.random.Generator | None = None) -> tuple[bool, float]:
    """Independent re-check: inf derivative on a refined grid inside each arc, plus sampled pairs.

    Returns (ok, smallest inf-derivative seen).
    """
    if not cert.success:
        return False, 0.0
    rng = rng or np.random.default_rng(0)
    P = cert.period
    worst = math.inf
    ok = True
    for a in cert.arcs:
        f = action.word_map(a.word)
        n = max(64, int(refine * 4096 * a.half_width / P))
        x = a.center + np.linspace(-a.half_width, a.half_width, 2 * n + 1)
        d = float(np.min(np.abs(f.derivative(np.mod(x, P)))))
        worst = min(worst, d)
        ok &= d >= cert.lam
        u = a.center + rng.uniform(-a.half_width, a.half_width, (2, n_pairs))
        dxy = circle_distance(u[0], u[1], P)
        dimg = circle_distance(f(np.mod(u[0], P)), f(np.mod(u[1], P)), P)
        ok &= bool(np.all(dimg >= cert.lam * dxy * (1 - 1e-12)))
    ok &= lebesgue_number(cert.arcs, P, 10 * 20_000)[0] > 0
    return bool(ok), worst


# ---------------------------------------------------------------------------
# uniqueness and upgrade probes


@dataclass
class ProbeReport:
    preconditions_met: bool
    passed: bool | None
    value: float
    details: dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> dict[str, Any]:
        return {"preconditions_met": self.preconditions_met, "passed": self.passed, "value": self.value, **self.details}


def uniqueness_probe(
    rho: FiniteAction,
    rho0: FiniteAction,
    phi1: Callable,
    phi2: Callable,
    cert: ExpansionCertificate,
    tol: float = 1e-8,
    n: int = 10_000,
    seed: int = 0,
) -> ProbeReport:
    """If both maps are semi-conjugacies closer than the Lebesgue number of rho0's cover, they agree."""
    rng = np.random.default_rng(seed)
    r1 = semiconjugacy_residual(rho, rho0, phi1, n, rng)
    r2 = semiconjugacy_residual(rho, rho0, phi2, n, rng)
    d = sup_distance(phi1, phi2, rho0.period, n, rng)
    details = {"residual_1": r1, "residual_2": r2, "lebesgue_number": cert.lebesgue}
    pre = cert.success and r1 < tol and r2 < tol and d < cert.lebesgue
    return ProbeReport(pre, (d < 1e-6) if pre else None, d, details)


def lipschitz_distance(f: CircleMap, g: CircleMap, n: int = 20_000) -> float:
    """log Lip(f o g^-1) + log Lip(g o f^-1), sampled on a grid."""
    P = f.period
    x = np.linspace(0.0, P, n, endpoint=False)
    # (f o g^-1)'(y) at y = g(x) equals f'(x) / g'(x)
    ratio = np.abs(f.derivative(x)) / np.abs(g.derivative(x))
    return float(math.log(np.max(ratio)) + math.log(np.max(1.0 / ratio)))


def conjugacy_upgrade_probe(
    rho: FiniteAction,
    rho0: FiniteAction,
    phi: Callable,
    cert: ExpansionCertificate,
    tol: float = 1e-8,
    scales: int = 30,
    pairs_per_scale: int = 2000,
    seed: int = 0,
) -> ProbeReport:
    """Search for non-injectivity of phi at scales eps / lam'^n.

    Preconditions: phi is a semi-conjugacy within eps/2 of the identity and
    every witness word of the cover is log-Lipschitz close (below
    log(lam / lam')) to its unperturbed version.
    """
    rng = np.random.default_rng(seed)
    P = rho0.period
    lam_p = math.sqrt(cert.lam)
    eps = cert.lebesgue
    res = semiconjugacy_residual(rho, rho0, phi, 10_000, rng)
    d0 = sup_distance(phi, Identity(P), P, 10_000, rng)
    witnesses = {a.word for a in cert.arcs}
    dl = max((lipschitz_distance(rho.word_map(w), rho0.word_map(w)) for w in witnesses), default=math.inf)
    pre = cert.success and res < tol and d0 < eps / 2 and dl < math.log(cert.lam / lam_p)
    collapses: list[tuple[float, float]] = []
    min_ratio = math.inf
    for k in range(1, scales + 1):
        r = eps / lam_p**k
        x = rng.uniform(0.0, P, pairs_per_scale)
        y = np.mod(x + r, P)
        dimg = circle_distance(phi(x), phi(y), P)
        min_ratio = min(min_ratio, float(np.min(dimg)) / r)
        hit = np.flatnonzero(dimg <= 1e-14 * P)
        collapses.extend((float(x[i]), float(y[i])) for i in hit[:3])
    details = {
        "residual": res,
        "sup_distance_to_id": d0,
        "lipschitz_distance": dl,
        "lipschitz_threshold": math.log(cert.lam / lam_p),
        "collapse_witnesses": collapses[:20],
        "n_collapses": len(collapses),
        "min_image_ratio": min_ratio,
    }
    injective = not collapses
    return ProbeReport(pre, injective if pre else None, float(len(collapses)), details)


# ---------------------------------------------------------------------------
# Denjoy blow-up


def truncated_schedule(n: int, total: float, p: float = 2.0) -> np.ndarray:
    """r_i proportional to (1+i)^-p - (1+n)^-p, scaled to sum to `total`; vanishes at the cap."""
    i = np.arange(n, dtype=float)
    r = (1.0 + i) ** (-p) - (1.0 + n) ** (-p)
    s = r.sum()
    return r * (total / s) if s > 0 else r


def orbit_bfs(base: FiniteAction, x0: float, cap: int, merge_tol: float = 1e-9) -> tuple[np.ndarray, dict[tuple[str, int], np.ndarray]]:
    """Orbit points in breadth-first order and the neighbor table (index or -1 outside the cap)."""
    P = base.period
    letters = base.letters()
    pts = [float(np.mod(x0, P))]
    keys: dict[int, list[int]] = {}
    scale = 1.0 / (10 * merge_tol)

    def lookup(x):
        k = int(math.floor(x * scale))
        for kk in (k - 1, k, k + 1):
            for j in keys.get(kk, ()):
                if circle_distance(pts[j], x, P) < merge_tol:
                    return j
        return -1

    def add(x):
        k = int(math.floor(x * scale))
        keys.setdefault(k, []).append(len(pts) - 1)

    add(pts[0])
    queue = deque([0])
    while queue and len(pts) < cap:
        j = queue.popleft()
        for c in letters:
            y = float(base.letter(*c)(np.array([pts[j]]))[0])
            if lookup(y) < 0 and len(pts) < cap:
                pts.append(y)
                add(y)
                queue.append(len(pts) - 1)
    arr = np.array(pts)
    nb = {}
    for c in letters:
        imgs = base.letter(*c)(arr)
        nb[c] = np.array([lookup(float(y)) for y in imgs], dtype=int)
    return arr, nb


class DenjoyBlowup:
    """Insert an interval of length ell_j at each sampled orbit point p_j.

    Internally the blown-up circle has length period + sum(ell); the public
    action and collapsing map use the renormalized circle of the base period.
    """

    def __init__(self, base: FiniteAction, points: np.ndarray, lengths: np.ndarray, neighbors: Mapping[tuple[str, int], np.ndarray]):
        if len(points) != len(lengths):
            raise ActionError("one length per orbit point")
        self.base = base
        P = base.period
        order = np.argsort(points)
        rank = np.empty_like(order)
        rank[order] = np.arange(len(order))
        self.p = np.asarray(points, dtype=float)[order]
        self.ell = np.asarray(lengths, dtype=float)[order]
        if np.any(self.ell < 0):
            raise ActionError("negative interval length")
        self.nb = {c: np.where(v[order] >= 0, rank[np.maximum(v[order], 0)], -1) for c, v in neighbors.items()}
        self.cum = np.concatenate([[0.0], np.cumsum(self.ell)])
        self.starts = self.p + self.cum[:-1]
        self.period = P
        self.total_length = P + float(self.cum[-1])
        self.scale = P / self.total_length
        gaps = np.diff(np.concatenate([self.p, [self.p[0] + P]])) if len(self.p) else np.array([P])
        if np.any(gaps <= 0):
            raise ActionError("orbit points are not distinct")

    # -- internal coordinates ------------------------------------------------------
    def _psi(self, x: np.ndarray) -> np.ndarray:
        """Base circle -> blown circle; an orbit point goes to its interval start."""
        x = np.mod(x, self.period)
        k = np.searchsorted(self.p, x, side="left")
        return x + self.cum[k]

    def _locate(self, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        k = np.searchsorted(self.starts, y, side="right") - 1
        kk = np.maximum(k, 0)
        inside = (k >= 0) & (y <= self.starts[kk] + self.ell[kk]) & (self.ell[kk] > 0)
        return kk, inside

    def _collapse(self, y: np.ndarray) -> np.ndarray:
        y = np.mod(y, self.total_length)
        k, inside = self._locate(y)
        below = np.searchsorted(self.starts, y, side="right")
        out = y - self.cum[below]
        return np.mod(np.where(inside, self.p[k], out), self.period)

    def _act(self, c: tuple[str, int], y: np.ndarray) -> np.ndarray:
        y = np.mod(y, self.total_length)
        f = self.base.letter(*c)
        k, inside = self._locate(y)
        out = self._psi(f(self._collapse(y)))
        nb = self.nb[c][k]
        has = inside & (nb >= 0) & (self.ell[np.maximum(nb, 0)] > 0)
        tgt = np.maximum(nb, 0)
        aff = self.starts[tgt] + (y - self.starts[k]) * self.ell[tgt] / np.where(self.ell[k] > 0, self.ell[k], 1.0)
        lone = inside & ~has
        out = np.where(has, aff, out)
        out = np.where(lone, self._psi(f(self.p[k])), out)
        return np.mod(out, self.total_length)

    # -- public, renormalized ------------------------------------------------------
    def collapse(self, x: np.ndarray) -> np.ndarray:
        return self._collapse(np.asarray(x, dtype=float) / self.scale)

    def collapse_by_bisection(self, x: np.ndarray) -> np.ndarray:
        """Independent construction of the collapsing map: phi(y) = sup{t : psi(t) <= y}."""
        y = np.mod(np.asarray(x, dtype=float) / self.scale, self.total_length)
        lo = np.zeros_like(y)
        hi = np.full_like(y, self.period)
        for _ in range(70):
            mid = 0.5 * (lo + hi)
            le = self._psi(mid) <= y
            lo = np.where(le, mid, lo)
            hi = np.where(le, hi, mid)
        return np.mod(lo, self.period)

    def inserted(self, x: np.ndarray) -> np.ndarray:
        """True where x lies strictly inside an inserted interval."""
        y = np.mod(np.asarray(x, dtype=float) / self.scale, self.total_length)
        k, inside = self._locate(y)
        return inside & (y > self.starts[k]) & (y < self.starts[k] + self.ell[k])

    def interval_index(self, x: np.ndarray) -> np.ndarray:
        y = np.mod(np.asarray(x, dtype=float) / self.scale, self.total_length)
        k, inside = self._locate(y)
        return np.where(inside, k, -1)

    def action(self) -> FiniteAction:
        gens, invs = {}, {}
        for s in self.base.labels:
            gens[s] = _BlownMap(self, (s, 1))
            invs[s] = _BlownMap(self, (s, -1))
        return FiniteAction(gens, self.base.relations, invs, check=False)

    def interval_endpoints(self, j: int) -> tuple[float, float]:
        return float(self.starts[j] * self.scale), float((self.starts[j] + self.ell[j]) * self.scale)


class _BlownMap(CircleMap):
    def __init__(self, blowup: DenjoyBlowup, letter: tuple[str, int]):
        self.b = blowup
        self.c = letter
        self.period = blowup.period

    def __call__(self, x):
        y = np.asarray(x, dtype=float) / self.b.scale
        return np.mod(self.b._act(self.c, y) * self.b.scale, self.period)

    def inverse(self):
        return _BlownMap(self.b, (self.c[0], -self.c[1]))


def denjoy_blowup(base: FiniteAction, x0: float, schedule: Sequence[float] | None = None, total: float = 0.5, cap: int = 10_000, merge_tol: float = 1e-9) -> tuple[FiniteAction, Callable[[np.ndarray], np.ndarray], DenjoyBlowup]:
    """Blow up the orbit of x0. Returns (blown-up action, collapsing map, the blow-up)."""
    if schedule is not None and len(schedule) == 0:
        b = DenjoyBlowup(base, np.zeros(0), np.zeros(0), {c: np.zeros(0, dtype=int) for c in base.letters()})
        return base, Identity(base.period), b
    n = cap if schedule is None else min(cap, len(schedule))
    pts, nb = orbit_bfs(base, x0, n, merge_tol)
    lengths = truncated_schedule(len(pts), total) if schedule is None else np.asarray(schedule, dtype=float)[: len(pts)]
    if len(pts) > 1:
        gap = float(np.min(np.diff(np.sort(pts))))
        if gap < 100 * merge_tol:
            raise ActionError(f"orbit points too close to insert intervals (gap {gap:.2e})")
    b = DenjoyBlowup(base, pts, lengths, nb)
    return b.action(), b.collapse, b


def rotation_number(f: CircleMap, x0: float = 0.0, n: int = 10_000) -> float:
    """Average displacement per iterate, assuming the lift has displacement in [0, period)."""
    P = f.period
    x = np.array([x0])
    total = 0.0
    for _ in range(n):
        y = f(x)
        total += float(np.mod(y - x, P)[0])
        x = y
    return total / (n * P)


# ---------------------------------------------------------------------------
# chamber deformation rho_alpha on PSL(2) x PSL(2)

CHAMBER_CENTER = 0.25 * math.pi


@dataclass(frozen=True)
class ChamberCoordinate:
    """A face pair (xi, eta) of circle angles and an interior angle theta in [0, pi/2].

    The chart value t = tau(theta) is carried alongside theta: near a face theta
    rounds to 0 or pi/2 long before t stops being representable.
    """

    xi: float
    eta: float
    theta: float
    t: float | None = None

    def __post_init__(self):
        if not (0.0 <= self.theta <= 0.5 * math.pi):
            raise ActionError("theta outside [0, pi/2]")
        if self.t is None:
            if self.theta == 0.0:
                t = -math.inf
            elif self.theta == 0.5 * math.pi:
                t = math.inf
            else:
                t = float(tau(self.theta))
            object.__setattr__(self, "t", t)
        object.__setattr__(self, "xi", float(np.mod(self.xi, TWO_PI)))
        object.__setattr__(self, "eta", float(np.mod(self.eta, TWO_PI)))

    def to_json(self) -> dict[str, float]:
        return {"xi": self.xi, "eta": self.eta, "theta": self.theta}

    @property
    def on_face(self) -> bool:
        return not math.isfinite(self.t)


def tau(theta: np.ndarray | float) -> np.ndarray:
    """Chamber chart log tan theta; the center maps to 0 and the faces to -inf, +inf."""
    with np.errstate(divide="ignore"):
        return np.log(np.tan(np.asarray(theta, dtype=float)))


def tau_inv(t: np.ndarray | float) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    with np.errstate(over="ignore"):
        return np.where(t > 0, 0.5 * np.pi - np.arctan(np.exp(-t)), np.arctan(np.exp(t)))


def from_chart(xi: float, eta: float, t: float) -> ChamberCoordinate:
    return ChamberCoordinate(xi, eta, float(tau_inv(t)), float(t))


def chamber_cocycle(g: GroupElement, xi: float, eta: float) -> float:
    return cocycle(g, [xi, eta])


class RhoAlpha:
    """kappa_g(xi, eta, theta) = (g1 xi, g2 eta, tau^-1(c(g, (xi, eta))^alpha tau(theta)))."""

    def __init__(self, alpha: float):
        if alpha < 0:
            raise ActionError("alpha must be nonnegative")
        self.alpha = float(alpha)

    def act(self, g: GroupElement, p: ChamberCoordinate) -> ChamberCoordinate:
        if g.group != PSL2xPSL2:
            raise ActionError("rho_alpha acts through PSL(2) x PSL(2)")
        xi = float(circle_action(g.factors[0], p.xi))
        eta = float(circle_action(g.factors[1], p.eta))
        t = p.t
        if math.isfinite(t) and self.alpha > 0:
            c = chamber_cocycle(g, p.xi, p.eta)
            t = c**self.alpha * t
        return from_chart(xi, eta, t)

    def action_residual(self, g: GroupElement, h: GroupElement, p: ChamberCoordinate) -> float:
        a = self.act(g @ h, p)
        b = self.act(g, self.act(h, p))
        return max(
            float(circle_distance(a.xi, b.xi)),
            float(circle_distance(a.eta, b.eta)),
            abs(a.theta - b.theta),
        )


@dataclass
class CollapseTrace:
    xi: float
    eta: float
    thetas: list[float]
    cocycle_value: float
    limit: float
    converged: bool
    monotone_from: int | None

    def to_json(self) -> dict[str, Any]:
        return {
            "thetas": self.thetas,
            "cocycle": self.cocycle_value,
            "limit": self.limit,
            "converged": self.converged,
            "monotone_from": self.monotone_from,
        }

    def csv(self) -> str:
        rows = ["n,theta,face_xi,face_eta"]
        rows += [f"{n},{t:.17g},{self.xi:.17g},{self.eta:.17g}" for n, t in enumerate(self.thetas)]
        return "\n".join(rows) + "\n"


def chamber_collapse_witness(alpha: float, gamma: GroupElement, xi: float, eta: float, theta0: float, n_iter: int = 50, tol: float = 1e-6) -> CollapseTrace:
    """Iterate kappa_gamma on an interior theta of a chamber whose face pair gamma fixes."""
    rho = RhoAlpha(alpha)
    p = ChamberCoordinate(xi, eta, theta0)
    q = rho.act(gamma, p)
    if circle_distance(q.xi, p.xi) > 1e-10 or circle_distance(q.eta, p.eta) > 1e-10:
        raise ActionError("gamma does not stabilize the face pair")
    c = chamber_cocycle(gamma, xi, eta)
    if abs(c - 1.0) < 1e-12:
        raise ActionError("cocycle equals 1 on this chamber")
    thetas = [p.theta]
    for _ in range(n_iter):
        p = rho.act(gamma, p)
        thetas.append(p.theta)
    if alpha == 0:
        limit = theta0
    else:
        limit = CHAMBER_CENTER if c < 1 else (0.5 * math.pi if theta0 > CHAMBER_CENTER else 0.0)
    diffs = np.diff(np.abs(np.asarray(thetas) - limit))
    mono = None
    for k in range(len(diffs)):
        if np.all(diffs[k:] <= 0):
            mono = k
            break
    return CollapseTrace(p.xi, p.eta, thetas, c, limit, abs(thetas[-1] - limit) < tol, mono)


def deformation_sup(alpha: float, g: GroupElement, n: int = 400, rng: np.random.Generator | None = None) -> float:
    """sup over a sample of |theta-component of kappa^alpha - kappa^0|."""
    rng = rng or np.random.default_rng(0)
    r0, ra = RhoAlpha(0.0), RhoAlpha(alpha)
    worst = 0.0
    for xi, eta, th in zip(rng.uniform(0, TWO_PI, n), rng.uniform(0, TWO_PI, n), rng.uniform(0, 0.5 * math.pi, n)):
        p = ChamberCoordinate(xi, eta, th)
        worst = max(worst, abs(ra.act(g, p).theta - r0.act(g, p).theta))
    return worst
