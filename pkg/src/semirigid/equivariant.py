"""An equivariant section of the unit tangent bundle of H^2 for a perturbed
genus-2 boundary action.

H^2 = SL(2)/SO(2) with curvature -1; a base point is the SPD matrix X = g g^T,
and d(X, Y) = arccosh(tr(X^-1 Y) / 2). The unit circle T^1_x is read through
the frame g_x = X^(1/2): the angle psi is the direction whose geodesic ray
ends at the boundary point circle_action(g_x, psi). With this convention
pi_x(psi) = g_x . psi and pi_o is the identity.

The lattice is generated by the side pairings of the regular octagon with
vertex angle pi/4. f~(x, xi) is the barycenter on T^1_x of the atoms
pi_x^-1(rho0(gamma_j) rho(gamma_j)^-1 xi) weighted by a lifted partition of
unity.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable, Sequence

import numpy as np

from .barycenter import (
    CircleFamily,
    GuardError,
    MetricFamilyInstance,
    WeightedDirac,
    d_bar_total,
    grassmann_distance,
    graph_span,
    guard_radius,
    solve,
)
from .boundary import (
    TWO_PI,
    CircleMap,
    FiniteAction,
    Mobius,
    TrigHomeo,
    Word,
    circle_distance,
    conjugated_action,
    invert_word,
)
from .lie import circle_action, rotation
from .manifold import Sphere

ARCCOSH_1P = math.acosh(1.0 + math.sqrt(2.0))  # octagon in-radius
OCTAGON_CIRCUMRADIUS = math.acosh((1.0 + math.sqrt(2.0)) ** 2)
LABELS = ("a", "b", "c", "d")


class LatticeError(ValueError):
    pass


# ---------------------------------------------------------------------------
# H^2 helpers


def h2_point(x: np.ndarray) -> np.ndarray:
    """Hyperboloid coordinates (x, y, t) -> SPD matrix [[t + x, y], [y, t - x]]."""
    a, b, t = x
    return np.array([[t + a, b], [b, t - a]])


def h2_coords(X: np.ndarray) -> np.ndarray:
    return np.array([(X[0, 0] - X[1, 1]) / 2, (X[0, 1] + X[1, 0]) / 2, (X[0, 0] + X[1, 1]) / 2])


def h2_distance(X: np.ndarray, Y: np.ndarray) -> float:
    # sinh d is half the eigenvalue gap of X^-1/2 Y X^-1/2; no cancellation near 0
    r = np.linalg.inv(h2_sqrt(X))
    Z = r @ Y @ r
    return math.asinh(math.hypot(0.5 * (Z[0, 0] - Z[1, 1]), 0.5 * (Z[0, 1] + Z[1, 0])))


def cosh_distances(points: np.ndarray, q: np.ndarray) -> np.ndarray:
    """cosh d between hyperboloid rows `points` and one hyperboloid point q."""
    return points[:, 2] * q[2] - points[:, 0] * q[0] - points[:, 1] * q[1]


def h2_act(g: np.ndarray, X: np.ndarray) -> np.ndarray:
    Y = g @ X @ g.T
    return 0.5 * (Y + Y.T)


def h2_sqrt(X: np.ndarray) -> np.ndarray:
    w, u = np.linalg.eigh(X)
    return (u * np.sqrt(w)) @ u.T


def translation(s: Sequence[float]) -> np.ndarray:
    """exp(S/2) with S = [[s1, s2], [s2, -s1]]: moves o a distance |s| along direction s."""
    s1, s2 = float(s[0]), float(s[1])
    r = math.hypot(s1, s2)
    if r == 0:
        return np.eye(2)
    S = np.array([[s1, s2], [s2, -s1]]) / r
    return math.cosh(r / 2) * np.eye(2) + math.sinh(r / 2) * S


def exp_point(X: np.ndarray, s: Sequence[float]) -> np.ndarray:
    """The point g_x exp(s) o: normal coordinates around X in the frame g_x."""
    g = h2_sqrt(X) @ translation(s)
    return g @ g.T


def frame_at(X: np.ndarray, s: Sequence[float] | None = None) -> np.ndarray:
    """Fiber frame at exp_point(X, s): g_x translation(s). At s = 0 it is g_x."""
    g = h2_sqrt(X)
    return g if s is None else g @ translation(s)


def pi_x(X: np.ndarray, psi: np.ndarray | float, frame: np.ndarray | None = None) -> np.ndarray:
    return circle_action(h2_sqrt(X) if frame is None else frame, psi)


def pi_x_inv(X: np.ndarray, xi: np.ndarray | float, frame: np.ndarray | None = None) -> np.ndarray:
    g = h2_sqrt(X) if frame is None else frame
    return circle_action(np.linalg.inv(g), xi)


def fiber_map(g: np.ndarray, X: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    """psi -> fiber angle at gX of the vector dg(v_psi): a rotation."""
    k = np.linalg.inv(h2_sqrt(h2_act(g, X))) @ g @ h2_sqrt(X)
    return lambda psi: circle_action(k, psi)


@dataclass(frozen=True)
class SuspensionPoint:
    """A unit tangent vector: base point on the hyperboloid and a fiber angle."""

    base: np.ndarray
    fiber: float

    def __post_init__(self):
        b = np.asarray(self.base, dtype=float)
        if abs(b[2] ** 2 - b[0] ** 2 - b[1] ** 2 - 1.0) > 1e-8 * max(1.0, b[2] ** 2) or b[2] <= 0:
            raise LatticeError("base is not on the hyperboloid")
        object.__setattr__(self, "base", b)
        object.__setattr__(self, "fiber", float(np.mod(self.fiber, TWO_PI)))

    @property
    def matrix(self) -> np.ndarray:
        return h2_point(self.base)

    @property
    def boundary_point(self) -> float:
        return float(pi_x(self.matrix, self.fiber))

    def act(self, g: np.ndarray) -> "SuspensionPoint":
        X = self.matrix
        return SuspensionPoint(h2_coords(h2_act(g, X)), float(fiber_map(g, X)(self.fiber)))

    def distance(self, other: "SuspensionPoint") -> float:
        """max of base distance and fiber angle distance (fiber angles compared only when bases agree)."""
        d = h2_distance(self.matrix, other.matrix)
        return max(d, float(circle_distance(self.fiber, other.fiber)))

    def to_json(self) -> dict[str, Any]:
        return {"base": [float(v) for v in self.base], "fiber": self.fiber}


# ---------------------------------------------------------------------------
# the octagon lattice


def octagon_generators() -> dict[str, np.ndarray]:
    """Translations by twice the in-radius toward the side midpoints at angles k pi/4.

    The label of side k (k = 0..3) maps side k+4 to side k; side k+4 uses the inverse.
    """
    r = ARCCOSH_1P
    out = {}
    for k, lab in enumerate(LABELS):
        th = k * math.pi / 4
        out[lab] = rotation(th / 2) @ np.diag([math.exp(r), math.exp(-r)]) @ rotation(-th / 2)
    return out


def _canon(m: np.ndarray) -> np.ndarray:
    i = int(np.argmax(np.abs(m)))
    return m if m.flat[i] > 0 else -m


def word_matrix(gens: dict[str, np.ndarray], w: Word) -> np.ndarray:
    m = np.eye(2)
    for s, e in w:
        m = m @ (gens[s] if e == 1 else np.linalg.inv(gens[s]))
    return m


def relator_search(gens: dict[str, np.ndarray], tol: float = 1e-9) -> list[Word]:
    """Words using each generator once with each sign whose product is +-I."""
    letters = [(s, e) for s in gens for e in (1, -1)]
    found = []
    first = letters[0]
    for perm in itertools.permutations(letters[1:]):
        w = (first,) + perm
        if any(w[i][0] == w[i + 1][0] and w[i][1] == -w[i + 1][1] for i in range(len(w) - 1)):
            continue
        m = _canon(word_matrix(gens, w))
        if np.max(np.abs(m - np.eye(2))) < tol:
            found.append(w)
    return found


# found by relator_search and verified by FuchsianLattice
OCTAGON_RELATOR: Word = (("a", 1), ("b", -1), ("c", 1), ("d", -1), ("a", -1), ("b", 1), ("c", -1), ("d", 1))


@dataclass
class GroupWord:
    matrix: np.ndarray
    word: Word


class FuchsianLattice:
    """The genus-2 lattice of the regular octagon with opposite sides paired."""

    def __init__(self, relator: Word = OCTAGON_RELATOR, check: bool = True):
        self.generators = octagon_generators()
        self.relator = tuple(relator)
        if check:
            r = self.relator_residual()
            if r > 1e-9:
                raise LatticeError(f"relator fails: residual {r:.3e}")

    # -- data -----------------------------------------------------------------------
    @property
    def side_pairings(self) -> list[np.ndarray]:
        """All eight side pairings: index k < 4 is a generator, k + 4 its inverse."""
        g = [self.generators[s] for s in LABELS]
        return g + [np.linalg.inv(m) for m in g]

    def relator_residual(self) -> float:
        return float(np.max(np.abs(_canon(word_matrix(self.generators, self.relator)) - np.eye(2))))

    def side_midpoint(self, k: int) -> np.ndarray:
        th = k * math.pi / 4
        g = rotation(th / 2) @ np.diag([math.exp(ARCCOSH_1P / 2), math.exp(-ARCCOSH_1P / 2)])
        return g @ g.T

    def side_pairing_residual(self) -> float:
        """Pairing k maps the midpoint of side k+4 to the midpoint of side k."""
        worst = 0.0
        for k, m in enumerate(self.side_pairings):
            src = self.side_midpoint((k + 4) % 8)
            worst = max(worst, h2_distance(h2_act(m, src), self.side_midpoint(k)))
        return worst

    def boundary_action(self, **kw: Any) -> FiniteAction:
        return FiniteAction({s: Mobius(m) for s, m in self.generators.items()}, [self.relator], **kw)

    # -- fundamental domain ----------------------------------------------------------
    def reduce(self, X: np.ndarray, max_steps: int = 200) -> tuple[np.ndarray, GroupWord]:
        """(X0, gamma) with X0 in the closed octagon and X = gamma X0."""
        m = np.eye(2)
        w: list[tuple[str, int]] = []
        pairs = [(s, e) for s in LABELS for e in (1, -1)]
        for _ in range(max_steps):
            d0 = 0.5 * float(np.trace(X))
            best, arg = d0, None
            for s, e in pairs:
                g = self.generators[s] if e == 1 else np.linalg.inv(self.generators[s])
                c = 0.5 * float(np.trace(h2_act(g, X)))
                if c < best - 1e-13 * d0:
                    best, arg = c, (s, e, g)
            if arg is None:
                return X, GroupWord(m, tuple(w))
            s, e, g = arg
            X = h2_act(g, X)
            # X_old = g^-1 X_new
            m = m @ np.linalg.inv(g)
            w.append((s, -e))
        raise LatticeError("reduction did not terminate")

    def in_domain(self, X: np.ndarray, tol: float = 1e-12) -> bool:
        c = 0.5 * float(np.trace(X))
        return all(0.5 * float(np.trace(h2_act(g, X))) >= c * (1 - tol) for g in self.side_pairings)

    def sample_domain(self, n: int, rng: np.random.Generator) -> list[np.ndarray]:
        """Points of the octagon by rejection from the circumscribed ball."""
        out = []
        R = OCTAGON_CIRCUMRADIUS
        while len(out) < n:
            # area-uniform radius in the hyperbolic disk of radius R
            u = rng.uniform(0.0, math.cosh(R) - 1.0)
            r = math.acosh(1.0 + u)
            phi = rng.uniform(0.0, TWO_PI)
            X = exp_point(np.eye(2), (r * math.cos(phi), r * math.sin(phi)))
            if self.in_domain(X):
                out.append(X)
        return out

    @cached_property
    def elements(self) -> list[GroupWord]:
        """Group elements moving o at most 2 R_c + 2, found by breadth-first search."""
        limit = math.cosh(2 * OCTAGON_CIRCUMRADIUS + 2.0)
        pairs = [(s, e) for s in LABELS for e in (1, -1)]
        seen = {(0.0, 0.0)}
        out = [GroupWord(np.eye(2), ())]
        frontier = list(out)
        while frontier:
            nxt = []
            for gw in frontier:
                for s, e in pairs:
                    g = self.generators[s] if e == 1 else np.linalg.inv(self.generators[s])
                    m = gw.matrix @ g
                    X = m @ m.T
                    if 0.5 * np.trace(X) > limit:
                        continue
                    key = (round(X[0, 0] - X[1, 1], 6), round(X[0, 1], 6))
                    if key in seen:
                        continue
                    seen.add(key)
                    item = GroupWord(m, gw.word + ((s, e),))
                    out.append(item)
                    nxt.append(item)
            frontier = nxt
        return out


# ---------------------------------------------------------------------------
# partition of unity


def bump(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = t < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - t[inside] ** 2))
    return out


@dataclass
class Lift:
    element: GroupWord
    center_index: int
    center: np.ndarray  # gamma c_i


@dataclass
class Partition:
    lattice: FuchsianLattice
    radius: float
    centers: list[np.ndarray]
    lifts: list[Lift] = field(default_factory=list)

    @cached_property
    def _lift_coords(self) -> np.ndarray:
        return np.array([h2_coords(L.center) for L in self.lifts])

    def lifts_near(self, X0: np.ndarray) -> tuple[list[Lift], np.ndarray]:
        """Lifts whose ball contains X0 (X0 in the domain) and their normalized weights."""
        c = cosh_distances(self._lift_coords, h2_coords(X0))
        idx = np.flatnonzero(c < math.cosh(self.radius))
        d = np.arccosh(np.maximum(c[idx], 1.0))
        raw = bump(d / self.radius)
        s = raw.sum()
        if s <= 0:
            raise LatticeError("point not covered by the partition")
        return [self.lifts[i] for i in idx], raw / s

    def weights_at(self, X: np.ndarray) -> tuple[GroupWord, list[Lift], np.ndarray]:
        X0, g0 = self.lattice.reduce(X)
        hit, w = self.lifts_near(X0)
        return g0, hit, w

    def multiplicity(self, X: np.ndarray) -> int:
        return len(self.weights_at(X)[1])

    @property
    def s_w_lengths(self) -> list[int]:
        return sorted({len(L.element.word) for L in self.lifts})


def build_partition(lattice: FuchsianLattice, radius: float = 0.7, cover_fraction: float = 0.75, n_probe: int = 3000, seed: int = 0) -> Partition:
    """Ball centers in the octagon chosen greedily until every probe point of the
    closed domain lies within cover_fraction * radius of some lifted center."""
    if radius >= 0.5 * ARCCOSH_1P:
        raise LatticeError("chart radius must be below half the octagon in-radius")
    rng = np.random.default_rng(seed)
    probes = lattice.sample_domain(n_probe, rng)
    # include boundary vertices and midpoints where coverage is hardest
    for k in range(8):
        probes.append(lattice.side_midpoint(k))
        th = (k + 0.5) * math.pi / 4
        v = exp_point(np.eye(2), (OCTAGON_CIRCUMRADIUS * math.cos(th), OCTAGON_CIRCUMRADIUS * math.sin(th)))
        probes.append(v)
    near = [gw for gw in lattice.elements if 0.5 * np.trace(gw.matrix @ gw.matrix.T) <= math.cosh(2 * OCTAGON_CIRCUMRADIUS + 0.1)]
    target = math.cosh(cover_fraction * radius)
    coords = np.array([h2_coords(p) for p in probes])
    centers: list[np.ndarray] = []
    best = np.full(len(probes), math.inf)
    while best.max() >= target:
        i = int(np.argmax(best))
        c = probes[i]
        centers.append(c)
        for gw in near:
            best = np.minimum(best, cosh_distances(coords, h2_coords(h2_act(gw.matrix, c))))
    part = Partition(lattice, radius, centers)
    reach = math.cosh(OCTAGON_CIRCUMRADIUS + radius + 1e-6)
    for gw in lattice.elements:
        for i, c in enumerate(centers):
            gc = h2_act(gw.matrix, c)
            if 0.5 * np.trace(gc) < reach:
                part.lifts.append(Lift(gw, i, gc))
    return part


def partition_sum_residual(part: Partition, points: Sequence[np.ndarray]) -> float:
    worst = 0.0
    for X in points:
        _, _, w = part.weights_at(X)
        worst = max(worst, abs(float(w.sum()) - 1.0))
    return worst


def lift_isometry_residual(part: Partition, rng: np.random.Generator, pairs: int = 200) -> float:
    """|d_quotient(x, y) - d(x, y)| for pairs in a lifted ball; d_quotient = min over the group."""
    worst = 0.0
    for _ in range(pairs):
        c = part.centers[int(rng.integers(len(part.centers)))]
        pts = []
        for _ in range(2):
            r = part.radius * math.sqrt(rng.uniform()) * 0.999
            phi = rng.uniform(0, TWO_PI)
            pts.append(exp_point(c, (r * math.cos(phi), r * math.sin(phi))))
        d = h2_distance(pts[0], pts[1])
        dq = min(h2_distance(pts[0], h2_act(gw.matrix, pts[1])) for gw in part.lattice.elements)
        worst = max(worst, abs(dq - d))
    return worst


# ---------------------------------------------------------------------------
# perturbed representations


class Representation:
    """rho(gamma) for lattice elements given by matrix and word."""

    period = TWO_PI

    def of(self, gw: GroupWord) -> CircleMap:
        raise NotImplementedError

    def of_inverse(self, gw: GroupWord) -> CircleMap:
        raise NotImplementedError


class StandardRepresentation(Representation):
    def of(self, gw):
        return Mobius(gw.matrix)

    def of_inverse(self, gw):
        return Mobius(np.linalg.inv(gw.matrix))


class ConjugateRepresentation(Representation):
    """rho = h^-1 rho0 h, evaluated through the matrix so that it is exactly a homomorphism."""

    def __init__(self, h: CircleMap):
        self.h = h
        self.h_inv = h.inverse()

    def of(self, gw):
        m = Mobius(gw.matrix)
        return _Chain([self.h_inv, m, self.h])

    def of_inverse(self, gw):
        m = Mobius(np.linalg.inv(gw.matrix))
        return _Chain([self.h_inv, m, self.h])

    def action(self, lattice: FuchsianLattice) -> FiniteAction:
        return conjugated_action(lattice.boundary_action(), self.h)


class WordRepresentation(Representation):
    """rho evaluated letter by letter from a FiniteAction."""

    def __init__(self, action: FiniteAction):
        self.action = action

    def of(self, gw):
        return self.action.word_map(gw.word)

    def of_inverse(self, gw):
        return self.action.word_map(invert_word(gw.word))


class _Chain(CircleMap):
    def __init__(self, maps):
        self.maps = maps
        self.period = TWO_PI

    def __call__(self, x):
        y = np.asarray(x, dtype=float)
        for f in reversed(self.maps):
            y = f(y)
        return y


def trig_perturbation(amplitude: float, mode: int = 2, phase: float = 0.3) -> TrigHomeo:
    """A circle homeomorphism with sup displacement `amplitude`."""
    return TrigHomeo([(mode, amplitude, phase)])


# ---------------------------------------------------------------------------
# f~


@dataclass
class FiberMeasure:
    """The atoms (fiber angles at x) and weights used by f~ at (x, xi)."""

    X: np.ndarray
    atoms: np.ndarray
    weights: np.ndarray
    boundary_atoms: np.ndarray
    lifts: list[Lift]

    @property
    def diameter(self) -> float:
        a = self.atoms
        return float(max((circle_distance(p, q) for p in a for q in a), default=0.0))


class FTilde:
    """f~(x, xi) = bar_x(sum_j sigma_j(x) delta_{pi_x^-1(xi_j)}) with xi_j = rho0(gamma_j) rho(gamma_j)^-1 xi."""

    def __init__(self, partition: Partition, rho: Representation):
        self.partition = partition
        self.rho = rho
        self.circle = Sphere(1)
        self.guard = guard_radius(self.circle)

    def _atoms(self, X: np.ndarray, xi: float, frame: np.ndarray | None = None, at: np.ndarray | None = None) -> FiberMeasure:
        """Atoms at X; the lift set and weights are read at `at` (default X)."""
        g0, hit, w = self.partition.weights_at(X if at is None else at)
        b = []
        for L in hit:
            m = g0.matrix @ L.element.matrix
            gw = GroupWord(m, g0.word + L.element.word)
            y = self.rho.of_inverse(gw)(np.array([xi]))
            b.append(float(circle_action(m, y)[0]))
        b = np.array(b)
        atoms = np.mod(pi_x_inv(X, b, frame), TWO_PI)
        return FiberMeasure(X, atoms, w, b, hit)

    def measure(self, X: np.ndarray, xi: float) -> FiberMeasure:
        return self._atoms(X, xi)

    def fiber_angle(self, fm: FiberMeasure) -> float:
        if fm.diameter >= self.guard:
            raise GuardError(f"atom diameter {fm.diameter:.3g} exceeds the fiber guard at xi atoms {fm.boundary_atoms}")
        pts = [np.array([math.cos(a), math.sin(a)]) for a in fm.atoms]
        mu = WeightedDirac(self.circle, fm.weights, pts)
        res = solve(mu, guard=False)
        return float(np.mod(math.atan2(res.point[1], res.point[0]), TWO_PI))

    def __call__(self, X: np.ndarray, xi: float) -> SuspensionPoint:
        fm = self._atoms(X, xi)
        return SuspensionPoint(h2_coords(X), self.fiber_angle(fm))

    def eta(self, X: np.ndarray, xi: float) -> float:
        return float(pi_x(X, self(X, xi).fiber))


def build_f_tilde(lattice: FuchsianLattice, rho: Representation, radius: float = 0.7, seed: int = 0) -> FTilde:
    return FTilde(build_partition(lattice, radius, seed=seed), rho)


def equivariance_residual(ft: FTilde, X: np.ndarray, xi: float, g: GroupWord) -> float:
    """d(f~(gx, rho(g) xi), rho0^(g) f~(x, xi))."""
    lhs = ft(h2_act(g.matrix, X), float(ft.rho.of(g)(np.array([xi]))[0]))
    rhs = ft(X, xi).act(g.matrix)
    return lhs.distance(rhs)


def section_residual(ft: FTilde, X: np.ndarray, xi: float) -> float:
    """d(pi_x f~(x, xi), xi): the part-3 quantity."""
    return float(circle_distance(ft.eta(X, xi), xi))


def leaf_proximity_report(ft: FTilde, xi: float, X: np.ndarray, R: float, n_radial: int = 4, n_angular: int = 8) -> float:
    """sup over a polar grid of B_R(x) of the fiber distance between f~(y, xi) and pi_y^-1(eta)."""
    eta = ft.eta(X, xi)
    worst = 0.0
    radii = [0.0] if R == 0 else np.linspace(0.0, R, n_radial + 1)
    for r in radii:
        for k in range(n_angular if r > 0 else 1):
            phi = TWO_PI * k / n_angular
            Y = exp_point(X, (r * math.cos(phi), r * math.sin(phi)))
            psi = ft(Y, xi).fiber
            worst = max(worst, float(circle_distance(psi, pi_x_inv(Y, eta))))
    return worst


@dataclass
class TiltReport:
    tilt: float
    budget: float
    derivative: np.ndarray
    leaf_derivative: np.ndarray

    def to_json(self) -> dict[str, Any]:
        return {"tilt": self.tilt, "budget": self.budget}


def _unwrap_near(a: np.ndarray, ref: np.ndarray) -> np.ndarray:
    return ref + np.mod(a - ref + math.pi, TWO_PI) - math.pi


def tangent_tilt(ft: FTilde, X: np.ndarray, xi: float, h: float = 1e-5) -> TiltReport:
    """Grassmann distance between T f~(. , xi) and the center-stable leaf through f~(x, xi).

    Both sections are read in the frame g_x translation(s), which is parallel
    along radial geodesics from x, so the product metric agrees with the
    Sasaki metric at x. The barycenter derivative comes from the circle
    family derivative engine; atom and weight velocities are central
    differences in s.
    """
    fm0 = ft._atoms(X, xi)
    eta = float(pi_x(X, ft.fiber_angle(fm0)))
    n = len(fm0.atoms)
    dz = np.zeros((n, 1, 2))
    dw = np.zeros((n, 2))
    dleaf = np.zeros(2)
    ref = fm0.atoms
    for k in range(2):
        e = np.zeros(2)
        e[k] = h
        vals = []
        for sgn in (1.0, -1.0):
            Y = exp_point(X, sgn * e)
            fr = frame_at(X, sgn * e)
            fm = ft._atoms(Y, xi, frame=fr, at=Y)
            if [id(L) for L in fm.lifts] != [id(L) for L in fm0.lifts]:
                # a lift enters or leaves with weight zero; align by identity
                w = np.zeros(n)
                a = ref.copy()
                for j, L in enumerate(fm0.lifts):
                    if L in fm.lifts:
                        jj = fm.lifts.index(L)
                        w[j] = fm.weights[jj]
                        a[j] = fm.atoms[jj]
                fm = FiberMeasure(Y, a, w / w.sum(), fm0.boundary_atoms, fm0.lifts)
            leaf = float(pi_x_inv(Y, eta, fr))
            vals.append((_unwrap_near(fm.atoms, ref), fm.weights, leaf))
        (ap, wp, lp), (am, wm, lm) = vals
        dz[:, 0, k] = (ap - am) / (2 * h)
        dw[:, k] = (wp - wm) / (2 * h)
        dleaf[k] = float(_unwrap_near(np.array([lp]), np.array([lm]))[0] - lm) / (2 * h)
    # the normalized weights sum to one; remove finite-difference drift
    dw -= dw.mean(axis=0, keepdims=True)
    inst = MetricFamilyInstance(CircleFamily(2), np.zeros(2), ref.reshape(n, 1), fm0.weights, dz, dw)
    td = d_bar_total(inst, check=False)
    D = td.derivative
    L = dleaf.reshape(1, 2)
    tilt = grassmann_distance(graph_span(D), graph_span(L))
    bar = float(np.sum(fm0.weights * _unwrap_near(ref, ref[int(np.argmax(fm0.weights))])))
    spread = float(np.max(np.abs(_unwrap_near(ref, np.full(n, bar)) - bar))) if n else 0.0
    budget = spread * float(np.sum(np.linalg.norm(dw, axis=1))) + float(max(np.linalg.norm(dz[j, 0] - dleaf) for j in range(n)))
    return TiltReport(tilt, budget, D, L)


def max_atom_diameter(ft: FTilde, points: Sequence[np.ndarray], xis: Sequence[float]) -> float:
    return max(ft.measure(X, xi).diameter for X, xi in zip(points, xis))


# ---------------------------------------------------------------------------
# reports


def generator_elements(lattice: FuchsianLattice) -> list[GroupWord]:
    """The eight side pairings as group words."""
    out = []
    for s in LABELS:
        for e in (1, -1):
            m = lattice.generators[s] if e == 1 else np.linalg.inv(lattice.generators[s])
            out.append(GroupWord(m, ((s, e),)))
    return out


def seam_samples(part: Partition, n: int, rng: np.random.Generator, max_tries: int = 100_000) -> list[np.ndarray]:
    """Domain points whose lifted balls involve at least two group elements.

    Away from these seams every atom is the identity lift and f~ is the exact section.
    """
    out = []
    for _ in range(max_tries):
        X = part.lattice.sample_domain(1, rng)[0]
        _, hit, _ = part.weights_at(X)
        if len({L.element.word for L in hit}) > 1:
            out.append(X)
            if len(out) == n:
                return out
    raise LatticeError("too few seam samples found")


def equivariance_report(ft: FTilde, points: Sequence[np.ndarray], xis: Sequence[float]) -> float:
    gens = generator_elements(ft.partition.lattice)
    return max(equivariance_residual(ft, X, xi, g) for X, xi in zip(points, xis) for g in gens)


def covers_identity_residual(ft: FTilde, points: Sequence[np.ndarray], xis: Sequence[float]) -> float:
    """max |p f~(x, xi) - x| in hyperboloid coordinates."""
    return max(float(np.max(np.abs(ft(X, xi).base - h2_coords(X)))) for X, xi in zip(points, xis))


def part3_sup(ft: FTilde, points: Sequence[np.ndarray], n_xi: int = 96) -> float:
    """sup over points and an xi grid of d(pi_x f~(x, xi), xi)."""
    xis = TWO_PI * np.arange(n_xi) / n_xi
    return max(section_residual(ft, X, xi) for X in points for xi in xis)


def f_tilde_sup_distance(a: FTilde, b: FTilde, points: Sequence[np.ndarray], n_xi: int = 48) -> float:
    xis = TWO_PI * np.arange(n_xi) / n_xi
    return max(float(circle_distance(a(X, xi).fiber, b(X, xi).fiber)) for X in points for xi in xis)


def generator_sup_distance(a: Representation, b: Representation, lattice: FuchsianLattice, n: int = 2000) -> float:
    grid = TWO_PI * np.arange(n) / n
    return max(float(np.max(circle_distance(a.of(g)(grid), b.of(g)(grid)))) for g in generator_elements(lattice))


@dataclass
class ScanReport:
    """Per-sample values with the x coordinates and xi, for CSV export."""

    name: str
    rows: list[tuple[np.ndarray, float, float]]

    @property
    def value(self) -> float:
        return max((r[2] for r in self.rows), default=0.0)

    def csv(self) -> str:
        lines = [f"x,y,t,xi,{self.name}"]
        for X, xi, v in self.rows:
            c = h2_coords(X)
            lines.append(f"{c[0]:.12g},{c[1]:.12g},{c[2]:.12g},{xi:.12g},{v:.12g}")
        return "\n".join(lines) + "\n"


def leaf_scan(ft: FTilde, points: Sequence[np.ndarray], xis: Sequence[float], R: float) -> ScanReport:
    return ScanReport("leaf_proximity", [(X, float(xi), leaf_proximity_report(ft, xi, X, R)) for X, xi in zip(points, xis)])


def tilt_scan(ft: FTilde, points: Sequence[np.ndarray], xis: Sequence[float]) -> tuple[ScanReport, float]:
    """Tilt per sample and the worst ratio tilt / budget (0 when both vanish)."""
    rows, worst = [], 0.0
    for X, xi in zip(points, xis):
        r = tangent_tilt(ft, X, xi)
        rows.append((X, float(xi), r.tilt))
        if r.tilt > 1e-9:
            worst = max(worst, r.tilt / max(r.budget, 1e-300))
    return ScanReport("tilt", rows), worst
