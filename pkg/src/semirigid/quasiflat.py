"""BiLipschitz flats in H^2 x H^2: construction, flat fitting, shadowing and
coarse intersections.

H^2 is the hyperboloid <x, x> = -1 with time last and curvature -1. A flat is
a product of two unit-speed geodesics; a geodesic is stored by its two ideal
endpoints (angles on the circle at infinity).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.spatial import cKDTree

from .barycenter import WeightedDirac, solve
from .manifold import Hyperbolic

TWO_PI = 2.0 * math.pi
# the transverse frequency of the perturbation family: amplitude 0.1 gives L = 1.02
OMEGA = math.sqrt(1.02**2 - 1.0) / 0.1
GRID_SLACK = 1e-3


class FlatError(ValueError):
    pass


# ---------------------------------------------------------------------------
# hyperboloid helpers (vectorized over leading axes)


def lorentz(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return u[..., 0] * v[..., 0] + u[..., 1] * v[..., 1] - u[..., 2] * v[..., 2]


def h2_dist(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Polar haversine: sinh^2(d/2) = sinh^2(dr/2) + sinh r1 sinh r2 sin^2(dphi/2).

    Free of the cancellation that the Lorentz norm of p - q suffers far from the origin.
    """
    s1 = np.hypot(p[..., 0], p[..., 1])
    s2 = np.hypot(q[..., 0], q[..., 1])
    r1, r2 = np.arcsinh(s1), np.arcsinh(s2)
    dphi = np.arctan2(p[..., 1], p[..., 0]) - np.arctan2(q[..., 1], q[..., 0])
    h = np.sinh(0.5 * (r1 - r2)) ** 2 + s1 * s2 * np.sin(0.5 * dphi) ** 2
    return 2.0 * np.arcsinh(np.sqrt(h))


def boost_to_origin(c: np.ndarray) -> np.ndarray:
    """The Lorentz transformation (a hyperbolic translation) taking c to the origin."""
    x = np.asarray(c[:2], dtype=float)
    t = float(c[2])
    B = np.eye(3)
    B[:2, :2] += np.outer(x, x) / (1.0 + t)
    B[:2, 2] = -x
    B[2, :2] = -x
    B[2, 2] = t
    return B


def map_ideal(B: np.ndarray, phi: float) -> float:
    return float(ideal_angle(B @ ideal(phi)))


def ideal(phi: float) -> np.ndarray:
    return np.array([math.cos(phi), math.sin(phi), 1.0])


def ideal_angle(p: np.ndarray) -> np.ndarray:
    """Angle of the radial projection to the circle at infinity."""
    return np.arctan2(p[..., 1], p[..., 0])


@dataclass(frozen=True)
class Geodesic:
    """The unit-speed geodesic from ideal point `minus` to ideal point `plus`,
    parameterized so that t = 0 is the point nearest the hyperboloid origin."""

    plus: float
    minus: float

    def __post_init__(self):
        if abs(math.remainder(self.plus - self.minus, TWO_PI)) < 1e-12:
            raise FlatError("geodesic endpoints coincide")

    @property
    def _null(self) -> tuple[np.ndarray, np.ndarray]:
        np_, nm = ideal(self.plus), ideal(self.minus)
        c = -float(lorentz(np_, nm))
        # scale the null vectors so that t = 0 is the projection of the origin
        o = np.array([0.0, 0.0, 1.0])
        k = math.sqrt(-float(lorentz(nm, o)) / -float(lorentz(np_, o)))
        s = 1.0 / math.sqrt(2.0 * c)
        return np_ * s * k, nm * s / k

    def __call__(self, t: np.ndarray | float) -> np.ndarray:
        a, b = self._null
        t = np.asarray(t, dtype=float)[..., None]
        return np.exp(t) * a + np.exp(-t) * b

    @property
    def normal(self) -> np.ndarray:
        """Unit spacelike normal of the geodesic plane."""
        u, v = ideal(self.plus), ideal(self.minus)
        m = np.array([u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], -(u[0] * v[1] - u[1] * v[0])])
        return m / math.sqrt(float(lorentz(m, m)))

    def distance(self, p: np.ndarray) -> np.ndarray:
        """Distance to the geodesic: sinh d = |<p, n>|."""
        return np.arcsinh(np.abs(lorentz(p, self.normal)))

    def project(self, p: np.ndarray) -> np.ndarray:
        """Arclength parameter of the nearest point."""
        a, b = self._null
        return 0.5 * np.log(lorentz(p, b) / lorentz(p, a))

    def fermi(self, t: np.ndarray, f: np.ndarray) -> np.ndarray:
        """cosh f gamma(t) + sinh f n: signed offset f along the normal."""
        f = np.asarray(f, dtype=float)[..., None]
        return np.cosh(f) * self(t) + np.sinh(f) * self.normal

    def to_json(self) -> dict[str, float]:
        return {"plus": self.plus, "minus": self.minus}


def geodesic_through(p: np.ndarray, direction: float) -> Geodesic:
    """Geodesic through p with unit tangent making angle `direction` in the frame at p."""
    H = Hyperbolic(2)
    B = H.basis(p)
    v = B @ np.array([math.cos(direction), math.sin(direction)])
    far = lambda s: math.cosh(s) * p + math.sinh(s) * v
    return Geodesic(float(ideal_angle(far(40.0))), float(ideal_angle(far(-40.0))))


def random_point(rng: np.random.Generator, radius: float = 1.0) -> np.ndarray:
    return Hyperbolic(2).lift(rng.uniform(-radius, radius, 2))


# ---------------------------------------------------------------------------
# sampled flats


@dataclass
class Flat:
    factors: tuple[Geodesic, Geodesic]

    def __call__(self, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        u = np.asarray(u, dtype=float)
        return self.factors[0](u[..., 0]), self.factors[1](u[..., 1])

    def distance(self, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
        return np.hypot(self.factors[0].distance(x1), self.factors[1].distance(x2))

    def project(self, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
        return np.stack([self.factors[0].project(x1), self.factors[1].project(x2)], axis=-1)

    def to_json(self) -> dict[str, Any]:
        return {"factors": [g.to_json() for g in self.factors]}


def product_dist(a: tuple[np.ndarray, np.ndarray], b: tuple[np.ndarray, np.ndarray]) -> np.ndarray:
    return np.hypot(h2_dist(a[0], b[0]), h2_dist(a[1], b[1]))


@dataclass
class SampledFlat:
    """Images of a grid in R^2 under a map into H^2 x H^2."""

    grid: np.ndarray  # (n, n, 2)
    images: tuple[np.ndarray, np.ndarray]  # each (n, n, 3)
    embedding: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]
    L: float
    window: float
    flat: Flat | None = None
    amplitude: float = 0.0

    @property
    def L_hat(self) -> float:
        """Largest ratio (or inverse ratio) over horizontally and vertically adjacent grid pairs."""
        worst = 1.0
        for ax in (0, 1):
            a = tuple(np.take(im, range(im.shape[ax] - 1), axis=ax) for im in self.images)
            b = tuple(np.take(im, range(1, im.shape[ax]), axis=ax) for im in self.images)
            ga = np.take(self.grid, range(self.grid.shape[ax] - 1), axis=ax)
            gb = np.take(self.grid, range(1, self.grid.shape[ax]), axis=ax)
            r = product_dist(a, b) / np.linalg.norm(ga - gb, axis=-1)
            worst = max(worst, float(r.max()), float(1.0 / r.min()))
        return worst

    def points(self) -> tuple[np.ndarray, np.ndarray]:
        return self.images[0].reshape(-1, 3), self.images[1].reshape(-1, 3)

    def csv(self) -> str:
        lines = ["u,v,x1,y1,t1,x2,y2,t2"]
        g = self.grid.reshape(-1, 2)
        a, b = self.points()
        for k in range(len(g)):
            vals = [*g[k], *a[k], *b[k]]
            lines.append(",".join(f"{v:.12g}" for v in vals))
        return "\n".join(lines) + "\n"


def square_grid(window: float, n: int) -> np.ndarray:
    s = np.linspace(-window, window, n)
    return np.stack(np.meshgrid(s, s, indexing="ij"), axis=-1)


def amplitude_for(L: float, omega: float = OMEGA) -> float:
    """Transverse amplitude A with peak speed sqrt(1 + A^2 omega^2) = L.

    The speed of t -> fermi(t, A sin(omega t + c)) is sqrt(cosh^2 f + f'^2), whose
    maximum sits where f = 0 while sinh(A)/A <= omega.
    """
    if L < 1.0:
        raise FlatError("L must be at least 1")
    return math.sqrt(L * L - 1.0) / omega


def make_bilipschitz_flat(L: float, seed: int = 0, window: float = 10.0, n: int = 100, omega: float = OMEGA, amplitude: float | None = None) -> SampledFlat:
    """(s, t) -> (c1(u1), c2(u2)) with u a rotation of (s, t) and c_i a geodesic
    displaced along its normal by A sin(omega u_i + phase_i)."""
    rng = np.random.default_rng(seed)
    g1 = geodesic_through(random_point(rng), rng.uniform(0, TWO_PI))
    g2 = geodesic_through(random_point(rng), rng.uniform(0, TWO_PI))
    rot = rng.uniform(0, TWO_PI)
    phases = rng.uniform(0, TWO_PI, 2)
    A = amplitude_for(L, omega) if amplitude is None else float(amplitude)
    c, s = math.cos(rot), math.sin(rot)
    R = np.array([[c, -s], [s, c]])

    def embed(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        w = np.asarray(u, dtype=float) @ R.T
        f1 = A * np.sin(omega * w[..., 0] + phases[0])
        f2 = A * np.sin(omega * w[..., 1] + phases[1])
        return g1.fermi(w[..., 0], f1), g2.fermi(w[..., 1], f2)

    grid = square_grid(window, n)
    images = embed(grid)
    q = SampledFlat(grid, images, embed, L, window, Flat((g1, g2)), A)
    q.rotation = R  # type: ignore[attr-defined]
    return q


def product_distance_defect(q: SampledFlat, n_pairs: int = 2000, rng: np.random.Generator | None = None) -> float:
    """max |d(q(u), q(u'))^2 - |u - u'|^2| over random grid pairs: zero exactly for isometric flats."""
    rng = np.random.default_rng(0) if rng is None else rng
    g = q.grid.reshape(-1, 2)
    a, b = q.points()
    i = rng.integers(len(g), size=n_pairs)
    j = rng.integers(len(g), size=n_pairs)
    d2 = h2_dist(a[i], a[j]) ** 2 + h2_dist(b[i], b[j]) ** 2
    return float(np.max(np.abs(d2 - np.sum((g[i] - g[j]) ** 2, axis=-1))))


# ---------------------------------------------------------------------------
# fitting


@dataclass
class FlatFit:
    flat: Flat
    forward: float
    backward: float
    window: float
    L: float
    iterations: int
    history: list[float] = field(default_factory=list)

    @property
    def hausdorff(self) -> float:
        return max(self.forward, self.backward)

    def to_json(self) -> dict[str, Any]:
        ends = [[g.plus, g.minus] for g in self.flat.factors]
        return {"L": self.L, "window": self.window, "hausdorff": self.hausdorff, "forward": self.forward, "backward": self.backward, "endpoints": ends}


def _extract_endpoints(grid: np.ndarray, img: np.ndarray) -> Geodesic:
    """Endpoints from the far window samples along the grid direction that moves this factor most."""
    n = grid.shape[0]
    mid = n // 2
    best = None
    for ax in (0, 1):
        lo = img[0, mid] if ax == 0 else img[mid, 0]
        hi = img[-1, mid] if ax == 0 else img[mid, -1]
        d = float(h2_dist(lo, hi))
        if best is None or d > best[0]:
            best = (d, lo, hi)
    d, lo, hi = best
    if d < 1.0:
        raise FlatError("degenerate sample: factor images lie in a small ball")
    return Geodesic(float(ideal_angle(hi)), float(ideal_angle(lo)))


def _forward(flat: Flat, pts: tuple[np.ndarray, np.ndarray]) -> float:
    return float(np.max(flat.distance(*pts)))


def fit_flat(q: SampledFlat, step: float = 0.02, tol: float = 1e-13, max_iter: int = 2000, n_backward: int = 15) -> FlatFit:
    """Endpoint extraction followed by coordinate descent on the four endpoint
    angles minimizing the sampled one-sided Hausdorff distance.

    Each factor is first translated so that the window's center image sits at
    the origin: endpoint angles seen from far away are exponentially
    ill-conditioned, seen from the window center they are not.
    """
    n = q.grid.shape[0]
    boosts = [boost_to_origin(im[n // 2, n // 2]) for im in q.images]
    imgs = [np.einsum("ij,...j->...i", B, im) for B, im in zip(boosts, q.images)]
    pts = (imgs[0].reshape(-1, 3), imgs[1].reshape(-1, 3))
    ends = []
    for k in range(2):
        g = _extract_endpoints(q.grid, imgs[k])
        ends += [g.plus, g.minus]
    ends = np.array(ends)

    def build(e: np.ndarray) -> Flat:
        return Flat((Geodesic(e[0], e[1]), Geodesic(e[2], e[3])))

    cur = _forward(build(ends), pts)
    hist = [cur]
    h = step
    it = 0
    while h > tol and it < max_iter:
        it += 1
        improved = False
        for k in range(4):
            for sgn in (1.0, -1.0):
                trial = ends.copy()
                trial[k] += sgn * h
                try:
                    val = _forward(build(trial), pts)
                except FlatError:
                    continue
                if val < cur:
                    ends, cur, improved = trial, val, True
                    break
        hist.append(cur)
        if not improved:
            h *= 0.5
    inv = [np.linalg.inv(B) for B in boosts]
    flat = Flat(
        (
            Geodesic(map_ideal(inv[0], ends[0]), map_ideal(inv[0], ends[1])),
            Geodesic(map_ideal(inv[1], ends[2]), map_ideal(inv[1], ends[3])),
        )
    )
    back = backward_distance(q, flat, n_backward)
    fwd = _forward(flat, q.points())
    return FlatFit(flat, fwd, back, q.window, q.L, it, hist)


def backward_distance(q: SampledFlat, flat: Flat, n: int = 15) -> float:
    """sup over flat points in the window's shadow of the distance to the image q(window).

    Flat probes are the nearest-point projections of an n x n subgrid's images
    moved to the matched flat coordinates; the distance to the image is
    minimized over the parameter window starting from the nearest grid sample.
    """
    a, b = q.points()
    g = q.grid.reshape(-1, 2)
    coords = flat.project(a, b)
    # affine match of parameters to flat coordinates
    X = np.column_stack([g, np.ones(len(g))])
    M, *_ = np.linalg.lstsq(X, coords, rcond=None)
    tree = cKDTree(coords)
    sub = np.linspace(-q.window, q.window, n)
    probes = np.stack(np.meshgrid(sub, sub, indexing="ij"), axis=-1).reshape(-1, 2)
    fc = np.column_stack([probes, np.ones(len(probes))]) @ M
    worst = 0.0
    lo, hi = -q.window, q.window
    for c in fc:
        f1, f2 = flat(c)
        _, idx = tree.query(c)
        u0 = g[idx]

        def obj(u: np.ndarray) -> float:
            y1, y2 = q.embedding(u)
            return float(np.hypot(h2_dist(y1, f1), h2_dist(y2, f2)))

        res = minimize(obj, u0, method="L-BFGS-B", bounds=[(lo, hi), (lo, hi)], options={"ftol": 1e-14, "gtol": 1e-10})
        worst = max(worst, min(float(res.fun), obj(u0)))
    return worst


def shadowing_regression(Ls: Sequence[float] = (1.0, 1.01, 1.02, 1.05), seed: int = 0, window: float = 10.0, n: int = 100) -> list[FlatFit]:
    return [fit_flat(make_bilipschitz_flat(L, seed, window, n)) for L in Ls]


# ---------------------------------------------------------------------------
# coarse intersections


@dataclass
class GeodesicFit:
    """A singular geodesic: factor-1 geodesic times a point of the second factor."""

    factor: Geodesic
    point: np.ndarray

    def distance_to(self, other: "GeodesicFit", window: float, n: int = 201) -> float:
        """Two-sided windowed Hausdorff distance after matching parameterizations by projection."""
        t = np.linspace(-window, window, n)
        a = self.factor(t)
        b = other.factor(other.factor.project(a))
        d1 = np.hypot(h2_dist(a, b), float(h2_dist(self.point, other.point)))
        a2 = other.factor(t)
        b2 = self.factor(self.factor.project(a2))
        d2 = np.hypot(h2_dist(a2, b2), float(h2_dist(self.point, other.point)))
        return float(max(d1.max(), d2.max()))

    def parallel_defect(self, other: "GeodesicFit", window: float, n: int = 201) -> float:
        """Spread of the matched pointwise distance: zero for parallel geodesics."""
        t = np.linspace(-window, window, n)
        a = self.factor(t)
        b = other.factor(other.factor.project(a))
        d = np.hypot(h2_dist(a, b), float(h2_dist(self.point, other.point)))
        return float(d.max() - d.min())

    def to_json(self) -> dict[str, Any]:
        return {"factor": self.factor.to_json(), "point": [float(v) for v in self.point]}


@dataclass
class IntersectionReport:
    R: float
    degenerate: bool
    dimension: int
    n_samples: int
    containment: float  # sup over samples of d(p, F*) / R
    fit_distance: float
    fit: GeodesicFit | None
    window: float

    @property
    def within_3R(self) -> bool:
        return self.degenerate or (self.containment <= 3.0 and self.fit_distance <= 3.0 * self.R)

    def to_json(self) -> dict[str, Any]:
        return {
            "R": self.R,
            "degenerate": self.degenerate,
            "dimension": self.dimension,
            "n_samples": self.n_samples,
            "containment_over_R": self.containment,
            "fit_distance": self.fit_distance,
            "within_3R": self.within_3R,
            "window": self.window,
            "fit": None if self.fit is None else self.fit.to_json(),
        }


def crossing_geodesic(g: Geodesic, t: float, angle: float) -> Geodesic:
    """The geodesic through g(t) making the given angle with g."""
    p = g(t)
    H = Hyperbolic(2)
    B = H.basis(p)
    a, b = g._null
    v = np.exp(t) * a - np.exp(-t) * b
    c = np.linalg.lstsq(B, v, rcond=None)[0]
    base = math.atan2(c[1], c[0])
    return geodesic_through(p, base + angle)


def _fit_geodesic(x: np.ndarray, step: float = 0.02, tol: float = 1e-13, max_iter: int = 2000) -> Geodesic:
    """Least-squares geodesic through H^2 samples.

    The samples are translated so that their Karcher mean is the origin; the
    endpoints start at the extreme pair's directions and are refined by
    coordinate descent on the mean squared distance.
    """
    H = Hyperbolic(2)
    mean = solve(WeightedDirac(H, np.full(len(x), 1.0 / len(x)), list(x)), guard=False).point
    B = boost_to_origin(mean)
    y = x @ B.T
    D = h2_dist(y[:, None, :], y[None, :, :])
    i, j = np.unravel_index(int(np.argmax(D)), D.shape)
    if D[i, j] < 1.0:
        raise FlatError("degenerate sample: points lie in a small ball")
    e = np.array([float(ideal_angle(y[i])), float(ideal_angle(y[j]))])

    def cost(e):
        return float(np.mean(Geodesic(e[0], e[1]).distance(y) ** 2))

    cur = cost(e)
    h = step
    it = 0
    while h > tol and it < max_iter:
        it += 1
        moved = False
        for k in range(2):
            for sgn in (1.0, -1.0):
                tr = e.copy()
                tr[k] += sgn * h
                try:
                    v = cost(tr)
                except FlatError:
                    continue
                if v < cur:
                    e, cur, moved = tr, v, True
                    break
        if not moved:
            h *= 0.5
    Binv = np.linalg.inv(B)
    return Geodesic(map_ideal(Binv, e[0]), map_ideal(Binv, e[1]))


def coarse_intersection_probe(
    shared: Geodesic,
    second_a: Geodesic,
    second_b: Geodesic,
    R: float,
    window: float = 6.0,
    n_samples: int = 2000,
    rng: np.random.Generator | None = None,
) -> IntersectionReport:
    """Sample N_R(F1) cap N_R(F2) for F1 = shared x second_a, F2 = shared x second_b
    and fit a singular geodesic.

    F* is shared x {z} with z = second_a cap second_b. Candidates are drawn
    uniformly in Fermi offset along `shared` on [-window, window] x [-R, R]
    and in the hyperbolic disk of radius 3R + 2 about z, then kept when they
    lie in both neighborhoods.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    same = abs(math.remainder(second_a.plus - second_b.plus, TWO_PI)) + abs(math.remainder(second_a.minus - second_b.minus, TWO_PI)) < 1e-12
    if same:
        return IntersectionReport(R, True, 2, 0, math.inf, math.nan, None, window)
    z = _intersection_point(second_a, second_b)
    if z is None:
        raise FlatError("second factors do not cross: flats are disjoint at scale R")
    H = Hyperbolic(2)
    Bz = H.basis(z)
    rho = 3.0 * R + 2.0
    xs, ys = [], []
    tries = 0
    while len(xs) < n_samples:
        tries += 1
        if tries > 2000:
            break
        m = 4 * n_samples
        t = rng.uniform(-window, window, m)
        f = rng.uniform(-R, R, m)
        x = shared.fermi(t, f)
        r = rng.uniform(0, rho, m)
        ph = rng.uniform(0, TWO_PI, m)
        v = (Bz @ np.stack([np.cos(ph), np.sin(ph)])).T
        y = np.cosh(r)[:, None] * z + np.sinh(r)[:, None] * v
        d1 = np.abs(f)
        keep = (np.hypot(d1, second_a.distance(y)) <= R) & (np.hypot(d1, second_b.distance(y)) <= R)
        xs.append(x[keep])
        ys.append(y[keep])
        if sum(len(a) for a in xs) >= n_samples:
            break
    x = np.concatenate(xs)[:n_samples]
    y = np.concatenate(ys)[:n_samples]
    if len(x) < 10:
        raise FlatError("flats are disjoint at scale R")
    contain = float(np.max(np.hypot(shared.distance(x), h2_dist(y, z)))) / R
    g1 = _fit_geodesic(x)
    mu = WeightedDirac(H, np.full(len(y), 1.0 / len(y)), list(y))
    w = solve(mu, guard=False, start=z).point
    fit = GeodesicFit(g1, w)
    fit_d = fit.distance_to(GeodesicFit(shared, z), window)
    return IntersectionReport(R, False, 1, len(x), contain, fit_d, fit, window)


def _intersection_point(a: Geodesic, b: Geodesic) -> np.ndarray | None:
    """Common point of two geodesics: the timelike line orthogonal to both normals."""
    na, nb = a.normal, b.normal
    m = np.array([na[1] * nb[2] - na[2] * nb[1], na[2] * nb[0] - na[0] * nb[2], -(na[0] * nb[1] - na[1] * nb[0])])
    q = float(lorentz(m, m))
    if q >= 0:
        return None
    p = m / math.sqrt(-q)
    return p if p[2] > 0 else -p


def three_flat_parallelism(shared: Geodesic, a: Geodesic, b: Geodesic, c: Geodesic, R: float = 2.0, window: float = 6.0, rng: np.random.Generator | None = None) -> dict[str, Any]:
    """Coarse intersections of (F_a, F_b) and (F_a, F_c), all sharing the first factor.

    Both fitted singular geodesics should be parallel: bounded Hausdorff distance on
    the window with nearly constant matched distance.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    r1 = coarse_intersection_probe(shared, a, b, R, window, rng=rng)
    r2 = coarse_intersection_probe(shared, a, c, R, window, rng=rng)
    inner = 0.5 * window
    haus = r1.fit.distance_to(r2.fit, inner)
    defect = r1.fit.parallel_defect(r2.fit, inner)
    expected = float(h2_dist(r1.fit.point, r2.fit.point))
    # each fit lies within 3R of its own F*, and the two F* are parallel at the separation of their points
    bound = float(h2_dist(_intersection_point(a, b), _intersection_point(a, c))) + 6.0 * R
    return {
        "passed": bool(defect <= 0.1 and haus <= bound),
        "hausdorff_bound": bound,
        "hausdorff": haus,
        "parallel_defect": defect,
        "point_separation": expected,
        "reports": [r1.to_json(), r2.to_json()],
    }
