"""Weighted-Dirac barycenters and their derivatives.

The barycenter of mu = sum w_i delta_{z_i} minimizes 0.5 sum w_i d(x, z_i)^2.
It is found by a Riemannian Newton iteration in the orthonormal frame of the
current iterate. The derivative engine covers three kinds of variation:

* moving a weight or an atom (closed forms through Q^-1),
* moving the metric (a one-parameter family of models read in a fixed chart),
* everything at once along a ``MetricFamilyInstance``, together with the
  certificate bounding the deviation from the transported atom velocities.
"""

from __future__ import annotations

import itertools
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np

from .manifold import SPD, FD_STEP, Hyperbolic, Manifold, ModelError, Product, Sphere

SOLVER_TOL = 1e-10
MAX_ITER = 200


class GuardError(ModelError):
    """The atoms are too spread out for the barycenter estimates to apply."""


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


def guard_radius(model: Manifold) -> float:
    """min{pi/(4b), inj/2, 1/(3 max{a, b})}, the strictest admissible diameter."""
    r = 0.5 * model.injectivity_radius
    if model.b > 0:
        r = min(r, math.pi / (4 * model.b))
    scale = max(model.a, model.b)
    if scale > 0:
        r = min(r, 1.0 / (3 * scale))
    return r


@dataclass(frozen=True, init=False)
class WeightedDirac:
    model: Manifold
    weights: np.ndarray
    points: tuple[np.ndarray, ...]

    def __init__(self, model: Manifold, weights: Sequence[float], points: Sequence[np.ndarray], tol: float = 1e-12):
        w = np.asarray(weights, dtype=float)
        pts = tuple(model.check_point(np.asarray(p, dtype=float)) for p in points)
        if len(pts) == 0:
            raise ModelError("a weighted Dirac measure needs at least one atom")
        if w.shape != (len(pts),):
            raise ModelError("one weight per atom is required")
        if np.any(w < -tol) or abs(float(w.sum()) - 1.0) > tol:
            raise ModelError("weights must be nonnegative and sum to 1")
        object.__setattr__(self, "model", model)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return len(self.points)

    def diameter(self) -> float:
        m = self.model
        return max((m.dist(p, q) for p, q in itertools.combinations(self.points, 2)), default=0.0)

    def push(self, f: Callable[[np.ndarray], np.ndarray], model: Manifold | None = None) -> "WeightedDirac":
        return WeightedDirac(model or self.model, self.weights, [f(p) for p in self.points])

    def heaviest(self) -> np.ndarray:
        return self.points[int(np.argmax(self.weights))]

    def to_json(self) -> dict[str, Any]:
        return {
            "model": self.model.descriptor(),
            "atoms": [{"w": float(w), "coords": [float(c) for c in p]} for w, p in zip(self.weights, self.points)],
        }


def energy(mu: WeightedDirac, x: np.ndarray) -> float:
    return 0.5 * sum(w * mu.model.dist(x, z) ** 2 for w, z in zip(mu.weights, mu.points))


def gradient(mu: WeightedDirac, x: np.ndarray) -> np.ndarray:
    """Riemannian gradient of the energy, -sum w_i log_x z_i (ambient vector)."""
    m = mu.model
    return -sum(w * m.log(x, z) for w, z in zip(mu.weights, mu.points))


def hessian_Q(mu: WeightedDirac, x: np.ndarray) -> np.ndarray:
    """Q = sum w_i (grad d (x) grad d + d Hess d) in the frame basis(x)."""
    m = mu.model
    q = sum(w * m.hess_half_sq(x, z) for w, z in zip(mu.weights, mu.points))
    return 0.5 * (q + q.T)


@dataclass(frozen=True)
class BarycenterResult:
    point: np.ndarray
    gradient_residual: float
    hessian_min_eigenvalue: float
    iterations: int

    def to_json(self) -> dict[str, Any]:
        return {
            "point": [float(c) for c in self.point],
            "gradient_residual": float(self.gradient_residual),
            "hessian_min_eigenvalue": float(self.hessian_min_eigenvalue),
            "iterations": int(self.iterations),
        }


def check_guard(mu: WeightedDirac) -> float:
    diam = mu.diameter()
    limit = guard_radius(mu.model)
    if not diam < limit:
        raise GuardError(f"atom diameter {diam:.4g} is not below the guard radius {limit:.4g}")
    return diam


def solve(
    mu: WeightedDirac,
    tol: float = SOLVER_TOL,
    max_iter: int = MAX_ITER,
    guard: bool = True,
    start: np.ndarray | None = None,
) -> BarycenterResult:
    """Riemannian Newton iteration with Armijo backtracking.

    Falls back to a gradient step whenever Q has an eigenvalue below 1/4.
    """
    m = mu.model
    if guard:
        check_guard(mu)
    x = np.array(mu.heaviest() if start is None else start, dtype=float)
    f = energy(mu, x)
    res = math.inf
    for it in range(max_iter + 1):
        g = m.coefficients(x, gradient(mu, x))
        res = float(np.linalg.norm(g))
        if res < tol:
            lam = float(np.linalg.eigvalsh(hessian_Q(mu, x))[0])
            return BarycenterResult(x, res, lam, it)
        if it == max_iter:
            break
        Q = hessian_Q(mu, x)
        lam = float(np.linalg.eigvalsh(Q)[0])
        step = -np.linalg.solve(Q, g) if lam >= 0.25 else -g
        if res < 1e-6 and lam >= 0.25:
            # quadratic regime: energy differences are below rounding
            x = m.exp(x, m.from_coefficients(x, step))
            f = energy(mu, x)
            continue
        slope = float(g @ step)
        t = 1.0
        while True:
            xn = m.exp(x, m.from_coefficients(x, t * step))
            fn = energy(mu, xn)
            if fn <= f + 1e-4 * t * slope or t < 1e-12:
                break
            t *= 0.5
        x, f = xn, fn
    raise ConvergenceError("barycenter iteration did not converge", res)


def barycenter(mu: WeightedDirac, **kwargs: Any) -> np.ndarray:
    return solve(mu, **kwargs).point


# ---------------------------------------------------------------------------
# derivatives with respect to the measure


def d_bar_d_weight(mu: WeightedDirac, i: int, bar: np.ndarray | None = None) -> np.ndarray:
    """Derivative of bar along e_i (ambient tangent vector at bar): Q^-1 log_bar z_i.

    Along the normalized direction e_i - w the derivative is the same, since
    sum w_j log_bar z_j vanishes at the barycenter.
    """
    m = mu.model
    x = solve(mu).point if bar is None else bar
    c = np.linalg.solve(hessian_Q(mu, x), m.coefficients(x, m.log(x, mu.points[i])))
    return m.from_coefficients(x, c)


def d_bar_d_point(mu: WeightedDirac, i: int, bar: np.ndarray | None = None, h: float = FD_STEP) -> np.ndarray:
    """Derivative of bar in the atom z_i, as a matrix basis(z_i) -> basis(bar).

    Equals Q^-1 w_i D_z log_x z, where D_z log_x z = -(grad_x d (x) grad_z d + d D_z grad_x d).
    """
    m = mu.model
    x = solve(mu).point if bar is None else bar
    z = mu.points[i]
    if m.dist(x, z) < 1e-12:
        dlog = m.transport_matrix(z, x)
    else:
        dlog = m.dlog(x, z, h)
    return np.linalg.solve(hessian_Q(mu, x), mu.weights[i] * dlog)


def affine_equivariance_check(
    mu: WeightedDirac, f: Callable[[np.ndarray], np.ndarray], model: Manifold | None = None
) -> float:
    """d(f(bar mu), bar(f_* mu)) for an isometry f."""
    pushed = mu.push(f, model)
    check_guard(pushed)
    a = f(solve(mu).point)
    b = solve(pushed).point
    return pushed.model.dist(a, b)


def grassmann_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Spectral-norm distance of the orthogonal projectors onto two column spans."""
    qa, _ = np.linalg.qr(a)
    qb, _ = np.linalg.qr(b)
    return float(np.linalg.norm(qa @ qa.T - qb @ qb.T, 2))


def graph_span(derivative: np.ndarray) -> np.ndarray:
    """Column span of the graph of a linear map R^m -> R^d inside R^m x R^d."""
    d, m = derivative.shape
    return np.vstack([np.eye(m), derivative])


# ---------------------------------------------------------------------------
# metric families read through a fixed chart


class MetricFamily(ABC):
    """A family of models read in a fixed chart R^d, indexed by s in R^m."""

    chart_dim: int
    param_dim: int

    @abstractmethod
    def model(self, s: np.ndarray) -> Manifold: ...

    @abstractmethod
    def embed(self, s: np.ndarray, x: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def chart(self, s: np.ndarray, p: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def embed_jacobian(self, s: np.ndarray, x: np.ndarray) -> np.ndarray: ...

    def frame_matrix(self, s: np.ndarray, x: np.ndarray) -> np.ndarray:
        """C with chart vector c -> frame coefficients C c at embed(s, x)."""
        m = self.model(s)
        p = self.embed(s, x)
        return m.basis(p).T @ m.metric_matrix(p) @ self.embed_jacobian(s, x)

    def chart_metric(self, s: np.ndarray, x: np.ndarray) -> np.ndarray:
        c = self.frame_matrix(s, x)
        return c.T @ c

    def c12_norm(self, s0: np.ndarray, x0: np.ndarray, h: float = 1e-3) -> float:
        """Pointwise C^{1,2} size of s -> g_s at (s0, x0).

        Metric components are read in g_{s0}-exponential coordinates centred
        at x0 and differentiated to order two in the coordinates and order one
        in s; the maximum absolute value over all those derivatives is returned.
        """
        s0 = np.asarray(s0, dtype=float)
        if self.is_constant() and self.is_homogeneous():
            # isometries act transitively and carry the frame along, so the value is the same everywhere
            key = (s0.tobytes(), h)
            cache = self.__dict__.setdefault("_c12_cache", {})
            if key not in cache:
                cache[key] = _c12_norm(self, s0, self.chart(s0, self.model(s0).origin()), h)
            return cache[key]
        return _c12_norm(self, s0, np.asarray(x0, dtype=float), h)

    def is_constant(self) -> bool:
        return False

    def is_homogeneous(self) -> bool:
        """True when isometries of g_s act transitively and carry model.basis to itself."""
        return False


def _c12_norm(fam: MetricFamily, s0: np.ndarray, x0: np.ndarray, h: float) -> float:
    d, mdim = fam.chart_dim, fam.param_dim
    model = fam.model(s0)
    p0 = fam.embed(s0, x0)
    B = model.basis(p0)

    def coord(v: np.ndarray) -> np.ndarray:
        return fam.chart(s0, model.exp(p0, B @ v))

    hj = 1e-6
    offsets = list(itertools.product((-1, 0, 1), repeat=d))
    svals = [s0] + [s0 + sgn * h * e for e in np.eye(mdim) for sgn in (1, -1)] if not fam.is_constant() else [s0]
    # metric components on the stencil, indexed [s][offset]
    comps: list[dict[tuple[int, ...], np.ndarray]] = [dict() for _ in svals]
    for off in offsets:
        v = h * np.asarray(off, dtype=float)
        x = coord(v)
        J = np.column_stack([(coord(v + hj * e) - coord(v - hj * e)) / (2 * hj) for e in np.eye(d)])
        for k, s in enumerate(svals):
            comps[k][off] = J.T @ fam.chart_metric(s, x) @ J

    def derivs(table: dict[tuple[int, ...], np.ndarray]) -> list[np.ndarray]:
        z = (0,) * d
        out = [table[z]]
        for i in range(d):
            ei = tuple(1 if k == i else 0 for k in range(d))
            mi = tuple(-1 if k == i else 0 for k in range(d))
            out.append((table[ei] - table[mi]) / (2 * h))
            out.append((table[ei] - 2 * table[z] + table[mi]) / h**2)
            for j in range(i + 1, d):
                pp = tuple(1 if k in (i, j) else 0 for k in range(d))
                mm = tuple(-1 if k in (i, j) else 0 for k in range(d))
                pm = tuple(1 if k == i else (-1 if k == j else 0) for k in range(d))
                mp = tuple(-1 if k == i else (1 if k == j else 0) for k in range(d))
                out.append((table[pp] - table[pm] - table[mp] + table[mm]) / (4 * h**2))
        return out

    base = derivs(comps[0])
    best = max(float(np.max(np.abs(t))) for t in base)
    for k in range(mdim if not fam.is_constant() else 0):
        plus, minus = derivs(comps[1 + 2 * k]), derivs(comps[2 + 2 * k])
        best = max(best, max(float(np.max(np.abs((p - q) / (2 * h)))) for p, q in zip(plus, minus)))
    return best


def _stereo(u: np.ndarray) -> np.ndarray:
    n2 = float(u @ u)
    return np.append(2 * u, 1 - n2) / (1 + n2)


def _stereo_jac(u: np.ndarray) -> np.ndarray:
    n2 = float(u @ u)
    d = u.size
    top = (2 * (1 + n2) * np.eye(d) - 4 * np.outer(u, u)) / (1 + n2) ** 2
    bottom = -4 * u / (1 + n2) ** 2
    return np.vstack([top, bottom])


def _ball(u: np.ndarray) -> np.ndarray:
    n2 = float(u @ u)
    return np.append(2 * u, 1 + n2) / (1 - n2)


def _ball_jac(u: np.ndarray) -> np.ndarray:
    n2 = float(u @ u)
    d = u.size
    top = (2 * (1 - n2) * np.eye(d) + 4 * np.outer(u, u)) / (1 - n2) ** 2
    bottom = 4 * u / (1 - n2) ** 2
    return np.vstack([top, bottom])


class SphereFamily(MetricFamily):
    """Spheres of curvature scale b(s) = b0 + <beta, s>, read by stereographic projection."""

    def __init__(self, k: int = 2, b0: float = 1.0, beta: Sequence[float] = (0.3,)):
        self.k = self.chart_dim = int(k)
        self.b0 = float(b0)
        self.beta = np.asarray(beta, dtype=float)
        self.param_dim = self.beta.size

    def scale(self, s: np.ndarray) -> float:
        return self.b0 + float(self.beta @ np.asarray(s, dtype=float))

    def model(self, s):
        return Sphere(self.k, 1.0 / self.scale(s))

    def embed(self, s, x):
        r = 1.0 / self.scale(s)
        return r * _stereo(np.asarray(x, dtype=float) / r)

    def chart(self, s, p):
        r = 1.0 / self.scale(s)
        return np.asarray(p[:-1], dtype=float) / (1 + p[-1] / r)

    def embed_jacobian(self, s, x):
        r = 1.0 / self.scale(s)
        return _stereo_jac(np.asarray(x, dtype=float) / r)

    def chart_metric(self, s, x):
        b = self.scale(s)
        x = np.asarray(x, dtype=float)
        return (2.0 / (1 + b * b * float(x @ x))) ** 2 * np.eye(self.k)


class HyperbolicFamily(MetricFamily):
    """Hyperbolic spaces of curvature scale a(s) = a0 + <alpha, s>, read in the Poincare ball."""

    def __init__(self, k: int = 2, a0: float = 1.0, alpha: Sequence[float] = (0.3,)):
        self.k = self.chart_dim = int(k)
        self.a0 = float(a0)
        self.alpha = np.asarray(alpha, dtype=float)
        self.param_dim = self.alpha.size

    def scale(self, s: np.ndarray) -> float:
        return self.a0 + float(self.alpha @ np.asarray(s, dtype=float))

    def model(self, s):
        return Hyperbolic(self.k, self.scale(s))

    def embed(self, s, x):
        a = self.scale(s)
        return _ball(a * np.asarray(x, dtype=float)) / a

    def chart(self, s, p):
        a = self.scale(s)
        return np.asarray(p[:-1], dtype=float) / (1 + a * p[-1])

    def embed_jacobian(self, s, x):
        a = self.scale(s)
        return _ball_jac(a * np.asarray(x, dtype=float))

    def chart_metric(self, s, x):
        a = self.scale(s)
        x = np.asarray(x, dtype=float)
        return (2.0 / (1 - a * a * float(x @ x))) ** 2 * np.eye(self.k)


class SPDFamily(MetricFamily):
    """Constant family on SPD(2) with chart x -> [[x1, x2], [x2, x3]]."""

    chart_dim = 3

    def __init__(self, param_dim: int = 1):
        self.param_dim = int(param_dim)
        self._model = SPD(2)

    def model(self, s):
        return self._model

    def embed(self, s, x):
        return np.array([x[0], x[1], x[1], x[2]], dtype=float)

    def chart(self, s, p):
        return np.array([p[0], 0.5 * (p[1] + p[2]), p[3]], dtype=float)

    def embed_jacobian(self, s, x):
        return np.array([[1, 0, 0], [0, 1, 0], [0, 1, 0], [0, 0, 1]], dtype=float)

    def chart_metric(self, s, x):
        J = self.embed_jacobian(s, x)
        return J.T @ self._model.metric_matrix(self.embed(s, x)) @ J

    def is_constant(self):
        return True

    def is_homogeneous(self):
        return True


class CircleFamily(MetricFamily):
    """Constant family on the unit circle read by the angle."""

    chart_dim = 1

    def __init__(self, param_dim: int = 1):
        self.param_dim = int(param_dim)
        self._model = Sphere(1)

    def model(self, s):
        return self._model

    def embed(self, s, x):
        return np.array([math.cos(x[0]), math.sin(x[0])])

    def chart(self, s, p):
        return np.array([math.atan2(p[1], p[0])])

    def embed_jacobian(self, s, x):
        return np.array([[-math.sin(x[0])], [math.cos(x[0])]])

    def is_constant(self):
        return True


class ProductFamily(MetricFamily):
    def __init__(self, factors: Sequence[MetricFamily]):
        self.factors = tuple(factors)
        dims = {f.param_dim for f in self.factors}
        if len(dims) != 1:
            raise ModelError("factor families must share the parameter dimension")
        self.param_dim = dims.pop()
        self.chart_dim = sum(f.chart_dim for f in self.factors)
        self._c = np.cumsum([0] + [f.chart_dim for f in self.factors])

    def _split(self, x):
        return [np.asarray(x[self._c[i] : self._c[i + 1]], dtype=float) for i in range(len(self.factors))]

    def model(self, s):
        return Product([f.model(s) for f in self.factors])

    def embed(self, s, x):
        return np.concatenate([f.embed(s, xi) for f, xi in zip(self.factors, self._split(x))])

    def chart(self, s, p):
        parts = self.model(s).split(p)
        return np.concatenate([f.chart(s, pi) for f, pi in zip(self.factors, parts)])

    def embed_jacobian(self, s, x):
        blocks = [f.embed_jacobian(s, xi) for f, xi in zip(self.factors, self._split(x))]
        rows = sum(b.shape[0] for b in blocks)
        out = np.zeros((rows, self.chart_dim))
        r = 0
        for i, b in enumerate(blocks):
            out[r : r + b.shape[0], self._c[i] : self._c[i + 1]] = b
            r += b.shape[0]
        return out

    def chart_metric(self, s, x):
        out = np.zeros((self.chart_dim, self.chart_dim))
        for i, (f, xi) in enumerate(zip(self.factors, self._split(x))):
            out[self._c[i] : self._c[i + 1], self._c[i] : self._c[i + 1]] = f.chart_metric(s, xi)
        return out

    def c12_norm(self, s0, x0, h=1e-3):
        # the product metric is block diagonal in product exponential coordinates
        return max(f.c12_norm(s0, xi, h) for f, xi in zip(self.factors, self._split(x0)))

    def is_constant(self):
        return all(f.is_constant() for f in self.factors)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MetricFamilyInstance:
    """Atoms moving on straight chart paths with weights moving linearly.

    z_i(s) = atoms[i] + atom_velocities[i] @ (s - s0) and
    w(s) = weights + weight_velocities @ (s - s0) with zero column sums.
    """

    family: MetricFamily
    s0: np.ndarray
    atoms: np.ndarray
    weights: np.ndarray
    atom_velocities: np.ndarray
    weight_velocities: np.ndarray

    def __post_init__(self) -> None:
        fam = self.family
        n = len(self.weights)
        object.__setattr__(self, "s0", np.asarray(self.s0, dtype=float).reshape(fam.param_dim))
        object.__setattr__(self, "atoms", np.asarray(self.atoms, dtype=float).reshape(n, fam.chart_dim))
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))
        object.__setattr__(
            self, "atom_velocities", np.asarray(self.atom_velocities, dtype=float).reshape(n, fam.chart_dim, fam.param_dim)
        )
        object.__setattr__(self, "weight_velocities", np.asarray(self.weight_velocities, dtype=float).reshape(n, fam.param_dim))
        if abs(float(self.weights.sum()) - 1) > 1e-12 or np.any(np.abs(self.weight_velocities.sum(axis=0)) > 1e-12):
            raise ModelError("weights must sum to 1 along the whole path")

    @property
    def n(self) -> int:
        return len(self.weights)

    def weights_at(self, s: np.ndarray) -> np.ndarray:
        return self.weights + self.weight_velocities @ (np.asarray(s, dtype=float) - self.s0)

    def atoms_at(self, s: np.ndarray) -> np.ndarray:
        ds = np.asarray(s, dtype=float) - self.s0
        return self.atoms + np.einsum("idm,m->id", self.atom_velocities, ds)

    def measure(self, s: np.ndarray, frozen: bool = False) -> WeightedDirac:
        fam = self.family
        w = self.weights if frozen else self.weights_at(s)
        z = self.atoms if frozen else self.atoms_at(s)
        return WeightedDirac(fam.model(s), w, [fam.embed(s, zi) for zi in z])

    def bar_chart(self, s: np.ndarray, frozen: bool = False) -> np.ndarray:
        mu = self.measure(s, frozen)
        return self.family.chart(s, solve(mu, tol=1e-13, guard=False).point)


def resolve_derivative(inst: MetricFamilyInstance, frozen: bool = False, h: float = 1e-3) -> np.ndarray:
    """Five-point finite difference of the re-solved chart barycenter in s (d x m)."""
    cols = []
    for e in np.eye(inst.family.param_dim):
        f = [inst.bar_chart(inst.s0 + k * h * e, frozen) for k in (-2, -1, 1, 2)]
        cols.append((f[0] - 8 * f[1] + 8 * f[2] - f[3]) / (12 * h))
    return np.column_stack(cols)


def _chart_gradient_field(inst: MetricFamilyInstance, s: np.ndarray, x: np.ndarray) -> np.ndarray:
    """C_s(x)^-1 applied to the frame coefficients of sum w_i log_x z_i with atoms frozen."""
    fam = inst.family
    m = fam.model(s)
    p = fam.embed(s, x)
    v = sum(w * m.log(p, fam.embed(s, z)) for w, z in zip(inst.weights, inst.atoms))
    return np.linalg.solve(fam.frame_matrix(s, x), m.coefficients(p, v))


def d_bar_d_metric(inst: MetricFamilyInstance, h: float = 1e-3, bar_chart: np.ndarray | None = None) -> np.ndarray:
    """Derivative of the chart barycenter in s with weights and atoms frozen (d x m).

    Implicit differentiation of the chart-read gradient field at the frozen
    barycenter; its s-derivative is a five-point difference.
    """
    fam = inst.family
    s0 = inst.s0
    x0 = inst.bar_chart(s0, frozen=True) if bar_chart is None else bar_chart
    if fam.is_constant():
        return np.zeros((fam.chart_dim, fam.param_dim))
    mu = inst.measure(s0, frozen=True)
    Q = hessian_Q(mu, fam.embed(s0, x0))
    C = fam.frame_matrix(s0, x0)
    cols = []
    for e in np.eye(fam.param_dim):
        f = [_chart_gradient_field(inst, s0 + k * h * e, x0) for k in (-2, -1, 1, 2)]
        dv = (f[0] - 8 * f[1] + 8 * f[2] - f[3]) / (12 * h)
        cols.append(np.linalg.solve(C, np.linalg.solve(Q, C @ dv)))
    return np.column_stack(cols)


@dataclass(frozen=True)
class TotalDerivative:
    """D_s bar_s(mu(s)) in chart coordinates plus the deviation certificate."""

    derivative: np.ndarray
    frame_derivative: np.ndarray
    transported_velocity: np.ndarray
    deviation: float
    bound: float
    L: float
    r: float
    c12: float
    curvature_factor: float
    point: np.ndarray | None = None
    Q: np.ndarray | None = None

    @property
    def certified(self) -> bool:
        return self.deviation <= self.bound

    def to_json(self) -> dict[str, Any]:
        return {
            "derivative": self.derivative.tolist(),
            "deviation": self.deviation,
            "bound": self.bound,
            "L": self.L,
            "r": self.r,
            "c12_norm": self.c12,
            "certified": self.certified,
        }


def d_bar_total(inst: MetricFamilyInstance, h: float = 1e-3, check: bool = True) -> TotalDerivative:
    """Sum of the metric, weight and atom terms, with the 32 max{a^2, b^2} L r certificate.

    Norms are those of g_{s0}; operator norms are taken with the Euclidean
    norm on the parameter space.
    """
    fam = inst.family
    s0 = inst.s0
    model = fam.model(s0)
    mu = inst.measure(s0)
    if check:
        check_guard(mu)
    res = solve(mu, tol=1e-13, guard=False)
    bar = res.point
    xb = fam.chart(s0, bar)
    C = fam.frame_matrix(s0, xb)
    Q = hessian_Q(mu, bar)

    metric_term = d_bar_d_metric(inst, h, xb)
    frame = C @ metric_term
    transported = np.zeros_like(frame)
    max_dz = 0.0
    for i in range(inst.n):
        zi = mu.points[i]
        log_i = model.coefficients(bar, model.log(bar, zi))
        frame += np.outer(np.linalg.solve(Q, log_i), inst.weight_velocities[i])
        dz = fam.frame_matrix(s0, inst.atoms[i]) @ inst.atom_velocities[i]
        max_dz = max(max_dz, float(np.linalg.norm(dz, 2)))
        if model.dist(bar, zi) < 1e-12:
            dlog = model.transport_matrix(zi, bar)
        else:
            dlog = model.dlog(bar, zi)
        frame += inst.weights[i] * np.linalg.solve(Q, dlog @ dz)
        transported += inst.weights[i] * (model.transport_matrix(zi, bar) @ dz)
    predicted = np.linalg.solve(Q, transported)
    deviation = float(np.linalg.norm(frame - predicted, 2))
    sum_dw = float(sum(np.linalg.norm(inst.weight_velocities[i]) for i in range(inst.n)))
    c12 = fam.c12_norm(s0, xb)
    L = max(max_dz, sum_dw) + c12
    r = mu.diameter()
    kappa = max(model.a**2, model.b**2)
    return TotalDerivative(
        derivative=np.linalg.solve(C, frame),
        frame_derivative=frame,
        transported_velocity=predicted,
        deviation=deviation,
        bound=32 * kappa * L * r,
        L=L,
        r=r,
        c12=c12,
        curvature_factor=kappa,
        point=bar,
        Q=Q,
    )


def graph_tilt(inst: MetricFamilyInstance) -> float:
    """Grassmannian distance between the barycenter graph and the averaged atom-path plane.

    Both planes live in R^m x T_bar with the product of the Euclidean and g_{s0} metrics.
    """
    td = d_bar_total(inst, check=False)
    return grassmann_distance(graph_span(td.frame_derivative), graph_span(td.transported_velocity))


# ---------------------------------------------------------------------------
# random instances


def family_for(kind: str) -> MetricFamily:
    """Standard families used by the bound suites; all have max{a^2, b^2} >= 1/2."""
    if kind == "S2":
        return SphereFamily(2, b0=1.2, beta=(0.3,))
    if kind == "H2":
        return HyperbolicFamily(2, a0=1.2, alpha=(0.4,))
    if kind == "SPD2":
        return SPDFamily(1)
    if kind == "H2xH2":
        return ProductFamily([HyperbolicFamily(2, 1.1, (0.3,)), HyperbolicFamily(2, 1.3, (-0.2,))])
    raise ModelError(f"unknown family {kind!r}")


def random_instance(
    fam: MetricFamily,
    rng: np.random.Generator,
    n_atoms: int | None = None,
    diameter_fraction: float | None = None,
    velocity_scale: float = 1.0,
) -> MetricFamilyInstance:
    """A random instance whose atom diameter is a fraction of the guard radius at s0."""
    s0 = np.zeros(fam.param_dim)
    model = fam.model(s0)
    n = int(rng.integers(2, 6)) if n_atoms is None else n_atoms
    frac = rng.uniform(0.05, 0.95) if diameter_fraction is None else diameter_fraction
    center = model.random_point(rng, radius=0.5)
    pts = model.random_cluster(rng, n, frac * guard_radius(model), center)
    atoms = np.array([fam.chart(s0, p) for p in pts])
    w = 0.5 / n + 0.5 * rng.dirichlet(np.ones(n))
    wv = velocity_scale * rng.standard_normal((n, fam.param_dim))
    wv -= wv.mean(axis=0)
    zv = velocity_scale * rng.standard_normal((n, fam.chart_dim, fam.param_dim))
    return MetricFamilyInstance(fam, s0, atoms, w, zv, wv)


def random_measure(model: Manifold, rng: np.random.Generator, n: int, diameter: float, center: np.ndarray | None = None) -> WeightedDirac:
    pts = model.random_cluster(rng, n, diameter, center)
    return WeightedDirac(model, rng.dirichlet(np.ones(n)), pts)
