"""Model Riemannian manifolds with closed-form geometry.

Every model stores points as flat numpy arrays in an ambient chart:

* ``Euclidean(k)``: points of R^k.
* ``Sphere(k, radius)``: vectors of R^(k+1) with Euclidean norm ``radius``.
* ``Hyperbolic(k, a)``: the upper sheet of the hyperboloid
  ``<x, x>_L = -1/a^2`` in R^(k, 1), time coordinate last.
* ``SPD(n)``: symmetric positive-definite matrices, flattened row-major,
  with the affine-invariant metric ``tr(P^-1 U P^-1 V)``.
* ``Product(models)``: concatenated coordinates with the product metric.

Tangent vectors live in the same ambient space. ``basis(p)`` returns an
orthonormal frame of ``T_p`` as the columns of an ``ambient x dim`` matrix,
and most second-order objects (Hessians, mixed derivatives) are returned as
``dim x dim`` matrices in these frames.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

DEFAULT_TOL = 1e-10
FD_STEP = 1e-5


class ModelError(ValueError):
    """Raised on constraint violations, model mismatches or degenerate input."""


# ---------------------------------------------------------------------------
# small spectral helpers shared by SPD and the Lie modules


def sym(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)


def sym_fn(m: np.ndarray, fn) -> np.ndarray:
    """Apply a scalar function to a symmetric matrix through its eigenvalues."""
    w, u = np.linalg.eigh(sym(m))
    return (u * fn(w)) @ u.T


def sqrtm_spd(m: np.ndarray) -> np.ndarray:
    return sym_fn(m, np.sqrt)


def invsqrtm_spd(m: np.ndarray) -> np.ndarray:
    return sym_fn(m, lambda w: 1.0 / np.sqrt(w))


def expm_sym(m: np.ndarray) -> np.ndarray:
    return sym_fn(m, np.exp)


def logm_spd(m: np.ndarray) -> np.ndarray:
    return sym_fn(m, np.log)


def _xcoth(x: np.ndarray) -> np.ndarray:
    """x * coth(x), continuous at 0."""
    x = np.asarray(x, dtype=float)
    out = np.ones_like(x)
    big = np.abs(x) > 1e-6
    out[big] = x[big] / np.tanh(x[big])
    small = ~big
    out[small] = 1.0 + x[small] ** 2 / 3.0
    return out


def _xcot(x: np.ndarray) -> np.ndarray:
    """x * cot(x), continuous at 0."""
    x = np.asarray(x, dtype=float)
    out = np.ones_like(x)
    big = np.abs(x) > 1e-6
    out[big] = x[big] / np.tan(x[big])
    small = ~big
    out[small] = 1.0 - x[small] ** 2 / 3.0
    return out


# ---------------------------------------------------------------------------


class Manifold(ABC):
    """Common interface of the charted models."""

    dim: int
    ambient_dim: int
    a: float
    b: float
    injectivity_radius: float

    # -- metric -------------------------------------------------------------
    @abstractmethod
    def metric_matrix(self, p: np.ndarray) -> np.ndarray:
        """Ambient Gram matrix G with <u, v>_p = u^T G v for tangent u, v."""

    def inner(self, p: np.ndarray, u: np.ndarray, v: np.ndarray) -> float:
        return float(u @ self.metric_matrix(p) @ v)

    def norm(self, p: np.ndarray, v: np.ndarray) -> float:
        return math.sqrt(max(self.inner(p, v, v), 0.0))

    @abstractmethod
    def basis(self, p: np.ndarray) -> np.ndarray:
        """Orthonormal frame of T_p as columns."""

    def coefficients(self, p: np.ndarray, v: np.ndarray) -> np.ndarray:
        return self.basis(p).T @ self.metric_matrix(p) @ v

    def from_coefficients(self, p: np.ndarray, c: np.ndarray) -> np.ndarray:
        return self.basis(p) @ np.asarray(c, dtype=float)

    # -- geodesics ----------------------------------------------------------
    @abstractmethod
    def exp(self, p: np.ndarray, v: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def log(self, p: np.ndarray, q: np.ndarray) -> np.ndarray: ...

    def dist(self, p: np.ndarray, q: np.ndarray) -> float:
        return self.norm(p, self.log(p, q))

    @abstractmethod
    def transport(self, p: np.ndarray, q: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Parallel transport of v from T_p to T_q along the minimizing geodesic."""

    def transport_matrix(self, p: np.ndarray, q: np.ndarray) -> np.ndarray:
        """Parallel transport T_p -> T_q in the frames basis(p), basis(q)."""
        bp = self.basis(p)
        cols = [self.coefficients(q, self.transport(p, q, bp[:, j])) for j in range(self.dim)]
        return np.column_stack(cols)

    # -- constraints ----------------------------------------------------------
    @abstractmethod
    def constraint_residual(self, p: np.ndarray) -> float: ...

    @abstractmethod
    def tangent_residual(self, p: np.ndarray, v: np.ndarray) -> float: ...

    def check_point(self, p: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if p.shape != (self.ambient_dim,):
            raise ModelError(f"expected {self.ambient_dim} coordinates, got shape {p.shape}")
        res = self.constraint_residual(p)
        if not res <= tol:
            raise ModelError(f"point violates the model constraint (residual {res:.3e})")
        return p

    def check_tangent(self, p: np.ndarray, v: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape != (self.ambient_dim,):
            raise ModelError(f"expected {self.ambient_dim} coordinates, got shape {v.shape}")
        res = self.tangent_residual(p, v)
        if not res <= tol * max(1.0, float(np.max(np.abs(v))) if v.size else 1.0):
            raise ModelError(f"vector is not tangent at the base point (residual {res:.3e})")
        return v

    # -- curvature ------------------------------------------------------------
    @abstractmethod
    def curvature_form(self, p: np.ndarray, u: np.ndarray, v: np.ndarray) -> float:
        """<R(u, v) v, u> for tangent u, v."""

    def sectional_curvature(self, p: np.ndarray, u: np.ndarray, v: np.ndarray) -> float:
        area2 = self.inner(p, u, u) * self.inner(p, v, v) - self.inner(p, u, v) ** 2
        if area2 <= 1e-300:
            raise ModelError("degenerate 2-plane")
        return self.curvature_form(p, u, v) / area2

    @property
    def curvature_scale(self) -> float:
        """max{a, b}."""
        return max(self.a, self.b)

    @property
    def convexity_radius(self) -> float:
        r = 0.5 * self.injectivity_radius
        if self.b > 0:
            r = min(r, math.pi / (2 * self.b))
        return r

    # -- distance derivatives ------------------------------------------------
    def grad_distance(self, x: np.ndarray, z: np.ndarray) -> np.ndarray:
        v = self.log(x, z)
        t = self.norm(x, v)
        if t <= 1e-300:
            raise ModelError("gradient of the distance is undefined at x = z")
        return -v / t

    @abstractmethod
    def hess_half_sq(self, x: np.ndarray, z: np.ndarray) -> np.ndarray:
        """Hessian of 0.5 d(., z)^2 at x, in the frame basis(x)."""

    def hessian_distance(self, x: np.ndarray, z: np.ndarray) -> np.ndarray:
        """Hessian of d(., z) at x, in the frame basis(x)."""
        t = self.dist(x, z)
        if t <= 1e-300:
            raise ModelError("Hessian of the distance is undefined at x = z")
        if self.b > 0 and t >= math.pi / (2 * self.b):
            raise ModelError("point lies beyond the comparison radius pi/(2b)")
        u = self.coefficients(x, self.grad_distance(x, z))
        return (self.hess_half_sq(x, z) - np.outer(u, u)) / t

    def dlog_dpoint(self, x: np.ndarray, z: np.ndarray, h: float = FD_STEP) -> np.ndarray:
        """D_z log_x z as a matrix basis(z) -> basis(x), by central differences."""
        bz = self.basis(z)
        cols = []
        for j in range(self.dim):
            zp = self.exp(z, h * bz[:, j])
            zm = self.exp(z, -h * bz[:, j])
            cols.append((self.coefficients(x, self.log(x, zp)) - self.coefficients(x, self.log(x, zm))) / (2 * h))
        return np.column_stack(cols)

    def dlog(self, x: np.ndarray, z: np.ndarray, h: float = FD_STEP) -> np.ndarray:
        """D_z log_x z, in closed form when the model has one."""
        exact = getattr(self, "dlog_dpoint_exact", None)
        return exact(x, z) if exact is not None else self.dlog_dpoint(x, z, h)

    def mixed_hessian_distance(self, x: np.ndarray, z: np.ndarray, h: float = FD_STEP) -> np.ndarray:
        """D_z grad_x d(x, z) as a matrix basis(z) -> basis(x), by central differences.

        The step is capped at 1e-4 d(x, z) so the truncation error stays
        small relative to the 1/d size of the derivative.
        """
        h = min(h, 1e-4 * self.dist(x, z))
        bz = self.basis(z)
        cols = []
        for j in range(self.dim):
            gp = self.grad_distance(x, self.exp(z, h * bz[:, j]))
            gm = self.grad_distance(x, self.exp(z, -h * bz[:, j]))
            cols.append(self.coefficients(x, gp - gm) / (2 * h))
        return np.column_stack(cols)

    # -- sampling ---------------------------------------------------------------
    @abstractmethod
    def origin(self) -> np.ndarray: ...

    def random_tangent(self, rng: np.random.Generator, p: np.ndarray, scale: float = 1.0) -> np.ndarray:
        return self.from_coefficients(p, scale * rng.standard_normal(self.dim))

    def random_point(self, rng: np.random.Generator, center: np.ndarray | None = None, radius: float = 1.0) -> np.ndarray:
        """A point at distance < radius from center (uniform direction, uniform radius)."""
        c = self.origin() if center is None else center
        d = rng.standard_normal(self.dim)
        d /= np.linalg.norm(d)
        return self.exp(c, self.from_coefficients(c, d * radius * rng.uniform(0.0, 1.0)))

    def random_cluster(self, rng: np.random.Generator, n: int, diameter: float, center: np.ndarray | None = None) -> list[np.ndarray]:
        """n points with pairwise distance < diameter."""
        c = self.origin() if center is None else center
        return [self.random_point(rng, c, 0.5 * diameter * (1 - 1e-9)) for _ in range(n)]

    # -- serialization ------------------------------------------------------------
    @abstractmethod
    def descriptor(self) -> dict[str, Any]: ...

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Manifold) and self.descriptor() == other.descriptor()

    def __hash__(self) -> int:
        return hash(repr(self.descriptor()))

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.descriptor()})"


# ---------------------------------------------------------------------------


class Euclidean(Manifold):
    def __init__(self, k: int):
        self.dim = self.ambient_dim = int(k)
        self.a = self.b = 0.0
        self.injectivity_radius = math.inf

    def metric_matrix(self, p):
        return np.eye(self.dim)

    def inner(self, p, u, v):
        return float(np.dot(u, v))

    def basis(self, p):
        return np.eye(self.dim)

    def coefficients(self, p, v):
        return np.array(v, dtype=float)

    def exp(self, p, v):
        return np.asarray(p, dtype=float) + v

    def log(self, p, q):
        return np.asarray(q, dtype=float) - p

    def dist(self, p, q):
        return float(np.linalg.norm(np.asarray(q) - p))

    def transport(self, p, q, v):
        return np.array(v, dtype=float)

    def constraint_residual(self, p):
        return 0.0 if np.all(np.isfinite(p)) else math.inf

    def tangent_residual(self, p, v):
        return 0.0 if np.all(np.isfinite(v)) else math.inf

    def curvature_form(self, p, u, v):
        return 0.0

    def hess_half_sq(self, x, z):
        return np.eye(self.dim)

    def dlog_dpoint_exact(self, x, z):
        return np.eye(self.dim)

    def origin(self):
        return np.zeros(self.dim)

    def descriptor(self):
        return {"kind": "euclidean", "dim": self.dim}


class _ConstantCurvature(Manifold):
    """Shared formulas for the sphere and hyperbolic models (curvature kappa)."""

    kappa: float

    def _sn(self, t: float) -> float:
        k = self.kappa
        if k > 0:
            r = 1 / math.sqrt(k)
            return r * math.sin(t / r)
        if k < 0:
            r = 1 / math.sqrt(-k)
            return r * math.sinh(t / r)
        return t

    def transport(self, p, q, v):
        u = self.log(p, q)
        d2 = self.inner(p, u, u)
        if d2 <= 1e-300:
            return np.array(v, dtype=float)
        w = self.log(q, p)
        return v - self.inner(p, u, v) / d2 * (u + w)

    def transport_matrix(self, p, q):
        # the ambient metric is the same at p and q, so the whole frame moves in one product
        bp = self.basis(p)
        G = self.metric_matrix(p)
        u = self.log(p, q)
        Gu = G @ u
        d2 = float(u @ Gu)
        if d2 > 1e-300:
            bp = bp - np.outer(u + self.log(q, p), Gu @ bp) / d2
        return self.basis(q).T @ G @ bp

    def curvature_form(self, p, u, v):
        return self.kappa * (self.inner(p, u, u) * self.inner(p, v, v) - self.inner(p, u, v) ** 2)

    def hess_half_sq(self, x, z):
        v = self.coefficients(x, self.log(x, z))
        t = float(np.linalg.norm(v))
        if t <= 1e-300:
            return np.eye(self.dim)
        u = v / t
        k = self.kappa
        if k > 0:
            s = float(_xcot(np.array(math.sqrt(k) * t)))
        elif k < 0:
            s = float(_xcoth(np.array(math.sqrt(-k) * t)))
        else:
            s = 1.0
        return np.outer(u, u) + s * (np.eye(self.dim) - np.outer(u, u))

    def dlog_dpoint_exact(self, x, z):
        """Closed form of D_z log_x z (basis(z) -> basis(x)) for constant curvature."""
        t = self.dist(x, z)
        P = self.transport_matrix(z, x)
        if t <= 1e-300:
            return P
        u = self.coefficients(z, -self.log(z, x)) / t
        radial = np.outer(u, u)
        return P @ (radial + (t / self._sn(t)) * (np.eye(self.dim) - radial))


class Sphere(_ConstantCurvature):
    """Round sphere S^k of the given radius in R^(k+1)."""

    def __init__(self, k: int, radius: float = 1.0):
        self.dim = int(k)
        self.ambient_dim = self.dim + 1
        self.radius = float(radius)
        self.a = 0.0
        self.b = 1.0 / self.radius if self.dim >= 2 else 0.0
        self.kappa = self.b**2 if self.dim >= 2 else 0.0
        self.injectivity_radius = math.pi * self.radius

    def metric_matrix(self, p):
        return np.eye(self.ambient_dim)

    def inner(self, p, u, v):
        return float(np.dot(u, v))

    def basis(self, p):
        q = np.asarray(p, dtype=float) / self.radius
        if self.dim == 1:
            return np.array([[-q[1]], [q[0]]])
        n = self.ambient_dim
        e = np.zeros(n)
        e[-1] = 1.0
        c = float(q @ e)
        if c < -0.5:
            # rotate from the south pole instead, keeping the frame smooth near it
            e = -e
            c = -c
            flip = True
        else:
            flip = False
        k = np.outer(q, e) - np.outer(e, q)
        rot = np.eye(n) + k + k @ k / (1 + c)
        b = rot[:, :-1]
        if flip:
            b = b.copy()
            b[:, 0] = -b[:, 0]
        return b

    def coefficients(self, p, v):
        return self.basis(p).T @ v

    def exp(self, p, v):
        nv = float(np.linalg.norm(v))
        if nv <= 1e-300:
            return np.array(p, dtype=float)
        th = nv / self.radius
        out = math.cos(th) * np.asarray(p, dtype=float) + self.radius * math.sin(th) * v / nv
        return out * (self.radius / np.linalg.norm(out))

    def log(self, p, q):
        r2 = self.radius**2
        c = float(np.dot(p, q)) / r2
        u = np.asarray(q, dtype=float) - c * np.asarray(p, dtype=float)
        nu = float(np.linalg.norm(u))
        if nu <= 1e-300:
            if c > 0:
                return np.zeros(self.ambient_dim)
            raise ModelError("antipodal points have no unique geodesic")
        th = math.atan2(nu / self.radius, c)
        return self.radius * th * u / nu

    def dist(self, p, q):
        r2 = self.radius**2
        c = float(np.dot(p, q)) / r2
        s = float(np.linalg.norm(np.asarray(q) - c * np.asarray(p))) / self.radius
        return self.radius * math.atan2(s, c)

    def constraint_residual(self, p):
        return abs(float(np.linalg.norm(p)) - self.radius) / self.radius

    def tangent_residual(self, p, v):
        return abs(float(np.dot(p, v))) / self.radius

    def origin(self):
        e = np.zeros(self.ambient_dim)
        e[-1] = self.radius
        return e

    def descriptor(self):
        return {"kind": "sphere", "dim": self.dim, "radius": self.radius}


class Hyperbolic(_ConstantCurvature):
    """Hyperbolic space H^k of curvature -a^2 on the hyperboloid, time last."""

    def __init__(self, k: int = 2, a: float = 1.0):
        if a <= 0:
            raise ModelError("curvature scale a must be positive")
        self.dim = int(k)
        self.ambient_dim = self.dim + 1
        self.a = float(a)
        self.b = 0.0
        self.kappa = -self.a**2
        self.injectivity_radius = math.inf
        self._g = np.ones(self.ambient_dim)
        self._g[-1] = -1.0

    def lorentz(self, u, v) -> float:
        return float(np.dot(u[:-1], v[:-1]) - u[-1] * v[-1])

    def metric_matrix(self, p):
        return np.diag(self._g)

    def inner(self, p, u, v):
        return self.lorentz(u, v)

    def basis(self, p):
        y = self.a * np.asarray(p[:-1], dtype=float)
        y0 = self.a * float(p[-1])
        k = self.dim
        b = np.empty((k + 1, k))
        b[:k, :] = np.eye(k) + np.outer(y, y) / (1 + y0)
        b[k, :] = y
        return b

    def coefficients(self, p, v):
        return self.basis(p).T @ (self._g * v)

    def lift(self, spatial: np.ndarray) -> np.ndarray:
        """Point of the hyperboloid with the given spatial coordinates."""
        x = np.asarray(spatial, dtype=float)
        return np.append(x, math.sqrt(1 / self.a**2 + float(x @ x)))

    def _renormalize(self, x):
        return self.lift(x[:-1])

    def exp(self, p, v):
        nv = math.sqrt(max(self.lorentz(v, v), 0.0))
        if nv <= 1e-300:
            return np.array(p, dtype=float)
        th = self.a * nv
        out = math.cosh(th) * np.asarray(p, dtype=float) + math.sinh(th) / self.a * v / nv
        return self._renormalize(out)

    def log(self, p, q):
        a2 = self.a**2
        c = self.lorentz(p, q)
        u = np.asarray(q, dtype=float) + a2 * c * np.asarray(p, dtype=float)
        nu = math.sqrt(max(self.lorentz(u, u), 0.0))
        if nu <= 1e-300:
            return np.zeros(self.ambient_dim)
        d = math.asinh(self.a * nu) / self.a
        return d * u / nu

    def dist(self, p, q):
        a2 = self.a**2
        c = self.lorentz(p, q)
        u = np.asarray(q, dtype=float) + a2 * c * np.asarray(p, dtype=float)
        nu = math.sqrt(max(self.lorentz(u, u), 0.0))
        return math.asinh(self.a * nu) / self.a

    def constraint_residual(self, p):
        if p[-1] <= 0:
            return math.inf
        return abs(self.a**2 * self.lorentz(p, p) + 1.0) / max(1.0, self.a**2 * float(p @ p))

    def tangent_residual(self, p, v):
        return abs(self.lorentz(p, v)) * self.a / max(1.0, self.a * float(np.linalg.norm(p)))

    def origin(self):
        e = np.zeros(self.ambient_dim)
        e[-1] = 1.0 / self.a
        return e

    def descriptor(self):
        return {"kind": "hyperbolic", "dim": self.dim, "a": self.a}


def _sym_basis(n: int) -> list[np.ndarray]:
    out = []
    for i in range(n):
        for j in range(i, n):
            e = np.zeros((n, n))
            if i == j:
                e[i, i] = 1.0
            else:
                e[i, j] = e[j, i] = 1 / math.sqrt(2)
            out.append(e)
    return out


class SPD(Manifold):
    """Symmetric positive-definite n x n matrices, affine-invariant metric.

    Sectional curvatures lie in [-1/2, 0] (the commutator bound
    ||[U, V]||^2 <= 2 ||U||^2 ||V||^2), so a = 1/sqrt(2) for n >= 2.
    """

    def __init__(self, n: int = 2):
        self.n = int(n)
        self.dim = self.n * (self.n + 1) // 2
        self.ambient_dim = self.n * self.n
        self.a = 1 / math.sqrt(2) if self.n >= 2 else 0.0
        self.b = 0.0
        self.injectivity_radius = math.inf
        self._E = _sym_basis(self.n)

    def mat(self, p: np.ndarray) -> np.ndarray:
        return np.asarray(p, dtype=float).reshape(self.n, self.n)

    def vec(self, m: np.ndarray) -> np.ndarray:
        return np.asarray(m, dtype=float).reshape(-1)

    def metric_matrix(self, p):
        pi = np.linalg.inv(self.mat(p))
        return np.kron(pi, pi)

    def inner(self, p, u, v):
        pi = np.linalg.inv(self.mat(p))
        return float(np.trace(pi @ self.mat(u) @ pi @ self.mat(v)))

    def basis(self, p):
        s = sqrtm_spd(self.mat(p))
        return np.column_stack([self.vec(s @ e @ s) for e in self._E])

    def coefficients(self, p, v):
        si = invsqrtm_spd(self.mat(p))
        w = si @ self.mat(v) @ si
        return np.array([float(np.sum(w * e)) for e in self._E])

    def exp(self, p, v):
        P = self.mat(p)
        s = sqrtm_spd(P)
        si = np.linalg.inv(s)
        return self.vec(sym(s @ expm_sym(si @ self.mat(v) @ si) @ s))

    def log(self, p, q):
        P = self.mat(p)
        s = sqrtm_spd(P)
        si = np.linalg.inv(s)
        return self.vec(sym(s @ logm_spd(si @ self.mat(q) @ si) @ s))

    def dist(self, p, q):
        si = invsqrtm_spd(self.mat(p))
        w = np.linalg.eigvalsh(sym(si @ self.mat(q) @ si))
        return float(np.linalg.norm(np.log(w)))

    def transport(self, p, q, v):
        P, Q = self.mat(p), self.mat(q)
        s = sqrtm_spd(P)
        si = np.linalg.inv(s)
        e = s @ sqrtm_spd(si @ Q @ si) @ si
        return self.vec(sym(e @ self.mat(v) @ e.T))

    def transport_matrix(self, p, q):
        P, Q = self.mat(p), self.mat(q)
        s = sqrtm_spd(P)
        si = np.linalg.inv(s)
        e = s @ sqrtm_spd(si @ Q @ si) @ si
        # frame vector s E s moves to e s E s e^T; read it in the frame at q
        m = invsqrtm_spd(Q) @ e @ s
        cols = []
        for E in self._E:
            w = sym(m @ E @ m.T)
            cols.append([float(np.sum(w * F)) for F in self._E])
        return np.array(cols).T

    def constraint_residual(self, p):
        m = self.mat(p)
        asym = float(np.max(np.abs(m - m.T))) / max(1.0, float(np.max(np.abs(m))))
        if float(np.linalg.eigvalsh(sym(m))[0]) <= 0:
            return math.inf
        return asym

    def tangent_residual(self, p, v):
        m = self.mat(v)
        return float(np.max(np.abs(m - m.T)))

    def curvature_form(self, p, u, v):
        si = invsqrtm_spd(self.mat(p))
        U = si @ self.mat(u) @ si
        V = si @ self.mat(v) @ si
        c = U @ V - V @ U
        return -0.25 * float(np.sum(c * c))

    def hess_half_sq(self, x, z):
        si = invsqrtm_spd(self.mat(x))
        V = logm_spd(si @ self.mat(z) @ si)
        lam, U = np.linalg.eigh(sym(V))
        # the Jacobi operator W -> 1/4 [[W, V], V] is diagonal in the eigenframe of V
        g = _xcoth(0.5 * (lam[:, None] - lam[None, :]))
        cols = []
        for e in self._E:
            w = U @ ((U.T @ e @ U) * g) @ U.T
            cols.append([float(np.sum(w * f)) for f in self._E])
        return np.array(cols).T

    def dlog_dpoint_exact(self, x, z):
        """Closed form of D_z log_x z through divided differences of log."""
        si = invsqrtm_spd(self.mat(x))
        m = si @ sqrtm_spd(self.mat(z))
        lam, U = np.linalg.eigh(sym(m @ m.T))
        ll = np.log(lam)
        dl = lam[:, None] - lam[None, :]
        same = np.abs(dl) <= 1e-12 * lam.max()
        g = np.where(same, 1.0 / lam[:, None], (ll[:, None] - ll[None, :]) / np.where(same, 1.0, dl))
        cols = []
        for E in self._E:
            w = U @ ((U.T @ m @ E @ m.T @ U) * g) @ U.T
            cols.append([float(np.sum(w * F)) for F in self._E])
        return np.array(cols).T

    def origin(self):
        return self.vec(np.eye(self.n))

    def descriptor(self):
        return {"kind": "spd", "n": self.n}


class Product(Manifold):
    """Riemannian product of models."""

    def __init__(self, factors: Sequence[Manifold]):
        self.factors = tuple(factors)
        if not self.factors:
            raise ModelError("empty product")
        self.dim = sum(f.dim for f in self.factors)
        self.ambient_dim = sum(f.ambient_dim for f in self.factors)
        self.a = max(f.a for f in self.factors)
        self.b = max(f.b for f in self.factors)
        self.injectivity_radius = min(f.injectivity_radius for f in self.factors)
        self._amb = np.cumsum([0] + [f.ambient_dim for f in self.factors])
        self._tan = np.cumsum([0] + [f.dim for f in self.factors])

    def split(self, p: np.ndarray) -> list[np.ndarray]:
        return [np.asarray(p[self._amb[i] : self._amb[i + 1]], dtype=float) for i in range(len(self.factors))]

    def split_coefficients(self, c: np.ndarray) -> list[np.ndarray]:
        return [np.asarray(c[self._tan[i] : self._tan[i + 1]], dtype=float) for i in range(len(self.factors))]

    @staticmethod
    def join(parts: Sequence[np.ndarray]) -> np.ndarray:
        return np.concatenate([np.asarray(x, dtype=float) for x in parts])

    def _block(self, mats: Sequence[np.ndarray], rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        out = np.zeros((rows[-1], cols[-1]))
        for i, m in enumerate(mats):
            out[rows[i] : rows[i + 1], cols[i] : cols[i + 1]] = m
        return out

    def metric_matrix(self, p):
        return self._block([f.metric_matrix(x) for f, x in zip(self.factors, self.split(p))], self._amb, self._amb)

    def inner(self, p, u, v):
        return sum(f.inner(x, a, b) for f, x, a, b in zip(self.factors, self.split(p), self.split(u), self.split(v)))

    def basis(self, p):
        return self._block([f.basis(x) for f, x in zip(self.factors, self.split(p))], self._amb, self._tan)

    def coefficients(self, p, v):
        return self.join([f.coefficients(x, w) for f, x, w in zip(self.factors, self.split(p), self.split(v))])

    def from_coefficients(self, p, c):
        return self.join([f.from_coefficients(x, w) for f, x, w in zip(self.factors, self.split(p), self.split_coefficients(c))])

    def exp(self, p, v):
        return self.join([f.exp(x, w) for f, x, w in zip(self.factors, self.split(p), self.split(v))])

    def log(self, p, q):
        return self.join([f.log(x, y) for f, x, y in zip(self.factors, self.split(p), self.split(q))])

    def dist(self, p, q):
        return math.sqrt(sum(f.dist(x, y) ** 2 for f, x, y in zip(self.factors, self.split(p), self.split(q))))

    def transport(self, p, q, v):
        return self.join([f.transport(x, y, w) for f, x, y, w in zip(self.factors, self.split(p), self.split(q), self.split(v))])

    def constraint_residual(self, p):
        return max(f.constraint_residual(x) for f, x in zip(self.factors, self.split(p)))

    def tangent_residual(self, p, v):
        return max(f.tangent_residual(x, w) for f, x, w in zip(self.factors, self.split(p), self.split(v)))

    def curvature_form(self, p, u, v):
        return sum(f.curvature_form(x, a, b) for f, x, a, b in zip(self.factors, self.split(p), self.split(u), self.split(v)))

    def hess_half_sq(self, x, z):
        return self._block([f.hess_half_sq(a, b) for f, a, b in zip(self.factors, self.split(x), self.split(z))], self._tan, self._tan)

    def dlog_dpoint(self, x, z, h=FD_STEP):
        return self._block([f.dlog_dpoint(a, b, h) for f, a, b in zip(self.factors, self.split(x), self.split(z))], self._tan, self._tan)

    def transport_matrix(self, p, q):
        return self._block([f.transport_matrix(a, b) for f, a, b in zip(self.factors, self.split(p), self.split(q))], self._tan, self._tan)

    def dlog(self, x, z, h=FD_STEP):
        return self._block([f.dlog(a, b, h) for f, a, b in zip(self.factors, self.split(x), self.split(z))], self._tan, self._tan)

    def origin(self):
        return self.join([f.origin() for f in self.factors])

    def descriptor(self):
        return {"kind": "product", "factors": [f.descriptor() for f in self.factors]}


def model_from_descriptor(desc: dict[str, Any]) -> Manifold:
    kind = desc.get("kind")
    if kind == "euclidean":
        return Euclidean(int(desc["dim"]))
    if kind == "sphere":
        return Sphere(int(desc["dim"]), float(desc.get("radius", 1.0)))
    if kind == "hyperbolic":
        return Hyperbolic(int(desc.get("dim", 2)), float(desc.get("a", 1.0)))
    if kind == "spd":
        return SPD(int(desc["n"]))
    if kind == "product":
        return Product([model_from_descriptor(d) for d in desc["factors"]])
    raise ModelError(f"unknown model kind {kind!r}")


# ---------------------------------------------------------------------------
# serializable point/tangent records


@dataclass(frozen=True)
class ModelPoint:
    model: Manifold
    coords: np.ndarray = field(compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "coords", self.model.check_point(self.coords))

    def to_json(self) -> dict[str, Any]:
        return {"model": self.model.descriptor(), "coords": [float(x) for x in self.coords]}

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "ModelPoint":
        return cls(model_from_descriptor(obj["model"]), np.asarray(obj["coords"], dtype=float))


@dataclass(frozen=True)
class ModelTangent:
    base: ModelPoint
    vector: np.ndarray = field(compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "vector", self.base.model.check_tangent(self.base.coords, self.vector))

    def to_json(self) -> dict[str, Any]:
        return {"base": self.base.to_json(), "coords": [float(x) for x in self.vector]}

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "ModelTangent":
        return cls(ModelPoint.from_json(obj["base"]), np.asarray(obj["coords"], dtype=float))


def _same_model(a: ModelPoint, b: ModelPoint) -> Manifold:
    if a.model != b.model:
        raise ModelError("points live on different models")
    return a.model


def exp_map(p: ModelPoint, v: ModelTangent) -> ModelPoint:
    if v.base.model != p.model or not np.allclose(v.base.coords, p.coords, atol=1e-12):
        raise ModelError("tangent vector is not based at p")
    return ModelPoint(p.model, p.model.exp(p.coords, v.vector))


def log_map(p: ModelPoint, q: ModelPoint) -> ModelTangent:
    m = _same_model(p, q)
    if m.dist(p.coords, q.coords) >= m.injectivity_radius:
        raise ModelError("points are beyond the injectivity radius")
    return ModelTangent(p, m.log(p.coords, q.coords))


def distance(p: ModelPoint, q: ModelPoint) -> float:
    return _same_model(p, q).dist(p.coords, q.coords)


def parallel_transport(p: ModelPoint, q: ModelPoint, v: ModelTangent) -> ModelTangent:
    m = _same_model(p, q)
    if m.dist(p.coords, q.coords) >= m.injectivity_radius:
        raise ModelError("geodesic from p to q is not unique")
    return ModelTangent(q, m.transport(p.coords, q.coords, v.vector))


def grad_distance(x: ModelPoint, z: ModelPoint) -> ModelTangent:
    m = _same_model(x, z)
    return ModelTangent(x, m.grad_distance(x.coords, z.coords))


def hessian_distance(x: ModelPoint, z: ModelPoint) -> np.ndarray:
    return _same_model(x, z).hessian_distance(x.coords, z.coords)


# ---------------------------------------------------------------------------
# comparison-tensor residuals


def comparison_tensor_1(m: Manifold, x: np.ndarray, z: np.ndarray) -> tuple[float, float]:
    """(||grad d (x) grad d + t Hess d - I||, max{a^2/3, b^2/2} t^2) at x."""
    t = m.dist(x, z)
    u = m.coefficients(x, m.grad_distance(x, z))
    lhs = np.outer(u, u) + t * m.hessian_distance(x, z) - np.eye(m.dim)
    bound = max(m.a**2 / 3, m.b**2 / 2) * t**2
    return float(np.linalg.norm(lhs, 2)), bound


def comparison_tensor_2(m: Manifold, x: np.ndarray, z: np.ndarray, h: float = FD_STEP) -> tuple[float, float]:
    """Residual of the mixed comparison tensor and its bound 2 max{a^2, b^2} t^2.

    The operator T_x -> T_x is v -> grad_x d <grad_z d, P v> + t D_z(grad_x d)[P v]
    with P the parallel transport T_x -> T_z; in flat space it equals -I.
    """
    t = m.dist(x, z)
    gx = m.coefficients(x, m.grad_distance(x, z))
    gz = m.coefficients(z, m.grad_distance(z, x))
    mixed = m.mixed_hessian_distance(x, z, h)
    P = m.transport_matrix(x, z)
    op = (np.outer(gx, gz) + t * mixed) @ P
    bound = 2 * max(m.a**2, m.b**2) * t**2
    return float(np.linalg.norm(op + np.eye(m.dim), 2)), bound


# ---------------------------------------------------------------------------
# isometries


def sl2_to_lorentz(g: np.ndarray) -> np.ndarray:
    """3x3 Lorentz matrix of X -> g X g^T on (x, y, z) <-> [[z + x, y], [y, z - x]]."""
    g = np.asarray(g, dtype=float)
    cols = []
    for e in np.eye(3):
        x, y, z = e
        X = np.array([[z + x, y], [y, z - x]])
        Y = g @ X @ g.T
        cols.append([(Y[0, 0] - Y[1, 1]) / 2, (Y[0, 1] + Y[1, 0]) / 2, (Y[0, 0] + Y[1, 1]) / 2])
    return np.array(cols).T


def random_sl2(rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    m = np.eye(2) + scale * rng.standard_normal((2, 2))
    d = np.linalg.det(m)
    if d < 0:
        m[:, 0] = -m[:, 0]
        d = -d
    return m / math.sqrt(d)


def hyperbolic_isometry(g: np.ndarray):
    """Isometry of H^2 (any curvature scale) induced by g in SL(2, R)."""
    L = sl2_to_lorentz(g)
    return lambda p: L @ p


def spd_congruence(g: np.ndarray):
    """Isometry P -> g P g^T of SPD(n) for g with |det g| = 1."""
    g = np.asarray(g, dtype=float)
    n = g.shape[0]
    return lambda p: (g @ np.asarray(p).reshape(n, n) @ g.T).reshape(-1)
