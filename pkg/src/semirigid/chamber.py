"""The Weyl chamber face bundle G/M_Q for SL(n) and PSL(2) x PSL(2).

A point gM_Q is a Weyl chamber face based at gK. The trivialization

    Phi(gM_Q) = (gK, k'M_Q),  g = k' a' n'  (generalized Iwasawa),

splits it into a point of the symmetric space (stored as the SPD matrix g g^T
per factor) and a flag (a point of G/Q). Its inverse uses a reverse block
Cholesky factorization, which also gives the canonical representative of a
coset.

The symmetric space carries the metric induced by the trace form
tr(U^T V) on the Lie algebra, so d(gK, hK) = 0.5 ||log eig((gg^T)^-1 hh^T)||
(summed in quadrature over factors). G/M_Q carries the left-invariant metric
induced by the same trace form.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from .lie import (
    BoundaryPoint,
    GroupElement,
    GroupError,
    ParabolicData,
    flag_action,
    flag_of,
    opposite_flag,
)
from .manifold import sym

# ---------------------------------------------------------------------------
# symmetric space


@dataclass(frozen=True, eq=False)
class SymmetricSpacePoint:
    """gK stored as the SPD matrices g g^T, one per factor."""

    mats: tuple[np.ndarray, ...]

    def __init__(self, mats: Sequence[np.ndarray]):
        object.__setattr__(self, "mats", tuple(sym(np.asarray(m, dtype=float)) for m in mats))

    @classmethod
    def of(cls, g: GroupElement) -> "SymmetricSpacePoint":
        return cls([f @ f.T for f in g.factors])

    @classmethod
    def base(cls, dims: Sequence[int]) -> "SymmetricSpacePoint":
        return cls([np.eye(d) for d in dims])

    def act(self, g: GroupElement) -> "SymmetricSpacePoint":
        return SymmetricSpacePoint([f @ m @ f.T for f, m in zip(g.factors, self.mats)])

    def distance(self, other: "SymmetricSpacePoint") -> float:
        return symmetric_distance(self, other)

    def to_json(self) -> dict[str, Any]:
        return {"mats": [[float(x) for x in m.reshape(-1)] for m in self.mats]}


def symmetric_distance(x: SymmetricSpacePoint, y: SymmetricSpacePoint) -> float:
    total = 0.0
    for p, q in zip(x.mats, y.mats):
        w = np.linalg.eigvals(np.linalg.solve(p, q)).real
        total += 0.25 * float(np.sum(np.log(w) ** 2))
    return math.sqrt(total)


# ---------------------------------------------------------------------------
# bundle points and the trivialization


def _reverse_block_cholesky(y: np.ndarray, slices: list[slice]) -> np.ndarray:
    """q block upper triangular with SPD diagonal blocks and q q^T = y."""
    y = sym(y).copy()
    d = y.shape[0]
    q = np.zeros((d, d))
    for s in reversed(slices):
        top = slice(0, s.start)
        w, u = np.linalg.eigh(sym(y[s, s]))
        root = (u * np.sqrt(w)) @ u.T
        q[s, s] = root
        if s.start > 0:
            c = np.linalg.solve(root, y[top, s].T).T
            q[top, s] = c
            y[top, top] = y[top, top] - c @ c.T
    return q


def reverse_block_ldl(x: np.ndarray, slices: list[slice]) -> tuple[np.ndarray, np.ndarray]:
    """x = n D n^T with n block upper unipotent and D block diagonal SPD."""
    q = _reverse_block_cholesky(x, slices)
    z = np.zeros_like(q)
    for s in slices:
        z[s, s] = q[s, s]
    n = q @ np.linalg.inv(z)
    return n, z @ z.T


@dataclass(frozen=True, eq=False)
class ChamberBundlePoint:
    """A coset g M_Q; the stored representative is canonical."""

    rep: GroupElement
    parabolic: ParabolicData

    def __init__(self, rep: GroupElement, parabolic: ParabolicData, canonical: bool = False):
        if rep.group != parabolic.group:
            raise GroupError("group mismatch")
        if not canonical:
            base, xi = _trivialize(rep, parabolic)
            rep = _inverse(base, xi)
        object.__setattr__(self, "rep", rep)
        object.__setattr__(self, "parabolic", parabolic)

    @classmethod
    def base(cls, Q: ParabolicData) -> "ChamberBundlePoint":
        return cls(GroupElement.identity(Q.group), Q)

    def act(self, g: GroupElement) -> "ChamberBundlePoint":
        return ChamberBundlePoint(g @ self.rep, self.parabolic)

    def distance_to_coset(self, other: "ChamberBundlePoint") -> float:
        """Entrywise distance between canonical representatives."""
        return self.rep.distance(other.rep)

    def to_json(self) -> dict[str, Any]:
        return {"rep": self.rep.to_json(), "parabolic": self.parabolic.to_json()}


def _trivialize(g: GroupElement, Q: ParabolicData) -> tuple[SymmetricSpacePoint, BoundaryPoint]:
    return SymmetricSpacePoint.of(g), flag_of(g, Q)


def _inverse(x: SymmetricSpacePoint, xi: BoundaryPoint) -> GroupElement:
    Q = xi.parabolic
    fs = []
    for f, (X, k) in enumerate(zip(x.mats, xi.frames)):
        q = _reverse_block_cholesky(k.T @ X @ k, Q.block_slices(f))
        fs.append(k @ q)
    return GroupElement(Q.group, fs, check=False)


def project(v: ChamberBundlePoint) -> SymmetricSpacePoint:
    """p_Q(gM_Q) = gK."""
    return SymmetricSpacePoint.of(v.rep)


def trivialize(v: ChamberBundlePoint) -> tuple[SymmetricSpacePoint, BoundaryPoint]:
    return _trivialize(v.rep, v.parabolic)


def inverse_trivialize(x: SymmetricSpacePoint, xi: BoundaryPoint) -> ChamberBundlePoint:
    return ChamberBundlePoint(_inverse(x, xi), xi.parabolic, canonical=True)


def round_trip_error(g: GroupElement, Q: ParabolicData) -> float:
    """Residual of Phi^-1 Phi: the reconstructed g' must satisfy g^-1 g' in M_Q."""
    x, xi = _trivialize(g, Q)
    h = _inverse(x, xi)
    m = g.inverse() @ h
    err = 0.0
    for f, mm in enumerate(m.factors):
        off = mm - Q.block_diagonal_part(mm, f)
        err = max(err, float(np.max(np.abs(off))), float(np.max(np.abs(mm.T @ mm - np.eye(mm.shape[0])))))
    return err


# ---------------------------------------------------------------------------
# Weyl chamber flow and leaves


def chamber_flow(v: ChamberBundlePoint, a: GroupElement) -> ChamberBundlePoint:
    """g M_Q -> g a M_Q for a in A'_Q."""
    if not v.parabolic.in_A_prime(a, 1e-9):
        raise GroupError("flow element is not in A'_Q")
    return ChamberBundlePoint(v.rep @ a, v.parabolic)


def flow_element(Q: ParabolicData, t: float, direction: Sequence[Sequence[float]] | None = None) -> GroupElement:
    """exp(t H) for H in the Lie algebra of A'_Q; default H is the barycentric direction."""
    if direction is None:
        direction = []
        for f, b in enumerate(Q.blocks):
            k = len(b)
            direction.append([float(k - 1 - 2 * i) for i in range(k)] if k > 1 else [0.0])
    return Q.A_prime([[t * x for x in row] for row in direction])


def flow_drift(v: ChamberBundlePoint, times: Sequence[float], direction: Sequence[Sequence[float]] | None = None) -> float:
    """Max flag distance between the boundary component of Phi along the flow and at t = 0."""
    _, xi0 = trivialize(v)
    drift = 0.0
    for t in times:
        w = ChamberBundlePoint(v.rep @ flow_element(v.parabolic, t, direction), v.parabolic, canonical=True)
        _, xi = trivialize(w)
        drift = max(drift, xi.distance(xi0))
    return drift


def backward_flag(v: ChamberBundlePoint) -> BoundaryPoint:
    """The face opposite to v at its base point, as a point of G/Q^opp."""
    opp = opposite_flag(BoundaryPoint.base(v.parabolic))
    return flag_action(v.rep, opp)


def leaf_membership(v: ChamberBundlePoint, xi: BoundaryPoint, kind: str = "cs", tol: float = 1e-9) -> tuple[bool, float]:
    """Membership of v in W^cs(xi) (forward face equals xi) or W^cu(xi) (backward face equals xi)."""
    if kind == "cs":
        _, face = trivialize(v)
    elif kind == "cu":
        face = backward_flag(v)
    else:
        raise ValueError("kind must be 'cs' or 'cu'")
    if face.parabolic != xi.parabolic:
        raise GroupError("flag type does not match the leaf type")
    defect = face.distance(xi)
    return defect < tol, defect


def common_point(xi: BoundaryPoint, eta: BoundaryPoint, x: SymmetricSpacePoint | None = None) -> ChamberBundlePoint:
    """A point of W^cs(xi) cap W^cu(eta) for transverse xi, eta.

    Block i of the representative spans the intersection of the i-th
    subspace of xi with the complementary subspace of eta.
    """
    Q = xi.parabolic
    fs = []
    for f, (kx, ke) in enumerate(zip(xi.frames, eta.frames)):
        d = kx.shape[0]
        cols = np.zeros((d, d))
        # block i spans the intersection of the leading xi and eta subspaces of complementary size
        for s in Q.block_slices(f):
            cols[:, s] = _intersection(kx[:, : s.stop], ke[:, : d - s.start])
        if np.linalg.det(cols) < 0:
            cols[:, -1] = -cols[:, -1]
        cols /= abs(np.linalg.det(cols)) ** (1.0 / d)
        fs.append(cols)
    return ChamberBundlePoint(GroupElement(Q.group, fs, check=False), Q)


def _intersection(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    qa, _ = np.linalg.qr(a)
    qb, _ = np.linalg.qr(b)
    # vectors in span(a) that also lie in span(b): right singular vectors of (I - Pb) qa with zero singular value
    r = qa - qb @ (qb.T @ qa)
    _, s, vt = np.linalg.svd(r)
    k = a.shape[1] + b.shape[1] - a.shape[0]
    return qa @ vt[-k:].T if k > 0 else np.zeros((a.shape[0], 0))


# ---------------------------------------------------------------------------
# metric on G/M_Q and fibers


def _rotation_log_norm(r: np.ndarray) -> float:
    """||log r||_F for r in SO(n), via eigenvalue arguments."""
    ang = np.angle(np.linalg.eigvals(r))
    return float(math.sqrt(np.sum(ang**2)))


def _principal_angles(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    qa, _ = np.linalg.qr(a)
    qb, _ = np.linalg.qr(b)
    s = np.clip(np.linalg.svd(qa.T @ qb, compute_uv=False), -1.0, 1.0)
    return np.arccos(s)


def fiber_distance_K(k1: np.ndarray, k2: np.ndarray, blocks: Sequence[int]) -> float:
    """Distance between k1 M and k2 M in K/M with the quotient trace-form metric.

    Handled cases: one block (a point), two blocks (a Grassmannian, closed
    form through principal angles) and all blocks of size one (finite M).
    """
    d = k1.shape[0]
    if len(blocks) == 1:
        return 0.0
    if len(blocks) == 2:
        p = blocks[0]
        th = _principal_angles(k1[:, :p], k2[:, :p])
        return math.sqrt(2.0) * float(np.linalg.norm(th))
    if all(b == 1 for b in blocks):
        best = math.inf
        r = k1.T @ k2
        for signs in itertools.product((1.0, -1.0), repeat=d):
            if np.prod(signs) < 0:
                continue
            best = min(best, _rotation_log_norm(r * np.asarray(signs)))
        return best
    raise GroupError("fiber distance is implemented for one, two or all-singleton blocks")


def fiber_distance(v1: ChamberBundlePoint, v2: ChamberBundlePoint, tol: float = 1e-8) -> float:
    """Distance inside a common fiber g K / M_Q (left-invariant metric)."""
    if symmetric_distance(project(v1), project(v2)) > tol:
        raise GroupError("points lie in different fibers")
    k = v1.rep.inverse() @ v2.rep
    total = 0.0
    for f, m in enumerate(k.factors):
        u, _, vt = np.linalg.svd(m)
        total += fiber_distance_K(np.eye(m.shape[0]), u @ vt, v1.parabolic.blocks[f]) ** 2
    return math.sqrt(total)


def fiber_point(v: ChamberBundlePoint, k: GroupElement) -> ChamberBundlePoint:
    """g k M_Q, a point in the fiber through v = g M_Q."""
    return ChamberBundlePoint(v.rep @ k, v.parabolic)


def _mask(Q: ParabolicData, f: int, kind: str) -> np.ndarray:
    d = Q.group.dims[f]
    sl = Q.block_slices(f)
    m = np.zeros((d, d), dtype=bool)
    for i, si in enumerate(sl):
        for j, sj in enumerate(sl):
            if (kind == "diag" and i == j) or (kind == "upper" and i < j) or (kind == "off" and i != j):
                m[si, sj] = True
    return m


def fiber_directions(Q: ParabolicData, rng: np.random.Generator) -> list[np.ndarray]:
    """A random vector of T(K/M_Q) at eM_Q: skew, vanishing on the diagonal blocks."""
    out = []
    for f, d in enumerate(Q.group.dims):
        x = rng.standard_normal((d, d))
        x = x - x.T
        x[~_mask(Q, f, "off")] = 0.0
        out.append(x)
    return out


def section_directions(Q: ParabolicData, rng: np.random.Generator, part: str) -> list[np.ndarray]:
    """A random tangent vector of E_e = A_Q N_Q M_Q at e: 'A' (block symmetric, traceless) or 'N' (block upper)."""
    out = []
    for f, d in enumerate(Q.group.dims):
        x = rng.standard_normal((d, d))
        if part == "A":
            x = 0.5 * (x + x.T)
            x[~_mask(Q, f, "diag")] = 0.0
            x -= np.trace(x) / d * np.eye(d)
        elif part == "N":
            x[~_mask(Q, f, "upper")] = 0.0
        else:
            raise ValueError("part must be 'A' or 'N'")
        out.append(x)
    return out


def trace_inner(u: Sequence[np.ndarray], v: Sequence[np.ndarray]) -> float:
    return float(sum(np.sum(a * b) for a, b in zip(u, v)))


# ---------------------------------------------------------------------------
# parallel sets and the retraction


def parallel_set_point(Q: ParabolicData, a: GroupElement) -> SymmetricSpacePoint:
    """a o for a in A_Q."""
    if not Q.in_A(a, 1e-9):
        raise GroupError("element is not in A_Q")
    return SymmetricSpacePoint.of(a)


def in_parallel_set(Q: ParabolicData, x: SymmetricSpacePoint, tol: float = 1e-9) -> bool:
    return all(np.all(np.abs(m[_mask(Q, f, "off")]) < tol) for f, m in enumerate(x.mats))


def retraction(Q: ParabolicData, x: SymmetricSpacePoint) -> SymmetricSpacePoint:
    """retr(n a o) = a o: the block-diagonal factor of x = n D n^T."""
    out = []
    for f, m in enumerate(x.mats):
        _, D = reverse_block_ldl(m, Q.block_slices(f))
        out.append(D)
    return SymmetricSpacePoint(out)


def random_symmetric_point(dims: Sequence[int], rng: np.random.Generator, scale: float = 1.0) -> SymmetricSpacePoint:
    out = []
    for d in dims:
        x = scale * rng.standard_normal((d, d))
        x = 0.5 * (x + x.T)
        x -= np.trace(x) / d * np.eye(d)
        w, u = np.linalg.eigh(x)
        out.append((u * np.exp(w)) @ u.T)
    return SymmetricSpacePoint(out)


def retraction_nonexpansion(Q: ParabolicData, pairs: int, rng: np.random.Generator, scale: float = 1.0) -> tuple[int, float]:
    """(violations, worst ratio) of d(retr x, retr y) <= d(x, y) over random pairs."""
    dims = Q.group.dims
    bad, worst = 0, 0.0
    for _ in range(pairs):
        x = random_symmetric_point(dims, rng, scale)
        y = random_symmetric_point(dims, rng, scale)
        dxy = symmetric_distance(x, y)
        dr = symmetric_distance(retraction(Q, x), retraction(Q, y))
        ratio = dr / dxy if dxy > 0 else 0.0
        worst = max(worst, ratio)
        if dr > dxy * (1 + 1e-12) + 1e-12:
            bad += 1
    return bad, worst


@dataclass(frozen=True)
class ParallelSetSample:
    points: tuple[SymmetricSpacePoint, ...]
    retractions: tuple[SymmetricSpacePoint, ...]
    # max distance of retr(x) from x over the sample; zero on the parallel set
    fix_defect: float
    # max distance of retr(n o) from o over sampled n in N_Q
    fiber_defect: float


def parallel_set_sample(Q: ParabolicData, grid: Sequence[float], rng: np.random.Generator) -> ParallelSetSample:
    """Points exp(t H) o of A_Q o for t on the grid and a random unit H in Lie(A_Q), with retraction checks."""
    if len(grid) == 0:
        raise ValueError("grid is empty")
    dims = Q.group.dims
    hs = []
    for f, d in enumerate(dims):
        x = rng.standard_normal((d, d))
        x = 0.5 * (x + x.T)
        x[_mask(Q, f, "off")] = 0.0
        x -= np.trace(x) / d * np.eye(d)
        hs.append(x)
    nrm = math.sqrt(trace_inner(hs, hs)) or 1.0
    pts, rets, fix = [], [], 0.0
    for t in grid:
        mats = []
        for h in hs:
            w, u = np.linalg.eigh(2.0 * t * h / nrm)
            mats.append((u * np.exp(w)) @ u.T)
        x = SymmetricSpacePoint(mats)
        r = retraction(Q, x)
        pts.append(x)
        rets.append(r)
        fix = max(fix, symmetric_distance(x, r))
    o = SymmetricSpacePoint.base(dims)
    fib = 0.0
    for _ in range(len(grid)):
        n = Q.random_N(rng)
        fib = max(fib, symmetric_distance(retraction(Q, SymmetricSpacePoint.of(n)), o))
    return ParallelSetSample(tuple(pts), tuple(rets), fix, fib)


def flow_orbit_csv(v: ChamberBundlePoint, times: Sequence[float], direction: Sequence[Sequence[float]] | None = None) -> str:
    """CSV rows t, base SPD entries..., fiber-defect (flag drift from t = 0)."""
    _, xi0 = trivialize(v)
    lines = []
    for t in times:
        w = ChamberBundlePoint(v.rep @ flow_element(v.parabolic, t, direction), v.parabolic, canonical=True)
        x, xi = trivialize(w)
        coords = [f"{c:.12g}" for m in x.mats for c in m.reshape(-1)]
        if not lines:
            lines.append(",".join(["t"] + [f"x{i}" for i in range(len(coords))] + ["fiber_defect"]))
        lines.append(",".join([f"{t:.12g}"] + coords + [f"{xi.distance(xi0):.3e}"]))
    return "\n".join(lines) + "\n"
