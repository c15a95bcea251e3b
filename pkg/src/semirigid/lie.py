"""Matrix groups SL(n), PSL(2) and PSL(2) x PSL(2): decompositions, parabolics, flags.

Conventions
-----------
* Group elements are tuples of square factors. Projective factors are kept in
  a canonical sign (first entry of magnitude > 1e-14 positive).
* Simple roots are numbered 1, 2, ... across factors; for a factor of size n
  they are the consecutive gaps between coordinates i and i+1. A parabolic
  ``ParabolicData(group, theta)`` has a block boundary at every gap listed in
  ``theta``: ``theta`` = all roots gives the minimal parabolic (upper
  triangular), ``theta`` = {} gives the whole group. For SL(3) the parabolic
  with blocks (2, 1) is ``theta = {2}`` and the one with blocks (1, 2) is
  ``theta = {1}``.
* Iwasawa decompositions read g = k a n with n upper unipotent, via QR with
  positive diagonal; upper-triangular inputs with positive diagonal are fixed
  points (k = I).
* Boundary points are flags: the nested spans of the leading column blocks of
  an orthogonal matrix, stored in a canonical representative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Iterable, Sequence

import numpy as np

from .manifold import sym

FLAG_TOL = 1e-9


class GroupError(ValueError):
    pass


@dataclass(frozen=True)
class Group:
    dims: tuple[int, ...]
    projective: bool
    name: str

    @property
    def n_roots(self) -> int:
        return sum(d - 1 for d in self.dims)

    def root_offsets(self) -> list[int]:
        out, acc = [], 0
        for d in self.dims:
            out.append(acc)
            acc += d - 1
        return out


def SL(n: int) -> Group:
    return Group((int(n),), False, f"SL({n})")


PSL2 = Group((2,), True, "PSL(2)")
PSL2xPSL2 = Group((2, 2), True, "PSL(2)xPSL(2)")


def group_from_name(name: str) -> Group:
    name = name.replace(" ", "")
    if name in ("PSL(2)", "PSL2"):
        return PSL2
    if name in ("PSL(2)xPSL(2)", "PSL2xPSL2", "PSL2^2"):
        return PSL2xPSL2
    if name.startswith("SL(") and name.endswith(")"):
        return SL(int(name[3:-1]))
    if name.startswith("SL") and name[2:].isdigit():
        return SL(int(name[2:]))
    raise GroupError(f"unknown group {name!r}")


def _canonical_sign(m: np.ndarray) -> np.ndarray:
    flat = m.reshape(-1)
    idx = np.flatnonzero(np.abs(flat) > 1e-14)
    if idx.size and flat[idx[0]] < 0:
        return -m
    return m


@dataclass(frozen=True, eq=False)
class GroupElement:
    group: Group
    factors: tuple[np.ndarray, ...]

    def __init__(self, group: Group, factors: Iterable[np.ndarray], check: bool = True):
        fs = tuple(np.array(f, dtype=float) for f in factors)
        if len(fs) != len(group.dims) or any(f.shape != (d, d) for f, d in zip(fs, group.dims)):
            raise GroupError(f"factor shapes do not match {group.name}")
        if check:
            for f in fs:
                det = float(np.linalg.det(f))
                if group.projective:
                    ok = abs(abs(det) - 1) < 1e-8 and (det > 0 or f.shape[0] % 2 == 1)
                else:
                    ok = abs(det - 1) < 1e-8
                if not ok:
                    raise GroupError(f"determinant {det:.6g} is not 1")
        if group.projective:
            fs = tuple(_canonical_sign(f) for f in fs)
        object.__setattr__(self, "group", group)
        object.__setattr__(self, "factors", fs)

    @classmethod
    def identity(cls, group: Group) -> "GroupElement":
        return cls(group, [np.eye(d) for d in group.dims])

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        if other.group != self.group:
            raise GroupError("group mismatch")
        return GroupElement(self.group, [a @ b for a, b in zip(self.factors, other.factors)], check=False)

    def inverse(self) -> "GroupElement":
        return GroupElement(self.group, [np.linalg.inv(f) for f in self.factors], check=False)

    def distance(self, other: "GroupElement") -> float:
        """Entrywise max distance (projective sign already canonical)."""
        return max(float(np.max(np.abs(a - b))) for a, b in zip(self.factors, other.factors))

    def to_json(self) -> dict[str, Any]:
        return {"group": self.group.name, "factors": [[float(x) for x in f.reshape(-1)] for f in self.factors]}

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "GroupElement":
        g = group_from_name(obj["group"])
        return cls(g, [np.asarray(f, dtype=float).reshape(d, d) for f, d in zip(obj["factors"], g.dims)])


def random_orthogonal(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed element of SO(d)."""
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def random_element(group: Group, rng: np.random.Generator, scale: float = 1.0) -> GroupElement:
    """k1 exp(H) k2 with Haar k1, k2 and a centered Gaussian Cartan part of std `scale`."""
    fs = []
    for d in group.dims:
        h = scale * rng.standard_normal(d)
        h -= h.mean()
        fs.append((random_orthogonal(d, rng) * np.exp(h)) @ random_orthogonal(d, rng))
    return GroupElement(group, fs)


def diag_element(group: Group, diagonals: Sequence[Sequence[float]]) -> GroupElement:
    return GroupElement(group, [np.diag(np.asarray(d, dtype=float)) for d in diagonals])


# ---------------------------------------------------------------------------
# parabolic data


@dataclass(frozen=True)
class ParabolicData:
    group: Group
    theta: frozenset[int]

    def __init__(self, group: Group, theta: Iterable[int]):
        t = frozenset(int(x) for x in theta)
        if any(x < 1 or x > group.n_roots for x in t):
            raise GroupError(f"simple roots of {group.name} are 1..{group.n_roots}")
        object.__setattr__(self, "group", group)
        object.__setattr__(self, "theta", t)

    @classmethod
    def minimal(cls, group: Group) -> "ParabolicData":
        return cls(group, range(1, group.n_roots + 1))

    @cached_property
    def blocks(self) -> tuple[tuple[int, ...], ...]:
        out = []
        for d, off in zip(self.group.dims, self.group.root_offsets()):
            sizes, start = [], 0
            for i in range(1, d):
                if off + i in self.theta:
                    sizes.append(i - start)
                    start = i
            sizes.append(d - start)
            out.append(tuple(sizes))
        return tuple(out)

    def block_slices(self, f: int) -> list[slice]:
        out, s = [], 0
        for b in self.blocks[f]:
            out.append(slice(s, s + b))
            s += b
        return out

    def to_json(self) -> dict[str, Any]:
        return {"group": self.group.name, "theta": sorted(self.theta), "blocks": [list(b) for b in self.blocks]}

    # -- block patterns ----------------------------------------------------------
    def _below_mask(self, f: int) -> np.ndarray:
        d = self.group.dims[f]
        mask = np.zeros((d, d), dtype=bool)
        sl = self.block_slices(f)
        for i, si in enumerate(sl):
            for j, sj in enumerate(sl):
                if i > j:
                    mask[si, sj] = True
        return mask

    def _offdiag_mask(self, f: int) -> np.ndarray:
        d = self.group.dims[f]
        mask = np.ones((d, d), dtype=bool)
        for s in self.block_slices(f):
            mask[s, s] = False
        return mask

    def block_diagonal_part(self, m: np.ndarray, f: int) -> np.ndarray:
        out = np.zeros_like(m)
        for s in self.block_slices(f):
            out[s, s] = m[s, s]
        return out

    def project_to_pattern(self, g: GroupElement) -> list[np.ndarray]:
        """Zero the entries below the block diagonal (the P_theta pattern)."""
        return [np.where(self._below_mask(f), 0.0, m) for f, m in enumerate(g.factors)]

    # -- membership ------------------------------------------------------------------
    def in_Q(self, g: GroupElement, tol: float = 1e-10) -> bool:
        return all(np.all(np.abs(m[self._below_mask(f)]) < tol) for f, m in enumerate(g.factors))

    def in_Z(self, g: GroupElement, tol: float = 1e-10) -> bool:
        return all(np.all(np.abs(m[self._offdiag_mask(f)]) < tol) for f, m in enumerate(g.factors))

    def in_N(self, g: GroupElement, tol: float = 1e-10) -> bool:
        if not self.in_Q(g, tol):
            return False
        for f, m in enumerate(g.factors):
            for s in self.block_slices(f):
                b = m[s, s]
                if not (np.allclose(b, np.eye(b.shape[0]), atol=tol) or (self.group.projective and np.allclose(b, -np.eye(b.shape[0]), atol=tol))):
                    return False
        return True

    def in_M(self, g: GroupElement, tol: float = 1e-10) -> bool:
        if not self.in_Z(g, tol):
            return False
        return all(np.allclose(m.T @ m, np.eye(m.shape[0]), atol=tol) for m in g.factors)

    def in_A(self, g: GroupElement, tol: float = 1e-10) -> bool:
        """Block-diagonal symmetric positive definite with determinant 1."""
        if not self.in_Z(g, tol):
            return False
        for m in g.factors:
            if not np.allclose(m, m.T, atol=tol):
                return False
            if np.linalg.eigvalsh(sym(m))[0] <= 0:
                return False
        return True

    def in_A_prime(self, g: GroupElement, tol: float = 1e-10) -> bool:
        """Diagonal, positive, constant on each block."""
        if not self.in_A(g, tol):
            return False
        for f, m in enumerate(g.factors):
            for s in self.block_slices(f):
                b = m[s, s]
                if not np.allclose(b, b[0, 0] * np.eye(b.shape[0]), atol=tol):
                    return False
        return True

    # -- samplers -------------------------------------------------------------------------
    def random_M(self, rng: np.random.Generator) -> GroupElement:
        fs = []
        for f, d in enumerate(self.group.dims):
            m = np.zeros((d, d))
            for s in self.block_slices(f):
                k = s.stop - s.start
                q, r = np.linalg.qr(rng.standard_normal((k, k)))
                m[s, s] = q * np.sign(np.diag(r))
            if np.linalg.det(m) < 0:
                m[:, -1] = -m[:, -1]
            fs.append(m)
        return GroupElement(self.group, fs)

    def random_A(self, rng: np.random.Generator, scale: float = 1.0) -> GroupElement:
        fs = []
        for f, d in enumerate(self.group.dims):
            x = np.zeros((d, d))
            for s in self.block_slices(f):
                k = s.stop - s.start
                y = scale * rng.standard_normal((k, k))
                x[s, s] = 0.5 * (y + y.T)
            x -= np.trace(x) / d * np.eye(d)
            w, u = np.linalg.eigh(x)
            fs.append((u * np.exp(w)) @ u.T)
        return GroupElement(self.group, fs)

    def random_N(self, rng: np.random.Generator, scale: float = 1.0) -> GroupElement:
        fs = []
        for f, d in enumerate(self.group.dims):
            m = np.eye(d)
            sl = self.block_slices(f)
            for i, si in enumerate(sl):
                for j, sj in enumerate(sl):
                    if i < j:
                        m[si, sj] = scale * rng.standard_normal((si.stop - si.start, sj.stop - sj.start))
            fs.append(m)
        return GroupElement(self.group, fs)

    def A_prime(self, t: Sequence[Sequence[float]]) -> GroupElement:
        """exp of the block-scalar diagonal with per-block exponents t[f][b] (trace projected out)."""
        fs = []
        for f, d in enumerate(self.group.dims):
            vals = np.concatenate([np.full(b, float(x)) for b, x in zip(self.blocks[f], t[f])])
            vals -= vals.mean()
            fs.append(np.diag(np.exp(vals)))
        return GroupElement(self.group, fs)


# ---------------------------------------------------------------------------
# decompositions


def _qr_positive(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    q, r = np.linalg.qr(g)
    s = np.sign(np.diag(r))
    s[s == 0] = 1.0
    return q * s, s[:, None] * r


def iwasawa(g: GroupElement) -> tuple[GroupElement, GroupElement, GroupElement]:
    """g = k a n: k orthogonal, a positive diagonal, n unit upper triangular."""
    ks, as_, ns = [], [], []
    for m in g.factors:
        q, r = _qr_positive(m)
        d = np.diag(r)
        ks.append(q)
        as_.append(np.diag(d))
        ns.append(r / d[:, None])
    G = g.group
    return GroupElement(G, ks, check=False), GroupElement(G, as_, check=False), GroupElement(G, ns, check=False)


def _polar(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """m = u p with u orthogonal and p symmetric positive definite."""
    w, s, vt = np.linalg.svd(m)
    u = w @ vt
    p = (vt.T * s) @ vt
    return u, sym(p)


def generalized_iwasawa(g: GroupElement, Q: ParabolicData) -> tuple[GroupElement, GroupElement, GroupElement]:
    """g = k a_Q n_Q with a_Q block SPD and n_Q block unipotent upper triangular."""
    k0, a0, n0 = iwasawa(g)
    ks, as_, ns = [], [], []
    for f, (k, a, n) in enumerate(zip(k0.factors, a0.factors, n0.factors)):
        b = a @ n
        L = Q.block_diagonal_part(b, f)
        u, p = _polar(L)
        ks.append(k @ u)
        as_.append(p)
        ns.append(np.linalg.solve(L, b))
    G = g.group
    return GroupElement(G, ks, check=False), GroupElement(G, as_, check=False), GroupElement(G, ns, check=False)


def cartan(g: GroupElement) -> tuple[GroupElement, list[np.ndarray], GroupElement]:
    """g = k1 exp(H) k2 with H diagonal, entries decreasing."""
    k1s, hs, k2s = [], [], []
    for m in g.factors:
        u, s, vt = np.linalg.svd(m)
        if np.linalg.det(u) < 0:
            u[:, -1] = -u[:, -1]
            vt[-1, :] = -vt[-1, :]
        k1s.append(u)
        hs.append(np.diag(np.log(s)))
        k2s.append(vt)
    G = g.group
    return GroupElement(G, k1s, check=False), hs, GroupElement(G, k2s, check=False)


def q_factorization(q: GroupElement, Q: ParabolicData, order: str = "MAN") -> tuple[GroupElement, GroupElement, GroupElement]:
    """Factor q in Q as m a n (order 'MAN') or n a m (order 'NAM')."""
    if not Q.in_Q(q, 1e-8):
        raise GroupError("element is not in the parabolic")
    xs, ys, zs = [], [], []
    for f, m in enumerate(q.factors):
        z = Q.block_diagonal_part(m, f)
        if order == "MAN":
            u, p = _polar(z)
            xs.append(u)
            ys.append(p)
            zs.append(np.linalg.solve(z, m))
        elif order == "NAM":
            # z = p u with p SPD (left polar)
            u, p_right = _polar(z)
            p = sym(u @ p_right @ u.T)
            xs.append(m @ np.linalg.inv(z))
            ys.append(p)
            zs.append(u)
        else:
            raise GroupError("order must be 'MAN' or 'NAM'")
    G = q.group
    return GroupElement(G, xs, check=False), GroupElement(G, ys, check=False), GroupElement(G, zs, check=False)


# ---------------------------------------------------------------------------
# flags


@dataclass(frozen=True, eq=False)
class BoundaryPoint:
    """A point of G/Q: per factor, an orthogonal matrix whose leading column
    blocks span the nested subspaces of the flag (canonical representative)."""

    parabolic: ParabolicData
    frames: tuple[np.ndarray, ...]

    def __init__(self, parabolic: ParabolicData, frames: Iterable[np.ndarray], canonical: bool = False):
        fs = tuple(np.array(f, dtype=float) for f in frames)
        if not canonical:
            fs = tuple(_canonical_frame(f, parabolic, i) for i, f in enumerate(fs))
        object.__setattr__(self, "parabolic", parabolic)
        object.__setattr__(self, "frames", fs)

    @classmethod
    def base(cls, Q: ParabolicData) -> "BoundaryPoint":
        return cls(Q, [np.eye(d) for d in Q.group.dims])

    def projectors(self) -> list[np.ndarray]:
        out = []
        for f, k in enumerate(self.frames):
            stop = 0
            for s in self.parabolic.block_slices(f)[:-1]:
                stop = s.stop
                c = k[:, :stop]
                out.append(c @ c.T)
        return out

    def distance(self, other: "BoundaryPoint") -> float:
        """Max spectral distance between the projectors onto the nested subspaces."""
        if other.parabolic != self.parabolic:
            raise GroupError("flag types differ")
        pa, pb = self.projectors(), other.projectors()
        return max((float(np.linalg.norm(a - b, 2)) for a, b in zip(pa, pb)), default=0.0)

    def equals(self, other: "BoundaryPoint", tol: float = FLAG_TOL) -> bool:
        return self.distance(other) < tol

    def as_element(self) -> GroupElement:
        return GroupElement(self.parabolic.group, self.frames, check=False)

    def angles(self) -> list[float]:
        """Circle-at-infinity angles of the PSL(2) factors whose flag is a line."""
        out = []
        for f, k in enumerate(self.frames):
            if self.parabolic.blocks[f] == (1, 1):
                out.append(float(np.mod(2 * math.atan2(k[1, 0], k[0, 0]), 2 * math.pi)))
        return out

    @classmethod
    def from_angles(cls, Q: ParabolicData, angles: Sequence[float]) -> "BoundaryPoint":
        frames, it = [], iter(angles)
        for f, d in enumerate(Q.group.dims):
            if Q.blocks[f] == (1, 1):
                phi = 0.5 * float(next(it))
                c, s = math.cos(phi), math.sin(phi)
                frames.append(np.array([[c, -s], [s, c]]))
            else:
                frames.append(np.eye(d))
        return cls(Q, frames)

    def to_json(self) -> dict[str, Any]:
        return {"parabolic": self.parabolic.to_json(), "frames": [[float(x) for x in f.reshape(-1)] for f in self.frames]}


def _canonical_frame(k: np.ndarray, Q: ParabolicData, f: int) -> np.ndarray:
    """Canonical representative of k M_Q: each block rotated as close as possible
    to the matching identity columns, last column flipped to restore det +1."""
    d = k.shape[0]
    out = np.empty_like(k)
    for s in Q.block_slices(f):
        kb = k[:, s]
        e = np.eye(d)[:, s]
        u, _, vt = np.linalg.svd(kb.T @ e)
        out[:, s] = kb @ (u @ vt)
    if np.linalg.det(out) < 0:
        out[:, -1] = -out[:, -1]
    return out


def flag_of(g: GroupElement, Q: ParabolicData) -> BoundaryPoint:
    """gQ as a flag: the k-part of g = k a n read modulo M_Q."""
    k, _, _ = iwasawa(g)
    return BoundaryPoint(Q, k.factors)


def flag_action(g: GroupElement, xi: BoundaryPoint) -> BoundaryPoint:
    if g.group != xi.parabolic.group:
        raise GroupError("group and flag types differ")
    return flag_of(g @ xi.as_element(), xi.parabolic)


def opposite_flag(xi: BoundaryPoint) -> BoundaryPoint:
    """The face opposite to xi at the base point o: columns taken in reverse order.

    The reversed columns define a flag of the reversed block type; for the
    symmetric block types used here (PSL(2) factors, SL(n) minimal) this is the
    same type. For an asymmetric type the opposite lives in G/Q^opp and a
    ParabolicData with reversed blocks is returned.
    """
    Q = xi.parabolic
    frames = [k[:, ::-1].copy() for k in xi.frames]
    theta = set()
    for f, d in enumerate(Q.group.dims):
        off = Q.group.root_offsets()[f]
        for i in range(1, d):
            if off + i in Q.theta:
                theta.add(off + d - i)
    Qopp = ParabolicData(Q.group, theta)
    for idx, k in enumerate(frames):
        if np.linalg.det(k) < 0:
            k[:, -1] = -k[:, -1]
    return BoundaryPoint(Qopp, frames)


# ---------------------------------------------------------------------------
# PSL(2) boundary action and cocycle


def circle_action(m: np.ndarray, theta: np.ndarray | float) -> np.ndarray:
    """Action of a 2x2 matrix on the circle at infinity in angle coordinates.

    The angle theta corresponds to the line at angle theta/2; the image is
    2 * angle(m v(theta/2)) reduced to [0, 2 pi).
    """
    th = np.asarray(theta, dtype=float)
    c, s = np.cos(th / 2), np.sin(th / 2)
    x = m[0, 0] * c + m[0, 1] * s
    y = m[1, 0] * c + m[1, 1] * s
    return np.mod(2 * np.arctan2(y, x), 2 * math.pi)


def circle_derivative(m: np.ndarray, theta: np.ndarray | float) -> np.ndarray:
    """d(theta')/d(theta) = det(m) / |m v(theta/2)|^2."""
    th = np.asarray(theta, dtype=float)
    c, s = np.cos(th / 2), np.sin(th / 2)
    x = m[0, 0] * c + m[0, 1] * s
    y = m[1, 0] * c + m[1, 1] * s
    return np.linalg.det(m) / (x * x + y * y)


def cocycle(g: GroupElement, angles: Sequence[float] | float) -> float:
    """Jacobian of the boundary action at x with respect to the round measure.

    For PSL(2) x PSL(2) it is the product of the factor Jacobians. It satisfies
    c(gh, x) = c(g, h x) c(h, x).
    """
    if g.group not in (PSL2, PSL2xPSL2):
        raise GroupError("the cocycle is implemented for PSL(2) and PSL(2) x PSL(2)")
    angs = np.atleast_1d(np.asarray(angles, dtype=float))
    if angs.size != len(g.factors):
        raise GroupError("one angle per factor is required")
    return float(np.prod([circle_derivative(m, a) for m, a in zip(g.factors, angs)]))


def act_angles(g: GroupElement, angles: Sequence[float] | float) -> np.ndarray:
    angs = np.atleast_1d(np.asarray(angles, dtype=float))
    return np.array([float(circle_action(m, a)) for m, a in zip(g.factors, angs)])


def rotation(phi: float) -> np.ndarray:
    c, s = math.cos(phi), math.sin(phi)
    return np.array([[c, -s], [s, c]])
