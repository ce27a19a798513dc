"""LLL reduction and integer-relation search for the numeric density path."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from math import gcd
from typing import Optional

import numpy as np

from odk._accel import maybe_njit, pick
from odk.errors import BadTolerance, DegenerateBasis, DimensionMismatch, ValidationError

log = logging.getLogger(__name__)

DEFAULT_SCALE = 1e12
DEFAULT_DELTA = 0.99
DEFAULT_RESIDUAL_TOL = 1e-9
RANK_RTOL = 1e-9
SWEEP_MAX_HEIGHT = 100
SWEEP_MAX_P = 3
COMBO_MAX = 6
CHANCE_LEVEL = 1e-3
LLL_MAX_ITER = 200_000


@dataclass(frozen=True)
class LatticeBasis:
    """Lattice spanned by the columns of ``columns`` (shape dim x m)."""

    columns: np.ndarray
    delta: float = 0.75
    transform: Optional[np.ndarray] = None  # integer m x m, new = old @ transform

    def __post_init__(self):
        cols = np.array(self.columns, dtype=float, ndmin=2)
        object.__setattr__(self, "columns", cols)
        if not 0.25 < self.delta < 1:
            raise ValidationError(f"delta must lie in (1/4, 1), got {self.delta}")
        if cols.shape[1] > cols.shape[0] or numeric_rank(cols, 1e-12) < cols.shape[1]:
            raise DegenerateBasis("basis columns are linearly dependent")

    @property
    def gram_determinant(self) -> float:
        return float(np.linalg.det(self.columns.T @ self.columns))


@dataclass(frozen=True)
class IntegerRelation:
    s: tuple
    residual: float
    height: int = field(init=False)

    def __post_init__(self):
        s = tuple(int(v) for v in self.s)
        if not any(s):
            raise ValidationError("integer relation must be nonzero")
        g = 0
        for v in s:
            g = gcd(g, v)
        if g != 1:
            raise ValidationError(f"relation {s} is not primitive")
        if next(v for v in s if v) < 0:
            raise ValidationError(f"relation {s} does not have canonical sign")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "height", max(abs(v) for v in s))

    def to_json(self) -> dict:
        return {"s": list(self.s), "residual": self.residual, "height": self.height}

    @classmethod
    def from_json(cls, data: dict) -> "IntegerRelation":
        return cls(tuple(data["s"]), float(data["residual"]))


@dataclass(frozen=True)
class RelationSearch:
    """Outcome of :func:`find_integer_relation`.

    ``relation`` is None when nothing passed the residual and height gates.
    ``swept_height`` is the height up to which every integer vector was
    checked by enumeration (0 when no sweep ran); ``exhaustive`` is true when
    that covers the whole requested height bound.
    """

    relation: Optional[IntegerRelation]
    rank: int
    exhaustive: bool
    swept_height: int
    method: str
    closest_residual: float
    kernel: np.ndarray


def numeric_rank(m: np.ndarray, rtol: float = RANK_RTOL) -> int:
    m = np.asarray(m)
    if m.size == 0:
        return 0
    sv = np.linalg.svd(m, compute_uv=False)
    if sv[0] == 0:
        return 0
    return int(np.sum(sv > rtol * sv[0]))


def canonical_sign(s):
    s = [int(v) for v in s]
    g = 0
    for v in s:
        g = gcd(g, v)
    if g == 0:
        return tuple(s)
    s = [v // g for v in s]
    lead = next(v for v in s if v)
    return tuple(-v for v in s) if lead < 0 else tuple(s)


def significance_tol(height, rank, kdim, residual_tol, chance=CHANCE_LEVEL) -> float:
    """Largest residual at which a height-``height`` candidate still counts as a relation.

    Integer vectors of height <= h map under N^T to about (2h+1)^rank points per
    unit volume of R^kdim, so a ball of radius eps catches a chance hit with
    expected count (2h+1)^rank * eps^kdim.  Candidates are accepted only below
    the radius where that count is ``chance``, and never above residual_tol.
    """
    if kdim == 0:
        return residual_tol
    chance_eps = (chance / (2.0 * height + 1.0) ** rank) ** (1.0 / kdim)
    return min(residual_tol, chance_eps)


def relation_key(s) -> tuple:
    """Order on relations: shorter first, then lexicographically larger first."""
    return (sum(v * v for v in s), tuple(-v for v in s))


# -- LLL ---------------------------------------------------------------------

def _gram_schmidt(B, Bs, mu, bnorm):
    m = B.shape[0]
    for i in range(m):
        for c in range(B.shape[1]):
            Bs[i, c] = B[i, c]
        for j in range(i):
            if bnorm[j] > 0.0:
                dot = 0.0
                for c in range(B.shape[1]):
                    dot += B[i, c] * Bs[j, c]
                mu[i, j] = dot / bnorm[j]
            else:
                mu[i, j] = 0.0
            for c in range(B.shape[1]):
                Bs[i, c] -= mu[i, j] * Bs[j, c]
        acc = 0.0
        for c in range(B.shape[1]):
            acc += Bs[i, c] * Bs[i, c]
        bnorm[i] = acc


def _lll_core(B0, delta, max_iter):
    """LLL on the rows of ``B0``.  Returns (reduced rows, integer transform, status).

    Gram-Schmidt is floating point; the transform is kept in exact int64 and
    every updated row is rebuilt from it, so the output rows are integer
    combinations of the input rows up to float rounding of one dot product.
    status: 0 ok, 1 degenerate, 2 iteration cap.
    """
    m = B0.shape[0]
    dim = B0.shape[1]
    U = np.zeros((m, m), dtype=np.int64)
    for i in range(m):
        U[i, i] = 1
    B = B0.copy()
    Bs = np.zeros((m, dim))
    mu = np.zeros((m, m))
    bnorm = np.zeros(m)
    _gram_schmidt(B, Bs, mu, bnorm)
    scale = 0.0
    for i in range(m):
        if bnorm[i] > scale:
            scale = bnorm[i]
    for i in range(m):
        if bnorm[i] <= 1e-30 * scale:
            return B, U, 1
    k = 1
    it = 0
    while k < m:
        it += 1
        if it > max_iter:
            return B, U, 2
        for j in range(k - 1, -1, -1):
            q = np.floor(mu[k, j] + 0.5)
            if q != 0.0:
                qi = np.int64(q)
                for c in range(m):
                    U[k, c] -= qi * U[j, c]
                for c in range(dim):
                    acc = 0.0
                    for t in range(m):
                        acc += U[k, t] * B0[t, c]
                    B[k, c] = acc
                for t in range(j):
                    mu[k, t] -= q * mu[j, t]
                mu[k, j] -= q
        if bnorm[k] >= (delta - mu[k, k - 1] ** 2) * bnorm[k - 1]:
            k += 1
        else:
            for c in range(dim):
                tmp = B[k, c]
                B[k, c] = B[k - 1, c]
                B[k - 1, c] = tmp
            for c in range(m):
                tmpi = U[k, c]
                U[k, c] = U[k - 1, c]
                U[k - 1, c] = tmpi
            _gram_schmidt(B, Bs, mu, bnorm)
            for i in range(m):
                if bnorm[i] <= 1e-30 * scale:
                    return B, U, 1
            k = max(k - 1, 1)
    return B, U, 0


_gram_schmidt = maybe_njit(_gram_schmidt)
lll_rows = maybe_njit(_lll_core)


def lll_reduce(basis: LatticeBasis) -> LatticeBasis:
    """LLL-reduce a column basis.  The result carries the integer transform."""
    rows = np.ascontiguousarray(basis.columns.T)
    reduced, U, status = lll_rows(rows, float(basis.delta), LLL_MAX_ITER)
    if status == 1:
        raise DegenerateBasis("linear dependence detected during reduction")
    if status == 2:
        log.warning("LLL hit the iteration cap; output may not be fully reduced")
    transform = U.T.copy()
    return LatticeBasis(basis.columns @ transform, basis.delta, transform)


def is_lll_reduced(columns: np.ndarray, delta: float, tol: float = 1e-9) -> bool:
    """Check size reduction and the Lovasz condition (independent recomputation)."""
    B = np.asarray(columns, dtype=float).T
    Q, R = np.linalg.qr(B.T)
    m = B.shape[0]
    diag = np.diag(R)
    for i in range(m):
        for j in range(i):
            if abs(R[j, i] / diag[j]) > 0.5 + tol:
                return False
    for k in range(1, m):
        lhs = diag[k] ** 2 + R[k - 1, k] ** 2
        if lhs < (delta - tol) * diag[k - 1] ** 2:
            return False
    return True


# -- exhaustive sweep kernel --------------------------------------------------

def _sweep_numba(NT, H, tol, rank, chance):
    p = NT.shape[1]
    kdim = NT.shape[0]
    side = 2 * H + 1
    total = side ** p
    best = np.zeros(p, dtype=np.int64)
    s = np.zeros(p, dtype=np.int64)
    best_n2 = -1
    closest = np.inf
    kd = float(kdim)
    tol2 = tol * tol
    for idx in range(total):
        rem = idx
        for i in range(p - 1, -1, -1):
            s[i] = rem % side - H
            rem //= side
        lead = 0
        for i in range(p):
            if s[i] != 0:
                lead = s[i]
                break
        if lead <= 0:
            continue
        r2 = 0.0
        for a in range(kdim):
            acc = 0.0
            for i in range(p):
                acc += NT[a, i] * s[i]
            r2 += acc * acc
        if r2 < closest:
            closest = r2
        if r2 > tol2:
            continue
        h = 0
        for i in range(p):
            if abs(s[i]) > h:
                h = abs(s[i])
        t = (chance / (2.0 * h + 1.0) ** rank) ** (1.0 / kd)
        if t > tol:
            t = tol
        if r2 <= t * t:
            n2 = 0
            for i in range(p):
                n2 += s[i] * s[i]
            better = best_n2 < 0 or n2 < best_n2
            if not better and n2 == best_n2:
                for i in range(p):
                    if s[i] != best[i]:
                        better = s[i] > best[i]
                        break
            if better:
                best_n2 = n2
                for i in range(p):
                    best[i] = s[i]
    return best, best_n2 >= 0, np.sqrt(closest)


def _sweep_numpy(NT, H, tol, rank, chance):
    p = NT.shape[1]
    rng = np.arange(-H, H + 1, dtype=np.int64)
    best = None
    closest = np.inf
    tail = np.stack(np.meshgrid(*([rng] * (p - 1)), indexing="ij"), -1).reshape(-1, p - 1) \
        if p > 1 else np.zeros((1, 0), dtype=np.int64)
    for first in rng:
        S = np.concatenate([np.full((tail.shape[0], 1), first, dtype=np.int64), tail], axis=1)
        nz = S != 0
        has = nz.any(axis=1)
        lead = S[np.arange(S.shape[0]), np.argmax(nz, axis=1)]
        S = S[has & (lead > 0)]
        if S.size == 0:
            continue
        r = np.linalg.norm(S @ NT.T, axis=1)
        closest = min(closest, float(r.min()))
        h = np.abs(S).max(axis=1)
        t = np.minimum(tol, (chance / (2.0 * h + 1.0) ** rank) ** (1.0 / NT.shape[0]))
        ok = S[r <= t]
        if ok.size:
            n2 = (ok * ok).sum(axis=1)
            cand = ok[n2 == n2.min()]
            # lexicographically largest
            order = np.lexsort(cand.T[::-1])
            top = cand[order[-1]]
            if best is None or relation_key(top) < relation_key(best):
                best = top
    if best is None:
        return np.zeros(p, dtype=np.int64), False, closest
    return best.astype(np.int64), True, closest


sweep_relations = pick(maybe_njit(_sweep_numba), _sweep_numpy)


# -- relation search -----------------------------------------------------------

def _progressive_sweep(NT, limit, residual_tol, rank):
    """Sweep boxes of growing height; stop once a relation bounds the optimum.

    A relation of squared norm q rules out better candidates of height
    above sqrt(q), so one final sweep to that height settles the minimum.
    Returns (best, found, closest residual, height swept).
    """
    H = 1
    closest = np.inf
    while True:
        best, found, near = sweep_relations(NT, H, residual_tol, rank, CHANCE_LEVEL)
        closest = min(closest, float(near))
        if found:
            bound = int(np.floor(np.sqrt(float(np.dot(best, best)))))
            if bound > H:
                best, found, near = sweep_relations(NT, bound, residual_tol, rank, CHANCE_LEVEL)
                closest = min(closest, float(near))
            return tuple(int(v) for v in best), True, closest, max(H, bound)
        if H >= limit:
            return None, False, closest, H
        H = min(2 * H, limit)


def kernel_basis(X: np.ndarray, rtol: float = RANK_RTOL) -> tuple[int, np.ndarray]:
    """Numeric rank and an orthonormal kernel basis (p x (p - rank))."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    p = X.shape[1]
    _, sv, vt = np.linalg.svd(X, full_matrices=True)
    r = 0 if sv.size == 0 or sv[0] == 0 else int(np.sum(sv > rtol * sv[0]))
    return r, vt[r:].T.copy() if r < p else np.zeros((p, 0))


def relation_residual(N: np.ndarray, s) -> float:
    return float(np.linalg.norm(np.asarray(N).T @ np.asarray(s, dtype=float)))


def find_integer_relation(
    X,
    height_bound: int,
    scale: float = DEFAULT_SCALE,
    residual_tol: float = DEFAULT_RESIDUAL_TOL,
    delta: float = DEFAULT_DELTA,
) -> RelationSearch:
    """Search for a nonzero integer vector in (or within tolerance of) the row space of X.

    The residual of s is the norm of its projection onto ker(X); a candidate
    must beat both ``residual_tol`` and :func:`significance_tol` for its
    height.  For p <= 3 every vector up to height min(height_bound, 100) is
    enumerated; beyond that the lattice {(s, scale * N^T s)} is LLL-reduced
    and its short vectors (and their small combinations) are scanned.  Among
    valid candidates the shortest wins, ties going to the lexicographically
    largest canonical vector.
    """
    if residual_tol <= 0:
        raise BadTolerance("residual_tol must be positive")
    if scale <= 0:
        raise BadTolerance("scale must be positive")
    if height_bound < 1:
        raise BadTolerance("height_bound must be >= 1")
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] < 1:
        raise DimensionMismatch(f"expected a d x p matrix, got shape {X.shape}")
    p = X.shape[1]
    r, N = kernel_basis(X)
    kdim = N.shape[1]

    def accept(s) -> bool:
        h = max(abs(v) for v in s)
        if not any(s) or h > height_bound:
            return False
        return relation_residual(N, s) <= significance_tol(h, r, kdim, residual_tol)

    if N.shape[1] == 0:
        # row space is all of R^p
        s = (1,) + (0,) * (p - 1)
        return RelationSearch(IntegerRelation(s, 0.0), r, True, height_bound, "full-rank", 0.0, N)

    NT = np.ascontiguousarray(N.T)
    candidates: list[tuple] = []
    closest = np.inf
    swept = 0
    method = "lll"
    if p <= SWEEP_MAX_P:
        limit = min(height_bound, SWEEP_MAX_HEIGHT)
        best, found, near, swept = _progressive_sweep(NT, limit, residual_tol, r)
        closest = min(closest, near)
        if found:
            candidates.append(best)
            # the winner cannot be beaten by anything outside its norm ball
            swept = height_bound
        method = "sweep" if swept == height_bound else "sweep+lll"

    if swept < height_bound:
        rows = np.hstack([np.eye(p), scale * N])
        _, U, status = lll_rows(rows, float(delta), LLL_MAX_ITER)
        if status == 2:
            log.warning("LLL hit the iteration cap during relation search")
        short = []
        for row in U:
            s = canonical_sign(row)
            if not any(s) or max(abs(v) for v in s) > height_bound:
                continue
            closest = min(closest, relation_residual(N, s))
            if accept(s):
                short.append(s)
        short = sorted(set(short), key=relation_key)[:COMBO_MAX]
        for coeffs in itertools.product((-1, 0, 1), repeat=len(short)):
            if not any(coeffs):
                continue
            s = canonical_sign(np.asarray(coeffs) @ np.asarray(short, dtype=np.int64))
            if accept(s):
                candidates.append(s)

    if not candidates:
        return RelationSearch(None, r, swept == height_bound, swept, method, closest, N)
    s = min(candidates, key=relation_key)
    rel = IntegerRelation(s, relation_residual(N, s))
    return RelationSearch(rel, r, swept == height_bound, swept, method, closest, N)
