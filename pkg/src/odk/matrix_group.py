"""Abelian subgroups of GL(n, C) given by commuting diagonalizable generators.

Provides matrix exp/log, the common spectral projectors of the family and
a finite pool of elements of exp^{-1}(G): integer combinations of the
generator logs plus 2*pi*i multiples of the projectors.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from odk.errors import (
    ClusteringAmbiguous,
    ExpOverflow,
    NonDiagonalizable,
    ParseError,
    PoolTooLarge,
    SingularMatrix,
    SizeMismatch,
    ValidationError,
)

TWO_PI_I = 2j * np.pi
COND_MAX = 1e8
INVERTIBLE_RTOL = 1e-9
CLUSTER_TOL = 1e-8
CANDIDATE_RESIDUAL_TOL = 1e-8
DEDUP_TOL = 1e-10
EXP_NORM_MAX = 700.0  # exp(709) is the float64 limit
DEFAULT_POOL_CAP = 4096


@dataclass(frozen=True)
class AbelianReport:
    ok: bool
    worst_pair: Optional[tuple]
    worst_norm: float


def check_abelian(gens: Sequence, tol: float = 1e-10) -> AbelianReport:
    mats = [np.asarray(g, dtype=complex) for g in gens]
    if any(m.ndim != 2 or m.shape[0] != m.shape[1] for m in mats):
        raise SizeMismatch("generators must be square matrices")
    if len({m.shape for m in mats}) > 1:
        raise SizeMismatch("generators have different sizes")
    worst, pair = 0.0, None
    for i, j in itertools.combinations(range(len(mats)), 2):
        c = np.linalg.norm(mats[i] @ mats[j] - mats[j] @ mats[i])
        if pair is None or c > worst:
            worst, pair = float(c), (i, j)
    return AbelianReport(worst <= tol, pair, worst)


@dataclass(frozen=True)
class CommutingGroup:
    generators: tuple
    comm_tol: float = 1e-10

    def __post_init__(self):
        mats = tuple(np.array(g, dtype=complex, ndmin=2) for g in self.generators)
        if not mats:
            raise ValidationError("a group needs at least one generator")
        report = check_abelian(mats, self.comm_tol)
        if not report.ok:
            raise ValidationError(
                f"generators {report.worst_pair} do not commute "
                f"(|[A, B]| = {report.worst_norm:.3e} > {self.comm_tol})"
            )
        for idx, m in enumerate(mats):
            sv = np.linalg.svd(m, compute_uv=False)
            if sv[-1] <= INVERTIBLE_RTOL * sv[0]:
                raise SingularMatrix(f"generator {idx} is not invertible")
            _, vecs = np.linalg.eig(m)
            if np.linalg.cond(vecs) > COND_MAX:
                raise NonDiagonalizable(f"generator {idx} is not diagonalizable to working tolerance")
        for m in mats:
            m.setflags(write=False)
        object.__setattr__(self, "generators", mats)

    @property
    def n(self) -> int:
        return self.generators[0].shape[0]

    @property
    def q(self) -> int:
        return len(self.generators)

    def word(self, exponents: Sequence[int]) -> np.ndarray:
        """prod_i A_i^{m_i}."""
        out = np.eye(self.n, dtype=complex)
        for A, m in zip(self.generators, exponents):
            out = out @ np.linalg.matrix_power(A, int(m))
        return out

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "generators": [[[[z.real, z.imag] for z in row] for row in A] for A in self.generators],
            "comm_tol": self.comm_tol,
        }

    @classmethod
    def from_json(cls, data: dict) -> "CommutingGroup":
        try:
            n = int(data["n"])
            gens = [np.array([[complex(*_pair(z)) for z in row] for row in A]) for A in data["generators"]]
        except (KeyError, TypeError) as exc:
            raise ParseError(f"malformed group JSON: {exc}") from exc
        if any(A.shape != (n, n) for A in gens):
            raise ParseError(f"every generator must be {n}x{n}")
        return cls(tuple(gens), float(data.get("comm_tol", 1e-10)))


def _pair(z):
    if isinstance(z, (int, float)):
        return (z, 0.0)
    if not isinstance(z, list) or len(z) != 2:
        raise ParseError(f"complex entries are [re, im] pairs, got {z!r}")
    return tuple(z)


def matrix_exp(B) -> np.ndarray:
    B = np.asarray(B, dtype=complex)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise SizeMismatch("matrix_exp needs a square matrix")
    # overflow is governed by the largest real part of the spectrum, not by |B|
    abscissa = float(np.linalg.eigvals(B).real.max())
    if abscissa > EXP_NORM_MAX:
        raise ExpOverflow(f"spectral abscissa {abscissa:.3e} exceeds {EXP_NORM_MAX}")
    out = scipy.linalg.expm(B)
    if not np.all(np.isfinite(out)):
        raise ExpOverflow("matrix exponential overflowed")
    return out


def principal_log(A) -> np.ndarray:
    """log A = S log(D) S^-1 with eigenvalue arguments in (-pi, pi].

    Eigenvalues on the negative real axis (to relative 1e-12) take argument +pi.
    """
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise SizeMismatch("principal_log needs a square matrix")
    sv = np.linalg.svd(A, compute_uv=False)
    if sv[-1] <= INVERTIBLE_RTOL * sv[0]:
        raise SingularMatrix("matrix is singular")
    lam, S = np.linalg.eig(A)
    if np.linalg.cond(S) > COND_MAX:
        raise NonDiagonalizable("eigenvector matrix condition exceeds 1e8")
    logs = np.log(lam)
    on_cut = (lam.real < 0) & (np.abs(lam.imag) <= 1e-12 * np.abs(lam))
    logs[on_cut] = np.log(np.abs(lam[on_cut])) + 1j * np.pi
    return S @ np.diag(logs) @ np.linalg.inv(S)


def spectral_projectors(group: CommutingGroup, seed: int = 0) -> list[np.ndarray]:
    """Projectors onto the joint eigenspaces, sorted by joint eigenvalue tuple."""
    rng = np.random.default_rng(seed)
    coeffs = rng.uniform(0.5, 1.5, size=group.q)
    C = sum(c * A for c, A in zip(coeffs, group.generators))
    _, V = np.linalg.eig(C)
    if np.linalg.cond(V) > COND_MAX:
        raise NonDiagonalizable("random combination is not diagonalizable to working tolerance")
    W = np.linalg.inv(V)
    joint = np.array([[(W @ A @ V)[j, j] for A in group.generators] for j in range(group.n)])
    scale = max(1.0, float(np.abs(joint).max()))
    tol = CLUSTER_TOL * scale

    clusters: list[list[int]] = []
    for j in range(group.n):
        for cl in clusters:
            if np.abs(joint[j] - joint[cl[0]]).max() <= tol:
                cl.append(j)
                break
        else:
            clusters.append([j])
    for a, b in itertools.combinations(range(group.n), 2):
        dist = np.abs(joint[a] - joint[b]).max()
        if tol < dist <= 10 * tol:
            raise ClusteringAmbiguous(
                f"joint eigenvalues {a}, {b} are {dist:.2e} apart (tolerance {tol:.2e}); retry with another seed"
            )

    def sort_key(cl):
        t = joint[cl[0]]
        return tuple(itertools.chain.from_iterable((round(z.real, 6), round(z.imag, 6)) for z in t))

    projectors = []
    for cl in sorted(clusters, key=sort_key):
        P = V[:, cl] @ W[cl, :]
        projectors.append(P)
    return projectors


@dataclass(frozen=True)
class LogCandidate:
    """B = sum_i m_i log A_i + 2 pi i sum_j k_j P_j with exp(B) = prod A_i^{m_i}."""

    matrix: np.ndarray
    m: tuple
    k: tuple
    residual: float

    def __post_init__(self):
        if not self.residual <= CANDIDATE_RESIDUAL_TOL:
            raise ValidationError(f"candidate residual {self.residual:.3e} exceeds {CANDIDATE_RESIDUAL_TOL}")

    @property
    def provenance(self) -> dict:
        return {"m": list(self.m), "k": list(self.k)}

    def to_json(self) -> dict:
        return {
            "m": list(self.m),
            "k": list(self.k),
            "residual": self.residual,
            "matrix": [[[z.real, z.imag] for z in row] for row in self.matrix],
        }


def candidate_residual(B: np.ndarray, target: np.ndarray) -> float:
    """Frobenius distance between exp(B) and the group word, relative to max(1, |word|)."""
    E = matrix_exp(B)
    return float(np.linalg.norm(E - target) / max(1.0, np.linalg.norm(target)))


def _pool_key(mk: tuple, q: int) -> tuple:
    m, k = mk[:q], mk[q:]
    return (sum(abs(v) for v in m), sum(abs(v) for v in k), tuple(-v for v in mk))


def pool_indices(q: int, r: int, word_range: int, shift_range: int) -> list[tuple]:
    """All (m, k) exponent tuples in canonical order: by (|m|_1, |k|_1), positives first."""
    ranges = [range(-word_range, word_range + 1)] * q + [range(-shift_range, shift_range + 1)] * r
    return sorted(itertools.product(*ranges), key=lambda mk: _pool_key(mk, q))


def build_log_pool(
    group: CommutingGroup,
    shift_range: int = 1,
    word_range: int = 1,
    cap: int = DEFAULT_POOL_CAP,
    truncate: bool = True,
    seed: int = 0,
) -> list[LogCandidate]:
    if shift_range < 1 or word_range < 1:
        raise ValidationError("shift_range and word_range must be >= 1")
    logs = [principal_log(A) for A in group.generators]
    projectors = spectral_projectors(group, seed)
    q, r = group.q, len(projectors)
    size = (2 * word_range + 1) ** q * (2 * shift_range + 1) ** r
    if size > cap and not truncate:
        raise PoolTooLarge(f"pool of {size} candidates exceeds cap {cap}")
    pool: list[LogCandidate] = []
    for mk in pool_indices(q, r, word_range, shift_range):
        if len(pool) >= cap:
            break
        m, k = mk[:q], mk[q:]
        B = sum((mi * L for mi, L in zip(m, logs)), np.zeros((group.n, group.n), dtype=complex))
        B = B + TWO_PI_I * sum((kj * P for kj, P in zip(k, projectors)),
                               np.zeros((group.n, group.n), dtype=complex))
        if any(np.linalg.norm(B - c.matrix) < DEDUP_TOL for c in pool):
            continue
        res = candidate_residual(B, group.word(m))
        if res > CANDIDATE_RESIDUAL_TOL:
            continue
        pool.append(LogCandidate(B, tuple(int(v) for v in m), tuple(int(v) for v in k), res))
    return pool
