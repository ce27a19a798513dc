"""Somewhere-dense and dense orbit certificates for abelian subgroups of GL(n, C).

For a point x != 0 the orbit G(x) has nonempty interior in its closure iff
some f_1..f_{2n+1} in exp^{-1}(G) have f_{2n+1} in the real span of the
first 2n and Z f_1(x) + ... + Z f_{2n+1}(x) dense in C^n.  For abelian
linear groups a somewhere dense orbit is dense.  The search here runs over
a finite pool, so failing to find a tuple refutes nothing.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from odk import __version__
from odk import lattice_tools as lt
from odk.density import (
    DensityVerdict,
    GeneratorFamily,
    Outcome,
    complex_to_real_embedding,
    decide_density_numeric,
)
from odk.errors import (
    DimensionMismatch,
    FlagRequired,
    NoClaim,
    ValidationError,
    WrongTupleLength,
)
from odk.matrix_group import (
    CommutingGroup,
    LogCandidate,
    build_log_pool,
    candidate_residual,
    DEFAULT_POOL_CAP,
)

log = logging.getLogger(__name__)

INDEPENDENCE_RTOL = 1e-8
DEPENDENCE_TOL = 1e-8
DEFAULT_CERT_HEIGHT = 1_000_000
DEFAULT_MAX_BASES = 16

SOMEWHERE_DENSE = "SOMEWHERE_DENSE"
DENSE = "DENSE"
NONE = "NONE"


def _matrix(c) -> np.ndarray:
    return np.asarray(c.matrix if isinstance(c, LogCandidate) else c, dtype=complex)


def _flat(c) -> np.ndarray:
    m = _matrix(c).ravel()
    return np.concatenate([m.real, m.imag])


def _point(x, n: Optional[int] = None) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=complex))
    if x.ndim != 1:
        raise DimensionMismatch("the point must be a vector")
    if n is not None and x.shape[0] != n:
        raise DimensionMismatch(f"point has {x.shape[0]} coordinates, expected {n}")
    if not np.any(x):
        raise ValidationError("the point must be nonzero")
    return x


def _embed(v: np.ndarray) -> np.ndarray:
    return np.concatenate([v.real, v.imag])


def evaluate_candidates(candidates: Sequence, x) -> GeneratorFamily:
    """Complex family with generators B_k x."""
    x = np.atleast_1d(np.asarray(x, dtype=complex))
    values = []
    for c in candidates:
        B = _matrix(c)
        if B.shape != (x.shape[0], x.shape[0]):
            raise DimensionMismatch(f"matrix of shape {B.shape} cannot act on a point of length {x.shape[0]}")
        values.append(B @ x)
    return GeneratorFamily.complex_float(values)


def spanning_test(pool: Sequence, x) -> Optional[list]:
    """Greedily pick 2n pool elements whose values at x are R-independent.

    Returns the witnesses, or None when the pool's values do not span R^{2n}.
    """
    x = np.atleast_1d(np.asarray(x, dtype=complex))
    target = 2 * x.shape[0]
    chosen, cols = [], []
    for c in pool:
        v = _embed(_matrix(c) @ x)
        if not np.any(v):
            continue
        trial = np.column_stack(cols + [v])
        if lt.numeric_rank(trial, INDEPENDENCE_RTOL) == len(cols) + 1:
            chosen.append(c)
            cols.append(v)
            if len(chosen) == target:
                return chosen
    return None


@dataclass(frozen=True)
class PropertyDReport:
    ok: bool
    stage: str  # "independence", "membership", "density" or "passed"
    independence_rank: int
    alphas: tuple = ()
    dependence_residual: float = float("nan")
    verdict: Optional[DensityVerdict] = None


def check_property_D(candidates: Sequence, x, height_bound: int = DEFAULT_CERT_HEIGHT,
                     tol: float = DEPENDENCE_TOL) -> PropertyDReport:
    x = np.atleast_1d(np.asarray(x, dtype=complex))
    n = x.shape[0]
    if len(candidates) != 2 * n + 1:
        raise WrongTupleLength(f"need 2n+1 = {2 * n + 1} candidates, got {len(candidates)}")
    F = np.column_stack([_flat(c) for c in candidates[:-1]])
    rank = lt.numeric_rank(F, INDEPENDENCE_RTOL)
    if rank < 2 * n:
        return PropertyDReport(False, "independence", rank)
    target = _flat(candidates[-1])
    alphas, *_ = np.linalg.lstsq(F, target, rcond=None)
    residual = float(np.linalg.norm(F @ alphas - target))
    if residual > tol:
        return PropertyDReport(False, "membership", rank, tuple(alphas), residual)
    family = complex_to_real_embedding(evaluate_candidates(candidates, x))
    verdict = decide_density_numeric(family, height_bound)
    # rank [Re; Im; s] must reach 2n + 1 for every s, i.e. the embedded family is dense
    ok = verdict.is_dense and family.dim + 1 == 2 * n + 1
    return PropertyDReport(ok, "passed" if ok else "density", rank, tuple(float(a) for a in alphas),
                           residual, verdict)


def evaluated_family_dense(candidates: Sequence, x, height_bound: int = DEFAULT_CERT_HEIGHT,
                 tol: float = DEPENDENCE_TOL) -> bool:
    """Span membership plus density of the evaluated subgroup, computed on its own path."""
    x = np.atleast_1d(np.asarray(x, dtype=complex))
    basis = np.column_stack([_flat(c) for c in candidates[:-1]])
    Q, R = np.linalg.qr(basis)
    if np.abs(np.diag(R)).min() <= INDEPENDENCE_RTOL * np.abs(np.diag(R)).max():
        return False
    last = _flat(candidates[-1])
    if np.linalg.norm(last - Q @ (Q.T @ last)) > tol:
        return False
    values = [_matrix(c) @ x for c in candidates]
    fam = GeneratorFamily.real_float([_embed(v) for v in values])
    return decide_density_numeric(fam, height_bound).classification == "dense"


@dataclass(frozen=True)
class TupleCheck:
    indices: tuple
    property_d: bool
    evaluated: bool

    @property
    def consistent(self) -> bool:
        return self.property_d == self.evaluated


@dataclass(frozen=True)
class OrbitCertificate:
    x: np.ndarray
    candidates: tuple
    alphas: tuple
    dependence_residual: float
    verdict: DensityVerdict
    claim: str
    config: dict
    group: Optional[CommutingGroup] = None
    examined: tuple = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        if self.claim not in (SOMEWHERE_DENSE, DENSE, NONE):
            raise ValidationError(f"unknown claim {self.claim!r}")
        if self.claim != NONE and not self.verdict.is_dense:
            raise ValidationError("a density claim needs a dense verdict")

    @property
    def found(self) -> bool:
        return True

    def to_json(self) -> dict:
        return {
            "x": [[z.real, z.imag] for z in self.x],
            "tuple": [c.to_json() for c in self.candidates],
            "alpha": list(self.alphas),
            "dependence_residual": self.dependence_residual,
            "verdict": self.verdict.to_json(),
            "claim": self.claim,
            "config": dict(self.config),
            "group": self.group.to_json() if self.group is not None else None,
            "tool_version": __version__,
        }

    @classmethod
    def from_json(cls, data: dict) -> "OrbitCertificate":
        x = np.array([complex(*z) for z in data["x"]])
        cands = tuple(
            LogCandidate(np.array([[complex(*z) for z in row] for row in c["matrix"]]),
                         tuple(c["m"]), tuple(c["k"]), float(c["residual"]))
            for c in data["tuple"]
        )
        group = CommutingGroup.from_json(data["group"]) if data.get("group") else None
        return cls(x, cands, tuple(float(a) for a in data["alpha"]), float(data["dependence_residual"]),
                   DensityVerdict.from_json(data["verdict"]), data["claim"], dict(data["config"]), group)


@dataclass(frozen=True)
class NotFound:
    """No tuple in the finite pool passed.  This does not certify non-density."""

    reason: str
    config: dict
    pool_size: int
    examined: tuple = field(default=(), repr=False)

    @property
    def found(self) -> bool:
        return False

    def to_json(self) -> dict:
        return {
            "claim": "NOT_FOUND",
            "reason": self.reason,
            "refutes_density": False,
            "pool_size": self.pool_size,
            "config": dict(self.config),
            "tool_version": __version__,
        }


def _greedy_base(values: np.ndarray, count: int) -> Optional[list[int]]:
    """Pick ``count`` columns maximizing the smallest singular value at each step."""
    norms = np.linalg.norm(values, axis=0)
    usable = [i for i in range(values.shape[1]) if norms[i] > 0]
    unit = values / np.where(norms > 0, norms, 1.0)
    chosen: list[int] = []
    for _ in range(count):
        best, best_margin = None, INDEPENDENCE_RTOL
        for i in usable:
            if i in chosen:
                continue
            margin = np.linalg.svd(unit[:, chosen + [i]], compute_uv=False)[-1]
            if margin > best_margin * (1 + 1e-9):
                best, best_margin = i, margin
        if best is None:
            return None
        chosen.append(best)
    return chosen


def certify_somewhere_dense(
    group: CommutingGroup,
    x,
    shift_range: int = 1,
    word_range: int = 1,
    seed: int = 0,
    height_bound: int = DEFAULT_CERT_HEIGHT,
    cap: int = DEFAULT_POOL_CAP,
    max_bases: int = DEFAULT_MAX_BASES,
):
    """Search the log pool for a tuple with property D(x).

    Base f_1..f_2n: greedy by singular-value margin on the values at x; then
    every remaining pool element is tried as f_{2n+1} in pool order.  If the
    greedy base yields nothing, up to ``max_bases`` further independent bases
    are tried in lexicographic index order.  Returns an OrbitCertificate with
    claim SOMEWHERE_DENSE, or NotFound.
    """
    x = _point(x, group.n)
    n = group.n
    config = {
        "shift_range": shift_range,
        "word_range": word_range,
        "seed": seed,
        "height_bound": height_bound,
        "pool_cap": cap,
        "max_bases": max_bases,
        "independence_rtol": INDEPENDENCE_RTOL,
        "dependence_tol": DEPENDENCE_TOL,
        "residual_tol": lt.DEFAULT_RESIDUAL_TOL,
        "scale": lt.DEFAULT_SCALE,
    }
    pool = build_log_pool(group, shift_range, word_range, cap=cap, seed=seed)
    values = np.column_stack([_embed(c.matrix @ x) for c in pool])
    examined: list[TupleCheck] = []

    if spanning_test(pool, x) is None:
        return NotFound("pool values at x do not span C^n over R", config, len(pool), ())

    bases = []
    greedy = _greedy_base(values, 2 * n)
    if greedy is not None:
        bases.append(greedy)
    for combo in itertools.combinations(range(len(pool)), 2 * n):
        if len(bases) >= max_bases + 1:
            break
        if list(combo) in bases:
            continue
        if lt.numeric_rank(values[:, combo], INDEPENDENCE_RTOL) == 2 * n:
            bases.append(list(combo))

    for base in bases:
        for j in range(len(pool)):
            if j in base:
                continue
            idx = tuple(base) + (j,)
            cands = [pool[i] for i in idx]
            report = check_property_D(cands, x, height_bound)
            evaluated = evaluated_family_dense(cands, x, height_bound)
            examined.append(TupleCheck(idx, report.ok, evaluated))
            if report.ok != evaluated:
                log.warning("property D and the evaluated-family path disagree on tuple %s", idx)
            if report.ok:
                return OrbitCertificate(x, tuple(cands), report.alphas, report.dependence_residual,
                                        report.verdict, SOMEWHERE_DENSE, config, group, tuple(examined))
    return NotFound(f"no tuple among {len(bases)} bases passed", config, len(pool), tuple(examined))


def upgrade_to_dense(cert: OrbitCertificate, group_is_linear_abelian: bool) -> OrbitCertificate:
    """Somewhere dense implies dense for orbits of abelian subgroups of GL(n, C)."""
    if cert.claim == NONE:
        raise NoClaim("certificate carries no density claim")
    if not group_is_linear_abelian:
        raise FlagRequired("upgrade holds only for abelian subgroups of GL(n, C)")
    if cert.claim == DENSE:
        return cert
    return replace(cert, claim=DENSE)


@dataclass(frozen=True)
class VerificationReport:
    ok: bool
    problems: tuple


def verify_certificate(data: dict) -> VerificationReport:
    """Re-check a serialized certificate from scratch."""
    problems = []
    try:
        cert = OrbitCertificate.from_json(data)
    except Exception as exc:  # malformed or internally inconsistent
        return VerificationReport(False, (f"certificate does not load: {exc}",))
    n = cert.x.shape[0]
    if len(cert.candidates) != 2 * n + 1:
        return VerificationReport(False, ("tuple length is not 2n+1",))

    if cert.group is not None:
        for i, c in enumerate(cert.candidates):
            res = candidate_residual(c.matrix, cert.group.word(c.m))
            if res > 1e-8:
                problems.append(f"candidate {i}: exp(B) misses its group word by {res:.3e}")

    F = np.column_stack([_flat(c) for c in cert.candidates[:-1]])
    if lt.numeric_rank(F, INDEPENDENCE_RTOL) != 2 * n:
        problems.append("f_1..f_2n are not independent")
    if len(cert.alphas) != 2 * n:
        problems.append("wrong number of alpha coefficients")
    else:
        dep = float(np.linalg.norm(F @ np.asarray(cert.alphas) - _flat(cert.candidates[-1])))
        if dep > DEPENDENCE_TOL:
            problems.append(f"dependence residual {dep:.3e} exceeds {DEPENDENCE_TOL}")

    stored = cert.verdict
    fam = complex_to_real_embedding(evaluate_candidates(cert.candidates, cert.x))
    tol = stored.tolerances
    fresh = decide_density_numeric(
        fam,
        stored.height_bound or DEFAULT_CERT_HEIGHT,
        tol.get("scale", lt.DEFAULT_SCALE),
        tol.get("residual_tol", lt.DEFAULT_RESIDUAL_TOL),
    )
    if fresh.outcome != stored.outcome:
        problems.append(f"verdict outcome {stored.outcome.value} not reproduced ({fresh.outcome.value})")
    fresh_s = fresh.relation.s if fresh.relation else None
    stored_s = stored.relation.s if stored.relation else None
    if fresh_s != stored_s:
        problems.append(f"relation {stored_s} not reproduced ({fresh_s})")
    if cert.claim in (SOMEWHERE_DENSE, DENSE) and not fresh.is_dense:
        problems.append("density claim without a dense verdict")
    return VerificationReport(not problems, tuple(problems))
