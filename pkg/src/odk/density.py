"""Density of H = Z x_1 + ... + Z x_p in R^d (or C^n through its real embedding).

H is dense iff for every nonzero integer s the matrix X (columns x_j)
stacked over the row s has rank d + 1, i.e. X has rank d and no nonzero
integer vector lies in its row space.  Exact mode decides this completely
over a number field; float mode searches for a violating s with LLL.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from odk import lattice_tools as lt
from odk.errors import (
    DimensionMismatch,
    ParseError,
    ValidationError,
    WrongCardinality,
    ZeroRelation,
)
from odk.lattice_tools import IntegerRelation
from odk.number_field import (
    NumberField,
    exact_rank,
    format_rational,
    parse_rational,
    primitive_integer_vector,
    rational_nullspace,
    rref,
)

DEFAULT_HEIGHT = 10_000
RANK_GRAY_RTOL = 1e-7


class Outcome(str, enum.Enum):
    CERTIFIED_DENSE = "CERTIFIED_DENSE"
    NOT_DENSE = "NOT_DENSE"
    NOT_DENSE_NUMERIC = "NOT_DENSE_NUMERIC"
    DENSE_UP_TO_HEIGHT = "DENSE_UP_TO_HEIGHT"
    UNKNOWN = "UNKNOWN"


DENSE_OUTCOMES = (Outcome.CERTIFIED_DENSE, Outcome.DENSE_UP_TO_HEIGHT)
NOT_DENSE_OUTCOMES = (Outcome.NOT_DENSE, Outcome.NOT_DENSE_NUMERIC)


# -- families ------------------------------------------------------------------

@dataclass(frozen=True)
class GeneratorFamily:
    """Generators x_1..x_p of an additive subgroup.

    Coordinates by (ambient, mode): real/float -> float, complex/float ->
    complex, real/exact -> FieldElement, complex/exact -> (re, im) pair of
    FieldElements.  ``dim`` is d for real ambient and n for complex.
    """

    ambient: str
    dim: int
    mode: str
    generators: tuple
    field: Optional[NumberField] = None

    def __post_init__(self):
        if self.ambient not in ("real", "complex"):
            raise ValidationError(f"ambient must be 'real' or 'complex', got {self.ambient!r}")
        if self.mode not in ("exact", "float"):
            raise ValidationError(f"mode must be 'exact' or 'float', got {self.mode!r}")
        if self.dim < 1:
            raise ValidationError("ambient dimension must be >= 1")
        gens = tuple(tuple(g) for g in self.generators)
        if not gens:
            raise ValidationError("a family needs at least one generator")
        for j, g in enumerate(gens):
            if len(g) != self.dim:
                raise DimensionMismatch(f"generator {j} has {len(g)} coordinates, expected {self.dim}")
        if self.mode == "exact":
            fld = self.field or NumberField.rationals()
            lifted = []
            for g in gens:
                if self.ambient == "real":
                    lifted.append(tuple(fld.coerce(c) for c in g))
                else:
                    lifted.append(tuple((fld.coerce(c[0]), fld.coerce(c[1])) for c in g))
            object.__setattr__(self, "field", fld)
            gens = tuple(lifted)
        else:
            if self.field is not None:
                raise ValidationError("float families carry no number field")
            conv = float if self.ambient == "real" else complex
            gens = tuple(tuple(conv(c) for c in g) for g in gens)
        object.__setattr__(self, "generators", gens)

    # constructors
    @classmethod
    def real_float(cls, vectors) -> "GeneratorFamily":
        vecs = [np.atleast_1d(np.asarray(v, dtype=float)) for v in vectors]
        return cls("real", len(vecs[0]), "float", tuple(tuple(v) for v in vecs))

    @classmethod
    def complex_float(cls, vectors) -> "GeneratorFamily":
        vecs = [np.atleast_1d(np.asarray(v, dtype=complex)) for v in vectors]
        return cls("complex", len(vecs[0]), "float", tuple(tuple(v) for v in vecs))

    @classmethod
    def real_exact(cls, fld: NumberField, vectors) -> "GeneratorFamily":
        vecs = [v if isinstance(v, (list, tuple)) else [v] for v in vectors]
        return cls("real", len(vecs[0]), "exact", tuple(tuple(v) for v in vecs), fld)

    @classmethod
    def complex_exact(cls, fld: NumberField, vectors) -> "GeneratorFamily":
        """``vectors``: per generator, a list of (re, im) coordinate pairs."""
        return cls("complex", len(vectors[0]), "exact", tuple(tuple(v) for v in vectors), fld)

    @property
    def p(self) -> int:
        return len(self.generators)

    @property
    def real_dim(self) -> int:
        return self.dim if self.ambient == "real" else 2 * self.dim

    def real(self) -> "GeneratorFamily":
        return self if self.ambient == "real" else complex_to_real_embedding(self)

    def matrix(self):
        """d x p generator matrix of the real embedding (ndarray or nested lists)."""
        fam = self.real()
        if fam.mode == "float":
            return np.array(fam.generators, dtype=float).reshape(fam.p, fam.dim).T
        return [[g[i] for g in fam.generators] for i in range(fam.dim)]

    def to_float(self) -> "GeneratorFamily":
        if self.mode == "float":
            return self
        if self.ambient == "real":
            gens = tuple(tuple(c.to_float() for c in g) for g in self.generators)
        else:
            gens = tuple(tuple(complex(re.to_float(), im.to_float()) for re, im in g)
                         for g in self.generators)
        return GeneratorFamily(self.ambient, self.dim, "float", gens)

    def transformed(self, M) -> "GeneratorFamily":
        """Generators x'_j = sum_i M[i][j] x_i for a p x p' integer (or rational) matrix."""
        M = [[parse_rational(int(v)) if not isinstance(v, Fraction) else v for v in row] for row in M]
        if len(M) != self.p:
            raise DimensionMismatch("transform rows must match the number of generators")
        cols = len(M[0])
        if self.mode == "float":
            G = np.array(self.generators)
            Mf = np.array([[float(v) for v in row] for row in M])
            new = (Mf.T @ G)
            return GeneratorFamily(self.ambient, self.dim, "float", tuple(tuple(r) for r in new))
        zero = self.field.zero()
        new = []
        for j in range(cols):
            coords = []
            for c in range(self.dim):
                if self.ambient == "real":
                    acc = zero
                    for i in range(self.p):
                        if M[i][j]:
                            acc = acc + self.generators[i][c] * M[i][j]
                    coords.append(acc)
                else:
                    re = im = zero
                    for i in range(self.p):
                        if M[i][j]:
                            re = re + self.generators[i][c][0] * M[i][j]
                            im = im + self.generators[i][c][1] * M[i][j]
                    coords.append((re, im))
            new.append(tuple(coords))
        return GeneratorFamily(self.ambient, self.dim, "exact", tuple(new), self.field)

    def linear_image(self, T) -> "GeneratorFamily":
        """Apply a rational d x d map to every generator of a real exact family."""
        if self.ambient != "real" or self.mode != "exact":
            raise ValidationError("linear_image is defined for real exact families")
        T = [[parse_rational(v) for v in row] for row in T]
        zero = self.field.zero()
        new = []
        for g in self.generators:
            row = []
            for i in range(self.dim):
                acc = zero
                for k in range(self.dim):
                    if T[i][k]:
                        acc = acc + g[k] * T[i][k]
                row.append(acc)
            new.append(tuple(row))
        return GeneratorFamily("real", self.dim, "exact", tuple(new), self.field)

    # serialization
    def to_json(self) -> dict:
        out = {"ambient": self.ambient, "dim": self.dim, "mode": self.mode}
        if self.mode == "exact":
            out["field"] = self.field.to_json()
            if self.ambient == "real":
                out["generators"] = [[c.to_json() for c in g] for g in self.generators]
            else:
                out["generators"] = [[[re.to_json(), im.to_json()] for re, im in g]
                                     for g in self.generators]
        elif self.ambient == "real":
            out["generators"] = [list(g) for g in self.generators]
        else:
            out["generators"] = [[[c.real, c.imag] for c in g] for g in self.generators]
        return out

    @classmethod
    def from_json(cls, data: dict) -> "GeneratorFamily":
        try:
            ambient = data["ambient"]
            mode = data.get("mode", "float")
            gens = data["generators"]
        except KeyError as exc:
            raise ParseError(f"family JSON missing key {exc}") from exc
        if not isinstance(gens, list) or not gens or not all(isinstance(g, list) for g in gens):
            raise ParseError("'generators' must be a non-empty list of coordinate lists")
        dim = data.get("dim", len(gens[0]))
        if mode == "exact":
            fld = NumberField.from_json(data["field"]) if data.get("field") else NumberField.rationals()
            if ambient == "complex":
                gens = [[_pair(c) for c in g] for g in gens]
            return cls(ambient, dim, "exact", tuple(tuple(g) for g in gens), fld)
        if mode != "float":
            raise ParseError(f"unknown mode {mode!r}")
        if ambient == "complex":
            gens = [[complex(*_pair(c)) for c in g] for g in gens]
        return cls(ambient, dim, "float", tuple(tuple(g) for g in gens))


def _pair(c):
    if not isinstance(c, list) or len(c) != 2:
        raise ParseError(f"complex coordinates are [re, im] pairs, got {c!r}")
    return tuple(c)


def complex_to_real_embedding(family: GeneratorFamily) -> GeneratorFamily:
    """Map z_j in C^n to (Re z_j; Im z_j) in R^{2n} (all real parts first)."""
    if family.ambient != "complex":
        raise ValidationError("complex_to_real_embedding expects a complex family")
    if family.mode == "float":
        gens = tuple(tuple([c.real for c in g] + [c.imag for c in g]) for g in family.generators)
        return GeneratorFamily("real", 2 * family.dim, "float", gens)
    gens = tuple(tuple([re for re, _ in g] + [im for _, im in g]) for g in family.generators)
    return GeneratorFamily("real", 2 * family.dim, "exact", gens, family.field)


# -- verdicts ------------------------------------------------------------------

@dataclass(frozen=True)
class DensityVerdict:
    outcome: Outcome
    rank: int
    mode: str
    relation: Optional[IntegerRelation] = None
    exhaustive: bool = False
    height_bound: Optional[int] = None
    tolerances: dict = field(default_factory=dict)
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        outcome = Outcome(self.outcome)
        object.__setattr__(self, "outcome", outcome)
        proper = bool(self.notes.get("proper_subspace"))
        if outcome in NOT_DENSE_OUTCOMES and self.relation is None and not proper:
            raise ValidationError(f"{outcome.value} requires a relation or a proper-subspace note")
        if outcome in DENSE_OUTCOMES and self.relation is not None:
            raise ValidationError(f"{outcome.value} cannot carry a relation")
        if outcome is Outcome.CERTIFIED_DENSE and self.mode != "exact":
            raise ValidationError("CERTIFIED_DENSE is reserved for exact mode")
        if outcome in (Outcome.DENSE_UP_TO_HEIGHT, Outcome.NOT_DENSE_NUMERIC) and self.mode != "float":
            raise ValidationError(f"{outcome.value} is reserved for float mode")
        if outcome is Outcome.NOT_DENSE and self.mode != "exact":
            raise ValidationError("NOT_DENSE is reserved for exact mode")

    @property
    def is_dense(self) -> bool:
        return self.outcome in DENSE_OUTCOMES

    @property
    def classification(self) -> str:
        if self.outcome in DENSE_OUTCOMES:
            return "dense"
        if self.outcome in NOT_DENSE_OUTCOMES:
            return "not_dense"
        return "unknown"

    def to_json(self) -> dict:
        return {
            "outcome": self.outcome.value,
            "relation": self.relation.to_json() if self.relation else None,
            "rank": self.rank,
            "mode": self.mode,
            "tolerances": dict(self.tolerances),
            "exhaustive": self.exhaustive,
            "height_bound": self.height_bound,
            "notes": dict(self.notes),
        }

    @classmethod
    def from_json(cls, data: dict) -> "DensityVerdict":
        rel = data.get("relation")
        return cls(
            outcome=Outcome(data["outcome"]),
            rank=int(data["rank"]),
            mode=data["mode"],
            relation=IntegerRelation.from_json(rel) if rel else None,
            exhaustive=bool(data.get("exhaustive", False)),
            height_bound=data.get("height_bound"),
            tolerances=dict(data.get("tolerances", {})),
            notes=dict(data.get("notes", {})),
        )


# -- rank condition ------------------------------------------------------------

def check_rank_condition_single(family: GeneratorFamily, s: Sequence[int]) -> bool:
    """True iff rank [X; s] = d + 1 for this particular s."""
    fam = family.real()
    s = [int(v) for v in s]
    if len(s) != fam.p:
        raise DimensionMismatch(f"s has length {len(s)}, expected {fam.p}")
    if not any(s):
        raise ZeroRelation("s must be nonzero")
    X = fam.matrix()
    if fam.mode == "exact":
        rank, _ = exact_rank(list(X) + [[fam.field.coerce(v) for v in s]])
    else:
        rank = lt.numeric_rank(np.vstack([X, np.asarray(s, dtype=float)]), lt.RANK_RTOL)
    return rank == fam.dim + 1


def _rank_exact(columns, field_) -> int:
    if not columns:
        return 0
    rows = [[col[i] for col in columns] for i in range(len(columns[0]))]
    return exact_rank(rows)[0]


def basis_extraction_check(family: GeneratorFamily, verdict: DensityVerdict) -> bool:
    """Dense with d + 1 generators implies every d of them form a basis."""
    fam = family.real()
    if not verdict.is_dense:
        raise ValidationError("basis extraction requires a dense verdict")
    if fam.p != fam.dim + 1:
        raise WrongCardinality(f"need exactly d + 1 = {fam.dim + 1} generators, got {fam.p}")
    for k in range(fam.p):
        rest = [g for j, g in enumerate(fam.generators) if j != k]
        if fam.mode == "exact":
            rank = _rank_exact(rest, fam.field)
        else:
            rank = lt.numeric_rank(np.array(rest, dtype=float).T, lt.RANK_RTOL)
        if rank != fam.dim:
            return False
    return True


# -- decisions -----------------------------------------------------------------

def _row_space_rationals(X, kernel, field_: NumberField) -> list[list[Fraction]]:
    """Basis (RREF rows) of the rational vectors orthogonal to every kernel vector."""
    p = len(kernel[0]) if kernel else len(X[0])
    constraints = []
    for v in kernel:
        for t in range(field_.degree):
            constraints.append([v[i].coeffs[t] for i in range(p)])
    sol = rational_nullspace(constraints, p)
    if not sol:
        return []
    reduced, pivots = rref(sol)
    return reduced[: len(pivots)]


def decide_density_exact(family: GeneratorFamily) -> DensityVerdict:
    """Complete decision over the family's number field."""
    fam = family.real()
    if fam.mode != "exact":
        raise ValidationError("decide_density_exact needs an exact family")
    X = fam.matrix()
    d, p = fam.dim, fam.p
    rank, kernel = exact_rank(X)
    tolerances = {}
    base_notes = {"ambient": family.ambient, "field_degree": fam.field.degree}
    if rank < d:
        # an annihilating functional: y with y^T X = 0
        _, left = exact_rank([[X[i][j] for i in range(d)] for j in range(p)])
        notes = dict(base_notes, proper_subspace=True,
                     annihilator=[c.to_json() for c in left[0]])
        return DensityVerdict(Outcome.NOT_DENSE, rank, "exact", None, True, None, tolerances, notes)

    rows = _row_space_rationals(X, kernel, fam.field)
    if not rows:
        return DensityVerdict(Outcome.CERTIFIED_DENSE, rank, "exact", None, True, None,
                              tolerances, dict(base_notes, kernel_dim=len(kernel)))

    s = primitive_integer_vector(rows[0])
    stacked, _ = exact_rank(X + [[fam.field.coerce(v) for v in s]])
    if stacked != rank:
        raise AssertionError(f"relation {s} failed exact re-verification")
    notes = dict(base_notes, kernel_dim=len(kernel), rational_row_space_dim=len(rows),
                 rational_row_space=[[format_rational(q) for q in r] for r in rows])
    return DensityVerdict(Outcome.NOT_DENSE, rank, "exact", IntegerRelation(tuple(s), 0.0),
                          True, None, tolerances, notes)


def decide_density_numeric(
    family: GeneratorFamily,
    height_bound: int = DEFAULT_HEIGHT,
    scale: float = lt.DEFAULT_SCALE,
    residual_tol: float = lt.DEFAULT_RESIDUAL_TOL,
) -> DensityVerdict:
    """Heuristic decision on float data; a dense answer is qualified by the height swept."""
    fam = family.real()
    if fam.mode != "float":
        raise ValidationError("decide_density_numeric needs a float family (use .to_float())")
    X = fam.matrix()
    d = fam.dim
    tolerances = {"rank_rtol": lt.RANK_RTOL, "residual_tol": residual_tol, "scale": scale,
                  "chance_level": lt.CHANCE_LEVEL}
    notes = {"ambient": family.ambient}
    u, sv, _ = np.linalg.svd(X)
    smax = sv[0] if sv.size else 0.0
    rank = lt.numeric_rank(X)
    if rank < d:
        functional = u[:, d - 1] if sv.size >= d else u[:, -1]
        notes.update(proper_subspace=True, annihilator=[float(v) for v in functional])
        return DensityVerdict(Outcome.NOT_DENSE_NUMERIC, rank, "float", None, False,
                              height_bound, tolerances, notes)
    ratio = float(sv[d - 1] / smax)
    if ratio <= RANK_GRAY_RTOL:
        notes.update(reason="rank ambiguous", singular_ratio=ratio)
        return DensityVerdict(Outcome.UNKNOWN, rank, "float", None, False, height_bound,
                              tolerances, notes)

    search = lt.find_integer_relation(X, height_bound, scale, residual_tol)
    notes.update(method=search.method, swept_height=search.swept_height)
    if search.relation is not None:
        return DensityVerdict(Outcome.NOT_DENSE_NUMERIC, rank, "float", search.relation,
                              search.exhaustive, height_bound, tolerances, notes)
    notes["closest_residual"] = search.closest_residual if np.isfinite(search.closest_residual) else None
    return DensityVerdict(Outcome.DENSE_UP_TO_HEIGHT, rank, "float", None, search.exhaustive,
                          height_bound, tolerances, notes)


def decide_density(family: GeneratorFamily, height_bound: int = DEFAULT_HEIGHT, **kw) -> DensityVerdict:
    if family.mode == "exact":
        return decide_density_exact(family)
    return decide_density_numeric(family, height_bound, **kw)
