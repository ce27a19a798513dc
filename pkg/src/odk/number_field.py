"""Exact arithmetic in a real number field Q(theta) and linear algebra over it.

A field is given by the monic minimal polynomial of theta (rational
coefficients, lowest degree first) together with a float approximation
of the real root that fixes the embedding into R.  Elements are stored
in the power basis 1, theta, ..., theta^(k-1).

Irreducibility of the polynomial is assumed, not proven: only the absence
of rational roots is checked.  A reducible polynomial makes the quotient
ring non-integral and voids every certificate computed over it.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Iterable, Sequence, Union

from odk.errors import (
    FieldDivisionByZero,
    FieldMismatch,
    ParseError,
    ValidationError,
)

RationalLike = Union[int, Fraction, str]

EMBEDDING_TOL = 1e-9
_RATIONAL_RE = re.compile(r"^[+-]?\d+(/\d+)?$")


def parse_rational(value) -> Fraction:
    """Parse an int, Fraction or ``"p/q"`` string.  Floats are refused."""
    if isinstance(value, bool):
        raise ParseError(f"not a rational: {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        if not _RATIONAL_RE.match(value.strip()):
            raise ParseError(f"not a rational literal: {value!r}")
        try:
            return Fraction(value.strip())
        except ZeroDivisionError as exc:
            raise ParseError(f"zero denominator in {value!r}") from exc
    raise ParseError(f"exact values must be ints or 'p/q' strings, got {value!r}")


def format_rational(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


# -- dense polynomials over Q, coefficient lists lowest degree first ---------

def _trim(p: list[Fraction]) -> list[Fraction]:
    while p and p[-1] == 0:
        p.pop()
    return p


def _poly_mul(a: Sequence[Fraction], b: Sequence[Fraction]) -> list[Fraction]:
    if not a or not b:
        return []
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai == 0:
            continue
        for j, bj in enumerate(b):
            out[i + j] += ai * bj
    return _trim(out)


def _poly_sub(a: Sequence[Fraction], b: Sequence[Fraction]) -> list[Fraction]:
    n = max(len(a), len(b))
    out = [
        (a[i] if i < len(a) else Fraction(0)) - (b[i] if i < len(b) else Fraction(0))
        for i in range(n)
    ]
    return _trim(out)


def _poly_divmod(a: Sequence[Fraction], b: Sequence[Fraction]):
    a = _trim(list(a))
    b = _trim(list(b))
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    if len(a) < len(b):
        return [], a
    quot = [Fraction(0)] * (len(a) - len(b) + 1)
    rem = list(a)
    lead = b[-1]
    for shift in range(len(a) - len(b), -1, -1):
        c = rem[shift + len(b) - 1] / lead
        quot[shift] = c
        if c:
            for j, bj in enumerate(b):
                rem[shift + j] -= c * bj
    return _trim(quot), _trim(rem[: len(b) - 1])


def _poly_ext_gcd(a: Sequence[Fraction], b: Sequence[Fraction]):
    """Return (g, u, v) with u*a + v*b = g."""
    r0, r1 = _trim(list(a)), _trim(list(b))
    u0, u1 = [Fraction(1)], []
    v0, v1 = [], [Fraction(1)]
    while r1:
        q, r = _poly_divmod(r0, r1)
        r0, r1 = r1, r
        u0, u1 = u1, _poly_sub(u0, _poly_mul(q, u1))
        v0, v1 = v1, _poly_sub(v0, _poly_mul(q, v1))
    return r0, u0, v0


def _poly_eval_float(p: Sequence[Fraction], x: float) -> float:
    acc = 0.0
    for c in reversed(p):
        acc = acc * x + float(c)
    return acc


def _divisors(n: int) -> list[int]:
    n = abs(n)
    small = [d for d in range(1, int(n ** 0.5) + 1) if n % d == 0]
    return sorted(set(small + [n // d for d in small]))


def has_rational_root(poly: Sequence[Fraction]) -> bool:
    """Rational root test on a polynomial with rational coefficients."""
    poly = _trim(list(poly))
    if len(poly) <= 1:
        return False
    if poly[0] == 0:
        return True
    lcm = 1
    for c in poly:
        lcm = lcm * c.denominator // gcd(lcm, c.denominator)
    ints = [int(c * lcm) for c in poly]
    for p in _divisors(ints[0]):
        for q in _divisors(ints[-1]):
            for cand in (Fraction(p, q), Fraction(-p, q)):
                acc = Fraction(0)
                for c in reversed(ints):
                    acc = acc * cand + c
                if acc == 0:
                    return True
    return False


@dataclass(frozen=True)
class NumberField:
    """Q(theta) for a real root theta of a monic rational polynomial.

    ``min_poly`` lists coefficients lowest degree first and ends with 1,
    e.g. ``(-2, 0, 1)`` for t^2 - 2.
    """

    min_poly: tuple
    embedding_hint: float

    def __post_init__(self):
        poly = tuple(parse_rational(c) for c in self.min_poly)
        object.__setattr__(self, "min_poly", poly)
        object.__setattr__(self, "embedding_hint", float(self.embedding_hint))
        if len(poly) < 2:
            raise ValidationError("minimal polynomial must have degree >= 1")
        if poly[-1] != 1:
            raise ValidationError("minimal polynomial must be monic")
        if len(poly) > 2 and has_rational_root(poly):
            raise ValidationError("minimal polynomial has a rational root (reducible)")
        value = _poly_eval_float(poly, self.embedding_hint)
        if abs(value) > EMBEDDING_TOL:
            raise ValidationError(
                f"embedding hint {self.embedding_hint!r} is not a root "
                f"(|p(hint)| = {abs(value):.3e})"
            )

    @classmethod
    def rationals(cls) -> "NumberField":
        return cls((0, 1), 0.0)

    @classmethod
    def from_poly(cls, min_poly: Iterable[RationalLike], approx_root: float) -> "NumberField":
        """Build a field, polishing ``approx_root`` by Newton steps on the float polynomial."""
        poly = [parse_rational(c) for c in min_poly]
        deriv = [c * i for i, c in enumerate(poly)][1:]
        x = float(approx_root)
        for _ in range(50):
            fx = _poly_eval_float(poly, x)
            dfx = _poly_eval_float(deriv, x)
            if dfx == 0:
                break
            step = fx / dfx
            x -= step
            if abs(step) <= 1e-17 * max(1.0, abs(x)):
                break
        return cls(tuple(poly), x)

    @property
    def degree(self) -> int:
        return len(self.min_poly) - 1

    @property
    def is_rational(self) -> bool:
        return self.degree == 1

    def element(self, coeffs) -> "FieldElement":
        return FieldElement(self, tuple(coeffs))

    def coerce(self, value) -> "FieldElement":
        """Lift an int, Fraction, rational string or coefficient list into the field."""
        if isinstance(value, FieldElement):
            if value.field != self:
                raise FieldMismatch("element belongs to a different field")
            return value
        if isinstance(value, (list, tuple)):
            return self.element(value)
        q = parse_rational(value)
        return self.element((q,) + (Fraction(0),) * (self.degree - 1))

    def zero(self) -> "FieldElement":
        return self.coerce(0)

    def one(self) -> "FieldElement":
        return self.coerce(1)

    def theta(self) -> "FieldElement":
        if self.degree == 1:
            return self.coerce(-self.min_poly[0])
        return self.element([0, 1] + [0] * (self.degree - 2))

    def to_json(self) -> dict:
        return {
            "min_poly": [format_rational(c) for c in self.min_poly],
            "embedding": self.embedding_hint,
        }

    @classmethod
    def from_json(cls, data: dict) -> "NumberField":
        try:
            return cls(tuple(data["min_poly"]), float(data["embedding"]))
        except KeyError as exc:
            raise ParseError(f"field object missing key {exc}") from exc


@dataclass(frozen=True)
class FieldElement:
    field: NumberField
    coeffs: tuple

    def __post_init__(self):
        coeffs = tuple(parse_rational(c) for c in self.coeffs)
        if len(coeffs) != self.field.degree:
            raise ValidationError(
                f"expected {self.field.degree} coefficients, got {len(coeffs)}"
            )
        object.__setattr__(self, "coeffs", coeffs)

    # -- helpers ------------------------------------------------------------
    def _lift(self, other) -> "FieldElement":
        if isinstance(other, FieldElement):
            if other.field != self.field:
                raise FieldMismatch("operands belong to different fields")
            return other
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self.field.coerce(other)
        return NotImplemented

    def _from_poly(self, poly: Sequence[Fraction]) -> "FieldElement":
        _, rem = _poly_divmod(poly, self.field.min_poly)
        k = self.field.degree
        return FieldElement(self.field, tuple(rem) + (Fraction(0),) * (k - len(rem)))

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def __bool__(self) -> bool:
        return not self.is_zero()

    # -- ring operations ----------------------------------------------------
    def __add__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return FieldElement(self.field, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    __radd__ = __add__

    def __neg__(self):
        return FieldElement(self.field, tuple(-a for a in self.coeffs))

    def __sub__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return FieldElement(self.field, tuple(a - b for a, b in zip(self.coeffs, other.coeffs)))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return self._from_poly(_poly_mul(_trim(list(self.coeffs)), _trim(list(other.coeffs))))

    __rmul__ = __mul__

    def inverse(self) -> "FieldElement":
        if self.is_zero():
            raise FieldDivisionByZero("division by zero in number field")
        g, u, _ = _poly_ext_gcd(list(self.coeffs), list(self.field.min_poly))
        if len(g) != 1:
            raise ValidationError("minimal polynomial is reducible: element has no inverse")
        return self._from_poly([c / g[0] for c in u])

    def __truediv__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return self * other.inverse()

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __eq__(self, other):
        if isinstance(other, FieldElement):
            return self.field == other.field and self.coeffs == other.coeffs
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self == self.field.coerce(other)
        return NotImplemented

    def __hash__(self):
        return hash((self.field, self.coeffs))

    def to_float(self) -> float:
        """Evaluate at the embedding hint.

        The error is at most |dtheta| * max|f'| over the hint interval plus
        float rounding, where f is the coefficient polynomial.
        """
        return _poly_eval_float(self.coeffs, self.field.embedding_hint)

    __float__ = to_float

    def to_json(self) -> list:
        return [format_rational(c) for c in self.coeffs]

    def __repr__(self):
        terms = []
        for i, c in enumerate(self.coeffs):
            if c:
                terms.append(format_rational(c) + ("" if i == 0 else "*t" if i == 1 else f"*t^{i}"))
        return "FieldElement(" + (" + ".join(terms) or "0") + ")"


def field_arith(a: FieldElement, b: FieldElement, op: str) -> FieldElement:
    if a.field != b.field:
        raise FieldMismatch("operands belong to different fields")
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValidationError(f"unknown op {op!r}")


def to_float(a: FieldElement) -> float:
    return a.to_float()


# -- exact linear algebra ----------------------------------------------------

def common_field(entries: Iterable) -> NumberField:
    field = None
    for e in entries:
        if isinstance(e, FieldElement):
            if field is None:
                field = e.field
            elif e.field != field:
                raise FieldMismatch("matrix entries belong to different fields")
    return field if field is not None else NumberField.rationals()


def _is_zero(x) -> bool:
    return x.is_zero() if isinstance(x, FieldElement) else x == 0


def rref(rows: Sequence[Sequence]) -> tuple[list[list], list[int]]:
    """Gauss-Jordan elimination with exact entries.

    Entries may be Fractions or FieldElements (any mix with a common field
    is lifted first by the caller).  The pivot in each column is the first
    nonzero entry at or below the current row, so the output is the unique
    reduced echelon form and kernels built from it are canonical.
    """
    m = [list(r) for r in rows]
    nrows = len(m)
    ncols = len(m[0]) if m else 0
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        if r == nrows:
            break
        piv = next((i for i in range(r, nrows) if not _is_zero(m[i][c])), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = 1 / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(nrows):
            if i != r and not _is_zero(m[i][c]):
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
    return m, pivots


def _kernel_from_rref(reduced, pivots, ncols, zero, one) -> list[list]:
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [zero] * ncols
        v[f] = one
        for row, pc in enumerate(pivots):
            v[pc] = -reduced[row][f]
        basis.append(v)
    return basis


def exact_rank(matrix: Sequence[Sequence]) -> tuple[int, list[list[FieldElement]]]:
    """Rank over Q(theta) and a canonical kernel basis.

    Each kernel vector has a 1 in one free column and zeros in the other
    free columns.  Rank over Q(theta) equals rank over R.
    """
    rows = [list(r) for r in matrix]
    field = common_field(e for r in rows for e in r)
    lifted = [[field.coerce(e) for e in r] for r in rows]
    ncols = len(lifted[0]) if lifted else 0
    if any(len(r) != ncols for r in lifted):
        raise ValidationError("ragged matrix")
    reduced, pivots = rref(lifted)
    kernel = _kernel_from_rref(reduced, pivots, ncols, field.zero(), field.one())
    return len(pivots), kernel


def rational_nullspace(matrix: Sequence[Sequence[Fraction]], ncols: int) -> list[list[Fraction]]:
    """Kernel basis of a rational matrix (plain Fractions, faster than Q as a field)."""
    rows = [[Fraction(x) for x in r] for r in matrix]
    if not rows:
        return [[Fraction(int(i == j)) for j in range(ncols)] for i in range(ncols)]
    reduced, pivots = rref(rows)
    return _kernel_from_rref(reduced, pivots, ncols, Fraction(0), Fraction(1))


def primitive_integer_vector(v: Sequence[Fraction]) -> list[int]:
    """Clear denominators, divide by the content, make the first nonzero entry positive."""
    lcm = 1
    for x in v:
        lcm = lcm * x.denominator // gcd(lcm, x.denominator)
    ints = [int(x * lcm) for x in v]
    g = 0
    for x in ints:
        g = gcd(g, x)
    if g == 0:
        raise ValueError("zero vector has no primitive form")
    ints = [x // g for x in ints]
    lead = next(x for x in ints if x != 0)
    return [-x for x in ints] if lead < 0 else ints


def mat_vec(matrix: Sequence[Sequence], v: Sequence):
    return [sum((a * b for a, b in zip(row, v)), start=0 * v[0]) for row in matrix]
