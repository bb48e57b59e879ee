"""Exact scalar and small-matrix arithmetic.

Rationals are `fractions.Fraction`; complex rationals (Gaussian rationals)
are `CRat` pairs of Fractions.  Matrices are dense lists of lists -- the
problem sizes here (q <= 9 or so) make Gauss-Jordan elimination on exact
entries the right tool, so nothing is delegated to a numeric library.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence, Union

Rat = Fraction
Scalar = Union[int, Fraction, "CRat"]


class SingularMatrixError(ValueError):
    """Raised when an exact elimination finds no pivot."""


def parse_rational(value) -> Fraction:
    """Parse "p/q" (optional sign) or a plain integer into a Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if "/" in text:
            num, den = text.split("/", 1)
            return Fraction(int(num), int(den))
        return Fraction(int(text))
    raise ValueError(f"not a rational: {value!r}")


def format_rational(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


class CRat:
    """Gaussian rational re + im*i with exact Fraction parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        object.__setattr__(self, "re", Fraction(re))
        object.__setattr__(self, "im", Fraction(im))

    def __setattr__(self, name, value):
        raise AttributeError("CRat is immutable")

    @staticmethod
    def coerce(value) -> "CRat":
        if isinstance(value, CRat):
            return value
        if isinstance(value, (int, Fraction)):
            return CRat(value)
        if isinstance(value, complex):
            return CRat(Fraction(value.real), Fraction(value.imag))
        raise TypeError(f"cannot coerce {value!r} to CRat")

    def __add__(self, other):
        other = CRat.coerce(other)
        return CRat(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        other = CRat.coerce(other)
        return CRat(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        return CRat.coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return CRat(self.re * other, self.im * other)
        other = CRat.coerce(other)
        return CRat(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return CRat(self.re / other, self.im / other)
        other = CRat.coerce(other)
        norm = other.re * other.re + other.im * other.im
        if norm == 0:
            raise ZeroDivisionError("division by zero CRat")
        return self * other.conjugate() / norm

    def __rtruediv__(self, other):
        return CRat.coerce(other) / self

    def __neg__(self):
        return CRat(-self.re, -self.im)

    def conjugate(self) -> "CRat":
        return CRat(self.re, -self.im)

    def __eq__(self, other):
        try:
            other = CRat.coerce(other)
        except TypeError:
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"CRat({self.re!r}, {self.im!r})"


CRAT_I = CRat(0, 1)

#: i**n for n mod 4, as (re_sign_on_coef, im_sign_on_coef) selectors.
_I_POWER = (CRat(1), CRat(0, 1), CRat(-1), CRat(0, -1))


def i_power(n: int) -> CRat:
    """Exact i**n."""
    return _I_POWER[n % 4]


# --- dense exact matrices ------------------------------------------------

Matrix = Sequence[Sequence[Scalar]]


def identity(n: int):
    return [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]


def mat_mul(a: Matrix, b: Matrix):
    rows, inner, cols = len(a), len(b), len(b[0]) if b else 0
    return [
        [sum((a[i][k] * b[k][j] for k in range(inner)), start=Fraction(0)) for j in range(cols)]
        for i in range(rows)
    ]


def mat_vec(a: Matrix, v: Sequence[Scalar]):
    return [sum((a[i][k] * v[k] for k in range(len(v))), start=Fraction(0)) for i in range(len(a))]


def mat_det(a: Matrix):
    """Determinant by fraction-exact Gaussian elimination."""
    n = len(a)
    m = [list(row) for row in a]
    det = Fraction(1)
    for col in range(n):
        pivot = next((r for r in range(col, n) if m[r][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            m[col], m[pivot] = m[pivot], m[col]
            det = -det
        det = det * m[col][col]
        for r in range(col + 1, n):
            factor = m[r][col] / m[col][col]
            if factor == 0:
                continue
            for c in range(col, n):
                m[r][c] = m[r][c] - factor * m[col][c]
    return det


def mat_inv(a: Matrix):
    """Exact inverse by Gauss-Jordan elimination.

    Raises SingularMatrixError when no nonzero pivot exists.
    """
    n = len(a)
    m = [list(row) for row in a]
    inv = identity(n)
    for col in range(n):
        pivot = next((r for r in range(col, n) if m[r][col] != 0), None)
        if pivot is None:
            raise SingularMatrixError("matrix is singular")
        if pivot != col:
            m[col], m[pivot] = m[pivot], m[col]
            inv[col], inv[pivot] = inv[pivot], inv[col]
        p = m[col][col]
        for c in range(n):
            m[col][c] = m[col][c] / p
            inv[col][c] = inv[col][c] / p
        for r in range(n):
            if r == col or m[r][col] == 0:
                continue
            factor = m[r][col]
            for c in range(n):
                m[r][c] = m[r][c] - factor * m[col][c]
                inv[r][c] = inv[r][c] - factor * inv[col][c]
    return inv
