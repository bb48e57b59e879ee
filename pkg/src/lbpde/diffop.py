"""Commutative algebra of differential-operator polynomials and matrices.

A `DiffPoly` is a sparse polynomial in the d commuting partial-derivative
symbols, stored as a map from multi-index to exact coefficient (Fraction,
or CRat once a plane-wave substitution has turned the symbols into
wavevector components).  `OpMatrix` is a dense matrix of `DiffPoly`
entries; it represents the moment-space advection operator, its ABCD
blocks and every operator produced by the expansion engine.

Total degree is capped (default 4).  Products that would exceed the cap
drop the overflowing monomials and mark the result `truncated` so the
loss is never silent.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, Mapping, Sequence, Tuple

from .exact import CRat, format_rational, i_power, mat_inv, parse_rational

DEFAULT_DEGREE_CAP = 4

Beta = Tuple[int, ...]


class DegreeCapError(ValueError):
    """Raised when an operation needs more degrees than the cap allows."""


def _glex_key(beta: Beta):
    """Graded lexicographic ordering key (fixed for serialization).

    Total degree first; within a degree, earlier axes with higher powers
    come first (the usual x > y > z precedence).
    """
    return (sum(beta), tuple(-b for b in beta))


class DiffPoly:
    """Sparse multivariate polynomial with exact coefficients.

    Zero coefficients are never stored.  Instances are treated as
    immutable values; every operation returns a fresh polynomial.
    """

    __slots__ = ("dim", "terms", "cap", "truncated")

    def __init__(self, dim, terms=None, cap=DEFAULT_DEGREE_CAP, truncated=False):
        self.dim = dim
        self.cap = cap
        self.truncated = truncated
        clean: Dict[Beta, object] = {}
        for beta, coef in (terms or {}).items():
            beta = tuple(beta)
            if len(beta) != dim:
                raise ValueError(f"multi-index {beta} does not match dimension {dim}")
            if sum(beta) > cap:
                self.truncated = True
                continue
            if coef:
                clean[beta] = coef
        self.terms = clean

    # -- constructors --

    @classmethod
    def zero(cls, dim, cap=DEFAULT_DEGREE_CAP):
        return cls(dim, {}, cap)

    @classmethod
    def const(cls, value, dim, cap=DEFAULT_DEGREE_CAP):
        return cls(dim, {(0,) * dim: value}, cap)

    @classmethod
    def partial(cls, axis, dim, coef=Fraction(1), cap=DEFAULT_DEGREE_CAP):
        beta = tuple(int(i == axis) for i in range(dim))
        return cls(dim, {beta: coef}, cap)

    # -- ring operations --

    def _check_compatible(self, other: "DiffPoly"):
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")

    def __add__(self, other):
        if not isinstance(other, DiffPoly):
            return NotImplemented
        self._check_compatible(other)
        terms = dict(self.terms)
        for beta, coef in other.terms.items():
            new = terms.get(beta, 0) + coef
            if new:
                terms[beta] = new
            else:
                terms.pop(beta, None)
        return DiffPoly(self.dim, terms, min(self.cap, other.cap),
                        self.truncated or other.truncated)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return DiffPoly(self.dim, {b: -c for b, c in self.terms.items()},
                        self.cap, self.truncated)

    def __mul__(self, other):
        if isinstance(other, DiffPoly):
            self._check_compatible(other)
            cap = min(self.cap, other.cap)
            truncated = self.truncated or other.truncated
            terms: Dict[Beta, object] = {}
            for b1, c1 in self.terms.items():
                for b2, c2 in other.terms.items():
                    beta = tuple(i + j for i, j in zip(b1, b2))
                    if sum(beta) > cap:
                        truncated = True
                        continue
                    new = terms.get(beta, 0) + c1 * c2
                    if new:
                        terms[beta] = new
                    else:
                        terms.pop(beta, None)
            return DiffPoly(self.dim, terms, cap, truncated)
        if isinstance(other, (int, Fraction, CRat)):
            if not other:
                return DiffPoly.zero(self.dim, self.cap)
            return DiffPoly(self.dim, {b: c * other for b, c in self.terms.items()},
                            self.cap, self.truncated)
        return NotImplemented

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, DiffPoly):
            return NotImplemented
        return self.dim == other.dim and self.terms == other.terms

    def __hash__(self):
        return hash((self.dim, frozenset(self.terms.items())))

    def __bool__(self):
        return bool(self.terms)

    # -- queries --

    def degree(self):
        """Total degree, or -1 for the zero polynomial."""
        return max((sum(b) for b in self.terms), default=-1)

    def is_homogeneous(self, n) -> bool:
        return all(sum(b) == n for b in self.terms)

    def homogeneous_part(self, n) -> "DiffPoly":
        return DiffPoly(self.dim, {b: c for b, c in self.terms.items() if sum(b) == n},
                        self.cap)

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda item: _glex_key(item[0]))

    def map_coefficients(self, fn: Callable) -> "DiffPoly":
        return DiffPoly(self.dim, {b: fn(c) for b, c in self.terms.items()},
                        self.cap, self.truncated)

    def substitute_ik(self) -> "DiffPoly":
        """Replace each derivative symbol by i * (wavevector component).

        The monomial map is unchanged; the coefficient of beta picks up the
        exact factor i**|beta|, so the result has CRat coefficients and the
        symbols now read as k_1..k_d.
        """
        return DiffPoly(self.dim,
                        {b: i_power(sum(b)) * c for b, c in self.terms.items()},
                        self.cap, self.truncated)

    def evaluate(self, point: Sequence):
        """Plug scalars into the symbols; exact for exact inputs."""
        if len(point) != self.dim:
            raise ValueError("point dimension mismatch")
        total = 0
        for beta, coef in self.terms.items():
            value = coef
            for axis, power in enumerate(beta):
                for _ in range(power):
                    value = value * point[axis]
            total = total + value
        return total

    # -- serialization / rendering --

    def to_json(self) -> dict:
        terms = []
        for beta, coef in self.sorted_terms():
            if not isinstance(coef, Fraction):
                raise TypeError("JSON form is defined for rational coefficients")
            terms.append({"beta": list(beta), "coef": format_rational(coef)})
        return {"dim": self.dim, "terms": terms}

    @classmethod
    def from_json(cls, data: Mapping, cap=DEFAULT_DEGREE_CAP) -> "DiffPoly":
        terms = {tuple(t["beta"]): parse_rational(t["coef"]) for t in data["terms"]}
        return cls(data["dim"], terms, cap)

    def render(self, symbols: Sequence[str]) -> str:
        """Human-readable form like "(2/3) Dx Dy^2"; "0" when empty."""
        if not self.terms:
            return "0"
        pieces = []
        for beta, coef in self.sorted_terms():
            factors = []
            for axis, power in enumerate(beta):
                if power == 1:
                    factors.append(symbols[axis])
                elif power > 1:
                    factors.append(f"{symbols[axis]}^{power}")
            body = " ".join(factors)
            coef_txt = f"({format_rational(coef)})" if isinstance(coef, Fraction) else f"({coef})"
            pieces.append(f"{coef_txt} {body}".strip())
        return " + ".join(pieces)

    def __repr__(self):
        return f"DiffPoly(dim={self.dim}, {dict(self.sorted_terms())!r})"


class OpMatrix:
    """Dense matrix with DiffPoly entries, under ordinary matrix algebra.

    The symbol dimension and degree cap are carried on the matrix itself so
    that empty blocks (zero rows or columns) stay well defined.
    """

    __slots__ = ("rows", "cols", "entries", "dim", "cap")

    def __init__(self, entries: Sequence[Sequence[DiffPoly]], dim=None, cap=None,
                 rows=None, cols=None):
        self.entries = tuple(tuple(row) for row in entries)
        self.rows = len(self.entries) if rows is None else rows
        self.cols = (len(self.entries[0]) if self.entries else 0) if cols is None else cols
        for row in self.entries:
            if len(row) != self.cols:
                raise ValueError("ragged operator matrix")
        first = next((e for row in self.entries for e in row), None)
        if first is None:
            if dim is None:
                raise ValueError("empty operator matrix needs an explicit dimension")
            self.dim = dim
            self.cap = DEFAULT_DEGREE_CAP if cap is None else cap
        else:
            self.dim = first.dim if dim is None else dim
            self.cap = first.cap if cap is None else cap

    # -- constructors --

    @classmethod
    def zeros(cls, rows, cols, dim, cap=DEFAULT_DEGREE_CAP):
        z = DiffPoly.zero(dim, cap)
        return cls([[z] * cols for _ in range(rows)], dim=dim, cap=cap,
                   rows=rows, cols=cols)

    @classmethod
    def identity(cls, n, dim, cap=DEFAULT_DEGREE_CAP):
        one = DiffPoly.const(Fraction(1), dim, cap)
        z = DiffPoly.zero(dim, cap)
        return cls([[one if i == j else z for j in range(n)] for i in range(n)],
                   dim=dim, cap=cap, rows=n, cols=n)

    @classmethod
    def from_scalars(cls, matrix, dim, cap=DEFAULT_DEGREE_CAP, cols=None):
        """Lift a matrix of exact scalars to degree-0 operator entries."""
        entries = [[DiffPoly.const(v, dim, cap) if v else DiffPoly.zero(dim, cap)
                    for v in row] for row in matrix]
        n_cols = cols if cols is not None else (len(matrix[0]) if len(matrix) else 0)
        return cls(entries, dim=dim, cap=cap, rows=len(entries), cols=n_cols)

    @classmethod
    def diagonal(cls, values: Sequence[DiffPoly], dim=None, cap=DEFAULT_DEGREE_CAP):
        n = len(values)
        if n:
            dim, cap = values[0].dim, values[0].cap
        elif dim is None:
            raise ValueError("empty diagonal needs an explicit dimension")
        z = DiffPoly.zero(dim, cap)
        return cls([[values[i] if i == j else z for j in range(n)] for i in range(n)],
                   dim=dim, cap=cap, rows=n, cols=n)

    # -- algebra --

    def _shape_check(self, other, same=True):
        if same and (self.rows != other.rows or self.cols != other.cols):
            raise ValueError("shape mismatch")
        if not same and self.cols != other.rows:
            raise ValueError("inner dimension mismatch")

    def __add__(self, other):
        self._shape_check(other)
        return OpMatrix([[a + b for a, b in zip(r1, r2)]
                         for r1, r2 in zip(self.entries, other.entries)],
                        dim=self.dim, cap=min(self.cap, other.cap),
                        rows=self.rows, cols=self.cols)

    def __sub__(self, other):
        self._shape_check(other)
        return OpMatrix([[a - b for a, b in zip(r1, r2)]
                         for r1, r2 in zip(self.entries, other.entries)],
                        dim=self.dim, cap=min(self.cap, other.cap),
                        rows=self.rows, cols=self.cols)

    def __neg__(self):
        return OpMatrix([[-a for a in row] for row in self.entries],
                        dim=self.dim, cap=self.cap, rows=self.rows, cols=self.cols)

    def __matmul__(self, other):
        self._shape_check(other, same=False)
        zero = DiffPoly.zero(self.dim, min(self.cap, other.cap))
        out = []
        for i in range(self.rows):
            row = []
            for j in range(other.cols):
                acc = zero
                for k in range(self.cols):
                    acc = acc + self.entries[i][k] * other.entries[k][j]
                row.append(acc)
            out.append(row)
        return OpMatrix(out, dim=self.dim, cap=min(self.cap, other.cap),
                        rows=self.rows, cols=other.cols)

    def __mul__(self, scalar):
        return OpMatrix([[a * scalar for a in row] for row in self.entries],
                        dim=self.dim, cap=self.cap, rows=self.rows, cols=self.cols)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, OpMatrix):
            return NotImplemented
        return (self.rows, self.cols) == (other.rows, other.cols) and \
            self.entries == other.entries

    def __getitem__(self, index):
        return self.entries[index]

    # -- queries --

    def is_zero(self) -> bool:
        return all(not e for row in self.entries for e in row)

    def any_truncated(self) -> bool:
        return any(e.truncated for row in self.entries for e in row)

    def is_homogeneous(self, n) -> bool:
        return all(e.is_homogeneous(n) for row in self.entries for e in row)

    def homogeneous_part(self, n) -> "OpMatrix":
        return self.map(lambda e: e.homogeneous_part(n))

    def map(self, fn: Callable[[DiffPoly], DiffPoly]) -> "OpMatrix":
        return OpMatrix([[fn(e) for e in row] for row in self.entries],
                        dim=self.dim, cap=self.cap, rows=self.rows, cols=self.cols)

    def substitute_ik(self) -> "OpMatrix":
        return self.map(lambda e: e.substitute_ik())

    def block(self, r0, r1, c0, c1) -> "OpMatrix":
        return OpMatrix([row[c0:c1] for row in self.entries[r0:r1]],
                        dim=self.dim, cap=self.cap,
                        rows=r1 - r0, cols=c1 - c0)

    def to_json(self) -> dict:
        return {"rows": self.rows, "cols": self.cols,
                "entries": [[e.to_json() for e in row] for row in self.entries]}

    @classmethod
    def from_json(cls, data: Mapping, cap=DEFAULT_DEGREE_CAP) -> "OpMatrix":
        entries = [[DiffPoly.from_json(e, cap) for e in row] for row in data["entries"]]
        dim = None
        for row in entries:
            for e in row:
                dim = e.dim
                break
        return cls(entries, dim=dim, cap=cap, rows=data["rows"], cols=data["cols"])

    def __repr__(self):
        return f"OpMatrix({self.rows}x{self.cols})"


@dataclass(frozen=True)
class Blocks:
    """One level of the conforming 2x2 split of a moment-space operator."""

    a: OpMatrix
    b: OpMatrix
    c: OpMatrix
    d: OpMatrix


@dataclass(frozen=True)
class BlockPowers:
    """Blocks of the first powers of the advection operator matrix."""

    levels: Mapping[int, Blocks]

    def __getitem__(self, n) -> Blocks:
        return self.levels[n]


def build_lambda(scheme, cap=DEFAULT_DEGREE_CAP) -> OpMatrix:
    """Advection operator resolved in the moment basis.

    Conjugates the diagonal of one-particle advection operators by the
    moment matrix: entry (r, c) collects sum_j M[r][j] (v_j . grad) Minv[j][c].
    Raises SingularMatrixError for a singular moment matrix.
    """
    minv = mat_inv(scheme.moment_matrix)
    velocities = scheme.physical_velocities()
    d, q = scheme.d, scheme.q
    rows = []
    for r in range(q):
        row = []
        for c in range(q):
            terms = {}
            for axis in range(d):
                coef = sum(
                    (scheme.moment_matrix[r][j] * velocities[j][axis] * minv[j][c]
                     for j in range(q)),
                    start=Fraction(0),
                )
                if coef:
                    terms[tuple(int(i == axis) for i in range(d))] = coef
            row.append(DiffPoly(d, terms, cap))
        rows.append(row)
    return OpMatrix(rows, dim=d, cap=cap)


def block_split(op: OpMatrix, n_c: int) -> Blocks:
    """Split conforming to (conserved, nonconserved); 1 <= n_c <= size."""
    if not 1 <= n_c <= op.rows or op.rows != op.cols:
        raise ValueError(f"conserved count {n_c} out of range for {op.rows}x{op.cols}")
    q = op.rows
    return Blocks(
        a=op.block(0, n_c, 0, n_c),
        b=op.block(0, n_c, n_c, q),
        c=op.block(n_c, q, 0, n_c),
        d=op.block(n_c, q, n_c, q),
    )


def block_powers(op: OpMatrix, n_c: int, up_to: int = 4) -> BlockPowers:
    """Blocks of op**n for n = 1..up_to, from the plain matrix powers."""
    levels = {}
    power = op
    for n in range(1, up_to + 1):
        levels[n] = block_split(power, n_c)
        if n < up_to:
            power = power @ op
    return BlockPowers(levels)


def apply_planewave(op: OpMatrix, k: Sequence) -> list:
    """Substitute each derivative symbol by i*k_alpha and evaluate exactly.

    `k` is a sequence of exact scalars (Fraction or CRat per component).
    Returns a dense list-of-lists of CRat.
    """
    if len(k) != op.dim:
        raise ValueError("wavevector dimension mismatch")
    point = []
    for ki in k:
        if isinstance(ki, (str, int)):
            ki = parse_rational(ki)
        point.append(CRat(0, 1) * CRat.coerce(ki))
    return [[CRat.coerce(e.evaluate(point)) if e else CRat(0) for e in row]
            for row in op.entries]
