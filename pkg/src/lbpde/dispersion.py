"""Independent verification path based on the exact one-step symbol.

One iteration of a scheme, seen in Fourier space, multiplies the moment
vector by  exp(-Lambda(ik)) K  where Lambda(ik) substitutes i*k_alpha for
each derivative symbol and K is the relaxation matrix.  Because
Lambda(ik) is homogeneous of degree one, truncating the exponential at
matrix power four is *exact* for every series coefficient of total degree
at most four -- no truncation error enters this oracle.

For a single conserved moment the slow eigenvalue branch through
mu(0) = 1 is simple (the other eigenvalues at k = 0 are 1 - s_k), and a
Rayleigh-Schroedinger-style recursion produces its series exactly in
Gaussian-rational arithmetic; the truncated logarithm of that series is
the dispersion series that the expansion engine must reproduce with the
opposite sign.  Schemes with several conserved moments get a floating
point treatment instead: sample the exact symbol, restrict to the slow
invariant subspace, take matrix logarithms, and fit polynomials.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np

from .diffop import (DEFAULT_DEGREE_CAP, Beta, DiffPoly, OpMatrix, _glex_key,
                     build_lambda)
from .exact import CRat, format_rational, i_power, mat_inv
from .expansion import ExpansionResult, expand
from .scheme import LatticeScheme, SchemeError


class DegenerateEigenvalueError(ValueError):
    """The slow eigenvalue at k = 0 is not isolated."""


def relaxation_matrix(scheme: LatticeScheme):
    """Exact linear relaxation update on moments: [[I, 0], [S E, I - S]]."""
    q, n_c = scheme.q, scheme.n_c
    k = [[Fraction(0)] * q for _ in range(q)]
    for i in range(n_c):
        k[i][i] = Fraction(1)
    for r in range(q - n_c):
        s = scheme.rates[r]
        for c in range(n_c):
            k[n_c + r][c] = s * scheme.equilibrium_jacobian[r][c]
        k[n_c + r][n_c + r] = 1 - s
    return k


@dataclass(frozen=True)
class AmplificationSeries:
    """Truncated series in k of the one-step moment-space update."""

    scheme: LatticeScheme
    matrix: OpMatrix  # q x q, CRat coefficients, symbols read as k components

    @property
    def max_degree(self) -> int:
        return self.matrix.cap


def amplification_series(scheme: LatticeScheme, cap=DEFAULT_DEGREE_CAP) -> AmplificationSeries:
    """Expand exp(-Lambda(ik)) K to total degree `cap` (exactly)."""
    lam_ik = build_lambda(scheme, cap=cap).substitute_ik()
    dim, q = scheme.d, scheme.q
    total = OpMatrix.identity(q, dim, cap)
    power = OpMatrix.identity(q, dim, cap)
    factor = Fraction(1)
    for n in range(1, cap + 1):
        power = power @ lam_ik
        factor = factor * Fraction(-1, n)
        total = total + power.map(lambda e: e * factor)
    relax = OpMatrix.from_scalars(relaxation_matrix(scheme), dim, cap)
    return AmplificationSeries(scheme=scheme, matrix=total @ relax)


@dataclass(frozen=True)
class DispersionSeries:
    """Truncated series of the slow log-amplification factor ln mu(k)."""

    dim: int
    max_degree: int
    terms: Mapping[Beta, CRat]

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda item: _glex_key(item[0]))

    def degree_part(self, n) -> Dict[Beta, CRat]:
        return {b: c for b, c in self.terms.items() if sum(b) == n}

    def coefficient(self, beta) -> CRat:
        return self.terms.get(tuple(beta), CRat(0))

    def to_json(self) -> list:
        return [
            {"beta": list(beta), "re": format_rational(CRat.coerce(coef).re),
             "im": format_rational(CRat.coerce(coef).im)}
            for beta, coef in self.sorted_terms()
        ]

    @classmethod
    def from_json(cls, data, dim, max_degree=DEFAULT_DEGREE_CAP) -> "DispersionSeries":
        terms = {tuple(t["beta"]): CRat(Fraction(t["re"]), Fraction(t["im"]))
                 for t in data}
        return cls(dim=dim, max_degree=max_degree, terms=terms)

    @classmethod
    def from_expansion(cls, result: ExpansionResult) -> "DispersionSeries":
        """The series -sum_j gamma_j(ik) predicted by the expansion engine."""
        if result.scheme.n_c != 1:
            raise SchemeError("series comparison needs a single conserved moment")
        terms: Dict[Beta, CRat] = {}
        for j, op in result.gamma.items():
            for beta, coef in op.entries[0][0].substitute_ik().terms.items():
                value = terms.get(beta, CRat(0)) - coef
                if value:
                    terms[beta] = value
                else:
                    terms.pop(beta, None)
        return cls(dim=result.scheme.d, max_degree=result.order, terms=terms)

    def compare(self, other: "DispersionSeries", up_to=None):
        """Mismatching multi-indices (glex order) between two series."""
        up_to = up_to if up_to is not None else min(self.max_degree, other.max_degree)
        betas = set(self.terms) | set(other.terms)
        mismatches = []
        for beta in sorted(betas, key=_glex_key):
            if sum(beta) > up_to:
                continue
            mine, theirs = self.coefficient(beta), other.coefficient(beta)
            if mine != theirs:
                mismatches.append((beta, mine, theirs))
        return mismatches

    def negated_k(self) -> "DispersionSeries":
        terms = {b: c * i_power(2 * sum(b)) for b, c in self.terms.items()}
        return DispersionSeries(self.dim, self.max_degree, terms)

    def conjugated(self) -> "DispersionSeries":
        return DispersionSeries(self.dim, self.max_degree,
                                {b: c.conjugate() for b, c in self.terms.items()})

    def reality_violations(self) -> list:
        """Multi-indices whose coefficient breaks the even-real/odd-imaginary
        pattern; reported, not asserted, since asymmetric schemes may differ."""
        bad = []
        for beta, coef in self.sorted_terms():
            if sum(beta) % 2 == 0 and coef.im:
                bad.append(beta)
            elif sum(beta) % 2 == 1 and coef.re:
                bad.append(beta)
        return bad


def _matvec(op: OpMatrix, vec):
    out = []
    for i in range(op.rows):
        acc = DiffPoly.zero(op.dim, op.cap)
        for j in range(op.cols):
            acc = acc + op.entries[i][j] * vec[j]
        out.append(acc)
    return out


def slow_log_series(ampl: AmplificationSeries, max_degree=None) -> DispersionSeries:
    """Series of ln mu(k) for the slow eigenvalue branch (one conserved moment).

    Exact Gaussian-rational eigenvalue perturbation around the simple
    eigenvalue mu(0) = 1, followed by the truncated logarithm ln(1 + x).
    """
    scheme = ampl.scheme
    if scheme.n_c != 1:
        raise SchemeError("exact slow-eigenvalue path requires one conserved moment")
    if any(s == 0 for s in scheme.rates):
        raise DegenerateEigenvalueError("zero relaxation rate makes mu(0) degenerate")
    cap = ampl.matrix.cap if max_degree is None else max_degree
    dim, q = scheme.d, scheme.q

    parts = [ampl.matrix.homogeneous_part(n) for n in range(cap + 1)]
    zero = DiffPoly.zero(dim, cap)

    # right eigenvector of the relaxation matrix at eigenvalue 1: (1, E)
    x: Dict[int, list] = {
        0: [DiffPoly.const(CRat(1), dim, cap)]
           + [DiffPoly.const(CRat(row[0]), dim, cap) if row[0] else zero
              for row in scheme.equilibrium_jacobian]
    }
    mu: Dict[int, DiffPoly] = {}
    for n in range(1, cap + 1):
        t_n = [zero] * q
        for i in range(1, n + 1):
            contrib = _matvec(parts[i], x[n - i])
            t_n = [a + b for a, b in zip(t_n, contrib)]
        mu[n] = t_n[0]
        b_n = [-entry for entry in t_n]
        for i in range(1, n + 1):
            b_n = [acc + mu[i] * comp for acc, comp in zip(b_n, x[n - i])]
        if b_n[0]:
            raise RuntimeError("perturbation recursion lost the W component")
        x_n = [zero]
        for r in range(q - 1):
            x_n.append(b_n[1 + r] * CRat(Fraction(-1) / scheme.rates[r]))
        x[n] = x_n

    total = zero
    for n in range(1, cap + 1):
        total = total + mu[n]
    log_series = zero
    power = DiffPoly.const(CRat(1), dim, cap)
    for n in range(1, cap + 1):
        power = power * total
        log_series = log_series + power * CRat(Fraction((-1) ** (n + 1), n))

    terms = {b: CRat.coerce(c) for b, c in log_series.terms.items()
             if 1 <= sum(b) <= cap}
    return DispersionSeries(dim=dim, max_degree=cap, terms=terms)


# -- floating-point machinery -------------------------------------------------


def _float_matrix(rows):
    return np.array([[float(v) for v in row] for row in rows], dtype=float)


def amplification_exact(scheme: LatticeScheme, k: Sequence[float]) -> np.ndarray:
    """The exact one-step symbol exp(-Lambda(ik)) K at a numeric wavevector.

    `k` is the lattice wavevector (radians per time step when contracted
    with the physical velocities); no series truncation is involved.
    """
    if len(k) != scheme.d:
        raise SchemeError("wavevector dimension mismatch")
    m = _float_matrix(scheme.moment_matrix)
    minv = _float_matrix(mat_inv(scheme.moment_matrix))
    velocities = np.array([[float(v) for v in vel]
                           for vel in scheme.physical_velocities()])
    phases = np.exp(-1j * velocities @ np.asarray(k, dtype=float))
    relax = _float_matrix(relaxation_matrix(scheme))
    return (m * phases[np.newaxis, :]) @ minv @ relax


def _monomials(dim, degree):
    betas = [beta for beta in product(range(degree + 1), repeat=dim)
             if sum(beta) <= degree]
    return sorted(betas, key=_glex_key)


@dataclass(frozen=True)
class NumericSeriesFit:
    """Least-squares polynomial fit of the sampled slow reduced dynamics."""

    dim: int
    n_c: int
    degree: int
    coeffs: Mapping[Beta, np.ndarray]  # beta -> (n_c, n_c) complex coefficients
    residual: float
    cond: float
    min_gap: float

    def coefficient(self, beta) -> np.ndarray:
        beta = tuple(beta)
        return self.coeffs.get(beta, np.zeros((self.n_c, self.n_c), dtype=complex))


def slow_subspace_series_numeric(scheme: LatticeScheme, k_samples,
                                 degree=DEFAULT_DEGREE_CAP,
                                 guard_degrees=2) -> NumericSeriesFit:
    """Sampled reduced dynamics of the slow invariant subspace, fitted.

    For each sample the exact symbol is restricted to the invariant
    subspace continuous with the conserved directions, expressed in
    conserved-moment coordinates, and its matrix logarithm is taken.  A
    polynomial least-squares fit recovers the coefficients; the fit runs
    with `guard_degrees` extra degrees so that the tail of the true log
    series does not leak into the reported coefficients, and the fit
    residual and design condition number are reported so an
    ill-conditioned sample set is visible to the caller.
    """
    from scipy.linalg import logm

    samples = np.atleast_2d(np.asarray(k_samples, dtype=float))
    if samples.shape[1] != scheme.d:
        raise SchemeError("sample wavevector dimension mismatch")
    n_c = scheme.n_c
    logs = np.empty((len(samples), n_c * n_c), dtype=complex)
    min_gap = np.inf
    for row, k in enumerate(samples):
        symbol = amplification_exact(scheme, k)
        eigvals, eigvecs = np.linalg.eig(symbol)
        order = np.argsort(np.abs(eigvals - 1.0))
        slow, fast = order[:n_c], order[n_c:]
        if len(fast):
            gap = np.abs(eigvals[slow][:, None] - eigvals[fast][None, :]).min()
            min_gap = min(min_gap, float(gap))
        basis = eigvecs[:, slow]
        top = basis[:n_c, :]
        reduced = top @ np.diag(eigvals[slow]) @ np.linalg.inv(top)
        logs[row] = (np.log(reduced[0, 0]) if n_c == 1
                     else logm(reduced).reshape(-1))

    scale = np.abs(samples).max() or 1.0
    scaled = samples / scale
    # no constant term: the reduced dynamics is the identity at k = 0, so its
    # log vanishes there; keeping degree 0 would also make shell-type sample
    # sets rank deficient (a constant is indistinguishable from |k|^2 on one
    # shell)
    fit_betas = [b for b in _monomials(scheme.d, degree + guard_degrees) if sum(b)]
    if len(samples) < len(fit_betas):
        raise SchemeError(f"need at least {len(fit_betas)} samples for a "
                          f"degree-{degree + guard_degrees} fit, got {len(samples)}")
    design = np.array([[np.prod(ks ** np.asarray(beta)) for beta in fit_betas]
                       for ks in scaled]).astype(complex)
    solution, *_ = np.linalg.lstsq(design, logs, rcond=None)
    residual = float(np.abs(design @ solution - logs).max())
    cond = float(np.linalg.cond(design))

    coeffs = {}
    for idx, beta in enumerate(fit_betas):
        if sum(beta) > degree:
            continue
        values = solution[idx].reshape(n_c, n_c) / scale ** sum(beta)
        if np.any(np.abs(values) > 0):
            coeffs[beta] = values
    return NumericSeriesFit(dim=scheme.d, n_c=n_c, degree=degree, coeffs=coeffs,
                            residual=residual, cond=cond, min_gap=float(min_gap))


# -- engine/oracle comparison -------------------------------------------------


@dataclass(frozen=True)
class VerifyReport:
    """Outcome of checking the expansion engine against the dispersion oracle."""

    mode: str                      # "exact" or "numeric"
    order: int
    passed: bool
    mismatches: Tuple = ()         # exact path: (beta, oracle, engine) triples
    first_mismatch: Optional[Beta] = None
    residual: Optional[float] = None
    cond: Optional[float] = None

    def summary(self) -> str:
        if self.mode == "exact":
            if self.passed:
                return f"PASS exact series match up to degree {self.order} (0 residual)"
            beta = ",".join(map(str, self.first_mismatch))
            return (f"FAIL {len(self.mismatches)} mismatching coefficients; "
                    f"first at multi-index ({beta})")
        status = "PASS" if self.passed else "FAIL"
        return (f"{status} numeric subspace fit: residual {self.residual:.3e}, "
                f"condition number {self.cond:.3e}")


def compare_series(oracle: DispersionSeries, result: ExpansionResult) -> VerifyReport:
    """Exact comparison of oracle series against -sum gamma_j(ik)."""
    engine = DispersionSeries.from_expansion(result)
    mismatches = tuple(oracle.compare(engine, up_to=result.order))
    return VerifyReport(mode="exact", order=result.order, passed=not mismatches,
                        mismatches=mismatches,
                        first_mismatch=mismatches[0][0] if mismatches else None)


def engine_coefficient_numeric(result: ExpansionResult, beta, target, source) -> complex:
    """Complex value of the engine's series coefficient at one multi-index."""
    beta = tuple(beta)
    value = CRat(0)
    for op in result.gamma.values():
        coef = op.entries[target][source].terms.get(beta)
        if coef is not None:
            value = value - i_power(sum(beta)) * coef
    return complex(value)


def verify_exact(scheme: LatticeScheme, order=4) -> VerifyReport:
    oracle = slow_log_series(amplification_series(scheme, cap=max(order, 4)))
    return compare_series(oracle, expand(scheme, order))


def verify_numeric(scheme: LatticeScheme, order=4, radius=8e-2, tol=1e-6,
                   guard_degrees=4, points_per_shell=24) -> VerifyReport:
    samples = _sample_wavevectors(scheme.d, radius, points_per_shell)
    fit = slow_subspace_series_numeric(scheme, samples, degree=order,
                                       guard_degrees=guard_degrees)
    result = expand(scheme, order)
    worst = fit.residual
    for beta in _monomials(scheme.d, order):
        if not sum(beta):
            continue
        fitted = fit.coefficient(beta)
        for i in range(scheme.n_c):
            for j in range(scheme.n_c):
                predicted = engine_coefficient_numeric(result, beta, i, j)
                worst = max(worst, abs(fitted[i, j] - predicted))
    return VerifyReport(mode="numeric", order=order, passed=bool(worst < tol),
                        residual=float(worst), cond=float(fit.cond))


def _sample_wavevectors(dim, radius, points_per_shell=12,
                        shells=(1.0, 0.875, 0.75, 0.625, 0.5, 0.375, 0.25)):
    """Symmetric multi-shell sample set; +/-k pairs decouple parity leakage."""
    samples = []
    if dim == 1:
        for shell in shells:
            for sign in (1.0, -1.0):
                samples.append([sign * radius * shell])
        return samples
    rng = np.random.default_rng(1729)
    for shell in shells:
        for _ in range(points_per_shell // 2):
            direction = rng.normal(size=dim)
            direction /= np.linalg.norm(direction)
            samples.append(list(radius * shell * direction))
            samples.append(list(-radius * shell * direction))
    return samples


def verify_expansion(scheme: LatticeScheme, order=4, tol=1e-6) -> VerifyReport:
    """Dispatch: exact Gaussian-rational path when there is one conserved
    moment, sampled invariant-subspace path otherwise."""
    if scheme.n_c == 1:
        return verify_exact(scheme, order)
    return verify_numeric(scheme, order, tol=tol)
