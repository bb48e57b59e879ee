import json
import random
from fractions import Fraction

import numpy as np
import pytest

from lbpde.diffop import DiffPoly, OpMatrix
from lbpde.dispersion import (DispersionSeries, amplification_exact,
                              amplification_series, compare_series,
                              engine_coefficient_numeric, relaxation_matrix,
                              slow_log_series, slow_subspace_series_numeric,
                              verify_exact, verify_expansion, verify_numeric)
from lbpde.exact import CRat
from lbpde.expansion import ExpansionResult, expand
from lbpde.scheme import (D2Q9_REFERENCE_RATES, LatticeScheme, SchemeError,
                          builtin_d1q3, builtin_d1q3_acoustics, builtin_d2q9,
                          d2q9_reference)

from conftest import make_random_scheme


def d1q1(lam=Fraction(1)):
    return LatticeScheme(d=1, q=1, lam=lam, velocities=((1,),), moment_matrix=((1,),),
                         n_c=1, equilibrium_jacobian=(), equilibrium_offset=(),
                         rates=(), base_state=(1,))


# -- amplification series -------------------------------------------------------


def test_amplification_at_zero_wavevector_is_relaxation_matrix(reference_scheme):
    series = amplification_series(reference_scheme)
    constant = series.matrix.homogeneous_part(0)
    expected = OpMatrix.from_scalars(relaxation_matrix(reference_scheme), dim=2)
    q = reference_scheme.q
    for r in range(q):
        for c in range(q):
            assert constant[r][c].terms == expected[r][c].terms


def test_relaxation_matrix_structure(reference_scheme):
    k = relaxation_matrix(reference_scheme)
    assert k[0][0] == 1 and all(k[0][c] == 0 for c in range(1, 9))
    for r in range(8):
        s = reference_scheme.rates[r]
        assert k[1 + r][1 + r] == 1 - s
        assert k[1 + r][0] == s * reference_scheme.equilibrium_jacobian[r][0]


def test_single_velocity_scalar_exponential():
    lam = Fraction(1)
    series = amplification_series(d1q1(lam))
    entry = series.matrix[0][0]
    expected = {
        (0,): CRat(1),
        (1,): CRat(0, -lam),
        (2,): CRat(-lam ** 2 / 2),
        (3,): CRat(0, lam ** 3 / 6),
        (4,): CRat(lam ** 4 / 24),
    }
    assert {b: CRat.coerce(c) for b, c in entry.terms.items()} == expected


def test_trace_at_zero_wavevector(reference_scheme):
    series = amplification_series(reference_scheme)
    zero_beta = (0, 0)
    trace = sum((CRat.coerce(series.matrix[i][i].terms.get(zero_beta, 0))
                 for i in range(9)), start=CRat(0))
    # independent path: direct sum over the relaxation diagonal
    expected = sum((row[i] for i, row in enumerate(relaxation_matrix(reference_scheme))),
                   start=Fraction(0))
    assert trace == CRat(expected)
    assert expected == 1 + sum(1 - s for s in reference_scheme.rates)


# -- exact slow-eigenvalue series -------------------------------------------------


def test_pure_advection_log_series_is_linear():
    lam = Fraction(3, 2)
    series = slow_log_series(amplification_series(d1q1(lam)))
    assert dict(series.terms) == {(1,): CRat(0, -lam)}


def test_symmetric_d2q9_degree2_coefficient():
    scheme = builtin_d2q9(lam=1, u=0, v=0, alpha=1, rates=(Fraction(6, 5),) * 8)
    series = slow_log_series(amplification_series(scheme))
    assert series.coefficient((2, 0)) == CRat(Fraction(-5, 18))
    assert series.coefficient((0, 2)) == CRat(Fraction(-5, 18))
    assert not series.degree_part(1)
    assert not series.degree_part(3)


def test_slow_log_requires_single_conserved_moment():
    with pytest.raises(SchemeError):
        slow_log_series(amplification_series(builtin_d1q3_acoustics()))


# -- the central engine/oracle equivalence ----------------------------------------


@pytest.mark.parametrize("scheme_factory", [
    d2q9_reference,
    lambda: builtin_d2q9(lam=1, u=0, v=0, alpha=1, rates=D2Q9_REFERENCE_RATES),
    lambda: builtin_d2q9(lam=Fraction(2), u=Fraction(-1, 5), v=Fraction(1, 8),
                         alpha=Fraction(3, 2),
                         rates=(Fraction(7, 10), Fraction(13, 10), Fraction(1),
                                Fraction(19, 10), Fraction(3, 10), Fraction(11, 10),
                                Fraction(8, 5), Fraction(6, 5))),
    lambda: builtin_d1q3(u=Fraction(1, 10), alpha=Fraction(1, 3),
                         rates=(Fraction(6, 5), Fraction(7, 5))),
])
def test_series_equivalence_exact(scheme_factory):
    report = verify_exact(scheme_factory(), order=4)
    assert report.mode == "exact"
    assert report.passed, report.summary()


def test_series_equivalence_random_schemes():
    rng = random.Random(37)
    for _ in range(4):
        scheme = make_random_scheme(rng, n_c=1)
        report = verify_exact(scheme, order=4)
        assert report.passed, report.summary()


def test_corrupted_gamma3_fails_with_first_mismatch(reference_scheme):
    result = expand(reference_scheme, 4)
    bad_gamma = dict(result.gamma)
    entry = bad_gamma[3][0][0]
    tampered = DiffPoly(2, dict(entry.terms))
    first_beta = next(iter(tampered.terms))
    tampered.terms[first_beta] += Fraction(1, 7)
    bad_gamma[3] = OpMatrix([[tampered]], dim=2)
    corrupted = ExpansionResult(scheme=result.scheme, order=4, gamma=bad_gamma,
                                psi=result.psi)
    oracle = slow_log_series(amplification_series(reference_scheme))
    report = compare_series(oracle, corrupted)
    assert not report.passed
    assert report.first_mismatch is not None
    assert sum(report.first_mismatch) == 3
    assert all(sum(beta) == 3 for beta, _, _ in report.mismatches)


# -- series structure ---------------------------------------------------------------


def test_reality_pattern_for_reference_scheme(reference_scheme):
    series = slow_log_series(amplification_series(reference_scheme))
    assert series.reality_violations() == []


def test_conjugation_under_wavevector_flip():
    rng = random.Random(41)
    for _ in range(3):
        scheme = make_random_scheme(rng, n_c=1)
        series = slow_log_series(amplification_series(scheme))
        flipped = series.negated_k()
        conjugated = series.conjugated()
        assert not flipped.compare(conjugated)


def test_dispersion_json_schema(reference_scheme):
    series = slow_log_series(amplification_series(reference_scheme))
    payload = json.loads(json.dumps(series.to_json()))
    assert payload[0] == {"beta": [1, 0], "re": "0", "im": "-1/10"}
    rebuilt = DispersionSeries.from_json(payload, dim=2)
    assert not rebuilt.compare(series)


# -- numeric subspace path -----------------------------------------------------------


def test_numeric_path_consistent_with_exact(reference_scheme):
    report = verify_numeric(reference_scheme, order=4)
    assert report.passed
    assert report.residual < 1e-8
    # direct check on the slow eigenvalue log at a sample wavevector
    series = slow_log_series(amplification_series(reference_scheme))
    k = [1e-3, 5e-4]
    exact = sum(complex(CRat.coerce(c)) * k[0] ** b[0] * k[1] ** b[1]
                for b, c in series.terms.items())
    symbol = amplification_exact(reference_scheme, k)
    eigvals = np.linalg.eigvals(symbol)
    slow = eigvals[np.argmin(np.abs(eigvals - 1.0))]
    assert abs(np.log(slow) - exact) < 1e-10


def test_numeric_degree2_fit_on_small_circle(reference_scheme):
    angles = np.linspace(0.0, 2 * np.pi, 24, endpoint=False)
    samples = [[1e-2 * np.cos(a), 1e-2 * np.sin(a)] for a in angles]
    samples += [[5e-3 * np.cos(a), 5e-3 * np.sin(a)] for a in angles]
    fit = slow_subspace_series_numeric(reference_scheme, samples, degree=2,
                                       guard_degrees=2)
    result = expand(reference_scheme, 2)
    for beta in ((2, 0), (1, 1), (0, 2)):
        predicted = engine_coefficient_numeric(result, beta, 0, 0)
        assert abs(fit.coefficient(beta)[0, 0] - predicted) < 1e-8


def test_numeric_two_conserved_toy():
    report = verify_numeric(builtin_d1q3_acoustics(), order=4)
    assert report.passed
    assert report.residual < 1e-8
    assert report.cond < 1e6


def test_numeric_zero_velocity_scheme_fits_zero():
    base = builtin_d1q3_acoustics()
    zeroed = LatticeScheme(
        d=1, q=3, lam=1, velocities=((0,), (0,), (0,)),
        moment_matrix=base.moment_matrix, n_c=2,
        equilibrium_jacobian=base.equilibrium_jacobian,
        equilibrium_offset=base.equilibrium_offset, rates=base.rates,
        base_state=base.base_state)
    samples = [[k] for k in np.linspace(-1e-2, 1e-2, 9) if k]
    fit = slow_subspace_series_numeric(zeroed, samples, degree=4, guard_degrees=2)
    for beta, values in fit.coeffs.items():
        assert np.all(np.abs(values) < 1e-12), beta


def test_verify_dispatches_by_conserved_count(reference_scheme):
    assert verify_expansion(reference_scheme).mode == "exact"
    assert verify_expansion(builtin_d1q3_acoustics()).mode == "numeric"


def test_exact_symbol_matches_series_at_small_k(reference_scheme):
    """The degree-4 truncation approximates the exact symbol to O(k^5)."""
    series = amplification_series(reference_scheme)
    for k in ([1e-2, 0.0], [3e-3, -2e-3]):
        exact = amplification_exact(reference_scheme, k)
        truncated = np.array([
            [complex(CRat.coerce(series.matrix[r][c].evaluate(
                [Fraction(ki).limit_denominator(10 ** 12) for ki in k])))
             for c in range(9)] for r in range(9)])
        assert np.max(np.abs(exact - truncated)) < 5e3 * np.linalg.norm(k) ** 5


def test_zero_rate_guard_raises_degenerate_error(reference_scheme):
    import dataclasses
    from lbpde.dispersion import DegenerateEigenvalueError

    series = amplification_series(reference_scheme)
    broken = object.__new__(type(reference_scheme))
    for field in dataclasses.fields(reference_scheme):
        object.__setattr__(broken, field.name, getattr(reference_scheme, field.name))
    object.__setattr__(broken, "rates", (Fraction(0),) * 8)
    with pytest.raises(DegenerateEigenvalueError):
        slow_log_series(dataclasses.replace(series, scheme=broken))


def test_degree2_part_is_dissipative_for_reference_scheme(reference_scheme):
    """Evaluated at real wavevectors, the quadratic part of ln mu has a
    nonpositive real part when every rate is inside (0, 2)."""
    series = slow_log_series(amplification_series(reference_scheme))
    quadratic = series.degree_part(2)
    rng = np.random.default_rng(5)
    for _ in range(20):
        k = rng.normal(size=2)
        value = sum(complex(CRat.coerce(c)) * k[0] ** b[0] * k[1] ** b[1]
                    for b, c in quadratic.items())
        assert value.real <= 1e-15


def test_verify_exact_at_lower_orders(reference_scheme):
    for order in (1, 2, 3):
        report = verify_exact(reference_scheme, order=order)
        assert report.passed and report.order == order


def test_series_equivalence_with_duplicate_velocities():
    """Two populations sharing a velocity (several distributions in one
    scheme) go through the same analysis unchanged."""
    scheme = LatticeScheme(
        d=1, q=3, lam=1, velocities=((1,), (1,), (-1,)),
        moment_matrix=((1, 1, 1), (0, 1, -1), (0, 1, 1)), n_c=1,
        equilibrium_jacobian=((Fraction(1, 10),), (Fraction(1, 3),)),
        equilibrium_offset=(0, 0), rates=(Fraction(6, 5), Fraction(7, 5)),
        base_state=(1,))
    report = verify_exact(scheme, order=4)
    assert report.passed, report.summary()
