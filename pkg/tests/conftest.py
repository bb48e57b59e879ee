import random
import warnings
from fractions import Fraction

import pytest

from lbpde.exact import mat_det
from lbpde.scheme import (D2Q9_REFERENCE_RATES, LatticeScheme, StabilityWarning,
                          builtin_d2q9, d2q9_reference)


@pytest.fixture
def reference_scheme():
    return d2q9_reference()


@pytest.fixture
def symmetric_scheme():
    """Reference rates with zero advection velocity (gamma_3 vanishes)."""
    return builtin_d2q9(lam=1, u=0, v=0, alpha=1, rates=D2Q9_REFERENCE_RATES)


def make_random_scheme(rng: random.Random, d=None, q=None, n_c=None) -> LatticeScheme:
    """Random small exact-rational scheme with an invertible moment matrix."""
    d = d if d is not None else rng.choice([1, 2])
    q = q if q is not None else rng.randint(3, 5)
    n_c = n_c if n_c is not None else rng.randint(1, q - 1)
    while True:
        m = [[Fraction(rng.randint(-3, 3)) for _ in range(q)] for _ in range(q)]
        if mat_det(m) != 0:
            break
    velocities = [[Fraction(rng.randint(-2, 2)) for _ in range(d)] for _ in range(q)]
    jacobian = [[Fraction(rng.randint(-2, 2), rng.randint(1, 3)) for _ in range(n_c)]
                for _ in range(q - n_c)]
    rates = [Fraction(rng.randint(1, 19), 10) for _ in range(q - n_c)]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", StabilityWarning)
        return LatticeScheme(
            d=d, q=q, lam=Fraction(rng.randint(1, 3)), velocities=velocities,
            moment_matrix=m, n_c=n_c, equilibrium_jacobian=jacobian,
            equilibrium_offset=[Fraction(0)] * (q - n_c), rates=rates,
            base_state=[Fraction(1)] * n_c)


@pytest.fixture
def random_scheme_factory():
    return make_random_scheme
