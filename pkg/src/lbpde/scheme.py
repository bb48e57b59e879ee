"""Definition and validation of multi-relaxation-time lattice Boltzmann schemes.

A scheme is fully specified by its velocity set, the moment matrix, the
split into conserved and nonconserved moments, the frozen linearization
(Jacobian + offset) of the equilibrium map at a base state, and one
relaxation rate per nonconserved moment.  All data is exact rational so
the derived operators are exact and golden tests are equality tests.

The equilibrium is stored *linearized*: analyses downstream only ever use
the Jacobian at a constant state, and affine offsets drop out of every
derivative, so nothing is lost for the dispersion/expansion machinery.
Genuinely nonlinear equilibria are out of scope by design.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Sequence, Tuple

from .exact import mat_det, mat_inv, mat_vec

RatMatrix = Tuple[Tuple[Fraction, ...], ...]
RatVector = Tuple[Fraction, ...]


class SchemeError(ValueError):
    """Hard validation failure while building or using a scheme."""


class StabilityWarning(UserWarning):
    """A relaxation rate lies outside the linearly stable interval (0, 2)."""


def _rat_matrix(rows) -> RatMatrix:
    return tuple(tuple(Fraction(v) for v in row) for row in rows)


def _rat_vector(values) -> RatVector:
    return tuple(Fraction(v) for v in values)


@dataclass(frozen=True)
class MomentSplit:
    """Index split of the moment vector into conserved and nonconserved parts."""

    w_indices: Tuple[int, ...]
    y_indices: Tuple[int, ...]

    def __post_init__(self):
        overlap = set(self.w_indices) & set(self.y_indices)
        if overlap:
            raise SchemeError(f"moment split overlaps at {sorted(overlap)}")


@dataclass(frozen=True)
class LatticeScheme:
    """One MRT lattice Boltzmann scheme, frozen and exact.

    Velocities are stored in units of the lattice speed `lam` (= dx/dt);
    the physical velocity of particle j is lam * velocities[j].  The first
    `n_c` rows of `moment_matrix` define the conserved moments.
    """

    d: int
    q: int
    lam: Fraction
    velocities: Tuple[RatVector, ...]
    moment_matrix: RatMatrix
    n_c: int
    equilibrium_jacobian: RatMatrix
    equilibrium_offset: RatVector
    rates: RatVector
    base_state: RatVector
    parameters: Tuple[Tuple[str, Fraction], ...] = ()
    moment_names: Tuple[str, ...] = ()

    def __post_init__(self):
        # normalize to hashable exact-rational tuples regardless of caller input
        object.__setattr__(self, "lam", Fraction(self.lam))
        object.__setattr__(self, "velocities", _rat_matrix(self.velocities))
        object.__setattr__(self, "moment_matrix", _rat_matrix(self.moment_matrix))
        object.__setattr__(self, "equilibrium_jacobian",
                           _rat_matrix(self.equilibrium_jacobian))
        object.__setattr__(self, "equilibrium_offset", _rat_vector(self.equilibrium_offset))
        object.__setattr__(self, "rates", _rat_vector(self.rates))
        object.__setattr__(self, "base_state", _rat_vector(self.base_state))
        object.__setattr__(self, "parameters",
                           tuple((str(k), Fraction(v)) for k, v in self.parameters))
        object.__setattr__(self, "moment_names", tuple(self.moment_names))
        if self.d < 1 or self.q < 1:
            raise SchemeError("dimension and velocity count must be positive")
        if not 1 <= self.n_c <= self.q:
            raise SchemeError(f"conserved count {self.n_c} out of range 1..{self.q}")
        if self.lam <= 0:
            raise SchemeError("lattice speed must be positive")
        if len(self.velocities) != self.q or any(len(v) != self.d for v in self.velocities):
            raise SchemeError("velocity table must be q vectors of d entries")
        if len(self.moment_matrix) != self.q or any(len(r) != self.q for r in self.moment_matrix):
            raise SchemeError("moment matrix must be q x q")
        ny = self.q - self.n_c
        if len(self.equilibrium_jacobian) != ny or any(
            len(r) != self.n_c for r in self.equilibrium_jacobian
        ):
            raise SchemeError("equilibrium Jacobian must be (q - n_c) x n_c")
        if len(self.equilibrium_offset) != ny:
            raise SchemeError("equilibrium offset must have q - n_c entries")
        if len(self.rates) != ny:
            raise SchemeError("need one relaxation rate per nonconserved moment")
        if any(s <= 0 for s in self.rates):
            raise SchemeError("relaxation rates must be positive")
        if len(self.base_state) != self.n_c:
            raise SchemeError("base state must have n_c entries")
        if self.moment_names and len(self.moment_names) != self.q:
            raise SchemeError("moment names must cover all q moments")
        if not self.moment_names:
            object.__setattr__(self, "moment_names",
                               tuple(f"m{i}" for i in range(self.q)))
        for s in self.rates:
            if not 0 < s < 2:
                warnings.warn(f"relaxation rate {s} outside (0, 2)", StabilityWarning,
                              stacklevel=2)

    # -- derived views --

    @property
    def n_y(self) -> int:
        return self.q - self.n_c

    def moment_split(self) -> MomentSplit:
        return MomentSplit(tuple(range(self.n_c)), tuple(range(self.n_c, self.q)))

    def physical_velocities(self) -> list:
        return [[self.lam * v for v in vel] for vel in self.velocities]

    def parameter_map(self) -> Mapping[str, Fraction]:
        return dict(self.parameters)

    def conserved_names(self) -> Tuple[str, ...]:
        return self.moment_names[: self.n_c]

    def with_rates(self, rates) -> "LatticeScheme":
        return replace(self, rates=_rat_vector(rates))

    def reversed_velocities(self) -> "LatticeScheme":
        return replace(self, velocities=tuple(tuple(-v for v in vel)
                                              for vel in self.velocities))

    # -- exact kinetics --

    def equilibrium_y(self, w: Sequence[Fraction]) -> list:
        """Linearized equilibrium value of the nonconserved moments."""
        ey = mat_vec(self.equilibrium_jacobian, list(w)) if self.n_y else []
        return [v + off for v, off in zip(ey, self.equilibrium_offset)]

    def relax_moments(self, m: Sequence[Fraction]) -> list:
        """One relaxation: conserved part kept, Y moved toward equilibrium."""
        if len(m) != self.q:
            raise SchemeError("moment vector length mismatch")
        w = list(m[: self.n_c])
        y = list(m[self.n_c:])
        yeq = self.equilibrium_y(w)
        ystar = [yi + s * (ye - yi) for yi, ye, s in zip(y, yeq, self.rates)]
        return w + ystar

    def equilibrium_moments(self, w: Sequence[Fraction]) -> list:
        return list(w) + self.equilibrium_y(w)


@lru_cache(maxsize=64)
def _moment_matrix_inverse(scheme: LatticeScheme):
    return mat_inv(scheme.moment_matrix)


def moments_of(scheme: LatticeScheme, f: Sequence[Fraction]) -> list:
    """m = M f, exactly."""
    if len(f) != scheme.q:
        raise SchemeError(f"expected {scheme.q} particle values, got {len(f)}")
    return mat_vec(scheme.moment_matrix, list(f))


def particles_of(scheme: LatticeScheme, m: Sequence[Fraction]) -> list:
    """f = Minv m, exactly; inverse of moments_of."""
    if len(m) != scheme.q:
        raise SchemeError(f"expected {scheme.q} moment values, got {len(m)}")
    return mat_vec(_moment_matrix_inverse(scheme), list(m))


@dataclass(frozen=True)
class ValidationReport:
    """Report-style validation: errors break the contracts, warnings do not."""

    errors: Tuple[str, ...]
    warnings: Tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.errors


def validate(scheme: LatticeScheme) -> ValidationReport:
    """Check the scheme invariants; never raises."""
    errors = []
    warns = []
    det = mat_det(scheme.moment_matrix)
    if det == 0:
        errors.append("M singular")
    for k, s in enumerate(scheme.rates):
        if s <= 0:
            errors.append(f"rate s_{k} = {s} not positive")
        elif not 0 < s < 2:
            warns.append(f"rate s_{k} = {s} outside (0,2)")
    # relaxation must fix the equilibrium exactly
    meq = scheme.equilibrium_moments(scheme.base_state)
    if scheme.relax_moments(meq) != meq:
        errors.append("equilibrium is not a fixed point of relaxation")
    return ValidationReport(tuple(errors), tuple(warns))


# -- built-in schemes -------------------------------------------------------

#: moment ordering for the nine-velocity scheme: density, momentum pair,
#: energy, the two second-order stress-like moments, energy flux pair,
#: fourth-order moment.
D2Q9_MOMENT_NAMES = ("rho", "jx", "jy", "e", "xx", "xy", "qx", "qy", "h")

_D2Q9_VELOCITIES = (
    (0, 0), (1, 0), (0, 1), (-1, 0), (0, -1), (1, 1), (-1, 1), (-1, -1), (1, -1),
)


def _d2q9_moment_matrix(lam: Fraction) -> RatMatrix:
    l1, l2, l3, l4 = lam, lam ** 2, lam ** 3, lam ** 4
    return _rat_matrix([
        [1, 1, 1, 1, 1, 1, 1, 1, 1],
        [0, l1, 0, -l1, 0, l1, -l1, -l1, l1],
        [0, 0, l1, 0, -l1, l1, l1, -l1, -l1],
        [-4 * l2, -l2, -l2, -l2, -l2, 2 * l2, 2 * l2, 2 * l2, 2 * l2],
        [0, l2, -l2, l2, -l2, 0, 0, 0, 0],
        [0, 0, 0, 0, 0, l2, -l2, l2, -l2],
        [0, -2 * l3, 0, 2 * l3, 0, l3, -l3, -l3, l3],
        [0, 0, -2 * l3, 0, 2 * l3, l3, l3, -l3, -l3],
        [4 * l4, -2 * l4, -2 * l4, -2 * l4, -2 * l4, l4, l4, l4, l4],
    ])


def builtin_d2q9(lam=1, u=0, v=0, alpha=0, rates=(1,) * 8) -> LatticeScheme:
    """Nine-velocity advection-diffusion scheme with a single conserved moment.

    The equilibrium is linear in the density: momentum (u, v) * rho, energy
    alpha * lam**2 * rho, stress moments (u**2 - v**2) * rho and u*v * rho,
    zero energy flux and zero fourth-order moment.  `rates` follows the
    nonconserved moment order (jx, jy, e, xx, xy, qx, qy, h).
    """
    lam, u, v, alpha = Fraction(lam), Fraction(u), Fraction(v), Fraction(alpha)
    rates = _rat_vector(rates)
    if len(rates) != 8:
        raise SchemeError("the nine-velocity scheme needs 8 relaxation rates")
    jacobian = _rat_matrix([
        [u], [v], [alpha * lam ** 2], [u * u - v * v], [u * v], [0], [0], [0],
    ])
    return LatticeScheme(
        d=2,
        q=9,
        lam=lam,
        velocities=_rat_matrix(_D2Q9_VELOCITIES),
        moment_matrix=_d2q9_moment_matrix(lam),
        n_c=1,
        equilibrium_jacobian=jacobian,
        equilibrium_offset=_rat_vector([0] * 8),
        rates=rates,
        base_state=_rat_vector([1]),
        parameters=(("u", u), ("v", v), ("alpha", alpha)),
        moment_names=D2Q9_MOMENT_NAMES,
    )


def builtin_d1q3(lam=1, u=0, alpha=Fraction(1, 3), rates=(1, 1)) -> LatticeScheme:
    """Three-velocity scalar advection-diffusion scheme in one dimension.

    Moments are (density, momentum, energy); the equilibrium carries
    momentum u * rho and energy alpha * lam**2 * rho.
    """
    lam, u, alpha = Fraction(lam), Fraction(u), Fraction(alpha)
    rates = _rat_vector(rates)
    if len(rates) != 2:
        raise SchemeError("the three-velocity scalar scheme needs 2 rates")
    l2 = lam ** 2
    return LatticeScheme(
        d=1,
        q=3,
        lam=lam,
        velocities=_rat_matrix([[0], [1], [-1]]),
        moment_matrix=_rat_matrix([[1, 1, 1], [0, lam, -lam], [0, l2, l2]]),
        n_c=1,
        equilibrium_jacobian=_rat_matrix([[u], [alpha * l2]]),
        equilibrium_offset=_rat_vector([0, 0]),
        rates=rates,
        base_state=_rat_vector([1]),
        parameters=(("u", u), ("alpha", alpha)),
        moment_names=("rho", "j", "e"),
    )


def builtin_d1q3_acoustics(lam=1, c2=Fraction(1, 3), rate=Fraction(3, 2)) -> LatticeScheme:
    """Three-velocity scheme with two conserved moments (density, momentum).

    Only the energy relaxes; its equilibrium c2 * lam**2 * rho closes a
    damped wave system.  Used to exercise the multi-conserved analysis path.
    """
    lam, c2 = Fraction(lam), Fraction(c2)
    l2 = lam ** 2
    return LatticeScheme(
        d=1,
        q=3,
        lam=lam,
        velocities=_rat_matrix([[0], [1], [-1]]),
        moment_matrix=_rat_matrix([[1, 1, 1], [0, lam, -lam], [0, l2, l2]]),
        n_c=2,
        equilibrium_jacobian=_rat_matrix([[c2 * l2, 0]]),
        equilibrium_offset=_rat_vector([0]),
        rates=_rat_vector([rate]),
        base_state=_rat_vector([1, 0]),
        parameters=(("c2", c2),),
        moment_names=("rho", "j", "e"),
    )


#: Reference parameter binding used across the documentation and tests.
D2Q9_REFERENCE_RATES = (
    Fraction(6, 5), Fraction(6, 5), Fraction(7, 5), Fraction(8, 5),
    Fraction(8, 5), Fraction(9, 5), Fraction(9, 5), Fraction(1),
)


def d2q9_reference() -> LatticeScheme:
    return builtin_d2q9(lam=1, u=Fraction(1, 10), v=0, alpha=1,
                        rates=D2Q9_REFERENCE_RATES)


BUILTIN_SCHEMES = {
    "d2q9-advection": (d2q9_reference,
                       "nine-velocity scalar advection-diffusion (reference binding)"),
    "d1q3-advection": (lambda: builtin_d1q3(u=Fraction(1, 10), alpha=Fraction(1, 3),
                                            rates=(Fraction(6, 5), Fraction(7, 5))),
                       "three-velocity scalar advection-diffusion"),
    "d1q3-acoustics": (builtin_d1q3_acoustics,
                       "three-velocity damped wave system, two conserved moments"),
}


def builtin_scheme(name: str) -> LatticeScheme:
    try:
        factory, _ = BUILTIN_SCHEMES[name]
    except KeyError:
        raise SchemeError(f"unknown builtin scheme {name!r}; "
                          f"available: {', '.join(sorted(BUILTIN_SCHEMES))}") from None
    return factory()
