"""Fourth-order multiscale expansion of a scheme into its equivalent PDE.

The one-step update, written in moment space, expands into a hierarchy of
operator identities on the conserved moments: at each order j a spatial
operator gamma_j (acting on the conserved moments) and a correction psi_j
(feeding the nonconserved moments) are produced by closed recursions in
the ABCD blocks of the advection operator and the relaxation-shift
diagonal sigma_k = 1/s_k - 1/2.

Everything here works at a frozen linearization point: the equilibrium
enters only through its Jacobian, so every formal derivative of a map
along a direction collapses to a composition of constant-coefficient
operator matrices.  That is exactly the setting required by linear
dispersion analysis, and it keeps all results exact rationals.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Mapping, Sequence, Tuple

from .diffop import (DEFAULT_DEGREE_CAP, Beta, DegreeCapError, DiffPoly, OpMatrix,
                     _glex_key, block_powers, build_lambda)
from .exact import format_rational, mat_inv, mat_vec
from .scheme import LatticeScheme, SchemeError

MAX_ORDER = 4


@dataclass(frozen=True)
class HenonMatrix:
    """Diagonal relaxation-shift matrix with entries 1/s_k - 1/2."""

    sigmas: Tuple[Fraction, ...]

    def __post_init__(self):
        if any(sigma <= Fraction(-1, 2) for sigma in self.sigmas):
            raise SchemeError("relaxation shifts must exceed -1/2 (rates positive)")

    @classmethod
    def from_rates(cls, rates: Sequence[Fraction]) -> "HenonMatrix":
        return cls(tuple(1 / Fraction(s) - Fraction(1, 2) for s in rates))

    def as_operator(self, dim, cap=DEFAULT_DEGREE_CAP) -> OpMatrix:
        return OpMatrix.diagonal(
            [DiffPoly.const(sigma, dim, cap) for sigma in self.sigmas], dim=dim, cap=cap)


@dataclass(frozen=True)
class ExpansionResult:
    """Operators of the equivalent dynamics, by order in the time step.

    gamma[j] is n_c x n_c and homogeneous of derivative degree j; psi[j]
    is (q - n_c) x n_c and likewise homogeneous of degree j.
    """

    scheme: LatticeScheme
    order: int
    gamma: Mapping[int, OpMatrix]
    psi: Mapping[int, OpMatrix]

    def gamma_entry(self, j, row=0, col=0) -> DiffPoly:
        return self.gamma[j][row][col]


def expand(scheme: LatticeScheme, order: int = MAX_ORDER, cap=None) -> ExpansionResult:
    """Compute gamma_1..gamma_order and psi_1..psi_(order-1) exactly.

    Orders above four are rejected rather than extrapolated.  A degree cap
    below the requested order cannot represent the result and raises
    DegreeCapError instead of silently truncating.
    """
    if not 1 <= order <= MAX_ORDER:
        raise ValueError(f"expansion order must be 1..{MAX_ORDER}, got {order}")
    cap = DEFAULT_DEGREE_CAP if cap is None else cap
    if cap < order:
        raise DegreeCapError(f"degree cap {cap} cannot hold an order-{order} expansion")

    lam_op = build_lambda(scheme, cap=cap)
    # the recursions only ever use first- and second-power blocks
    powers = block_powers(lam_op, scheme.n_c, up_to=1 if order <= 2 else 2)
    blocks = powers[1]
    a, b, c, d = blocks.a, blocks.b, blocks.c, blocks.d
    dim = scheme.d

    eq = OpMatrix.from_scalars(scheme.equilibrium_jacobian, dim, cap,
                               cols=scheme.n_c)
    sigma = HenonMatrix.from_rates(scheme.rates).as_operator(dim, cap)

    gamma: Dict[int, OpMatrix] = {}
    psi: Dict[int, OpMatrix] = {}

    gamma[1] = a + b @ eq
    if order >= 2:
        psi[1] = eq @ gamma[1] - (c + d @ eq)
        gamma[2] = b @ sigma @ psi[1]
    if order >= 3:
        b2 = powers[2].b
        psi[2] = sigma @ psi[1] @ gamma[1] + eq @ gamma[2] - d @ sigma @ psi[1]
        gamma[3] = (b @ sigma @ psi[2]
                    - Fraction(1, 6) * (b @ psi[1] @ gamma[1])
                    + Fraction(1, 12) * (b2 @ psi[1]))
    if order >= 4:
        b2, d2 = powers[2].b, powers[2].d
        psi[3] = (sigma @ psi[1] @ gamma[2]
                  + eq @ gamma[3]
                  - d @ sigma @ psi[2]
                  + sigma @ psi[2] @ gamma[1]
                  + Fraction(1, 6) * (d @ psi[1] @ gamma[1])
                  - Fraction(1, 12) * (d2 @ psi[1])
                  - Fraction(1, 12) * (psi[1] @ gamma[1] @ gamma[1]))
        gamma[4] = (b @ sigma @ psi[3]
                    + Fraction(1, 4) * (b2 @ psi[2])
                    + Fraction(1, 6) * (b @ d2 @ sigma @ psi[1])
                    - Fraction(1, 6) * (a @ b @ psi[2])
                    - Fraction(1, 6) * (b @ eq @ gamma[1] @ gamma[2])
                    - Fraction(1, 6) * (b @ eq @ gamma[2] @ gamma[1])
                    - Fraction(1, 6) * (b @ sigma @ psi[1] @ gamma[1] @ gamma[1]))

    for j, op in gamma.items():
        if op.any_truncated():
            raise DegreeCapError(f"degree cap {cap} truncated gamma_{j}")
        if not op.is_homogeneous(j):
            raise RuntimeError(f"gamma_{j} is not homogeneous of degree {j}")
    for j, op in psi.items():
        if op.any_truncated():
            raise DegreeCapError(f"degree cap {cap} truncated psi_{j}")
        if not op.is_homogeneous(j):
            raise RuntimeError(f"psi_{j} is not homogeneous of degree {j}")

    return ExpansionResult(scheme=scheme, order=order, gamma=gamma, psi=psi)


# -- equivalent PDE assembly and rendering ----------------------------------


@dataclass(frozen=True)
class PDETerm:
    """One right-hand-side term of d_t W_target = sum coef dt^n D^beta W_source."""

    target: int
    dt_order: int
    beta: Beta
    source: int
    coef: Fraction


@dataclass(frozen=True)
class EquivalentPDE:
    """Per conserved moment, the expansion of d_t W as graded spatial terms."""

    dim: int
    n_c: int
    order: int
    moment_names: Tuple[str, ...]
    terms: Tuple[PDETerm, ...]

    def terms_for(self, target: int) -> Tuple[PDETerm, ...]:
        return tuple(t for t in self.terms if t.target == target)


def assemble_pde(result: ExpansionResult, scheme: LatticeScheme) -> EquivalentPDE:
    """Collect d_t W = -sum_j dt**(j-1) gamma_j W as a sorted term list."""
    terms = []
    for j in sorted(result.gamma):
        op = result.gamma[j]
        for i in range(op.rows):
            for col in range(op.cols):
                for beta, coef in op.entries[i][col].terms.items():
                    terms.append(PDETerm(target=i, dt_order=j - 1, beta=beta,
                                         source=col, coef=-coef))
    terms.sort(key=lambda t: (t.target, t.dt_order, _glex_key(t.beta), t.source))
    return EquivalentPDE(dim=scheme.d, n_c=scheme.n_c, order=result.order,
                         moment_names=scheme.conserved_names(), terms=tuple(terms))


_AXIS_NAMES = ("x", "y", "z")


def _axis_symbols(dim, prefix="∂"):
    if dim <= 3:
        return tuple(f"{prefix}{_AXIS_NAMES[i]}" for i in range(dim))
    return tuple(f"{prefix}x{i + 1}" for i in range(dim))


def _derivative_text(beta, symbols) -> str:
    parts = []
    for axis, power in enumerate(beta):
        if power == 1:
            parts.append(symbols[axis])
        elif power > 1:
            parts.append(f"{symbols[axis]}^{power}")
    return " ".join(parts)


def render_pde_text(pde: EquivalentPDE) -> str:
    """Plain-text rendering, one equation per conserved moment.

    Terms are printed on the left-hand side (so with the sign of gamma),
    matching the form  d_t W + gamma_1 W + dt gamma_2 W + ... = O(dt^order).
    """
    symbols = _axis_symbols(pde.dim)
    lines = []
    for target in range(pde.n_c):
        name = pde.moment_names[target]
        pieces = [f"∂t {name}"]
        for term in pde.terms_for(target):
            lhs_coef = -term.coef
            sign = "-" if lhs_coef < 0 else "+"
            factors = []
            if term.dt_order == 1:
                factors.append("Δt")
            elif term.dt_order > 1:
                factors.append(f"Δt^{term.dt_order}")
            factors.append(f"({format_rational(abs(lhs_coef))})")
            factors.append(_derivative_text(term.beta, symbols))
            factors.append(pde.moment_names[term.source])
            pieces.append(f"{sign} " + " ".join(factors))
        lines.append(" ".join(pieces) + f" = O(Δt^{pde.order})")
    return "\n".join(lines)


_GREEK = {"rho": r"\rho", "e": r"\varepsilon", "alpha": r"\alpha"}


def _latex_name(name: str) -> str:
    return _GREEK.get(name, rf"\mathrm{{{name}}}")


def _latex_rational(x: Fraction) -> str:
    if x.denominator == 1:
        return str(x.numerator)
    sign = "-" if x < 0 else ""
    return rf"{sign}\frac{{{abs(x.numerator)}}}{{{x.denominator}}}"


def render_pde_latex(pde: EquivalentPDE) -> str:
    symbols = _axis_symbols(pde.dim, prefix="")
    lines = []
    for target in range(pde.n_c):
        name = _latex_name(pde.moment_names[target])
        pieces = [rf"\partial_t {name}"]
        for term in pde.terms_for(target):
            lhs_coef = -term.coef
            sign = "-" if lhs_coef < 0 else "+"
            factors = []
            if term.dt_order == 1:
                factors.append(r"\Delta t\,")
            elif term.dt_order > 1:
                factors.append(rf"\Delta t^{{{term.dt_order}}}\,")
            factors.append(_latex_rational(abs(lhs_coef)) + r"\,")
            for axis, power in enumerate(term.beta):
                if power == 1:
                    factors.append(rf"\partial_{{{symbols[axis]}}}")
                elif power > 1:
                    factors.append(rf"\partial_{{{symbols[axis]}}}^{{{power}}}")
            factors.append(" " + _latex_name(pde.moment_names[term.source]))
            pieces.append(f"{sign} " + "".join(factors))
        lines.append(" ".join(pieces) + rf" = O(\Delta t^{{{pde.order}}})")
    return "\n".join(lines)


def pde_to_json(pde: EquivalentPDE) -> dict:
    equations = []
    for target in range(pde.n_c):
        equations.append({
            "moment": pde.moment_names[target],
            "terms": [
                {
                    "dt_order": t.dt_order,
                    "beta": list(t.beta),
                    "source": pde.moment_names[t.source],
                    "coef": format_rational(t.coef),
                }
                for t in pde.terms_for(target)
            ],
        })
    return {"dim": pde.dim, "order": pde.order,
            "conserved": list(pde.moment_names), "equations": equations}


def pde_from_json(data: Mapping) -> EquivalentPDE:
    names = tuple(data["conserved"])
    index = {name: i for i, name in enumerate(names)}
    terms = []
    for target, eq in enumerate(data["equations"]):
        for t in eq["terms"]:
            terms.append(PDETerm(target=target, dt_order=t["dt_order"],
                                 beta=tuple(t["beta"]), source=index[t["source"]],
                                 coef=Fraction(t["coef"])))
    return EquivalentPDE(dim=data["dim"], n_c=len(names), order=data["order"],
                         moment_names=names, terms=tuple(terms))


def render_pde(pde: EquivalentPDE, fmt: str) -> str:
    if fmt == "text":
        return render_pde_text(pde)
    if fmt == "latex":
        return render_pde_latex(pde)
    if fmt == "json":
        return json.dumps(pde_to_json(pde), indent=2, sort_keys=True)
    raise ValueError(f"unknown format {fmt!r}")


# -- single-relaxation-rate collapse check -----------------------------------


@dataclass(frozen=True)
class BGKReport:
    """Comparison of gamma_2 against the classical single-rate diffusion form."""

    sigma: Fraction
    matches: bool
    gamma2: OpMatrix
    expected: OpMatrix

    @property
    def difference(self) -> OpMatrix:
        return self.gamma2 - self.expected


def bgk_reduce_check(scheme: LatticeScheme) -> BGKReport:
    """Check gamma_2 against the single-rate second-order coefficient.

    For a scheme with one conserved moment that is the plain particle sum
    and all relaxation rates equal to s, the second-order operator must be
    -(1/s - 1/2) * d_a d_b [ sum_j v_j^a v_j^b c_j - u^a u^b ]  per unit of
    the conserved moment, where c holds the equilibrium populations and
    u^a their first moment.  The comparison is exact.
    """
    rates = set(scheme.rates)
    if len(rates) != 1:
        raise SchemeError("collapse check requires all relaxation rates equal")
    if scheme.n_c != 1:
        raise SchemeError("collapse check requires a single conserved moment")
    if any(entry != 1 for entry in scheme.moment_matrix[0]):
        raise SchemeError("collapse check requires the conserved moment "
                          "to be the particle sum (all-ones moment row)")
    s = rates.pop()
    sigma = 1 / s - Fraction(1, 2)

    # equilibrium populations per unit conserved moment (offsets drop under
    # the double derivative and are excluded on purpose)
    meq = [Fraction(1)] + [row[0] for row in scheme.equilibrium_jacobian]
    populations = mat_vec(mat_inv(scheme.moment_matrix), meq)
    velocities = scheme.physical_velocities()
    d = scheme.d
    mean_v = [sum((velocities[j][axis] * populations[j] for j in range(scheme.q)),
                  start=Fraction(0)) for axis in range(d)]

    terms = {}
    for a_axis in range(d):
        for b_axis in range(d):
            tab = sum((velocities[j][a_axis] * velocities[j][b_axis] * populations[j]
                       for j in range(scheme.q)), start=Fraction(0))
            tab -= mean_v[a_axis] * mean_v[b_axis]
            if not tab:
                continue
            beta = tuple(int(i == a_axis) + int(i == b_axis) for i in range(d))
            terms[beta] = terms.get(beta, Fraction(0)) - sigma * tab
    expected = OpMatrix([[DiffPoly(d, terms)]], dim=d)

    gamma2 = expand(scheme, order=2).gamma[2]
    return BGKReport(sigma=sigma, matches=(gamma2 == expected),
                     gamma2=gamma2, expected=expected)
