"""Equivalent-PDE analysis of multi-relaxation-time lattice Boltzmann schemes.

Three independent routes to the same physics are implemented and cross
checked: an exact fourth-order operator expansion of the update rule, an
exact dispersion series of the one-step Fourier symbol, and direct
simulation on periodic lattices.
"""

from .diffop import (BlockPowers, Blocks, DegreeCapError, DiffPoly, OpMatrix,
                     apply_planewave, block_powers, block_split, build_lambda)
from .dispersion import (AmplificationSeries, DispersionSeries, NumericSeriesFit,
                         VerifyReport, amplification_exact, amplification_series,
                         compare_series, relaxation_matrix, slow_log_series,
                         slow_subspace_series_numeric, verify_expansion)
from .exact import CRat, SingularMatrixError, format_rational, parse_rational
from .expansion import (BGKReport, EquivalentPDE, ExpansionResult, HenonMatrix,
                        assemble_pde, bgk_reduce_check, expand, pde_from_json,
                        pde_to_json, render_pde)
from .scheme import (BUILTIN_SCHEMES, LatticeScheme, MomentSplit, SchemeError,
                     StabilityWarning, ValidationReport, builtin_d1q3,
                     builtin_d1q3_acoustics, builtin_d2q9, builtin_scheme,
                     d2q9_reference, moments_of, particles_of, validate)
from .schemefile import dump_scheme, load_scheme, save_scheme
from .simulate import (Grid, ModeMeasurement, SimReport, convergence_study,
                       fourier_mode_deviation, measure_mode, mode_moment_history,
                       sinusoidal_mode, step, stream, uniform_equilibrium)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
