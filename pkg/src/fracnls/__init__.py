"""Odd periodic standing waves of the defocusing fractional cubic NLS equation.

The pipeline: :mod:`fracnls.wave` builds the wave by Newton-GMRES continuation,
:mod:`fracnls.linops` counts negative and kernel eigenvalues of the linearized
operators in each parity sector, and :mod:`fracnls.krein` turns those counts and the
V-matrix signs into a Krein-index verdict. :mod:`fracnls.elliptic` supplies the exact
``s = 1`` solution used as an oracle.
"""

from .elliptic import EllipticParams, complete_k, exact_profile, jacobi_sn, k_of_omega, omega_of_k
from .errors import (
    ContinuationError,
    ConvergenceError,
    DomainError,
    FracNLSError,
    NumericalError,
    ShapeError,
    TrivialSolutionError,
)
from .grid import (
    PeriodicGrid,
    RealField,
    derivative,
    frac_laplacian,
    inner_product,
    parity_project,
)
from .krein import KreinReport, analyze_wave, dnorm_domega, krein_verdict, v_even, v_odd
from .linops import LinearizedOperator, SpectrumReport, apply, assemble, eig_counts
from .wave import (
    ContinuationRun,
    SolverConfig,
    WaveProfile,
    continue_in_omega,
    lobe_check,
    newton_solve,
    residual,
    solve_wave,
    stokes_seed,
)

__version__ = "0.1.0"
