"""Spectral analysis of the free-surface Stokes operator on a periodic liquid cylinder.

The package discretizes velocity fields on the domain {x^2 + y^2 < kappa^2}
x (0, ell) with an axially periodic free surface at r = kappa, and provides
the Helmholtz projection, per-mode elliptic solves, assembly of the projected
Stokes operator -mu*P*Laplacian + grad(Q), its spectrum and resolvent, and
linearized time evolution with energy monitoring.
"""

import os as _os

# Pin BLAS thread pools before numpy is imported anywhere downstream. Keeps
# factorizations bitwise deterministic across runs and honors the
# single-threaded runtime budget. Effective whenever this package is imported
# before numpy (always true for the CLI entry point).
for _var in (
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "OMP_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
    "VECLIB_MAXIMUM_THREADS",
):
    _os.environ.setdefault(_var, "1")
del _os, _var

__version__ = "0.1.0"

from .config import ConfigError, DomainConfig, RunConfig, default_run_config, load_run_config
from .workspace import Workspace
from .fields import (
    ScalarField,
    SobolevIndex,
    TraceField,
    VectorField,
    analyze,
    div,
    grad,
    inner_product_Hkp,
    laplacian,
    norm_L2,
    norm_Hkp,
    periodicity_defect,
    sym_grad,
    synthesize,
    trace_SF,
)
from .fieldio import read_field, read_matrix, write_field, write_matrix
from .modesolve import RadialOperator, harmonic_extension, solve_mode_dirichlet, stability_constant
from .helmholtz import DecompositionResult, operator_Q, project_P, projector_norm_Hk
from .stokesop import (
    ModeOperator,
    Traction,
    apply_A,
    assemble_A,
    build_constrained_basis,
    form_value,
    mode_operator,
    tangential_traction,
    traction,
)
from .spectral import (
    ResolventSample,
    SpectralReport,
    eigensolve,
    kernel_dimension,
    resolve,
    resolvent_sweep,
)
from .evolution import (
    EnergyTrace,
    EvolutionConfig,
    EvolutionResult,
    estimate_report,
    evolve,
    recover_pressure,
)
