"""bolab: a desk-scale numerical laboratory for Benjamin-Ono soliton
dynamics in slowly varying potentials.

Submodules, roughly bottom-up:

    grid          periodic grid, multiplier operators, norms
    soliton       the soliton family, eigenfunctions, exact integral table
    potential     compactly supported slowly varying potentials
    operators     linearized operators, dual variable, commutator probe
    spectral      dense spectra and constrained coercivity
    evolution     perturbed / free / linearized time integration
    modulation    soliton-parameter extraction and tracking
    trajectories  reference and corrected parameter ODE systems
    virial        local-smoothing and monotonicity diagnostics
    experiments   sweeps, scaling fits, reporting
    cli           command-line interface
"""

__version__ = "0.1.0"

from .errors import (BolabError, ConfigurationError, DecompositionError,
                     DiagnosticError, EvolutionError, ExperimentError,
                     UsageError)
from .grid import (Field, Grid, LocalizerSpec, cell_l2_profile, derivative,
                   dgamma_inverse, fractional_derivative, hilbert, inner,
                   integral, l2_norm, local_sup_norm, localizer, make_grid,
                   sobolev_norm, translate, weighted_l2_norm)
from .soliton import (ClosedFormTable, SolitonParams, closed_form_table,
                      eigenfunction_field, soliton_field, soliton_residual)
from .potential import PotentialSpec
from .operators import (CommutatorProbeResult, OperatorSpec, apply_operator,
                        commutator_probe, quadratic_form)
from .spectral import (DenseOperator, EigenReport, angle_lemma_bound,
                       constrained_min_rayleigh, discretize,
                       spectrum_below_continuum)
from .evolution import (EvolutionState, InvariantReport, evolve_linearized,
                        evolve_pbo, invariants, read_checkpoint, step_linearized,
                        step_pbo, write_checkpoint)
from .modulation import (ConversionReport, Decomposition, ParameterTrack,
                         convert_decompositions, decompose, e2_remainder,
                         track_parameters)
from .trajectories import (GronwallReport, TrajectoryState, convert_frame,
                           gronwall_compare, gronwall_sweep,
                           integrate_exact, integrate_reference)
from .virial import (LinearizedRunSpec, MonotonicitySpec, VirialReport,
                     g_remainder, local_smoothing_lhs, monotonicity_mass,
                     virial_sweep)
from .experiments import (ExperimentConfig, RunSummary, fit_scaling_exponent,
                          ode_residuals, run_theorem_sweep)
