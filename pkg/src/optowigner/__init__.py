"""Mechanical Wigner negativity from pulsed and continuously driven optomechanics."""

__version__ = "0.1.0"

from .errors import (AccuracyError, DomainError, OptoWignerError, PreconditionError,
                     SolverError, StepSizeError, TruncationError, UnsupportedError)
from .response import SystemParams, phase, response
from .gaussian import GaussianState, matrix_element, squeezed_thermal, squeezing_db
from .wigner import (PhaseSpaceGrid, QuadratureSettings, WignerGrid, compute_wigner,
                     default_grid, marginal, preset_grid, symmetry_check, wigner_at)
from .kernels import (BaselineNoCavity, Coherent, DeterministicCoherent,
                      DeterministicSqueezedVac, LossyPhotonCount, PhotonCount, SqueezedVac,
                      baseline_no_cavity, heralding_probability, kernel_coherent,
                      kernel_lossy, kernel_photon_count, kernel_squeezed_vacuum,
                      max_heralding, wigner_single_photon_closed_form)
from .negativity import (NegativityReport, negative_volume, nonclassical_depth,
                         refine_minimum, thermal_convolve)
from .steady_state import (FockPopulations, TridiagRecurrences, fock_diagonal_wigner,
                           inverse_coefficients, master_equation_generator, recurrences,
                           rwa_transfer, solve_steady_state, validate_rwa, witness)
