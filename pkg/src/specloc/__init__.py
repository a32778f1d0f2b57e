"""specloc: spectral localization/delocalization experiments for sparse
Gaussian random matrices with d-regular sparsity patterns."""

__version__ = "0.1.0"

from .errors import (CapExceeded, ConvergenceFailure, DegenerateDraw,
                     DimensionError, DimensionMismatch, DomainError,
                     EmptyWindow, GenerationFailure, InvalidParams, ParseError,
                     QuadratureBudget, SolveFailure, SpeclocError,
                     ValidationError)
from .patterns import (PATTERN_KINDS, PatternReport, SparsityPattern,
                       generate_pattern, load_pattern, save_pattern,
                       validate_pattern)
from .sampler import (DENSE_CAP_DEFAULT, GaussianSparseMatrix, dump_matrix,
                      from_values, matvec, sample_matrix, to_dense)
from .spectral import (ESDHistogram, SpectralData, eigenpairs_in_interval,
                       esd_histogram, extreme_eigenpairs, full_spectrum,
                       operator_norm, resolvent_diag, top_eigenvector)
from .deloc import (DelocProfile, approx_top_ratio, deloc_profile,
                    is_delocalized, lq_deloc_bound, peak_flat_split,
                    rearrangement_norm)
from .subspace import (ConstructionReport, EigenspaceBasis,
                       construct_delocalized_candidate, projection_diag,
                       projection_estimate_check, resolvent_projection_diag,
                       sample_uniform_in_subspace)
from .semicircle import (StripIntegralResult, dyson_residual_check, msc,
                         msc_strip_integral, rho_sc, sc_cdf, sc_tail_mass)
from .sphere import (SphereBaselineResult, sample_sphere,
                     sphere_deloc_probability)
from .harness import ExperimentConfig, TrialRecord, run_experiment
