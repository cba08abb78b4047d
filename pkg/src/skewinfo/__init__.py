"""skewinfo: skew-symmetric distributions and their information geometry.

Build families from symmetric kernels and skewing functions, compute score
vectors and 3x3 information matrices under four parametrizations, classify
the singularity order at the symmetry point, convert between the original,
singularity-resolving, and centred parametrizations, run LM symmetry tests,
and measure consistency rates by seeded Monte Carlo.
"""

from .errors import (DegenerateDenominator, DegenerateSkewing, DomainError,
                     InconsistentDiagnostics, MaxIterations, NonFinite,
                     NotGaussianKernel, NotSkewNormal, OrderMismatch,
                     ParseError, SkewInfoError, SkewnessOutOfRange,
                     ToleranceNotMet)
from .families import (SkewingFunction, SkewSymmetricFamily, SymmetricKernel,
                       ThetaOriginal, density, load_family_spec, log_density,
                       make_family, registry_families, sample,
                       validate_kernel, validate_skewing)
from .fisher import (ClassifyConfig, GsnConstants, ScoreVector3,
                     SingularityReport, classify, estimate_a, info_original,
                     info_reparam1, info_reparam2, info_reparam3,
                     location_scale_info, score_at)
from .inference import (LMResult, MLEFit, RateResult, fit_mle,
                        lm_test_double, lm_test_simple, rate_experiment,
                        symmetric_mle)
from .numerics import (QuadratureSpec, RankReport, SeedSpec, Sym3, diff_delta,
                       integrate, make_rng, minimize, rank3, sym3_eigvals)
from .reparam import (Theta1, Theta2, Theta3, ThetaCP, appendix_check,
                      appendix_score_cp, appendix_score_ours, cp_forward,
                      cp_inverse, from_reparam1, from_reparam2, from_reparam3,
                      to_reparam1, to_reparam2, to_reparam3)

__version__ = "0.1.0"
