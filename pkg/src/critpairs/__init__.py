"""Monte Carlo study of random polynomials and their critical points."""
from .errors import (CertificateRefused, ConfigError, CritPairsError, DegenerateInputError,
                     DomainError, InsufficientDataError, PoleError, SizeError, SolverFailure,
                     UnsupportedMeasureError, UnsupportedRegimeWarning, WrongRegimeError)
from .measures import (RadialMeasure, TailLaw, radial_cdf, radial_quantile, sample_roots,
                       stieltjes, tail_law)
from .poly_core import CriticalSet, RootSample, companion_oracle, critical_points
from .pairing import (Annulus, Certificate, PairingReport, build_pairing, certify,
                      edge_annulus, order_statistics, spiral_compare)
from .diagnostics import (EventFlags, EventParameters, build_net, default_parameters,
                          discrete_transform, event_flags)
from .fluctuations import (FluctuationSample, GaussTarget, angular_test, gauss_target,
                           hill_index, scale_factor, scaled_fluctuations)
from .harness import ExperimentConfig, ExperimentReport, recompute_summary, run_experiment

__version__ = "0.1.0"
