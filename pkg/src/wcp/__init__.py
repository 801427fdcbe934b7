"""Contact process on the complete graph with random vertex weights.

Edge (i, j) transmits at rate ``lam * w_i * w_j / n`` and infected vertices
recover at rate 1.  The package provides weight laws, the mean-field fixed
point and its near-critical asymptotics, exact and typed Gillespie kernels,
the dominating branching process, an exact small-n oracle, and experiment
drivers.
"""
from .errors import (DomainMismatch, Extinct, GuardTripped, InvariantError, IoError,
                     NoConvergence, NotSupercritical, ParseError, SchemaError, StepTooLarge,
                     TooLarge, UnsupportedAlpha, WCPError)
from .io import emit, format_law, parse_law, read_csv
from .meanfield import lambda_c, profile, rho, sigma, sigma_hat, solve
from .rng import derive_seed
from .weights import DiscreteLaw, ParetoLaw, WeightSample, moment, sample, tail, truncate

__version__ = "0.1.0"

__all__ = [
    "DiscreteLaw", "DomainMismatch", "Extinct", "GuardTripped", "InvariantError", "IoError",
    "NoConvergence", "NotSupercritical", "ParetoLaw", "ParseError", "SchemaError",
    "StepTooLarge", "TooLarge", "UnsupportedAlpha", "WCPError", "WeightSample", "derive_seed",
    "emit", "format_law", "lambda_c", "moment", "parse_law", "profile", "read_csv", "rho",
    "sample", "sigma", "sigma_hat", "solve", "tail", "truncate",
]
