"""Utility design and best-response efficiency for resource allocation games."""
from .errors import (DegenerateError, InfeasibleError, NonMonotoneSolution, NumericalFailure, ResallocError,
                     TooLarge, TruncationExceeded, UnboundedError, ValidationError)
from .game import (Resource, ResourceGame, UtilityRule, WelfareRule, b_covering, basis_decompose, curvature,
                   detection_rule, set_covering, steepness, welfare, utility)

__version__ = "0.1.0"
