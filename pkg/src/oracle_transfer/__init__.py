"""Run exact-oracle convex optimization algorithms on inexact oracles.

The transfer wrappers mediate every oracle exchange of a black-box
first-order algorithm, repairing approximate responses into responses that
are exactly consistent with a nearby convex instance, so the algorithm runs
unmodified and keeps a provable guarantee.
"""

from .core import (AffinePiece, Anchor, ExtensibilityReport, Halfspace,
                   PiecewiseMaxFunction, check_convex_extensibility,
                   halfspace_contains, pwmax_eval, pwmax_subgradient)
from .errors import (AlgorithmQueryOutOfBall, BadArgs, BadDelta, BadEta,
                     BadGrid, BudgetExceeded, DegenerateCone, DimError,
                     EtaTooLarge, Exact1dInHighDim, ModelEmpty,
                     NoFeasiblePoint, NumericalCollapse, OracleTransferError,
                     OutOfDomain, SchemaError, TraceMismatch)
from .oracles import (FEASIBLE, INFEASIBLE, ApproxFirstOrderOracle,
                      ApproxSeparationOracle, NoiseModel,
                      SeparationNoiseModel, approx_first_order,
                      approx_separation, deep_point_sampler, devolder_params,
                      exact_first_order, exact_separation,
                      constraint_from_config, objective_from_config)
from .trace import RunSummary, RunTrace, TraceRow
from .transfer_lipschitz import (LipschitzTransferState, compute_shift,
                                 lipschitz_step, run_wrapped)
from .transfer_separation import (SeparationTransferState, cone_project_unit,
                                  run_wrapped_constrained, separation_step)
from .transfer_smooth import (SmoothingEstimator, SmoothTransferState,
                              certified_smoothness, run_wrapped_smooth,
                              sample_unit_ball, smooth_step, smoothed_gradient,
                              smoothed_value)
from .algorithms import (AlgorithmConfig, Ellipsoid, LatticeEnumerator,
                         NesterovAGD, ProjectedSubgradient, make_algorithm)

__version__ = "0.1.0"
