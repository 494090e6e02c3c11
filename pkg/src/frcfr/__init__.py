"""Zero-sum extensive-form game solving with link-function regret matching.

Tabular counterfactual regret minimisation and its function-approximation
variant (hashed features + incremental ridge regression), with exact
exploitability evaluation and runtime verification of the matching regret
bounds.
"""

from .bounds import blackwell_check, odp_bound, rcfr_bound
from .efg import (
    AveragePolicyTracker,
    BehaviorProfile,
    GameTree,
    best_response_value,
    build_tree,
    counterfactual_values,
    expected_utility,
    exploitability_milli,
    instantaneous_regrets,
)
from .games import GAME_REGISTRY, make_game, oracle_games
from .links import LinkFamily, LinkSpec, gordon_g, link, link_error
from .matcher import (
    FixedPointPolicy,
    external_fixed_point,
    internal_fixed_point,
    policy_from_estimates,
)
from .odp import (
    ActionTransformation,
    RegretState,
    RewardSystem,
    TransformationKind,
    TransformationSet,
    enumerate_transformations,
    expected_phi_regret,
    maximal_activation,
)
from .regress import FeatureMap, HashedRegretEstimator, build_features, ridge_fit
from .solver import (
    MetricsRow,
    SolveConfig,
    SolveResult,
    UpdateScheme,
    cadence_points,
    iterate,
    solve,
)

__version__ = "0.1.0"
