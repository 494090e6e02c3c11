"""CFR and f-RCFR iteration loops.

One iteration forms each player's policy from (estimated) cumulative
counterfactual regrets through the configured link function, traverses the
full tree for exact counterfactual regrets, and feeds them back into the
regret store: plain tables in tabular mode, per-action ridge regressors in
function-approximation mode.  Shadow tables of exact cumulative regrets are
always maintained; they never drive the policy in approximation mode and
exist to measure approximation error and evaluate the theoretical bounds.

Iterations are strictly sequential and all reductions run in a fixed order;
BLAS pools are pinned to one thread for the duration of a solve so results
are bit-reproducible regardless of ambient thread settings.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from enum import Enum

import numpy as np
from threadpoolctl import threadpool_limits

from .bounds import rcfr_bound
from .efg import (
    AveragePolicyTracker,
    BehaviorProfile,
    GameTree,
    _values_pass,
    exploitability_milli,
    realization_plan,
)
from .links import LinkFamily, LinkSpec
from .regress import HashedRegretEstimator, build_features

__all__ = [
    "UpdateScheme",
    "SolveConfig",
    "MetricsRow",
    "SolveState",
    "SolveResult",
    "SolverDivergence",
    "cadence_points",
    "iterate",
    "solve",
]


class UpdateScheme(Enum):
    SIMULTANEOUS = "sim"
    ALTERNATING = "alt"


class SolverDivergence(RuntimeError):
    """Raised when a traversal produces non-finite regrets."""


@dataclass(frozen=True)
class SolveConfig:
    """One solver run: game, link, approximation quality, schedule, seed."""

    game: str
    link: LinkSpec
    iterations: int
    n_partitions: int = 0  # 0 = tabular
    m_buckets: int = 10
    lam: float = 1e-3
    seed: int = 1
    cadence: int | str = "log"
    update: UpdateScheme = UpdateScheme.SIMULTANEOUS

    def __post_init__(self) -> None:
        if self.iterations < 1:
            raise ValueError("need at least one iteration")
        if self.n_partitions < 0:
            raise ValueError("partition count must be nonnegative")
        if self.n_partitions > 0 and self.m_buckets < 2:
            raise ValueError("need at least two buckets per partition")
        if isinstance(self.cadence, str):
            if self.cadence != "log":
                raise ValueError("cadence must be 'log' or a positive integer")
        elif self.cadence < 1:
            raise ValueError("cadence must be 'log' or a positive integer")

    @property
    def tabular(self) -> bool:
        return self.n_partitions == 0


@dataclass(frozen=True)
class MetricsRow:
    """One evaluation record along a run."""

    iteration: int
    exploitability_milli: float
    avg_regret: tuple[float, float]
    err_sum: tuple[float, float]
    bound: tuple[float, float]
    wall_ms: float


@dataclass
class SolveState:
    """Mutable per-run solver state; single-writer."""

    tree: GameTree
    config: SolveConfig
    regrets: list[np.ndarray]
    eps: list[np.ndarray]
    estimators: list[HashedRegretEstimator] | None
    tracker: AveragePolicyTracker
    cum_util: list[float]
    t: int = 0
    last_profile: BehaviorProfile | None = None

    @staticmethod
    def create(tree: GameTree, config: SolveConfig) -> "SolveState":
        estimators = None
        if not config.tabular:
            estimators = [
                HashedRegretEstimator(
                    build_features(
                        tree, p, config.n_partitions, config.m_buckets, config.seed
                    ),
                    config.lam,
                )
                for p in range(2)
            ]
        return SolveState(
            tree=tree,
            config=config,
            regrets=[np.zeros(tree.players[p].n_seq) for p in range(2)],
            eps=[np.zeros(tree.players[p].n_states) for p in range(2)],
            estimators=estimators,
            tracker=AveragePolicyTracker(tree),
            cum_util=[0.0, 0.0],
        )

    def predicted_regrets(self, p: int) -> np.ndarray:
        """Cumulative-regret view the policy is computed from."""
        if self.estimators is None:
            return self.regrets[p]
        return self.estimators[p].predict_all(self.tree.players[p].n_seq)


# ---------------------------------------------------------------------------
# Vectorised per-state link evaluation
# ---------------------------------------------------------------------------


def policy_from_regret_vector(
    tree: GameTree, p: int, reg: np.ndarray, spec: LinkSpec
) -> np.ndarray:
    """Per-state matching policy from a per-sequence cumulative regret vector.

    Equals :func:`frcfr.matcher.policy_from_estimates` applied state by state
    with the external transformation set, evaluated in one vectorised pass.
    """
    ix = tree.players[p]
    states = ix.state_of_seq[1:]
    pol = np.zeros(ix.n_seq)
    if spec.family is LinkFamily.EXPONENTIAL:
        z = np.zeros(ix.n_seq)
        z[1:] = reg[1:] / spec.param
        bmax = np.maximum.reduceat(z, ix.seq_start)
        e = np.zeros(ix.n_seq)
        e[1:] = np.exp(z[1:] - bmax[states])
        sums = np.add.reduceat(e, ix.seq_start)
        pol[1:] = e[1:] / sums[states]
        return pol
    y = np.zeros(ix.n_seq)
    y[1:] = np.power(np.maximum(reg[1:], 0.0), spec.param - 1.0)
    sums = np.add.reduceat(y, ix.seq_start)
    block_sum = sums[states]
    positive = block_sum > 0.0
    pol[1:] = np.where(
        positive,
        y[1:] / np.where(positive, block_sum, 1.0),
        1.0 / ix.n_actions[states],
    )
    return pol


def companion_map_vector(
    tree: GameTree, p: int, reg: np.ndarray, spec: LinkSpec
) -> np.ndarray:
    """Per-sequence companion-map values, evaluated state block by block."""
    ix = tree.players[p]
    states = ix.state_of_seq[1:]
    out = np.zeros(ix.n_seq)
    if spec.family is LinkFamily.EXPONENTIAL:
        return policy_from_regret_vector(tree, p, reg, spec)
    pexp = spec.param
    xp = np.zeros(ix.n_seq)
    xp[1:] = np.maximum(reg[1:], 0.0)
    if pexp <= 2.0:
        out[1:] = pexp * np.power(xp[1:], pexp - 1.0)
        return out
    norms = np.power(np.add.reduceat(np.power(xp, pexp), ix.seq_start), 1.0 / pexp)
    denom = np.power(norms, pexp - 2.0)[states]
    positive = denom > 0.0
    out[1:] = np.where(
        positive, 2.0 * np.power(xp[1:], pexp - 1.0) / np.where(positive, denom, 1.0), 0.0
    )
    return out


def _state_l1(tree: GameTree, p: int, per_seq: np.ndarray) -> np.ndarray:
    """Per-state L1 mass of a per-sequence vector."""
    ix = tree.players[p]
    return np.add.reduceat(np.abs(per_seq), ix.seq_start)


def measured_avg_regret(state: SolveState, p: int) -> float:
    """(1/t) sum over states of the positive part of the best table regret."""
    ix = state.tree.players[p]
    if ix.n_states == 0 or state.t == 0:
        return 0.0
    per_state = np.maximum.reduceat(state.regrets[p], ix.seq_start)
    return float(np.maximum(per_state, 0.0).sum()) / state.t


# ---------------------------------------------------------------------------
# Iteration
# ---------------------------------------------------------------------------


def _traverse_and_update(
    state: SolveState, p: int, policies: tuple[np.ndarray, np.ndarray],
    plan_self: np.ndarray, plan_opp: np.ndarray
) -> None:
    tree = state.tree
    ix = tree.players[p]
    base = ix.payoff @ plan_opp
    v_seq, v_state, root = _values_pass(tree, p, base, policies[p])
    inst = np.zeros(ix.n_seq)
    inst[1:] = v_seq[1:] - v_state[ix.state_of_seq[1:]]
    if not np.all(np.isfinite(inst)):
        raise SolverDivergence(
            f"non-finite regret for player {p + 1} at iteration {state.t + 1}"
        )
    state.regrets[p] += inst
    if state.estimators is not None:
        state.estimators[p].accumulate(inst)
    reach = ix.num_members * plan_self[ix.parent_seq]
    state.tracker.accumulate_player(p, policies[p], reach)
    state.cum_util[p] += root


def _check_finite(state: SolveState, p: int, predicted: np.ndarray) -> None:
    if not np.all(np.isfinite(predicted)):
        raise SolverDivergence(
            f"non-finite regret estimate for player {p + 1} "
            f"at iteration {state.t + 1}"
        )


def _accumulate_errors(state: SolveState, p: int, predicted: np.ndarray) -> None:
    if state.estimators is None:
        return
    spec = state.config.link
    g_true = companion_map_vector(state.tree, p, state.regrets[p], spec)
    g_est = companion_map_vector(state.tree, p, predicted, spec)
    state.eps[p] += _state_l1(state.tree, p, g_true - g_est)


def iterate(state: SolveState) -> SolveState:
    """Advance the solver by one iteration (both players)."""
    tree = state.tree
    spec = state.config.link
    if state.config.update is UpdateScheme.SIMULTANEOUS:
        predicted = [state.predicted_regrets(p) for p in range(2)]
        for p in range(2):
            _check_finite(state, p, predicted[p])
            _accumulate_errors(state, p, predicted[p])
        policies = tuple(
            policy_from_regret_vector(tree, p, predicted[p], spec) for p in range(2)
        )
        plans = [realization_plan(tree, p, policies[p]) for p in range(2)]
        for p in range(2):
            _traverse_and_update(state, p, policies, plans[p], plans[1 - p])
        state.last_profile = BehaviorProfile(policies)
    else:
        last = []
        for p in range(2):
            predicted = [state.predicted_regrets(q) for q in range(2)]
            for q in range(2):
                _check_finite(state, q, predicted[q])
            _accumulate_errors(state, p, predicted[p])
            policies = tuple(
                policy_from_regret_vector(tree, q, predicted[q], spec)
                for q in range(2)
            )
            plans = [realization_plan(tree, q, policies[q]) for q in range(2)]
            _traverse_and_update(state, p, policies, plans[p], plans[1 - p])
            last.append(policies[p])
        state.last_profile = BehaviorProfile((last[0], last[1]))
    state.t += 1
    return state


def cadence_points(iterations: int, cadence: int | str) -> list[int]:
    """Evaluation points; always includes the final iteration exactly once."""
    if cadence == "log":
        points = []
        t = 1
        while t < iterations:
            points.append(t)
            t = max(t + 1, int(round(t * 1.3)))
        points.append(iterations)
        return points
    step = int(cadence)
    points = list(range(step, iterations + 1, step))
    if not points or points[-1] != iterations:
        points.append(iterations)
    return points


def metrics_row(state: SolveState, wall_ms: float) -> MetricsRow:
    """Evaluate the average profile and bound values at the current iteration."""
    tree = state.tree
    average = state.tracker.extract()
    expl = exploitability_milli(tree, average)
    bounds = []
    for p in range(2):
        counts = tree.players[p].n_actions
        bounds.append(
            rcfr_bound(
                state.config.link, state.t, tree.utility_bound, counts, state.eps[p]
            ).per_state
        )
    return MetricsRow(
        iteration=state.t,
        exploitability_milli=expl,
        avg_regret=(measured_avg_regret(state, 0), measured_avg_regret(state, 1)),
        err_sum=(float(state.eps[0].sum()), float(state.eps[1].sum())),
        bound=(bounds[0], bounds[1]),
        wall_ms=wall_ms,
    )


@dataclass
class SolveResult:
    config: SolveConfig
    rows: list[MetricsRow]
    average: BehaviorProfile
    state: SolveState


def solve(tree: GameTree, config: SolveConfig, on_row=None) -> SolveResult:
    """Run the configured number of iterations, evaluating on the cadence grid.

    ``on_row`` is called with each :class:`MetricsRow` as it is produced,
    letting callers stream partial results.
    """
    if tree.name != config.game:
        raise ValueError(f"tree is for {tree.name!r}, config says {config.game!r}")
    points = set(cadence_points(config.iterations, config.cadence))
    rows: list[MetricsRow] = []
    with threadpool_limits(limits=1):
        state = SolveState.create(tree, config)
        start = time.perf_counter()
        for t in range(1, config.iterations + 1):
            iterate(state)
            if t in points:
                wall_ms = (time.perf_counter() - start) * 1000.0
                row = metrics_row(state, wall_ms)
                rows.append(row)
                if on_row is not None:
                    on_row(row)
    return SolveResult(config, rows, state.tracker.extract(), state)
