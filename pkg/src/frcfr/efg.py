"""Extensive-form game engine.

The full game tree is enumerated once into immutable arrays and kept in
memory; the games in this package are all small enough for exact evaluation.
Player nodes are grouped into information states and laid out in sequence
form: every (state, action) pair of a player owns one sequence index, with
index 0 reserved for the empty sequence.  Terminal payoffs are aggregated
into one sparse matrix per player over (own sequence, opponent sequence),
with chance reach folded into the entries.  All per-iteration work --
realisation plans, counterfactual values, regrets, best responses -- then
reduces to sparse matrix-vector products and segmented reductions, evaluated
level by level over each player's information-state forest.

Chance reach is folded into the opponent term of every counterfactual
quantity, the standard convention for this decomposition.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, IO

import numpy as np
import scipy.sparse as sp

from .games import CHANCE, GameSpec

__all__ = [
    "GameTree",
    "PlayerIndex",
    "BehaviorProfile",
    "AveragePolicyTracker",
    "build_tree",
    "realization_plan",
    "counterfactual_values",
    "instantaneous_regrets",
    "expected_utility",
    "best_response_value",
    "exploitability_milli",
    "dump_tree",
]

TERMINAL = -2

_CHANCE_ATOL = 1e-9


class TreeConstructionError(ValueError):
    """Raised when a game definition violates a tree invariant."""


@dataclass
class PlayerIndex:
    """Sequence-form layout of one player's information states.

    Sequences of a state occupy ``seq_start[s] .. seq_start[s] + n_actions[s]``
    (half open); ``parent_seq[s]`` is the player's own sequence leading into
    the state, and ``level[s]`` counts own states strictly above it.  The
    ``payoff`` matrix maps an opponent realisation plan to this player's
    chance-weighted terminal mass per own sequence.
    """

    state_keys: list[Hashable] = field(default_factory=list)
    n_actions: np.ndarray = None
    action_labels: list[tuple] = field(default_factory=list)
    seq_start: np.ndarray = None
    parent_seq: np.ndarray = None
    level: np.ndarray = None
    num_members: np.ndarray = None
    n_seq: int = 1
    state_of_seq: np.ndarray = None
    payoff: sp.csr_matrix = None
    # Per-level gather/scatter aids for the vectorised passes.
    lvl_states: list[np.ndarray] = field(default_factory=list)
    lvl_seqs: list[np.ndarray] = field(default_factory=list)
    lvl_offsets: list[np.ndarray] = field(default_factory=list)
    lvl_parents: list[np.ndarray] = field(default_factory=list)
    lvl_seq_parents: list[np.ndarray] = field(default_factory=list)

    @property
    def n_states(self) -> int:
        return len(self.state_keys)

    def seq_index(self, state: int, action: int) -> int:
        """Sequence index of (state, action)."""
        return int(self.seq_start[state]) + action

    def block(self, state: int) -> slice:
        s = int(self.seq_start[state])
        return slice(s, s + int(self.n_actions[state]))


@dataclass
class GameTree:
    """Fully enumerated immutable game tree. Safe to share across threads."""

    name: str
    params: dict
    spec: GameSpec
    players: tuple[PlayerIndex, PlayerIndex]
    utility_bound: float
    n_histories: int
    n_terminals: int
    # Raw history records for diagnostics and independent test oracles.
    h_parent: list[int]
    h_actor: list[int]
    h_label: list
    h_prob: list[float]
    h_info: list[int]
    h_util: list[float]

    @property
    def info_state_count(self) -> int:
        return self.players[0].n_states + self.players[1].n_states

    def action_counts(self, p: int) -> np.ndarray:
        return self.players[p].n_actions

    def summary(self) -> dict:
        return {
            "game": self.name,
            "info_states_p1": self.players[0].n_states,
            "info_states_p2": self.players[1].n_states,
            "utility_bound": self.utility_bound,
            "histories": self.n_histories,
            "terminals": self.n_terminals,
        }


def _finalize_player(
    keys: list,
    n_actions: list[int],
    labels: list[tuple],
    seq_start: list[int],
    parent_seq: list[int],
    members: list[int],
    n_seq: int,
) -> PlayerIndex:
    ix = PlayerIndex()
    ix.state_keys = keys
    ix.n_actions = np.asarray(n_actions, dtype=np.int64)
    ix.action_labels = labels
    ix.seq_start = np.asarray(seq_start, dtype=np.int64)
    ix.parent_seq = np.asarray(parent_seq, dtype=np.int64)
    ix.num_members = np.asarray(members, dtype=np.int64)
    ix.n_seq = n_seq
    n_states = len(keys)

    state_of_seq = np.full(n_seq, -1, dtype=np.int64)
    for s in range(n_states):
        state_of_seq[ix.seq_start[s] : ix.seq_start[s] + ix.n_actions[s]] = s
    ix.state_of_seq = state_of_seq

    # Own-forest depth; parents are always registered before children.
    level = np.zeros(n_states, dtype=np.int64)
    for s in range(n_states):
        ps = ix.parent_seq[s]
        level[s] = 0 if ps == 0 else level[state_of_seq[ps]] + 1
    ix.level = level

    n_levels = int(level.max()) + 1 if n_states else 0
    for lv in range(n_levels):
        states = np.nonzero(level == lv)[0]
        counts = ix.n_actions[states]
        seqs = np.concatenate(
            [np.arange(ix.seq_start[s], ix.seq_start[s] + ix.n_actions[s]) for s in states]
        )
        offsets = np.zeros(len(states), dtype=np.int64)
        np.cumsum(counts[:-1], out=offsets[1:])
        ix.lvl_states.append(states)
        ix.lvl_seqs.append(seqs)
        ix.lvl_offsets.append(offsets)
        ix.lvl_parents.append(ix.parent_seq[states])
        ix.lvl_seq_parents.append(np.repeat(ix.parent_seq[states], counts))
    return ix


def build_tree(spec: GameSpec) -> GameTree:
    """Enumerate a game into an immutable tree, validating its invariants.

    Raises :class:`TreeConstructionError` on a non-stochastic chance node or
    a perfect-recall violation, identifying the offending history.
    """
    keys: list[dict] = [{}, {}]
    n_actions: list[list[int]] = [[], []]
    labels: list[list[tuple]] = [[], []]
    seq_start: list[list[int]] = [[], []]
    parent_seq: list[list[int]] = [[], []]
    members: list[list[int]] = [[], []]
    next_seq = [1, 1]

    h_parent: list[int] = []
    h_actor: list[int] = []
    h_label: list = []
    h_prob: list[float] = []
    h_info: list[int] = []
    h_util: list[float] = []

    terms_seq0: list[int] = []
    terms_seq1: list[int] = []
    terms_val: list[float] = []
    u_bound = 0.0

    nan = float("nan")
    # Entries: (state, parent id, incoming label, incoming chance prob,
    #           player-0 sequence, player-1 sequence, chance reach).
    stack = [(spec.initial, -1, None, nan, 0, 0, 1.0)]
    while stack:
        state, parent, label, prob, seq0, seq1, reach = stack.pop()
        hid = len(h_parent)
        h_parent.append(parent)
        h_label.append(label)
        h_prob.append(prob)

        p = spec.player(state)
        if p is None:
            u = float(spec.utility(state))
            h_actor.append(TERMINAL)
            h_info.append(-1)
            h_util.append(u)
            terms_seq0.append(seq0)
            terms_seq1.append(seq1)
            terms_val.append(reach * u)
            u_bound = max(u_bound, abs(u))
            continue
        h_util.append(nan)

        if p == CHANCE:
            h_actor.append(CHANCE)
            h_info.append(-1)
            outcomes = spec.chance(state)
            if not outcomes:
                raise TreeConstructionError(f"chance node without outcomes at history {hid}")
            total = sum(pr for _, pr in outcomes)
            if any(pr < 0 for _, pr in outcomes) or abs(total - 1.0) > _CHANCE_ATOL:
                raise TreeConstructionError(
                    f"chance row at history {hid} is not a distribution (sum={total!r})"
                )
            for a, pr in outcomes:
                stack.append((spec.apply(state, a), hid, a, pr, seq0, seq1, reach * pr))
            continue

        h_actor.append(p)
        key = spec.info_key(state, p)
        acts = tuple(spec.actions(state))
        if not acts:
            raise TreeConstructionError(f"player node without actions at history {hid}")
        own_seq = seq0 if p == 0 else seq1
        sid = keys[p].get(key)
        if sid is None:
            sid = len(keys[p])
            keys[p][key] = sid
            n_actions[p].append(len(acts))
            labels[p].append(acts)
            seq_start[p].append(next_seq[p])
            parent_seq[p].append(own_seq)
            members[p].append(1)
            next_seq[p] += len(acts)
        else:
            if labels[p][sid] != acts:
                raise TreeConstructionError(
                    f"action mismatch within information state {key!r} at history {hid}"
                )
            if parent_seq[p][sid] != own_seq:
                raise TreeConstructionError(
                    f"perfect recall violated in information state {key!r} at history {hid}"
                )
            members[p][sid] += 1
        h_info.append(sid)
        base = seq_start[p][sid]
        for j, a in enumerate(acts):
            child = spec.apply(state, a)
            if p == 0:
                stack.append((child, hid, a, nan, base + j, seq1, reach))
            else:
                stack.append((child, hid, a, nan, seq0, base + j, reach))

    players = []
    for p in range(2):
        players.append(
            _finalize_player(
                list(keys[p].keys()),
                n_actions[p],
                labels[p],
                seq_start[p],
                parent_seq[p],
                members[p],
                next_seq[p],
            )
        )

    vals = np.asarray(terms_val, dtype=np.float64)
    rows0 = np.asarray(terms_seq0, dtype=np.int64)
    rows1 = np.asarray(terms_seq1, dtype=np.int64)
    players[0].payoff = sp.csr_matrix(
        (vals, (rows0, rows1)), shape=(players[0].n_seq, players[1].n_seq)
    )
    players[1].payoff = sp.csr_matrix(
        (-vals, (rows1, rows0)), shape=(players[1].n_seq, players[0].n_seq)
    )

    return GameTree(
        name=spec.name,
        params=dict(spec.params),
        spec=spec,
        players=(players[0], players[1]),
        utility_bound=u_bound,
        n_histories=len(h_parent),
        n_terminals=len(terms_val),
        h_parent=h_parent,
        h_actor=h_actor,
        h_label=h_label,
        h_prob=h_prob,
        h_info=h_info,
        h_util=h_util,
    )


# ---------------------------------------------------------------------------
# Profiles
# ---------------------------------------------------------------------------


@dataclass
class BehaviorProfile:
    """A behavioural policy per player, stored over sequence indices.

    Entry ``seq_start[s] + j`` is the probability of action j at state s;
    index 0 is unused.
    """

    policies: tuple[np.ndarray, np.ndarray]

    @staticmethod
    def uniform(tree: GameTree) -> "BehaviorProfile":
        out = []
        for p in range(2):
            ix = tree.players[p]
            pol = np.zeros(ix.n_seq)
            pol[1:] = 1.0 / ix.n_actions[ix.state_of_seq[1:]]
            out.append(pol)
        return BehaviorProfile((out[0], out[1]))

    def validate(self, tree: GameTree, atol: float = 1e-9) -> None:
        for p in range(2):
            ix = tree.players[p]
            pol = self.policies[p]
            if pol.shape != (ix.n_seq,):
                raise ValueError(f"player {p} policy has wrong length")
            if np.any(pol[1:] < -atol):
                raise ValueError(f"player {p} policy has negative entries")
            sums = np.add.reduceat(pol, ix.seq_start)
            if np.any(np.abs(sums - 1.0) > atol):
                raise ValueError(f"player {p} policy rows do not sum to 1")


def realization_plan(tree: GameTree, p: int, policy: np.ndarray) -> np.ndarray:
    """Own reach probability of every sequence under ``policy``."""
    ix = tree.players[p]
    x = np.zeros(ix.n_seq)
    x[0] = 1.0
    for seqs, seq_parents in zip(ix.lvl_seqs, ix.lvl_seq_parents):
        x[seqs] = x[seq_parents] * policy[seqs]
    return x


def _values_pass(
    tree: GameTree, p: int, base: np.ndarray, policy: np.ndarray
) -> tuple[np.ndarray, np.ndarray, float]:
    """Bottom-up expectation pass.

    Returns (per-sequence values, per-state values, root value), where a
    sequence's value includes all mass below it under ``policy``.
    """
    ix = tree.players[p]
    v_seq = base.copy()
    v_state = np.zeros(ix.n_states)
    for lv in range(len(ix.lvl_states) - 1, -1, -1):
        states = ix.lvl_states[lv]
        seqs = ix.lvl_seqs[lv]
        packed = policy[seqs] * v_seq[seqs]
        vals = np.add.reduceat(packed, ix.lvl_offsets[lv])
        v_state[states] = vals
        np.add.at(v_seq, ix.lvl_parents[lv], vals)
    return v_seq, v_state, float(v_seq[0])


def counterfactual_values(
    tree: GameTree, profile: BehaviorProfile, p: int
) -> tuple[np.ndarray, np.ndarray]:
    """Exact counterfactual values for player ``p`` under ``profile``.

    Returns (per-sequence values, per-state values).  The value of sequence
    (s, a) weighs terminals by opponent-and-chance reach and by the player's
    own play strictly below (s, a); the state value mixes the state's
    sequences under the player's own policy.
    """
    opp = 1 - p
    x_opp = realization_plan(tree, opp, profile.policies[opp])
    base = tree.players[p].payoff @ x_opp
    v_seq, v_state, _ = _values_pass(tree, p, base, profile.policies[p])
    return v_seq, v_state


def instantaneous_regrets(
    tree: GameTree, profile: BehaviorProfile, p: int
) -> np.ndarray:
    """Per-sequence counterfactual regret of ``profile`` for player ``p``.

    The policy-weighted regret sum within each state is zero by construction.
    """
    ix = tree.players[p]
    v_seq, v_state = counterfactual_values(tree, profile, p)
    reg = np.zeros(ix.n_seq)
    reg[1:] = v_seq[1:] - v_state[ix.state_of_seq[1:]]
    return reg


def expected_utility(tree: GameTree, profile: BehaviorProfile, p: int) -> float:
    """Expected terminal payoff to player ``p`` under ``profile``."""
    opp = 1 - p
    x_p = realization_plan(tree, p, profile.policies[p])
    x_opp = realization_plan(tree, opp, profile.policies[opp])
    return float(x_p @ (tree.players[p].payoff @ x_opp))


def best_response_value(tree: GameTree, opp_policy: np.ndarray, p: int) -> float:
    """Exact best-response value of player ``p`` against ``opp_policy``.

    Bottom-up maximisation of counterfactual values over the player's own
    information-state forest; valid under perfect recall.
    """
    ix = tree.players[p]
    x_opp = realization_plan(tree, 1 - p, opp_policy)
    v_seq = tree.players[p].payoff @ x_opp
    for lv in range(len(ix.lvl_states) - 1, -1, -1):
        seqs = ix.lvl_seqs[lv]
        vals = np.maximum.reduceat(v_seq[seqs], ix.lvl_offsets[lv])
        np.add.at(v_seq, ix.lvl_parents[lv], vals)
    return float(v_seq[0])


def exploitability_milli(tree: GameTree, profile: BehaviorProfile) -> float:
    """Average of both players' best-response values, in milli-units.

    Zero exactly at a Nash equilibrium; always nonnegative up to rounding.
    """
    b0 = best_response_value(tree, profile.policies[1], 0)
    b1 = best_response_value(tree, profile.policies[0], 1)
    return 1000.0 * 0.5 * (b0 + b1)


# ---------------------------------------------------------------------------
# Average-policy tracking
# ---------------------------------------------------------------------------


class AveragePolicyTracker:
    """Exact tabular accumulator of reach-weighted behavioural policies.

    Each update adds, per information state, the player's own reach summed
    over the state's histories times the current policy row.  Extraction
    normalises per state and falls back to uniform where a state was never
    reached under the player's own play.
    """

    def __init__(self, tree: GameTree):
        self.tree = tree
        self.acc = (np.zeros(tree.players[0].n_seq), np.zeros(tree.players[1].n_seq))
        self.iterations = 0

    def accumulate(
        self,
        profile: BehaviorProfile,
        reach_weights: tuple[np.ndarray, np.ndarray] | None = None,
    ) -> None:
        """Add one iteration's reach-weighted policy rows.

        ``reach_weights[p]`` is the per-state sum of player p's own reach over
        the state's member histories; when omitted it is derived from the
        profile.
        """
        for p in range(2):
            self.accumulate_player(p, profile.policies[p],
                                   None if reach_weights is None else reach_weights[p])
        self.iterations += 1

    def accumulate_player(
        self, p: int, policy: np.ndarray, reach: np.ndarray | None = None
    ) -> None:
        ix = self.tree.players[p]
        if reach is None:
            x = realization_plan(self.tree, p, policy)
            reach = ix.num_members * x[ix.parent_seq]
        self.acc[p][1:] += reach[ix.state_of_seq[1:]] * policy[1:]

    def extract(self) -> BehaviorProfile:
        out = []
        for p in range(2):
            ix = self.tree.players[p]
            pol = np.zeros(ix.n_seq)
            totals = np.add.reduceat(self.acc[p], ix.seq_start)
            per_seq_total = totals[ix.state_of_seq[1:]]
            unreached = per_seq_total <= 0.0
            with np.errstate(invalid="ignore", divide="ignore"):
                pol[1:] = np.where(
                    unreached,
                    1.0 / ix.n_actions[ix.state_of_seq[1:]],
                    self.acc[p][1:] / per_seq_total,
                )
            out.append(pol)
        return BehaviorProfile((out[0], out[1]))


def dump_tree(tree: GameTree, out: IO[str]) -> None:
    """Write the raw history table, one line per history.

    Format: ``history_id, parent_id, actor, infostate_key, action_label,
    terminal_utility?`` with empty fields where not applicable.
    """
    for hid in range(tree.n_histories):
        actor = tree.h_actor[hid]
        if actor >= 0:
            key = repr(tree.players[actor].state_keys[tree.h_info[hid]])
        else:
            key = ""
        util = "" if actor != TERMINAL else repr(tree.h_util[hid])
        label = "" if tree.h_label[hid] is None else repr(tree.h_label[hid])
        out.write(f"{hid},{tree.h_parent[hid]},{actor},{key},{label},{util}\n")
