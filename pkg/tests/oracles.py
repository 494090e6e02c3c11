"""Independent reference implementations used to cross-check the engine.

Everything here works from the raw history records (parent pointers, labels,
chance probabilities) or from first principles, deliberately avoiding the
sequence-form arrays and vectorised passes that the production code uses.
"""

from __future__ import annotations

from collections import defaultdict

import numpy as np

from frcfr.efg import CHANCE, TERMINAL, BehaviorProfile, GameTree


def children_of(tree: GameTree) -> dict[int, list[int]]:
    kids: dict[int, list[int]] = defaultdict(list)
    for hid, parent in enumerate(tree.h_parent):
        if parent >= 0:
            kids[parent].append(hid)
    return kids


def _policy_prob(tree: GameTree, profile: BehaviorProfile, parent: int, child: int) -> float:
    """Behavioural probability of the edge parent -> child."""
    actor = tree.h_actor[parent]
    if actor == CHANCE:
        return tree.h_prob[child]
    ix = tree.players[actor]
    info = tree.h_info[parent]
    j = ix.action_labels[info].index(tree.h_label[child])
    return float(profile.policies[actor][ix.seq_start[info] + j])


def reach_products(tree: GameTree, profile: BehaviorProfile):
    """Per-history reach split into (player 0, player 1, chance) factors.

    History ids are topologically ordered (parents first), so one forward
    scan suffices.
    """
    n = tree.n_histories
    eta = np.ones((n, 3))
    for hid in range(n):
        parent = tree.h_parent[hid]
        if parent < 0:
            continue
        eta[hid] = eta[parent]
        actor = tree.h_actor[parent]
        pr = _policy_prob(tree, profile, parent, hid)
        eta[hid, 2 if actor == CHANCE else actor] *= pr
    return eta


def terminal_ids(tree: GameTree) -> list[int]:
    return [h for h in range(tree.n_histories) if tree.h_actor[h] == TERMINAL]


def expected_utility_oracle(tree: GameTree, profile: BehaviorProfile, p: int) -> float:
    """Terminal-by-terminal expected utility."""
    eta = reach_products(tree, profile)
    total = 0.0
    for z in terminal_ids(tree):
        u = tree.h_util[z] if p == 0 else -tree.h_util[z]
        total += eta[z].prod() * u
    return total


def counterfactual_value_oracle(
    tree: GameTree, profile: BehaviorProfile, p: int, state: int, action: int
) -> float:
    """Direct sum over member histories and the terminals below them.

    Weighs each terminal by the opponent-and-chance reach from the root and
    the player's own reach strictly after taking ``action`` at the state.
    """
    ix = tree.players[p]
    label = ix.action_labels[state][action]
    kids = children_of(tree)
    eta = reach_products(tree, profile)
    members = [
        h
        for h in range(tree.n_histories)
        if tree.h_actor[h] == p and tree.h_info[h] == state
    ]
    total = 0.0
    for h in members:
        start = next(c for c in kids[h] if tree.h_label[c] == label)
        opp_reach = eta[h, 1 - p] * eta[h, 2]
        stack = [(start, 1.0, 1.0)]
        while stack:
            node, own, opp_below = stack.pop()
            actor = tree.h_actor[node]
            if actor == TERMINAL:
                u = tree.h_util[node] if p == 0 else -tree.h_util[node]
                total += opp_reach * opp_below * own * u
                continue
            for c in kids[node]:
                pr = _policy_prob(tree, profile, node, c)
                if actor == p:
                    stack.append((c, own * pr, opp_below))
                else:
                    stack.append((c, own, opp_below * pr))
    return total


def best_response_oracle(tree: GameTree, opp_policy: np.ndarray, p: int) -> float:
    """Recursive frontier-expansion best response (second implementation).

    A frontier is a set of (history, weight) pairs with weight the
    opponent-and-chance reach.  Non-owner nodes are expanded in place;
    owner nodes are grouped by information state and maximised over actions.
    """
    kids = children_of(tree)
    opp = 1 - p
    ix_opp = tree.players[opp]

    def edge_prob(parent: int, child: int) -> float:
        actor = tree.h_actor[parent]
        if actor == CHANCE:
            return tree.h_prob[child]
        info = tree.h_info[parent]
        j = ix_opp.action_labels[info].index(tree.h_label[child])
        return float(opp_policy[ix_opp.seq_start[info] + j])

    def value(frontier: list[tuple[int, float]]) -> float:
        terminal_mass = 0.0
        own_nodes: list[tuple[int, float]] = []
        queue = list(frontier)
        while queue:
            h, w = queue.pop()
            actor = tree.h_actor[h]
            if actor == TERMINAL:
                u = tree.h_util[h] if p == 0 else -tree.h_util[h]
                terminal_mass += w * u
            elif actor == p:
                own_nodes.append((h, w))
            else:
                for c in kids[h]:
                    queue.append((c, w * edge_prob(h, c)))
        groups: dict[int, list[tuple[int, float]]] = defaultdict(list)
        for h, w in own_nodes:
            groups[tree.h_info[h]].append((h, w))
        total = terminal_mass
        ix = tree.players[p]
        for info, nodes in groups.items():
            best = -np.inf
            for label in ix.action_labels[info]:
                nxt = []
                for h, w in nodes:
                    child = next(c for c in kids[h] if tree.h_label[c] == label)
                    nxt.append((child, w))
                best = max(best, value(nxt))
            total += best
        return total

    return value([(0, 1.0)])


def pure_strategy_best_response(tree: GameTree, opp_policy: np.ndarray, p: int) -> float:
    """Exhaustive maximum over the player's pure strategies (tiny games only)."""
    import itertools

    from frcfr.efg import expected_utility

    ix = tree.players[p]
    choice_sets = [range(int(k)) for k in ix.n_actions]
    best = -np.inf
    for choices in itertools.product(*choice_sets):
        pol = np.zeros(ix.n_seq)
        for s, a in enumerate(choices):
            pol[ix.seq_start[s] + a] = 1.0
        if p == 0:
            profile = BehaviorProfile((pol, opp_policy))
        else:
            profile = BehaviorProfile((opp_policy, pol))
        best = max(best, expected_utility(tree, profile, p))
    return best


def stationary_distribution_oracle(q: np.ndarray) -> np.ndarray:
    """Left eigenvector of a row-stochastic matrix via a dense eigensolve."""
    w, v = np.linalg.eig(q.T)
    i = int(np.argmin(np.abs(w - 1.0)))
    pi = np.real(v[:, i])
    pi = np.abs(pi)
    return pi / pi.sum()


def ridge_oracle(design, targets, lam: float) -> np.ndarray:
    """Dense normal-equation solve via a general linear solver."""
    x = np.asarray(
        design.toarray() if hasattr(design, "toarray") else design, dtype=np.float64
    )
    gram = x.T @ x + lam * np.eye(x.shape[1])
    return np.linalg.solve(gram, x.T @ np.asarray(targets, dtype=np.float64))
