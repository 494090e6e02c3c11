"""Hashed sign features and incremental ridge regression over regret targets.

Information states of one player that share an action are randomly
partitioned into ``m`` buckets, ``n`` independent times, giving an n-sparse
indicator feature of length ``m * n`` per state; every nonzero entry carries
an independent random sign so that cross-state interference cancels in
expectation.  One ridge regressor per (player, action) is fit to the
instantaneous counterfactual regrets of every state after each iteration.
Because the design matrix never changes, the normal-equation factorisation is
computed once, and summing the per-iteration weight solutions is exactly the
ridge solution for the summed (cumulative) targets.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .efg import GameTree

__all__ = [
    "FeatureGroup",
    "FeatureMap",
    "build_features",
    "ridge_fit",
    "HashedRegretEstimator",
]


@dataclass(frozen=True)
class FeatureGroup:
    """Feature layout for the states of one player that share one action.

    ``design`` has one row per state (in ``state_ids`` order) with exactly
    ``n`` entries of magnitude 1.  ``seq_positions`` maps each row to the
    player's sequence index of (state, action).
    """

    action_label: object
    state_ids: np.ndarray
    seq_positions: np.ndarray
    buckets: np.ndarray  # (n, n_states) bucket id per partition
    signs: np.ndarray    # (n, n_states) entries in {-1, +1}
    design: sp.csr_matrix

    @property
    def n_states(self) -> int:
        return len(self.state_ids)


@dataclass(frozen=True)
class FeatureMap:
    """All per-action feature groups of one player, derived from one seed."""

    player: int
    n_partitions: int
    m_buckets: int
    seed: int
    groups: tuple[FeatureGroup, ...]

    @property
    def feature_length(self) -> int:
        return self.n_partitions * self.m_buckets

    def group_for(self, action_label) -> FeatureGroup:
        for g in self.groups:
            if g.action_label == action_label:
                return g
        raise KeyError(action_label)


def _assign_partition(rng: np.random.Generator, n_states: int, m: int) -> np.ndarray:
    """Near-even random bucket assignment.

    After a seeded shuffle, state ``perm[i]`` lands in bucket ``i % m``, so
    the first ``n_states % m`` buckets hold one extra state.
    """
    perm = rng.permutation(n_states)
    buckets = np.empty(n_states, dtype=np.int64)
    buckets[perm] = np.arange(n_states) % m
    return buckets


def build_features(
    tree: GameTree, player: int, n: int, m: int, seed: int
) -> FeatureMap:
    """Build the tug-of-war style feature map for one player.

    Each (player, action) group is hashed independently; the assignment is a
    pure function of (seed, player, group index, partition).
    """
    if n < 1:
        raise ValueError("need at least one partition")
    if m < 2:
        raise ValueError("need at least two buckets")
    ix = tree.players[player]
    if ix.n_states < 1:
        raise ValueError("player has no information states")

    by_label: dict[object, list[int]] = {}
    for s in range(ix.n_states):
        for j, label in enumerate(ix.action_labels[s]):
            by_label.setdefault(label, []).append(s)

    groups = []
    for gidx, label in enumerate(sorted(by_label, key=repr)):
        states = np.asarray(by_label[label], dtype=np.int64)
        n_states = len(states)
        offsets = np.asarray(
            [ix.seq_start[s] + ix.action_labels[s].index(label) for s in states],
            dtype=np.int64,
        )
        rng = np.random.default_rng([seed, player, gidx])
        buckets = np.empty((n, n_states), dtype=np.int64)
        signs = np.empty((n, n_states), dtype=np.int64)
        for k in range(n):
            buckets[k] = _assign_partition(rng, n_states, m)
            signs[k] = rng.integers(0, 2, size=n_states) * 2 - 1
        rows = np.repeat(np.arange(n_states), n)
        cols = (np.arange(n)[:, None] * m + buckets).T.ravel()
        data = signs.T.ravel().astype(np.float64)
        design = sp.csr_matrix((data, (rows, cols)), shape=(n_states, n * m))
        groups.append(
            FeatureGroup(
                action_label=label,
                state_ids=states,
                seq_positions=offsets,
                buckets=buckets,
                signs=signs,
                design=design,
            )
        )
    return FeatureMap(player, n, m, seed, tuple(groups))


def ridge_fit(design, targets, lam: float) -> np.ndarray:
    """Solve ``argmin ||X w - t||^2 + lam ||w||^2`` via the normal equations.

    ``lam = 0`` is allowed only for a full-column-rank design; a singular
    Gram matrix is rejected.
    """
    if lam < 0:
        raise ValueError("ridge penalty must be nonnegative")
    targets = np.asarray(targets, dtype=np.float64)
    if not np.all(np.isfinite(targets)):
        raise ValueError("targets must be finite")
    if sp.issparse(design):
        gram = (design.T @ design).toarray()
        rhs = design.T @ targets
    else:
        design = np.asarray(design, dtype=np.float64)
        gram = design.T @ design
        rhs = design.T @ targets
    gram = gram + lam * np.eye(gram.shape[0])
    try:
        factor = sla.cho_factor(gram)
    except np.linalg.LinAlgError as e:
        raise ValueError(
            "normal equations are singular; a positive ridge penalty is required"
        ) from e
    return sla.cho_solve(factor, rhs)


class _GroupState:
    """Weights plus the one-time Cholesky factor for a single feature group."""

    def __init__(self, group: FeatureGroup, lam: float):
        gram = (group.design.T @ group.design).toarray()
        gram += lam * np.eye(gram.shape[0])
        try:
            self.factor = sla.cho_factor(gram)
        except np.linalg.LinAlgError as e:
            raise ValueError(
                f"gram matrix for action {group.action_label!r} is singular; "
                "increase the ridge penalty"
            ) from e
        self.group = group
        self.weights = np.zeros(group.design.shape[1])

    def accumulate(self, targets: np.ndarray) -> None:
        rhs = self.group.design.T @ targets
        self.weights += sla.cho_solve(self.factor, rhs)

    def predict(self) -> np.ndarray:
        return self.group.design @ self.weights


class HashedRegretEstimator:
    """Per-(player, action) accumulated ridge weights over hashed features.

    ``accumulate`` adds the ridge solution for this iteration's targets to
    the running weights; by linearity of the fixed-design solve the running
    weights always equal the single fit against the cumulative targets.
    Fitting is single-writer; prediction is read-only.
    """

    def __init__(self, feature_map: FeatureMap, lam: float):
        if lam < 0:
            raise ValueError("ridge penalty must be nonnegative")
        self.feature_map = feature_map
        self.lam = lam
        self._groups = [_GroupState(g, lam) for g in feature_map.groups]
        self._n_seq = None  # lazily sized on first use

    @property
    def player(self) -> int:
        return self.feature_map.player

    def accumulate(self, targets_by_seq: np.ndarray) -> None:
        """Fit this iteration's per-sequence regret targets into the weights."""
        for gs in self._groups:
            gs.accumulate(targets_by_seq[gs.group.seq_positions])

    def predict_all(self, n_seq: int) -> np.ndarray:
        """Cumulative-regret predictions for every sequence of the player."""
        out = np.zeros(n_seq)
        for gs in self._groups:
            out[gs.group.seq_positions] = gs.predict()
        return out

    def predict_state(self, tree: GameTree, state: int) -> np.ndarray:
        """Predicted cumulative regret vector over one state's actions."""
        ix = tree.players[self.player]
        preds = self.predict_all(ix.n_seq)
        return preds[ix.block(state)]

    def weight_vectors(self) -> dict:
        return {repr(gs.group.action_label): gs.weights.copy() for gs in self._groups}

    # -- checkpointing ------------------------------------------------------

    def save(self, path: str | Path) -> None:
        """Dump (seed, n, m, lam, weights) sufficient for bit-exact reload."""
        fm = self.feature_map
        payload = {
            "player": np.int64(fm.player),
            "n": np.int64(fm.n_partitions),
            "m": np.int64(fm.m_buckets),
            "seed": np.int64(fm.seed),
            "lam": np.float64(self.lam),
        }
        for i, gs in enumerate(self._groups):
            payload[f"w{i}"] = gs.weights
        np.savez(path, **payload)

    @classmethod
    def load(cls, tree: GameTree, path: str | Path) -> "HashedRegretEstimator":
        with np.load(path) as data:
            fm = build_features(
                tree, int(data["player"]), int(data["n"]), int(data["m"]),
                int(data["seed"]),
            )
            est = cls(fm, float(data["lam"]))
            for i, gs in enumerate(est._groups):
                gs.weights = data[f"w{i}"].copy()
        return est
