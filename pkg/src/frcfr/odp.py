"""Online decision problems: reward systems, action transformations, regret accounting.

A single decision problem consists of a finite ordered action set and a bound
on the magnitude of any observable reward.  Performance is measured against a
set of action transformations: external transformations replace every action
with one fixed action, internal transformations redirect a single action.
The regret vector accumulated against such a set is the input that the
matching policies in :mod:`frcfr.matcher` are computed from.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

__all__ = [
    "RewardSystem",
    "ActionTransformation",
    "TransformationKind",
    "TransformationSet",
    "RegretState",
    "enumerate_transformations",
    "expected_phi_regret",
    "maximal_activation",
]

# Two rows are considered equal when entries differ by no more than this.
_ROW_ATOL = 1e-12


@dataclass(frozen=True)
class RewardSystem:
    """A finite action set together with a bound on absolute rewards.

    Attributes:
        n_actions:    Number of available actions (>= 1).
        reward_bound: Supremum of |r(a)| over all admissible reward
                      functions; every observed reward must respect it.
    """

    n_actions: int
    reward_bound: float

    def __post_init__(self) -> None:
        if self.n_actions < 1:
            raise ValueError("action set must be non-empty")
        if not np.isfinite(self.reward_bound) or self.reward_bound < 0:
            raise ValueError("reward bound must be a nonnegative finite real")

    def check_reward(self, r: np.ndarray) -> np.ndarray:
        """Validate a reward vector against this system and return it as float64."""
        r = np.asarray(r, dtype=np.float64)
        if r.shape != (self.n_actions,):
            raise ValueError(f"reward vector has shape {r.shape}, expected ({self.n_actions},)")
        if np.any(np.abs(r) > self.reward_bound + 1e-12):
            raise ValueError("reward exceeds the declared bound")
        return r


@dataclass(frozen=True)
class ActionTransformation:
    """A map from actions to policies, stored as a dense row-stochastic matrix.

    Row ``a`` is the distribution the transformation assigns to action ``a``.
    Games here have at most a handful of actions, so density is affordable.
    """

    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("transformation matrix must be square")
        if np.any(m < 0):
            raise ValueError("transformation rows must be nonnegative")
        if np.any(np.abs(m.sum(axis=1) - 1.0) > _ROW_ATOL):
            raise ValueError("transformation rows must each sum to 1")
        object.__setattr__(self, "matrix", m)

    @property
    def n_actions(self) -> int:
        return self.matrix.shape[0]

    def moves(self, a: int) -> bool:
        """Whether the transformation maps action ``a`` to anything but itself."""
        row = self.matrix[a]
        delta = np.zeros_like(row)
        delta[a] = 1.0
        return bool(np.max(np.abs(row - delta)) > _ROW_ATOL)


class TransformationKind(Enum):
    EXTERNAL = "external"
    INTERNAL = "internal"
    CUSTOM = "custom"


@dataclass(frozen=True)
class TransformationSet:
    """An ordered set of action transformations over a common action set."""

    kind: TransformationKind
    members: tuple[ActionTransformation, ...]

    def __post_init__(self) -> None:
        if not self.members:
            raise ValueError("transformation set must be non-empty")
        n = self.members[0].n_actions
        if any(m.n_actions != n for m in self.members):
            raise ValueError("all transformations must share one action set")
        if self.kind is TransformationKind.EXTERNAL and len(self.members) != n:
            raise ValueError(f"external set over {n} actions must have {n} members")
        if self.kind is TransformationKind.INTERNAL and len(self.members) != n * n - n + 1:
            raise ValueError(
                f"internal set over {n} actions must have {n * n - n + 1} members"
            )
        # Stacked (|Phi|, n, n) view used by the vectorised regret computation.
        object.__setattr__(
            self, "_stack", np.stack([m.matrix for m in self.members])
        )

    @property
    def n_actions(self) -> int:
        return self.members[0].n_actions

    def __len__(self) -> int:
        return len(self.members)

    def stacked(self) -> np.ndarray:
        """All member matrices as one (|Phi|, n, n) array."""
        return self._stack  # type: ignore[attr-defined]


def enumerate_transformations(kind: TransformationKind, n_actions: int) -> TransformationSet:
    """Enumerate the external or internal transformation set over ``n_actions``.

    External: one constant map per target action.  Internal: the identity plus
    every single-action redirection a -> b with a != b; the identity appears
    exactly once, giving ``n**2 - n + 1`` members.
    """
    if n_actions < 1:
        raise ValueError("action set must be non-empty")
    eye = np.eye(n_actions)
    members: list[ActionTransformation] = []
    if kind is TransformationKind.EXTERNAL:
        for b in range(n_actions):
            m = np.zeros((n_actions, n_actions))
            m[:, b] = 1.0
            members.append(ActionTransformation(m))
    elif kind is TransformationKind.INTERNAL:
        members.append(ActionTransformation(eye.copy()))
        for a in range(n_actions):
            for b in range(n_actions):
                if a == b:
                    continue
                m = eye.copy()
                m[a] = 0.0
                m[a, b] = 1.0
                members.append(ActionTransformation(m))
    else:
        raise ValueError("custom sets are built directly, not enumerated")
    return TransformationSet(kind, tuple(members))


def expected_phi_regret(
    sigma: np.ndarray, r: np.ndarray, phi: TransformationSet
) -> np.ndarray:
    """Expected per-transformation regret of playing ``sigma`` against reward ``r``.

    The component for transformation ``f`` is
    ``sum_a sigma(a) * (E_{a' ~ f(a)}[r(a')] - r(a))``.
    """
    n = phi.n_actions
    sigma = np.asarray(sigma, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    if sigma.shape != (n,) or r.shape != (n,):
        raise ValueError("sigma and r must match the transformation action set")
    if np.any(sigma < -1e-12) or abs(sigma.sum() - 1.0) > 1e-9:
        raise ValueError("sigma must be a probability distribution")
    # (|Phi|, n): expected reward after transforming each action.
    transformed = phi.stacked() @ r
    return (transformed - r) @ sigma


def maximal_activation(phi: TransformationSet) -> int:
    """Largest number of members that move any single action.

    For the external set over n actions this is n - 1; for the internal set
    it is also n - 1 (only the redirections out of an action move it).
    """
    n = phi.n_actions
    counts = [sum(1 for m in phi.members if m.moves(a)) for a in range(n)]
    return max(counts)


@dataclass
class RegretState:
    """Cumulative transformation regrets for one decision problem.

    Single-writer mutable state: one learner owns and updates it.  The history
    log is disabled by default; the verification harness enables it to replay
    observed (policy, reward) pairs.
    """

    phi: TransformationSet
    cumulative: np.ndarray = field(init=False)
    step: int = field(init=False, default=0)
    keep_history: bool = False
    history_log: list[tuple[np.ndarray, np.ndarray]] = field(init=False, default_factory=list)

    def __post_init__(self) -> None:
        self.cumulative = np.zeros(len(self.phi))

    def observe(self, sigma: Sequence[float], r: Sequence[float]) -> np.ndarray:
        """Accumulate the expected regret of playing ``sigma`` against ``r``.

        Returns the per-step regret vector that was added.
        """
        rho = expected_phi_regret(np.asarray(sigma), np.asarray(r), self.phi)
        self.cumulative = self.cumulative + rho
        self.step += 1
        if self.keep_history:
            self.history_log.append(
                (np.array(sigma, dtype=np.float64), np.array(r, dtype=np.float64))
            )
        return rho
