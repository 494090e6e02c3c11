"""Game constructors: Leduc hold'em, goofspiel variants, and tiny oracle games.

Each game exposes rules as plain functions over immutable state tuples; the
tree builder in :mod:`frcfr.efg` consumes them.  Player 0 moves first
wherever an order must be fixed.  Simultaneous bidding games are serialised
as player 0 then player 1, with player 1's information state excluding
player 0's pending bid.

Rule conventions that the literature leaves open are pinned as follows and
locked in place by the information-state-count regression tests:

* Goofspiel bid ties discard the contested point card; a final-score tie is
  worth 0 to both players.
* The last round of a bidding game is forced (one card each) and is resolved
  automatically without creating decision nodes.
* Leduc allows folding only when facing an outstanding bet, and at most two
  raises per round (bet sizes 2 then 4 on top of a 1-chip ante).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Hashable, Mapping

__all__ = [
    "CHANCE",
    "GameSpec",
    "leduc",
    "goofspiel",
    "random_goofspiel",
    "rock_paper_scissors",
    "biased_matching_pennies",
    "one_card_poker",
    "matrix_game",
    "oracle_games",
    "GAME_REGISTRY",
    "make_game",
]

CHANCE = -1

State = Any
Action = Hashable


@dataclass(frozen=True)
class GameSpec:
    """Rules of a two-player zero-sum game in functional form.

    ``player`` returns 0, 1, :data:`CHANCE`, or ``None`` at terminals.
    ``utility`` is player 0's payoff; player 1's is its negation.
    ``info_key`` must depend only on what the acting player has observed.
    """

    name: str
    params: Mapping[str, Any]
    initial: State
    player: Callable[[State], int | None]
    actions: Callable[[State], tuple[Action, ...]]
    chance: Callable[[State], tuple[tuple[Action, float], ...]]
    apply: Callable[[State, Action], State]
    utility: Callable[[State], float]
    info_key: Callable[[State, int], Hashable]


# ---------------------------------------------------------------------------
# Leduc hold'em
# ---------------------------------------------------------------------------

# Cards 0..5; rank = card // 2 (two suits per rank).
_LEDUC_DECK = tuple(range(6))
_LEDUC_BETS = (2.0, 4.0)

# State: (c0, c1, pub, seq0, seq1); cards are None until dealt, seqs are
# per-round action tuples over 'f' (fold), 'c' (check/call), 'r' (bet/raise).


def _round_over(seq: tuple[str, ...]) -> bool:
    if not seq:
        return False
    if seq[-1] == "f":
        return True
    return len(seq) >= 2 and seq[-1] == "c"


def _betting_actions(seq: tuple[str, ...]) -> tuple[str, ...]:
    acts: list[str] = []
    if seq and seq[-1] == "r":
        acts.append("f")
    acts.append("c")
    if seq.count("r") < 2:
        acts.append("r")
    return tuple(acts)


def _leduc_player(s) -> int | None:
    c0, c1, pub, seq0, seq1 = s
    if c0 is None or c1 is None:
        return CHANCE
    if not _round_over(seq0):
        return len(seq0) % 2
    if seq0[-1] == "f":
        return None
    if pub is None:
        return CHANCE
    if not _round_over(seq1):
        return len(seq1) % 2
    return None


def _leduc_actions(s) -> tuple[str, ...]:
    _, _, _, seq0, seq1 = s
    return _betting_actions(seq0 if not _round_over(seq0) else seq1)


def _leduc_chance(s):
    c0, c1, _, _, _ = s
    if c0 is None:
        return tuple((c, 1.0 / 6.0) for c in _LEDUC_DECK)
    if c1 is None:
        rem = tuple(c for c in _LEDUC_DECK if c != c0)
        return tuple((c, 1.0 / 5.0) for c in rem)
    rem = tuple(c for c in _LEDUC_DECK if c not in (c0, c1))
    return tuple((c, 1.0 / 4.0) for c in rem)


def _leduc_apply(s, a):
    c0, c1, pub, seq0, seq1 = s
    if c0 is None:
        return (a, None, None, (), ())
    if c1 is None:
        return (c0, a, None, (), ())
    if _round_over(seq0) and pub is None:
        return (c0, c1, a, seq0, ())
    if not _round_over(seq0):
        return (c0, c1, pub, seq0 + (a,), seq1)
    return (c0, c1, pub, seq0, seq1 + (a,))


def _contributions(seqs: tuple[tuple[str, ...], ...], bets: tuple[float, ...],
                   ante: float) -> list[float]:
    contrib = [ante, ante]
    for seq, bet in zip(seqs, bets):
        paid = [0.0, 0.0]
        for i, a in enumerate(seq):
            actor = i % 2
            if a == "c":
                paid[actor] = max(paid)
            elif a == "r":
                paid[actor] = max(paid) + bet
            else:
                break
        contrib[0] += paid[0]
        contrib[1] += paid[1]
    return contrib


def _fold_utility(seqs, bets, ante) -> float | None:
    """Player-0 utility when someone folded, else None."""
    contrib = _contributions(seqs, bets, ante)
    for seq in seqs:
        if seq and seq[-1] == "f":
            folder = (len(seq) - 1) % 2
            return contrib[folder] if folder == 1 else -contrib[folder]
    return None


def _leduc_utility(s) -> float:
    c0, c1, pub, seq0, seq1 = s
    folded = _fold_utility((seq0, seq1), _LEDUC_BETS, 1.0)
    if folded is not None:
        return folded
    contrib = _contributions((seq0, seq1), _LEDUC_BETS, 1.0)
    r0, r1, rp = c0 // 2, c1 // 2, pub // 2
    if r0 == rp:
        return contrib[1]
    if r1 == rp:
        return -contrib[0]
    if r0 > r1:
        return contrib[1]
    if r1 > r0:
        return -contrib[0]
    return 0.0


def _leduc_info(s, p: int):
    c0, c1, pub, seq0, seq1 = s
    return (p, c0 if p == 0 else c1, pub, seq0, seq1)


def leduc() -> GameSpec:
    """Two-round limit poker over a six-card deck (three ranks, two suits).

    Each player antes 1 chip and receives a private card.  Bets are 2 chips
    in round one and 4 in round two, with at most two raises per round.  A
    public card is revealed before round two.  At showdown a private card
    pairing the public card wins; otherwise the higher rank wins, with equal
    ranks splitting the pot.
    """
    return GameSpec(
        name="leduc",
        params={},
        initial=(None, None, None, (), ()),
        player=_leduc_player,
        actions=_leduc_actions,
        chance=_leduc_chance,
        apply=_leduc_apply,
        utility=_leduc_utility,
        info_key=_leduc_info,
    )


# ---------------------------------------------------------------------------
# Goofspiel
# ---------------------------------------------------------------------------

# Bids are hidden; players observe only who won each completed round
# (0 / 1 / 2 for a tie).  The final round is forced and auto-resolved.


def _gs_outcomes(bids0, bids1) -> tuple[int, ...]:
    return tuple(
        0 if b0 > b1 else (1 if b1 > b0 else 2) for b0, b1 in zip(bids0, bids1)
    )


def _score(values, bids0, bids1) -> float:
    pts = [0, 0]
    for v, b0, b1 in zip(values, bids0, bids1):
        if b0 > b1:
            pts[0] += v
        elif b1 > b0:
            pts[1] += v
    if pts[0] > pts[1]:
        return 1.0
    if pts[1] > pts[0]:
        return -1.0
    return 0.0


def goofspiel(ranks: int = 5, sorted_deck: bool = True) -> GameSpec:
    """Simultaneous-bid card game over a fixed point deck, bids unrevealed.

    With ``sorted_deck`` the point cards come out in decreasing order, so the
    card values are public and only bids carry hidden information.  The round
    winner takes the point card's value; tied bids discard it.  Whoever holds
    more points at the end wins (+1 / -1, 0 on a tie).
    """
    if ranks < 2:
        raise ValueError("goofspiel needs at least 2 ranks")
    if not sorted_deck:
        raise ValueError("use random_goofspiel for a shuffled point deck")
    n = ranks
    full = tuple(range(1, n + 1))
    values = tuple(range(n, 0, -1))

    # State: (bids0, bids1).  Terminal once n-1 rounds are bid; the last
    # cards are forced and folded into the utility.
    def player(s):
        bids0, bids1 = s
        if len(bids1) == n - 1:
            return None
        return 0 if len(bids0) == len(bids1) else 1

    def actions(s):
        bids0, bids1 = s
        own = bids0 if len(bids0) == len(bids1) else bids1
        return tuple(c for c in full if c not in own)

    def apply_(s, a):
        bids0, bids1 = s
        if len(bids0) == len(bids1):
            return (bids0 + (a,), bids1)
        return (bids0, bids1 + (a,))

    def utility(s):
        bids0, bids1 = s
        last0 = next(c for c in full if c not in bids0)
        last1 = next(c for c in full if c not in bids1)
        return _score(values, bids0 + (last0,), bids1 + (last1,))

    def info_key(s, p):
        bids0, bids1 = s
        k = len(bids1)
        own = bids0[:k] if p == 0 else bids1[:k]
        return (p, own, _gs_outcomes(bids0[:k], bids1[:k]))

    return GameSpec(
        name="goofspiel",
        params={"ranks": ranks, "sorted_deck": True},
        initial=((), ()),
        player=player,
        actions=actions,
        chance=lambda s: (),
        apply=apply_,
        utility=utility,
        info_key=info_key,
    )


def random_goofspiel(ranks: int = 4) -> GameSpec:
    """Goofspiel with a shuffled point deck revealed card by card.

    A chance node draws the next point card uniformly from the remaining deck
    at the start of each round; the revealed sequence is public.
    """
    if ranks < 2:
        raise ValueError("goofspiel needs at least 2 ranks")
    n = ranks
    full = tuple(range(1, n + 1))

    # State: (points, bids0, bids1).
    def player(s):
        points, bids0, bids1 = s
        if len(bids1) == n - 1:
            return None
        if len(points) == len(bids1):
            return CHANCE
        return 0 if len(bids0) < len(points) else 1

    def actions(s):
        points, bids0, bids1 = s
        own = bids0 if len(bids0) < len(points) else bids1
        return tuple(c for c in full if c not in own)

    def chance(s):
        points, _, _ = s
        rem = tuple(c for c in full if c not in points)
        return tuple((c, 1.0 / len(rem)) for c in rem)

    def apply_(s, a):
        points, bids0, bids1 = s
        if len(points) == len(bids1):
            return (points + (a,), bids0, bids1)
        if len(bids0) < len(points):
            return (points, bids0 + (a,), bids1)
        return (points, bids0, bids1 + (a,))

    def utility(s):
        points, bids0, bids1 = s
        lastp = next(c for c in full if c not in points)
        last0 = next(c for c in full if c not in bids0)
        last1 = next(c for c in full if c not in bids1)
        return _score(points + (lastp,), bids0 + (last0,), bids1 + (last1,))

    def info_key(s, p):
        points, bids0, bids1 = s
        k = len(bids1)
        own = bids0 if p == 0 else bids1
        return (p, points, own, _gs_outcomes(bids0[:k], bids1[:k]))

    return GameSpec(
        name="random_goofspiel",
        params={"ranks": ranks},
        initial=((), (), ()),
        player=player,
        actions=actions,
        chance=chance,
        apply=apply_,
        utility=utility,
        info_key=info_key,
    )


# ---------------------------------------------------------------------------
# Oracle games
# ---------------------------------------------------------------------------


def matrix_game(name: str, payoffs, row_labels=None, col_labels=None) -> GameSpec:
    """One-shot zero-sum matrix game; player 1 moves without observing.

    ``payoffs[i][j]`` is player 0's utility for row i against column j.
    """
    rows = len(payoffs)
    cols = len(payoffs[0])
    row_labels = tuple(row_labels) if row_labels else tuple(range(rows))
    col_labels = tuple(col_labels) if col_labels else tuple(range(cols))
    row_index = {a: i for i, a in enumerate(row_labels)}
    col_index = {a: j for j, a in enumerate(col_labels)}

    def player(s):
        if len(s) == 0:
            return 0
        if len(s) == 1:
            return 1
        return None

    def actions(s):
        return row_labels if len(s) == 0 else col_labels

    def apply_(s, a):
        return s + (a,)

    def utility(s):
        return float(payoffs[row_index[s[0]]][col_index[s[1]]])

    def info_key(s, p):
        return (p,)

    return GameSpec(
        name=name,
        params={"payoffs": tuple(tuple(float(v) for v in row) for row in payoffs)},
        initial=(),
        player=player,
        actions=actions,
        chance=lambda s: (),
        apply=apply_,
        utility=utility,
        info_key=info_key,
    )


def rock_paper_scissors() -> GameSpec:
    """Symmetric 3-action matcher; uniform play is the equilibrium, value 0."""
    return matrix_game(
        "rps",
        [[0, -1, 1], [1, 0, -1], [-1, 1, 0]],
        row_labels=("rock", "paper", "scissors"),
        col_labels=("rock", "paper", "scissors"),
    )


def biased_matching_pennies() -> GameSpec:
    """2x2 game with payoff rows (2, -1; -1, 1); both players mix (2/5, 3/5)."""
    return matrix_game(
        "biased_mp",
        [[2, -1], [-1, 1]],
        row_labels=("heads", "tails"),
        col_labels=("heads", "tails"),
    )


def one_card_poker() -> GameSpec:
    """Three-card single-round poker: ante 1, bet 1, one raise, then showdown.

    Player 0's equilibrium value is -1/18.
    """
    deck = (0, 1, 2)

    # State: (c0, c1, seq).
    def player(s):
        c0, c1, seq = s
        if c0 is None or c1 is None:
            return CHANCE
        if _round_over(seq):
            return None
        return len(seq) % 2

    def actions(s):
        _, _, seq = s
        acts: list[str] = []
        if seq and seq[-1] == "r":
            acts.append("f")
        acts.append("c")
        if "r" not in seq:
            acts.append("r")
        return tuple(acts)

    def chance(s):
        c0, _, _ = s
        if c0 is None:
            return tuple((c, 1.0 / 3.0) for c in deck)
        rem = tuple(c for c in deck if c != c0)
        return tuple((c, 1.0 / 2.0) for c in rem)

    def apply_(s, a):
        c0, c1, seq = s
        if c0 is None:
            return (a, None, ())
        if c1 is None:
            return (c0, a, ())
        return (c0, c1, seq + (a,))

    def utility(s):
        c0, c1, seq = s
        folded = _fold_utility((seq,), (1.0,), 1.0)
        if folded is not None:
            return folded
        contrib = _contributions((seq,), (1.0,), 1.0)
        return contrib[1] if c0 > c1 else -contrib[0]

    def info_key(s, p):
        c0, c1, seq = s
        return (p, c0 if p == 0 else c1, seq)

    return GameSpec(
        name="one_card_poker",
        params={},
        initial=(None, None, ()),
        player=player,
        actions=actions,
        chance=chance,
        apply=apply_,
        utility=utility,
        info_key=info_key,
    )


def oracle_games() -> dict[str, GameSpec]:
    """Tiny games with known equilibria, used as test oracles."""
    return {
        "rps": rock_paper_scissors(),
        "biased_mp": biased_matching_pennies(),
        "one_card_poker": one_card_poker(),
    }


GAME_REGISTRY: dict[str, Callable[[], GameSpec]] = {
    "leduc": leduc,
    "goofspiel": goofspiel,
    "random_goofspiel": random_goofspiel,
    "rps": rock_paper_scissors,
    "biased_mp": biased_matching_pennies,
}


def make_game(name: str) -> GameSpec:
    """Look up a game constructor by its registry name."""
    try:
        return GAME_REGISTRY[name]()
    except KeyError:
        raise ValueError(
            f"unknown game {name!r}; known: {', '.join(sorted(GAME_REGISTRY))}"
        ) from None
