"""Probabilistically labeled deterministic MDPs, label beliefs and ground truth."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Sequence

__all__ = [
    "GRID_ACTIONS",
    "PlDmdp",
    "Belief",
    "Environment",
    "ModelError",
    "grid_world",
    "neighborhood",
    "sense",
    "update_map",
]

GRID_ACTIONS = ("Up", "Right", "Down", "Left", "Stay")
_MOVES = {"Up": (0, 1), "Right": (1, 0), "Down": (0, -1), "Left": (-1, 0), "Stay": (0, 0)}

NORMALIZATION_TOL = 1e-9


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class PlDmdp:
    """Deterministic transition system with a uniform positive step cost.

    ``delta[x][a]`` is the successor index of state ``x`` under action index
    ``a``, or ``None`` when the action is infeasible there.  ``states`` holds
    the user-facing names (grid cells for grid worlds).
    """

    states: tuple[Hashable, ...]
    actions: tuple[str, ...]
    delta: tuple[tuple[int | None, ...], ...]
    alphabet: tuple[str, ...] = ()
    beta: float = 1.0
    index: Mapping[Hashable, int] = field(init=False, repr=False, compare=False)
    predecessors: tuple[tuple[tuple[int, int], ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.beta > 0:
            raise ModelError(f"step cost must be positive, got {self.beta}")
        if len(self.delta) != len(self.states):
            raise ModelError("transition table must have one row per state")
        n = len(self.states)
        preds: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        for x, row in enumerate(self.delta):
            if len(row) != len(self.actions):
                raise ModelError(f"state {self.states[x]!r} has a malformed transition row")
            for a, y in enumerate(row):
                if y is None:
                    continue
                if not 0 <= y < n:
                    raise ModelError(f"successor {y} of state {self.states[x]!r} is out of range")
                preds[y].append((x, a))
            if "Stay" in self.actions and row[self.actions.index("Stay")] not in (None, x):
                raise ModelError("Stay must map each state to itself")
        object.__setattr__(self, "index", {s: i for i, s in enumerate(self.states)})
        object.__setattr__(self, "predecessors", tuple(tuple(p) for p in preds))

    @classmethod
    def from_transitions(
        cls,
        states: Sequence[Hashable],
        actions: Sequence[str],
        transitions: Mapping[tuple[Hashable, str], Hashable],
        alphabet: Sequence[str] = (),
        beta: float = 1.0,
    ) -> "PlDmdp":
        idx = {s: i for i, s in enumerate(states)}
        aidx = {a: i for i, a in enumerate(actions)}
        rows = [[None] * len(actions) for _ in states]
        for (s, a), t in transitions.items():
            rows[idx[s]][aidx[a]] = idx[t]
        return cls(tuple(states), tuple(actions), tuple(tuple(r) for r in rows), tuple(alphabet), beta)

    @property
    def num_states(self) -> int:
        return len(self.states)

    @property
    def num_letters(self) -> int:
        return 1 << len(self.alphabet)

    @property
    def num_transitions(self) -> int:
        """Number of (state, feasible action) pairs."""
        return sum(y is not None for row in self.delta for y in row)

    def successor(self, x: int, a: int) -> int | None:
        return self.delta[x][a]


def grid_world(
    width: int,
    height: int,
    blocked: Iterable[tuple[int, int]] = (),
    alphabet: Sequence[str] = (),
    beta: float = 1.0,
) -> PlDmdp:
    """Four-connected grid with a Stay action; cells are ``(x, y)``, Up is +y."""
    if width < 1 or height < 1:
        raise ModelError("grid dimensions must be at least 1")
    blocked = {tuple(c) for c in blocked}
    cells = [(x, y) for y in range(height) for x in range(width) if (x, y) not in blocked]
    if not cells:
        raise ModelError("every cell of the grid is blocked")
    idx = {c: i for i, c in enumerate(cells)}
    rows = []
    for (x, y) in cells:
        row = []
        for a in GRID_ACTIONS:
            dx, dy = _MOVES[a]
            row.append(idx.get((x + dx, y + dy)))
        rows.append(tuple(row))
    return PlDmdp(tuple(cells), GRID_ACTIONS, tuple(rows), tuple(alphabet), beta)


def neighborhood(m: PlDmdp, x: int, h: int) -> set[int]:
    """States reachable from ``x`` in at most ``h`` transitions (``x`` included)."""
    if h < 0:
        raise ModelError("hop count must be non-negative")
    seen = {x}
    frontier = deque([(x, 0)])
    while frontier:
        y, d = frontier.popleft()
        if d == h:
            continue
        for z in m.delta[y]:
            if z is not None and z not in seen:
                seen.add(z)
                frontier.append((z, d + 1))
    return seen


class Belief:
    """Per-state label distribution, stored sparsely over support letters.

    Instances are treated as immutable: :func:`update_map` returns a new
    belief that shares untouched rows with its parent.
    """

    __slots__ = ("_rows", "num_letters", "revealed", "version")

    def __init__(
        self,
        rows: Sequence[Mapping[int, float]],
        num_letters: int,
        revealed: Iterable[int] = (),
        version: int = 0,
        _trusted: bool = False,
    ):
        self.num_letters = num_letters
        self.revealed = frozenset(revealed)
        self.version = version
        if _trusted:
            self._rows = tuple(rows)
            return
        clean = []
        for x, row in enumerate(rows):
            kept = {}
            for letter, p in sorted(row.items()):
                if not 0 <= letter < num_letters:
                    raise ModelError(f"state {x}: letter {letter} outside the alphabet")
                if p < 0 or p > 1 + NORMALIZATION_TOL or math.isnan(p):
                    raise ModelError(f"state {x}: probability {p} outside [0, 1]")
                if p > 0:
                    kept[letter] = float(p)
            total = sum(kept.values())
            if abs(total - 1.0) > NORMALIZATION_TOL:
                raise ModelError(f"state {x}: probabilities sum to {total}, not 1")
            clean.append(kept)
        self._rows = tuple(clean)

    @classmethod
    def certain(cls, letters: Sequence[int], num_letters: int) -> "Belief":
        """Belief putting all mass on one letter per state."""
        return cls([{letter: 1.0} for letter in letters], num_letters)

    def __len__(self) -> int:
        return len(self._rows)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Belief)
            and self._rows == other._rows
            and self.num_letters == other.num_letters
            and self.revealed == other.revealed
        )

    def row(self, x: int) -> Mapping[int, float]:
        return self._rows[x]

    def items(self, x: int) -> list[tuple[int, float]]:
        """Support of state ``x`` as ``(letter, probability)`` pairs, by letter."""
        return sorted(self._rows[x].items())

    def prob(self, x: int, letter: int) -> float:
        return self._rows[x].get(letter, 0.0)

    def support(self, x: int) -> list[int]:
        return sorted(self._rows[x])

    def mode(self, x: int) -> int:
        """Most likely letter of ``x``; ties go to the smallest letter."""
        return min(self._rows[x].items(), key=lambda kv: (-kv[1], kv[0]))[0]

    def uncertain(self) -> frozenset[int]:
        """States whose true label has not been revealed."""
        return frozenset(range(len(self._rows))) - self.revealed


@dataclass(frozen=True)
class Environment:
    """Hidden ground-truth labelling and the sensor range used to observe it."""

    truth: tuple[int, ...]
    h: int = 1

    def __post_init__(self):
        if self.h < 0:
            raise ModelError("sensor range must be non-negative")


def sense(env: Environment, x: int, m: PlDmdp) -> list[tuple[int, int]]:
    """True labels of every state within ``env.h`` hops of ``x``, sorted by state."""
    return [(y, env.truth[y]) for y in sorted(neighborhood(m, x, env.h))]


def update_map(b: Belief, observations: Iterable[tuple[int, int]]) -> Belief:
    """Pin each observed state's distribution onto its observed letter."""
    rows = list(b._rows)
    revealed = set(b.revealed)
    changed = False
    for x, letter in observations:
        if not 0 <= x < len(rows):
            raise ModelError(f"observed state {x} is not in the model")
        if not 0 <= letter < b.num_letters:
            raise ModelError(f"observed letter {letter} outside the alphabet")
        if rows[x] != {letter: 1.0}:
            rows[x] = {letter: 1.0}
            changed = True
        revealed.add(x)
    if not changed and revealed == b.revealed:
        return b
    return Belief(rows, b.num_letters, revealed, b.version + int(changed), _trusted=True)


def changed_states(old: Belief, new: Belief) -> set[int]:
    """States whose distribution differs between two beliefs of the same model."""
    if old is new:
        return set()
    return {x for x in range(len(new)) if old._rows[x] is not new._rows[x] and old._rows[x] != new._rows[x]}
