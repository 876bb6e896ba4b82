"""Product of a PL-DMDP with a total DFA, with belief-weighted edges."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable

from .dfa import TotalDfa
from .model import Belief, PlDmdp

__all__ = ["ProductAutomaton", "build", "refresh_edges", "feasibility_check"]

# edges[sp] is a tuple of (action, successors) for every feasible action, in
# action order; successors is a tuple of (sp', probability) sorted by sp'.
Successors = tuple[tuple[int, float], ...]


@dataclass(frozen=True)
class ProductAutomaton:
    """Product states are indexed ``x * num_dfa + s``.

    Only DFA states reachable from the DFA's initial state take part, so
    ``num_dfa == dfa.num_reachable``; the trash set is empty when the task
    can never be violated.
    """

    mdp: PlDmdp
    dfa: TotalDfa
    edges: tuple[tuple[tuple[int, Successors], ...], ...]
    belief_version: int

    @property
    def num_dfa(self) -> int:
        return self.dfa.num_reachable

    @property
    def num_states(self) -> int:
        return self.mdp.num_states * self.num_dfa

    @property
    def num_edges(self) -> int:
        return sum(len(succ) for row in self.edges for _, succ in row)

    def encode(self, x: int, s: int) -> int:
        return x * self.num_dfa + s

    def decode(self, sp: int) -> tuple[int, int]:
        return divmod(sp, self.num_dfa)

    def initial_states(self) -> list[int]:
        return [self.encode(x, self.dfa.initial) for x in range(self.mdp.num_states)]

    def is_accepting(self, sp: int) -> bool:
        return sp % self.num_dfa in self.dfa.accepting

    def is_trash(self, sp: int) -> bool:
        return sp % self.num_dfa == self.dfa.trash

    def is_terminal(self, sp: int) -> bool:
        s = sp % self.num_dfa
        return s in self.dfa.accepting or s == self.dfa.trash

    @property
    def accepting(self) -> frozenset[int]:
        return frozenset(sp for sp in range(self.num_states) if self.is_accepting(sp))

    @property
    def trash(self) -> frozenset[int]:
        return frozenset(sp for sp in range(self.num_states) if self.is_trash(sp))

    def to_json(self) -> dict:
        def name(sp):
            x, s = self.decode(sp)
            return [_jsonable(self.mdp.states[x]), s]

        return {
            "states": [name(sp) for sp in range(self.num_states)],
            "edges": [
                {"from": sp, "action": self.mdp.actions[a], "to": t, "prob": p}
                for sp, row in enumerate(self.edges)
                for a, succ in row
                for t, p in succ
            ],
            "accepting": sorted(self.accepting),
            "trash": sorted(self.trash),
        }


def _jsonable(state):
    return list(state) if isinstance(state, tuple) else state


def _successors(belief: Belief, dfa: TotalDfa, num_dfa: int, s: int, y: int) -> Successors:
    mass: dict[int, float] = {}
    for letter, p in belief.items(y):
        t = dfa.delta[s][letter]
        mass[t] = mass.get(t, 0.0) + p
    return tuple(sorted((y * num_dfa + t, p) for t, p in mass.items() if p > 0))


def _row(m: PlDmdp, belief: Belief, dfa: TotalDfa, num_dfa: int, x: int, s: int):
    return tuple(
        (a, _successors(belief, dfa, num_dfa, s, y))
        for a, y in enumerate(m.delta[x])
        if y is not None
    )


def build(m: PlDmdp, b: Belief, dfa: TotalDfa) -> ProductAutomaton:
    """Full product construction from the current belief."""
    if len(b) != m.num_states:
        raise ValueError("belief and model disagree on the number of states")
    if b.num_letters != dfa.num_letters:
        raise ValueError("belief and DFA use different alphabets")
    k = dfa.num_reachable
    edges = tuple(_row(m, b, dfa, k, x, s) for x in range(m.num_states) for s in range(k))
    return ProductAutomaton(m, dfa, edges, b.version)


def refresh_edges(p: ProductAutomaton, b: Belief, changed: Iterable[int]) -> ProductAutomaton:
    """Recompute only the edges whose destination cell is in ``changed``.

    The result equals ``build(p.mdp, b, p.dfa)`` exactly, provided ``b``
    differs from the belief behind ``p`` only on ``changed``.
    """
    changed = set(changed)
    if not changed:
        return ProductAutomaton(p.mdp, p.dfa, p.edges, b.version)
    m, dfa, k = p.mdp, p.dfa, p.num_dfa
    edges = list(p.edges)
    sources = sorted({x for y in changed for x, _ in m.predecessors[y]})
    for x in sources:
        for s in range(k):
            edges[x * k + s] = _row(m, b, dfa, k, x, s)
    return ProductAutomaton(m, dfa, tuple(edges), b.version)


def feasibility_check(p: ProductAutomaton, start: int) -> bool:
    """True iff an accepting state is reachable from ``start`` along positive edges."""
    if p.is_accepting(start):
        return True
    if p.is_trash(start):
        return False
    seen = {start}
    queue = deque([start])
    while queue:
        sp = queue.popleft()
        for _, succ in p.edges[sp]:
            for t, _prob in succ:
                if t in seen:
                    continue
                if p.is_accepting(t):
                    return True
                seen.add(t)
                if not p.is_trash(t):
                    queue.append(t)
    return False
