"""Total DFA construction by formula progression."""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

from .formula import (
    FALSE,
    MAX_OBSERVATIONS,
    Bottom,
    Formula,
    FormulaError,
    dnf,
    Top,
    letter_names,
    progress,
    to_string,
)

__all__ = ["TotalDfa", "StateExplosionError", "compile_formula", "accepts"]

DEFAULT_MAX_STATES = 10_000


class StateExplosionError(RuntimeError):
    pass


@dataclass(frozen=True)
class TotalDfa:
    """A total DFA over letters in ``range(2 ** len(alphabet))``.

    States ``0 .. num_reachable - 1`` are reachable from ``initial`` (which
    is always 0) in breadth-first discovery order.  The trash state is always
    present; when no letter sequence leads to it, it is appended after the
    reachable block.
    """

    alphabet: tuple[str, ...]
    formulas: tuple[Formula, ...]
    delta: tuple[tuple[int, ...], ...]
    accepting: frozenset[int]
    trash: int
    num_reachable: int
    initial: int = 0

    @property
    def num_states(self) -> int:
        return len(self.formulas)

    @property
    def num_letters(self) -> int:
        return 1 << len(self.alphabet)

    def step(self, state: int, letter: int) -> int:
        return self.delta[state][letter]

    def run(self, word: Iterable[int], start: int | None = None) -> list[int]:
        s = self.initial if start is None else start
        states = [s]
        for letter in word:
            s = self.delta[s][letter]
            states.append(s)
        return states

    def to_json(self) -> dict:
        return {
            "alphabet": list(self.alphabet),
            "states": [
                {
                    "id": i,
                    "formula": to_string(f),
                    "accepting": i in self.accepting,
                    "trash": i == self.trash,
                    "reachable": i < self.num_reachable,
                }
                for i, f in enumerate(self.formulas)
            ],
            "initial": self.initial,
            "transitions": [
                {"from": s, "letter": letter_names(letter, self.alphabet), "to": t}
                for s, row in enumerate(self.delta)
                for letter, t in enumerate(row)
            ],
        }

    def to_dot(self) -> str:
        lines = ["digraph dfa {", "  rankdir=LR;", '  init [shape=point];']
        for i, f in enumerate(self.formulas):
            shape = "doublecircle" if i in self.accepting else "circle"
            label = json.dumps(f"{i}: {to_string(f)}")
            lines.append(f"  s{i} [shape={shape}, label={label}];")
        lines.append(f"  init -> s{self.initial};")
        for s, row in enumerate(self.delta):
            grouped: dict[int, list[str]] = {}
            for letter, t in enumerate(row):
                names = letter_names(letter, self.alphabet)
                grouped.setdefault(t, []).append("{" + ",".join(names) + "}")
            for t, letters in grouped.items():
                lines.append(f"  s{s} -> s{t} [label={json.dumps(' '.join(letters))}];")
        lines.append("}")
        return "\n".join(lines) + "\n"


def compile_formula(
    f: Formula, alphabet: Sequence[str], max_states: int = DEFAULT_MAX_STATES
) -> TotalDfa:
    """Compile a canonical formula into a total DFA accepting its good prefixes.

    Every reachable progression of ``f`` (in disjunctive normal form) becomes
    a state; ``True`` is the accepting state and ``False`` the trash state.
    """
    alphabet = tuple(alphabet)
    if len(alphabet) > MAX_OBSERVATIONS:
        raise FormulaError(f"at most {MAX_OBSERVATIONS} observations are supported", kind="alphabet")
    n_letters = 1 << len(alphabet)
    f = dnf(f)
    index: dict[Formula, int] = {f: 0}
    formulas: list[Formula] = [f]
    rows: list[tuple[int, ...]] = []
    queue = deque([f])
    while queue:
        cur = queue.popleft()
        row = []
        for letter in range(n_letters):
            nxt = dnf(progress(cur, letter))
            j = index.get(nxt)
            if j is None:
                if len(formulas) >= max_states:
                    raise StateExplosionError(
                        f"DFA exceeds {max_states} states while compiling {to_string(f)}"
                    )
                j = len(formulas)
                index[nxt] = j
                formulas.append(nxt)
                queue.append(nxt)
            row.append(j)
        rows.append(tuple(row))
    num_reachable = len(formulas)
    if FALSE not in index:
        index[FALSE] = len(formulas)
        formulas.append(FALSE)
        rows.append(tuple([index[FALSE]] * n_letters))
    accepting = frozenset(i for i, g in enumerate(formulas) if isinstance(g, Top))
    trash = next(i for i, g in enumerate(formulas) if isinstance(g, Bottom))
    return TotalDfa(
        alphabet=alphabet,
        formulas=tuple(formulas),
        delta=tuple(rows),
        accepting=accepting,
        trash=trash,
        num_reachable=num_reachable,
    )


def accepts(dfa: TotalDfa, word: Iterable[int]) -> bool:
    """True iff the run visits an accepting state at or before the end of ``word``."""
    s = dfa.initial
    if s in dfa.accepting:
        return True
    for letter in word:
        s = dfa.delta[s][letter]
        if s in dfa.accepting:
            return True
    return False
