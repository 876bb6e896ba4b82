import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import eval_prefix, random_raw_formula, to_canonical
from scltl_planner.dfa import StateExplosionError, accepts, compile_formula
from scltl_planner.formula import FALSE, TRUE, letter_of, parse


def dfa_for(text, alphabet):
    return compile_formula(parse(text, alphabet), alphabet)


@pytest.mark.parametrize(
    "text, alphabet, reachable, total",
    [
        ("F A", ["A"], 2, 3),
        ("true", ["A"], 1, 2),
        ("F (A & F (B & F C))", ["A", "B", "C"], 4, 5),
        ("F A & F B & F C", ["A", "B", "C"], 8, 9),
        ("F (Pickup & F Delivery)", ["Pickup", "Delivery"], 3, 4),
        ("(!C U B) & F C & F A & (!D U A) & (!D U C)", list("ABCD"), 7, 7),
    ],
)
def test_state_counts(text, alphabet, reachable, total):
    dfa = dfa_for(text, alphabet)
    assert dfa.num_reachable == reachable
    assert dfa.num_states == total


def test_total_and_absorbing():
    dfa = dfa_for("(!B U A) & F B", ["A", "B"])
    assert all(len(row) == dfa.num_letters for row in dfa.delta)
    assert all(dfa.delta[dfa.trash][lt] == dfa.trash for lt in range(dfa.num_letters))
    for s in dfa.accepting:
        assert all(dfa.delta[s][lt] == s for lt in range(dfa.num_letters))
    assert dfa.formulas[dfa.trash] is FALSE
    assert all(dfa.formulas[s] is TRUE for s in dfa.accepting)


def test_trash_kept_even_when_unreachable():
    dfa = dfa_for("F A", ["A"])
    assert dfa.trash == dfa.num_states - 1
    assert dfa.trash >= dfa.num_reachable


def test_case_study_forbids_early_d():
    alphabet = list("ABCD")
    dfa = dfa_for("(!C U B) & F C & F A & (!D U A) & (!D U C)", alphabet)
    L = lambda *names: letter_of(names, alphabet)  # noqa: E731
    assert accepts(dfa, [L(), L("B"), L("A"), L("C")])
    assert not accepts(dfa, [L("B"), L("D"), L("A"), L("C")])
    assert not accepts(dfa, [L("C"), L("B"), L("A")])
    assert accepts(dfa, [L("B"), L("A"), L("C"), L("D")])
    assert dfa.run([L("D")])[-1] == dfa.trash


def test_empty_word_and_initial_acceptance():
    assert accepts(dfa_for("true", ["A"]), [])
    assert not accepts(dfa_for("F A", ["A"]), [])


def test_json_schema_and_determinism():
    a = dfa_for("F (A & F B)", ["A", "B"])
    b = dfa_for("F (A & F B)", ["A", "B"])
    assert json.dumps(a.to_json()) == json.dumps(b.to_json())
    data = a.to_json()
    assert set(data) >= {"states", "initial", "transitions"}
    assert {"id", "formula", "accepting", "trash"} <= set(data["states"][0])
    assert len(data["transitions"]) == a.num_states * a.num_letters
    assert a.to_dot().startswith("digraph")


def test_state_limit():
    alphabet = [f"o{i}" for i in range(6)]
    f = parse(" & ".join(f"F {o}" for o in alphabet), alphabet)
    with pytest.raises(StateExplosionError):
        compile_formula(f, alphabet, max_states=10)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.lists(st.integers(0, 7), max_size=6))
def test_acceptance_matches_semantics(seed, word):
    raw = random_raw_formula(random.Random(seed), 3, 4)
    dfa = compile_formula(to_canonical(raw), ["o0", "o1", "o2"])
    assert accepts(dfa, word) == eval_prefix(raw, word)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_compilation_is_deterministic(seed):
    f = to_canonical(random_raw_formula(random.Random(seed), 2, 4))
    assert compile_formula(f, ["o0", "o1"]) == compile_formula(f, ["o0", "o1"])
