"""Acceptance criteria, one test each; every test prints a PASS/FAIL line."""

from __future__ import annotations

import itertools
import random
import time

import numpy as np
import pytest

from oracles import all_words, dfa_accepts_batch, eval_prefix_batch, random_raw_formula, to_canonical
from scltl_planner.bench import BenchScenario, run_benchmark, scaling_table, uncertain_belief
from scltl_planner.dfa import compile_formula
from scltl_planner.executor import RunConfig, check_word, run_episode
from scltl_planner.formula import letter_names, parse
from scltl_planner.mapfile import builtin_map, load_map
from scltl_planner.model import Belief, PlDmdp, changed_states, grid_world, update_map
from scltl_planner.planner import (
    PlannerConfig,
    exact_policy_value,
    is_satisfying,
    min_nonterminal_value,
    policy_reachable,
    reward,
    value_iteration,
)
from scltl_planner.product import build, refresh_edges

PHI1 = "(!C U B) & F C & F A & (!D U A) & (!D U C)"
PHI2 = "F (A & F (B & F C))"
PHI3 = "F (Pickup & F Delivery)"
PHI4 = "F A & F B & F C"

CFG = PlannerConfig()


@pytest.fixture
def verdict(capsys):
    def emit(number: int, name: str, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {name} :: {detail}")
        assert ok, detail

    return emit


# -- 1 ------------------------------------------------------------------------


def test_c01_dfa_matches_semantics_oracle(verdict):
    rng = random.Random(20240501)
    tic = time.perf_counter()
    words_by_n = {n: [all_words(n, k) for k in range(7)] for n in (1, 2, 3)}
    mismatches = checked = 0
    for _ in range(500):
        n = rng.randint(1, 3)
        raw = random_raw_formula(rng, n, 4)
        alphabet = [f"o{i}" for i in range(n)]
        dfa = compile_formula(to_canonical(raw), alphabet)
        for words in words_by_n[n]:
            want = eval_prefix_batch(raw, words)
            got = dfa_accepts_batch(dfa, words)
            mismatches += int((want != got).sum())
            checked += len(words)
    elapsed = time.perf_counter() - tic
    verdict(
        1,
        "DFA vs good-prefix oracle",
        mismatches == 0 and elapsed < 60,
        f"{mismatches} mismatches over 500 formulas / {checked} words in {elapsed:.1f} s",
    )


# -- 2 ------------------------------------------------------------------------


def test_c02_product_identity(verdict):
    m = grid_world(10, 10, alphabet=("A", "B", "C"))
    dfa = compile_formula(parse(PHI2, m.alphabet), m.alphabet)
    p = build(m, uncertain_belief(m.num_states, 1.0, 0), dfa)
    ok = p.num_states == 400 and m.num_transitions == 460
    verdict(
        2,
        "product size on 10x10 for the ordered-visit task",
        ok,
        f"|S_p|={p.num_states} (want 400), M transitions={m.num_transitions} (want 460), "
        f"product edges={p.num_edges}",
    )


# -- 3 ------------------------------------------------------------------------


def _random_instance(rng: np.random.Generator):
    """Small random PL-DMDP plus belief; product non-terminal states = cells."""
    n = int(rng.integers(3, 9))
    k = int(rng.integers(2, 4))
    actions = tuple(f"a{i}" for i in range(k))
    trans = {}
    for x in range(n):
        feasible = rng.random(k) < 0.8
        feasible[int(rng.integers(k))] = True
        for a in range(k):
            if feasible[a]:
                trans[(x, actions[a])] = int(rng.integers(n))
    m = PlDmdp.from_transitions(list(range(n)), actions, trans, ("A", "B"))
    rows = []
    for _ in range(n):
        w = rng.random(4) * (rng.random(4) < 0.6)
        if w.sum() == 0:
            w[0] = 1.0
        w = w / w.sum()
        rows.append({lt: float(p) for lt, p in enumerate(w) if p > 0})
    rows = [{lt: p / sum(r.values()) for lt, p in r.items()} for r in rows]
    return m, Belief(rows, 4)


def _best_over_all_policies(p, cfg):
    """Per-state maximum of the exact value over every deterministic policy."""
    free = [sp for sp in range(p.num_states) if not p.is_terminal(sp)]
    pos = {sp: i for i, sp in enumerate(free)}
    choices = [p.edges[sp] for sp in free]
    combos = list(itertools.product(*[range(len(c)) for c in choices]))
    A = np.tile(np.eye(len(free)), (len(combos), 1, 1))
    rhs = np.zeros((len(combos), len(free)))
    for c, combo in enumerate(combos):
        for i, sp in enumerate(free):
            a, succ = choices[i][combo[i]]
            for t, prob in succ:
                rhs[c, i] += prob * reward(p, sp, a, t, cfg)
                if t in pos:
                    A[c, i, pos[t]] -= cfg.gamma * prob
    vals = np.linalg.solve(A, rhs[..., None])[..., 0]
    return free, vals.max(axis=0)


def test_c03_value_iteration_vs_enumeration(verdict):
    rng = np.random.default_rng(7)
    tic = time.perf_counter()
    worst = 0.0
    count = 0
    formulas = ["F A", "!B U A", "F (A & F B)"]
    while count < 120:
        m, b = _random_instance(rng)
        dfa = compile_formula(parse(formulas[count % 3], m.alphabet), m.alphabet)
        p = build(m, b, dfa)
        free = [sp for sp in range(p.num_states) if not p.is_terminal(sp)]
        if len(free) > 12 or np.prod([len(p.edges[sp]) for sp in free], dtype=float) > 20000:
            continue
        plan = value_iteration(p, CFG)
        exact = exact_policy_value(p, plan.policy, CFG)
        states, best = _best_over_all_policies(p, CFG)
        gap = max(best[i] - exact[sp] for i, sp in enumerate(states))
        worst = max(worst, gap)
        count += 1
    elapsed = time.perf_counter() - tic
    verdict(
        3,
        "value-iteration policy vs exhaustive policy enumeration",
        worst <= 10 * CFG.eps and elapsed < 300,
        f"{count} products, worst per-state gap {worst:.2e} (tolerance {10 * CFG.eps}), {elapsed:.1f} s",
    )


# -- 4 ------------------------------------------------------------------------


def _feasible_instances():
    case = load_map(builtin_map("case_study_5x5"))
    yield "case study", case.mdp, case.belief, PHI1, case.start
    bench = load_map(builtin_map("bench_6x6"))
    yield "6x6 bench", bench.mdp, bench.belief, PHI3, bench.start
    m = grid_world(10, 10, alphabet=("A", "B", "C"))
    for seed in range(3):
        b = uncertain_belief(m.num_states, 0.25, seed)
        yield f"10x10 seed {seed}", m, b, PHI2, 0


def _infeasible_instances():
    # no cell can ever show A
    m = grid_world(3, 3, alphabet=("A",))
    yield "no A anywhere", m, Belief.certain([0] * 9, 2), "F A", 0
    # the only A sits behind a certain B, and B is forbidden before A
    line = grid_world(3, 1, alphabet=("A", "B"))
    yield "A walled off by B", line, Belief.certain([0, 2, 1], 4), "!B U A", 0
    # the task is already violated at the start cell
    yield "violated at start", line, Belief.certain([2, 0, 1], 4), "!B U A", 0


def _start_state(p, dfa, b, x0):
    return p.encode(x0, dfa.step(dfa.initial, b.mode(x0)))


def test_c04_value_threshold(verdict):
    lines = []
    ok = True
    for name, m, b, text, x0 in _feasible_instances():
        dfa = compile_formula(parse(text, m.alphabet), m.alphabet)
        p = build(m, b, dfa)
        plan = value_iteration(p, CFG)
        start = _start_state(p, dfa, b, x0)
        low = min_nonterminal_value(plan.values, p, policy_reachable(p, plan.policy, start))
        good = is_satisfying(plan, p, CFG, start=start) and low > CFG.floor + CFG.slack
        ok &= good
        lines.append(f"{name}: min={low:.3f}")
    for name, m, b, text, x0 in _infeasible_instances():
        dfa = compile_formula(parse(text, m.alphabet), m.alphabet)
        p = build(m, b, dfa)
        plan = value_iteration(p, CFG)
        start = _start_state(p, dfa, b, x0)
        low = min_nonterminal_value(plan.values, p, policy_reachable(p, plan.policy, start))
        if low is None:
            # start is itself terminal (trash): its value is the floor by construction
            low = CFG.floor if p.is_trash(start) else 0.0
        good = abs(low - CFG.floor) <= CFG.slack and not is_satisfying(plan, p, CFG, start=start)
        ok &= good
        lines.append(f"{name}: min={low:.3f}")
    verdict(4, "value threshold separates feasible from infeasible", ok, f"floor={CFG.floor:.2f}; " + "; ".join(lines))


# -- 5 and 6 --------------------------------------------------------------------


@pytest.fixture(scope="module")
def bench_run():
    bundle = load_map(builtin_map("bench_6x6"))
    sc = BenchScenario(
        bundle.mdp,
        bundle.belief,
        PHI3,
        bundle.start,
        worlds=200,
        seed=11,
        strategies=("trigger", "never"),
        keep_traces=True,
    )
    tic = time.perf_counter()
    report = run_benchmark(sc, CFG)
    return sc, report, time.perf_counter() - tic


def test_c05_trigger_mode_always_succeeds(verdict, bench_run):
    sc, report, elapsed = bench_run
    dfa = compile_formula(parse(PHI3, sc.mdp.alphabet), sc.mdp.alphabet)
    accepted = trash_visits = shrink_violations = 0
    for traces in report.traces:
        tr = traces["trigger"]
        accepted += tr.outcome == "accepted" and check_word(tr, dfa)
        trash_visits += sum(s == dfa.trash for s in tr.dfa_states)
        sizes = [r["uncertain"] for r in tr.replans]
        shrink_violations += sum(b >= a for a, b in zip(sizes, sizes[1:]))
    ok = accepted == 200 and trash_visits == 0 and shrink_violations == 0 and elapsed < 300
    verdict(
        5,
        "trigger-mode runs on 200 seeded 6x6 worlds",
        ok,
        f"accepted {accepted}/200, trash visits {trash_visits}, "
        f"non-shrinking replans {shrink_violations}, {elapsed:.1f} s for both strategies",
    )


def test_c06_replanning_dominates_baseline(verdict, bench_run):
    _, report, _ = bench_run
    trig, never = report.strategies["trigger"], report.strategies["never"]
    if report.deviating_worlds:
        ok = never.successes < trig.successes
    else:
        ok = never.successes <= trig.successes
    verdict(
        6,
        "never-replan baseline vs trigger mode",
        ok,
        f"trigger {trig.successes}/200 (mean {trig.mean:.2f}, median {trig.median}, SD {trig.sd:.2f}); "
        f"never {never.successes}/200; worlds deviating on the static path {report.deviating_worlds}",
    )


# -- 7 ------------------------------------------------------------------------


def test_c07_case_study(verdict):
    tic = time.perf_counter()
    bundle = load_map(builtin_map("case_study_5x5"))
    m = bundle.mdp
    dfa = compile_formula(parse(PHI1, m.alphabet), m.alphabet)
    trace = run_episode(m, bundle.belief, bundle.environment, dfa, CFG, RunConfig(), bundle.start)
    elapsed = time.perf_counter() - tic
    names = [set(letter_names(lt, m.alphabet)) for lt in trace.letters]

    def first(obs):
        return next((i for i, n in enumerate(names) if obs in n), None)

    a, c = first("A"), first("C")
    d_positions = [i for i, n in enumerate(names) if "D" in n]
    ordered = a is not None and c is not None and all(i > max(a, c) for i in d_positions)
    replayed = dfa.run(trace.letters)
    ok = trace.outcome == "accepted" and check_word(trace, dfa) and ordered and elapsed < 10
    ok &= replayed[-1] in dfa.accepting and dfa.trash not in replayed
    verdict(
        7,
        "5x5 case study",
        ok,
        f"outcome {trace.outcome}, {len(trace.actions)} steps, first A at {a}, first C at {c}, "
        f"D at {d_positions}, {len(trace.replans)} replans, {elapsed:.2f} s",
    )


# -- 8 ------------------------------------------------------------------------


def test_c08_scaling_trend(verdict):
    rows = scaling_table([(10, 10), (20, 20), (30, 30)], PHI2, fractions=(1.0,), seed=3)
    sizes_ok = all(r.product_states == r.mdp_states * 4 for r in rows)
    builds = [r.build_time for r in rows]
    plans = [r.plan_time for r in rows]
    monotone = builds == sorted(builds) and plans == sorted(plans)
    detail = ", ".join(
        f"{r.width}x{r.height}: |S_p|={r.product_states} build {r.build_time:.3f} s plan {r.plan_time:.3f} s"
        for r in rows
    )
    verdict(8, "build and plan time grow with product size", sizes_ok and monotone, detail)


# -- 9 ------------------------------------------------------------------------


def test_c09_size_independent_of_uncertainty(verdict):
    rows = scaling_table([(10, 10)], PHI4, fractions=(0.25, 0.5, 0.75, 1.0), seed=5, repeats=1)
    counts = [r.product_states for r in rows]
    ok = rows[0].dfa_states == 8 and all(c == 800 for c in counts)
    verdict(
        9,
        "product state count across uncertainty fractions",
        ok,
        f"DFA states {rows[0].dfa_states}, |S_p| at 25/50/75/100% = {counts}",
    )


# -- 10 -----------------------------------------------------------------------


def test_c10_incremental_refresh_equals_rebuild(verdict):
    rng = np.random.default_rng(99)
    m = grid_world(4, 4, alphabet=("A", "B"))
    dfa = compile_formula(parse("(!B U A) & F B", m.alphabet), m.alphabet)
    checks = mismatches = 0
    for _ in range(50):
        rows = []
        for _x in range(m.num_states):
            w = rng.random(4) * (rng.random(4) < 0.7)
            if w.sum() == 0:
                w[0] = 1.0
            rows.append({lt: float(p) for lt, p in enumerate(w / w.sum()) if p > 0})
        rows = [{lt: p / sum(r.values()) for lt, p in r.items()} for r in rows]
        b = Belief(rows, 4)
        truth = rng.integers(0, 4, size=m.num_states)
        p = build(m, b, dfa)
        order = rng.permutation(m.num_states)
        i = 0
        while i < len(order):
            step = int(rng.integers(1, 4))
            obs = [(int(x), int(truth[x])) for x in order[i : i + step]]
            i += step
            nb = update_map(b, obs)
            p = refresh_edges(p, nb, changed_states(b, nb))
            b = nb
            checks += 1
            mismatches += p.edges != build(m, b, dfa).edges
    verdict(
        10,
        "incremental edge refresh vs full rebuild",
        mismatches == 0,
        f"{mismatches} mismatches over {checks} reveals in 50 sequences",
    )
