"""Monte Carlo benchmark and scaling measurements."""

from __future__ import annotations

import statistics
import time
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .dfa import TotalDfa, compile_formula
from .executor import EpisodeTrace, RunConfig, check_word, run_episode
from .formula import parse
from .model import Belief, Environment, PlDmdp, grid_world
from .planner import PlannerConfig, value_iteration
from .product import build

__all__ = [
    "BenchScenario",
    "StrategyStats",
    "BenchReport",
    "ScalingRow",
    "map_generate",
    "candidates_for",
    "run_benchmark",
    "uncertain_belief",
    "scaling_table",
]


def map_generate(
    belief: Belief,
    required: Sequence[tuple[int, Sequence[int]]],
    rng: np.random.Generator | int,
    h: int = 1,
) -> Environment:
    """Sample a ground truth from ``belief``, then repair missing required labels.

    Each state draws one letter from its distribution.  For every required
    observation bit with no realised instance, a uniformly chosen candidate
    state gets that observation added to its letter.
    """
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    truth = []
    for x in range(len(belief)):
        support = belief.items(x)
        u = rng.random()
        acc = 0.0
        chosen = support[-1][0]
        for letter, p in support:
            acc += p
            if u < acc:
                chosen = letter
                break
        truth.append(chosen)
    for bit, candidates in required:
        if not candidates:
            raise ValueError(f"no candidate states for required observation bit {bit}")
        if not any(t >> bit & 1 for t in truth):
            x = candidates[int(rng.integers(len(candidates)))]
            truth[x] |= 1 << bit
    return Environment(tuple(truth), h)


def candidates_for(belief: Belief, bit: int) -> list[int]:
    """States whose belief gives positive mass to a letter containing ``bit``."""
    return [x for x in range(len(belief)) if any(lt >> bit & 1 for lt in belief.support(x))]


@dataclass
class BenchScenario:
    mdp: PlDmdp
    belief: Belief
    formula: str
    start: int = 0
    worlds: int = 200
    seed: int = 0
    strategies: tuple[str, ...] = ("trigger", "never")
    required: tuple[str, ...] | None = None  # observation names; default: all in the formula's alphabet
    h: int = 1
    step_cap: int | None = None  # default 4 * |X| * |S|
    keep_traces: bool = False


@dataclass
class StrategyStats:
    strategy: str
    successes: int = 0
    outcomes: dict[str, int] = field(default_factory=dict)
    errors: int = 0
    lengths: list[int] = field(default_factory=list)
    replans: list[int] = field(default_factory=list)
    plan_times: list[float] = field(default_factory=list)
    sweeps: list[int] = field(default_factory=list)

    @property
    def mean(self) -> float | None:
        return statistics.fmean(self.lengths) if self.lengths else None

    @property
    def median(self) -> float | None:
        return statistics.median(self.lengths) if self.lengths else None

    @property
    def sd(self) -> float | None:
        return statistics.stdev(self.lengths) if len(self.lengths) > 1 else None

    def summary(self) -> dict:
        return {
            "strategy": self.strategy,
            "successes": self.successes,
            "outcomes": dict(sorted(self.outcomes.items())),
            "errors": self.errors,
            "mean_length": self.mean,
            "median_length": self.median,
            "sd_length": self.sd,
            "mean_replans": statistics.fmean(self.replans) if self.replans else None,
            "total_plan_time": sum(self.plan_times),
            "total_sweeps": sum(self.sweeps),
        }


@dataclass
class BenchReport:
    worlds: int
    seed: int
    step_cap: int
    strategies: dict[str, StrategyStats]
    # per world, per strategy: (outcome, actions as indices)
    episodes: list[dict[str, tuple[str, tuple[int, ...]]]] = field(default_factory=list)
    deviating_worlds: int = 0
    # filled only with keep_traces
    environments: list[Environment] = field(default_factory=list, repr=False)
    traces: list[dict[str, EpisodeTrace]] = field(default_factory=list, repr=False)

    def to_json(self) -> dict:
        return {
            "worlds": self.worlds,
            "seed": self.seed,
            "step_cap": self.step_cap,
            "deviating_worlds": self.deviating_worlds,
            "strategies": [s.summary() for s in self.strategies.values()],
        }

    def csv_rows(self) -> list[dict]:
        return [
            {k: v for k, v in s.summary().items() if k != "outcomes"} for s in self.strategies.values()
        ]


def run_benchmark(sc: BenchScenario, cfg: PlannerConfig = PlannerConfig()) -> BenchReport:
    """Run every strategy on the same seeded set of generated worlds."""
    m, belief = sc.mdp, sc.belief
    dfa = compile_formula(parse(sc.formula, m.alphabet), m.alphabet)
    names = sc.required if sc.required is not None else m.alphabet
    required = []
    for name in names:
        bit = m.alphabet.index(name)
        required.append((bit, candidates_for(belief, bit)))
    cap = sc.step_cap or 4 * m.num_states * dfa.num_reachable
    rng = np.random.default_rng(sc.seed)
    stats = {name: StrategyStats(name) for name in sc.strategies}
    report = BenchReport(sc.worlds, sc.seed, cap, stats)
    for _ in range(sc.worlds):
        env = map_generate(belief, required, rng, sc.h)
        per_world = {}
        kept: dict[str, EpisodeTrace] = {}
        for name in sc.strategies:
            st = stats[name]
            rc = RunConfig(step_cap=cap, replan=name, h=sc.h)
            try:
                trace = run_episode(m, belief, env, dfa, cfg, rc, sc.start)
            except Exception:  # noqa: BLE001 - a failed episode must not abort the batch
                st.errors += 1
                st.outcomes["error"] = st.outcomes.get("error", 0) + 1
                per_world[name] = ("error", ())
                continue
            kept[name] = trace
            outcome = trace.outcome
            if outcome == "accepted" and not check_word(trace, dfa):
                outcome = "uncertified"
            st.outcomes[outcome] = st.outcomes.get(outcome, 0) + 1
            if outcome == "accepted":
                st.successes += 1
                st.lengths.append(len(trace.actions))
            st.replans.append(len(trace.replans))
            st.plan_times.append(sum(step["planning_time"] for step in trace.steps))
            st.sweeps.append(sum(r["sweeps"] for r in trace.replans))
            per_world[name] = (outcome, tuple(trace.actions))
            if name == "never" and any(env.truth[x] != belief.mode(x) for x in trace.states):
                report.deviating_worlds += 1
        report.episodes.append(per_world)
        if sc.keep_traces:
            report.environments.append(env)
            report.traces.append(kept)
    return report


# ---------------------------------------------------------------------------
# scaling

# Uncertain cells: every non-empty subset of {A, B, C} at 0.1, the empty set at 0.3.
UNCERTAIN_ROW = {1: 0.1, 2: 0.1, 4: 0.1, 3: 0.1, 5: 0.1, 6: 0.1, 7: 0.1, 0: 0.3}


def uncertain_belief(n_states: int, fraction: float, rng: np.random.Generator | int) -> Belief:
    """Belief over alphabet (A, B, C) with ``fraction`` of the states uncertain."""
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    k = int(round(fraction * n_states))
    chosen = set(rng.choice(n_states, size=k, replace=False).tolist()) if k else set()
    rows = [dict(UNCERTAIN_ROW) if x in chosen else {0: 1.0} for x in range(n_states)]
    return Belief(rows, 8)


@dataclass
class ScalingRow:
    width: int
    height: int
    fraction: float
    mdp_states: int
    mdp_transitions: int
    dfa_states: int
    product_states: int
    product_edges: int
    build_time: float
    plan_time: float
    sweeps: int

    def to_json(self) -> dict:
        return asdict(self)


def scaling_table(
    sizes: Sequence[tuple[int, int]],
    formula: str,
    fractions: Sequence[float] = (1.0,),
    seed: int = 0,
    repeats: int = 3,
    cfg: PlannerConfig = PlannerConfig(),
) -> list[ScalingRow]:
    """Time product construction and one value-iteration pass per size and fraction.

    Times are medians over ``repeats`` runs.
    """
    alphabet = ("A", "B", "C")
    dfa: TotalDfa = compile_formula(parse(formula, alphabet), alphabet)
    rows = []
    for width, height in sizes:
        m = grid_world(width, height, alphabet=alphabet, beta=cfg.beta)
        for fraction in fractions:
            belief = uncertain_belief(m.num_states, fraction, np.random.default_rng([seed, width, height]))
            build_times, plan_times = [], []
            for _ in range(repeats):
                tic = time.perf_counter()
                product = build(m, belief, dfa)
                build_times.append(time.perf_counter() - tic)
                tic = time.perf_counter()
                plan = value_iteration(product, cfg)
                plan_times.append(time.perf_counter() - tic)
            rows.append(
                ScalingRow(
                    width=width,
                    height=height,
                    fraction=fraction,
                    mdp_states=m.num_states,
                    mdp_transitions=m.num_transitions,
                    dfa_states=dfa.num_reachable,
                    product_states=product.num_states,
                    product_edges=product.num_edges,
                    build_time=statistics.median(build_times),
                    plan_time=statistics.median(plan_times),
                    sweeps=plan.sweeps,
                )
            )
    return rows
