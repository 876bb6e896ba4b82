"""Online execution loop: sense, update the belief, replan when triggered, act."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .dfa import TotalDfa
from .formula import letter_names
from .model import Belief, Environment, PlDmdp, changed_states, sense, update_map
from .planner import Plan, PlannerConfig, value_iteration
from .product import build, feasibility_check, refresh_edges

__all__ = [
    "REPLAN_MODES",
    "RunConfig",
    "EpisodeTrace",
    "PolicyUndefinedError",
    "information_matrix",
    "information_norm",
    "run_episode",
    "check_word",
]

REPLAN_MODES = ("trigger", "every", "never")
TRIGGER_TOL = 1e-12


class PolicyUndefinedError(RuntimeError):
    pass


@dataclass(frozen=True)
class RunConfig:
    step_cap: int | None = None  # None: |X| * |S| * (|uncertain| + 1) + 1
    replan: str = "trigger"
    h: int = 1
    seed: int | None = None

    def __post_init__(self):
        if self.replan == "every_step":
            object.__setattr__(self, "replan", "every")
        if self.replan not in REPLAN_MODES:
            raise ValueError(f"replan mode must be one of {REPLAN_MODES}, got {self.replan!r}")
        if self.step_cap is not None and self.step_cap < 1:
            raise ValueError("step cap must be at least 1")
        if self.h < 0:
            raise ValueError("sensor range must be non-negative")


@dataclass
class EpisodeTrace:
    """Everything that happened in one episode.

    ``states``/``letters`` cover x(0..n+1) and their true labels;
    ``dfa_states`` is the DFA run s(0..n+2) over those letters, starting at
    the DFA's initial state.
    """

    actions: list[int] = field(default_factory=list)
    states: list[int] = field(default_factory=list)
    letters: list[int] = field(default_factory=list)
    dfa_states: list[int] = field(default_factory=list)
    product_states: list[int] = field(default_factory=list)
    replans: list[dict] = field(default_factory=list)
    steps: list[dict] = field(default_factory=list)
    uncertain_sizes: list[int] = field(default_factory=list)
    outcome: str = "running"
    beta: float = 1.0

    @property
    def cost(self) -> float:
        return self.beta * len(self.actions)

    @property
    def accepted(self) -> bool:
        return self.outcome == "accepted"

    def to_json(self, m: PlDmdp) -> dict:
        def cell(x):
            s = m.states[x]
            return list(s) if isinstance(s, tuple) else s

        return {
            "outcome": self.outcome,
            "actions": [m.actions[a] for a in self.actions],
            "states": [cell(x) for x in self.states],
            "letters": [letter_names(letter, m.alphabet) for letter in self.letters],
            "dfa_states": list(self.dfa_states),
            "replans": list(self.replans),
            "cost": self.cost,
        }


def information_matrix(prior: Belief, observations) -> np.ndarray:
    """Rows: observed states; columns: every letter.  Entry is |[truth == l] - p(l)|."""
    obs = list(observations)
    mat = np.zeros((len(obs), prior.num_letters))
    for j, (x, truth) in enumerate(obs):
        for letter, p in prior.items(x):
            mat[j, letter] = p
        mat[j, truth] = abs(1.0 - mat[j, truth])
    return mat


def information_norm(prior: Belief, observations) -> float:
    """Infinity norm (largest absolute row sum) of the information matrix."""
    mat = information_matrix(prior, observations)
    if mat.size == 0:
        return 0.0
    return float(np.abs(mat).sum(axis=1).max())


def check_word(trace: EpisodeTrace, dfa: TotalDfa) -> bool:
    """Replay the realised letters through the DFA; True iff a good prefix was produced."""
    s = dfa.initial
    if s in dfa.accepting:
        return True
    for letter in trace.letters:
        s = dfa.delta[s][letter]
        if s in dfa.accepting:
            return True
    return False


def run_episode(
    m: PlDmdp,
    b0: Belief,
    env: Environment,
    dfa: TotalDfa,
    cfg: PlannerConfig = PlannerConfig(),
    rc: RunConfig = RunConfig(),
    x0: int = 0,
) -> EpisodeTrace:
    """Drive the robot from ``x0`` until the task is satisfied or the run stops.

    The initial cell's label is fed to the DFA before the first action.  Each
    step: sense the neighbourhood, measure the discrepancy with the prior
    belief, pin the sensed labels, and (re)plan when the replan mode asks for
    it; then execute the policy's action.
    """
    if not 0 <= x0 < m.num_states:
        raise ValueError(f"start state {x0} is not in the model")
    env = Environment(env.truth, rc.h) if env.h != rc.h else env
    trace = EpisodeTrace(beta=cfg.beta)
    belief = b0
    x = x0
    s = dfa.step(dfa.initial, env.truth[x])
    trace.states.append(x)
    trace.letters.append(env.truth[x])
    trace.dfa_states.extend([dfa.initial, s])

    product = None
    plan: Plan | None = None
    cap = rc.step_cap
    t = 0
    while True:
        obs = sense(env, x, m)
        norm = information_norm(belief, obs)
        updated = update_map(belief, obs)
        changed = changed_states(belief, updated)
        belief = updated
        uncertain = len(belief.uncertain())
        trace.uncertain_sizes.append(uncertain)
        if cap is None:
            cap = m.num_states * dfa.num_reachable * (uncertain + 1) + 1

        if s in dfa.accepting:
            trace.outcome = "accepted"
            break
        if s == dfa.trash:
            trace.outcome = "violated"
            break
        if t >= cap:
            trace.outcome = "step_cap_exceeded"
            break

        triggered = (
            t == 0
            or rc.replan == "every"
            or (rc.replan == "trigger" and norm > TRIGGER_TOL)
        )
        step = {"t": t, "norm": norm, "triggered": triggered, "sweeps": 0, "planning_time": 0.0}
        if triggered:
            tic = time.perf_counter()
            product = build(m, belief, dfa) if product is None else refresh_edges(product, belief, changed)
            plan = value_iteration(product, cfg)
            step["planning_time"] = time.perf_counter() - tic
            step["sweeps"] = plan.sweeps
            trace.replans.append(
                {"t": t, "sweeps": plan.sweeps, "residual": plan.residual, "norm": norm, "uncertain": uncertain}
            )
            if not feasibility_check(product, product.encode(x, s)):
                trace.steps.append(step)
                trace.outcome = "infeasible"
                break
        trace.steps.append(step)

        sp = product.encode(x, s)
        trace.product_states.append(sp)
        a = plan.policy[sp]
        if a is None:
            raise PolicyUndefinedError(f"no feasible action at state {m.states[x]!r}")
        x = m.delta[x][a]
        s = dfa.step(s, env.truth[x])
        trace.actions.append(a)
        trace.states.append(x)
        trace.letters.append(env.truth[x])
        trace.dfa_states.append(s)
        t += 1

    if product is not None:
        trace.product_states.append(product.encode(x, s))
    return trace
