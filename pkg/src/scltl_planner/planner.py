"""Reward shaping and value iteration over the product automaton."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .product import ProductAutomaton

__all__ = [
    "PlannerConfig",
    "Plan",
    "ConvergenceError",
    "reward",
    "value_iteration",
    "dead_states",
    "policy_reachable",
    "is_satisfying",
    "min_nonterminal_value",
    "exact_policy_value",
]


class ConvergenceError(RuntimeError):
    def __init__(self, sweeps: int, residual: float):
        self.sweeps = sweeps
        self.residual = residual
        super().__init__(f"value iteration did not converge in {sweeps} sweeps (residual {residual:.3g})")


@dataclass(frozen=True)
class PlannerConfig:
    gamma: float = 0.99
    beta: float = 1.0
    eps: float = 0.01
    max_sweeps: int = 100_000
    # Pin states that cannot reach an accepting state to -beta/(1-gamma),
    # their exact value under every policy; saves sweeps.
    pin_dead: bool = True
    # "gauss-seidel" (in place) or "jacobi" (synchronous sweeps).
    sweep: str = "gauss-seidel"

    def __post_init__(self):
        if not 0 <= self.gamma < 1:
            raise ValueError(f"discount must lie in [0, 1), got {self.gamma}")
        if not self.beta > 0:
            raise ValueError(f"step cost must be positive, got {self.beta}")
        if not self.eps > 0:
            raise ValueError(f"convergence threshold must be positive, got {self.eps}")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be at least 1")
        if self.sweep not in ("gauss-seidel", "jacobi"):
            raise ValueError(f"unknown sweep order {self.sweep!r}")

    @property
    def floor(self) -> float:
        """The return of any trajectory that never reaches an accepting state."""
        return -self.beta / (1 - self.gamma)

    @property
    def slack(self) -> float:
        return 10 * self.eps


@dataclass
class Plan:
    values: list[float]
    policy: list[int | None]
    sweeps: int
    residual: float
    residuals: list[float] = field(default_factory=list, repr=False)


def reward(p: ProductAutomaton, sp: int, action: int, sp_next: int, cfg: PlannerConfig) -> float:
    """Edge reward: heavy penalty for entering trash, zero out of terminals, else -beta."""
    if not p.is_trash(sp) and p.is_trash(sp_next):
        x, _ = p.decode(sp)
        y, _ = p.decode(sp_next)
        if p.mdp.delta[x][action] == y:
            return cfg.floor
    if p.is_terminal(sp):
        return 0.0
    return -cfg.beta


def dead_states(p: ProductAutomaton) -> set[int]:
    """Non-terminal states from which no positive-probability path reaches acceptance."""
    preds: list[list[int]] = [[] for _ in range(p.num_states)]
    for sp, row in enumerate(p.edges):
        if p.is_terminal(sp):
            continue
        for _, succ in row:
            for t, _prob in succ:
                preds[t].append(sp)
    alive = set(sp for sp in range(p.num_states) if p.is_accepting(sp))
    queue = deque(alive)
    while queue:
        t = queue.popleft()
        for sp in preds[t]:
            if sp not in alive:
                alive.add(sp)
                queue.append(sp)
    return {sp for sp in range(p.num_states) if sp not in alive and not p.is_terminal(sp)}


def _backup_table(p: ProductAutomaton, cfg: PlannerConfig, states):
    table = {}
    for sp in states:
        table[sp] = [
            (a, [(t, prob, reward(p, sp, a, t, cfg)) for t, prob in succ])
            for a, succ in p.edges[sp]
        ]
    return table


def value_iteration(
    p: ProductAutomaton, cfg: PlannerConfig = PlannerConfig(), init: list[float] | None = None
) -> Plan:
    """Optimal values and a greedy deterministic policy.

    Terminal states are pinned at 0, everything else starts at the floor
    ``-beta / (1 - gamma)``.  Sweeps stop once the largest change in a sweep
    is at most ``cfg.eps``.  Ties in the final argmax go to the
    lowest action index.
    """
    n = p.num_states
    gamma = cfg.gamma
    # Start from the floor, a lower bound on every return: iterates then rise
    # monotonically and the greedy policy is never worse than the values say.
    v = [cfg.floor] * n if init is None else list(init)
    pinned = {sp for sp in range(n) if p.is_terminal(sp)}
    for sp in pinned:
        v[sp] = 0.0
    if cfg.pin_dead:
        for sp in dead_states(p):
            v[sp] = cfg.floor
            pinned.add(sp)
    free = [sp for sp in range(n) if sp not in pinned and p.edges[sp]]
    table = _backup_table(p, cfg, free)
    rows = [table[sp] for sp in free]

    residuals = []
    sweeps = 0
    residual = math.inf
    while residual > cfg.eps:
        if sweeps >= cfg.max_sweeps:
            raise ConvergenceError(sweeps, residual)
        residual = 0.0
        src = v if cfg.sweep == "gauss-seidel" else list(v)
        for sp, row in zip(free, rows):
            best = -math.inf
            for _a, succ in row:
                q = 0.0
                for t, prob, r in succ:
                    q += prob * (r + gamma * src[t])
                if q > best:
                    best = q
            delta = abs(best - v[sp])
            if delta > residual:
                residual = delta
            v[sp] = best
        sweeps += 1
        residuals.append(residual)

    policy = greedy_policy(p, v, cfg)
    return Plan(values=v, policy=policy, sweeps=sweeps, residual=residual, residuals=residuals)


def greedy_policy(p: ProductAutomaton, v: list[float], cfg: PlannerConfig) -> list[int | None]:
    policy: list[int | None] = []
    for sp in range(p.num_states):
        best_a, best = None, -math.inf
        for a, succ in p.edges[sp]:
            q = sum(prob * (reward(p, sp, a, t, cfg) + cfg.gamma * v[t]) for t, prob in succ)
            if q > best:
                best_a, best = a, q
        policy.append(best_a)
    return policy


def policy_reachable(p: ProductAutomaton, policy: list[int | None], start: int) -> set[int]:
    """States reachable from ``start`` following ``policy`` along positive edges."""
    seen = {start}
    queue = deque([start])
    while queue:
        sp = queue.popleft()
        if p.is_terminal(sp):
            continue
        a = policy[sp]
        for act, succ in p.edges[sp]:
            if act != a:
                continue
            for t, _prob in succ:
                if t not in seen:
                    seen.add(t)
                    queue.append(t)
    return seen


def min_nonterminal_value(
    values: list[float], p: ProductAutomaton, states=None
) -> float | None:
    pool = range(p.num_states) if states is None else states
    vals = [values[sp] for sp in pool if not p.is_terminal(sp)]
    return min(vals) if vals else None


def is_satisfying(
    plan: Plan | list[float],
    p: ProductAutomaton,
    cfg: PlannerConfig = PlannerConfig(),
    start: int | None = None,
) -> bool:
    """Value-threshold test for a non-zero-probability satisfying policy.

    Every non-terminal value considered must exceed ``floor + 10 * eps``.
    With ``start`` given (and a :class:`Plan`), only states reachable from
    ``start`` under the plan's policy are considered.
    """
    values = plan.values if isinstance(plan, Plan) else plan
    states = None
    if start is not None:
        if not isinstance(plan, Plan):
            raise TypeError("a Plan is required to restrict the check to reachable states")
        if p.is_trash(start):
            return False
        states = policy_reachable(p, plan.policy, start)
    lowest = min_nonterminal_value(values, p, states)
    if lowest is None:
        return True
    return lowest > cfg.floor + cfg.slack


def exact_policy_value(
    p: ProductAutomaton, policy: list[int | None], cfg: PlannerConfig = PlannerConfig(), cap: int = 200
) -> list[float]:
    """Solve ``v = r_pi + gamma * P_pi v`` exactly for a fixed policy.

    Terminal states have value 0; a non-terminal state without an action in
    ``policy`` is treated as absorbing with reward ``-beta`` per step.
    """
    n = p.num_states
    if n > cap:
        raise ValueError(f"product has {n} states, above the exact-evaluation cap of {cap}")
    A = np.eye(n)
    rhs = np.zeros(n)
    for sp in range(n):
        if p.is_terminal(sp):
            continue
        a = policy[sp]
        succ = dict(p.edges[sp]).get(a) if a is not None else None
        if succ is None:
            A[sp, sp] -= cfg.gamma
            rhs[sp] = -cfg.beta
            continue
        for t, prob in succ:
            rhs[sp] += prob * reward(p, sp, a, t, cfg)
            A[sp, t] -= cfg.gamma * prob
    return np.linalg.solve(A, rhs).tolist()
