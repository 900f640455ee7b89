"""Projected subgradient ascent on the continuous allocator's budget simplex.

For parametric one-sided games the allocator's problem is max over budget
splits of the aggregated subgame values. Each step solves the battlefield
matrix games at the current split, takes an envelope subgradient through the
equilibrium pair (for min aggregation, only the currently-worst battlefield
moves), and projects back onto the scaled simplex. The best split seen is
returned, so a nonconcave landscape can only help, never hurt, the reported
value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .matrixgame import MatrixGameSolution, subgame_at
from .model import BlottoInstance


@dataclass(frozen=True)
class Allocation:
    sigma: np.ndarray
    budget: float

    def __post_init__(self):
        s = np.asarray(self.sigma, dtype=np.float64)
        if np.any(s < -1e-12):
            raise ValueError("negative allocation entry")
        if abs(float(s.sum()) - self.budget) > 1e-6 * max(1.0, self.budget):
            raise ValueError(f"allocation sums to {s.sum()}, budget is {self.budget}")
        object.__setattr__(self, "sigma", s)


@dataclass
class AscentConfig:
    eta0: float = 0.01
    schedule: str = "diminishing"   # eta0 / sqrt(t+1), or "constant"
    max_iters: int = 1000
    init: str = "uniform"           # or "given", taking sigma0
    sigma0: np.ndarray = None
    snapshot_every: int = 0         # 0 disables sigma snapshots

    def __post_init__(self):
        if self.schedule not in ("diminishing", "constant"):
            raise ValueError(f"unknown step schedule {self.schedule!r}")
        if self.init not in ("uniform", "given"):
            raise ValueError(f"unknown init {self.init!r}")
        if self.init == "given" and self.sigma0 is None:
            raise ValueError("init 'given' needs sigma0")
        if self.eta0 <= 0 or self.max_iters < 1:
            raise ValueError("eta0 and max_iters must be positive")


@dataclass
class AscentTrace:
    iterations: list = field(default_factory=list)
    values: list = field(default_factory=list)
    worst_battlefield: list = field(default_factory=list)
    etas: list = field(default_factory=list)
    sigmas: list = field(default_factory=list)


def _check_parametric(inst: BlottoInstance):
    if inst.discrete or not inst.one_sided:
        raise ValueError("ascent needs a continuous one-sided instance")
    for i, bf in enumerate(inst.battlefields):
        p = bf.payoff
        if not hasattr(p, "value") or not hasattr(p, "derivative"):
            raise ValueError(f"battlefield {i} has no parametric payoff")
        if not p.increasing_in_sigma():
            raise ValueError(f"battlefield {i}: payoff is not increasing in the "
                             f"allocation, ascent would not help the allocator")


def _evaluate(inst: BlottoInstance, sigma: np.ndarray):
    sols = [subgame_at(bf, float(sigma[i])) for i, bf in enumerate(inst.battlefields)]
    vals = np.array([s.value for s in sols])
    if inst.aggregator == "min":
        i_star = int(np.argmin(vals))
        return float(vals[i_star]), vals, i_star, sols
    return float(vals.sum()), vals, int(np.argmin(vals)), sols


def aggregate_value(inst: BlottoInstance, sigma) -> tuple:
    """Aggregated value of a budget split: (value, per-battlefield values,
    index of the worst battlefield, lowest index on ties)."""
    _check_parametric(inst)
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.shape != (inst.n,) or np.any(sigma < 0):
        raise ValueError(f"need a nonnegative length-{inst.n} split")
    V, vals, i_star, _ = _evaluate(inst, sigma)
    return V, vals, i_star


def nash_subgradient(inst: BlottoInstance, i: int, sigma_i: float,
                     solution: MatrixGameSolution = None) -> float:
    """Envelope derivative of battlefield i's value in its own allocation.

    Both players' equilibrium mixtures are held fixed while the payoff matrix
    moves, which is the correct one-sided derivative whenever the subgame
    equilibrium is unique.
    """
    bf = inst.battlefields[i]
    sol = solution or subgame_at(bf, sigma_i)
    D = bf.payoff.derivative(sigma_i)
    return float(sol.strategy1 @ D @ sol.strategy2)


def project_simplex(v, budget: float = 1.0) -> np.ndarray:
    """Euclidean projection onto {x >= 0, sum x = budget}."""
    if budget < 0:
        raise ValueError(f"negative budget {budget}")
    v = np.asarray(v, dtype=np.float64)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - budget
    idx = np.arange(1, len(v) + 1)
    rho = np.max(idx[u - css / idx > 0])
    theta = css[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


def run_psa(inst: BlottoInstance, config: AscentConfig = None):
    """Ascend the allocator's value; returns (best Allocation, value, trace).

    min aggregation moves only the worst battlefield's coordinate per step;
    sum aggregation moves all of them. Every iterate is evaluated and the
    best split seen wins.
    """
    cfg = config or AscentConfig()
    _check_parametric(inst)
    n, budget = inst.n, float(inst.m2)
    if cfg.init == "uniform":
        sigma = np.full(n, budget / n)
    else:
        sigma = project_simplex(np.asarray(cfg.sigma0, dtype=np.float64), budget)
        if sigma.shape != (n,):
            raise ValueError(f"sigma0 must have length {n}")
    trace = AscentTrace()
    best_v = -math.inf
    best_sigma = sigma.copy()
    for t in range(cfg.max_iters):
        V, vals, i_star, sols = _evaluate(inst, sigma)
        if V > best_v:
            best_v, best_sigma = V, sigma.copy()
        eta = cfg.eta0 / math.sqrt(t + 1) if cfg.schedule == "diminishing" else cfg.eta0
        trace.iterations.append(t)
        trace.values.append(V)
        trace.worst_battlefield.append(i_star)
        trace.etas.append(eta)
        if cfg.snapshot_every and t % cfg.snapshot_every == 0:
            trace.sigmas.append(sigma.copy())
        if inst.aggregator == "min":
            g = nash_subgradient(inst, i_star, float(sigma[i_star]), sols[i_star])
            sigma = sigma.copy()
            sigma[i_star] += eta * g
        else:
            grads = np.array([nash_subgradient(inst, i, float(sigma[i]), sols[i])
                              for i in range(n)])
            sigma = sigma + eta * grads
        sigma = project_simplex(sigma, budget)
    return Allocation(best_sigma, budget), best_v, trace
