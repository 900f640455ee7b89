"""Regret-matching dynamics on simplices and strategy dags.

Four update rules share one code path: plain regret matching, its
nonnegative-memory variant, and the predictive versions of both, which add
the most recent instantaneous regret to the accumulated score before
normalizing. Local learners live on a single action simplex; dag learners
keep one score per dag edge and per (commitment, action) pair and recommend
whole sequence strategies through the backend sweeps.

Self-play supports the discrete two-sided sum game (both players on their
dags) and the discrete one-sided min game in its scalarized form, where the
minimizer picks a battlefield and an action through a two-level cascade of
local learners. Values and gaps are always the maximizer's gain.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import backend
from .flowdag import (SequenceStrategy, TwoLevelSeqStrategy, best_response,
                      build_dag, pack_x, payoff_views)
from .model import BlottoInstance

ALGORITHMS = ("rm", "rm+", "prm", "prm+")


def _check_algorithm(algorithm: str):
    if algorithm not in ALGORITHMS:
        raise ValueError(f"algorithm must be one of {ALGORITHMS}, not {algorithm!r}")
    return algorithm.endswith("+"), algorithm.startswith("p")


class LocalLearner:
    """Regret matching on one action simplex."""

    def __init__(self, n_actions: int, algorithm: str = "rm+"):
        if n_actions < 1:
            raise ValueError(f"need at least one action, got {n_actions}")
        self.n_actions = n_actions
        self.algorithm = algorithm
        self.plus, self.predictive = _check_algorithm(algorithm)
        self.cum = np.zeros(n_actions)
        self.last_delta = np.zeros(n_actions)
        self.last_rec = np.full(n_actions, 1.0 / n_actions)


def local_recommend(learner: LocalLearner) -> np.ndarray:
    score = learner.cum + learner.last_delta if learner.predictive else learner.cum
    pos = np.maximum(score, 0.0)
    s = pos.sum()
    rec = pos / s if s > 0 else np.full(learner.n_actions, 1.0 / learner.n_actions)
    learner.last_rec = rec
    return rec


def local_observe(learner: LocalLearner, reward: np.ndarray) -> None:
    """Update from a full per-action reward vector (higher is better)."""
    reward = np.asarray(reward, dtype=np.float64)
    delta = reward - float(learner.last_rec @ reward)
    learner.cum += delta
    if learner.plus:
        np.maximum(learner.cum, 0.0, out=learner.cum)
    learner.last_delta = delta


class DagLearner:
    """Regret matching over a full allocation dag plus its action simplices."""

    def __init__(self, dag, inst: BlottoInstance, player: int, algorithm: str = "rm+"):
        self.plus, self.predictive = _check_algorithm(algorithm)
        self.algorithm = algorithm
        self.dag = dag
        self.player = player
        self.sign = -1.0 if player == 1 else 1.0
        U1, U2 = payoff_views(inst)
        self.Uflat = U1 if player == 1 else U2
        n, mp1 = dag.n, dag.m + 1
        amax = dag.a_max
        if self.Uflat.shape[1] != mp1 * amax:
            raise ValueError("payoff view does not match this player's dag")
        self.act_counts = np.array(dag.action_counts, dtype=np.int64)
        self.alloc_reg = np.zeros((n, mp1, mp1))
        self.act_reg = np.zeros((n, mp1, amax))
        self.alloc_last = np.zeros((n, mp1, mp1))
        self.act_last = np.zeros((n, mp1, amax))
        # kernel scratch, reused every iteration
        self.h = np.zeros((n, mp1, mp1))
        self.x = np.zeros((n, mp1, amax))
        self.w = np.zeros((n, mp1))
        self.alloc_dist = np.zeros((n, mp1, mp1))
        self.act_dist = np.zeros((n, mp1, amax))
        self.act_reward = np.zeros((n, mp1, amax))
        self.act_delta = np.zeros((n, mp1, amax))
        self.alloc_util = np.zeros((n, mp1, mp1))
        self.alloc_delta = np.zeros((n, mp1, mp1))


def dag_recommend(learner: DagLearner) -> SequenceStrategy:
    d = learner.dag
    if learner.predictive:
        alloc_score = learner.alloc_reg + learner.alloc_last
        act_score = learner.act_reg + learner.act_last
    else:
        alloc_score = learner.alloc_reg
        act_score = learner.act_reg
    backend.dag_forward(alloc_score, act_score, d.valid_edge, learner.act_counts,
                        d.m, learner.h, learner.x, learner.w,
                        learner.alloc_dist, learner.act_dist)
    v = np.zeros(d.dim)
    mask = d.edge_ids >= 0
    v[d.edge_ids[mask]] = learner.h[mask]
    mask = d.x_ids >= 0
    v[d.x_ids[mask]] = learner.x[mask]
    return SequenceStrategy(d, v)


def _packed_opponent(learner: DagLearner, opponent) -> np.ndarray:
    if isinstance(opponent, np.ndarray):
        return opponent
    if isinstance(opponent, SequenceStrategy):
        return np.ascontiguousarray(pack_x(opponent).reshape(learner.dag.n, -1))
    if isinstance(opponent, TwoLevelSeqStrategy):
        flat = np.zeros((learner.dag.n, learner.Uflat.shape[2]))
        for i, acts in enumerate(opponent.y_action):
            flat[i, :len(acts)] = acts
        return flat
    raise TypeError(f"cannot observe a {type(opponent).__name__}")


def dag_observe(learner: DagLearner, opponent) -> None:
    """Accumulate counterfactual regrets against the opponent's last play."""
    opp = _packed_opponent(learner, opponent)
    d = learner.dag
    backend.dag_observe(learner.Uflat, opp, learner.act_dist, learner.alloc_dist,
                        d.valid_edge, learner.act_counts, learner.sign,
                        learner.act_reward, learner.act_delta,
                        learner.alloc_util, learner.alloc_delta)
    learner.alloc_reg += learner.alloc_delta
    learner.act_reg += learner.act_delta
    if learner.plus:
        np.maximum(learner.alloc_reg, 0.0, out=learner.alloc_reg)
        np.maximum(learner.act_reg, 0.0, out=learner.act_reg)
    learner.alloc_last = learner.alloc_delta.copy()
    learner.act_last = learner.act_delta.copy()


class _UnitRootLearner:
    """Battlefield pick plus per-battlefield action pick, both regret-matched.

    This is the minimizer of the one-sided min game in scalarized form: a
    root learner over battlefields cascades into one local learner per
    battlefield, and the product of their recommendations is a unit-rooted
    weight vector.
    """

    def __init__(self, inst: BlottoInstance, algorithm: str):
        self.root = LocalLearner(inst.n, algorithm)
        self.action = [LocalLearner(bf.a1, algorithm) for bf in inst.battlefields]
        U1, _ = payoff_views(inst)
        self.U1 = U1
        self.a1s = [bf.a1 for bf in inst.battlefields]
        self.last_y = None

    def recommend(self) -> TwoLevelSeqStrategy:
        p = local_recommend(self.root)
        acts = []
        for i, l in enumerate(self.action):
            acts.append(p[i] * local_recommend(l))
        y = TwoLevelSeqStrategy("P_polytope", 1.0, p, tuple(acts))
        self.last_y = y
        return y

    def observe(self, opponent: SequenceStrategy) -> None:
        opp = pack_x(opponent).reshape(len(self.a1s), -1)
        E = np.einsum("irc,ic->ir", self.U1, opp)   # expected gain per (bf, action)
        root_reward = np.empty(len(self.a1s))
        for i, l in enumerate(self.action):
            r = -E[i, :self.a1s[i]]
            root_reward[i] = float(l.last_rec @ r)
            local_observe(l, r)
        local_observe(self.root, root_reward)


@dataclass
class LearnConfig:
    algorithm: str = "rm+"
    update_mode: str = "simultaneous"   # or "alternating"
    averaging: str = "uniform"          # or "quadratic", weight (t+1)^2
    gap_check_every: int = 100
    gap_threshold: float = 0.002
    max_iters: int = 10_000
    track_regret: bool = False
    seed: int = None   # accepted for interface symmetry; the dynamics are deterministic

    def __post_init__(self):
        _check_algorithm(self.algorithm)
        if self.update_mode not in ("simultaneous", "alternating"):
            raise ValueError(f"unknown update mode {self.update_mode!r}")
        if self.averaging not in ("uniform", "quadratic"):
            raise ValueError(f"unknown averaging {self.averaging!r}")
        if self.gap_check_every < 1 or self.max_iters < 1:
            raise ValueError("gap_check_every and max_iters must be positive")


@dataclass
class LearnTrace:
    iterations: list = field(default_factory=list)
    times: list = field(default_factory=list)
    gaps: list = field(default_factory=list)
    values: list = field(default_factory=list)
    regrets: list = field(default_factory=list)   # (T, avg regret 1, avg regret 2)


@dataclass
class SelfPlayResult:
    strategy1: object
    strategy2: object
    value: float
    gap: float
    iterations: int
    status: str        # "converged" or "max_iters"
    trace: LearnTrace


def _scalarized_value(inst, U1, y1: TwoLevelSeqStrategy, x2: SequenceStrategy) -> float:
    opp = pack_x(x2).reshape(inst.n, -1)
    total = 0.0
    for i, acts in enumerate(y1.y_action):
        total += float(acts @ (U1[i, :len(acts)] @ opp[i]))
    return total


def saddle_point_gap(inst: BlottoInstance, strategy1, strategy2) -> float:
    """Distance of a profile from equilibrium: maximizer's best response
    value minus minimizer's best response value. Nonnegative, zero exactly
    at a saddle point."""
    if not inst.discrete:
        raise ValueError("gap evaluation needs a discrete instance")
    if inst.one_sided:
        d2 = build_dag(inst.n, int(inst.m2), inst.action_counts(2))
        _, v1 = best_response(inst, None, strategy2, 1)
        _, v2 = best_response(inst, d2, strategy1, 2)
    else:
        d1 = build_dag(inst.n, int(inst.m1), inst.action_counts(1))
        d2 = build_dag(inst.n, int(inst.m2), inst.action_counts(2))
        _, v1 = best_response(inst, d1, strategy2, 1)
        _, v2 = best_response(inst, d2, strategy1, 2)
    return float(v2 - v1)


def self_play(inst: BlottoInstance, config: LearnConfig = None) -> SelfPlayResult:
    """Run both learners against each other until the gap closes.

    The returned strategies are the weighted averages of the iterates; if the
    gap of the averaged profile is g, its value is within g of the game
    value, because both best-response values bracket both numbers.
    """
    cfg = config or LearnConfig()
    if not inst.discrete:
        raise ValueError("self-play needs a discrete instance")
    two_sided_sum = not inst.one_sided and inst.aggregator == "sum"
    one_sided_min = inst.one_sided and inst.aggregator == "min"
    if not (two_sided_sum or one_sided_min):
        raise ValueError(f"self-play covers two-sided sum and one-sided min games, "
                         f"not {inst.sided}/{inst.aggregator}")
    U1, _ = payoff_views(inst)
    d2 = build_dag(inst.n, int(inst.m2), inst.action_counts(2))
    p2 = DagLearner(d2, inst, 2, cfg.algorithm)
    if two_sided_sum:
        d1 = build_dag(inst.n, int(inst.m1), inst.action_counts(1))
        p1 = DagLearner(d1, inst, 1, cfg.algorithm)
        avg1 = np.zeros(d1.dim)
    else:
        d1 = None
        p1 = _UnitRootLearner(inst, cfg.algorithm)
        avg1_b = np.zeros(inst.n)
        avg1_a = [np.zeros(bf.a1) for bf in inst.battlefields]
    avg2 = np.zeros(d2.dim)
    wsum = 0.0
    trace = LearnTrace()
    t0 = time.perf_counter()

    # regret tracking keeps its own uniform play sums, independent of the
    # averaging weights used for the returned profile
    cum2_vals = np.zeros(d2.dim)
    cum1_vals = np.zeros(d1.dim) if two_sided_sum else None
    cum1_b = None if two_sided_sum else np.zeros(inst.n)
    cum1_a = None if two_sided_sum else [np.zeros(bf.a1) for bf in inst.battlefields]
    realized = 0.0

    def pair_value(x1, x2) -> float:
        if one_sided_min:
            return _scalarized_value(inst, U1, x1, x2)
        a = pack_x(x1).reshape(inst.n, -1)
        b = pack_x(x2).reshape(inst.n, -1)
        return float(sum(a[i] @ U1[i] @ b[i] for i in range(inst.n)))

    def external_regrets(T: int):
        avg2 = SequenceStrategy(d2, cum2_vals / T)
        if two_sided_sum:
            avg1 = SequenceStrategy(d1, cum1_vals / T)
            _, v1 = best_response(inst, d1, avg2, 1)
        else:
            avg1 = TwoLevelSeqStrategy("P_polytope", 1.0, cum1_b / T,
                                       tuple(a / T for a in cum1_a))
            _, v1 = best_response(inst, None, avg2, 1)
        _, v2 = best_response(inst, d2, avg1, 2)
        return realized - T * v1, T * v2 - realized

    def avg_profile():
        if two_sided_sum:
            s1 = SequenceStrategy(d1, avg1 / wsum)
        else:
            yb = avg1_b / wsum
            s1 = TwoLevelSeqStrategy("P_polytope", 1.0, yb,
                                     tuple(a / wsum for a in avg1_a))
        return s1, SequenceStrategy(d2, avg2 / wsum)

    status = "max_iters"
    it = 0
    gap = float("inf")
    for t in range(cfg.max_iters):
        it = t + 1
        if cfg.update_mode == "simultaneous":
            x1 = p1.recommend() if one_sided_min else dag_recommend(p1)
            x2 = dag_recommend(p2)
            if one_sided_min:
                p1.observe(x2)
            else:
                dag_observe(p1, x2)
            dag_observe(p2, x1)
        else:
            x1 = p1.recommend() if one_sided_min else dag_recommend(p1)
            dag_observe(p2, x1)
            x2 = dag_recommend(p2)
            if one_sided_min:
                p1.observe(x2)
            else:
                dag_observe(p1, x2)
        w = 1.0 if cfg.averaging == "uniform" else float((t + 1) ** 2)
        wsum += w
        if two_sided_sum:
            avg1 += w * x1.values
        else:
            avg1_b += w * x1.y_battlefield
            for i, acts in enumerate(x1.y_action):
                avg1_a[i] += w * acts
        avg2 += w * x2.values

        if cfg.track_regret:
            realized += pair_value(x1, x2)
            cum2_vals += x2.values
            if two_sided_sum:
                cum1_vals += x1.values
            else:
                cum1_b += x1.y_battlefield
                for i, acts in enumerate(x1.y_action):
                    cum1_a[i] += acts

        if it % cfg.gap_check_every == 0 or it == cfg.max_iters:
            s1, s2 = avg_profile()
            gap = saddle_point_gap(inst, s1, s2)
            trace.iterations.append(it)
            trace.times.append(time.perf_counter() - t0)
            trace.gaps.append(gap)
            trace.values.append(pair_value(s1, s2))
            if cfg.track_regret:
                r1, r2 = external_regrets(it)
                trace.regrets.append((it, r1 / it, r2 / it))
            if gap <= cfg.gap_threshold:
                status = "converged"
                break

    s1, s2 = avg_profile()
    return SelfPlayResult(s1, s2, trace.values[-1], gap, it, status, trace)
