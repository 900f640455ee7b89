"""Sequence-form LP constructions and equilibrium extraction.

Each builder turns an instance into one LpModel whose optimal value is the
game value (always the maximizer's gain) and whose primal/dual pair carries
both players' strategies. Naming scheme shared by all builders:

  theta_src, theta_snk, lam[i,c], mu[i,k]   value recursion over a flow dag
  h2[i,a,b], x2[i,k,a]                      the maximizer's sequence weights
  y1b[i], y1a[i,a]                          unit-rooted minimizer weights
  y2b[i], y2a[i,a]                          budget-rooted maximizer weights

Row order inside a builder is load-bearing: extraction walks rows by name,
and the first blocks mirror the responding player's dag variable order so
duals line up with sequence ids.
"""

from __future__ import annotations

import numpy as np

from .flowdag import (LayeredStrategyDag, SequenceStrategy, TwoLevelSeqStrategy,
                      build_dag, strategy_from_packed)
from .lp import LpModel, LpSolution
from .model import BlottoInstance

SETTINGS = ("two_sided_sum", "one_sided_min_maxmin", "one_sided_min_minmax",
            "cont_sum_maxmin", "cont_sum_minmax",
            "cont_min_maxmin", "cont_min_minmax")


def _dags(inst: BlottoInstance):
    d1 = build_dag(inst.n, int(inst.m1), inst.action_counts(1))
    d2 = build_dag(inst.n, int(inst.m2), inst.action_counts(2))
    return d1, d2


def _add_flow_vars(model: LpModel, dag: LayeredStrategyDag, prefix: str) -> None:
    for (i, a, b), _ in sorted(dag.h_index.items(), key=lambda kv: kv[1]):
        model.add_var(f"h{prefix}[{i},{a},{b}]")
    for (i, k, al), _ in sorted(dag.x_index.items(), key=lambda kv: kv[1]):
        model.add_var(f"x{prefix}[{i},{k},{al}]")


def _add_flow_rows(model: LpModel, dag: LayeredStrategyDag, prefix: str) -> None:
    """Equality description of the flow polytope, in its canonical row order."""
    n, m = dag.n, dag.m
    src = {model.var_id(f"h{prefix}[0,{m},{b}]"): 1.0 for b in dag.nodes(1)}
    model.add_row(f"src{prefix}", src, "=", 1.0)
    for i in range(1, n):
        for cnode in dag.nodes(i):
            coeffs = {}
            for a in dag.nodes(i - 1):
                if a >= cnode:
                    coeffs[model.var_id(f"h{prefix}[{i - 1},{a},{cnode}]")] = 1.0
            for b in dag.nodes(i + 1):
                if b <= cnode:
                    coeffs[model.var_id(f"h{prefix}[{i},{cnode},{b}]")] = -1.0
            model.add_row(f"cons{prefix}[{i},{cnode}]", coeffs, "=", 0.0)
    snk = {model.var_id(f"h{prefix}[{n - 1},{a},0]"): 1.0 for a in dag.nodes(n - 1)}
    model.add_row(f"snk{prefix}", snk, "=", 1.0)
    for i in range(n):
        for k in range(m + 1):
            coeffs = {model.var_id(f"x{prefix}[{i},{k},{al}]"): 1.0
                      for al in range(dag.action_counts[i])}
            for a in dag.nodes(i):
                if a - k in dag.nodes(i + 1) and (i, a, a - k) in dag.h_index:
                    coeffs[model.var_id(f"h{prefix}[{i},{a},{a - k}]")] = -1.0
            model.add_row(f"split{prefix}[{i},{k}]", coeffs, "=", 0.0)


def build_lp_two_sided_sum(inst: BlottoInstance) -> LpModel:
    """One LP whose value is the game value of a discrete two-sided sum game.

    The maximizer's sequence weights appear as primal variables; the
    minimizer's appear as the duals of the edge and action rows, which come
    first and follow the minimizer's dag variable order exactly.
    """
    if not (inst.discrete and not inst.one_sided and inst.aggregator == "sum"):
        raise ValueError("this builder needs a discrete two-sided sum instance")
    d1, d2 = _dags(inst)
    n, m1 = inst.n, int(inst.m1)
    model = LpModel(name="two_sided_sum")
    tsrc = model.free_var("theta_src")
    tsnk = model.free_var("theta_snk")
    lam = {}
    for i in range(1, n):
        for cnode in range(m1 + 1):
            lam[(i, cnode)] = model.free_var(f"lam[{i},{cnode}]")
    mu = {}
    for i in range(n):
        for k in range(m1 + 1):
            mu[(i, k)] = model.free_var(f"mu[{i},{k}]")
    _add_flow_vars(model, d2, "2")
    model.set_objective("max", {tsrc: 1.0, tsnk: 1.0})

    for (i, a, b), _ in sorted(d1.h_index.items(), key=lambda kv: kv[1]):
        coeffs = {mu[(i, a - b)]: -1.0}
        if i == 0:
            coeffs[tsrc] = coeffs.get(tsrc, 0.0) + 1.0
        else:
            coeffs[lam[(i, a)]] = coeffs.get(lam[(i, a)], 0.0) - 1.0
        if i + 1 <= n - 1:
            coeffs[lam[(i + 1, b)]] = coeffs.get(lam[(i + 1, b)], 0.0) + 1.0
        else:
            coeffs[tsnk] = coeffs.get(tsnk, 0.0) + 1.0
        model.add_row(f"edge1[{i},{a},{b}]", coeffs, "<=", 0.0)
    for (i, k1, al1), _ in sorted(d1.x_index.items(), key=lambda kv: kv[1]):
        bf = inst.battlefields[i]
        coeffs = {mu[(i, k1)]: 1.0}
        for k2 in range(int(inst.m2) + 1):
            for al2 in range(bf.a2):
                u = float(bf.payoff.u[al1, al2, k1, k2])
                if u != 0.0:
                    j = model.var_id(f"x2[{i},{k2},{al2}]")
                    coeffs[j] = coeffs.get(j, 0.0) - u
        model.add_row(f"act1[{i},{k1},{al1}]", coeffs, "<=", 0.0)
    _add_flow_rows(model, d2, "2")
    return model


def build_lp_one_sided_min_discrete(inst: BlottoInstance, side: str) -> LpModel:
    """LP for the one-sided min game where only the maximizer allocates.

    side "maxmin" solves the maximizer's commitment problem (its sequence
    weights primal, the minimizer's battlefield/action pick dual); "minmax"
    solves the minimizer's (unit-rooted weights primal, flows dual). The two
    optimal values coincide.
    """
    if not (inst.discrete and inst.one_sided and inst.aggregator == "min"):
        raise ValueError("this builder needs a discrete one-sided min instance")
    if side not in ("maxmin", "minmax"):
        raise ValueError(f"side must be maxmin or minmax, not {side!r}")
    _, d2 = _dags(inst)
    n, m2 = inst.n, int(inst.m2)

    if side == "maxmin":
        model = LpModel(name="one_sided_min_maxmin")
        lam0 = model.free_var("lam0")
        mu = [model.free_var(f"mu[{i}]") for i in range(n)]
        _add_flow_vars(model, d2, "2")
        model.set_objective("max", {lam0: 1.0})
        for i in range(n):
            model.add_row(f"bf[{i}]", {lam0: 1.0, mu[i]: -1.0}, "<=", 0.0)
        for i, bf in enumerate(inst.battlefields):
            for al1 in range(bf.a1):
                coeffs = {mu[i]: 1.0}
                for k2 in range(m2 + 1):
                    for al2 in range(bf.a2):
                        u = float(bf.payoff.u[al1, al2, k2])
                        if u != 0.0:
                            j = model.var_id(f"x2[{i},{k2},{al2}]")
                            coeffs[j] = coeffs.get(j, 0.0) - u
                model.add_row(f"act1[{i},{al1}]", coeffs, "<=", 0.0)
        _add_flow_rows(model, d2, "2")
        return model

    model = LpModel(name="one_sided_min_minmax")
    tsrc = model.free_var("theta_src")
    tsnk = model.free_var("theta_snk")
    lam = {}
    for i in range(1, n):
        for cnode in range(m2 + 1):
            lam[(i, cnode)] = model.free_var(f"lam[{i},{cnode}]")
    mu2 = {}
    for i in range(n):
        for k in range(m2 + 1):
            mu2[(i, k)] = model.free_var(f"mu2[{i},{k}]")
    y1b = [model.add_var(f"y1b[{i}]") for i in range(n)]
    y1a = {}
    for i, bf in enumerate(inst.battlefields):
        for al1 in range(bf.a1):
            y1a[(i, al1)] = model.add_var(f"y1a[{i},{al1}]")
    model.set_objective("min", {tsrc: 1.0, tsnk: 1.0})

    for (i, a, b), _ in sorted(d2.h_index.items(), key=lambda kv: kv[1]):
        coeffs = {mu2[(i, a - b)]: -1.0}
        if i == 0:
            coeffs[tsrc] = coeffs.get(tsrc, 0.0) + 1.0
        else:
            coeffs[lam[(i, a)]] = coeffs.get(lam[(i, a)], 0.0) - 1.0
        if i + 1 <= n - 1:
            coeffs[lam[(i + 1, b)]] = coeffs.get(lam[(i + 1, b)], 0.0) + 1.0
        else:
            coeffs[tsnk] = coeffs.get(tsnk, 0.0) + 1.0
        model.add_row(f"edge2[{i},{a},{b}]", coeffs, ">=", 0.0)
    for i, bf in enumerate(inst.battlefields):
        for k2 in range(m2 + 1):
            for al2 in range(bf.a2):
                coeffs = {mu2[(i, k2)]: 1.0}
                for al1 in range(bf.a1):
                    u = float(bf.payoff.u[al1, al2, k2])
                    if u != 0.0:
                        coeffs[y1a[(i, al1)]] = coeffs.get(y1a[(i, al1)], 0.0) - u
                model.add_row(f"act2[{i},{k2},{al2}]", coeffs, ">=", 0.0)
    model.add_row("root", {j: 1.0 for j in y1b}, "=", 1.0)
    for i, bf in enumerate(inst.battlefields):
        coeffs = {y1a[(i, al1)]: 1.0 for al1 in range(bf.a1)}
        coeffs[y1b[i]] = -1.0
        model.add_row(f"split1[{i}]", coeffs, "=", 0.0)
    return model


def _linear_coeff_matrices(inst: BlottoInstance):
    mats = []
    for i, bf in enumerate(inst.battlefields):
        p = bf.payoff
        if getattr(p, "kind", None) != "affine":
            raise ValueError(
                f"battlefield {i}: the exact LP needs affine payoffs; "
                f"use the iterative ascent path for {getattr(p, 'kind', type(p).__name__)!r}")
        if np.any(p.d != 0.0):
            raise ValueError(
                f"battlefield {i}: nonzero payoff offsets break linearity in the "
                f"budget split; use the iterative ascent path")
        mats.append(p.c)
    return mats


def build_lp_one_sided_linear_continuous(inst: BlottoInstance, aggregator: str,
                                         side: str) -> LpModel:
    """LP for a continuous one-sided game whose payoffs are linear in the split.

    Linearity makes the maximizer's (budget split, action mix) pair a single
    budget-rooted weight vector, so both aggregators and both solve orders
    reduce to small LPs. Payoffs must be affine with zero offsets; anything
    else needs the iterative ascent path instead.
    """
    if inst.discrete or not inst.one_sided:
        raise ValueError("this builder needs a continuous one-sided instance")
    if aggregator not in ("sum", "min"):
        raise ValueError(f"aggregator must be sum or min, not {aggregator!r}")
    if aggregator != inst.aggregator:
        raise ValueError(f"instance aggregates by {inst.aggregator!r}, not {aggregator!r}")
    if side not in ("maxmin", "minmax"):
        raise ValueError(f"side must be maxmin or minmax, not {side!r}")
    C = _linear_coeff_matrices(inst)
    n, m2 = inst.n, float(inst.m2)
    tag = f"cont_{aggregator}_{side}"

    if side == "maxmin":
        model = LpModel(name=tag)
        if aggregator == "min":
            lam0 = model.free_var("lam0")
        mu = [model.free_var(f"mu[{i}]") for i in range(n)]
        y2b = [model.add_var(f"y2b[{i}]") for i in range(n)]
        y2a = {}
        for i, bf in enumerate(inst.battlefields):
            for al2 in range(bf.a2):
                y2a[(i, al2)] = model.add_var(f"y2a[{i},{al2}]")
        if aggregator == "sum":
            model.set_objective("max", {m: 1.0 for m in mu})
        else:
            model.set_objective("max", {lam0: 1.0})
            for i in range(n):
                model.add_row(f"bf[{i}]", {lam0: 1.0, mu[i]: -1.0}, "<=", 0.0)
        for i, bf in enumerate(inst.battlefields):
            for al1 in range(bf.a1):
                coeffs = {mu[i]: 1.0}
                for al2 in range(bf.a2):
                    cc = float(C[i][al1, al2])
                    if cc != 0.0:
                        coeffs[y2a[(i, al2)]] = coeffs.get(y2a[(i, al2)], 0.0) - cc
                model.add_row(f"act1[{i},{al1}]", coeffs, "<=", 0.0)
        model.add_row("budget", {j: 1.0 for j in y2b}, "=", m2)
        for i, bf in enumerate(inst.battlefields):
            coeffs = {y2a[(i, al2)]: 1.0 for al2 in range(bf.a2)}
            coeffs[y2b[i]] = -1.0
            model.add_row(f"split2[{i}]", coeffs, "=", 0.0)
        return model

    model = LpModel(name=tag)
    theta = model.free_var("theta")
    nu = [model.free_var(f"nu[{i}]") for i in range(n)]
    if aggregator == "min":
        y1b = [model.add_var(f"y1b[{i}]") for i in range(n)]
    y1a = {}
    for i, bf in enumerate(inst.battlefields):
        for al1 in range(bf.a1):
            y1a[(i, al1)] = model.add_var(f"y1a[{i},{al1}]")
    model.set_objective("min", {theta: m2})
    for i in range(n):
        model.add_row(f"cap[{i}]", {theta: 1.0, nu[i]: -1.0}, ">=", 0.0)
    for i, bf in enumerate(inst.battlefields):
        for al2 in range(bf.a2):
            coeffs = {nu[i]: 1.0}
            for al1 in range(bf.a1):
                cc = float(C[i][al1, al2])
                if cc != 0.0:
                    coeffs[y1a[(i, al1)]] = coeffs.get(y1a[(i, al1)], 0.0) - cc
            model.add_row(f"act2[{i},{al2}]", coeffs, ">=", 0.0)
    if aggregator == "sum":
        for i, bf in enumerate(inst.battlefields):
            model.add_row(f"sum1[{i}]",
                          {y1a[(i, al1)]: 1.0 for al1 in range(bf.a1)}, "=", 1.0)
    else:
        model.add_row("root", {j: 1.0 for j in y1b}, "=", 1.0)
        for i, bf in enumerate(inst.battlefields):
            coeffs = {y1a[(i, al1)]: 1.0 for al1 in range(bf.a1)}
            coeffs[y1b[i]] = -1.0
            model.add_row(f"split1[{i}]", coeffs, "=", 0.0)
    return model


# ---------------------------------------------------------------------------
# extraction


def _sequence_from_primal(inst: BlottoInstance, sol: LpSolution, dag, prefix: str):
    h = np.zeros((dag.n, dag.m + 1, dag.m + 1))
    x = np.zeros((dag.n, dag.m + 1, dag.a_max))
    for (i, a, b) in dag.h_index:
        h[i, a, b] = max(sol.primal(f"h{prefix}[{i},{a},{b}]"), 0.0)
    for (i, k, al) in dag.x_index:
        x[i, k, al] = max(sol.primal(f"x{prefix}[{i},{k},{al}]"), 0.0)
    return strategy_from_packed(dag, h, x)


def _sequence_from_duals(dag, duals: dict, edge_fmt: str, act_fmt: str):
    v = np.zeros(dag.dim)
    for (i, a, b), vid in dag.h_index.items():
        v[vid] = max(duals[edge_fmt.format(i=i, a=a, b=b)], 0.0)
    for (i, k, al), vid in dag.x_index.items():
        v[vid] = max(duals[act_fmt.format(i=i, k=k, al=al)], 0.0)
    return SequenceStrategy(dag, v)


def _pq_from_duals(inst, duals, bf_fmt, act_fmt, kind, root):
    yb = np.array([max(duals[bf_fmt.format(i=i)], 0.0) for i in range(inst.n)])
    acts = []
    for i, bf in enumerate(inst.battlefields):
        a = bf.a1 if kind == "P_polytope" else bf.a2
        acts.append(np.array([max(duals[act_fmt.format(i=i, al=al)], 0.0)
                              for al in range(a)]))
    return TwoLevelSeqStrategy(kind, root, yb, tuple(acts))


def _pq_from_primal(inst, sol, b_name, a_name, kind, root, player):
    yb = np.array([max(sol.primal(f"{b_name}[{i}]"), 0.0) for i in range(inst.n)])
    acts = []
    for i, bf in enumerate(inst.battlefields):
        a = bf.a1 if player == 1 else bf.a2
        acts.append(np.array([max(sol.primal(f"{a_name}[{i},{al}]"), 0.0)
                              for al in range(a)]))
    return TwoLevelSeqStrategy(kind, root, yb, tuple(acts))


def extract_equilibrium(inst: BlottoInstance, solution: LpSolution, setting: str):
    """Both players' strategies out of a solved builder model.

    Returns (strategy1, strategy2). Sequence strategies come back as
    SequenceStrategy, unit- and budget-rooted weights as TwoLevelSeqStrategy,
    and the continuous sum minimizer as a list of per-battlefield action
    distributions.
    """
    if setting not in SETTINGS:
        raise ValueError(f"unknown setting {setting!r}")
    if solution.status != "optimal":
        raise ValueError(f"cannot extract from a solution with status {solution.status!r}")
    duals = solution.dual_dict()

    if setting == "two_sided_sum":
        d1, d2 = _dags(inst)
        s2 = _sequence_from_primal(inst, solution, d2, "2")
        s1 = _sequence_from_duals(d1, duals, "edge1[{i},{a},{b}]", "act1[{i},{k},{al}]")
        return s1, s2

    if setting == "one_sided_min_maxmin":
        _, d2 = _dags(inst)
        s2 = _sequence_from_primal(inst, solution, d2, "2")
        s1 = _pq_from_duals(inst, duals, "bf[{i}]", "act1[{i},{al}]", "P_polytope", 1.0)
        return s1, s2

    if setting == "one_sided_min_minmax":
        _, d2 = _dags(inst)
        s1 = _pq_from_primal(inst, solution, "y1b", "y1a", "P_polytope", 1.0, player=1)
        s2 = _sequence_from_duals(d2, duals, "edge2[{i},{a},{b}]", "act2[{i},{k},{al}]")
        return s1, s2

    m2 = float(inst.m2)
    if setting == "cont_sum_maxmin":
        s2 = _pq_from_primal(inst, solution, "y2b", "y2a", "Q_polytope", m2, player=2)
        s1 = [np.array([max(duals[f"act1[{i},{al}]"], 0.0) for al in range(bf.a1)])
              for i, bf in enumerate(inst.battlefields)]
        return s1, s2

    if setting == "cont_sum_minmax":
        s1 = [np.array([max(solution.primal(f"y1a[{i},{al}]"), 0.0) for al in range(bf.a1)])
              for i, bf in enumerate(inst.battlefields)]
        s2 = _pq_from_duals(inst, duals, "cap[{i}]", "act2[{i},{al}]", "Q_polytope", m2)
        return s1, s2

    if setting == "cont_min_maxmin":
        s2 = _pq_from_primal(inst, solution, "y2b", "y2a", "Q_polytope", m2, player=2)
        s1 = _pq_from_duals(inst, duals, "bf[{i}]", "act1[{i},{al}]", "P_polytope", 1.0)
        return s1, s2

    s1 = _pq_from_primal(inst, solution, "y1b", "y1a", "P_polytope", 1.0, player=1)
    s2 = _pq_from_duals(inst, duals, "cap[{i}]", "act2[{i},{al}]", "Q_polytope", m2)
    return s1, s2
