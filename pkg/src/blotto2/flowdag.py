"""Layered-graph strategy polytopes and sequence-form plumbing.

A player who splits m soldiers over n battlefields walks a layered dag: node
columns are "soldiers still unspent", column 0 holds only m, columns 1..n-1
hold 0..m, and the final column holds only 0 (the budget must be spent). An
edge (a, b) at layer i commits k = a - b soldiers to battlefield i. On top of
each (battlefield, commitment) pair sit the subgame action weights. Flows over
edges plus action weights, with conservation and split equalities, form the
sequence-form polytope; payoffs become bilinear in these coordinates.

Two lighter polytopes appear in the one-sided settings: the unit-rooted form
(battlefield weights summing to 1, used by the non-allocating minimizer under
the min aggregator) and the budget-rooted form (weights summing to the soldier
budget, for a continuous allocator with linear payoffs).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .model import BlottoInstance

SEQ_TOL = 1e-8


def layer_nodes(n: int, m: int, i: int) -> tuple:
    """Soldier counts present in node column i of the dag (columns 0..n)."""
    if i == 0:
        return (m,)
    if i == n:
        return (0,)
    return tuple(range(m + 1))


@dataclass(frozen=True)
class LayeredStrategyDag:
    n: int
    m: int
    action_counts: tuple
    h_index: dict      # (i, a, b) -> variable id
    x_index: dict      # (i, k, alpha) -> variable id
    dim: int
    # dense lookups mirroring the dicts, for kernel-side code
    edge_ids: np.ndarray = field(repr=False, default=None)   # (n, m+1, m+1), -1 invalid
    x_ids: np.ndarray = field(repr=False, default=None)      # (n, m+1, amax)
    valid_edge: np.ndarray = field(repr=False, default=None)  # bool (n, m+1, m+1)

    @property
    def a_max(self) -> int:
        return max(self.action_counts)

    def nodes(self, i: int) -> tuple:
        return layer_nodes(self.n, self.m, i)


def build_dag(n: int, m: int, action_counts) -> LayeredStrategyDag:
    """Construct the layered dag with dense variable ids.

    Edge variables come first, layer by layer (tail ascending, then head
    ascending), then the per-(battlefield, commitment, action) weights.
    """
    if n < 1:
        raise ValueError(f"need at least one battlefield, got n={n}")
    if m < 0:
        raise ValueError(f"negative budget m={m}")
    action_counts = tuple(int(a) for a in action_counts)
    if len(action_counts) != n:
        raise ValueError(f"expected {n} action counts, got {len(action_counts)}")
    if any(a < 1 for a in action_counts):
        raise ValueError("every battlefield needs at least one action")

    mp1 = m + 1
    amax = max(action_counts)
    h_index = {}
    edge_ids = np.full((n, mp1, mp1), -1, dtype=np.int64)
    valid = np.zeros((n, mp1, mp1), dtype=np.bool_)
    nid = 0
    for i in range(n):
        for a in layer_nodes(n, m, i):
            for b in layer_nodes(n, m, i + 1):
                if b <= a:
                    h_index[(i, a, b)] = nid
                    edge_ids[i, a, b] = nid
                    valid[i, a, b] = True
                    nid += 1
    x_index = {}
    x_ids = np.full((n, mp1, amax), -1, dtype=np.int64)
    for i in range(n):
        for k in range(mp1):
            for alpha in range(action_counts[i]):
                x_index[(i, k, alpha)] = nid
                x_ids[i, k, alpha] = nid
                nid += 1
    if nid > 50_000_000:
        raise ValueError(f"dag variable count {nid} is unreasonably large")
    edge_ids.flags.writeable = False
    x_ids.flags.writeable = False
    valid.flags.writeable = False
    return LayeredStrategyDag(n, m, action_counts, h_index, x_index, nid,
                              edge_ids, x_ids, valid)


@dataclass(frozen=True)
class SequenceStrategy:
    dag: LayeredStrategyDag
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != (self.dag.dim,):
            raise ValueError(f"strategy vector has shape {v.shape}, dag dim {self.dag.dim}")
        object.__setattr__(self, "values", v)

    def h(self, i, a, b) -> float:
        return float(self.values[self.dag.h_index[(i, a, b)]])

    def x(self, i, k, alpha) -> float:
        return float(self.values[self.dag.x_index[(i, k, alpha)]])


@dataclass(frozen=True)
class TwoLevelSeqStrategy:
    """Sequence weights for the two shallow polytopes.

    kind "P_polytope": y_root = 1, battlefield weights form a distribution.
    kind "Q_polytope": y_root = the soldier budget, weights split it.
    Either way each battlefield's action weights sum to its weight.
    """

    kind: str
    y_root: float
    y_battlefield: np.ndarray
    y_action: tuple   # per battlefield, (a_i,) array

    def __post_init__(self):
        if self.kind not in ("P_polytope", "Q_polytope"):
            raise ValueError(f"unknown polytope kind {self.kind!r}")
        object.__setattr__(self, "y_battlefield",
                           np.asarray(self.y_battlefield, dtype=np.float64))
        object.__setattr__(self, "y_action",
                           tuple(np.asarray(a, dtype=np.float64) for a in self.y_action))


def check_strategy(s: SequenceStrategy, tol: float = SEQ_TOL) -> list:
    """Sequence-form invariant violations; empty when the strategy is valid."""
    dag, v = s.dag, s.values
    out = []
    if np.any(v < -tol) or np.any(v > 1 + tol):
        out.append("values outside [0, 1]")
    src = sum(s.h(0, dag.m, b) for b in dag.nodes(1) if b <= dag.m)
    if abs(src - 1.0) > tol:
        out.append(f"source outflow {src}, expected 1")
    snk = sum(s.h(dag.n - 1, a, 0) for a in dag.nodes(dag.n - 1))
    if abs(snk - 1.0) > tol:
        out.append(f"sink inflow {snk}, expected 1")
    for i in range(1, dag.n):
        for c in dag.nodes(i):
            inflow = sum(s.h(i - 1, a, c) for a in dag.nodes(i - 1) if a >= c)
            outflow = sum(s.h(i, c, b) for b in dag.nodes(i + 1) if b <= c)
            if abs(inflow - outflow) > tol:
                out.append(f"conservation at layer {i} node {c}: in {inflow} out {outflow}")
    for i in range(dag.n):
        for k in range(dag.m + 1):
            xs = sum(s.x(i, k, al) for al in range(dag.action_counts[i]))
            hs = sum(s.h(i, a, a - k) for a in dag.nodes(i)
                     if a - k >= 0 and (i, a, a - k) in dag.h_index)
            if abs(xs - hs) > tol:
                out.append(f"split at battlefield {i} commitment {k}: x {xs} vs h {hs}")
    return out


def check_twolevel(y: TwoLevelSeqStrategy, tol: float = SEQ_TOL) -> list:
    out = []
    if y.y_battlefield.min(initial=0.0) < -tol or any(a.min(initial=0.0) < -tol for a in y.y_action):
        out.append("negative weights")
    if abs(y.y_battlefield.sum() - y.y_root) > tol * max(1.0, abs(y.y_root)):
        out.append(f"battlefield weights sum {y.y_battlefield.sum()}, root {y.y_root}")
    for i, acts in enumerate(y.y_action):
        if abs(acts.sum() - y.y_battlefield[i]) > tol * max(1.0, abs(y.y_root)):
            out.append(f"action weights at battlefield {i} sum {acts.sum()}, "
                       f"expected {y.y_battlefield[i]}")
    return out


def behavioral_to_sequence(dag: LayeredStrategyDag, gamma: dict, delta) -> SequenceStrategy:
    """Realization weights of a behavioral profile.

    gamma maps budget-exact allocation vectors to probabilities; delta[i] is an
    (m+1, a_i) array of action distributions per soldier commitment.
    """
    n, m = dag.n, dag.m
    for t, p in gamma.items():
        if len(t) != n or any(int(k) != k or k < 0 for k in t) or sum(t) != m:
            raise ValueError(f"allocation {t} is not a budget-exact split of {m}")
        if p < 0:
            raise ValueError(f"negative probability {p} on {t}")
    total = sum(gamma.values())
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"allocation probabilities sum to {total}")
    v = np.zeros(dag.dim)
    marg = np.zeros((n, m + 1))
    for t, p in gamma.items():
        if p == 0.0:
            continue
        c = m
        for i, k in enumerate(t):
            v[dag.h_index[(i, c, c - k)]] += p
            marg[i, int(k)] += p
            c -= int(k)
    for i in range(n):
        d = np.asarray(delta[i], dtype=np.float64)
        if d.shape != (m + 1, dag.action_counts[i]):
            raise ValueError(f"delta[{i}] shape {d.shape}, expected {(m + 1, dag.action_counts[i])}")
        for k in range(m + 1):
            for al in range(dag.action_counts[i]):
                v[dag.x_index[(i, k, al)]] = marg[i, k] * d[k, al]
    return SequenceStrategy(dag, v)


def sequence_to_behavioral(s: SequenceStrategy):
    """Invert the realization map: (path distribution, action distributions).

    Flow decomposes into the product chain of per-node conditionals; nodes
    with zero reach get uniform conditionals so the round-trip stays total.
    """
    dag = s.dag
    n, m = dag.n, dag.m
    probs = check_strategy(s)
    if probs:
        raise ValueError("not a valid sequence strategy: " + "; ".join(probs))
    cond = {}
    for i in range(n):
        for c in dag.nodes(i):
            heads = [b for b in dag.nodes(i + 1) if b <= c]
            flows = np.array([max(s.h(i, c, b), 0.0) for b in heads])
            tot = flows.sum()
            cond[(i, c)] = (heads, flows / tot if tot > 0 else
                            np.full(len(heads), 1.0 / len(heads)))
    gamma = {}

    def walk(i, c, prefix, p):
        if i == n:
            gamma[tuple(prefix)] = gamma.get(tuple(prefix), 0.0) + p
            return
        heads, dist = cond[(i, c)]
        for b, q in zip(heads, dist):
            if p * q > 0.0:
                walk(i + 1, b, prefix + [c - b], p * q)

    walk(0, m, [], 1.0)
    delta = []
    for i in range(n):
        a_i = dag.action_counts[i]
        d = np.full((m + 1, a_i), 1.0 / a_i)
        for k in range(m + 1):
            xs = np.array([s.x(i, k, al) for al in range(a_i)])
            w = xs.sum()
            if w > 0:
                d[k] = np.maximum(xs, 0.0) / np.maximum(xs, 0.0).sum()
        delta.append(d)
    return gamma, delta


def uniform_strategy(dag: LayeredStrategyDag) -> SequenceStrategy:
    """Uniform split at every node and every action simplex."""
    n, m = dag.n, dag.m
    v = np.zeros(dag.dim)
    reach = {m: 1.0}
    marg = np.zeros((n, m + 1))
    for i in range(n):
        nxt = {}
        for c, rc in reach.items():
            heads = [b for b in dag.nodes(i + 1) if b <= c]
            q = rc / len(heads)
            for b in heads:
                v[dag.h_index[(i, c, b)]] += q
                marg[i, c - b] += q
                nxt[b] = nxt.get(b, 0.0) + q
        reach = nxt
    for i in range(n):
        a_i = dag.action_counts[i]
        for k in range(m + 1):
            for al in range(a_i):
                v[dag.x_index[(i, k, al)]] = marg[i, k] / a_i
    return SequenceStrategy(dag, v)


# ---------------------------------------------------------------------------
# packed views used by the learning kernels and bilinear evaluation


def pack_x(s: SequenceStrategy) -> np.ndarray:
    """(n, m+1, a_max) array of the x-weights, zero-padded."""
    dag = s.dag
    out = np.zeros((dag.n, dag.m + 1, dag.a_max))
    ids = dag.x_ids
    mask = ids >= 0
    out[mask] = s.values[ids[mask]]
    return out


def pack_h(s: SequenceStrategy) -> np.ndarray:
    dag = s.dag
    out = np.zeros((dag.n, dag.m + 1, dag.m + 1))
    ids = dag.edge_ids
    mask = ids >= 0
    out[mask] = s.values[ids[mask]]
    return out


def strategy_from_packed(dag: LayeredStrategyDag, h: np.ndarray, x: np.ndarray) -> SequenceStrategy:
    v = np.zeros(dag.dim)
    mask = dag.edge_ids >= 0
    v[dag.edge_ids[mask]] = h[mask]
    mask = dag.x_ids >= 0
    v[dag.x_ids[mask]] = x[mask]
    return SequenceStrategy(dag, v)


def payoff_views(inst: BlottoInstance):
    """Per-battlefield payoff matrices flattened for each player's sweep.

    Two-sided: U1[i] is ((m1+1)*a1max, (m2+1)*a2max) with rows (k1, alpha1)
    and columns (k2, alpha2), entries the stored Player-2 gain; U2[i] is its
    transpose layout. One-sided: Player 1 has no commitment axis, so U1[i] is
    (a1max, (m2+1)*a2max). Padding entries are zero.
    """
    if not inst.discrete:
        raise ValueError("payoff views exist only for discrete instances")
    n = inst.n
    a1m = max(bf.a1 for bf in inst.battlefields)
    a2m = max(bf.a2 for bf in inst.battlefields)
    m2p = int(inst.m2) + 1
    if inst.one_sided:
        U1 = np.zeros((n, a1m, m2p * a2m))
        U2 = np.zeros((n, m2p * a2m, a1m))
        for i, bf in enumerate(inst.battlefields):
            u = bf.payoff.u  # (a1, a2, k2)
            for k2 in range(m2p):
                blk = u[:, :, k2]  # (a1, a2)
                U1[i, :bf.a1, k2 * a2m:k2 * a2m + bf.a2] = blk
                U2[i, k2 * a2m:k2 * a2m + bf.a2, :bf.a1] = blk.T
        return U1, U2
    m1p = int(inst.m1) + 1
    U1 = np.zeros((n, m1p * a1m, m2p * a2m))
    U2 = np.zeros((n, m2p * a2m, m1p * a1m))
    for i, bf in enumerate(inst.battlefields):
        u = bf.payoff.u  # (a1, a2, k1, k2)
        for k1 in range(m1p):
            for k2 in range(m2p):
                blk = u[:, :, k1, k2]
                r0, c0 = k1 * a1m, k2 * a2m
                U1[i, r0:r0 + bf.a1, c0:c0 + bf.a2] = blk
                U2[i, c0:c0 + bf.a2, r0:r0 + bf.a1] = blk.T
    return U1, U2


def bilinear_utility(inst: BlottoInstance, x1: SequenceStrategy, x2: SequenceStrategy) -> float:
    """Expected Player-2 gain of a sequence-form profile, summed over battlefields."""
    if not (inst.discrete and not inst.one_sided and inst.aggregator == "sum"):
        raise ValueError("bilinear payoff needs a discrete two-sided sum instance")
    U1, _ = payoff_views(inst)
    p1 = pack_x(x1).reshape(inst.n, -1)
    p2 = pack_x(x2).reshape(inst.n, -1)
    total = 0.0
    for i in range(inst.n):
        total += p1[i] @ U1[i] @ p2[i]
    return float(total)


# ---------------------------------------------------------------------------
# best responses


def _dag_best_response(dag: LayeredStrategyDag, reward: np.ndarray, maximize: bool):
    """Vertex of the flow polytope optimizing a linear reward.

    reward is (n, m+1, amax) per (battlefield, commitment, action). Ties break
    toward fewer soldiers committed, then the lower action index, so responses
    are reproducible.
    """
    n, m = dag.n, dag.m
    bestval = np.empty((n, m + 1))
    bestact = np.empty((n, m + 1), dtype=np.int64)
    for i in range(n):
        r = reward[i, :, :dag.action_counts[i]]
        bestact[i] = np.argmax(r, axis=1) if maximize else np.argmin(r, axis=1)
        bestval[i] = r[np.arange(m + 1), bestact[i]]
    D = {0: 0.0}
    choice = {}
    for i in range(n - 1, -1, -1):
        Dprev = {}
        for c in dag.nodes(i):
            best = None
            pick = None
            for b in sorted((b for b in dag.nodes(i + 1) if b <= c), reverse=True):
                val = bestval[i, c - b] + D[b]
                better = best is None or (val > best + 0.0 if maximize else val < best - 0.0)
                if better:
                    best, pick = val, b
            Dprev[c] = best
            choice[(i, c)] = pick
        D = Dprev
    v = np.zeros(dag.dim)
    c = m
    for i in range(n):
        b = choice[(i, c)]
        v[dag.h_index[(i, c, b)]] = 1.0
        k = c - b
        v[dag.x_index[(i, k, int(bestact[i, k]))]] = 1.0
        c = b
    return SequenceStrategy(dag, v), float(D[m])


def best_response(inst: BlottoInstance, dag_self, opponent, side: int):
    """Pure best response to a fixed opponent, with its achieved value.

    Supported: two-sided sum (either side responds over its flow dag) and
    one-sided min in its scalarized bilinear form (side 1 responds over the
    unit-rooted polytope, side 2 over its flow dag). Values are Player-2 gain.
    """
    if side not in (1, 2):
        raise ValueError(f"side must be 1 or 2, got {side}")
    if not inst.discrete:
        raise ValueError("best responses are implemented for discrete instances")
    twosided_sum = not inst.one_sided and inst.aggregator == "sum"
    onesided_min = inst.one_sided and inst.aggregator == "min"
    if not (twosided_sum or onesided_min):
        raise ValueError(f"unsupported setting {inst.sided}/{inst.aggregator}")
    U1, U2 = payoff_views(inst)
    n = inst.n

    if twosided_sum:
        opp = pack_x(opponent).reshape(n, -1)
        if side == 1:
            amax = max(bf.a1 for bf in inst.battlefields)
            reward = np.einsum("irc,ic->ir", U1, opp).reshape(n, int(inst.m1) + 1, amax)
            return _dag_best_response(dag_self, reward, maximize=False)
        amax = max(bf.a2 for bf in inst.battlefields)
        reward = np.einsum("irc,ic->ir", U2, opp).reshape(n, int(inst.m2) + 1, amax)
        return _dag_best_response(dag_self, reward, maximize=True)

    # one-sided min, scalarized payoff y1' U x2
    if side == 2:
        y = opponent
        if not isinstance(y, TwoLevelSeqStrategy):
            raise ValueError("side 2 of the one-sided min game responds to the unit-rooted form")
        a1m = U2.shape[2]
        yflat = np.zeros((n, a1m))
        for i in range(n):
            yflat[i, :len(y.y_action[i])] = y.y_action[i]
        amax = max(bf.a2 for bf in inst.battlefields)
        reward = np.einsum("irc,ic->ir", U2, yflat).reshape(n, int(inst.m2) + 1, amax)
        return _dag_best_response(dag_self, reward, maximize=True)
    opp = pack_x(opponent).reshape(n, -1)
    E = np.einsum("irc,ic->ir", U1, opp)   # (n, a1max): scalarized utility per pure pick
    besti, bestal, best = 0, 0, np.inf
    for i, bf in enumerate(inst.battlefields):
        for al in range(bf.a1):
            if E[i, al] < best - 0.0:
                besti, bestal, best = i, al, E[i, al]
    yb = np.zeros(n)
    yb[besti] = 1.0
    yact = [np.zeros(bf.a1) for bf in inst.battlefields]
    yact[besti][bestal] = 1.0
    return TwoLevelSeqStrategy("P_polytope", 1.0, yb, tuple(yact)), float(best)


# ---------------------------------------------------------------------------
# strategy dump format: var_kind,i,a_or_k,b_or_action,value


def write_strategy_csv(strategy, path):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["var_kind", "i", "a_or_k", "b_or_action", "value"])
        if isinstance(strategy, SequenceStrategy):
            dag = strategy.dag
            for (i, a, b), vid in sorted(dag.h_index.items(), key=lambda kv: kv[1]):
                wr.writerow(["h", i, a, b, repr(float(strategy.values[vid]))])
            for (i, k, al), vid in sorted(dag.x_index.items(), key=lambda kv: kv[1]):
                wr.writerow(["x", i, k, al, repr(float(strategy.values[vid]))])
        elif isinstance(strategy, TwoLevelSeqStrategy):
            wr.writerow(["y", -1, -1, -1, repr(float(strategy.y_root))])
            for i, w in enumerate(strategy.y_battlefield):
                wr.writerow(["y", i, -1, -1, repr(float(w))])
            for i, acts in enumerate(strategy.y_action):
                for al, w in enumerate(acts):
                    wr.writerow(["y", i, -1, al, repr(float(w))])
        elif isinstance(strategy, (list, tuple)):
            # bare per-battlefield action distributions (no allocation level)
            for i, dist in enumerate(strategy):
                for al, w in enumerate(np.asarray(dist, dtype=np.float64)):
                    wr.writerow(["y", i, -1, al, repr(float(w))])
        else:
            raise TypeError(f"cannot dump {type(strategy).__name__}")


def read_strategy_csv(path) -> dict:
    """Parse a strategy dump into plain dicts keyed like the variable indexes."""
    out = {"h": {}, "x": {}, "y_root": None, "y_bf": {}, "y_act": {}}
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd, None)
        if header != ["var_kind", "i", "a_or_k", "b_or_action", "value"]:
            raise ValueError(f"unexpected strategy header {header}")
        for row in rd:
            kind, i, a, b, val = row[0], int(row[1]), int(row[2]), int(row[3]), float(row[4])
            if kind == "h":
                out["h"][(i, a, b)] = val
            elif kind == "x":
                out["x"][(i, a, b)] = val
            elif kind == "y":
                if i < 0:
                    out["y_root"] = val
                elif b < 0:
                    out["y_bf"][i] = val
                else:
                    out["y_act"][(i, b)] = val
            else:
                raise ValueError(f"unknown var_kind {kind!r}")
    return out


def sequence_from_rows(dag: LayeredStrategyDag, rows: dict) -> SequenceStrategy:
    v = np.zeros(dag.dim)
    for key, val in rows["h"].items():
        v[dag.h_index[key]] = val
    for key, val in rows["x"].items():
        v[dag.x_index[key]] = val
    return SequenceStrategy(dag, v)


def action_lists_from_rows(rows: dict, action_counts) -> list:
    out = [np.zeros(a) for a in action_counts]
    for (i, al), val in rows["y_act"].items():
        out[i][al] = val
    return out


def twolevel_from_rows(rows: dict, kind: str, n: int, action_counts) -> TwoLevelSeqStrategy:
    yb = np.zeros(n)
    for i, val in rows["y_bf"].items():
        yb[i] = val
    yact = [np.zeros(a) for a in action_counts]
    for (i, al), val in rows["y_act"].items():
        yact[i][al] = val
    root = rows["y_root"] if rows["y_root"] is not None else yb.sum()
    return TwoLevelSeqStrategy(kind, float(root), yb, tuple(yact))
