"""Hot numeric kernels, compiled with numba when available.

Backend selection happens once at import time from the BLOTTO_BACKEND
environment variable: "numba" (default when importable) jit-compiles the
kernels below, "numpy" runs the exact same source un-jitted. Everything here
is written in the numpy subset numba supports, so the two paths share one
implementation and can be benchmarked against each other
(scripts/bench_backends.py).

Kernels:
  pivot_loop      Dantzig-rule simplex pivots on a dense tableau, with a
                  Bland fallback after a run of degenerate steps.
  dag_forward     top-down recommendation sweep over a layered allocation dag.
  dag_observe     counterfactual utility sweep (per-action rewards, per-node
                  edge utilities, and regret deltas) against a fixed opponent.
"""

from __future__ import annotations

import os
import warnings

import numpy as np

_BIG = np.int64(1) << 62


def _pivot_loop(T, basis, ban_from, max_iters, tol, bland_after):
    """Pivot the tableau in place until optimal for the current cost row.

    T is (rows+1, cols+1): last row holds reduced costs, last column the rhs.
    basis[r] is the basic variable of row r. Columns at or beyond ban_from
    never enter (used to ban artificials in phase 2).

    Returns (status, pivots): status 0 = optimal, 1 = unbounded direction,
    2 = iteration limit hit.
    """
    nrows = T.shape[0] - 1
    last = T.shape[1] - 1
    degen = 0
    it = 0
    status = 2
    while it < max_iters:
        if degen > bland_after:
            # Bland: first improving column, guarantees termination
            q = -1
            for j in range(ban_from):
                if T[nrows, j] < -tol:
                    q = j
                    break
        else:
            q = int(np.argmin(T[nrows, :ban_from]))
            if T[nrows, q] >= -tol:
                q = -1
        if q < 0:
            status = 0
            break
        col = T[:nrows, q]
        pos = col > tol
        if not np.any(pos):
            if T[nrows, q] >= -1e3 * tol:
                # the whole column sits inside roundoff: its "improvement" is
                # noise, not a ray. Retire the column and look again.
                T[nrows, q] = 0.0
                it += 1
                continue
            status = 1
            break
        ratios = np.where(pos, T[:nrows, last], np.inf) / np.where(pos, col, 1.0)
        best = ratios.min()
        cand = ratios <= best + 1e-12
        if degen > bland_after:
            # Bland mode: lowest basic index among ties, termination over speed
            r = int(np.argmin(np.where(cand, basis, _BIG)))
        else:
            # otherwise break ties toward the largest pivot entry; a tiny
            # pivot on a near-singular row set amplifies roundoff enough to
            # turn a bounded phase into a fake unbounded ray
            r = -1
            bigpiv = 0.0
            for rr in range(nrows):
                if cand[rr] and col[rr] > bigpiv:
                    bigpiv = col[rr]
                    r = rr
        if best <= tol:
            degen += 1
        else:
            degen = 0
        piv = T[r, q]
        prow = T[r] / piv
        T -= np.outer(T[:, q], prow)
        T[r] = prow
        T[r, q] = 1.0
        basis[r] = q
        it += 1
    return status, it


def _dag_forward(alloc_score, act_score, valid_edge, act_counts, src,
                 h, x, w, alloc_dist, act_dist):
    """Top-down sweep: node scores -> per-node distributions -> reach -> flows.

    Scores are regret-matching scores (already clamped/predicted by the
    caller); each node normalizes the positive part over its valid edges,
    falling back to uniform. Distributions are filled for every node, reached
    or not, because the counterfactual backward sweep needs all of them.
    Outputs are overwritten in place.
    """
    n = alloc_score.shape[0]
    mp1 = alloc_score.shape[1]
    h[:] = 0.0
    x[:] = 0.0
    w[:] = 0.0
    alloc_dist[:] = 0.0
    act_dist[:] = 0.0
    reach = np.zeros(mp1)
    reach[src] = 1.0
    for i in range(n):
        nxt = np.zeros(mp1)
        for c in range(mp1):
            ev = valid_edge[i, c]
            cnt = 0
            for b in range(mp1):
                if ev[b]:
                    cnt += 1
            if cnt == 0:
                continue
            s = 0.0
            for b in range(mp1):
                if ev[b] and alloc_score[i, c, b] > 0.0:
                    s += alloc_score[i, c, b]
            if s > 0.0:
                for b in range(mp1):
                    if ev[b] and alloc_score[i, c, b] > 0.0:
                        alloc_dist[i, c, b] = alloc_score[i, c, b] / s
            else:
                u = 1.0 / cnt
                for b in range(mp1):
                    if ev[b]:
                        alloc_dist[i, c, b] = u
            rc = reach[c]
            if rc > 0.0:
                for b in range(mp1):
                    d = alloc_dist[i, c, b]
                    if d > 0.0:
                        f = rc * d
                        h[i, c, b] = f
                        nxt[b] += f
        reach = nxt
        for k in range(mp1):
            wk = 0.0
            for b in range(mp1 - k):
                wk += h[i, b + k, b]
            w[i, k] = wk
        for k in range(mp1):
            cnt = act_counts[i]
            s = 0.0
            for a in range(cnt):
                if act_score[i, k, a] > 0.0:
                    s += act_score[i, k, a]
            if s > 0.0:
                for a in range(cnt):
                    if act_score[i, k, a] > 0.0:
                        act_dist[i, k, a] = act_score[i, k, a] / s
            else:
                u = 1.0 / cnt
                for a in range(cnt):
                    act_dist[i, k, a] = u
            wk = w[i, k]
            if wk > 0.0:
                for a in range(cnt):
                    x[i, k, a] = wk * act_dist[i, k, a]
    return 0


def _dag_observe(Uflat, x_opp_flat, act_dist, alloc_dist, valid_edge, act_counts,
                 sign, act_reward, act_delta, alloc_util, alloc_delta):
    """Counterfactual sweep against a fixed opponent strategy.

    Uflat[i] is the battlefield payoff as a ((m+1)*amax_self, opp_len) matrix
    in (k, action) row-major order; x_opp_flat[i] the opponent's packed
    sequence weights. sign is -1 for the minimizer, +1 for the maximizer, so
    rewards are always "higher is better" for the observing player.

    Fills, in place: per-(k, action) rewards and regret deltas, per-node edge
    utilities (reward for committing k=c-b here then playing on), and per-node
    regret deltas. Deltas are reward minus the node's expected reward under
    its current recommendation.
    """
    n, mp1, amax = act_dist.shape
    act_reward[:] = 0.0
    act_delta[:] = 0.0
    alloc_util[:] = 0.0
    alloc_delta[:] = 0.0
    val = np.zeros((n, mp1))
    for i in range(n):
        rv = Uflat[i] @ x_opp_flat[i]
        cnt = act_counts[i]
        for k in range(mp1):
            v = 0.0
            for a in range(cnt):
                rw = sign * rv[k * amax + a]
                act_reward[i, k, a] = rw
                v += act_dist[i, k, a] * rw
            val[i, k] = v
            for a in range(cnt):
                act_delta[i, k, a] = act_reward[i, k, a] - v
    V = np.zeros(mp1)
    for i in range(n - 1, -1, -1):
        Vprev = np.zeros(mp1)
        for c in range(mp1):
            ev = valid_edge[i, c]
            nodeval = 0.0
            have = False
            for b in range(mp1):
                if ev[b]:
                    have = True
                    e = val[i, c - b] + V[b]
                    alloc_util[i, c, b] = e
                    nodeval += alloc_dist[i, c, b] * e
            if have:
                Vprev[c] = nodeval
                for b in range(mp1):
                    if ev[b]:
                        alloc_delta[i, c, b] = alloc_util[i, c, b] - nodeval
        V = Vprev
    return 0


def _select_backend():
    flag = os.environ.get("BLOTTO_BACKEND", "auto").strip().lower()
    if flag not in ("auto", "numba", "numpy", ""):
        warnings.warn(f"BLOTTO_BACKEND={flag!r} not recognized, using auto")
        flag = "auto"
    if flag == "numpy":
        return "numpy", None
    try:
        from numba import njit
    except ImportError:
        if flag == "numba":
            warnings.warn("BLOTTO_BACKEND=numba but numba is not importable; "
                          "falling back to the numpy path")
        return "numpy", None
    return "numba", njit


ACTIVE, _njit = _select_backend()

if ACTIVE == "numba":
    pivot_loop = _njit(cache=True)(_pivot_loop)
    dag_forward = _njit(cache=True)(_dag_forward)
    dag_observe = _njit(cache=True)(_dag_observe)
else:
    pivot_loop = _pivot_loop
    dag_forward = _dag_forward
    dag_observe = _dag_observe


def warmup():
    """Force kernel compilation on tiny inputs so timings exclude jit cost."""
    T = np.array([[1.0, 1.0, 1.0, 0.0, 2.0],
                  [1.0, -1.0, 0.0, 1.0, 1.0],
                  [-1.0, 0.0, 0.0, 0.0, 0.0]])
    basis = np.array([2, 3], dtype=np.int64)
    pivot_loop(T, basis, 4, 10, 1e-9, 50)

    n, mp1, amax = 1, 2, 2
    valid = np.zeros((n, mp1, mp1), dtype=np.bool_)
    valid[0, 1, 0] = True
    counts = np.full(n, amax, dtype=np.int64)
    score_a = np.zeros((n, mp1, mp1))
    score_x = np.zeros((n, mp1, amax))
    h = np.zeros((n, mp1, mp1))
    x = np.zeros((n, mp1, amax))
    w = np.zeros((n, mp1))
    ad = np.zeros((n, mp1, mp1))
    xd = np.zeros((n, mp1, amax))
    dag_forward(score_a, score_x, valid, counts, 1, h, x, w, ad, xd)
    U = np.zeros((n, mp1 * amax, mp1 * amax))
    xo = np.zeros((n, mp1 * amax))
    dag_observe(U, xo, xd, ad, valid, counts, -1.0,
                np.zeros((n, mp1, amax)), np.zeros((n, mp1, amax)),
                np.zeros((n, mp1, mp1)), np.zeros((n, mp1, mp1)))
