"""Independent verification routes.

Everything here deliberately avoids the sequence-form LP constructions: values
come from explicit enumeration over pure two-level strategies, from
closed-form reductions of four small reference games solved by grid search
with local polish, or from a lattice search over budget splits. Test suites
compare these numbers against the structured solvers; the two routes share
only the basic matrix-game solver.

The reference games are stated from the maximizing allocator's point of view,
matching the stored payoff convention (values are the maximizer's gain).
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .instances import SplitMix64
from .matrixgame import solve_matrix_game, subgame_at
from .model import BlottoInstance


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for k in range(total + 1):
        for rest in _compositions(total - k, parts - 1):
            yield (k,) + rest


def _pure_two_level(inst: BlottoInstance, player: int):
    """All pure (allocation, action-per-battlefield) strategies of one player."""
    counts = inst.action_counts(player)
    acts = list(itertools.product(*[range(a) for a in counts]))
    if player == 1 and inst.one_sided:
        return [(None, a) for a in acts]
    budget = int(inst.m1 if player == 1 else inst.m2)
    return [(al, a) for al in _compositions(budget, inst.n) for a in acts]


def _pure_payoff(inst: BlottoInstance, i: int, s1, s2) -> float:
    al1, a1v = s1
    al2, a2v = s2
    u = inst.battlefields[i].payoff.u
    if inst.one_sided:
        return float(u[a1v[i], a2v[i], al2[i]])
    return float(u[a1v[i], a2v[i], al1[i], al2[i]])


def brute_force_discrete_value(inst: BlottoInstance, max_strategies: int = 10_000):
    """Game value(s) by enumeration over pure two-level strategies.

    Sum aggregation returns the single game value of the induced matrix game.
    Min aggregation returns (maxmin, minmax), both over mixed strategies of
    both players. The maximizer's guarantee is exact, because the minimizing
    side's reply is attained at a pure (battlefield, commitment, action)
    pick; the minimizer's cap rewrites the inner battlefield min as a
    minimization over battlefield weights, swaps it outward (the weighted
    game is bilinear, so the swap is lossless), and searches the weight
    simplex (three battlefields at most), so it is accurate to
    grid-plus-polish resolution. Note this mixed-reply cap can sit strictly
    above the best pure-reply cap on the same instance.
    """
    if not inst.discrete:
        raise ValueError("enumeration covers discrete instances only")
    S1 = _pure_two_level(inst, 1)
    S2 = _pure_two_level(inst, 2)
    if len(S1) > max_strategies or len(S2) > max_strategies:
        raise ValueError(f"{len(S1)} x {len(S2)} pure strategies exceeds the "
                         f"cap of {max_strategies} per player")
    if len(S1) * len(S2) > 4_000_000:
        raise ValueError("pure-strategy product too large to tabulate")

    if inst.aggregator == "sum":
        M = np.empty((len(S1), len(S2)))
        for r, s1 in enumerate(S1):
            for c, s2 in enumerate(S2):
                M[r, c] = sum(_pure_payoff(inst, i, s1, s2) for i in range(inst.n))
        return solve_matrix_game(M).value

    if inst.one_sided:
        rows = [(i, None, al1) for i, bf in enumerate(inst.battlefields)
                for al1 in range(bf.a1)]
    else:
        rows = [(i, k1, al1) for i, bf in enumerate(inst.battlefields)
                for k1 in range(int(inst.m1) + 1) for al1 in range(bf.a1)]
    R = np.empty((len(rows), len(S2)))
    for r, (i, k1, al1) in enumerate(rows):
        u = inst.battlefields[i].payoff.u
        for c, (al2, a2v) in enumerate(S2):
            if inst.one_sided:
                R[r, c] = u[al1, a2v[i], al2[i]]
            else:
                R[r, c] = u[al1, a2v[i], k1, al2[i]]
    maxmin = float(solve_matrix_game(R).value)

    if inst.n > 3:
        raise ValueError("the minimizer-side search is limited to 3 battlefields")
    B = np.stack([np.array([[_pure_payoff(inst, i, s1, s2) for s2 in S2]
                            for s1 in S1]) for i in range(inst.n)])

    def weighted_value(w):
        return solve_matrix_game(np.tensordot(w, B, axes=1)).value

    best_w, best = None, math.inf
    for w in _simplex_grid(inst.n, 24):
        v = weighted_value(w)
        if v < best:
            best, best_w = v, w
    _, minmax = _polish_on_simplex(weighted_value, best_w, minimize=True)
    return maxmin, minmax


def _simplex_grid(n: int, resolution: int):
    for comp in _compositions(resolution, n):
        yield np.array(comp, dtype=np.float64) / resolution


def _polish_on_simplex(fn, x0, minimize, rounds: int = 3, points: int = 13):
    """Refine fn on {x >= 0, sum x = const} by pairwise mass transfers.

    For every ordered battlefield pair the transfer amount gets a coarse grid
    scan followed by two zoom levels around the best point. Returns the best
    point seen and its value; purely a local improvement, no optimality claim.
    """
    x = np.asarray(x0, dtype=np.float64).copy()
    sign = -1.0 if minimize else 1.0
    best = sign * fn(x)
    n = len(x)

    def moved(t, i, j):
        y = x.copy()
        y[i] -= t
        y[j] += t
        return y

    for _ in range(rounds):
        improved = False
        for i in range(n):
            for j in range(n):
                if i == j or x[i] <= 1e-12:
                    continue
                lo, hi = 0.0, x[i]
                t_best, v_best = 0.0, best
                for _ in range(6):
                    ts = np.linspace(lo, hi, points)
                    vals = [sign * fn(moved(t, i, j)) for t in ts]
                    b = int(np.argmax(vals))
                    if vals[b] > v_best:
                        v_best, t_best = vals[b], ts[b]
                    step = (hi - lo) / (points - 1)
                    lo = max(0.0, ts[b] - step)
                    hi = min(x[i], ts[b] + step)
                if t_best > 0.0 and v_best > best + 1e-14:
                    x = moved(t_best, i, j)
                    best = v_best
                    improved = True
        if not improved:
            break
    return x, float(sign * best)


def _search_simplex(fn, n, total, minimize, resolution=40):
    sign = -1.0 if minimize else 1.0
    best_x, best = None, -math.inf
    for w in _simplex_grid(n, resolution):
        v = sign * fn(w * total)
        if v > best:
            best, best_x = v, w * total
    return _polish_on_simplex(fn, best_x, minimize)


def _refine_1d(fn, lo, hi, maximize, coarse: int = 801, rounds: int = 60):
    """Coarse scan then ternary refinement around the best bracket."""
    sign = 1.0 if maximize else -1.0
    xs = np.linspace(lo, hi, coarse)
    vals = [sign * fn(x) for x in xs]
    b = int(np.argmax(vals))
    a = xs[max(b - 1, 0)]
    c = xs[min(b + 1, coarse - 1)]
    for _ in range(rounds):
        m1 = a + (c - a) / 3.0
        m2 = c - (c - a) / 3.0
        if sign * fn(m1) < sign * fn(m2):
            a = m1
        else:
            c = m2
    x = 0.5 * (a + c)
    return float(x), float(fn(x))


def ce_discrete_two_sided_min() -> tuple:
    """Reference discrete game splitting the min-aggregated values.

    Two battlefields, two soldiers per side, one action each; sending k of
    your own against l of theirs is worth (k+1)/(l+1) to the maximizer.
    Reduced to mixtures over each side's three splits and searched on the
    probability simplex. Returns (maxmin, minmax); they differ, which is the
    point of the game.
    """
    def guarantee(p):   # maximizer mixes over splits, minimizer replies pure
        alpha = p[0] + 2.0 * p[1] + 3.0 * p[2]
        beta = 3.0 * p[0] + 2.0 * p[1] + p[2]
        return min(min(alpha, beta / 3.0), min(alpha / 2.0, beta / 2.0),
                   min(alpha / 3.0, beta))

    def cap(t):         # minimizer mixes over splits, maximizer replies pure
        alpha = t[0] + t[1] / 2.0 + t[2] / 3.0
        beta = t[0] / 3.0 + t[1] / 2.0 + t[2]
        return max(min(alpha, 3.0 * beta), min(2.0 * alpha, 2.0 * beta),
                   min(3.0 * alpha, beta))

    _, maxmin = _search_simplex(guarantee, 3, 1.0, minimize=False)
    _, minmax = _search_simplex(cap, 3, 1.0, minimize=True)
    return maxmin, minmax


def ce_continuous_two_sided() -> dict:
    """Reference continuous two-sided game where commitment order matters.

    Two battlefields, single actions, each battlefield worth
    max(own allocation - theirs, 0) to the maximizer, who splits 2 soldiers
    against the minimizer's 1. Pure commitments on both sides; the inner
    player best-responds on a fine grid. Returns
    {"sum": (maxmin, minmax), "min": (maxmin, minmax)}.
    """
    ys = np.linspace(0.0, 1.0, 2001)
    ss = np.linspace(0.0, 2.0, 4001)

    out = {}
    for agg in ("sum", "min"):
        def pay(s, y):
            t1 = np.maximum(s - y, 0.0)
            t2 = np.maximum((2.0 - s) - (1.0 - y), 0.0)
            return t1 + t2 if agg == "sum" else np.minimum(t1, t2)

        def inner_min(s):
            return float(np.min(pay(s, ys)))

        def inner_max(y):
            return float(np.max(pay(ss, y)))

        _, maxmin = _refine_1d(inner_min, 0.0, 2.0, maximize=True)
        _, minmax = _refine_1d(inner_max, 0.0, 1.0, maximize=False)
        out[agg] = (maxmin, minmax)
    return out


def ce_one_sided_sum_continuous() -> tuple:
    """Reference one-sided sum game whose two commitment orders disagree.

    The allocator (maximizer) splits 2 soldiers. Battlefield 1 at allocation
    s is the 2x2 game [[s^2, 0], [2, 0]] (rows minimize, columns maximize);
    battlefield 2 pays its own allocation directly. Returns (maxmin, minmax),
    which come out around 4 - sqrt(2) and 3.
    """
    def committed(s):   # allocator commits its split, play is then optimal
        inner = solve_matrix_game(np.array([[s * s, 0.0], [2.0, 0.0]])).value
        return inner + (2.0 - s)

    _, maxmin = _refine_1d(committed, 0.0, 2.0, maximize=True, coarse=401)

    ss = np.linspace(0.0, 2.0, 2001)

    def response_cap(y):   # opponent commits weight y on its first row
        bf1 = np.maximum(y * ss * ss + (1.0 - y) * 2.0, 0.0)
        return float(np.max(bf1 + (2.0 - ss)))

    _, minmax = _refine_1d(response_cap, 0.0, 1.0, maximize=False)
    return maxmin, minmax


def ce_one_sided_min_discontinuous() -> tuple:
    """Reference discontinuous one-sided min game with a commitment gap.

    The allocator (maximizer) splits 2 soldiers. Battlefield 1 at allocation
    s is the 2x2 game [[1 if s < 1 else 0, 0], [0, s^2 if s >= 1 else 0]]
    written with the opponent on rows (weight y on the first row) and the
    allocator on columns (weight x on the first column); battlefield 2 pays
    2 - s. The opponent can always zero the aggregate against a committed
    allocator, so that value is exactly 0. The opponent-commits value is the
    fixed point of the allocator's best-response recursion, located by
    bisection. Returns (maxmin, minmax, y_star, sigma1_star).
    """
    maxmin = -math.inf
    for s in np.linspace(0.0, 2.0, 401):
        for x in np.linspace(0.0, 1.0, 81):
            worst = math.inf
            for y in (0.0, 0.5, 1.0):
                if s < 1.0:
                    bf1 = x * y
                else:
                    bf1 = s * s * (1.0 - x) * (1.0 - y)
                worst = min(worst, min(bf1, 2.0 - s))
            maxmin = max(maxmin, worst)

    def sigma_star(y: float) -> float:
        # positive root of (1 - y) s^2 + s - 2 = 0, written stably near y = 1
        return 4.0 / (1.0 + math.sqrt(9.0 - 8.0 * y))

    def fixed_point_gap(y: float) -> float:
        return y - (2.0 - sigma_star(y))

    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if fixed_point_gap(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    y_star = 0.5 * (lo + hi)
    s_star = sigma_star(y_star)
    minmax = max(y_star, 2.0 - s_star)
    return float(maxmin), minmax, y_star, s_star


def grid_max_V(inst: BlottoInstance, steps: int = 16, seeds: int = 3):
    """Search the allocator's aggregated value over budget splits.

    Up to four battlefields get a full lattice sweep at the given step count
    before the pairwise-transfer polish; more battlefields run the polish
    from a uniform split plus deterministically seeded random ones.
    Per-battlefield values are memoized on rounded allocations. Returns
    (best split, best value); the value is a lower bound on the true
    maximum.
    """
    if inst.discrete or not inst.one_sided:
        raise ValueError("the split search needs a continuous one-sided instance")
    n, budget = inst.n, float(inst.m2)
    cache: dict = {}

    def bf_val(i: int, s: float) -> float:
        key = (i, round(s, 9))
        if key not in cache:
            cache[key] = subgame_at(inst.battlefields[i], max(s, 0.0)).value
        return cache[key]

    agg = min if inst.aggregator == "min" else sum

    def V(sigma) -> float:
        return float(agg(bf_val(i, float(sigma[i])) for i in range(n)))

    starts = []
    if n <= 4:
        best_w, best = None, -math.inf
        for w in _simplex_grid(n, steps):
            v = V(w * budget)
            if v > best:
                best, best_w = v, w * budget
        starts.append(best_w)
    else:
        starts.append(np.full(n, budget / n))
        rng = SplitMix64(12345)
        for _ in range(max(seeds - 1, 0)):
            raw = np.array([rng.uniform(0.05, 1.0) for _ in range(n)])
            starts.append(raw / raw.sum() * budget)
    best_sigma, best_v = None, -math.inf
    for s0 in starts:
        sig, v = _polish_on_simplex(V, s0, minimize=False, rounds=2)
        if v > best_v:
            best_v, best_sigma = v, sig
    return best_sigma, best_v
