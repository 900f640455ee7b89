import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blotto2.flowdag import (
    SequenceStrategy,
    TwoLevelSeqStrategy,
    action_lists_from_rows,
    behavioral_to_sequence,
    best_response,
    bilinear_utility,
    build_dag,
    check_strategy,
    check_twolevel,
    layer_nodes,
    pack_h,
    pack_x,
    read_strategy_csv,
    sequence_from_rows,
    sequence_to_behavioral,
    strategy_from_packed,
    twolevel_from_rows,
    uniform_strategy,
    write_strategy_csv,
)
from blotto2.instances import gen_soft_blotto_double


def compositions(total, parts):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in compositions(total - first, parts - 1):
            yield (first,) + rest


def random_behavioral(dag, rng):
    splits = list(compositions(dag.m, dag.n))
    w = rng.random(len(splits))
    w /= w.sum()
    gamma = {s: float(p) for s, p in zip(splits, w)}
    delta = []
    for i in range(dag.n):
        d = rng.random((dag.m + 1, dag.action_counts[i]))
        d /= d.sum(axis=1, keepdims=True)
        delta.append(d)
    return gamma, delta


# --- structure ---------------------------------------------------------------


def test_layer_nodes_boundaries():
    assert layer_nodes(3, 5, 0) == (5,)
    assert layer_nodes(3, 5, 1) == tuple(range(6))
    assert layer_nodes(3, 5, 2) == tuple(range(6))
    assert layer_nodes(3, 5, 3) == (0,)


@pytest.mark.parametrize("n,m", [(1, 4), (2, 3), (3, 2), (4, 5), (5, 20)])
def test_edge_count_formula(n, m):
    counts = [2] * n
    dag = build_dag(n, m, counts)
    if n == 1:
        want_h = 1
    else:
        want_h = 2 * (m + 1) + (n - 2) * (m + 1) * (m + 2) // 2
    assert len(dag.h_index) == want_h
    assert dag.dim == want_h + (m + 1) * sum(counts)


def test_edge_heads_never_exceed_tails():
    dag = build_dag(3, 4, [2, 3, 1])
    for (i, a, b) in dag.h_index:
        assert 0 <= b <= a <= 4
        assert a in layer_nodes(3, 4, i)
        assert b in layer_nodes(3, 4, i + 1)


def test_variable_ids_are_dense_and_ordered():
    dag = build_dag(2, 2, [2, 2])
    ids = sorted(dag.h_index.values()) + sorted(dag.x_index.values())
    assert ids == list(range(dag.dim))
    # h block strictly before x block
    assert max(dag.h_index.values()) < min(dag.x_index.values())


def test_uniform_strategy_is_valid():
    dag = build_dag(3, 4, [2, 2, 3])
    s = uniform_strategy(dag)
    assert check_strategy(s) == []


def test_strategy_rejects_wrong_length():
    dag = build_dag(2, 1, [2, 2])
    with pytest.raises(ValueError):
        SequenceStrategy(dag, np.zeros(dag.dim + 1))


# --- behavioral round trip ---------------------------------------------------


def test_behavioral_to_sequence_point_mass():
    dag = build_dag(2, 3, [2, 2])
    delta = [np.tile([1.0, 0.0], (4, 1)), np.tile([0.0, 1.0], (4, 1))]
    s = behavioral_to_sequence(dag, {(2, 1): 1.0}, delta)
    assert check_strategy(s) == []
    assert s.h(0, 3, 1) == 1.0          # spends 2 at the first battlefield
    assert s.h(1, 1, 0) == 1.0
    assert s.x(0, 2, 0) == 1.0
    assert s.x(1, 1, 1) == 1.0
    assert s.x(0, 1, 0) == 0.0


def test_behavioral_validation():
    dag = build_dag(2, 2, [2, 2])
    delta = [np.full((3, 2), 0.5)] * 2
    with pytest.raises(ValueError):
        behavioral_to_sequence(dag, {(2, 1): 1.0}, delta)      # over budget
    with pytest.raises(ValueError):
        behavioral_to_sequence(dag, {(2, 0): 0.7}, delta)      # mass missing
    with pytest.raises(ValueError):
        behavioral_to_sequence(dag, {(2, 0): 1.5, (0, 2): -0.5}, delta)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 3), m=st.integers(1, 4), seed=st.integers(0, 2**31))
def test_round_trip_preserves_reached_profile(n, m, seed):
    rng = np.random.default_rng(seed)
    dag = build_dag(n, m, [int(rng.integers(1, 4)) for _ in range(n)])
    gamma, delta = random_behavioral(dag, rng)
    s = behavioral_to_sequence(dag, gamma, delta)
    assert check_strategy(s) == []
    gamma2, delta2 = sequence_to_behavioral(s)
    for split, p in gamma.items():
        assert gamma2.get(split, 0.0) == pytest.approx(p, abs=1e-9)
    # action conditionals survive wherever the commitment level is reached
    reach = {(i, k) for split in gamma for i, k in enumerate(split)}
    for i, k in reach:
        np.testing.assert_allclose(delta2[i][k], delta[i][k], atol=1e-9)


# --- packing -----------------------------------------------------------------


def test_pack_round_trip():
    dag = build_dag(3, 3, [2, 1, 2])
    rng = np.random.default_rng(7)
    gamma, delta = random_behavioral(dag, rng)
    s = behavioral_to_sequence(dag, gamma, delta)
    back = strategy_from_packed(dag, pack_h(s), pack_x(s))
    np.testing.assert_array_equal(back.values, s.values)


# --- utilities ---------------------------------------------------------------


def exhaustive_expectation(inst, prof1, prof2):
    """Plain sum over all allocation pairs and action pairs."""
    gamma1, delta1 = prof1
    gamma2, delta2 = prof2
    total = 0.0
    for t1, p1 in gamma1.items():
        for t2, p2 in gamma2.items():
            if p1 * p2 == 0.0:
                continue
            for i, bf in enumerate(inst.battlefields):
                u = bf.payoff.u
                k1, k2 = t1[i], t2[i]
                mat = u[:, :, k1, k2]
                total += p1 * p2 * (delta1[i][k1] @ mat @ delta2[i][k2])
    return total


def test_bilinear_utility_equals_exhaustive_sum():
    inst = gen_soft_blotto_double(3, 3, 3, seed=11)
    d1 = build_dag(3, 3, inst.action_counts(1))
    d2 = build_dag(3, 3, inst.action_counts(2))
    rng = np.random.default_rng(0)
    for _ in range(10):
        prof1 = random_behavioral(d1, rng)
        prof2 = random_behavioral(d2, rng)
        s1 = behavioral_to_sequence(d1, *prof1)
        s2 = behavioral_to_sequence(d2, *prof2)
        want = exhaustive_expectation(inst, prof1, prof2)
        assert bilinear_utility(inst, s1, s2) == pytest.approx(want, abs=1e-12)


def test_best_response_dominates_alternatives():
    inst = gen_soft_blotto_double(2, 2, 2, seed=4)
    d1 = build_dag(2, 2, inst.action_counts(1))
    d2 = build_dag(2, 2, inst.action_counts(2))
    rng = np.random.default_rng(1)
    opp = behavioral_to_sequence(d2, *random_behavioral(d2, rng))
    br, br_val = best_response(inst, d1, opp, side=1)
    assert check_strategy(br) == []
    assert bilinear_utility(inst, br, opp) == pytest.approx(br_val, abs=1e-12)
    for _ in range(40):
        alt = behavioral_to_sequence(d1, *random_behavioral(d1, rng))
        # player 1 minimizes, so nothing does better than the response value
        assert bilinear_utility(inst, alt, opp) >= br_val - 1e-12

    me = behavioral_to_sequence(d1, *random_behavioral(d1, rng))
    br2, br2_val = best_response(inst, d2, me, side=2)
    for _ in range(40):
        alt = behavioral_to_sequence(d2, *random_behavioral(d2, rng))
        assert bilinear_utility(inst, me, alt) <= br2_val + 1e-12


def test_best_response_exact_on_enumeration():
    # against a fixed opponent the response should match the best pure plan
    inst = gen_soft_blotto_double(2, 2, 2, seed=9)
    d1 = build_dag(2, 2, inst.action_counts(1))
    d2 = build_dag(2, 2, inst.action_counts(2))
    opp = uniform_strategy(d2)
    _, got = best_response(inst, d1, opp, side=1)
    best = np.inf
    for split in compositions(2, 2):
        for acts in itertools.product(range(2), range(2)):
            delta = []
            for i in range(2):
                d = np.zeros((3, 2))
                d[:, acts[i]] = 1.0
                delta.append(d)
            s = behavioral_to_sequence(d1, {split: 1.0}, delta)
            best = min(best, bilinear_utility(inst, s, opp))
    assert got == pytest.approx(best, abs=1e-12)


# --- csv dumps ---------------------------------------------------------------


def test_sequence_csv_round_trip(tmp_path):
    dag = build_dag(2, 2, [2, 2])
    rng = np.random.default_rng(3)
    s = behavioral_to_sequence(dag, *random_behavioral(dag, rng))
    path = tmp_path / "s.csv"
    write_strategy_csv(s, path)
    back = sequence_from_rows(dag, read_strategy_csv(path))
    np.testing.assert_array_equal(back.values, s.values)


def test_twolevel_csv_round_trip(tmp_path):
    y = TwoLevelSeqStrategy("Q_polytope", 4.0, np.array([3.0, 1.0]),
                            (np.array([2.0, 1.0]), np.array([1.0])))
    assert check_twolevel(y) == []
    path = tmp_path / "y.csv"
    write_strategy_csv(y, path)
    back = twolevel_from_rows(read_strategy_csv(path), "Q_polytope", 2, [2, 1])
    assert back.y_root == y.y_root
    np.testing.assert_array_equal(back.y_battlefield, y.y_battlefield)
    for a, b in zip(back.y_action, y.y_action):
        np.testing.assert_array_equal(a, b)


def test_bare_distribution_csv_round_trip(tmp_path):
    dists = [np.array([0.25, 0.75]), np.array([1.0, 0.0, 0.0])]
    path = tmp_path / "d.csv"
    write_strategy_csv(dists, path)
    rows = read_strategy_csv(path)
    assert rows["y_root"] is None
    back = action_lists_from_rows(rows, [2, 3])
    for a, b in zip(back, dists):
        np.testing.assert_array_equal(a, b)


def test_csv_rejects_unknown_payload(tmp_path):
    with pytest.raises(TypeError):
        write_strategy_csv({"not": "a strategy"}, tmp_path / "x.csv")
    bad = tmp_path / "bad.csv"
    bad.write_text("wrong,header\n")
    with pytest.raises(ValueError):
        read_strategy_csv(bad)
