import numpy as np
import pytest

from blotto2.builders import (
    SETTINGS,
    build_lp_one_sided_linear_continuous,
    build_lp_one_sided_min_discrete,
    build_lp_two_sided_sum,
    extract_equilibrium,
)
from blotto2.flowdag import check_strategy, check_twolevel
from blotto2.instances import gen_soft_blotto_double
from blotto2.learning import saddle_point_gap
from blotto2.lp import solve_lp
from blotto2.matrixgame import solve_matrix_game
from blotto2.model import (
    BattlefieldSpec,
    BlottoInstance,
    DenseTensor,
    ParametricMatrix,
)
from blotto2.oracles import grid_max_V


def one_sided_min_instance(n, m2, rng, amax=3):
    bfs = []
    for _ in range(n):
        a1 = int(rng.integers(1, amax + 1))
        a2 = int(rng.integers(1, amax + 1))
        u = rng.uniform(0.0, 1.0, size=(a1, a2, m2 + 1))
        bfs.append(BattlefieldSpec(a1, a2, DenseTensor(u)))
    return BlottoInstance(n, 0, m2, "discrete", "one_sided", "min", tuple(bfs))


def affine_instance(n, m2, rng, aggregator, amax=3, cmax=3.0):
    bfs = []
    for _ in range(n):
        a1 = int(rng.integers(1, amax + 1))
        a2 = int(rng.integers(1, amax + 1))
        c = rng.uniform(0.2, cmax, size=(a1, a2))
        bfs.append(BattlefieldSpec(a1, a2,
                                   ParametricMatrix.affine(c, np.zeros((a1, a2)))))
    return BlottoInstance(n, 0, float(m2), "continuous", "one_sided",
                          aggregator, tuple(bfs))


# --- two-sided sum (full sequence-form program) ------------------------------


def test_single_battlefield_reduces_to_matrix_game():
    inst = gen_soft_blotto_double(1, 2, 3, seed=0)
    sol = solve_lp(build_lp_two_sided_sum(inst))
    forced = inst.battlefields[0].payoff.u[:, :, 2, 3]
    assert sol.value == pytest.approx(solve_matrix_game(forced).value, abs=1e-9)


def test_value_invariant_under_battlefield_reorder():
    inst = gen_soft_blotto_double(3, 2, 2, seed=8)
    flipped = BlottoInstance(inst.n, inst.m1, inst.m2, inst.mode, inst.sided,
                             inst.aggregator, tuple(reversed(inst.battlefields)))
    a = solve_lp(build_lp_two_sided_sum(inst)).value
    b = solve_lp(build_lp_two_sided_sum(flipped)).value
    assert a == pytest.approx(b, abs=1e-9)


def test_two_sided_equilibrium_has_tiny_gap():
    inst = gen_soft_blotto_double(2, 2, 2, seed=5)
    sol = solve_lp(build_lp_two_sided_sum(inst))
    s1, s2 = extract_equilibrium(inst, sol, "two_sided_sum")
    assert check_strategy(s1) == []
    assert check_strategy(s2) == []
    assert saddle_point_gap(inst, s1, s2) <= 1e-5


def test_two_sided_builder_rejects_other_settings():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        build_lp_two_sided_sum(one_sided_min_instance(2, 2, rng))
    inst = gen_soft_blotto_double(2, 1, 1, seed=0)
    min_inst = BlottoInstance(inst.n, inst.m1, inst.m2, "discrete", "two_sided",
                              "min", inst.battlefields)
    with pytest.raises(ValueError):
        build_lp_two_sided_sum(min_inst)


# --- one-sided discrete min --------------------------------------------------


def test_one_sided_min_duality_on_random_instances():
    rng = np.random.default_rng(20240818)
    for _ in range(6):
        inst = one_sided_min_instance(int(rng.integers(1, 4)),
                                      int(rng.integers(1, 4)), rng)
        lo = solve_lp(build_lp_one_sided_min_discrete(inst, "maxmin")).value
        hi = solve_lp(build_lp_one_sided_min_discrete(inst, "minmax")).value
        assert lo == pytest.approx(hi, abs=1e-6)


def test_one_sided_min_single_battlefield():
    rng = np.random.default_rng(2)
    inst = one_sided_min_instance(1, 3, rng)
    sol = solve_lp(build_lp_one_sided_min_discrete(inst, "maxmin"))
    # the full budget lands on the only battlefield
    forced = inst.battlefields[0].payoff.u[:, :, 3]
    assert sol.value == pytest.approx(solve_matrix_game(forced).value, abs=1e-8)


def test_one_sided_min_equilibrium_extraction():
    rng = np.random.default_rng(31)
    inst = one_sided_min_instance(2, 2, rng)
    for side, setting in (("maxmin", "one_sided_min_maxmin"),
                          ("minmax", "one_sided_min_minmax")):
        sol = solve_lp(build_lp_one_sided_min_discrete(inst, side))
        s1, s2 = extract_equilibrium(inst, sol, setting)
        assert s1.kind == "P_polytope"
        assert check_twolevel(s1) == []
        assert check_strategy(s2) == []
        assert saddle_point_gap(inst, s1, s2) <= 1e-6


def test_one_sided_min_builder_rejects_bad_input():
    inst = gen_soft_blotto_double(2, 1, 1, seed=1)
    with pytest.raises(ValueError):
        build_lp_one_sided_min_discrete(inst, "maxmin")
    rng = np.random.default_rng(4)
    good = one_sided_min_instance(2, 2, rng)
    with pytest.raises(ValueError):
        build_lp_one_sided_min_discrete(good, "upmost")


# --- one-sided continuous linear ---------------------------------------------


def cont_sum_response_values(inst, s1, s2):
    """(what the minimizer concedes, what the maximizer can grab) for sum."""
    C = [bf.payoff.c for bf in inst.battlefields]
    # P1 replies per battlefield with its best pure action against y2a
    concede = sum(min(float(C[i][al1] @ s2.y_action[i])
                      for al1 in range(inst.battlefields[i].a1))
                  for i in range(inst.n))
    # P2 piles the whole budget on the best per-unit (battlefield, action)
    rate = max(float(s1[i] @ C[i][:, al2])
               for i in range(inst.n)
               for al2 in range(inst.battlefields[i].a2))
    return concede, inst.m2 * rate


def cont_min_response_values(inst, s1, s2):
    C = [bf.payoff.c for bf in inst.battlefields]
    concede = min(float(C[i][al1] @ s2.y_action[i])
                  for i in range(inst.n)
                  for al1 in range(inst.battlefields[i].a1))
    rate = max(float(s1.y_action[i] @ C[i][:, al2])
               for i in range(inst.n)
               for al2 in range(inst.battlefields[i].a2))
    return concede, inst.m2 * rate


def test_cont_sum_duality_and_saddle():
    rng = np.random.default_rng(911)
    for _ in range(4):
        inst = affine_instance(int(rng.integers(1, 4)), rng.uniform(1, 5), rng, "sum")
        lo_sol = solve_lp(build_lp_one_sided_linear_continuous(inst, "sum", "maxmin"))
        hi_sol = solve_lp(build_lp_one_sided_linear_continuous(inst, "sum", "minmax"))
        assert lo_sol.value == pytest.approx(hi_sol.value, abs=1e-6)
        s1, s2 = extract_equilibrium(inst, lo_sol, "cont_sum_maxmin")
        assert check_twolevel(s2) == []
        for dist in s1:
            assert dist.sum() == pytest.approx(1.0, abs=1e-8)
        concede, grab = cont_sum_response_values(inst, s1, s2)
        assert concede == pytest.approx(lo_sol.value, abs=1e-7)
        assert grab == pytest.approx(lo_sol.value, abs=1e-7)

        t1, t2 = extract_equilibrium(inst, hi_sol, "cont_sum_minmax")
        assert check_twolevel(t2) == []
        concede, grab = cont_sum_response_values(inst, t1, t2)
        assert concede == pytest.approx(hi_sol.value, abs=1e-7)
        assert grab == pytest.approx(hi_sol.value, abs=1e-7)


def test_cont_min_duality_and_saddle():
    rng = np.random.default_rng(912)
    for _ in range(4):
        inst = affine_instance(int(rng.integers(2, 4)), rng.uniform(1, 5), rng, "min")
        lo_sol = solve_lp(build_lp_one_sided_linear_continuous(inst, "min", "maxmin"))
        hi_sol = solve_lp(build_lp_one_sided_linear_continuous(inst, "min", "minmax"))
        assert lo_sol.value == pytest.approx(hi_sol.value, abs=1e-6)
        s1, s2 = extract_equilibrium(inst, lo_sol, "cont_min_maxmin")
        assert s1.kind == "P_polytope" and s2.kind == "Q_polytope"
        assert check_twolevel(s1) == [] and check_twolevel(s2) == []
        concede, grab = cont_min_response_values(inst, s1, s2)
        assert concede == pytest.approx(lo_sol.value, abs=1e-7)
        assert grab == pytest.approx(lo_sol.value, abs=1e-7)


def test_cont_min_equalizing_split():
    # two trivial subgames u_i = c_i * sigma_i with c = (1, 2): the split
    # equalizes c_i sigma_i, so sigma = (2/3, 1/3) of the budget
    m2 = 3.0
    bfs = [BattlefieldSpec(1, 1, ParametricMatrix.affine(
        np.array([[c]]), np.zeros((1, 1)))) for c in (1.0, 2.0)]
    inst = BlottoInstance(2, 0, m2, "continuous", "one_sided", "min", tuple(bfs))
    sol = solve_lp(build_lp_one_sided_linear_continuous(inst, "min", "maxmin"))
    assert sol.value == pytest.approx(2.0, abs=1e-9)
    _, s2 = extract_equilibrium(inst, sol, "cont_min_maxmin")
    np.testing.assert_allclose(s2.y_battlefield, [2.0, 1.0], atol=1e-8)


def test_cont_sum_puts_budget_on_best_rate():
    rng = np.random.default_rng(5)
    inst = affine_instance(3, 4.0, rng, "sum", amax=1)
    c = np.array([float(bf.payoff.c[0, 0]) for bf in inst.battlefields])
    sol = solve_lp(build_lp_one_sided_linear_continuous(inst, "sum", "maxmin"))
    assert sol.value == pytest.approx(4.0 * c.max(), abs=1e-9)


def test_lp_values_match_grid_oracle():
    # both aggregators, both orders, against a 200-step split search
    rng = np.random.default_rng(77)
    for aggregator in ("sum", "min"):
        inst = affine_instance(2, 2.0, rng, aggregator, amax=2)
        for side in ("maxmin", "minmax"):
            got = solve_lp(build_lp_one_sided_linear_continuous(
                inst, aggregator, side)).value
            _, v_grid = grid_max_V(inst, steps=200)
            assert got == pytest.approx(v_grid, abs=1e-4), (aggregator, side)


def test_cont_builder_rejects_offsets_and_mismatches():
    rng = np.random.default_rng(6)
    inst = affine_instance(2, 3.0, rng, "min")
    with pytest.raises(ValueError):
        build_lp_one_sided_linear_continuous(inst, "sum", "maxmin")
    with pytest.raises(ValueError):
        build_lp_one_sided_linear_continuous(inst, "min", "sideways")
    with pytest.raises(ValueError):
        build_lp_one_sided_linear_continuous(
            gen_soft_blotto_double(2, 1, 1, seed=0), "sum", "maxmin")

    c = np.array([[1.0]])
    d = np.array([[0.5]])
    shifted = BlottoInstance(1, 0, 2.0, "continuous", "one_sided", "min",
                             (BattlefieldSpec(1, 1, ParametricMatrix.affine(c, d)),))
    with pytest.raises(ValueError, match="offsets"):
        build_lp_one_sided_linear_continuous(shifted, "min", "maxmin")


def test_extract_rejects_unknown_setting():
    inst = gen_soft_blotto_double(2, 1, 1, seed=3)
    sol = solve_lp(build_lp_two_sided_sum(inst))
    with pytest.raises(ValueError):
        extract_equilibrium(inst, sol, "two_sided_prod")
    assert "two_sided_sum" in SETTINGS
