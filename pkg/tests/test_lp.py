import numpy as np
import pytest

from blotto2.lp import (
    LpModel,
    SimplexStall,
    export_lp_text,
    parse_lp_text,
    simplex_solve,
    solve_lp,
)


def build(sense="min"):
    m = LpModel("t")
    return m, sense


def test_basic_min():
    m = LpModel("diet")
    m.add_var("x")
    m.add_var("y")
    m.set_objective("min", {0: 2.0, 1: 3.0})
    m.add_row("protein", {0: 1.0, 1: 2.0}, ">=", 4.0)
    m.add_row("fat", {0: 3.0, 1: 1.0}, ">=", 3.0)
    sol = solve_lp(m)
    assert sol.status == "optimal"
    # vertex of the two binding rows: x = 2/5, y = 9/5
    assert sol.value == pytest.approx(2 * 0.4 + 3 * 1.8)
    assert sol.primal("x") == pytest.approx(0.4)
    assert sol.primal("y") == pytest.approx(1.8)
    assert sol.feas_residual < 1e-9 and sol.cs_residual < 1e-9


def test_basic_max_with_slack():
    m = LpModel("prod")
    m.add_var("a")
    m.add_var("b")
    m.set_objective("max", {0: 3.0, 1: 5.0})
    m.add_row("r1", {0: 1.0}, "<=", 4.0)
    m.add_row("r2", {1: 2.0}, "<=", 12.0)
    m.add_row("r3", {0: 3.0, 1: 2.0}, "<=", 18.0)
    sol = solve_lp(m)
    assert sol.value == pytest.approx(36.0)
    assert sol.primal_dict() == pytest.approx({"a": 2.0, "b": 6.0})


def test_equality_rows_and_objective_constant():
    m = LpModel("eq")
    m.add_var("x")
    m.add_var("y")
    m.set_objective("min", {0: 1.0, 1: 1.0}, const=10.0)
    m.add_row("bal", {0: 1.0, 1: 1.0}, "=", 5.0)
    sol = solve_lp(m)
    assert sol.value == pytest.approx(15.0)


def test_free_variable_goes_negative():
    m = LpModel("free")
    m.free_var("z")
    m.add_var("s")
    m.set_objective("min", {0: 1.0})
    m.add_row("low", {0: 1.0, 1: -1.0}, "=", -7.0)
    m.add_row("cap", {1: 1.0}, "<=", 3.0)
    sol = solve_lp(m)
    # minimizing z sends the slack to its floor, z = 0 - 7
    assert sol.primal("z") == pytest.approx(-7.0)
    assert sol.primal("s") == pytest.approx(0.0)
    assert sol.value == pytest.approx(-7.0)


def test_bounds_are_honored():
    m = LpModel("box")
    m.add_var("x", lb=1.5, ub=4.0)
    m.add_var("y", lb=-2.0, ub=2.0)
    m.set_objective("min", {0: 1.0, 1: 1.0})
    m.add_row("tie", {0: 1.0, 1: -1.0}, ">=", 0.0)
    sol = solve_lp(m)
    assert sol.primal("x") == pytest.approx(1.5)
    assert sol.primal("y") == pytest.approx(-2.0)

    m2 = LpModel("box2")
    m2.add_var("x", lb=0.0, ub=2.5)
    m2.set_objective("max", {0: 1.0})
    sol2 = solve_lp(m2)
    assert sol2.value == pytest.approx(2.5)


def test_infeasible_and_unbounded_status():
    m = LpModel("bad")
    m.add_var("x")
    m.set_objective("min", {0: 1.0})
    m.add_row("a", {0: 1.0}, "<=", 1.0)
    m.add_row("b", {0: 1.0}, ">=", 2.0)
    assert solve_lp(m).status == "infeasible"

    m2 = LpModel("open")
    m2.add_var("x")
    m2.set_objective("max", {0: 1.0})
    m2.add_row("a", {0: 1.0}, ">=", 0.0)
    sol = solve_lp(m2)
    assert sol.status == "unbounded"
    assert sol.value == np.inf


def test_dual_values_are_shadow_prices():
    m = LpModel("shadow")
    m.add_var("a")
    m.add_var("b")
    m.set_objective("max", {0: 3.0, 1: 5.0})
    m.add_row("r1", {0: 1.0}, "<=", 4.0)
    m.add_row("r2", {1: 2.0}, "<=", 12.0)
    m.add_row("r3", {0: 3.0, 1: 2.0}, "<=", 18.0)
    base = solve_lp(m)
    duals = base.dual_dict()
    eps = 1e-6
    for r, name in enumerate(m.row_names):
        m.row_rhs[r] += eps
        bumped = solve_lp(m).value
        m.row_rhs[r] -= eps
        assert (bumped - base.value) / eps == pytest.approx(duals[name], abs=1e-5)


def test_dual_sign_on_min_problems():
    m = LpModel("minshadow")
    m.add_var("x")
    m.add_var("y")
    m.set_objective("min", {0: 2.0, 1: 3.0})
    m.add_row("need", {0: 1.0, 1: 2.0}, ">=", 4.0)
    m.add_row("also", {0: 3.0, 1: 1.0}, ">=", 3.0)
    base = solve_lp(m)
    eps = 1e-6
    for r, name in enumerate(m.row_names):
        m.row_rhs[r] += eps
        bumped = solve_lp(m).value
        m.row_rhs[r] -= eps
        assert (bumped - base.value) / eps == pytest.approx(
            base.dual_dict()[name], abs=1e-5)


def test_degenerate_problem_terminates():
    # Beale's cycling example; Dantzig's rule alone loops on it
    A = np.array([[0.25, -60.0, -1 / 25, 9.0, 1, 0, 0],
                  [0.5, -90.0, -1 / 50, 3.0, 0, 1, 0],
                  [0.0, 0.0, 1.0, 0.0, 0, 0, 1]])
    b = [0.0, 0.0, 1.0]
    c = np.array([-0.75, 150.0, -1 / 50, 6.0, 0, 0, 0])
    status, value, x, _ = simplex_solve(A, [0, 0, 0], b, c)
    assert status == "optimal"
    assert value == pytest.approx(-0.05)


def test_negative_rhs_normalization():
    m = LpModel("negrhs")
    m.add_var("x")
    m.set_objective("min", {0: 1.0})
    m.add_row("r", {0: -1.0}, "<=", -3.0)   # i.e. x >= 3
    sol = solve_lp(m)
    assert sol.value == pytest.approx(3.0)
    eps = 1e-6
    m.row_rhs[0] += eps
    assert (solve_lp(m).value - 3.0) / eps == pytest.approx(
        sol.dual_dict()["r"], abs=1e-5)


def test_stall_raises():
    m = LpModel("tiny")
    for j in range(6):
        m.add_var(f"x{j}")
    m.set_objective("min", {j: -1.0 for j in range(6)})
    for r in range(4):
        m.add_row(f"r{r}", {j: 1.0 for j in range(6)}, "<=", 1.0 + r)
    with pytest.raises(SimplexStall):
        solve_lp(m, max_iters=1)


def test_duplicate_names_rejected():
    m = LpModel("dup")
    m.add_var("x")
    with pytest.raises(ValueError):
        m.add_var("x")
    m.add_row("r", {0: 1.0}, "<=", 1.0)
    with pytest.raises(ValueError):
        m.add_row("r", {0: 1.0}, "<=", 2.0)


def random_model(seed):
    rng = np.random.default_rng(seed)
    nv, nr = rng.integers(2, 6), rng.integers(2, 5)
    m = LpModel(f"rand{seed}")
    for j in range(nv):
        if rng.random() < 0.25:
            m.free_var(f"v{j}")
        else:
            m.add_var(f"v{j}", lb=float(rng.uniform(-1, 0.5)),
                      ub=float(rng.uniform(1, 4)) if rng.random() < 0.5 else np.inf)
    m.set_objective("min" if rng.random() < 0.5 else "max",
                    {j: float(rng.normal()) for j in range(nv)},
                    const=float(rng.normal()))
    for r in range(nr):
        sense = ("<=", ">=", "=")[rng.integers(0, 3)]
        m.add_row(f"c{r}", {j: float(rng.normal()) for j in range(nv)},
                  sense, float(rng.uniform(-2, 4)))
    # keep everything bounded so statuses stay comparable
    for j in range(nv):
        m.add_row(f"capL{j}", {j: 1.0}, ">=", -50.0)
        m.add_row(f"capU{j}", {j: 1.0}, "<=", 50.0)
    return m


def test_against_scipy_on_random_models():
    linprog = pytest.importorskip("scipy.optimize").linprog
    checked = 0
    for seed in range(30):
        m = random_model(seed)
        sol = solve_lp(m)
        nv = m.n_vars
        sign = 1.0 if m.sense == "min" else -1.0
        c = np.zeros(nv)
        for j, coef in m.obj.items():
            c[j] = sign * coef
        A_ub, b_ub, A_eq, b_eq = [], [], [], []
        for r in range(m.n_rows):
            row = np.zeros(nv)
            for j, coef in m.row_coeffs[r].items():
                row[j] = coef
            if m.row_senses[r] == "<=":
                A_ub.append(row), b_ub.append(m.row_rhs[r])
            elif m.row_senses[r] == ">=":
                A_ub.append(-row), b_ub.append(-m.row_rhs[r])
            else:
                A_eq.append(row), b_eq.append(m.row_rhs[r])
        ref = linprog(c, A_ub=np.array(A_ub) if A_ub else None,
                      b_ub=b_ub or None,
                      A_eq=np.array(A_eq) if A_eq else None,
                      b_eq=b_eq or None,
                      bounds=[(m.var_lb[j] if m.var_lb[j] > -np.inf else None,
                               m.var_ub[j] if m.var_ub[j] < np.inf else None)
                              for j in range(nv)],
                      method="highs")
        if ref.status == 2:
            assert sol.status == "infeasible"
            continue
        assert sol.status == "optimal"
        want = sign * ref.fun + m.obj_const
        assert sol.value == pytest.approx(want, abs=1e-7)
        checked += 1
    assert checked >= 15  # the suite should be mostly feasible draws


def test_text_round_trip_is_byte_identical():
    m = random_model(3)
    text = export_lp_text(m)
    back = parse_lp_text(text)
    assert export_lp_text(back) == text
    a, b = solve_lp(m), solve_lp(back)
    assert a.value == pytest.approx(b.value, abs=1e-12)


def test_text_round_trip_covers_bounds_and_free():
    m = LpModel("mix")
    m.add_var("x", lb=1.0, ub=2.0)
    m.free_var("z")
    m.add_var("p")
    m.set_objective("max", {0: 1.0, 1: -2.0, 2: 0.5}, const=-1.0)
    m.add_row("r", {0: 1.0, 1: 1.0, 2: 1.0}, "=", 3.0)
    text = export_lp_text(m)
    back = parse_lp_text(text)
    assert export_lp_text(back) == text
    assert back.var_lb == m.var_lb and back.var_ub == m.var_ub
    assert solve_lp(back).value == pytest.approx(solve_lp(m).value)


def test_parse_rejects_malformed():
    with pytest.raises(ValueError):
        parse_lp_text("Minimize\n obj: x\n")   # no End, undeclared sections
