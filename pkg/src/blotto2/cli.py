"""Command-line front end.

One binary, eight subcommands: generate instances, build and solve the LP
formulations, export LP text, run self-play or subgradient ascent, score a
strategy profile, verify the solvers against the independent oracles, and
benchmark LP solving against learning. All output is JSON or CSV so results
can be post-processed without this package.

Exit codes: 0 success, 1 invalid input, 2 solver failure, 64 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import oracles
from .ascent import AscentConfig, run_psa
from .builders import (build_lp_one_sided_linear_continuous,
                       build_lp_one_sided_min_discrete, build_lp_two_sided_sum,
                       extract_equilibrium)
from .flowdag import (build_dag, read_strategy_csv, sequence_from_rows,
                      twolevel_from_rows, write_strategy_csv)
from .instances import (SplitMix64, gen_log_security, gen_random_parametric,
                        gen_soft_blotto_double, read_instance, write_instance)
from .learning import LearnConfig, saddle_point_gap, self_play
from .lp import SimplexStall, export_lp_text, solve_lp
from .model import (BattlefieldSpec, BlottoInstance, DenseTensor,
                    ParametricMatrix, SchemaError, validate_instance)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_SOLVER = 2
EXIT_USAGE = 64

SETTING_CHOICES = ("two-sided-sum", "one-sided-min", "cont-sum-linear",
                   "cont-min-linear")


class _Parser(argparse.ArgumentParser):
    """argparse variant that exits 64 on usage problems instead of 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _load_instance(path: str) -> BlottoInstance:
    inst = read_instance(path)
    problems = validate_instance(inst)
    if problems:
        raise SchemaError("; ".join(problems))
    return inst


def _build_model(inst: BlottoInstance, setting: str, side: str):
    """Map a CLI setting name to (LpModel, internal setting key)."""
    if setting == "two-sided-sum":
        return build_lp_two_sided_sum(inst), "two_sided_sum"
    if setting == "one-sided-min":
        return (build_lp_one_sided_min_discrete(inst, side),
                f"one_sided_min_{side}")
    agg = "sum" if setting == "cont-sum-linear" else "min"
    return (build_lp_one_sided_linear_continuous(inst, agg, side),
            f"cont_{agg}_{side}")


def _write_text(path, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _cmd_gen(args) -> int:
    if args.kind == "double":
        for name in ("m1", "m2"):
            val = getattr(args, name)
            if val != int(val):
                raise ValueError(f"--{name} must be an integer soldier count "
                                 f"for --kind double, got {val}")
        inst = gen_soft_blotto_double(args.n, int(args.m1), int(args.m2),
                                      seed=args.seed)
    elif args.kind in ("affine", "quadratic"):
        inst = gen_random_parametric(args.n, args.m2, args.kind, args.a1,
                                     args.a2, args.seed)
    else:
        inst = gen_log_security(args.n, args.m2, args.a1, args.a2, args.seed)
    problems = validate_instance(inst)
    if problems:
        raise SchemaError("; ".join(problems))
    write_instance(inst, args.out)
    print(args.out)
    return EXIT_OK


def _cmd_solve_lp(args) -> int:
    inst = _load_instance(args.instance)
    model, setting = _build_model(inst, args.setting, args.side)
    sol = solve_lp(model)
    payload = {
        "setting": setting,
        "status": sol.status,
        "value": sol.value if sol.status == "optimal" else None,
        "primal": sol.primal_dict(),
        "dual": sol.dual_dict(),
    }
    _write_text(args.out, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    if sol.status != "optimal":
        print(f"solver finished with status {sol.status}", file=sys.stderr)
        return EXIT_SOLVER
    if args.strategy_prefix:
        s1, s2 = extract_equilibrium(inst, sol, setting)
        write_strategy_csv(s1, args.strategy_prefix + "1.csv")
        write_strategy_csv(s2, args.strategy_prefix + "2.csv")
    return EXIT_OK


def _cmd_export_lp(args) -> int:
    inst = _load_instance(args.instance)
    model, _ = _build_model(inst, args.setting, args.side)
    _write_text(args.out, export_lp_text(model))
    return EXIT_OK


def _cmd_learn(args) -> int:
    inst = _load_instance(args.instance)
    cfg = LearnConfig(algorithm=args.algorithm, update_mode=args.update_mode,
                      averaging=args.averaging,
                      gap_check_every=args.gap_every,
                      gap_threshold=args.gap_threshold,
                      max_iters=args.max_iters,
                      track_regret=args.track_regret)
    result = self_play(inst, cfg)
    if args.trace:
        regret_at = {row[0]: row[1:] for row in result.trace.regrets}
        with open(args.trace, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["t", "seconds", "gap", "value",
                         "avg_regret1", "avg_regret2"])
            rows = zip(result.trace.iterations, result.trace.times,
                       result.trace.gaps, result.trace.values)
            for t, sec, gap, val in rows:
                r1, r2 = regret_at.get(t, ("", ""))
                wr.writerow([t, repr(sec), repr(gap), repr(val), r1, r2])
    if args.strategy_prefix:
        write_strategy_csv(result.strategy1, args.strategy_prefix + "1.csv")
        write_strategy_csv(result.strategy2, args.strategy_prefix + "2.csv")
    print(f"{result.status} after {result.iterations} iterations: "
          f"value {result.value:.9f}, gap {result.gap:.3g}")
    return EXIT_OK


def _cmd_ascend(args) -> int:
    inst = _load_instance(args.instance)
    sigma0 = None
    init = "uniform"
    if args.sigma0:
        sigma0 = np.array([float(v) for v in args.sigma0.split(",")])
        init = "given"
    cfg = AscentConfig(eta0=args.eta0, schedule=args.schedule,
                       max_iters=args.max_iters, init=init, sigma0=sigma0,
                       snapshot_every=args.snapshot_every)
    alloc, value, trace = run_psa(inst, cfg)
    if args.trace:
        snaps = iter(trace.sigmas)
        with open(args.trace, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["t", "V", "i_star", "eta"]
                        + [f"sigma_{i}" for i in range(inst.n)])
            rows = zip(trace.iterations, trace.values,
                       trace.worst_battlefield, trace.etas)
            for t, v, istar, eta in rows:
                cells = [t, repr(v), istar, repr(eta)]
                if cfg.snapshot_every and t % cfg.snapshot_every == 0:
                    cells += [repr(float(s)) for s in next(snaps)]
                else:
                    cells += [""] * inst.n
                wr.writerow(cells)
    if args.out:
        payload = {"value": value, "sigma": [float(s) for s in alloc.sigma]}
        _write_text(args.out, json.dumps(payload, indent=2) + "\n")
    print(f"best value {value:.9f} at sigma "
          + ",".join(f"{s:.6f}" for s in alloc.sigma))
    return EXIT_OK


def _cmd_gap(args) -> int:
    inst = _load_instance(args.instance)
    if not inst.discrete:
        raise ValueError("gap scoring covers discrete instances only")
    rows1 = read_strategy_csv(args.strategy1)
    rows2 = read_strategy_csv(args.strategy2)
    if inst.one_sided:
        s1 = twolevel_from_rows(rows1, "P_polytope", inst.n,
                                inst.action_counts(1))
    else:
        d1 = build_dag(inst.n, int(inst.m1), inst.action_counts(1))
        s1 = sequence_from_rows(d1, rows1)
    d2 = build_dag(inst.n, int(inst.m2), inst.action_counts(2))
    s2 = sequence_from_rows(d2, rows2)
    gap = saddle_point_gap(inst, s1, s2)
    print(repr(gap))
    return EXIT_OK


def _random_discrete_min_fixture(seed: int) -> BlottoInstance:
    rng = SplitMix64(seed)
    n, m2, a1, a2 = 2, 3, 2, 2
    bfs = []
    for _ in range(n):
        u = np.array([[[rng.uniform() for _ in range(m2 + 1)]
                       for _ in range(a2)] for _ in range(a1)])
        bfs.append(BattlefieldSpec(a1=a1, a2=a2, payoff=DenseTensor(u)))
    return BlottoInstance(n=n, m1=0, m2=m2, mode="discrete",
                          sided="one_sided", aggregator="min",
                          battlefields=tuple(bfs))


def _random_linear_fixture(aggregator: str, seed: int) -> BlottoInstance:
    rng = SplitMix64(seed)
    n, m2, a1, a2 = 3, 4.0, 2, 2
    bfs = []
    for _ in range(n):
        c = np.array([[rng.uniform(0.0, 100.0) for _ in range(a2)]
                      for _ in range(a1)])
        bfs.append(BattlefieldSpec(a1=a1, a2=a2,
                                   payoff=ParametricMatrix.affine(
                                       c, np.zeros((a1, a2)))))
    return BlottoInstance(n=n, m1=0, m2=m2, mode="continuous",
                          sided="one_sided", aggregator=aggregator,
                          battlefields=tuple(bfs))


def _cmd_verify(args) -> int:
    started = time.perf_counter()
    checks = []

    def check(name, ok, detail):
        checks.append(ok)
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")

    mm, mx = oracles.ce_discrete_two_sided_min()
    check("discrete-min maxmin", abs(mm - 2.0 / 3.0) <= 1e-3,
          f"{mm:.6f} vs 0.666667")
    check("discrete-min minmax", abs(mx - 0.8) <= 1e-3, f"{mx:.6f} vs 0.8")
    check("discrete-min ordering", mm <= mx + 1e-9, f"{mm:.6f} <= {mx:.6f}")

    ct = oracles.ce_continuous_two_sided()
    for agg, want in (("sum", (1.0, 1.5)), ("min", (0.0, 0.5))):
        got = ct[agg]
        check(f"continuous-{agg} maxmin", abs(got[0] - want[0]) <= 1e-3,
              f"{got[0]:.6f} vs {want[0]}")
        check(f"continuous-{agg} minmax", abs(got[1] - want[1]) <= 1e-3,
              f"{got[1]:.6f} vs {want[1]}")
        check(f"continuous-{agg} ordering", got[0] <= got[1] + 1e-9,
              f"{got[0]:.6f} <= {got[1]:.6f}")

    omm, omx = oracles.ce_one_sided_sum_continuous()
    check("one-sided-sum maxmin", abs(omm - (4.0 - math.sqrt(2.0))) <= 1e-3,
          f"{omm:.6f} vs {4.0 - math.sqrt(2.0):.6f}")
    check("one-sided-sum minmax", abs(omx - 3.0) <= 1e-3, f"{omx:.6f} vs 3")
    check("one-sided-sum ordering", omm <= omx + 1e-9,
          f"{omm:.6f} <= {omx:.6f}")

    dmm, dmx, y_star, s_star = oracles.ce_one_sided_min_discontinuous()
    check("one-sided-min maxmin", dmm == 0.0, f"{dmm!r} vs 0.0")
    residual = abs(y_star - (2.0 - s_star))
    check("one-sided-min fixed point", residual <= 1e-9,
          f"|y* - (2 - s*)| = {residual:.2e}")
    check("one-sided-min ordering", dmm <= dmx + 1e-9,
          f"{dmm:.6f} <= {dmx:.6f}")

    inst = gen_soft_blotto_double(2, 2, 2)
    brute = oracles.brute_force_discrete_value(inst)
    lp_val = solve_lp(build_lp_two_sided_sum(inst)).value
    check("enumeration vs sequence-lp", abs(brute - lp_val) <= 1e-6,
          f"{brute:.9f} vs {lp_val:.9f}")

    fix = _random_discrete_min_fixture(20240817)
    lo = solve_lp(build_lp_one_sided_min_discrete(fix, "maxmin")).value
    hi = solve_lp(build_lp_one_sided_min_discrete(fix, "minmax")).value
    check("discrete-min duality", abs(lo - hi) <= 1e-6,
          f"{lo:.9f} vs {hi:.9f}")

    for agg in ("sum", "min"):
        lin = _random_linear_fixture(agg, 99)
        lo = solve_lp(build_lp_one_sided_linear_continuous(
            lin, agg, "maxmin")).value
        hi = solve_lp(build_lp_one_sided_linear_continuous(
            lin, agg, "minmax")).value
        check(f"linear-{agg} duality", abs(lo - hi) <= 1e-6,
              f"{lo:.9f} vs {hi:.9f}")

    toy = BlottoInstance(
        n=2, m1=0, m2=3.0, mode="continuous", sided="one_sided",
        aggregator="min", battlefields=(
            BattlefieldSpec(1, 1, ParametricMatrix.affine(
                np.array([[1.0]]), np.array([[0.0]]))),
            BattlefieldSpec(1, 1, ParametricMatrix.affine(
                np.array([[2.0]]), np.array([[0.0]])))))
    sigma, v = oracles.grid_max_V(toy)
    check("split-search analytic", abs(v - 2.0) <= 1e-4
          and abs(sigma[0] - 2.0) <= 1e-3, f"V={v:.6f} sigma={sigma}")

    failed = checks.count(False)
    print(f"{len(checks) - failed}/{len(checks)} checks passed "
          f"in {time.perf_counter() - started:.1f}s")
    return EXIT_OK if failed == 0 else EXIT_INVALID


def _bench_one(n: int, m: int, iters: int, algorithm: str, lp_max_dim: int):
    inst = gen_soft_blotto_double(n, m, m)
    dag = build_dag(n, m, inst.action_counts(1))
    row = {"n": n, "m1": m, "m2": m, "dim": dag.dim,
           "algorithm": algorithm, "iters": iters}
    cfg = LearnConfig(algorithm=algorithm, gap_check_every=iters,
                      max_iters=iters)
    t0 = time.perf_counter()
    res = self_play(inst, cfg)
    learn_s = time.perf_counter() - t0
    row.update(learn_seconds=learn_s, sec_per_iter=learn_s / iters,
               learn_value=res.value, gap=res.gap)
    if dag.dim <= lp_max_dim:
        t0 = time.perf_counter()
        sol = solve_lp(build_lp_two_sided_sum(inst))
        row.update(lp_seconds=time.perf_counter() - t0, lp_value=sol.value)
    else:
        row.update(lp_seconds="", lp_value="")
    return row


def _cmd_bench(args) -> int:
    sizes = [int(s) for s in args.sizes.split(",")]
    workers = max(int(os.environ.get("BLOTTO_THREADS", "1")), 1)
    jobs = [(n, args.m, args.iters, args.algorithm, args.lp_max_dim)
            for n in sizes]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda j: _bench_one(*j), jobs))
    else:
        rows = [_bench_one(*j) for j in jobs]
    fields = ["n", "m1", "m2", "dim", "algorithm", "iters", "learn_seconds",
              "sec_per_iter", "learn_value", "gap", "lp_seconds", "lp_value"]
    out = sys.stdout if args.out in (None, "-") else open(args.out, "w",
                                                          newline="")
    try:
        wr = csv.DictWriter(out, fieldnames=fields)
        wr.writeheader()
        for row in rows:
            wr.writerow(row)
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def _add_instance_arg(sub) -> None:
    sub.add_argument("--instance", required=True,
                     help="instance JSON file to load")


def _add_setting_args(sub) -> None:
    sub.add_argument("--setting", required=True, choices=SETTING_CHOICES,
                     help="which formulation to build")
    sub.add_argument("--side", choices=("maxmin", "minmax"), default="maxmin",
                     help="commitment side for the one-sided formulations "
                          "(ignored by two-sided-sum)")


def _make_parser():
    parser = _Parser(prog="blotto2",
                     description="Two-level soldier-allocation game solvers.")
    subs = parser.add_subparsers(dest="command", required=True,
                                 parser_class=_Parser)
    registry = {}

    def register(name, fn, helptext):
        sub = subs.add_parser(name, help=helptext)
        sub.add_argument("--config", default=None,
                         help="JSON file of flag defaults (explicit flags win)")
        sub.set_defaults(func=fn)
        registry[name] = sub
        return sub

    g = register("gen", _cmd_gen, "generate an instance file")
    g.add_argument("--kind", required=True,
                   choices=("double", "affine", "quadratic", "log"))
    g.add_argument("--n", type=int, default=5)
    g.add_argument("--m1", type=float, default=0.0)
    g.add_argument("--m2", type=float, default=20.0)
    g.add_argument("--a1", type=int, default=2)
    g.add_argument("--a2", type=int, default=2)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)

    s = register("solve-lp", _cmd_solve_lp,
                 "build and solve a formulation, emit solution JSON")
    _add_instance_arg(s)
    _add_setting_args(s)
    s.add_argument("--out", default="-", help="solution JSON path (- = stdout)")
    s.add_argument("--strategy-prefix", default=None,
                   help="also dump extracted strategies to <prefix>1.csv / "
                        "<prefix>2.csv")

    e = register("export-lp", _cmd_export_lp, "emit a formulation as LP text")
    _add_instance_arg(e)
    _add_setting_args(e)
    e.add_argument("--out", default="-", help="LP text path (- = stdout)")

    l = register("learn", _cmd_learn, "self-play to an approximate saddle point")
    _add_instance_arg(l)
    l.add_argument("--algorithm", default="rm+",
                   choices=("rm", "rm+", "prm", "prm+"))
    l.add_argument("--update-mode", default="simultaneous",
                   choices=("simultaneous", "alternating"))
    l.add_argument("--averaging", default="uniform",
                   choices=("uniform", "quadratic"))
    l.add_argument("--max-iters", type=int, default=10_000)
    l.add_argument("--gap-every", type=int, default=100)
    l.add_argument("--gap-threshold", type=float, default=0.002)
    l.add_argument("--track-regret", action="store_true")
    l.add_argument("--trace", default=None, help="write per-checkpoint CSV")
    l.add_argument("--strategy-prefix", default=None)

    a = register("ascend", _cmd_ascend,
                 "projected subgradient ascent over budget splits")
    _add_instance_arg(a)
    a.add_argument("--eta0", type=float, default=0.01)
    a.add_argument("--schedule", default="diminishing",
                   choices=("diminishing", "constant"))
    a.add_argument("--max-iters", type=int, default=1000)
    a.add_argument("--sigma0", default=None,
                   help="comma-separated starting split (default uniform)")
    a.add_argument("--snapshot-every", type=int, default=1,
                   help="sigma snapshot cadence in the trace (0 disables)")
    a.add_argument("--trace", default=None, help="write per-iteration CSV")
    a.add_argument("--out", default=None, help="write best split JSON")

    p = register("gap", _cmd_gap, "saddle-point gap of a dumped profile pair")
    _add_instance_arg(p)
    p.add_argument("--strategy1", required=True)
    p.add_argument("--strategy2", required=True)

    register("verify", _cmd_verify,
             "run the oracle suite, one PASS/FAIL line per check")

    b = register("bench", _cmd_bench, "time LP solving against self-play")
    b.add_argument("--sizes", default="5,10,20",
                   help="comma-separated battlefield counts")
    b.add_argument("--m", type=int, default=8, help="soldiers per side")
    b.add_argument("--iters", type=int, default=2000)
    b.add_argument("--algorithm", default="rm+",
                   choices=("rm", "rm+", "prm", "prm+"))
    b.add_argument("--lp-max-dim", type=int, default=4000,
                   help="skip the LP column when the dag dimension exceeds this")
    b.add_argument("--out", default="-", help="CSV path (- = stdout)")

    return parser, registry


def _apply_config(args, sub: argparse.ArgumentParser) -> None:
    with open(args.config) as fh:
        try:
            cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise SchemaError("config must be a JSON object of flag defaults")
    dests = {a.dest: a for a in sub._actions}
    for key, value in cfg.items():
        action = dests.get(key)
        if action is None or key in ("config", "func", "help"):
            raise SchemaError(f"config key {key!r} is not a flag of this "
                              f"subcommand")
        if getattr(args, key) == action.default:
            if action.type is not None and isinstance(value, str):
                value = action.type(value)
            setattr(args, key, value)


def dispatch(argv=None) -> int:
    parser, registry = _make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if getattr(args, "config", None):
            _apply_config(args, registry[args.command])
        return args.func(args)
    except SimplexStall as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (SchemaError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
