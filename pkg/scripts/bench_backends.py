#!/usr/bin/env python3
"""Time the jit and plain-numpy kernel paths against each other.

Backend selection happens at import time from BLOTTO_BACKEND, so each
measurement runs in a child interpreter with the variable set. The parent
process never imports the package at all.

Usage:
    python3 scripts/bench_backends.py
    python3 scripts/bench_backends.py --n 8 --m 16 --iters 500
"""

import argparse
import json
import os
import subprocess
import sys
import time


def run_worker(backend, args):
    env = dict(os.environ, BLOTTO_BACKEND=backend, BLOTTO_THREADS="1")
    cmd = [sys.executable, os.path.abspath(__file__), "--worker",
           "--n", str(args.n), "--m", str(args.m),
           "--iters", str(args.iters), "--repeat", str(args.repeat)]
    proc = subprocess.run(cmd, env=env, capture_output=True, text=True)
    if proc.returncode != 0:
        sys.stderr.write(proc.stderr)
        raise SystemExit(f"worker for backend={backend} failed")
    # warnings may precede the payload; the JSON is the last line
    return json.loads(proc.stdout.strip().splitlines()[-1])


def worker(args):
    from blotto2 import backend
    from blotto2.builders import build_lp_two_sided_sum
    from blotto2.instances import gen_soft_blotto_double
    from blotto2.learning import LearnConfig, self_play
    from blotto2.lp import solve_lp

    backend.warmup()

    inst = gen_soft_blotto_double(args.n, args.m, args.m, seed=1)
    cfg = LearnConfig(algorithm="rm+", update_mode="alternating",
                      averaging="quadratic", max_iters=args.iters,
                      gap_check_every=args.iters + 1)
    best_sp = float("inf")
    for _ in range(args.repeat):
        t0 = time.perf_counter()
        result = self_play(inst, cfg)
        best_sp = min(best_sp, time.perf_counter() - t0)
    assert result.iterations == args.iters

    lp_inst = gen_soft_blotto_double(3, 5, 5, seed=2)
    model = build_lp_two_sided_sum(lp_inst)
    best_lp = float("inf")
    for _ in range(args.repeat):
        t0 = time.perf_counter()
        solve_lp(model)
        best_lp = min(best_lp, time.perf_counter() - t0)

    print(json.dumps({
        "active": backend.ACTIVE,
        "dim": result.strategy1.dag.dim,
        "selfplay_s": best_sp,
        "lp_s": best_lp,
    }))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=6, help="battlefields")
    ap.add_argument("--m", type=int, default=12, help="budget, both sides")
    ap.add_argument("--iters", type=int, default=300,
                    help="self-play iterations to time")
    ap.add_argument("--repeat", type=int, default=3,
                    help="repetitions, best time wins")
    ap.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()

    if args.worker:
        worker(args)
        return

    print(f"workload: {args.iters} self-play iterations on "
          f"n={args.n} m={args.m}/{args.m}, plus one dense LP solve "
          f"(best of {args.repeat})")
    rows = []
    for want in ("numba", "numpy"):
        r = run_worker(want, args)
        if r["active"] != want:
            print(f"  note: requested {want}, got {r['active']}")
        rows.append(r)
        print(f"  {r['active']:<6} selfplay {r['selfplay_s']:8.3f}s "
              f"({1e3 * r['selfplay_s'] / args.iters:7.3f} ms/iter)   "
              f"lp {r['lp_s']:.3f}s")
    if rows[0]["active"] != rows[1]["active"]:
        sp = rows[1]["selfplay_s"] / rows[0]["selfplay_s"]
        lp = rows[1]["lp_s"] / rows[0]["lp_s"]
        print(f"  jit speedup: selfplay {sp:.1f}x, lp {lp:.1f}x "
              f"(dag dim {rows[0]['dim']})")


if __name__ == "__main__":
    main()
