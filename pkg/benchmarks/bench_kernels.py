"""Compare the compiled tape kernels against the pure-Python fallback.

The backend is chosen at import time, so each side runs in its own
subprocess (the fallback is forced with AKKT_PURE_PYTHON=1).  Run:

    python3 benchmarks/bench_kernels.py [--repeats N]
"""
import argparse
import json
import os
import subprocess
import sys
import time


def run_workloads(repeats: int) -> dict:
    import numpy as np

    from akkt import BACKEND
    from akkt.expr import parse_expr
    from akkt.penalty import generate_akkt_sequence
    from akkt.problem import builtin
    from akkt.tape import eval_grad

    out = {"backend": BACKEND}

    # 1. The penalty path on the equality-constrained catalog problem:
    #    the inner subgradient ladder dominates package runtime.
    pr = builtin("linear-tradeoff")
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        generate_akkt_sequence(pr, [0.5, 0.5])
        times.append(time.perf_counter() - t0)
    out["penalty path (linear-tradeoff)"] = min(times)

    # 2. The raw tape interpreter: value+gradient of a medium expression.
    expr = parse_expr(
        "exp(0.3*x0) * sin(x1) + log(1.5 + (x0 - x1)^2) + x2^3", 3)
    points = [np.array([0.1 * i, 0.05 * i, -0.02 * i]) for i in (1, 2, 3)]
    evals = 20_000
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        for i in range(evals):
            eval_grad(expr, points[i % 3])
        times.append(time.perf_counter() - t0)
    out[f"tape gradients ({evals:,} evals)"] = min(times)
    return out


def run_side(pure: bool, repeats: int) -> dict:
    env = dict(os.environ)
    if pure:
        env["AKKT_PURE_PYTHON"] = "1"
    else:
        env.pop("AKKT_PURE_PYTHON", None)
    proc = subprocess.run(
        [sys.executable, os.path.abspath(__file__),
         "--worker", "--repeats", str(repeats)],
        env=env, capture_output=True, text=True, check=True)
    return json.loads(proc.stdout)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=3,
                    help="timing repeats per workload (min is reported)")
    ap.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()

    if args.worker:
        json.dump(run_workloads(args.repeats), sys.stdout)
        return 0

    compiled = run_side(pure=False, repeats=args.repeats)
    pure = run_side(pure=True, repeats=args.repeats)
    if compiled["backend"] != "compiled":
        print("note: compiled extension unavailable; both sides ran the "
              "pure-Python backend", file=sys.stderr)

    width = max(len(k) for k in compiled if k != "backend")
    print(f"{'workload':<{width}}  {'compiled':>10}  {'pure-python':>12}  speedup")
    for key, fast in compiled.items():
        if key == "backend":
            continue
        slow = pure[key]
        print(f"{key:<{width}}  {fast:>9.4f}s  {slow:>11.4f}s  "
              f"{slow / fast:>6.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
