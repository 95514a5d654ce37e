"""ADMM vs APG: wall time to come within 1% of the best objective found.

Usage: python scripts/solver_race.py [--seeds 5] [--n 100] [--dims 50 50]
"""
import argparse

from mvcomplete.experiments import solver_race


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--n", type=int, default=100)
    ap.add_argument("--dims", type=int, nargs="+", default=[50, 50])
    args = ap.parse_args()

    print(f"{'seed':>4s} {'best':>12s} {'admm s':>8s} {'apg s':>8s}  faster")
    for seed in range(args.seeds):
        r = solver_race(n=args.n, dims=tuple(args.dims), seed=seed)
        print(f"{seed:4d} {r.best:12.3f} {r.admm_time:8.3f} {r.apg_time:8.3f}  "
              f"{'admm' if r.admm_faster else 'apg'}")


if __name__ == "__main__":
    main()
