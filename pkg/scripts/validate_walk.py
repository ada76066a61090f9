"""Check branched FFS on the biased random walk against the gambler's-ruin formula.

Prints the FFS transition probability from the first interface to basin B,
averaged over seeds, next to the closed form, and the mean committer
estimate at each interface next to its exact value.

    python3 scripts/validate_walk.py --p-up 0.45 --seeds 40
"""

import argparse

import numpy as np

from rarebench.ffs import BranchConfig, InterfaceLadder, run_bgffs
from rarebench.walk import RandomWalk, gamblers_ruin


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p-up", type=float, default=0.45)
    ap.add_argument("--floor", type=float, default=-10.0)
    ap.add_argument("--m", type=int, default=20)
    ap.add_argument("--seeds", type=int, default=40)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    ladder = InterfaceLadder((0.0, 5.0, 10.0, 15.0, 20.0))
    walk = RandomWalk(p_up=args.p_up, floor=args.floor)
    res = run_bgffs(walk, ladder, BranchConfig.constant(args.m, ladder.n, n_seeds=args.seeds), args.seed)

    exact = gamblers_ruin(1, 20, args.p_up, 0)
    print(f"P(lambda_0 -> B)  ffs {res.p_mean:.6f}  exact {exact:.6f}  ratio {res.p_mean / exact:.3f}")
    for i in range(ladder.n):
        rows = res.crossings_at(i)
        z = np.array([c.x[0] for c in rows])
        p = np.array([c.p_B for c in rows])
        ex = np.array([gamblers_ruin(int(v), 20, args.p_up, 0) for v in z])
        print(f"interface {i}: {len(rows):6d} crossings  mean p_B {p.mean():.5f}  exact {ex.mean():.5f}")
    print(f"flux r_0 {res.r0:.5f}   rate {res.r_mean:.3e}")


if __name__ == "__main__":
    main()
