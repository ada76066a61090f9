"""FFS transition-rate sweep over the initiator flow for the polystyrene reactor.

Uses the shipped polystyrene config and prints one line per q_i value.
Estimates near the runaway boundary depend strongly on the seed, so
compare several ``--seed`` values before reading much into a single run.

    python3 scripts/polystyrene_ffs.py --seed 11
"""

import argparse
import json
from pathlib import Path

from rarebench.cli import run
from rarebench.config import load_config

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=str(ROOT / "configs" / "polystyrene_unsafe.yaml"))
    ap.add_argument("--out", default="runs/polystyrene_ffs")
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    run("ffs", cfg, Path(args.out), jobs=args.jobs)
    summary = json.loads((Path(args.out) / "ffs" / "summary.json").read_text())
    for s in summary:
        print(f"q_i={s['response_value']:<8g} r_0={s['r_0']:.4g}  P={s['p_mean']:.4g}  rate={s['r_mean']:.4g}"
              f"  crossings={s['crossings_per_interface']}")


if __name__ == "__main__":
    main()
