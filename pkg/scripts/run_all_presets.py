"""Run every experiment preset with its threshold checks.

    python scripts/run_all_presets.py --out-root runs
    python scripts/run_all_presets.py --presets v1-abf,bias-demo
    python scripts/run_all_presets.py --full          # 2e6-step v2-long

Exits nonzero if any check fails.
"""

import argparse
import os
import sys
import time

from abfsim.config import apply_overrides
from abfsim.experiments import PRESETS, preset_config, run_experiment


def get_parser():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out-root", default="runs",
                        help="directory receiving one subdirectory per preset")
    parser.add_argument("--presets", default=None,
                        help="comma-separated subset (default: all)")
    parser.add_argument("--full", action="store_true",
                        help="run v2-long at its full 2e6 steps instead of 2e5")
    return parser


def main():
    args = get_parser().parse_args()
    names = args.presets.split(",") if args.presets else sorted(PRESETS)
    failures = []
    t0 = time.perf_counter()
    for name in names:
        cfg = preset_config(name)
        if name == "v2-long" and not args.full:
            cfg = apply_overrides(cfg, ["sim.steps=200000"])
        out_dir = os.path.join(args.out_root, name)
        _, checks = run_experiment(cfg, out_dir, check=True)
        failures.extend(
            f"{name}: {label} ({detail})"
            for label, ok, detail in checks
            if not ok
        )
    print(f"\ntotal {time.perf_counter() - t0:.0f}s")
    if failures:
        print(f"{len(failures)} check(s) failed:")
        for line in failures:
            print(f"  {line}")
        return 1
    print("all checks passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
