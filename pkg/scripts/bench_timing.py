#!/usr/bin/env python3
"""Time one-to-one matching at production parameters and list container sizes.

    python3 scripts/bench_timing.py --reps 9 --out bench.json
"""

import argparse

from hbmatch.evaluation.bench import run_bench


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=9)
    ap.add_argument("--dim", type=int, default=1012)
    ap.add_argument("--mode", choices=["euclid", "innerprod"], default="euclid")
    ap.add_argument("--out")
    a = ap.parse_args()

    r = run_bench(dim=a.dim, reps=a.reps, mode=a.mode, out=a.out)
    ref_t, ref_s = r["reference"]["timing_s"], r["reference"]["sizes"]
    print(f"{'':<22}{'measured':>14}{'reference':>14}")
    print(f"{'encrypted match (s)':<22}{r['encrypted']['median_s']:>14.4f}{ref_t['encrypted_s']:>14}")
    print(f"{'plaintext match (s)':<22}{r['plain']['median_s']:>14.6f}{ref_t['plain_s']:>14}")
    for name, size in r["sizes"].items():
        ref = f"{ref_s[name]} B" if name in ref_s else ""
        print(f"{name:<22}{size:>12} B{ref:>14}")
    print(f"encrypted and plaintext results agree: {r['results_agree']}")


if __name__ == "__main__":
    main()
