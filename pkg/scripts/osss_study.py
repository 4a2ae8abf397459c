"""Revealment, influence and the OSSS inequality for every k at one (t, n).

    python3 scripts/osss_study.py --t 0.45 --n 8 --reps 10000
"""
import argparse
from pathlib import Path

from cdpre.osss import osss_check, osss_json, revealment_table


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--t", type=float, default=0.45)
    ap.add_argument("--n", type=int, default=8)
    ap.add_argument("--reps", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out", default="results/osss")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    checks = osss_check(args.t, args.n, args.reps, args.seed, threads=args.threads)
    for k, c in sorted(checks.items()):
        print(f"k={k:2d} Var={c.variance:.4f} rhs={c.rhs:.4f} margin={c.margin:.4f} sigma={c.sigma:.4f}")
    (out / "osss.json").write_text(osss_json(checks) + "\n")
    rep = revealment_table(args.t, args.n, args.reps, args.seed, args.threads)
    beta = rep.beta_hat()
    print(f"S_n={rep.s_n:.4f} mismatches={rep.mismatches} max beta_hat={beta.max():.4f}")


if __name__ == "__main__":
    main()
