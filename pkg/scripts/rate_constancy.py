"""Error of the scale-adjusted centroid rule at fixed c over several (p, nu, q) cells.

A pilot calibration on the middle cell picks c for roughly 25% total error.
"""
import argparse

from hdlss.datagen import ModelSpec, delta_critical
from hdlss.harness import calibrate_delta, sweep_c

CELLS = [(500, 8, 0.2), (2000, 8, 0.1), (2000, 16, 0.2)]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--reps", type=int, default=4000)
    ap.add_argument("--pilot-reps", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=12)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    tmpl = ModelSpec(p=2000, m=8, n=8, delta=0.0, q=0.1)
    cal = calibrate_delta("centroid_sa", tmpl, 0.875, 8, reps_per_probe=args.pilot_reps,
                          master_seed=args.seed - 1, workers=args.workers)
    c = cal.delta_star / delta_critical(1, 8, 2000, 0.1)
    print(f"pilot c = {c:.4f}")
    table = sweep_c([c], CELLS, tmpl, reps=args.reps, master_seed=args.seed, workers=args.workers)
    print(f"{'p':>6} {'nu':>4} {'q':>5} {'delta':>8} {'total':>7} {'se':>7}")
    for params, rep in table.cells:
        print(f"{params['p']:>6} {params['nu']:>4} {params['q']:>5} {params['delta']:>8.4f} "
              f"{rep.total:>7.4f} {rep.se_total:>7.4f}")
    totals = [rep.total for _, rep in table.cells]
    print(f"spread {max(totals) - min(totals):.4f}")


if __name__ == "__main__":
    main()
