"""Scale confounding: X ~ N(0, sx I) against Y ~ N(mu 1, sy I) over a grid of mu^2."""
import argparse

from hdlss.harness import CONFOUND_RULES, confound_sweep


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sigma-x-sq", type=float, default=1.0)
    ap.add_argument("--sigma-y-sq", type=float, default=2.0)
    ap.add_argument("--mu-sq", type=float, nargs="+", default=[0.0, 0.1, 0.3, 0.6, 1.5])
    ap.add_argument("--m", type=int, default=5)
    ap.add_argument("--p", type=int, default=2000)
    ap.add_argument("--reps", type=int, default=500)
    ap.add_argument("--seed", type=int, default=31)
    args = ap.parse_args()

    table = confound_sweep(args.sigma_x_sq, args.sigma_y_sq, args.mu_sq, args.m, args.m, args.p,
                           reps=args.reps, master_seed=args.seed, classifier_ids=CONFOUND_RULES)
    first = table.cells[0][0]
    print(f"thresholds: nn {first['nn_threshold']:.3f}, centroid {first['centroid_threshold']:.3f}")
    print(f"{'mu^2':>6} {'classifier':>12} {'err_X':>7} {'err_Y':>7}")
    for params, rep in table.cells:
        print(f"{params['mu_sq']:>6} {params['classifier']:>12} {rep.err_X:>7.3f} {rep.err_Y:>7.3f}")


if __name__ == "__main__":
    main()
