"""Scale-adjusted centroid against the likelihood-ratio rule on shared instances."""
import argparse

from hdlss.datagen import ModelSpec, delta_critical
from hdlss.harness import oracle_compare


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--c", type=float, nargs="+", default=[0.5, 1.0, 1.5, 2.0, 2.74])
    ap.add_argument("--m", type=int, default=5)
    ap.add_argument("--p", type=int, default=2000)
    ap.add_argument("--q", type=float, default=1.0)
    ap.add_argument("--reps", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--classifier", default="centroid_sa")
    args = ap.parse_args()

    print(f"{'c':>5} {'delta':>7} {'rule':>7} {'lr':>7} {'diff':>8} {'se':>7}")
    for c in args.c:
        delta = delta_critical(c, args.m, args.p, args.q)
        spec = ModelSpec(p=args.p, m=args.m, n=args.m, delta=delta, q=args.q,
                         pattern_mode="random_4_1")
        if not spec.lr_admissible():
            print(f"{c:>5} {delta:>7.4f}  skipped: outside the oracle's domain")
            continue
        r = oracle_compare(spec, reps=args.reps, master_seed=args.seed, classifier_id=args.classifier)
        print(f"{c:>5} {delta:>7.4f} {r.first.total:>7.4f} {r.second.total:>7.4f} "
              f"{r.diff_total:>+8.4f} {r.diff_se:>7.4f}")


if __name__ == "__main__":
    main()
