"""Var(T_sa) / (p / nu) at zero signal for iid, moving-average and GARCH noise."""
import argparse

from hdlss.datagen import ModelSpec, NoiseSpec
from hdlss.harness import variance_scaling_check

NOISES = {
    "iid": NoiseSpec.iid(),
    "ma": NoiseSpec.moving_average([1, 1]),
    "garch": NoiseSpec.garch(0.1, 0.8),
}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--p", type=int, nargs="+", default=[500, 1000, 2000])
    ap.add_argument("--nu", type=int, nargs="+", default=[4, 8])
    ap.add_argument("--reps", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=61)
    args = ap.parse_args()

    grid = [(p, nu) for p in args.p for nu in args.nu]
    for name, noise in NOISES.items():
        tmpl = ModelSpec(p=args.p[0], m=2, n=2, delta=0.0, noise=noise)
        for row in variance_scaling_check(grid, tmpl, reps=args.reps, master_seed=args.seed):
            print(f"{name:>6} p={row['p']:>5} nu={row['nu']:>3} var={row['var']:>10.2f} "
                  f"ratio={row['ratio']:.3f}")


if __name__ == "__main__":
    main()
