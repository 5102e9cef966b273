"""Subsampling benchmark on the KDD Cup 2008 files (Features.txt, Info.txt)."""
import argparse
import os

from hdlss.data import SplitPlan, attach_labels, load_features_csv
from hdlss.harness import dataset_benchmark

RULES = ["centroid_sa", "svm", "nn_sa", "sv", "naive_bayes:ridge=0.1"]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("kdd_dir")
    ap.add_argument("--m", type=int, nargs="+", default=[5, 10, 20])
    ap.add_argument("--reps", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=104)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    feats = load_features_csv(os.path.join(args.kdd_dir, "Features.txt"), delimiter=None)
    ds = attach_labels(feats, os.path.join(args.kdd_dir, "Info.txt"), delimiter=None)
    print(f"counts (malignant, benign) = {ds.counts}")
    for m in args.m:
        res = dataset_benchmark(ds, SplitPlan(m, m), RULES, reps=args.reps,
                                master_seed=args.seed, workers=args.workers)
        for rid, rep in res.reports.items():
            print(f"m={m:>3} {rid:>22} malignant {1 - rep.err_X:.3f} benign {1 - rep.err_Y:.3f}")
        for rid, why in res.skipped.items():
            print(f"m={m:>3} {rid:>22} skipped: {why}")


if __name__ == "__main__":
    main()
