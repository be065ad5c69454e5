#!/usr/bin/env python3
"""Digit-classification benchmark: rolling-ball descent against baselines.

Trains the 784-256-256-10 network for 10 epochs per optimizer and writes
one learning-curve CSV each. Data discovery follows RLB_DATA_DIR / ./data;
see the README for where to put the four IDX files.
"""
import argparse
import time
from pathlib import Path

from rollball import neural
from rollball.serialize import write_learning_curve_csv

# (optimizer, eta, extra hyperparameters)
RUNS = {
    "rbo": dict(eta=6.0, rho=1.0),
    "sgd": dict(eta=0.01),
    "sam": dict(eta=0.01, sam_rho=0.05),
    "gd": dict(eta=0.01),
}


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--optimizers", nargs="+", default=["rbo", "sgd"],
                    choices=sorted(RUNS))
    ap.add_argument("--epochs", type=int, default=10)
    ap.add_argument("--batch-size", type=int, default=128)
    ap.add_argument("--subset", type=int, default=0,
                    help="train on the first N rows only (0 = all 50000)")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--data-dir", default=None)
    ap.add_argument("--out-dir", default="results/mnist")
    args = ap.parse_args()

    train_full, _test = neural.load_mnist(args.data_dir)
    train, val = train_full.split(50_000)
    if args.subset:
        train = train.subset(slice(0, args.subset))
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    spec = neural.MlpSpec()
    print(f"training rows: {train.n}, validation rows: {val.n}, "
          f"parameters: {neural.param_count(spec)}")

    for name in args.optimizers:
        hp = RUNS[name]
        t0 = time.perf_counter()
        _, stats = neural.train_mlp(
            spec, train, val, optimizer=name, epochs=args.epochs,
            batch_size=args.batch_size, seed=args.seed, **hp)
        elapsed = time.perf_counter() - t0
        path = out_dir / f"learning_curve_{name}.csv"
        write_learning_curve_csv(stats, path)
        last = stats[-1]
        hp_text = " ".join(f"{k}={v:g}" for k, v in hp.items())
        print(f"{name} ({hp_text}): val acc {last.val_accuracy:.4f} after "
              f"{last.epoch} epochs in {elapsed:.0f}s -> {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
