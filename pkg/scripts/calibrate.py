"""Check a config's surrogate world against the calibration targets.

    python scripts/calibrate.py configs/default.json          # nearest-neighbour bracket only
    python scripts/calibrate.py configs/default.json --full   # plus zero-shot, twin-size and fine-tune summaries

Prints across-seed means; nothing is written to disk.
"""
import argparse
import time

import numpy as np

from twinbeam import experiments as ex
from twinbeam.config import load_config

NN_BRACKET = (0.45, 0.70)
MIN_POWER_GAP = 0.10


def mean(xs):
    return float(np.mean(xs))


def nn_check(cfg):
    twin = ex.twin_dataset(cfg, cfg.nn_baseline_codebook)
    acc, rel = [], []
    for s in cfg.seeds:
        _, test = ex.real_split(cfg, ex.real_dataset(cfg, s), s)
        rep = ex.nn_baseline(cfg, twin, test).report
        acc.append(rep.accuracy[0])
        rel.append(rep.relative_power[0])
    ok = NN_BRACKET[0] <= mean(acc) <= NN_BRACKET[1] and mean(rel) - mean(acc) >= MIN_POWER_GAP
    print(f"nn-baseline top-1 accuracy {mean(acc):.3f}  relative power {mean(rel):.3f}  "
          f"gap {mean(rel) - mean(acc):.3f}  -> {'in bracket' if ok else 'OUT OF BRACKET'}")
    return ok


def full_study(cfg):
    twins = {v: ex.twin_dataset(cfg, v) for v in ex.VARIANTS}
    top2 = {}

    def record(key, model, test):
        top2.setdefault(key, []).append(ex.score_model(cfg, model, test).accuracy[1])

    for s in cfg.seeds:
        t0 = time.time()
        pool, test = ex.real_split(cfg, ex.real_dataset(cfg, s), s)
        for v in ex.VARIANTS:
            base = ex.train_zeroshot(cfg, twins[v], s)
            record(f"zeroshot {v}", base, test)
            for n in cfg.sweeps.finetune_sizes:
                record(f"finetune {v} n={n}", ex.finetune(cfg, base, pool, n, s), test)
        for n in cfg.sweeps.finetune_sizes:
            if n:
                record(f"scratch n={n}", ex.train_scratch(cfg, pool, n, s), test)
        for size in cfg.sweeps.twin_sizes:
            if size != "all":
                record(f"twin size {size}", ex.train_zeroshot(cfg, ex.subsample(twins["measured"], size), s), test)
        print(f"seed {s}: {time.time() - t0:.0f}s", flush=True)
    print("mean top-2 accuracy")
    for key, vals in top2.items():
        print(f"  {key:24s} {mean(vals):.3f}")


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("config")
    p.add_argument("--full", action="store_true")
    args = p.parse_args()
    cfg = load_config(args.config)
    ok = nn_check(cfg)
    if args.full:
        full_study(cfg)
    raise SystemExit(0 if ok else 1)


if __name__ == "__main__":
    main()
