"""Command-line experiment runner.

Subcommands read one JSON config and write CSV/JSON artifacts under the
output directory::

    out/data/            replica and surrogate-real CSVs (generate)
    out/models/          zero-shot checkpoints (zeroshot)
    out/reports/         per-run EvalReports
    out/*.csv            summary tables, each with a .meta.json sidecar
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .config import ConfigError, ExperimentConfig, load_config
from .dataset import SchemaError, load_csv, save_csv
from .geometry import discretize_grids
from .neural import Model

log = logging.getLogger("twinbeam")


class CommandError(RuntimeError):
    pass


class Outputs:
    """Tracks files written by one command; removes them if the command fails."""

    def __init__(self, root: Path, cfg: ExperimentConfig, seeds: list[int]):
        self.root = root
        self.cfg = cfg
        self.seeds = seeds
        self.written: list[Path] = []

    def path(self, rel: str) -> Path:
        p = self.root / rel
        try:
            p.parent.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise CommandError(f"cannot create output directory {p.parent}: {e}") from None
        return p

    def _commit(self, rel: str, write) -> Path:
        p = self.path(rel)
        tmp = p.with_name(p.name + ".tmp")
        try:
            write(tmp)
            os.replace(tmp, p)
        except OSError as e:
            tmp.unlink(missing_ok=True)
            raise CommandError(f"cannot write {p}: {e}") from None
        self.written.append(p)
        return p

    def text(self, rel: str, content: str) -> Path:
        return self._commit(rel, lambda t: t.write_text(content))

    def json(self, rel: str, obj) -> Path:
        return self.text(rel, json.dumps(obj, indent=2, sort_keys=True) + "\n")

    def sidecar(self, rel: str, **extra) -> Path:
        meta = {"config_hash": self.cfg.digest(), "seeds": self.seeds, **extra}
        return self.json(str(Path(rel).with_suffix(".meta.json")), meta)

    def table(self, rel: str, header: list[str], rows, **meta) -> Path:
        def write(t):
            with open(t, "w", newline="") as f:
                w = csv.writer(f, lineterminator="\n")
                w.writerow(header)
                for r in rows:
                    w.writerow([repr(v) if isinstance(v, float) else v for v in r])

        p = self._commit(rel, write)
        self.sidecar(rel, **meta)
        return p

    def dataset(self, rel: str, ds, **meta) -> Path:
        p = self._commit(rel, lambda t: save_csv(ds, t))
        self.sidecar(rel, **meta)
        return p

    def report(self, stem: str, rep) -> None:
        self._commit(stem + ".json", rep.save_json)
        self._commit(stem + ".csv", rep.save_csv)

    def rollback(self) -> None:
        for p in self.written:
            p.unlink(missing_ok=True)


# --- loading generated data -------------------------------------------------

def _load_data(out: Path, cfg: ExperimentConfig, seeds: list[int]):
    meta_path = out / "data" / "metadata.json"
    if not meta_path.exists():
        raise CommandError(f"missing generated data in {out / 'data'}; run `generate` first")
    meta = json.loads(meta_path.read_text())
    if meta.get("data_hash") != cfg.data_digest():
        raise CommandError("generated data does not match this config; rerun `generate`")
    missing = sorted(set(seeds) - set(meta.get("seeds", [])))
    if missing:
        raise CommandError(f"no generated data for seeds {missing}; rerun `generate` with them")
    q = cfg.codebooks.num_beams
    origin = cfg.scene_spec().bs_position
    try:
        twins = {v: load_csv(out / "data" / f"twin_{v}.csv", q, origin) for v in ex.VARIANTS}
        reals = {s: load_csv(out / "data" / f"real_seed{s}.csv", q, origin) for s in seeds}
    except FileNotFoundError as e:
        raise CommandError(f"missing data file {e.filename}") from None
    return twins, reals


def _metric_rows(report, k_values, *prefix):
    for k in k_values:
        yield (*prefix, k, report.accuracy[k - 1], report.relative_power[k - 1])


# --- commands -----------------------------------------------------------------

def cmd_generate(cfg: ExperimentConfig, out: Outputs) -> None:
    scene = cfg.scene_spec()
    grid_count = len(discretize_grids(scene))
    twin_sizes = {}
    for v in ex.VARIANTS:
        twin = ex.twin_dataset(cfg, v)
        twin_sizes[v] = len(twin)
        out.dataset(f"data/twin_{v}.csv", twin, codebook=cfg.codebook(v).to_dict())
    real_sizes, offsets = {}, {}
    for s in out.seeds:
        spec = ex.perturbation(cfg, s)
        real = ex.real_dataset(cfg, s)
        real_sizes[str(s)] = len(real)
        offsets[str(s)] = [math.degrees(o) for o in spec.beam_angle_offsets]
        out.dataset(f"data/real_seed{s}.csv", real, beam_angle_offsets_deg=offsets[str(s)])
    out.json("data/scene.json", scene.to_dict())
    out.json("data/metadata.json", {
        "config_hash": cfg.digest(),
        "data_hash": cfg.data_digest(),
        "seeds": out.seeds,
        "grid_count": grid_count,
        "twin_points": twin_sizes,
        "real_points": real_sizes,
        "beam_angle_offsets_deg": offsets,
    })
    log.info("generated %d replica points and %d seed(s) of surrogate data", grid_count, len(out.seeds))


def cmd_zeroshot(cfg: ExperimentConfig, out: Outputs, eval_on: str = "real") -> None:
    twins, reals = _load_data(out.root, cfg, out.seeds)
    rows = []
    for v in ex.VARIANTS:
        for s in out.seeds:
            log.info("zero-shot: training on %s replica, seed %d", v, s)
            model = ex.train_zeroshot(cfg, twins[v], s)
            out._commit(f"models/zeroshot_{v}_seed{s}.json", model.save)
            _, test = ex.real_split(cfg, reals[s], s)
            if eval_on == "twin":
                test = ex.twin_dataset_at(cfg, v, test)
            rep = ex.score_model(cfg, model, test, codebook=v, seed=s, eval_on=eval_on)
            out.report(f"reports/zeroshot_{eval_on}_{v}_seed{s}", rep)
            rows += _metric_rows(rep, cfg.k_values, v, s)
    name = "zeroshot.csv" if eval_on == "real" else "zeroshot_on_twin.csv"
    out.table(name, ["codebook", "seed", "k", "accuracy", "rel_power"], rows)


def cmd_sweep_twinsize(cfg: ExperimentConfig, out: Outputs) -> None:
    twins, reals = _load_data(out.root, cfg, out.seeds)
    sizes = list(dict.fromkeys(cfg.sweeps.twin_sizes))
    for v in cfg.sweeps.codebooks:
        too_big = [n for n in sizes if n != "all" and n > len(twins[v])]
        if too_big:
            raise CommandError(f"twin sizes {too_big} exceed the {len(twins[v])}-point {v} replica")
    rows = []
    for v in cfg.sweeps.codebooks:
        for size in sizes:
            for s in out.seeds:
                log.info("twin-size sweep: %s replica, size %s, seed %d", v, size, s)
                sub = ex.subsample(twins[v], size)
                model = ex.train_zeroshot(cfg, sub, s)
                _, test = ex.real_split(cfg, reals[s], s)
                rep = ex.score_model(cfg, model, test)
                rows += _metric_rows(rep, cfg.k_values, v, len(sub), s)
    out.table("sweep_twinsize.csv", ["codebook", "size", "seed", "k", "accuracy", "rel_power"], rows)


def cmd_finetune(cfg: ExperimentConfig, out: Outputs) -> None:
    _, reals = _load_data(out.root, cfg, out.seeds)
    sizes = list(dict.fromkeys(cfg.sweeps.finetune_sizes))
    bases = {}
    for v in ex.VARIANTS:
        for s in out.seeds:
            path = out.root / "models" / f"zeroshot_{v}_seed{s}.json"
            if not path.exists():
                raise CommandError(f"missing zero-shot checkpoint {path}; run `zeroshot` first")
            bases[v, s] = Model.load(path)
    splits = {s: ex.real_split(cfg, reals[s], s) for s in out.seeds}
    for s, (pool, _) in splits.items():
        too_big = [n for n in sizes if n > len(pool)]
        if too_big:
            raise CommandError(f"fine-tune sizes {too_big} exceed the {len(pool)}-point real training pool (seed {s})")
    rows = []
    for n in sizes:
        for s in out.seeds:
            pool, test = splits[s]
            log.info("fine-tune: n=%d, seed %d", n, s)
            for v in ex.VARIANTS:
                model = ex.finetune(cfg, bases[v, s], pool, n, s)
                rows += _metric_rows(ex.score_model(cfg, model, test), cfg.k_values, n, s, f"finetune_{v}")
            if n > 0:
                model = ex.train_scratch(cfg, pool, n, s)
                rows += _metric_rows(ex.score_model(cfg, model, test), cfg.k_values, n, s, "scratch")
    out.table("finetune.csv", ["n", "seed", "variant", "k", "accuracy", "rel_power"], rows)


def cmd_nn_baseline(cfg: ExperimentConfig, out: Outputs) -> None:
    twins, reals = _load_data(out.root, cfg, out.seeds)
    v = cfg.nn_baseline_codebook
    rows = []
    for s in out.seeds:
        _, test = ex.real_split(cfg, reals[s], s)
        res = ex.nn_baseline(cfg, twins[v], test)
        res.report.metadata.update(codebook=v, seed=s)
        out.report(f"reports/nn_baseline_seed{s}", res.report)
        trace = zip(range(len(test)), res.real_labels.tolist(), res.twin_labels.tolist(), res.twin_index.tolist())
        out.table(f"nn_trace_seed{s}.csv", ["point", "real_label", "twin_label", "twin_index"], trace)
        rows += _metric_rows(res.report, cfg.k_values, s)
    out.table("nn_baseline.csv", ["seed", "k", "accuracy", "rel_power"], rows, topk_rule=ex.NN_TOPK_NOTE, codebook=v)


COMMANDS = {
    "generate": cmd_generate,
    "zeroshot": cmd_zeroshot,
    "sweep-twinsize": cmd_sweep_twinsize,
    "finetune": cmd_finetune,
    "nn-baseline": cmd_nn_baseline,
}


def _parse_seeds(text: str) -> list[int]:
    try:
        seeds = [int(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"seeds must be integers, got {text!r}") from None
    if not seeds:
        raise argparse.ArgumentTypeError("at least one seed is required")
    return seeds


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="twinbeam", description="Replica-trained beam prediction experiments")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="experiment JSON config")
        p.add_argument("--out", help="output directory (overrides config.output_dir)")
        p.add_argument("--seeds", type=_parse_seeds, help="comma-separated seeds (overrides config.seeds)")
        if name == "zeroshot":
            p.add_argument("--eval-on", choices=["real", "twin"], default="real",
                           help="score on surrogate-real test points, or on replica labels at the same positions")
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        seeds = list(dict.fromkeys(args.seeds or cfg.seeds))
        if args.seeds:
            cfg = cfg.model_copy(update={"seeds": seeds})
        out = Outputs(Path(args.out or cfg.output_dir), cfg, seeds)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    kwargs = {"eval_on": args.eval_on} if args.command == "zeroshot" else {}
    try:
        COMMANDS[args.command](cfg, out, **kwargs)
    except (CommandError, SchemaError, ValueError) as e:
        out.rollback()
        print(f"error: {e}", file=sys.stderr)
        return 1
    except BaseException:
        out.rollback()
        raise
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
