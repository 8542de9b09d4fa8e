"""Study pipeline shared by the CLI commands.

Every function here is a pure function of the config and seed; the CLI
layer only handles files.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import ExperimentConfig
from .dataset import (
    Dataset,
    PerturbationSpec,
    draw_beam_offsets,
    drive_by_positions,
    generate_twin_dataset,
    make_surrogate_real,
    split,
)
from .evaluate import NN_TOPK_NOTE, EvalReport, evaluate_predictor, nn_index, nn_predictor
from .neural import Model, train

VARIANTS = ("measured", "uniform")


def k_max(cfg: ExperimentConfig) -> int:
    return max(cfg.k_values)


def twin_dataset(cfg: ExperimentConfig, variant: str) -> Dataset:
    return generate_twin_dataset(cfg.scene_spec(), cfg.codebook(variant))


def twin_dataset_at(cfg: ExperimentConfig, variant: str, at: Dataset) -> Dataset:
    """Replica labels at the recorded positions of ``at`` (sanity check for zero-shot models)."""
    return generate_twin_dataset(cfg.scene_spec(), cfg.codebook(variant), positions=at.positions)


def perturbation(cfg: ExperimentConfig, seed: int) -> PerturbationSpec:
    p = cfg.perturbation
    q = cfg.codebooks.num_beams
    if p.beam_angle_offsets_deg is not None:
        offsets = np.radians(p.beam_angle_offsets_deg)
    else:
        offsets = draw_beam_offsets(q, math.radians(p.beam_angle_offset_std_deg), seed)
    return PerturbationSpec(p.position_noise_std, tuple(offsets), p.gain_jitter_db_std, seed)


def real_positions(cfg: ExperimentConfig) -> np.ndarray:
    return drive_by_positions(cfg.scene_spec(), cfg.sampling.interval)


def real_dataset(cfg: ExperimentConfig, seed: int) -> Dataset:
    """Surrogate field data; the "measured" codebook plays the true hardware."""
    return make_surrogate_real(cfg.scene_spec(), cfg.codebook("measured"), perturbation(cfg, seed), real_positions(cfg))


def real_split(cfg: ExperimentConfig, real: Dataset, seed: int) -> tuple[Dataset, Dataset]:
    """(fine-tuning pool, held-out test) for one seed."""
    return split(real, cfg.sampling.real_train_fraction, seed)


def train_zeroshot(cfg: ExperimentConfig, twin: Dataset, seed: int) -> Model:
    model, _ = train(twin, cfg.train_config(seed))
    return model


def score_model(cfg: ExperimentConfig, model: Model, test: Dataset, **metadata) -> EvalReport:
    return evaluate_predictor(model.rank, test, k_max(cfg), metadata)


def subsample(ds: Dataset, size) -> Dataset:
    """``size`` points spread evenly over the grid order, i.e. a coarser replica."""
    if size == "all":
        return ds
    if size > len(ds):
        raise ValueError(f"sweep size {size} exceeds the {len(ds)} available points")
    return ds.subset(np.round(np.linspace(0, len(ds) - 1, size)).astype(int))


def finetune(cfg: ExperimentConfig, base: Model, pool: Dataset, n: int, seed: int) -> Model:
    """Continue training ``base`` on the first ``n`` pool points; n = 0 returns ``base`` untouched."""
    if n > len(pool):
        raise ValueError(f"fine-tune size {n} exceeds the {len(pool)}-point real training pool")
    if n == 0:
        return base
    model, _ = train(pool.subset(np.arange(n)), cfg.finetune_config(seed), init=base)
    return model


def train_scratch(cfg: ExperimentConfig, pool: Dataset, n: int, seed: int) -> Model:
    if n > len(pool):
        raise ValueError(f"fine-tune size {n} exceeds the {len(pool)}-point real training pool")
    model, _ = train(pool.subset(np.arange(n)), cfg.train_config(seed))
    return model


@dataclass
class NNBaselineResult:
    report: EvalReport
    twin_index: np.ndarray
    real_labels: np.ndarray
    twin_labels: np.ndarray


def nn_baseline(cfg: ExperimentConfig, twin: Dataset, test: Dataset) -> NNBaselineResult:
    report = evaluate_predictor(nn_predictor(twin), test, k_max(cfg), {"topk_rule": NN_TOPK_NOTE})
    idx = nn_index(twin.positions, test.positions)
    return NNBaselineResult(report, idx, test.labels, twin.labels[idx])
