"""Nearest-neighbor replica baseline and the top-k metrics."""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .codebook import beam_ranking
from .dataset import Dataset

log = logging.getLogger(__name__)

NN_TOPK_NOTE = "k>1 predictions use the replica neighbor's beam-power ranking"


@dataclass
class EvalReport:
    accuracy: list[float]
    relative_power: list[float]
    num_test_points: int
    metadata: dict = field(default_factory=dict)

    @property
    def k_values(self) -> list[int]:
        return list(range(1, len(self.accuracy) + 1))

    def to_dict(self) -> dict:
        return {
            "k": self.k_values,
            "top_k_accuracy": self.accuracy,
            "top_k_relative_power": self.relative_power,
            "num_test_points": self.num_test_points,
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        return cls(list(d["top_k_accuracy"]), list(d["top_k_relative_power"]), int(d["num_test_points"]), d.get("metadata", {}))

    def save_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    def save_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["k", "top_k_accuracy", "top_k_relative_power"])
            for k, a, p in zip(self.k_values, self.accuracy, self.relative_power):
                w.writerow([k, repr(a), repr(p)])


def nn_index(twin_positions: np.ndarray, queries: np.ndarray, chunk: int = 256) -> np.ndarray:
    """Index of the nearest replica point for each query (ties to the lowest index)."""
    tp = np.asarray(twin_positions, dtype=float)
    if len(tp) == 0:
        raise ValueError("empty replica dataset")
    qs = np.asarray(queries, dtype=float).reshape(-1, 2)
    out = np.empty(len(qs), dtype=int)
    for s in range(0, len(qs), chunk):
        q = qs[s:s + chunk]
        dx = tp[None, :, 0] - q[:, None, 0]
        dy = tp[None, :, 1] - q[:, None, 1]
        out[s:s + chunk] = np.argmin(dx * dx + dy * dy, axis=1)
    return out


def nn_lookup(twin: Dataset, query_position) -> tuple[int, int, np.ndarray]:
    """(replica index, its optimal beam, its full descending-power beam ranking)."""
    i = int(nn_index(twin.positions, np.asarray(query_position, dtype=float))[0])
    ranking = beam_ranking(twin.powers[i])
    return i, int(ranking[0]), ranking


def nn_predictor(twin: Dataset) -> Callable[[np.ndarray], np.ndarray]:
    rankings = beam_ranking(twin.powers)
    return lambda positions: rankings[nn_index(twin.positions, positions)]


def _check_aligned(predictions, n: int, k: int) -> np.ndarray:
    pred = np.asarray(predictions)
    if pred.ndim != 2 or pred.shape[0] != n:
        raise ValueError(f"predictions for {pred.shape[0] if pred.ndim else 0} points, expected {n}")
    if not 1 <= k <= pred.shape[1]:
        raise ValueError(f"k={k} exceeds the {pred.shape[1]} ranked predictions")
    return pred


def topk_accuracy(predictions, truths, k: int) -> float:
    truths = np.asarray(truths).reshape(-1)
    pred = _check_aligned(predictions, len(truths), k)
    if len(truths) == 0:
        raise ValueError("no points to score")
    hits = (pred[:, :k] == truths[:, None]).any(axis=1)
    return float(np.mean(hits))


def topk_relative_power(predictions, truth_powers, k: int) -> float:
    """Mean over points of (best power among the top-k beams) / (optimal power).

    Points whose power vector is all zero are skipped.
    """
    p = np.asarray(truth_powers, dtype=float)
    pred = _check_aligned(predictions, len(p), k)
    best = p.max(axis=1)
    keep = best > 0
    if (~keep).any():
        log.warning("excluded %d point(s) with all-zero beam powers", int((~keep).sum()))
    if not keep.any():
        raise ValueError("no points with nonzero beam power")
    got = np.take_along_axis(p, pred[:, :k], axis=1).max(axis=1)
    ratios = got[keep] / best[keep]
    # fixed-order summation keeps the aggregate reproducible
    return float(np.sum(ratios) / len(ratios))


def evaluate_predictor(predict: Callable[[np.ndarray], np.ndarray], test: Dataset, k_max: int,
                       metadata: dict | None = None) -> EvalReport:
    """Score a predictor that maps an (M, 2) position array to ranked beam indices."""
    if len(test) == 0:
        raise ValueError("empty test set")
    if not 1 <= k_max <= test.codebook_size:
        raise ValueError(f"k_max must be in [1, {test.codebook_size}]")
    pred = np.asarray(predict(test.positions))[:, :k_max]
    labels = test.labels
    acc = [topk_accuracy(pred, labels, k) for k in range(1, k_max + 1)]
    rel = [topk_relative_power(pred, test.powers, k) for k in range(1, k_max + 1)]
    return EvalReport(acc, rel, len(test), dict(metadata or {}))
