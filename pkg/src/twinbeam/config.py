"""Experiment configuration: one JSON file, degrees / meters / GHz at the interface."""
from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .codebook import Codebook, build_from_angles, build_uniform_fov
from .geometry import ArrayConfig, Position, SceneSpec, UEGridRect
from .neural import FEATURE_SETS, TrainConfig


class ConfigError(ValueError):
    pass


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ArraySection(_Strict):
    num_elements: int = Field(16, ge=1)
    element_spacing: float = Field(0.5, gt=0)
    boresight_azimuth_deg: float = 90.0
    element_pattern: Literal["isotropic"] = "isotropic"


class GridSection(_Strict):
    origin: tuple[float, float]
    width: float = Field(ge=0)
    height: float = Field(ge=0)
    spacing: float = Field(0.1, gt=0)


class SceneSection(_Strict):
    bs_position: tuple[float, float] = (0.0, 0.0)
    array: ArraySection = ArraySection()
    grids: list[GridSection] = Field(min_length=1)
    carrier_frequency_ghz: float = Field(60.0, gt=0)


class CodebookSection(_Strict):
    num_beams: int = Field(16, ge=1)
    fov_deg: tuple[float, float] = (-45.0, 45.0)
    measured_angles_deg: Optional[list[float]] = None

    @model_validator(mode="after")
    def _check(self):
        if not self.fov_deg[0] < self.fov_deg[1]:
            raise ValueError("fov_deg must be increasing")
        if self.measured_angles_deg is not None and len(self.measured_angles_deg) != self.num_beams:
            raise ValueError(f"measured_angles_deg needs {self.num_beams} entries")
        return self


class PerturbationSection(_Strict):
    position_noise_std: float = Field(0.5, ge=0)
    beam_angle_offset_std_deg: float = Field(2.0, ge=0)
    beam_angle_offsets_deg: Optional[list[float]] = None  # fixed offsets override the random draw
    gain_jitter_db_std: float = Field(1.0, ge=0)


class SamplingSection(_Strict):
    interval: float = Field(0.5, gt=0)
    real_train_fraction: float = Field(0.5, gt=0, lt=1)


class TrainingSection(_Strict):
    learning_rate: float = Field(1e-2, ge=0)
    epochs: int = Field(80, ge=1)
    batch_size: int = Field(32, ge=1)
    lr_decay: bool = True
    min_steps: int = Field(5000, ge=0)
    hidden: list[int] = [256, 256]
    features: str = "both"

    @field_validator("features")
    @classmethod
    def _features(cls, v):
        if v not in FEATURE_SETS:
            raise ValueError(f"must be one of {sorted(FEATURE_SETS)}")
        return v


class FinetuneSection(_Strict):
    learning_rate: float = Field(1e-4, ge=0)
    epochs: int = Field(40, ge=1)
    batch_size: int = Field(8, ge=1)
    lr_decay: bool = False
    min_steps: int = Field(0, ge=0)


class SweepSection(_Strict):
    twin_sizes: list[Union[int, Literal["all"]]] = [10, 30, 100, 300, 1000, "all"]
    finetune_sizes: list[int] = [0, 5, 10, 20, 50, 100]
    codebooks: list[Literal["measured", "uniform"]] = ["measured", "uniform"]

    @field_validator("twin_sizes")
    @classmethod
    def _twin_sizes(cls, v):
        if any(isinstance(s, int) and s < 1 for s in v):
            raise ValueError("twin sizes must be positive")
        return v

    @field_validator("finetune_sizes")
    @classmethod
    def _ft_sizes(cls, v):
        if any(s < 0 for s in v):
            raise ValueError("fine-tune sizes must be >= 0")
        return v


class ExperimentConfig(_Strict):
    scene: SceneSection
    codebooks: CodebookSection = CodebookSection()
    perturbation: PerturbationSection = PerturbationSection()
    sampling: SamplingSection = SamplingSection()
    training: TrainingSection = TrainingSection()
    finetune: FinetuneSection = FinetuneSection()
    sweeps: SweepSection = SweepSection()
    seeds: list[int] = Field([0, 1, 2, 3, 4], min_length=1)
    k_values: list[int] = Field([1, 2, 3], min_length=1)
    nn_baseline_codebook: Literal["measured", "uniform"] = "measured"
    output_dir: str = "out"

    @model_validator(mode="after")
    def _check(self):
        q = self.codebooks.num_beams
        if any(not 1 <= k <= q for k in self.k_values):
            raise ValueError(f"k_values must lie in [1, {q}]")
        offs = self.perturbation.beam_angle_offsets_deg
        if offs is not None and len(offs) != q:
            raise ValueError(f"perturbation.beam_angle_offsets_deg needs {q} entries")
        return self

    # --- resolved domain objects ------------------------------------------
    def scene_spec(self) -> SceneSpec:
        s = self.scene
        array = ArrayConfig(s.array.num_elements, s.array.element_spacing,
                            math.radians(s.array.boresight_azimuth_deg), s.array.element_pattern)
        grids = tuple(UEGridRect(Position(*g.origin), g.width, g.height, g.spacing) for g in s.grids)
        return SceneSpec(Position(*s.bs_position), array, grids, s.carrier_frequency_ghz * 1e9)

    def codebook(self, variant: str) -> Codebook:
        """``uniform``: centered bins over the FoV. ``measured``: the configured angle list."""
        array = self.scene_spec().array
        c = self.codebooks
        if variant == "uniform" or (variant == "measured" and c.measured_angles_deg is None):
            return build_uniform_fov(c.num_beams, math.radians(c.fov_deg[0]), math.radians(c.fov_deg[1]), array)
        if variant == "measured":
            return build_from_angles([math.radians(a) for a in c.measured_angles_deg], array)
        raise ValueError(f"unknown codebook variant {variant!r}")

    def train_config(self, seed: int) -> TrainConfig:
        t = self.training
        return TrainConfig(t.learning_rate, t.epochs, t.batch_size, seed, "train", t.lr_decay,
                           tuple(t.hidden), t.features, t.min_steps)

    def finetune_config(self, seed: int) -> TrainConfig:
        t = self.finetune
        return TrainConfig(t.learning_rate, t.epochs, t.batch_size, seed, "finetune", t.lr_decay,
                           tuple(self.training.hidden), self.training.features, t.min_steps)

    def digest(self, include=None) -> str:
        """SHA-256 of the canonical config.

        Seeds and the output location are excluded; sidecars record seeds
        separately. ``include`` restricts the hash to the named sections.
        """
        d = self.model_dump(mode="json", include=include, exclude={"output_dir", "seeds"})
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()

    def data_digest(self) -> str:
        """Hash of the sections that determine the generated datasets."""
        return self.digest(include={"scene", "codebooks", "perturbation", "sampling"})


def _format_errors(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        path = ".".join(str(p) for p in e["loc"]) or "<root>"
        lines.append(f"{path}: {e['msg']}")
    return "; ".join(lines)


def parse_config(data: dict) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"invalid config: {_format_errors(e)}") from None


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: not valid JSON ({e})") from None
    return parse_config(data)
