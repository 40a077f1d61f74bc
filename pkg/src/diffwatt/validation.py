"""Holdout and cross-validation protocols for the energy scaling law.

Four protocols mirror the published evaluation: seeded k-fold
cross-validation within one model, fitting on a set of models and testing
on a held-out one, fitting across GPUs with the GPU indicators active, and
the general train-models/test-models split.  Reports carry the fitted law,
train/test diagnostics and the per-point (actual, predicted) pairs in
ln(kWh) so the diagnostic scatter can be plotted externally.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass

from . import metrics
from .data import Dataset, EnergyRecord
from .errors import ProtocolError, UnknownReferenceError
from .flops import GpuId, InferenceConfig, ModelId, Precision
from .law import (
    FitDiagnostics,
    ScalingLaw,
    fit_records,
    observations_from_records,
    predict_log_kwh,
)

#: Coefficients reported for the published single-model A100 fits.
PUBLISHED_A100_LAWS = {
    ModelId.FLUX: ScalingLaw(
        log_a=-20.61, alpha=0.989, beta_dtype=2.04, beta_a4000=0.0, beta_a6000=0.0,
        beta_res=-0.043, dropped_columns=("a4000_indicator", "a6000_indicator"),
    ),
    ModelId.SD35: ScalingLaw(
        log_a=-19.95, alpha=0.969, beta_dtype=1.90, beta_a4000=0.0, beta_a6000=0.0,
        beta_res=-0.054, dropped_columns=("a4000_indicator", "a6000_indicator"),
    ),
    ModelId.QWEN: ScalingLaw(
        log_a=-18.64, alpha=0.992, beta_dtype=0.0, beta_a4000=0.0, beta_a6000=0.0,
        beta_res=-0.306,
        dropped_columns=("fp32_indicator", "a4000_indicator", "a6000_indicator"),
    ),
}

#: Coefficients reported for the published A100+A6000 fits (fp16, CFG-filtered
#: subsets); useful for building synthetic cross-GPU fixtures.
PUBLISHED_CROSS_GPU_LAWS = {
    ModelId.FLUX: ScalingLaw(
        log_a=-20.85, alpha=0.997, beta_dtype=0.0, beta_a4000=0.0, beta_a6000=0.450,
        beta_res=-0.027, dropped_columns=("fp32_indicator", "a4000_indicator"),
    ),
    ModelId.SD35: ScalingLaw(
        log_a=-20.44, alpha=0.989, beta_dtype=0.0, beta_a4000=0.0, beta_a6000=0.308,
        beta_res=-0.037, dropped_columns=("fp32_indicator", "a4000_indicator"),
    ),
}


def _as_frozenset(value, coerce=None):
    if value is None:
        return None
    if isinstance(value, (str, bytes)) or not hasattr(value, "__iter__"):
        value = (value,)
    items = frozenset(coerce(v) if coerce else v for v in value)
    if not items:
        raise ProtocolError("a filter constraint cannot be an empty set")
    return items


@dataclass(frozen=True)
class RecordFilter:
    """Optional per-field constraints; a record matches iff it satisfies all.

    Each constraint is a single value or a set of allowed values, so
    exclusions like "every prompt count except 50" are expressed as the
    complement set.
    """

    model: frozenset | None = None
    gpu: frozenset | None = None
    precision: frozenset | None = None
    cfg: frozenset | None = None
    num_prompts: frozenset | None = None
    resolution: frozenset | None = None
    steps: frozenset | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "model", _as_frozenset(self.model, ModelId))
        object.__setattr__(self, "gpu", _as_frozenset(self.gpu, GpuId))
        object.__setattr__(self, "precision", _as_frozenset(self.precision, Precision))
        object.__setattr__(self, "cfg", _as_frozenset(self.cfg, bool))
        object.__setattr__(self, "num_prompts", _as_frozenset(self.num_prompts, int))
        object.__setattr__(self, "resolution", _as_frozenset(self.resolution))
        object.__setattr__(self, "steps", _as_frozenset(self.steps, int))

    def matches(self, record: EnergyRecord) -> bool:
        c = record.config
        checks = (
            (self.model, c.model),
            (self.gpu, c.gpu),
            (self.precision, c.precision),
            (self.cfg, c.cfg),
            (self.num_prompts, c.num_prompts),
            (self.resolution, c.resolution),
            (self.steps, c.steps),
        )
        return all(allowed is None or value in allowed for allowed, value in checks)

    def apply(self, dataset: Dataset) -> Dataset:
        return Dataset(tuple(rec for rec in dataset if self.matches(rec)))

    def descriptor(self) -> dict:
        def enum_values(allowed):
            return None if allowed is None else sorted(v.value for v in allowed)

        return {
            "model": enum_values(self.model),
            "gpu": enum_values(self.gpu),
            "precision": enum_values(self.precision),
            "cfg": None if self.cfg is None else sorted(self.cfg),
            "num_prompts": None if self.num_prompts is None else sorted(self.num_prompts),
            "resolution": None
            if self.resolution is None
            else [
                [r.height, r.width]
                for r in sorted(self.resolution, key=lambda r: (r.height, r.width))
            ],
            "steps": None if self.steps is None else sorted(self.steps),
        }


@dataclass(frozen=True)
class WithinArchitecture:
    k: int

    def __post_init__(self) -> None:
        if self.k < 2:
            raise ProtocolError(f"k must be at least 2, got {self.k}")

    def descriptor(self) -> dict:
        return {"protocol": "within_architecture", "k": self.k}


@dataclass(frozen=True)
class CrossModelHoldout:
    train: frozenset
    test: ModelId

    def __post_init__(self) -> None:
        object.__setattr__(self, "train", frozenset(ModelId(m) for m in self.train))
        object.__setattr__(self, "test", ModelId(self.test))
        if self.test in self.train:
            raise ProtocolError(f"test model {self.test.value} appears in the train set")

    def descriptor(self) -> dict:
        return {
            "protocol": "cross_model_holdout",
            "train": sorted(m.value for m in self.train),
            "test": self.test.value,
        }


@dataclass(frozen=True)
class CrossGpu:
    filters: RecordFilter

    def descriptor(self) -> dict:
        return {"protocol": "cross_gpu", "filters": self.filters.descriptor()}


@dataclass(frozen=True)
class CrossArchitecture:
    train: frozenset
    test: frozenset

    def __post_init__(self) -> None:
        object.__setattr__(self, "train", frozenset(ModelId(m) for m in self.train))
        object.__setattr__(self, "test", frozenset(ModelId(m) for m in self.test))
        if self.train & self.test:
            overlap = sorted(m.value for m in self.train & self.test)
            raise ProtocolError(f"train and test sets overlap: {overlap}")
        if not self.train or not self.test:
            raise ProtocolError("train and test sets must both be non-empty")

    def descriptor(self) -> dict:
        return {
            "protocol": "cross_architecture",
            "train": sorted(m.value for m in self.train),
            "test": sorted(m.value for m in self.test),
        }


@dataclass(frozen=True)
class ValidationReport:
    protocol: object
    law: ScalingLaw
    train_diagnostics: FitDiagnostics
    test_diagnostics: FitDiagnostics
    per_point_pairs: tuple  # (actual ln kWh, predicted ln kWh, InferenceConfig)
    per_gpu_mae: dict | None = None

    def to_document(self) -> str:
        def config_dict(config: InferenceConfig) -> dict:
            return {
                "model": config.model.value,
                "gpu": config.gpu.value,
                "precision": config.precision.value,
                "cfg": config.cfg,
                "height": config.resolution.height,
                "width": config.resolution.width,
                "steps": config.steps,
                "num_prompts": config.num_prompts,
            }

        doc = {
            "protocol": self.protocol.descriptor(),
            "law": self.law.coefficients() | {"dropped_columns": list(self.law.dropped_columns)},
            "train_diagnostics": self.train_diagnostics.as_dict(),
            "test_diagnostics": self.test_diagnostics.as_dict(),
            "per_point_pairs": [
                {"actual_ln_kwh": a, "predicted_ln_kwh": p, "config": config_dict(c)}
                for a, p, c in self.per_point_pairs
            ],
        }
        if self.per_gpu_mae is not None:
            doc["per_gpu_mae"] = {gpu.value: v for gpu, v in self.per_gpu_mae.items()}
        return json.dumps(doc, indent=2)


def kfold_split(dataset: Dataset, k: int, seed: int) -> list[Dataset]:
    """Seeded shuffle, then round-robin assignment into k folds."""
    if k < 2:
        raise ProtocolError(f"k must be at least 2, got {k}")
    if len(dataset) < k:
        raise ProtocolError(f"dataset of {len(dataset)} records cannot make {k} folds")
    indices = list(range(len(dataset)))
    random.Random(seed).shuffle(indices)
    folds = [[] for _ in range(k)]
    for position, index in enumerate(indices):
        folds[position % k].append(dataset[index])
    return [Dataset(tuple(records)) for records in folds]


def _holdout_diagnostics(pairs, design_rank: int) -> FitDiagnostics:
    actual = [a for a, _, _ in pairs]
    predicted = [p for _, p, _ in pairs]
    return FitDiagnostics(
        r2=metrics.r_squared(actual, predicted),
        mae_log=metrics.mae(actual, predicted),
        pearson=metrics.pearson(actual, predicted),
        spearman=metrics.spearman(actual, predicted),
        n_samples=len(pairs),
        design_rank=design_rank,
    )


def _predicted_pairs(law: ScalingLaw, records) -> list[tuple]:
    pairs = []
    for (features, actual), rec in zip(observations_from_records(records), records):
        pairs.append((actual, predict_log_kwh(law, features), rec.config))
    return pairs


def run_within(dataset: Dataset, k: int, seed: int) -> ValidationReport:
    """k-fold CV on a single model's records; held-out pairs are pooled.

    The reported law and train diagnostics come from the full-dataset fit;
    test diagnostics are computed over the pooled held-out predictions.
    """
    models = dataset.models()
    if len(models) != 1:
        raise ProtocolError(
            f"within-architecture validation needs a single model, got "
            f"{sorted(m.value for m in models)}"
        )
    folds = kfold_split(dataset, k, seed)
    pooled: list[tuple] = []
    for hold in range(k):
        train_records = [rec for f in range(k) if f != hold for rec in folds[f]]
        law, _ = fit_records(train_records)
        pooled.extend(_predicted_pairs(law, list(folds[hold])))
    full_law, full_diag = fit_records(dataset)
    return ValidationReport(
        protocol=WithinArchitecture(k),
        law=full_law,
        train_diagnostics=full_diag,
        test_diagnostics=_holdout_diagnostics(pooled, full_diag.design_rank),
        per_point_pairs=tuple(pooled),
    )


def run_cross_architecture(train_models, test_models, dataset: Dataset) -> ValidationReport:
    """Fit on the pooled train-model records, evaluate on the test models."""
    protocol = CrossArchitecture(frozenset(train_models), frozenset(test_models))
    train_records = [rec for rec in dataset if rec.config.model in protocol.train]
    test_records = [rec for rec in dataset if rec.config.model in protocol.test]
    if not train_records or not test_records:
        raise ProtocolError("empty train or test split for the requested models")
    law, train_diag = fit_records(train_records)
    pairs = _predicted_pairs(law, test_records)
    return ValidationReport(
        protocol=protocol,
        law=law,
        train_diagnostics=train_diag,
        test_diagnostics=_holdout_diagnostics(pairs, train_diag.design_rank),
        per_point_pairs=tuple(pairs),
    )


def run_cross_model(train_models, test_model: ModelId, dataset: Dataset) -> ValidationReport:
    """Single held-out model; the report's protocol records train set and test model."""
    report = run_cross_architecture(train_models, {test_model}, dataset)
    protocol = CrossModelHoldout(frozenset(train_models), ModelId(test_model))
    return ValidationReport(
        protocol=protocol,
        law=report.law,
        train_diagnostics=report.train_diagnostics,
        test_diagnostics=report.test_diagnostics,
        per_point_pairs=report.per_point_pairs,
    )


def run_cross_gpu(filters: RecordFilter, dataset: Dataset) -> ValidationReport:
    """Fit the filtered records with GPU indicators active.

    There is no holdout; the value of the protocol is the fitted GPU
    coefficients plus per-GPU residual summaries.
    """
    filtered = filters.apply(dataset)
    gpus = filtered.gpus()
    if len(gpus) < 2:
        raise ProtocolError(
            f"cross-GPU fit needs records from at least 2 GPUs, got "
            f"{sorted(g.value for g in gpus)}"
        )
    law, diag = fit_records(filtered)
    pairs = _predicted_pairs(law, list(filtered))
    per_gpu = {}
    for gpu in sorted(gpus, key=lambda g: g.value):
        residuals = [abs(a - p) for a, p, c in pairs if c.gpu is gpu]
        per_gpu[gpu] = sum(residuals) / len(residuals)
    return ValidationReport(
        protocol=CrossGpu(filters),
        law=law,
        train_diagnostics=diag,
        test_diagnostics=diag,
        per_point_pairs=tuple(pairs),
        per_gpu_mae=per_gpu,
    )


@dataclass(frozen=True)
class CoefficientDelta:
    name: str
    published: float
    fitted: float

    @property
    def absolute(self) -> float:
        return abs(self.fitted - self.published)

    @property
    def relative(self) -> float | None:
        if self.published == 0.0:
            return None
        return self.absolute / abs(self.published)


def compare_to_published(law: ScalingLaw, reference: ModelId) -> list[CoefficientDelta]:
    """Per-coefficient deltas against the published A100 reference fit."""
    reference = ModelId(reference)
    if reference not in PUBLISHED_A100_LAWS:
        raise UnknownReferenceError(f"no published coefficients for {reference.value}")
    published = PUBLISHED_A100_LAWS[reference].coefficients()
    fitted = law.coefficients()
    return [
        CoefficientDelta(name=name, published=published[name], fitted=fitted[name])
        for name in published
    ]
