"""Energy records, CSV ingestion/emission and unit conversions.

The canonical stored unit is joules; kilowatt-hours appear only at
conversion boundaries.  The CSV wire format is fixed:

    model,gpu,precision,cfg,height,width,steps,num_prompts,energy_joules,source

with model in {flux, sd35, sd2, qwen}, gpu in {a100, a4000, a6000},
precision in {fp16, fp32} and cfg in {true, false}.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

from . import tables
from .errors import (
    DomainError,
    DuplicateRecordError,
    RecordError,
    SchemaError,
)
from .flops import GpuId, InferenceConfig, ModelId, Precision, Resolution

JOULES_PER_KWH = 3.6e6
SECONDS_PER_HOUR = 3600.0

CSV_HEADER = (
    "model",
    "gpu",
    "precision",
    "cfg",
    "height",
    "width",
    "steps",
    "num_prompts",
    "energy_joules",
    "source",
)

#: Provenance tag carried by every embedded record.
EMBEDDED_SOURCE = "paper-table"


def kwh_to_joules(kwh: float) -> float:
    if kwh < 0:
        raise DomainError(f"energy must be nonnegative, got {kwh}")
    return kwh * JOULES_PER_KWH


def joules_to_kwh(joules: float) -> float:
    if joules < 0:
        raise DomainError(f"energy must be nonnegative, got {joules}")
    return joules / JOULES_PER_KWH


@dataclass(frozen=True)
class EnergyRecord:
    """A measured (or synthesized) total energy for one inference scenario."""

    config: InferenceConfig
    energy_joules: float
    source: str = ""

    def __post_init__(self) -> None:
        if not self.energy_joules > 0:
            raise DomainError(f"energy_joules must be positive, got {self.energy_joules}")


def per_image_wh(record: EnergyRecord) -> float:
    """Watt-hours per generated image."""
    return record.energy_joules / record.config.num_prompts / SECONDS_PER_HOUR


@dataclass(frozen=True)
class Dataset:
    """An ordered, conflict-checked collection of energy records."""

    records: tuple[EnergyRecord, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        object.__setattr__(self, "records", tuple(self.records))
        seen: dict[tuple, float] = {}
        for rec in self.records:
            key = (rec.config, rec.source)
            if key in seen and seen[key] != rec.energy_joules:
                raise DuplicateRecordError(
                    f"conflicting energies {seen[key]} and {rec.energy_joules} "
                    f"for identical config from source {rec.source!r}"
                )
            seen[key] = rec.energy_joules

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i: int) -> EnergyRecord:
        return self.records[i]

    def __add__(self, other: "Dataset") -> "Dataset":
        return Dataset(self.records + other.records)

    def models(self) -> set[ModelId]:
        return {rec.config.model for rec in self.records}

    def gpus(self) -> set[GpuId]:
        return {rec.config.gpu for rec in self.records}


def _cell(row_num: int, column: str, raw: str, kind: str):
    """Parse one CSV cell, raising an error that names row and column."""
    try:
        if kind == "int":
            value = int(raw)
            if value <= 0:
                raise ValueError
            return value
        if kind == "float":
            value = float(raw)
            return value
        if kind == "bool":
            if raw == "true":
                return True
            if raw == "false":
                return False
            raise ValueError
        return {"model": ModelId, "gpu": GpuId, "precision": Precision}[kind](raw)
    except ValueError:
        raise RecordError(
            f"row {row_num}, column {column!r}: invalid value {raw!r}"
        ) from None


def parse_csv(data: bytes | str) -> Dataset:
    """Read a dataset; the header must match the schema exactly."""
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows:
        raise SchemaError("missing header row")
    header = tuple(rows[0])
    if header != CSV_HEADER:
        raise SchemaError(
            f"header mismatch: expected {','.join(CSV_HEADER)}, got {','.join(header)}"
        )
    records = []
    for row_num, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(CSV_HEADER):
            raise RecordError(f"row {row_num}: expected {len(CSV_HEADER)} fields, got {len(row)}")
        (model, gpu, precision, cfg, height, width, steps, prompts, energy, source) = row
        try:
            config = InferenceConfig(
                model=_cell(row_num, "model", model, "model"),
                resolution=Resolution(
                    _cell(row_num, "height", height, "int"),
                    _cell(row_num, "width", width, "int"),
                ),
                steps=_cell(row_num, "steps", steps, "int"),
                precision=_cell(row_num, "precision", precision, "precision"),
                cfg=_cell(row_num, "cfg", cfg, "bool"),
                num_prompts=_cell(row_num, "num_prompts", prompts, "int"),
                gpu=_cell(row_num, "gpu", gpu, "gpu"),
            )
            record = EnergyRecord(
                config=config,
                energy_joules=_cell(row_num, "energy_joules", energy, "float"),
                source=source,
            )
        except RecordError:
            raise
        except DomainError as exc:
            raise RecordError(f"row {row_num}: {exc}") from None
        records.append(record)
    return Dataset(tuple(records))


def write_csv(dataset: Dataset) -> bytes:
    """Emit a dataset; round-trips losslessly through :func:`parse_csv`."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for rec in dataset:
        c = rec.config
        writer.writerow(
            [
                c.model.value,
                c.gpu.value,
                c.precision.value,
                "true" if c.cfg else "false",
                c.resolution.height,
                c.resolution.width,
                c.steps,
                c.num_prompts,
                repr(rec.energy_joules),
                rec.source,
            ]
        )
    return buf.getvalue().encode("utf-8")


def embedded_table(model: ModelId) -> Dataset:
    """All published A100 energies for one model (100-prompt sweeps)."""
    model = ModelId(model)
    raw = tables.A100_ENERGY_J[model.value]
    records = []
    for side, by_steps in raw.items():
        for steps, values in by_steps.items():
            columns = tables.FULL_COLUMNS if len(values) == 4 else tables.FP16_COLUMNS
            for (precision, cfg), joules in zip(columns, values):
                config = InferenceConfig(
                    model=model,
                    resolution=Resolution(side, side),
                    steps=steps,
                    precision=Precision(precision),
                    cfg=cfg,
                    num_prompts=100,
                    gpu=GpuId.A100,
                )
                records.append(EnergyRecord(config, joules, EMBEDDED_SOURCE))
    return Dataset(tuple(records))


def embedded_tables(models) -> Dataset:
    """Pooled embedded records for several models, in the given order."""
    records: tuple[EnergyRecord, ...] = ()
    for model in models:
        records += embedded_table(model).records
    return Dataset(records)
