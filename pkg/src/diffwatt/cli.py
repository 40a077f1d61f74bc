"""Command-line front end.

Subcommands: flops, fit, predict, validate, tables, report.  Exit codes
are a stable contract for scripting: 0 success, 2 usage or domain errors,
3 computation or protocol errors, 4 file I/O or file-format errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from .data import (
    Dataset,
    JOULES_PER_KWH,
    embedded_table,
    embedded_tables,
    parse_csv,
    write_csv,
)
from .errors import (
    DegenerateDataError,
    DiffwattError,
    DomainError,
    FitError,
    ProtocolError,
)
from .flops import (
    GpuId,
    InferenceConfig,
    ModelId,
    Precision,
    Resolution,
    breakdown,
)
from .law import (
    features_for_config,
    fit_records,
    law_from_document,
    law_to_document,
    predict_log_kwh,
)
from .validation import (
    RecordFilter,
    compare_to_published,
    PUBLISHED_A100_LAWS,
    run_cross_architecture,
    run_cross_gpu,
    run_cross_model,
    run_within,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_COMPUTE = 3
EXIT_IO = 4

MODEL_CHOICES = [m.value for m in ModelId]
GPU_CHOICES = [g.value for g in GpuId]
PRECISION_CHOICES = [p.value for p in Precision]


class FileFormatError(DiffwattError):
    """A law/report/data file could not be read or parsed."""


def _config_from_args(args: argparse.Namespace) -> InferenceConfig:
    return InferenceConfig(
        model=ModelId(args.model),
        resolution=Resolution(args.height, args.width),
        steps=args.steps,
        precision=Precision(args.precision),
        cfg=args.cfg,
        num_prompts=args.prompts,
        gpu=GpuId(args.gpu),
    )


def _parse_filters(pairs: list[str]) -> RecordFilter:
    spec: dict = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep or not value:
            raise DomainError(f"filter {pair!r} is not of the form key=value")
        values = value.split(",")
        try:
            if key in ("model", "gpu", "precision"):
                spec[key] = values
            elif key == "cfg":
                if any(v not in ("true", "false") for v in values):
                    raise ValueError(value)
                spec[key] = [v == "true" for v in values]
            elif key in ("num_prompts", "steps"):
                spec[key] = [int(v) for v in values]
            elif key == "resolution":
                spec[key] = [
                    Resolution(*(int(side) for side in v.split("x"))) for v in values
                ]
            else:
                raise DomainError(f"unknown filter key {key!r} in --filter {pair!r}")
        except DomainError:
            raise
        except (ValueError, TypeError):
            raise DomainError(f"invalid value in --filter {pair!r}") from None
    return RecordFilter(**spec)


def _load_dataset(args: argparse.Namespace) -> Dataset:
    if getattr(args, "data", None):
        path = Path(args.data)
        dataset = parse_csv(path.read_bytes())
    elif getattr(args, "embedded", None):
        dataset = embedded_tables(ModelId(name) for name in args.embedded.split(","))
    else:
        raise DomainError("no data source given; use --embedded or --data")
    filters = getattr(args, "filter", None)
    if filters:
        dataset = _parse_filters(filters).apply(dataset)
    return dataset


def _print_table(fields: dict) -> None:
    width = max(len(k) for k in fields)
    for key, value in fields.items():
        print(f"{key:<{width}}  {value}")


def _print_law(law, diagnostics) -> None:
    print("coefficients:")
    for name, value in law.coefficients().items():
        print(f"  {name:<16} {value:+.6f}")
    print(f"dropped: {', '.join(law.dropped_columns) or '(none)'}")
    d = diagnostics
    print(
        f"r2={d.r2:.6f} mae_log={d.mae_log:.6f} pearson={d.pearson:.6f} "
        f"spearman={d.spearman:.6f} n={d.n_samples} rank={d.design_rank}"
    )


# --- subcommands --------------------------------------------------------------

def cmd_flops(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    result = breakdown(config)
    fields = {"model": config.model.value, "height": args.height, "width": args.width}
    fields.update(result.as_dict())
    fields["denoise_share"] = (
        result.steps * result.denoise_per_step_gflops / result.total_gflops
    )
    if args.format == "json":
        print(json.dumps(fields, indent=2))
    elif args.format == "csv":
        print(",".join(fields))
        print(",".join(repr(v) if isinstance(v, float) else str(v) for v in fields.values()))
    else:
        _print_table(fields)
    return EXIT_OK


def cmd_fit(args: argparse.Namespace) -> int:
    dataset = _load_dataset(args)
    law, diagnostics = fit_records(dataset)
    _print_law(law, diagnostics)
    if args.out:
        Path(args.out).write_text(law_to_document(law, diagnostics), encoding="utf-8")
    return EXIT_OK


def cmd_predict(args: argparse.Namespace) -> int:
    path = Path(args.law)
    try:
        law, _ = law_from_document(path.read_text(encoding="utf-8"))
    except OSError:
        raise
    except (DiffwattError, ValueError, TypeError, KeyError) as exc:
        raise FileFormatError(f"cannot parse law file {args.law}: {exc}") from None
    config = _config_from_args(args)
    features = features_for_config(config)
    joules = math.exp(predict_log_kwh(law, features)) * JOULES_PER_KWH
    if args.unit == "j":
        value, unit = joules, "J"
    elif args.unit == "kwh":
        value, unit = joules / JOULES_PER_KWH, "kWh"
    else:
        value, unit = joules / config.num_prompts / 3600.0, "Wh/image"
    print(
        "features: "
        + " ".join(f"{k}={v!r}" for k, v in {
            "intercept": features.intercept,
            "log_flops_cfg": features.log_flops_cfg,
            "fp32_indicator": features.fp32_indicator,
            "a4000_indicator": features.a4000_indicator,
            "a6000_indicator": features.a6000_indicator,
            "log_res": features.log_res,
        }.items())
    )
    print(f"predicted: {value!r} {unit} (law: {args.law})")
    return EXIT_OK


def _validate_dataset(
    args: argparse.Namespace, default_models: list[ModelId], apply_filters: bool = True
) -> Dataset:
    """Resolve --data / --embedded for the validate command."""
    if args.data:
        dataset = parse_csv(Path(args.data).read_bytes())
    elif args.embedded is not None:
        models = (
            [ModelId(name) for name in args.embedded.split(",")]
            if args.embedded
            else default_models
        )
        if not models:
            raise DomainError("--embedded needs an explicit model list for this protocol")
        dataset = embedded_tables(dict.fromkeys(models))
    else:
        raise DomainError("no data source given; use --embedded or --data")
    if apply_filters and args.filter:
        dataset = _parse_filters(args.filter).apply(dataset)
    return dataset


def cmd_validate(args: argparse.Namespace) -> int:
    if args.protocol == "within":
        if not args.model:
            raise DomainError("--protocol within requires --model")
        dataset = _validate_dataset(args, [ModelId(args.model)])
        report = run_within(dataset, args.k, args.seed)
        reference = ModelId(args.model)
    elif args.protocol in ("cross-model", "cross-arch"):
        if not (args.train and args.test):
            raise DomainError(f"--protocol {args.protocol} requires --train and --test")
        train = [ModelId(m) for m in args.train.split(",")]
        test = [ModelId(m) for m in args.test.split(",")]
        dataset = _validate_dataset(args, train + test)
        if args.protocol == "cross-model":
            if len(test) != 1:
                raise DomainError("--protocol cross-model takes a single --test model")
            report = run_cross_model(train, test[0], dataset)
        else:
            report = run_cross_architecture(train, test, dataset)
        reference = None
    else:  # cross-gpu
        dataset = _validate_dataset(args, [], apply_filters=False)
        filters = _parse_filters(args.filter) if args.filter else RecordFilter()
        report = run_cross_gpu(filters, dataset)
        reference = None

    print(f"protocol: {json.dumps(report.protocol.descriptor())}")
    _print_law(report.law, report.train_diagnostics)
    t = report.test_diagnostics
    print(
        f"test: r2={t.r2:.6f} mae_log={t.mae_log:.6f} pearson={t.pearson:.6f} "
        f"spearman={t.spearman:.6f} n={t.n_samples}"
    )
    if report.per_gpu_mae:
        for gpu, value in report.per_gpu_mae.items():
            print(f"residual mae ({gpu.value}): {value:.6f}")
    if reference is not None and reference in PUBLISHED_A100_LAWS:
        print("delta vs published:")
        for delta in compare_to_published(report.law, reference):
            rel = "n/a" if delta.relative is None else f"{delta.relative:.3f}"
            print(
                f"  {delta.name:<16} published={delta.published:+.4f} "
                f"fitted={delta.fitted:+.4f} abs={delta.absolute:.4f} rel={rel}"
            )
    if args.out:
        Path(args.out).write_text(report.to_document(), encoding="utf-8")
    return EXIT_OK


def cmd_tables(args: argparse.Namespace) -> int:
    data = write_csv(embedded_table(ModelId(args.model)))
    if args.out:
        Path(args.out).write_bytes(data)
    else:
        sys.stdout.write(data.decode("utf-8"))
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    dataset = _load_dataset(args)
    if len(dataset) == 0:
        raise ProtocolError("empty dataset")
    minimum = min(rec.energy_joules for rec in dataset)
    ordered = sorted(
        dataset,
        key=lambda rec: (
            rec.config.model.value,
            rec.config.resolution.area,
            rec.config.steps,
            rec.config.precision.value,
            rec.config.cfg,
        ),
    )
    rows = []
    for rec in ordered:
        c = rec.config
        row = {
            "model": c.model.value,
            "gpu": c.gpu.value,
            "height": c.resolution.height,
            "width": c.resolution.width,
            "steps": c.steps,
            "precision": c.precision.value,
            "cfg": c.cfg,
            "energy_joules": rec.energy_joules,
            "relative": rec.energy_joules / minimum,
        }
        if args.carbon_intensity is not None:
            row["gco2"] = rec.energy_joules / JOULES_PER_KWH * args.carbon_intensity
        rows.append(row)
    ratio = max(rec.energy_joules for rec in dataset) / minimum
    if args.format == "json":
        print(json.dumps({"rows": rows, "max_min_ratio": ratio}, indent=2))
    elif args.format == "csv":
        print(",".join(rows[0]))
        for row in rows:
            print(",".join(repr(v) if isinstance(v, float) else str(v) for v in row.values()))
    else:
        for row in rows:
            print(
                f"{row['model']:<5} {row['height']}x{row['width']:<5} "
                f"steps={row['steps']:<3} {row['precision']} cfg={str(row['cfg']).lower():<5} "
                f"E={row['energy_joules']:.3e} J  x{row['relative']:.2f}"
                + (f"  {row['gco2']:.3f} gCO2" if "gco2" in row else "")
            )
        print(f"max/min ratio: {ratio:.2f}")
    return EXIT_OK


# --- parser -------------------------------------------------------------------

def _add_config_flags(parser: argparse.ArgumentParser, prompts_default: int) -> None:
    parser.add_argument("--model", required=True, choices=MODEL_CHOICES)
    parser.add_argument("--height", type=int, required=True)
    parser.add_argument("--width", type=int, required=True)
    parser.add_argument("--steps", type=int, required=True)
    parser.add_argument("--precision", choices=PRECISION_CHOICES, default="fp16")
    parser.add_argument("--cfg", action="store_true")
    parser.add_argument("--prompts", type=int, default=prompts_default)
    parser.add_argument("--gpu", choices=GPU_CHOICES, default="a100")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="diffwatt",
        description="FLOP accounting and energy scaling laws for diffusion-model inference",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("flops", help="print the FLOP breakdown of one scenario")
    _add_config_flags(p, prompts_default=1)
    p.add_argument("--format", choices=["table", "json", "csv"], default="table")
    p.set_defaults(func=cmd_flops)

    p = sub.add_parser("fit", help="fit the scaling law to a dataset")
    p.add_argument("--embedded", help="comma-separated models to pull from embedded tables")
    p.add_argument("--data", help="CSV file in the dataset schema")
    p.add_argument("--filter", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--out", help="write the fitted law as JSON")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="predict energy from a law file")
    p.add_argument("--law", required=True, help="law JSON written by fit")
    _add_config_flags(p, prompts_default=1)
    p.add_argument("--unit", choices=["j", "kwh", "wh-per-image"], default="j")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("validate", help="run a holdout/cross-validation protocol")
    p.add_argument(
        "--protocol",
        required=True,
        choices=["within", "cross-model", "cross-gpu", "cross-arch"],
    )
    p.add_argument("--model", choices=MODEL_CHOICES, help="model for --protocol within")
    p.add_argument("--train", help="comma-separated train models")
    p.add_argument("--test", help="comma-separated test models")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--embedded",
        nargs="?",
        const="",
        help="use embedded tables (optionally a comma-separated model list)",
    )
    p.add_argument("--data", help="CSV file in the dataset schema")
    p.add_argument("--filter", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--out", help="write the full report as JSON")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("tables", help="export an embedded measurement table as CSV")
    p.add_argument("--model", required=True, choices=MODEL_CHOICES)
    p.add_argument("--out")
    p.set_defaults(func=cmd_tables)

    p = sub.add_parser("report", help="relative-energy report")
    p.add_argument("--relative", action="store_true", required=True)
    p.add_argument("--embedded", help="comma-separated models to pull from embedded tables")
    p.add_argument("--data", help="CSV file in the dataset schema")
    p.add_argument("--filter", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument(
        "--carbon-intensity",
        type=float,
        default=None,
        metavar="GCO2_PER_KWH",
        help="append a gCO2 column at this grid intensity",
    )
    p.add_argument("--format", choices=["table", "json", "csv"], default="table")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FileFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FitError, ProtocolError, DegenerateDataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    raise SystemExit(main())
