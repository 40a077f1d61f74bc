"""Holdout protocols, k-fold machinery and published-coefficient comparison."""

from __future__ import annotations

import json

import pytest

from diffwatt import (
    Dataset,
    GpuId,
    ModelId,
    Precision,
    RecordFilter,
    compare_to_published,
    embedded_table,
    embedded_tables,
    kfold_split,
    run_cross_architecture,
    run_cross_gpu,
    run_cross_model,
    run_within,
)
from diffwatt.errors import ProtocolError, UnknownReferenceError
from diffwatt.validation import (
    CrossModelHoldout,
    PUBLISHED_A100_LAWS,
    PUBLISHED_CROSS_GPU_LAWS,
)

from synth import config_grid, dataset_from_law

CROSS_MODEL_SCENARIOS = [
    ({ModelId.QWEN, ModelId.SD35}, ModelId.FLUX),
    ({ModelId.FLUX, ModelId.SD35}, ModelId.QWEN),
    ({ModelId.FLUX, ModelId.QWEN}, ModelId.SD35),
]


# --- k-fold -----------------------------------------------------------------------

def test_kfold_sizes_and_partition():
    dataset = embedded_table(ModelId.FLUX)
    folds = kfold_split(dataset, 2, seed=7)
    assert [len(f) for f in folds] == [40, 40]
    pooled = {rec for fold in folds for rec in fold}
    assert pooled == set(dataset.records)
    assert sum(len(f) for f in folds) == len(dataset)


def test_kfold_sizes_differ_by_at_most_one():
    dataset = embedded_table(ModelId.QWEN)  # 40 records
    folds = kfold_split(dataset, 3, seed=0)
    sizes = sorted(len(f) for f in folds)
    assert sum(sizes) == 40
    assert sizes[-1] - sizes[0] <= 1


def test_kfold_deterministic_per_seed():
    dataset = embedded_table(ModelId.SD2)
    first = kfold_split(dataset, 4, seed=123)
    second = kfold_split(dataset, 4, seed=123)
    assert [f.records for f in first] == [f.records for f in second]
    shuffled = kfold_split(dataset, 4, seed=124)
    assert [f.records for f in first] != [f.records for f in shuffled]


def test_kfold_too_few_records():
    small = Dataset(tuple(embedded_table(ModelId.FLUX))[:3])
    with pytest.raises(ProtocolError):
        kfold_split(small, 4, seed=0)
    with pytest.raises(ProtocolError):
        kfold_split(small, 1, seed=0)


# --- within-architecture -------------------------------------------------------------

def test_within_flux_pooled_holdout():
    report = run_within(embedded_table(ModelId.FLUX), k=2, seed=7)
    assert report.test_diagnostics.r2 >= 0.98
    assert report.test_diagnostics.n_samples == 80
    assert len(report.per_point_pairs) == 80


def test_within_is_deterministic():
    dataset = embedded_table(ModelId.SD35)
    a = run_within(dataset, k=2, seed=11)
    b = run_within(dataset, k=2, seed=11)
    assert a.law == b.law
    assert a.per_point_pairs == b.per_point_pairs
    assert a.test_diagnostics == b.test_diagnostics


def test_within_zero_noise_synthetic_is_exact():
    law = PUBLISHED_A100_LAWS[ModelId.FLUX]
    dataset = dataset_from_law(law, config_grid(ModelId.FLUX))
    report = run_within(dataset, k=2, seed=3)
    assert report.test_diagnostics.r2 == pytest.approx(1.0, abs=1e-9)


def test_within_rejects_mixed_models():
    with pytest.raises(ProtocolError):
        run_within(embedded_tables([ModelId.FLUX, ModelId.QWEN]), k=2, seed=0)


def test_within_rejects_undersized_dataset():
    small = Dataset(tuple(embedded_table(ModelId.FLUX))[:2])
    with pytest.raises(ProtocolError):
        run_within(small, k=3, seed=0)


# --- cross-model ---------------------------------------------------------------------

@pytest.mark.parametrize("train,test", CROSS_MODEL_SCENARIOS)
def test_cross_model_rank_correlation_transfers(train, test):
    dataset = embedded_tables(sorted(train, key=lambda m: m.value) + [test])
    report = run_cross_model(train, test, dataset)
    assert report.test_diagnostics.spearman >= 0.95
    assert report.test_diagnostics.pearson >= 0.90
    assert report.test_diagnostics.spearman >= report.train_diagnostics.spearman - 0.05


def test_cross_model_no_leakage():
    train = {ModelId.FLUX, ModelId.SD35}
    dataset = embedded_tables([ModelId.FLUX, ModelId.SD35, ModelId.QWEN])
    report = run_cross_model(train, ModelId.QWEN, dataset)
    train_configs = {rec.config for rec in dataset if rec.config.model in train}
    for _, _, config in report.per_point_pairs:
        assert config.model is ModelId.QWEN
        assert config not in train_configs
    assert len(report.per_point_pairs) == 40


def test_cross_model_rejects_overlap():
    with pytest.raises(ProtocolError):
        run_cross_model({ModelId.FLUX}, ModelId.FLUX, embedded_table(ModelId.FLUX))
    with pytest.raises(ProtocolError):
        CrossModelHoldout(frozenset({ModelId.FLUX}), ModelId.FLUX)


def test_cross_model_rejects_missing_split():
    dataset = embedded_table(ModelId.FLUX)  # no qwen records at all
    with pytest.raises(ProtocolError):
        run_cross_model({ModelId.FLUX}, ModelId.QWEN, dataset)


def test_cross_architecture_multi_model_test_set():
    dataset = embedded_tables([ModelId.FLUX, ModelId.QWEN, ModelId.SD35, ModelId.SD2])
    report = run_cross_architecture(
        {ModelId.FLUX, ModelId.QWEN, ModelId.SD35}, {ModelId.SD2}, dataset
    )
    assert len(report.per_point_pairs) == 80
    assert report.test_diagnostics.spearman >= 0.9

    with pytest.raises(ProtocolError):
        run_cross_architecture({ModelId.FLUX}, {ModelId.FLUX, ModelId.SD2}, dataset)


# --- cross-GPU ------------------------------------------------------------------------

def _two_gpu_synthetic():
    law = PUBLISHED_CROSS_GPU_LAWS[ModelId.FLUX]
    configs = config_grid(ModelId.FLUX, gpus=(GpuId.A100, GpuId.A6000))
    return dataset_from_law(law, configs)


def test_cross_gpu_recovers_published_gpu_coefficient():
    report = run_cross_gpu(RecordFilter(), _two_gpu_synthetic())
    assert report.law.beta_a6000 == pytest.approx(0.450, abs=1e-8)
    assert report.law.alpha == pytest.approx(0.997, abs=1e-8)
    assert "a4000_indicator" in report.law.dropped_columns
    assert set(report.per_gpu_mae) == {GpuId.A100, GpuId.A6000}
    for value in report.per_gpu_mae.values():
        assert value == pytest.approx(0.0, abs=1e-9)


def test_cross_gpu_filter_narrowing():
    dataset = _two_gpu_synthetic()
    report = run_cross_gpu(RecordFilter(cfg=True), dataset)
    assert report.train_diagnostics.n_samples == len(dataset) // 2


def test_cross_gpu_rejects_single_gpu():
    with pytest.raises(ProtocolError):
        run_cross_gpu(RecordFilter(), embedded_table(ModelId.FLUX))
    with pytest.raises(ProtocolError):
        run_cross_gpu(RecordFilter(gpu=GpuId.A100), _two_gpu_synthetic())


# --- record filters ---------------------------------------------------------------------

def test_record_filter_membership_semantics():
    dataset = embedded_table(ModelId.FLUX)
    only_fp32 = RecordFilter(precision=Precision.FP32).apply(dataset)
    assert len(only_fp32) == 40
    non_50 = RecordFilter(steps={10, 20, 30, 40}).apply(dataset)
    assert len(non_50) == 64
    assert all(rec.config.steps != 50 for rec in non_50)
    combo = RecordFilter(precision="fp16", cfg=False, steps=10).apply(dataset)
    assert len(combo) == 4  # one per resolution


def test_record_filter_rejects_empty_constraint():
    with pytest.raises(ProtocolError):
        RecordFilter(steps=())


# --- published-coefficient comparison ------------------------------------------------------

def test_compare_identity_gives_zero_deltas():
    law = PUBLISHED_A100_LAWS[ModelId.SD35]
    deltas = compare_to_published(law, ModelId.SD35)
    assert all(d.absolute == 0.0 for d in deltas)


def test_compare_fitted_flux_within_tolerance():
    from diffwatt import fit_records

    law, _ = fit_records(embedded_table(ModelId.FLUX))
    by_name = {d.name: d for d in compare_to_published(law, ModelId.FLUX)}
    assert by_name["log_flops_cfg"].absolute <= 0.05
    assert by_name["fp32_indicator"].absolute <= 0.30
    assert by_name["log_flops_cfg"].relative is not None


def test_compare_fitted_sd35_beta_dtype():
    from diffwatt import fit_records

    law, _ = fit_records(embedded_table(ModelId.SD35))
    by_name = {d.name: d for d in compare_to_published(law, ModelId.SD35)}
    assert by_name["fp32_indicator"].absolute <= 0.30


def test_compare_relative_delta_undefined_for_zero_published():
    law = PUBLISHED_A100_LAWS[ModelId.QWEN]
    by_name = {d.name: d for d in compare_to_published(law, ModelId.QWEN)}
    assert by_name["fp32_indicator"].published == 0.0
    assert by_name["fp32_indicator"].relative is None


def test_compare_unknown_reference():
    law = PUBLISHED_A100_LAWS[ModelId.FLUX]
    with pytest.raises(UnknownReferenceError):
        compare_to_published(law, ModelId.SD2)


# --- report serialization ---------------------------------------------------------------

def test_report_document_structure():
    train = {ModelId.FLUX, ModelId.SD35}
    dataset = embedded_tables([ModelId.FLUX, ModelId.SD35, ModelId.QWEN])
    report = run_cross_model(train, ModelId.QWEN, dataset)
    doc = json.loads(report.to_document())
    assert doc["protocol"] == {
        "protocol": "cross_model_holdout",
        "train": ["flux", "sd35"],
        "test": "qwen",
    }
    assert set(doc["law"]) == {
        "intercept", "log_flops_cfg", "fp32_indicator", "a4000_indicator",
        "a6000_indicator", "log_res", "dropped_columns",
    }
    assert len(doc["per_point_pairs"]) == 40
    first = doc["per_point_pairs"][0]
    assert set(first) == {"actual_ln_kwh", "predicted_ln_kwh", "config"}
    assert first["config"]["model"] == "qwen"
