"""FLOP accounting and energy scaling laws for diffusion-model inference."""

from .data import (
    Dataset,
    EnergyRecord,
    JOULES_PER_KWH,
    embedded_table,
    embedded_tables,
    joules_to_kwh,
    kwh_to_joules,
    parse_csv,
    per_image_wh,
    write_csv,
)
from .flops import (
    ConvSpec,
    CrossAttnDims,
    FlopBreakdown,
    GpuId,
    InferenceConfig,
    ModelId,
    Precision,
    Resolution,
    TransformerDims,
    breakdown,
    conv_flops,
    cross_attn_flops,
    denoise_flops_per_step,
    denoise_share,
    denoise_step_flop_count,
    kaplan_denoise_approx,
    mmdit_flops,
    resnet_block_flops,
    text_encoder_flop_count,
    text_encoder_flops,
    transformer_flops,
    vae_decoder_flop_count,
    vae_decoder_flops,
)
from .law import (
    FeatureVector,
    FitDiagnostics,
    ScalingLaw,
    ScalingLawRegressor,
    build_features,
    features_for_config,
    fit,
    fit_records,
    law_from_document,
    law_to_document,
    predict_joules,
    predict_log_kwh,
)
from .metrics import mae, pearson, r_squared, spearman
from .validation import (
    CrossArchitecture,
    CrossGpu,
    CrossModelHoldout,
    PUBLISHED_A100_LAWS,
    PUBLISHED_CROSS_GPU_LAWS,
    RecordFilter,
    ValidationReport,
    WithinArchitecture,
    compare_to_published,
    kfold_split,
    run_cross_architecture,
    run_cross_gpu,
    run_cross_model,
    run_within,
)

__version__ = "0.1.0"

__all__ = [
    "ConvSpec",
    "CrossArchitecture",
    "CrossAttnDims",
    "CrossGpu",
    "CrossModelHoldout",
    "Dataset",
    "EnergyRecord",
    "FeatureVector",
    "FitDiagnostics",
    "FlopBreakdown",
    "GpuId",
    "InferenceConfig",
    "JOULES_PER_KWH",
    "ModelId",
    "PUBLISHED_A100_LAWS",
    "PUBLISHED_CROSS_GPU_LAWS",
    "Precision",
    "RecordFilter",
    "Resolution",
    "ScalingLaw",
    "ScalingLawRegressor",
    "TransformerDims",
    "ValidationReport",
    "WithinArchitecture",
    "breakdown",
    "build_features",
    "compare_to_published",
    "conv_flops",
    "cross_attn_flops",
    "denoise_flops_per_step",
    "denoise_share",
    "denoise_step_flop_count",
    "embedded_table",
    "embedded_tables",
    "features_for_config",
    "fit",
    "fit_records",
    "joules_to_kwh",
    "kaplan_denoise_approx",
    "kfold_split",
    "kwh_to_joules",
    "law_from_document",
    "law_to_document",
    "mae",
    "mmdit_flops",
    "parse_csv",
    "pearson",
    "per_image_wh",
    "predict_joules",
    "predict_log_kwh",
    "r_squared",
    "resnet_block_flops",
    "run_cross_architecture",
    "run_cross_gpu",
    "run_cross_model",
    "run_within",
    "spearman",
    "text_encoder_flop_count",
    "text_encoder_flops",
    "transformer_flops",
    "vae_decoder_flop_count",
    "vae_decoder_flops",
    "write_csv",
]
