"""Log-linear energy scaling law: features, fitting, prediction.

The model is

    ln(E_kwh) = log_a + alpha * ln(GFLOPs_cfg)
              + beta_dtype * I_fp32 + beta_a4000 * I_a4000 + beta_a6000 * I_a6000
              + beta_res * ln(H * W / 256)

where GFLOPs_cfg is the effective compute of the whole sweep
(num_prompts * steps * denoise GFLOPs, doubled under classifier-free
guidance) and the indicators are one-hot against the fp16 / A100
baseline.  Fitting is ordinary least squares on whatever columns actually
vary; constant columns are dropped and reported with coefficient 0.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from . import metrics
from .data import JOULES_PER_KWH, Dataset, EnergyRecord
from .errors import DomainError, InsufficientDataError, RankDeficientError
from .flops import GpuId, InferenceConfig, Precision, breakdown

#: Design-matrix columns handled by :class:`ScalingLawRegressor` (the
#: intercept is added internally, sklearn style).
REGRESSOR_NAMES = (
    "log_flops_cfg",
    "fp32_indicator",
    "a4000_indicator",
    "a6000_indicator",
    "log_res",
)
FEATURE_NAMES = ("intercept",) + REGRESSOR_NAMES


@dataclass(frozen=True)
class FeatureVector:
    """One row of the energy-law design, intercept included."""

    log_flops_cfg: float
    fp32_indicator: float
    a4000_indicator: float
    a6000_indicator: float
    log_res: float
    intercept: float = 1.0

    def __post_init__(self) -> None:
        if self.intercept != 1.0:
            raise DomainError("intercept is fixed at 1")
        if not (math.isfinite(self.log_flops_cfg) and math.isfinite(self.log_res)):
            raise DomainError("log_flops_cfg and log_res must be finite")
        for name in ("fp32_indicator", "a4000_indicator", "a6000_indicator"):
            if getattr(self, name) not in (0.0, 1.0):
                raise DomainError(f"{name} must be 0 or 1")
        if self.a4000_indicator + self.a6000_indicator > 1:
            raise DomainError("at most one GPU indicator may be set")

    def regressors(self) -> np.ndarray:
        """The non-intercept columns, in :data:`REGRESSOR_NAMES` order."""
        return np.array(
            [
                self.log_flops_cfg,
                self.fp32_indicator,
                self.a4000_indicator,
                self.a6000_indicator,
                self.log_res,
            ]
        )


def build_features(config: InferenceConfig, gflops_effective: float) -> FeatureVector:
    """Encode a scenario; CFG doubling must already be in ``gflops_effective``."""
    if not gflops_effective > 0:
        raise DomainError(f"effective GFLOPs must be positive, got {gflops_effective}")
    return FeatureVector(
        log_flops_cfg=math.log(gflops_effective),
        fp32_indicator=1.0 if config.precision is Precision.FP32 else 0.0,
        a4000_indicator=1.0 if config.gpu is GpuId.A4000 else 0.0,
        a6000_indicator=1.0 if config.gpu is GpuId.A6000 else 0.0,
        log_res=math.log(config.resolution.area / 256),
    )


@dataclass(frozen=True)
class ScalingLaw:
    """Fitted (or published) coefficients of the energy law."""

    log_a: float
    alpha: float
    beta_dtype: float
    beta_a4000: float
    beta_a6000: float
    beta_res: float
    dropped_columns: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "dropped_columns", tuple(self.dropped_columns))
        for name in ("log_a", "alpha", "beta_dtype", "beta_a4000", "beta_a6000", "beta_res"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")
        by_name = self.coefficients()
        for name in self.dropped_columns:
            if name not in FEATURE_NAMES[1:]:
                raise DomainError(f"unknown dropped column {name!r}")
            if by_name[name] != 0.0:
                raise DomainError(f"dropped column {name!r} must have coefficient 0")

    def coefficients(self) -> dict[str, float]:
        return {
            "intercept": self.log_a,
            "log_flops_cfg": self.alpha,
            "fp32_indicator": self.beta_dtype,
            "a4000_indicator": self.beta_a4000,
            "a6000_indicator": self.beta_a6000,
            "log_res": self.beta_res,
        }


@dataclass(frozen=True)
class FitDiagnostics:
    """Training-set (or held-out) goodness-of-fit summary."""

    r2: float
    mae_log: float
    pearson: float
    spearman: float
    n_samples: int
    design_rank: int

    def as_dict(self) -> dict:
        return {
            "r2": self.r2,
            "mae_log": self.mae_log,
            "pearson": self.pearson,
            "spearman": self.spearman,
            "n_samples": self.n_samples,
            "design_rank": self.design_rank,
        }


class ScalingLawRegressor(RegressorMixin, BaseEstimator):
    """Ordinary least squares for the energy law, sklearn style.

    Parameters
    ----------
    drop_tol : float
        A column whose max-min spread is below this is treated as constant,
        excluded from the solve, and reported in ``dropped_columns_`` with
        coefficient 0.  Indicator columns are exact 0/1, so the default is
        far below any real variation.

    Attributes
    ----------
    coef_ : ndarray of shape (5,)
        Coefficients in :data:`REGRESSOR_NAMES` order (0 for dropped columns).
    intercept_ : float
        The base-energy offset.
    dropped_columns_ : tuple of str
    design_rank_ : int
        Columns retained in the solve, intercept included.
    """

    def __init__(self, drop_tol: float = 1e-12):
        self.drop_tol = drop_tol

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        n, p = X.shape
        if p != len(REGRESSOR_NAMES):
            raise DomainError(f"expected {len(REGRESSOR_NAMES)} feature columns, got {p}")
        if n < 2:
            raise InsufficientDataError(f"need at least 2 observations, got {n}")

        spread = X.max(axis=0) - X.min(axis=0)
        kept = [j for j in range(p) if spread[j] >= self.drop_tol]
        dropped = tuple(REGRESSOR_NAMES[j] for j in range(p) if j not in kept)
        if not kept:
            raise RankDeficientError("every regressor is constant; nothing to fit")

        design = np.column_stack([np.ones(n), X[:, kept]])
        rank = int(np.linalg.matrix_rank(design))
        if rank < design.shape[1]:
            raise RankDeficientError(
                f"design matrix rank {rank} < {design.shape[1]} retained columns"
            )
        # tiny SPD system: normal equations + Cholesky
        gram = design.T @ design
        beta = cho_solve(cho_factor(gram), design.T @ y)

        self.intercept_ = float(beta[0])
        self.coef_ = np.zeros(p)
        self.coef_[kept] = beta[1:]
        self.dropped_columns_ = dropped
        self.design_rank_ = design.shape[1]
        self.n_features_in_ = p

        fitted = design @ beta
        self.diagnostics_ = FitDiagnostics(
            r2=metrics.r_squared(y, fitted),
            mae_log=metrics.mae(y, fitted),
            pearson=metrics.pearson(y, fitted),
            spearman=metrics.spearman(y, fitted),
            n_samples=n,
            design_rank=self.design_rank_,
        )
        self.law_ = ScalingLaw(
            log_a=self.intercept_,
            alpha=float(self.coef_[0]),
            beta_dtype=float(self.coef_[1]),
            beta_a4000=float(self.coef_[2]),
            beta_a6000=float(self.coef_[3]),
            beta_res=float(self.coef_[4]),
            dropped_columns=self.dropped_columns_,
        )
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X)
        return self.intercept_ + X @ self.coef_


def fit(observations) -> tuple[ScalingLaw, FitDiagnostics]:
    """OLS over (FeatureVector, ln kWh) pairs."""
    observations = list(observations)
    if len(observations) < 2:
        raise InsufficientDataError(f"need at least 2 observations, got {len(observations)}")
    X = np.vstack([fv.regressors() for fv, _ in observations])
    y = np.array([target for _, target in observations], dtype=np.float64)
    est = ScalingLawRegressor().fit(X, y)
    return est.law_, est.diagnostics_


def predict_log_kwh(law: ScalingLaw, features: FeatureVector) -> float:
    return (
        law.log_a * features.intercept
        + law.alpha * features.log_flops_cfg
        + law.beta_dtype * features.fp32_indicator
        + law.beta_a4000 * features.a4000_indicator
        + law.beta_a6000 * features.a6000_indicator
        + law.beta_res * features.log_res
    )


def features_for_config(config: InferenceConfig) -> FeatureVector:
    """Full chain: FLOP breakdown -> effective GFLOPs -> feature vector."""
    return build_features(config, breakdown(config).effective_total_gflops)


def predict_joules(law: ScalingLaw, config: InferenceConfig) -> float:
    """Predicted total energy for the whole sweep, in joules."""
    return math.exp(predict_log_kwh(law, features_for_config(config))) * JOULES_PER_KWH


def observations_from_records(records) -> list[tuple[FeatureVector, float]]:
    """Pair each record's features with its ln(kWh) regression target."""
    return [
        (
            features_for_config(rec.config),
            math.log(rec.energy_joules / JOULES_PER_KWH),
        )
        for rec in records
    ]


def fit_records(records) -> tuple[ScalingLaw, FitDiagnostics]:
    return fit(observations_from_records(records))


# --- serialization ------------------------------------------------------------

def law_to_document(law: ScalingLaw, diagnostics: FitDiagnostics | None = None) -> str:
    """Flat JSON document; floats keep full round-trip precision."""
    doc: dict = {
        "log_a": law.log_a,
        "alpha": law.alpha,
        "beta_dtype": law.beta_dtype,
        "beta_a4000": law.beta_a4000,
        "beta_a6000": law.beta_a6000,
        "beta_res": law.beta_res,
        "dropped_columns": list(law.dropped_columns),
    }
    if diagnostics is not None:
        doc.update(diagnostics.as_dict())
    return json.dumps(doc, indent=2)


def law_from_document(text: str) -> tuple[ScalingLaw, FitDiagnostics | None]:
    doc = json.loads(text)
    try:
        law = ScalingLaw(
            log_a=float(doc["log_a"]),
            alpha=float(doc["alpha"]),
            beta_dtype=float(doc["beta_dtype"]),
            beta_a4000=float(doc["beta_a4000"]),
            beta_a6000=float(doc["beta_a6000"]),
            beta_res=float(doc["beta_res"]),
            dropped_columns=tuple(doc.get("dropped_columns", ())),
        )
    except KeyError as exc:
        raise DomainError(f"law document missing key {exc.args[0]!r}") from None
    diagnostics = None
    if "r2" in doc:
        diagnostics = FitDiagnostics(
            r2=float(doc["r2"]),
            mae_log=float(doc["mae_log"]),
            pearson=float(doc["pearson"]),
            spearman=float(doc["spearman"]),
            n_samples=int(doc["n_samples"]),
            design_rank=int(doc["design_rank"]),
        )
    return law, diagnostics
