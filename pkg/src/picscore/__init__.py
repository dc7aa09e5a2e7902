"""Probabilistic confidence calibration for biometric comparison scores."""

__version__ = "0.1.0"

from .baselines import (
    BaselineEstimator,
    dtc_confidence,
    erbc_confidence,
    fit_dtc,
    fit_erbc,
    fit_lrc,
    lrc_confidence,
)
from .dataset import (
    GENUINE,
    IMPOSTER,
    ComparisonRecord,
    LabeledScoreSet,
    load_scores,
    partition,
    save_scores,
    split_subject_exclusive,
)
from .density import (
    DENSITY_FLOOR,
    DensityModel,
    KdeDensity,
    default_bandwidth,
    eval_density,
    fit_kde,
    fit_model,
    gaussian_kernel,
    load_model,
    save_model,
    scott_bandwidth,
)
from .metrics import (
    CalibrationBin,
    CalibrationReport,
    CccBin,
    VerificationResult,
    calibration_report,
    ccc,
    ece,
    empirical_fmr,
    empirical_fnmr,
    fnmr_at_fmr,
    mce,
    threshold_at_fmr,
    true_confidence,
)
from .pic import (
    PicScore,
    decision_confidence,
    log_likelihood_ratio,
    pic_multi,
    pic_single,
    pic_threshold_for_fmr,
    pic_values,
)
from .synth import SynthConfig, analytic_fused_posterior, analytic_posterior, generate

__all__ = [
    "BaselineEstimator",
    "CalibrationBin",
    "CalibrationReport",
    "CccBin",
    "ComparisonRecord",
    "DENSITY_FLOOR",
    "DensityModel",
    "GENUINE",
    "IMPOSTER",
    "KdeDensity",
    "LabeledScoreSet",
    "PicScore",
    "SynthConfig",
    "VerificationResult",
    "analytic_fused_posterior",
    "analytic_posterior",
    "calibration_report",
    "ccc",
    "decision_confidence",
    "default_bandwidth",
    "dtc_confidence",
    "ece",
    "empirical_fmr",
    "empirical_fnmr",
    "erbc_confidence",
    "eval_density",
    "fit_dtc",
    "fit_erbc",
    "fit_kde",
    "fit_lrc",
    "fit_model",
    "fnmr_at_fmr",
    "gaussian_kernel",
    "generate",
    "load_model",
    "load_scores",
    "log_likelihood_ratio",
    "lrc_confidence",
    "mce",
    "partition",
    "pic_multi",
    "pic_single",
    "pic_threshold_for_fmr",
    "pic_values",
    "save_model",
    "save_scores",
    "scott_bandwidth",
    "split_subject_exclusive",
    "threshold_at_fmr",
    "true_confidence",
]
