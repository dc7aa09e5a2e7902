"""Posterior confidence (PIC) scores from trained densities.

A PIC score is the posterior probability that one or more comparison
scores were drawn from the genuine distribution rather than the imposter
distribution. Multi-score fusion multiplies per-score likelihoods, which
is accumulated here as a sum of log likelihood ratios and squashed with a
numerically stable sigmoid, so fusing hundreds of scores cannot underflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import GENUINE, IMPOSTER
from .density import DensityModel, eval_density


@dataclass(frozen=True)
class PicScore:
    """A posterior confidence value with its log-likelihood-ratio sum."""

    value: float
    n_comparisons: int
    log_lr_sum: float


def _stable_sigmoid(z):
    # exp only ever sees non-positive arguments, so neither branch overflows
    arr = np.asarray(z, dtype=float)
    ez = np.exp(-np.abs(arr))
    out = np.where(arr >= 0.0, 1.0 / (1.0 + ez), ez / (1.0 + ez))
    return float(out) if arr.ndim == 0 else out


def _prior_logit(model: DensityModel) -> float:
    return math.log(model.prior_genuine) - math.log(model.prior_imposter)


def log_likelihood_ratio(model: DensityModel, scores, mode: str = "lookup"):
    """log g(s) - log f(s) for each score; scalar in, scalar out."""
    g = eval_density(model.genuine, scores, mode=mode)
    f = eval_density(model.imposter, scores, mode=mode)
    return np.log(g) - np.log(f)


def pic_values(model: DensityModel, scores, mode: str = "lookup"):
    """Vectorized single-comparison posterior for an array of scores."""
    return _stable_sigmoid(log_likelihood_ratio(model, scores, mode=mode) + _prior_logit(model))


def pic_single(model: DensityModel, s: float, mode: str = "lookup") -> PicScore:
    """Posterior probability that one comparison score is genuine.

    value = g(s) * P(g) / (g(s) * P(g) + f(s) * P(f)), computed as a
    sigmoid of the log likelihood ratio plus the prior log-odds.
    """
    llr = float(log_likelihood_ratio(model, float(s), mode=mode))
    value = _stable_sigmoid(llr + _prior_logit(model))
    return PicScore(value=value, n_comparisons=1, log_lr_sum=llr)


def pic_multi(model: DensityModel, scores, mode: str = "lookup") -> PicScore:
    """Joint posterior for several scores of one claimed identity.

    Assumes the scores are drawn independently, so the class likelihoods
    are per-score products; the ratio is accumulated in log space with an
    exactly rounded sum, making the result independent of score order.
    """
    arr = np.asarray(scores, dtype=float).ravel()
    if arr.size == 0:
        raise ValueError("pic_multi requires at least one score")
    if not np.all(np.isfinite(arr)):
        raise ValueError("scores must all be finite")
    llrs = log_likelihood_ratio(model, arr, mode=mode)
    total = math.fsum(llrs.tolist())
    value = _stable_sigmoid(total + _prior_logit(model))
    return PicScore(value=value, n_comparisons=int(arr.size), log_lr_sum=total)


def decision_confidence(pic: PicScore, threshold: float) -> tuple[str, float]:
    """Threshold a PIC score into a decision and its correctness probability.

    A value at or above the threshold decides genuine (ties accept) with
    confidence equal to the value itself; below decides imposter with
    confidence one minus the value.
    """
    if pic.value >= threshold:
        return GENUINE, pic.value
    return IMPOSTER, 1.0 - pic.value


def pic_threshold_for_fmr(target_fmr: float) -> float:
    """Decision threshold on the PIC scale for a target false match rate."""
    if not 0.0 < target_fmr < 1.0:
        raise ValueError(f"target FMR must be in (0, 1), got {target_fmr}")
    return 1.0 - target_fmr
