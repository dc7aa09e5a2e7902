"""Gaussian kernel density estimation with tabulated lookup grids.

Genuine and imposter score distributions are each fitted with a Gaussian
KDE. The fitted density is tabulated on a uniform grid spanning the data
range plus five bandwidths per side, which keeps the untabulated tail mass
below 1e-4; queries use linear interpolation of that grid by default, with
the exact kernel sum available for verification. Every evaluated density is
floored at ``DENSITY_FLOOR`` so posterior ratios stay finite in the tails.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

DENSITY_FLOOR = 1e-12

MODEL_FORMAT = "picscore-density-model"
MODEL_VERSION = "1"

_SQRT_2PI = float(np.sqrt(2.0 * np.pi))
_GRID_PAD_BANDWIDTHS = 5.0


def scott_bandwidth(n: int) -> float:
    """Scott factor for one-dimensional KDE: n ** (-1/5).

    This is the dimensionless factor; multiply by a data scale (see
    :func:`default_bandwidth`) to get a bandwidth in score units.
    """
    if n < 1:
        raise ValueError(f"sample count must be >= 1, got {n}")
    return float(n) ** -0.2


def default_bandwidth(scores: np.ndarray) -> float:
    """Scott bandwidth scaled by the sample standard deviation.

    Falls back to the bare Scott factor when the sample is constant
    (zero standard deviation).
    """
    scores = np.asarray(scores, dtype=float)
    factor = scott_bandwidth(scores.size)
    spread = float(scores.std())
    scale = max(1.0, float(np.abs(scores).max())) if scores.size else 1.0
    if spread <= scale * 1e-12:  # numerically constant sample
        return factor
    return spread * factor


def gaussian_kernel(x):
    """Standard Gaussian kernel exp(-x^2/2) / sqrt(2*pi)."""
    arr = np.asarray(x, dtype=float)
    out = np.exp(-0.5 * arr * arr) / _SQRT_2PI
    return float(out) if arr.ndim == 0 else out


@dataclass(frozen=True)
class KdeDensity:
    """A fitted one-dimensional Gaussian KDE plus its lookup grid.

    ``train_scores`` is empty for models restored from disk; exact-mode
    evaluation is then unavailable (the file stores only tabulated state).
    """

    train_scores: np.ndarray
    bandwidth: float
    grid_min: float
    grid_max: float
    grid_values: np.ndarray
    grid_resolution: int

    def grid_points(self) -> np.ndarray:
        return np.linspace(self.grid_min, self.grid_max, self.grid_resolution)


def _kernel_sum(train: np.ndarray, bandwidth: float, queries: np.ndarray) -> np.ndarray:
    # Chunk the query axis so the (queries x train) matrix stays ~32 MB.
    out = np.empty(queries.size, dtype=float)
    chunk = max(1, int(4_000_000 // max(train.size, 1)))
    scale = 1.0 / (train.size * bandwidth)
    for start in range(0, queries.size, chunk):
        q = queries[start : start + chunk, None]
        z = (q - train[None, :]) / bandwidth
        out[start : start + chunk] = gaussian_kernel(z).sum(axis=1) * scale
    return out


def fit_kde(
    scores,
    bandwidth: float | None = None,
    resolution: int = 4096,
    grid_range: tuple[float, float] | None = None,
) -> KdeDensity:
    """Fit a Gaussian KDE and tabulate it on a uniform grid.

    Parameters
    ----------
    scores : array-like
        Non-empty, finite training scores.
    bandwidth : float, optional
        Kernel bandwidth. Defaults to the sample-scaled Scott bandwidth.
    resolution : int
        Number of uniformly spaced grid points.
    grid_range : (float, float), optional
        Grid span. Defaults to the data range padded by five bandwidths
        on each side.
    """
    scores = np.asarray(scores, dtype=float).ravel()
    if scores.size == 0:
        raise ValueError("cannot fit a density to an empty score array")
    if not np.all(np.isfinite(scores)):
        raise ValueError("training scores must all be finite")
    if resolution < 2:
        raise ValueError(f"grid resolution must be >= 2, got {resolution}")

    h = default_bandwidth(scores) if bandwidth is None else float(bandwidth)
    if not h > 0.0:
        raise ValueError(f"bandwidth must be positive, got {h}")

    if grid_range is None:
        lo = float(scores.min()) - _GRID_PAD_BANDWIDTHS * h
        hi = float(scores.max()) + _GRID_PAD_BANDWIDTHS * h
    else:
        lo, hi = float(grid_range[0]), float(grid_range[1])
        if not lo < hi:
            raise ValueError(f"grid range must satisfy lo < hi, got ({lo}, {hi})")

    grid = np.linspace(lo, hi, resolution)
    values = np.maximum(_kernel_sum(scores, h, grid), DENSITY_FLOOR)
    return KdeDensity(
        train_scores=scores.copy(),
        bandwidth=h,
        grid_min=lo,
        grid_max=hi,
        grid_values=values,
        grid_resolution=resolution,
    )


def eval_density(density: KdeDensity, s, mode: str = "lookup"):
    """Evaluate a fitted density at score(s) ``s``.

    ``lookup`` linearly interpolates the tabulated grid and clamps
    out-of-grid queries to the density floor. ``exact`` sums the kernel
    over all training points. Results are always >= ``DENSITY_FLOOR``.
    """
    arr = np.asarray(s, dtype=float)
    scalar = arr.ndim == 0
    queries = np.atleast_1d(arr)
    if mode == "lookup":
        values = np.interp(
            queries,
            density.grid_points(),
            density.grid_values,
            left=DENSITY_FLOOR,
            right=DENSITY_FLOOR,
        )
    elif mode == "exact":
        if density.train_scores.size == 0:
            raise ValueError(
                "exact evaluation unavailable: this density carries no training "
                "scores (models restored from disk are lookup-only)"
            )
        values = _kernel_sum(density.train_scores, density.bandwidth, queries)
    else:
        raise ValueError(f"mode must be 'lookup' or 'exact', got {mode!r}")
    values = np.maximum(values, DENSITY_FLOOR)
    return float(values[0]) if scalar else values


@dataclass(frozen=True)
class DensityModel:
    """Trained genuine/imposter densities on a shared grid, plus the class prior."""

    genuine: KdeDensity
    imposter: KdeDensity
    prior_genuine: float = 0.5
    version: str = MODEL_VERSION

    @property
    def prior_imposter(self) -> float:
        return 1.0 - self.prior_genuine


def fit_model(
    train,
    prior_genuine: float = 0.5,
    resolution: int = 4096,
    genuine_bandwidth: float | None = None,
    imposter_bandwidth: float | None = None,
) -> DensityModel:
    """Fit genuine and imposter KDEs over a shared grid.

    The shared grid spans the union of both classes' data ranges, each
    padded by five of its own bandwidths.
    """
    if not 0.0 < prior_genuine < 1.0:
        raise ValueError(f"prior_genuine must be in (0, 1), got {prior_genuine}")
    g_scores = np.asarray(train.genuine_scores, dtype=float)
    f_scores = np.asarray(train.imposter_scores, dtype=float)
    if g_scores.size == 0:
        raise ValueError("training set has no genuine scores")
    if f_scores.size == 0:
        raise ValueError("training set has no imposter scores")

    hg = default_bandwidth(g_scores) if genuine_bandwidth is None else float(genuine_bandwidth)
    hf = default_bandwidth(f_scores) if imposter_bandwidth is None else float(imposter_bandwidth)
    lo = min(g_scores.min() - _GRID_PAD_BANDWIDTHS * hg, f_scores.min() - _GRID_PAD_BANDWIDTHS * hf)
    hi = max(g_scores.max() + _GRID_PAD_BANDWIDTHS * hg, f_scores.max() + _GRID_PAD_BANDWIDTHS * hf)
    shared = (float(lo), float(hi))

    genuine = fit_kde(g_scores, bandwidth=hg, resolution=resolution, grid_range=shared)
    imposter = fit_kde(f_scores, bandwidth=hf, resolution=resolution, grid_range=shared)
    return DensityModel(genuine=genuine, imposter=imposter, prior_genuine=prior_genuine)


def _density_to_dict(density: KdeDensity) -> dict:
    return {
        "bandwidth": density.bandwidth,
        "grid_min": density.grid_min,
        "grid_max": density.grid_max,
        "grid_resolution": density.grid_resolution,
        "grid_values": [float(v) for v in density.grid_values],
    }


def _density_from_dict(data: dict) -> KdeDensity:
    values = np.asarray(data["grid_values"], dtype=float)
    resolution = int(data["grid_resolution"])
    if values.size != resolution:
        raise ValueError(
            f"corrupt model file: grid has {values.size} values, expected {resolution}"
        )
    return KdeDensity(
        train_scores=np.empty(0, dtype=float),
        bandwidth=float(data["bandwidth"]),
        grid_min=float(data["grid_min"]),
        grid_max=float(data["grid_max"]),
        grid_values=values,
        grid_resolution=resolution,
    )


def save_model(model: DensityModel, path: str | Path) -> None:
    """Serialize a model to versioned JSON.

    Grid values round-trip bit-exactly (full-precision decimal repr).
    Training scores are not stored; reloaded models are lookup-only.
    """
    doc = {
        "format": MODEL_FORMAT,
        "version": model.version,
        "prior_genuine": model.prior_genuine,
        "genuine": _density_to_dict(model.genuine),
        "imposter": _density_to_dict(model.imposter),
    }
    path = Path(path)
    with path.open("w") as handle:
        json.dump(doc, handle, indent=2, sort_keys=True)
        handle.write("\n")


def load_model(path: str | Path) -> DensityModel:
    """Load a model saved with :func:`save_model`."""
    path = Path(path)
    try:
        with path.open() as handle:
            doc = json.load(handle)
    except json.JSONDecodeError as exc:
        raise ValueError(f"corrupt model file {path}: {exc}") from None

    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise ValueError(f"{path} is not a {MODEL_FORMAT} file")
    version = doc.get("version")
    if version != MODEL_VERSION:
        raise ValueError(
            f"unsupported model version {version!r} in {path} (expected {MODEL_VERSION!r})"
        )
    try:
        return DensityModel(
            genuine=_density_from_dict(doc["genuine"]),
            imposter=_density_from_dict(doc["imposter"]),
            prior_genuine=float(doc["prior_genuine"]),
            version=str(version),
        )
    except KeyError as exc:
        raise ValueError(f"corrupt model file {path}: missing field {exc}") from None
