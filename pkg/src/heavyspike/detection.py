"""Planted-vs-null testing with the simple-cycle statistic."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng as _rng
from .colorcode import _Blocks, _ordered_sum, _saw_sweep, rainbow_probability, sample_colorings
from .errors import InvalidParameterError
from .model import NoiseModel, generate_spiked_matrix

DEFAULT_DETECTION_COLORINGS = 256
MIN_NULL_TRIALS = 10


@dataclass(frozen=True)
class DetectionConfig:
    ell: int
    num_colorings: int = DEFAULT_DETECTION_COLORINGS
    threshold_mode: str = "calibrated"  # or "fixed"
    null_trials: int = 20
    threshold: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.ell < 3:
            raise InvalidParameterError("cycle length must be >= 3", "ell")
        if self.num_colorings < 1:
            raise InvalidParameterError("num_colorings must be >= 1", "colorings")
        if self.threshold_mode == "calibrated":
            if self.null_trials < MIN_NULL_TRIALS:
                raise InvalidParameterError(
                    f"calibration needs >= {MIN_NULL_TRIALS} null trials", "null_trials")
        elif self.threshold_mode == "fixed":
            if self.threshold is None:
                raise InvalidParameterError("fixed mode needs a threshold", "threshold")
        else:
            raise InvalidParameterError(f"unknown threshold mode {self.threshold_mode!r}",
                                        "threshold_mode")


@dataclass(frozen=True)
class Calibration:
    threshold: float
    null_mean: float
    null_std: float
    null_statistics: tuple


@dataclass(frozen=True)
class DetectionResult:
    decision: str  # "planted" | "null"
    statistic: float
    threshold: float


def cycle_per_coloring(Y, coloring) -> float:
    """Sum of edge products over simple cycles whose ``q`` vertices are rainbow.

    Every rainbow cycle has exactly one vertex of color 0; walks are anchored
    there, so each cycle is seen once per orientation.
    """
    Y = np.asarray(Y, dtype=np.float64)
    ell = coloring.q
    blocks = _Blocks(coloring)
    anchor = blocks.sl[0]
    if anchor.start == anchor.stop:
        return 0.0
    Yp = blocks.permute_matrix(Y)
    n = Y.shape[0]
    Z = np.zeros((n, anchor.stop - anchor.start))
    Z[anchor, :] = np.eye(anchor.stop - anchor.start)
    # paths of ell-1 edges from an anchor s back to u, all colors distinct
    paths = _saw_sweep(Yp, blocks, ell - 1, Z)
    closing = Yp[:, anchor]
    return float(np.sum(paths * closing)) / 2.0


def cycle_statistic_colorcoded(Y, ell: int, C: int, seed: int, colorings=None) -> float:
    """Unbiased color-coded estimate of the ``ell``-cycle statistic."""
    Y = np.asarray(Y, dtype=np.float64)
    n = Y.shape[0]
    if ell < 3 or ell > n:
        raise InvalidParameterError(f"cycle length must satisfy 3 <= ell <= n={n}", "ell")
    if colorings is None:
        colorings = sample_colorings(n, ell, C, seed)
    colorings = list(colorings)
    for c in colorings:
        if c.q != ell:
            raise InvalidParameterError(f"palette size must equal ell={ell}", "q")
    total = _ordered_sum(lambda t: cycle_per_coloring(Y, colorings[t]), len(colorings))
    return total / (len(colorings) * rainbow_probability(ell))


def _statistic(Y, config: DetectionConfig, seed: int) -> float:
    return cycle_statistic_colorcoded(Y, config.ell, config.num_colorings, seed)


def calibrate(n: int, noise: NoiseModel, config: DetectionConfig) -> Calibration:
    """Threshold = null mean + 3 null standard deviations over pure-noise instances."""
    stats = []
    for t in range(config.null_trials):
        s = _rng.mix64(config.seed, _rng.STREAM_NULL, t)
        inst = generate_spiked_matrix(n, 0.0, "gaussian-normalized", noise, s)
        stats.append(_statistic(inst.Y, config, _rng.mix64(s, _rng.STREAM_COLORING)))
    arr = np.array(stats)
    mean, std = float(arr.mean()), float(arr.std(ddof=1))
    return Calibration(mean + 3.0 * std, mean, std, tuple(stats))


def detect(Y, config: DetectionConfig, noise: NoiseModel | None = None,
           calibration: Calibration | None = None, seed: int | None = None) -> DetectionResult:
    """Classify Y as planted or null by thresholding the cycle statistic.

    In calibrated mode pass either ``noise`` (calibration runs here) or a
    precomputed ``calibration`` shared across a batch.
    """
    Y = np.asarray(Y, dtype=np.float64)
    if config.threshold_mode == "fixed":
        threshold = float(config.threshold)
    else:
        if calibration is None:
            if noise is None:
                raise InvalidParameterError("calibrated detection needs the noise model", "noise")
            calibration = calibrate(Y.shape[0], noise, config)
        threshold = calibration.threshold
    s = config.seed if seed is None else seed
    stat = _statistic(Y, config, _rng.mix64(s, _rng.STREAM_COLORING))
    return DetectionResult("planted" if stat > threshold else "null", stat, threshold)
