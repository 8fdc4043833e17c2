"""Estimator pipelines: run one method on one instance and produce an EstimateReport."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .. import rng as _rng
from ..colorcode import DEFAULT_COLORINGS, ColorCodedOperator, sample_colorings
from ..errors import InvalidParameterError
from ..model import SpikedMatrixInstance, SpikedTensorInstance
from ..spectral import (DEFAULT_SPAN_T, EstimateReport, dense_top, pca_estimate, power_top_t,
                        round_from_basis, squared_correlation, truncation_pca)
from ..tensor import TensorEstimatorConfig, tensor_recover, tensor_unfold_estimate

MATRIX_METHODS = ("pca", "trunc-pca", "saw", "nbw")
TENSOR_METHODS = ("tensor-saw", "tensor-unfold")
METHODS = MATRIX_METHODS + TENSOR_METHODS

# materialising p(Y) costs n operator applications; past this size the
# matrix-free subspace iteration is used instead
MATERIALIZE_MAX_N = 512


@dataclass(frozen=True)
class MethodSpec:
    name: str
    ell: int | None = None
    k: int | None = None
    colorings: int | None = None
    tau: float | None = None
    span_t: int = DEFAULT_SPAN_T
    repeats: int = 1
    mode: str = "auto"
    amplify: bool = True

    def validate(self, kind: str, n: int) -> None:
        if self.name not in METHODS:
            raise InvalidParameterError(f"unknown method {self.name!r}", "method")
        wanted = MATRIX_METHODS if kind == "matrix" else TENSOR_METHODS
        if self.name not in wanted:
            raise InvalidParameterError(f"method {self.name} does not apply to {kind} instances",
                                        "method")
        if self.name == "trunc-pca" and (self.tau is None or self.tau <= 0):
            raise InvalidParameterError("trunc-pca needs tau > 0", "tau")
        if self.name in ("saw", "nbw", "tensor-saw"):
            if self.ell is None or self.ell < 1:
                raise InvalidParameterError(f"{self.name} needs ell >= 1", "ell")
            if self.colorings is not None and self.colorings < 1:
                raise InvalidParameterError("colorings must be >= 1", "colorings")
        if self.name == "saw" and self.ell + 1 > n:
            raise InvalidParameterError(f"saw needs ell+1 <= n", "ell")
        if self.name == "nbw" and (self.k is None or self.k < 1):
            raise InvalidParameterError("nbw needs k >= 1", "k")
        if self.name == "tensor-saw" and 3 * self.ell - 1 > n:
            raise InvalidParameterError("tensor-saw needs 3*ell-1 <= n", "ell")
        if not 1 <= self.span_t <= n:
            raise InvalidParameterError("span_t must lie in [1, n]", "span_t")
        if self.repeats < 1:
            raise InvalidParameterError("repeats must be >= 1", "repeats")
        if self.mode not in ("auto", "materialize", "implicit"):
            raise InvalidParameterError(f"unknown mode {self.mode!r}", "mode")

    @property
    def num_colorings(self) -> int:
        if self.colorings is not None:
            return self.colorings
        return 256 if self.name == "tensor-saw" else DEFAULT_COLORINGS

    def params(self) -> dict:
        return {"ell": self.ell, "k": self.k, "colorings": self.num_colorings
                if self.name in ("saw", "nbw", "tensor-saw") else None,
                "tau": self.tau, "span_t": self.span_t, "repeats": self.repeats}


def _walk_estimate(inst: SpikedMatrixInstance, spec: MethodSpec, seed: int):
    n = inst.n
    q = spec.ell + 1
    col_seed = _rng.mix64(seed, _rng.STREAM_COLORING)
    colorings = sample_colorings(n, q, spec.num_colorings, col_seed)
    op = ColorCodedOperator(inst.Y, colorings, spec.ell, spec.name,
                            spec.k if spec.name == "nbw" else None)
    mode = spec.mode
    if mode == "auto":
        mode = "materialize" if n <= MATERIALIZE_MAX_N else "implicit"
    round_seed = _rng.mix64(seed, _rng.STREAM_ROUND)
    extra = {"mode": mode}
    if mode == "materialize":
        P = op.materialize()
        eig = dense_top(P, spec.span_t)
        apply = P
    else:
        eig = power_top_t(op, n, spec.span_t, seed=_rng.mix64(seed, _rng.STREAM_POWER),
                          order="algebraic")
        extra.update(iterations=eig.iterations, converged=eig.converged)
        apply = op
    extra["top_eigenvalue"] = float(eig.eigenvalues[0])
    if spec.span_t == 1:
        return eig.eigenvectors[:, 0], extra
    return round_from_basis(eig.eigenvectors, round_seed, spec.repeats, apply), extra


def run_method(inst, spec: MethodSpec, seed: int) -> EstimateReport:
    """Run ``spec`` on ``inst``; ``seed`` drives colorings and rounding."""
    kind = "tensor" if isinstance(inst, SpikedTensorInstance) else "matrix"
    spec.validate(kind, inst.n)
    t0 = time.perf_counter()
    extra: dict = {}
    if spec.name == "pca":
        est = pca_estimate(inst.Y)
    elif spec.name == "trunc-pca":
        est = truncation_pca(inst.Y, spec.tau)
    elif spec.name in ("saw", "nbw"):
        est, extra = _walk_estimate(inst, spec, seed)
    elif spec.name == "tensor-saw":
        cfg = TensorEstimatorConfig(spec.ell, spec.num_colorings,
                                    _rng.mix64(seed, _rng.STREAM_COLORING), spec.amplify)
        est = tensor_recover(inst.Y, cfg)
    else:
        est, degenerate = tensor_unfold_estimate(inst.Y, seed=_rng.mix64(seed, _rng.STREAM_POWER))
        extra["degenerate"] = degenerate
    est = np.asarray(est, dtype=np.float64)
    est = est / np.linalg.norm(est)
    runtime = 1000.0 * (time.perf_counter() - t0)
    return EstimateReport(spec.name, spec.params(), est,
                          squared_correlation(est, inst.spike.values), runtime,
                          {"instance": inst.seed, "method": seed}, extra)
