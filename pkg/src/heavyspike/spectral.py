"""Eigensolvers, rounding, PCA baselines and correlation metrics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import rng as _rng
from .errors import DegenerateInputError, InvalidParameterError, NumericFailureError

DEFAULT_ITERS = 300
DEFAULT_TOL = 1e-8
DEFAULT_SPAN_T = 1


@dataclass(frozen=True)
class EigenResult:
    eigenvalues: np.ndarray  # ordered as requested (by |value| or algebraically), descending
    eigenvectors: np.ndarray  # n x t, orthonormal columns
    iterations: int
    residuals: np.ndarray
    converged: bool = True

    @property
    def t(self) -> int:
        return self.eigenvalues.shape[0]


@dataclass
class EstimateReport:
    method: str
    params: dict
    estimate: np.ndarray
    sq_corr: float
    runtime_ms: float
    seeds: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)


def canonical_sign(v: np.ndarray) -> np.ndarray:
    """Flip ``v`` (or each column) so its largest-magnitude coordinate is positive."""
    v = np.array(v, dtype=np.float64)
    if v.ndim == 1:
        return -v if v[np.argmax(np.abs(v))] < 0 else v
    idx = np.argmax(np.abs(v), axis=0)
    signs = np.sign(v[idx, np.arange(v.shape[1])])
    signs[signs == 0] = 1.0
    return v * signs


def squared_correlation(a, b) -> float:
    """<a,b>^2 / (|a|^2 |b|^2)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na, nb = a @ a, b @ b
    if na == 0 or nb == 0:
        raise DegenerateInputError("squared correlation of a zero vector")
    return float(min(1.0, (a @ b) ** 2 / na / nb))


def _as_operator(A):
    if callable(A):
        return A
    M = np.asarray(A, dtype=np.float64)
    return lambda Z: M @ Z


def _ritz_order(theta, order):
    return np.argsort(-np.abs(theta) if order == "magnitude" else -theta, kind="stable")


def power_top_t(apply, n: int, t: int = 1, iters: int = DEFAULT_ITERS, tol: float = DEFAULT_TOL,
                seed: int = 0, block: int | None = None, order: str = "magnitude"
                ) -> EigenResult:
    """Leading ``t`` eigenpairs of a symmetric operator by subspace iteration.

    ``apply`` maps an (n, m) block to an (n, m) block (a dense matrix is also
    accepted). The iterate block has ``block`` columns (default t + 4, capped at
    n) and is re-orthonormalised with a Rayleigh-Ritz step every sweep. The
    stopping rule is relative: every wanted residual |Av - theta v| must fall
    below ``tol * max|theta|``.

    ``order="algebraic"`` returns the largest eigenvalues rather than the
    largest in magnitude; it runs the same iteration on ``A + sigma I``, with
    sigma an upper bound on the spectral radius, which is slower to converge.
    """
    if not 1 <= t <= n:
        raise InvalidParameterError(f"t must lie in [1, n={n}]", "t")
    if order not in ("magnitude", "algebraic"):
        raise InvalidParameterError(f"unknown order {order!r}", "order")
    op = _as_operator(apply)
    p = min(n, block if block is not None else t + 4)
    if p < t:
        raise InvalidParameterError("block must be at least t", "block")
    g = _rng.generator(seed, _rng.STREAM_POWER)
    Q, _ = np.linalg.qr(g.standard_normal((n, p)))

    shift = 0.0
    if order == "algebraic":
        shift = 1.01 * _spectral_radius(op, n, g) + 1e-300

    theta = np.zeros(p)
    resid = np.full(t, np.inf)
    X = Q
    for it in range(1, iters + 1):
        AQ = np.asarray(op(Q))
        if not np.all(np.isfinite(AQ)):
            raise NumericFailureError("non-finite value in operator output", it)
        H = Q.T @ AQ
        theta, S = np.linalg.eigh((H + H.T) / 2)
        idx = _ritz_order(theta, order)
        theta, S = theta[idx], S[:, idx]
        X = Q @ S
        AX = AQ @ S
        R = AX - X * theta
        resid = np.linalg.norm(R[:, :t], axis=0)
        scale = max(np.max(np.abs(theta)), np.finfo(float).tiny)
        if np.all(resid <= tol * scale):
            vecs = canonical_sign(X[:, :t])
            return EigenResult(theta[:t].copy(), vecs, it, resid, True)
        if shift:
            AX = AX + shift * X
        Q, _ = np.linalg.qr(AX)
    vecs = canonical_sign(X[:, :t])
    return EigenResult(theta[:t].copy(), vecs, iters, resid, False)


def _spectral_radius(op, n, g, sweeps: int = 30) -> float:
    v = g.standard_normal((n, 1))
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(sweeps):
        w = np.asarray(op(v))
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0
        est = max(est, nw)
        v = w / nw
    # power iteration under-estimates the radius; pad generously
    return 1.5 * est


def dense_top(M, t: int = 1) -> EigenResult:
    """Top-t eigenpairs (largest algebraic eigenvalues) of a dense symmetric matrix."""
    M = np.asarray(M, dtype=np.float64)
    w, V = np.linalg.eigh((M + M.T) / 2)
    w, V = w[::-1][:t], V[:, ::-1][:, :t]
    resid = np.linalg.norm(M @ V - V * w, axis=0)
    return EigenResult(w.copy(), canonical_sign(V), 0, resid, True)


def round_from_basis(V: np.ndarray, seed: int, repeats: int = 1, apply=None) -> np.ndarray:
    """Random unit vector in span(V); with repeats > 1 the candidate with the
    largest Rayleigh quotient under ``apply`` is kept."""
    t = V.shape[1]
    g = _rng.generator(seed, _rng.STREAM_ROUND)
    coeffs = g.standard_normal((t, repeats))
    cand = V @ coeffs
    cand /= np.linalg.norm(cand, axis=0)
    if repeats == 1:
        return cand[:, 0]
    if apply is None:
        raise InvalidParameterError("repeats > 1 needs the operator to rank candidates", "repeats")
    AC = np.asarray(_as_operator(apply)(cand))
    rq = np.einsum("ij,ij->j", cand, AC)
    return cand[:, int(np.argmax(rq))]


def round_top_span(P_apply, n: int, t: int = DEFAULT_SPAN_T, seed: int = 0, repeats: int = 1,
                   iters: int = DEFAULT_ITERS, tol: float = DEFAULT_TOL,
                   order: str = "algebraic") -> np.ndarray:
    """Unit vector drawn with Gaussian coefficients in the top-t eigenspace of P."""
    if t < 1:
        raise InvalidParameterError("t must be >= 1", "t")
    if callable(P_apply):
        eig = power_top_t(P_apply, n, t, iters, tol, seed, order=order)
    else:
        eig = dense_top(P_apply, t) if order == "algebraic" else \
            power_top_t(P_apply, n, t, iters, tol, seed, order=order)
    if t == 1:
        return eig.eigenvectors[:, 0].copy()
    return round_from_basis(eig.eigenvectors, seed, repeats, P_apply)


def pca_estimate(Y) -> np.ndarray:
    """Top eigenvector (largest eigenvalue) of Y."""
    return dense_top(Y, 1).eigenvectors[:, 0]


def truncate_entries(Y, tau: float) -> np.ndarray:
    if tau <= 0:
        raise InvalidParameterError("tau must be > 0", "tau")
    return np.clip(np.asarray(Y, dtype=np.float64), -tau, tau)


def truncation_pca(Y, tau: float) -> np.ndarray:
    """Clip entries to [-tau, tau], subtract the mean of all n^2 entries, take the top eigenvector."""
    Yc = truncate_entries(Y, tau)
    Yc = Yc - Yc.mean()
    return pca_estimate(Yc)


def strong_recovery_round(P) -> np.ndarray:
    """Normalise a vector estimate, or take the leading eigenvector of P / |P|_F."""
    P = np.asarray(P, dtype=np.float64)
    norm = np.linalg.norm(P)
    if norm == 0:
        raise DegenerateInputError("cannot round a zero estimate")
    if P.ndim == 1:
        return P / norm
    return pca_estimate(P / norm)
