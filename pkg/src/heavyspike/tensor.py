"""Order-3 spiked tensor recovery and detection.

The hyperpath estimator rooted at i sums, over layouts
``i -> (a1, b1) -> c1 -> ... -> (a_{l-1}, b_{l-1}) -> c_{l-1} -> w`` of 3l-1
distinct vertices, the product of Y over the hyperedges
``(i, a1, b1), (a1, b1, c1), (c1, a2, b2), ..., (c_{l-1}, w, w)``.
The color-coded evaluation runs a DP from the leaf ``w`` back to the root over
single-vertex and ordered-pair states, each tagged by the set of colors used.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from . import rng as _rng
from .colorcode import Coloring, _ordered_sum, rainbow_probability, sample_colorings
from .errors import InvalidParameterError
from .spectral import DEFAULT_ITERS, power_top_t, squared_correlation

DEFAULT_TENSOR_STATE_BUDGET = 1 << 27


@dataclass(frozen=True)
class TensorEstimatorConfig:
    ell: int = 2
    num_colorings: int = 256
    seed: int = 0
    amplify: bool = True
    state_budget: int = DEFAULT_TENSOR_STATE_BUDGET

    @property
    def q(self) -> int:
        return 3 * self.ell - 1

    def validate(self, n: int) -> None:
        if self.ell < 1:
            raise InvalidParameterError("ell must be >= 1", "ell")
        if self.q > n:
            raise InvalidParameterError(f"need 3*ell-1={self.q} <= n={n}", "ell")
        if self.num_colorings < 1:
            raise InvalidParameterError("num_colorings must be >= 1", "colorings")
        states = n * n * 2**self.q
        if states > self.state_budget:
            raise InvalidParameterError(
                f"pair-state count {states} exceeds budget {self.state_budget}", "ell")


def _check_tensor(Y):
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim != 3 or not (Y.shape[0] == Y.shape[1] == Y.shape[2]):
        raise InvalidParameterError("Y must be an n x n x n tensor", "Y")
    return Y


def _mask_index(q, s):
    masks = [sum(1 << c for c in comb) for comb in combinations(range(q), s)]
    return masks, {m: i for i, m in enumerate(masks)}


def tensor_per_coloring(Y, coloring: Coloring, ell: int) -> np.ndarray:
    """Sum over hyperpaths rooted at each vertex whose 3l-1 vertices are rainbow."""
    Y = _check_tensor(Y)
    n = Y.shape[0]
    q = coloring.q
    if q != 3 * ell - 1:
        raise InvalidParameterError(f"palette size must be 3*ell-1={3 * ell - 1}", "q")
    col = np.asarray(coloring.assignment)
    members = [np.flatnonzero(col == c) for c in range(q)]

    # leaf: V[c, S] = sum_w Y[c, w, w] with S = {col(c), col(w)}
    masks, index = _mask_index(q, 2)
    diag = np.einsum("cww->cw", Y)
    V = np.zeros((n, len(masks)))
    for a in range(q):
        for b in range(q):
            if a == b or members[a].size == 0 or members[b].size == 0:
                continue
            V[members[a], index[(1 << a) | (1 << b)]] = diag[np.ix_(members[a], members[b])].sum(1)
    size = 2
    Y_pair = Y.reshape(n * n, n)   # rows (a, b), columns c
    Y_single = Y.reshape(n, n * n)  # rows u, columns (a, b)
    for _ in range(ell - 1):
        # ordered pair level
        src_masks = masks
        masks, index = _mask_index(q, size + 2)
        R = (Y_pair @ V).reshape(n, n, len(src_masks))
        W = np.zeros((n, n, len(masks)))
        for a in range(q):
            for b in range(q):
                if a == b or members[a].size == 0 or members[b].size == 0:
                    continue
                add = (1 << a) | (1 << b)
                src = [i for i, m in enumerate(src_masks) if not m & add]
                if not src:
                    continue
                tgt = [index[src_masks[i] | add] for i in src]
                sub = np.ix_(members[a], members[b], src)
                W[np.ix_(members[a], members[b], tgt)] = R[sub]
        size += 2
        # single level
        src_masks = masks
        masks, index = _mask_index(q, size + 1)
        R = Y_single @ W.reshape(n * n, len(src_masks))
        V = np.zeros((n, len(masks)))
        for c in range(q):
            if members[c].size == 0:
                continue
            src = [i for i, m in enumerate(src_masks) if not m & (1 << c)]
            if not src:
                continue
            tgt = [index[src_masks[i] | (1 << c)] for i in src]
            V[np.ix_(members[c], tgt)] = R[np.ix_(members[c], src)]
        size += 1
    return V.sum(axis=1)


def tensor_colorcoded_estimate(Y, config: TensorEstimatorConfig, colorings=None) -> np.ndarray:
    """Unbiased color-coded estimate of the exact hyperpath estimator vector."""
    Y = _check_tensor(Y)
    n = Y.shape[0]
    config.validate(n)
    if colorings is None:
        colorings = sample_colorings(n, config.q, config.num_colorings, config.seed)
    colorings = list(colorings)
    total = _ordered_sum(lambda t: tensor_per_coloring(Y, colorings[t], config.ell),
                         len(colorings))
    return total / (len(colorings) * rainbow_probability(config.q))


def tensor_unfold_estimate(Y, seed: int = 0, iters: int = DEFAULT_ITERS) -> tuple[np.ndarray, bool]:
    """Top right singular vector of the n^2 x n unfolding; second value flags a degenerate input."""
    Y = _check_tensor(Y)
    n = Y.shape[0]
    U = Y.reshape(n * n, n)
    G = U.T @ U
    if not np.any(G):
        g = _rng.generator(seed, _rng.STREAM_ROUND)
        v = g.standard_normal(n)
        return v / np.linalg.norm(v), True
    eig = power_top_t(G, n, 1, iters=iters, tol=1e-10, seed=seed)
    return eig.eigenvectors[:, 0], False


def tensor_amplify(Y, y) -> np.ndarray:
    """x_i = sum_{j1, j2} Y[i, j1, j2] y[j1] y[j2]."""
    Y = _check_tensor(Y)
    y = np.asarray(y, dtype=np.float64)
    if not np.any(y):
        raise InvalidParameterError("amplification vector must be nonzero", "y")
    return np.einsum("ijk,j,k->i", Y, y, y)


def tensor_detect_degree2(Y) -> float:
    """sum over i < j < k of Y[i, j, k] * Y[k, j, i]."""
    Y = _check_tensor(Y)
    n = Y.shape[0]
    i, j, k = np.indices((n, n, n))
    mask = (i < j) & (j < k)
    return float(np.sum((Y * Y.transpose(2, 1, 0))[mask]))


def tensor_recover(Y, config: TensorEstimatorConfig, colorings=None) -> np.ndarray:
    """Color-coded estimate -> normalise -> (optionally) amplify once -> normalise."""
    p = tensor_colorcoded_estimate(Y, config, colorings)
    norm = np.linalg.norm(p)
    if norm == 0:
        raise InvalidParameterError("tensor estimate vanished", "Y")
    y = p / norm
    if config.amplify:
        z = tensor_amplify(Y, y)
        y = z / np.linalg.norm(z)
    return y


__all__ = [
    "TensorEstimatorConfig", "tensor_per_coloring", "tensor_colorcoded_estimate",
    "tensor_unfold_estimate", "tensor_amplify", "tensor_detect_degree2", "tensor_recover",
    "squared_correlation",
]
