"""Brute-force enumeration of walk families and exact walk-sum polynomials.

Everything here is exponential in the walk length and guarded by caps. These
functions are the ground truth the color-coded evaluators are tested against.
Vertices are 0-based.
"""

from __future__ import annotations

import itertools
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import CapExceededError, InvalidParameterError

MATRIX_CAP_N = 10
MATRIX_CAP_ELL = 5
TENSOR_CAP_N = 8
TENSOR_CAP_ELL = 2


class WalkFamilySpec(NamedTuple):
    tag: str  # saw | nbw | cycle | tensor_hyperpath
    ell: int
    k: int | None = None

    def validate(self, n: int | None = None) -> None:
        if self.ell < 1:
            raise InvalidParameterError("ell must be >= 1", "ell")
        if self.tag == "nbw" and (self.k is None or self.k < 1):
            raise InvalidParameterError("nbw needs k >= 1", "k")
        if self.tag == "cycle":
            if self.ell < 3 or (n is not None and self.ell > n):
                raise InvalidParameterError("cycle length must satisfy 3 <= ell <= n", "ell")


def _check_cap(n, ell, cap_n, cap_ell, override):
    if override:
        return
    if n > cap_n or ell > cap_ell:
        raise CapExceededError(
            f"enumeration with n={n}, ell={ell} exceeds cap (n<={cap_n}, ell<={cap_ell}); "
            "pass override=True to force")


def _matrix_n(Y) -> int:
    Y = np.asarray(Y)
    if Y.ndim != 2 or Y.shape[0] != Y.shape[1]:
        raise InvalidParameterError("Y must be square", "Y")
    return Y.shape[0]


# ---------------------------------------------------------------------------
# Enumeration


def enumerate_saw(n: int, i: int, j: int, ell: int, override: bool = False):
    """All length-``ell`` self-avoiding walks from ``i`` to ``j`` in K_n."""
    _check_cap(n, ell, MATRIX_CAP_N, MATRIX_CAP_ELL, override)
    if i == j:
        raise InvalidParameterError("self-avoiding walk endpoints must differ", "j")
    if ell + 1 > n:
        return []
    others = [v for v in range(n) if v != i and v != j]
    return [(i, *mid, j) for mid in itertools.permutations(others, ell - 1)]


def _window_extend(n, ell, k, walk, out, j):
    if len(walk) == ell + 1:
        if walk[-1] == j:
            out.append(tuple(walk))
        return
    recent = walk[-(k + 1):]
    for v in range(n):
        if v in recent:
            continue
        walk.append(v)
        _window_extend(n, ell, k, walk, out, j)
        walk.pop()


def enumerate_nbw(n: int, i: int, j: int, ell: int, k: int, override: bool = False):
    """Length-``ell`` walks from ``i`` to ``j`` whose every k+2 consecutive vertices are distinct."""
    _check_cap(n, ell, MATRIX_CAP_N, MATRIX_CAP_ELL, override)
    if k < 1:
        raise InvalidParameterError("k must be >= 1", "k")
    out: list[tuple[int, ...]] = []
    _window_extend(n, ell, k, [i], out, j)
    return out


def enumerate_cycles(n: int, ell: int, override: bool = False):
    """Simple ``ell``-cycles of K_n, each once: lowest vertex first, then its smaller neighbour."""
    _check_cap(n, ell, MATRIX_CAP_N, MATRIX_CAP_ELL, override)
    WalkFamilySpec("cycle", ell).validate(n)
    out = []
    for first in range(n):
        rest = range(first + 1, n)
        for tail in itertools.permutations(rest, ell - 1):
            if tail[0] < tail[-1]:
                out.append((first, *tail))
    return out


class Hyperpath(NamedTuple):
    """Vertex layout ``(root, a1, b1, c1, ..., a_{l-1}, b_{l-1}, c_{l-1}, w)``."""

    vertices: tuple[int, ...]

    @property
    def ell(self) -> int:
        return (len(self.vertices) + 1) // 3

    @property
    def hyperedges(self) -> list[tuple[int, int, int]]:
        v = self.vertices
        edges = []
        single = v[0]
        for t in range(self.ell - 1):
            a, b, c = v[1 + 3 * t: 4 + 3 * t]
            edges.append((single, a, b))
            edges.append((a, b, c))
            single = c
        edges.append((single, v[-1], v[-1]))
        return edges


def enumerate_tensor_hyperpaths(n: int, i: int, ell: int, override: bool = False):
    _check_cap(n, ell, TENSOR_CAP_N, TENSOR_CAP_ELL, override)
    if ell < 1:
        raise InvalidParameterError("ell must be >= 1", "ell")
    size = 3 * ell - 1
    if size > n:
        return []
    others = [v for v in range(n) if v != i]
    return [Hyperpath((i, *rest)) for rest in itertools.permutations(others, size - 1)]


# ---------------------------------------------------------------------------
# Exact polynomials


def _walk_products(Y, walks) -> np.ndarray:
    if not walks:
        return np.zeros(0)
    w = np.asarray(walks)
    return np.prod(Y[w[:, :-1], w[:, 1:]], axis=1)


def saw_matrix_exact(Y, ell: int, override: bool = False) -> np.ndarray:
    Y = np.asarray(Y, dtype=np.float64)
    n = _matrix_n(Y)
    _check_cap(n, ell, MATRIX_CAP_N, MATRIX_CAP_ELL, override)
    P = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                P[i, j] = _walk_products(Y, enumerate_saw(n, i, j, ell, True)).sum()
    return P


def _relabel(walk):
    first: dict[int, int] = {}
    return tuple(first.setdefault(v, len(first)) for v in walk)


@lru_cache(maxsize=None)
def window_rainbow_probability(pattern: tuple[int, ...], k: int, q: int) -> float:
    """P(every (k+2)-window of the walk is rainbow) under a uniform q-coloring.

    ``pattern`` is the walk with vertices relabelled 0, 1, ... by first occurrence.
    """
    m = max(pattern) + 1
    width = min(k + 2, len(pattern))
    windows = [pattern[s:s + width] for s in range(len(pattern) - width + 1)]
    good = 0
    for col in itertools.product(range(q), repeat=m):
        if all(len({col[v] for v in win}) == width for win in windows):
            good += 1
    return good / q**m


def nbw_matrix_exact(Y, ell: int, k: int, q: int | None = None,
                     override: bool = False) -> np.ndarray:
    """Sum of walk products over k-step non-backtracking walks.

    With ``q`` given, each walk is weighted by the exact probability that a
    uniform q-coloring makes all its windows rainbow.
    """
    Y = np.asarray(Y, dtype=np.float64)
    n = _matrix_n(Y)
    _check_cap(n, ell, MATRIX_CAP_N, MATRIX_CAP_ELL, override)
    P = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            walks = enumerate_nbw(n, i, j, ell, k, True)
            if not walks:
                continue
            vals = _walk_products(Y, walks)
            if q is not None:
                vals = vals * np.array([window_rainbow_probability(_relabel(w), k, q)
                                        for w in walks])
            P[i, j] = vals.sum()
    return P


def cycle_statistic_exact(Y, ell: int, override: bool = False) -> float:
    Y = np.asarray(Y, dtype=np.float64)
    n = _matrix_n(Y)
    cycles = enumerate_cycles(n, ell, override)
    if not cycles:
        return 0.0
    c = np.asarray(cycles)
    closed = np.concatenate([c, c[:, :1]], axis=1)
    return float(np.prod(Y[closed[:, :-1], closed[:, 1:]], axis=1).sum())


def tensor_estimate_exact(Y, ell: int, override: bool = False) -> np.ndarray:
    Y = np.asarray(Y, dtype=np.float64)
    n = Y.shape[0]
    _check_cap(n, ell, TENSOR_CAP_N, TENSOR_CAP_ELL, override)
    P = np.zeros(n)
    for i in range(n):
        paths = enumerate_tensor_hyperpaths(n, i, ell, True)
        if not paths:
            continue
        e = np.asarray([hp.hyperedges for hp in paths])
        P[i] = np.prod(Y[e[..., 0], e[..., 1], e[..., 2]], axis=1).sum()
    return P
