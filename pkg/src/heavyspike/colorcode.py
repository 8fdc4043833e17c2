"""Color-coded evaluation of self-avoiding and non-backtracking walk matrices.

A coloring assigns each vertex one of ``q`` colors. For a fixed coloring the
sum over walks whose vertices (SAW) or sliding windows (NBW) are rainbow can be
computed by dynamic programming over (vertex, color bookkeeping) states in
polynomial time. Averaging over random colorings gives an unbiased estimate of
the SAW matrix after dividing by the rainbow probability ``q!/q^q``; for the NBW
family the coloring average is itself the estimator.

Vertices are reordered by color internally so that every color class is a
contiguous block and transitions become dense block products. All sweeps work
on a block of vectors ``Z`` (n x m), which gives both ``P @ Z`` (implicit mode)
and the full matrix (``Z = I``, materialize mode).
"""

from __future__ import annotations

import json
import math
import os
import struct
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, product

import numpy as np

from . import rng as _rng
from .errors import CapExceededError, InvalidParameterError
from .model import MAGIC

DEFAULT_COLORINGS = 64
DEFAULT_STATE_BUDGET = 1 << 26


@dataclass(frozen=True)
class Coloring:
    q: int
    assignment: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.assignment)
        if a.ndim != 1 or (a.size and (a.min() < 0 or a.max() >= self.q)):
            raise InvalidParameterError(f"coloring entries must lie in [0, {self.q})", "coloring")

    @property
    def n(self) -> int:
        return len(self.assignment)

    def is_rainbow(self, vertices) -> bool:
        cols = [int(self.assignment[v]) for v in vertices]
        return len(set(cols)) == len(cols)


def sample_coloring(n: int, q: int, g: np.random.Generator) -> Coloring:
    return Coloring(q, g.integers(0, q, size=n))


def sample_colorings(n: int, q: int, count: int, seed: int) -> list[Coloring]:
    """``count`` independent uniform colorings; coloring t uses its own stream."""
    return [sample_coloring(n, q, _rng.generator(seed, _rng.STREAM_COLORING, t))
            for t in range(count)]


def all_colorings(n: int, q: int):
    """Every one of the q**n colorings, in lexicographic order."""
    for a in product(range(q), repeat=n):
        yield Coloring(q, np.array(a))


def rainbow_probability(q: int, size: int | None = None) -> float:
    """Probability that ``size`` (default q) vertices get pairwise distinct colors."""
    size = q if size is None else size
    return math.perm(q, size) / q**size


@dataclass(frozen=True)
class ColorCodeConfig:
    ell: int
    k: int | None = None
    num_colorings: int = DEFAULT_COLORINGS
    seed: int = 0
    mode: str = "implicit"
    state_budget: int = DEFAULT_STATE_BUDGET

    def __post_init__(self):
        if self.ell < 1:
            raise InvalidParameterError("ell must be >= 1", "ell")
        if self.num_colorings < 1:
            raise InvalidParameterError("num_colorings must be >= 1", "colorings")
        if self.k is not None and self.k < 1:
            raise InvalidParameterError("k must be >= 1", "k")
        if self.mode not in ("materialize", "implicit"):
            raise InvalidParameterError(f"unknown mode {self.mode!r}", "mode")

    @property
    def q(self) -> int:
        return self.ell + 1

    def colorings(self, n: int) -> list[Coloring]:
        return sample_colorings(n, self.q, self.num_colorings, self.seed)

    def saw_state_count(self, n: int) -> int:
        return n * 2**self.q


# ---------------------------------------------------------------------------
# Color blocks


class _Blocks:
    """Vertices sorted by color; ``sl[b]`` is the slice of color class b."""

    def __init__(self, coloring: Coloring):
        a = np.asarray(coloring.assignment)
        self.q = coloring.q
        self.order = np.argsort(a, kind="stable")
        counts = np.bincount(a, minlength=self.q)
        bounds = np.concatenate([[0], np.cumsum(counts)])
        self.sl = [slice(int(bounds[b]), int(bounds[b + 1])) for b in range(self.q)]
        self.nonempty = [b for b in range(self.q) if counts[b] > 0]

    def permute_matrix(self, Y):
        return Y[np.ix_(self.order, self.order)]

    def unpermute_rows(self, R):
        out = np.empty_like(R)
        out[self.order] = R
        return out


def _as_block(z):
    z = np.asarray(z, dtype=np.float64)
    return z.reshape(-1, 1) if z.ndim == 1 else z


@lru_cache(maxsize=None)
def _mask_table(q: int, s: int):
    """Masks of popcount s, and for each color b the (source, target) index maps to size s+1."""
    masks = [sum(1 << c for c in comb) for comb in combinations(range(q), s)]
    nxt = {m: i for i, m in enumerate(sum(1 << c for c in comb)
                                      for comb in combinations(range(q), s + 1))}
    moves = []
    for b in range(q):
        src = [i for i, m in enumerate(masks) if not (m >> b) & 1]
        tgt = [nxt[masks[i] | (1 << b)] for i in src]
        moves.append((np.array(src, dtype=np.intp), np.array(tgt, dtype=np.intp)))
    return masks, len(nxt), moves


def _saw_sweep(Yp, blocks: _Blocks, ell: int, Zp):
    """Rainbow self-avoiding walk sums applied to Zp, all in permuted order.

    State A[S, u, :] is the sum over rainbow walks from u (the current end) back
    to a start vertex weighted by Z, with S the set of colors seen. Only sets
    whose size equals the number of visited vertices are ever stored. The
    mask-major layout keeps every transition a product of contiguous views.
    """
    q = blocks.q
    n, m = Zp.shape
    masks, _, _ = _mask_table(q, 1)
    A = np.zeros((len(masks), n, m))
    for b in blocks.nonempty:
        A[b, blocks.sl[b]] = Zp[blocks.sl[b]]
    for s in range(1, ell + 1):
        _, size_next, moves = _mask_table(q, s)
        new = np.zeros((size_next, n, m))
        for b in blocks.nonempty:
            sb = blocks.sl[b]
            Yb = Yp[sb]
            for src, tgt in zip(*moves[b]):
                np.matmul(Yb, A[src], out=new[tgt, sb])
        A = new
    return A.sum(axis=0)


def _nbw_sweep(Yp, blocks: _Blocks, ell: int, k: int, Zp):
    """Window-rainbow walk sums applied to Zp, in permuted order.

    States are keyed by the tuple of the k colors preceding the current vertex,
    most recent first, with -1 marking "no vertex yet". A step from (A, u) to
    (A', v) multiplies by Y[v, u] and requires c(v) outside {c(u)} + A. Summing
    over the dropped oldest color is done once per group and the forbidden
    term subtracted block-wise, so each step costs O(n^2 m) per prefix group.
    """
    q = blocks.q
    sl = blocks.sl
    state = {(-1,) * k: Zp.copy()}
    for _ in range(ell):
        groups = defaultdict(list)
        for A, arr in state.items():
            groups[A[:-1]].append((A[-1], arr))
        new = {}
        for P, items in groups.items():
            G = items[0][1].copy() if len(items) == 1 else sum(arr for _, arr in items)
            by_last = {a: arr for a, arr in items if a >= 0}
            forb = {c for c in P if c >= 0}
            for b in blocks.nonempty:
                if b in forb:
                    continue
                sb = sl[b]
                out = Yp[:, sb] @ G[sb]
                for a, arr in by_last.items():
                    if a == b or a in forb:
                        continue
                    sa = sl[a]
                    if sa.start == sa.stop:
                        continue
                    out[sa] -= Yp[sa, sb] @ arr[sb]
                out[sb] = 0.0
                for c in forb:
                    out[sl[c]] = 0.0
                new[(b,) + P] = out
        state = new
    n, m = Zp.shape
    total = np.zeros((n, m))
    for arr in state.values():
        total += arr
    return total


def _check_palette(coloring: Coloring, ell: int):
    if coloring.q != ell + 1:
        raise InvalidParameterError(
            f"palette size must be ell+1={ell + 1}, got {coloring.q}", "q")


def _check_square(Y, coloring: Coloring):
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim != 2 or Y.shape[0] != Y.shape[1] or Y.shape[0] != coloring.n:
        raise InvalidParameterError("Y must be square and match the coloring length", "Y")
    return Y


def _apply_one(kind, Y, coloring, ell, k, Z, Yp=None):
    blocks = _Blocks(coloring)
    if Yp is None:
        Yp = blocks.permute_matrix(Y)
    Zp = Z[blocks.order]
    if kind == "saw":
        R = _saw_sweep(Yp, blocks, ell, Zp)
    else:
        R = _nbw_sweep(Yp, blocks, ell, k, Zp)
    return blocks.unpermute_rows(R)


def saw_per_coloring(Y, coloring: Coloring, ell: int) -> np.ndarray:
    """Sum of edge products over SAWs of length ``ell`` that are rainbow under ``coloring``."""
    _check_palette(coloring, ell)
    Y = _check_square(Y, coloring)
    n = Y.shape[0]
    return _apply_one("saw", Y, coloring, ell, None, np.eye(n))


def nbw_per_coloring(Y, coloring: Coloring, ell: int, k: int) -> np.ndarray:
    """Sum over walks whose every (k+2)-vertex window is rainbow under ``coloring``."""
    _check_palette(coloring, ell)
    if k < 1:
        raise InvalidParameterError("k must be >= 1", "k")
    Y = _check_square(Y, coloring)
    return _apply_one("nbw", Y, coloring, ell, k, np.eye(Y.shape[0]))


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("HEAVYSPIKE_THREADS", "1")))
    except ValueError:
        return 1


def _ordered_sum(parts_fn, count: int, workers: int | None = None):
    """Sum ``parts_fn(t)`` for t in range(count), always reducing in index order."""
    workers = _workers() if workers is None else workers
    if workers <= 1 or count == 1:
        total = parts_fn(0)
        for t in range(1, count):
            total = total + parts_fn(t)
        return total
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(parts_fn, range(count)))
    total = parts[0]
    for p in parts[1:]:
        total = total + p
    return total


class ColorCodedOperator:
    """Linear operator ``z -> p(Y) z`` for the averaged color-coded walk matrix.

    ``family`` is ``"saw"`` (rescaled by the rainbow probability so the
    expectation over colorings is the exact SAW matrix) or ``"nbw"`` (plain
    coloring average). Permuted copies of Y are cached when they fit in
    ``cache_bytes``.
    """

    def __init__(self, Y, colorings, ell: int, family: str = "saw", k: int | None = None,
                 cache_bytes: int = 1 << 29):
        self.Y = np.asarray(Y, dtype=np.float64)
        self.n = self.Y.shape[0]
        self.colorings = list(colorings)
        if not self.colorings:
            raise InvalidParameterError("need at least one coloring", "colorings")
        for c in self.colorings:
            _check_palette(c, ell)
        if family not in ("saw", "nbw"):
            raise InvalidParameterError(f"unknown walk family {family!r}", "family")
        if family == "nbw" and (k is None or k < 1):
            raise InvalidParameterError("nbw needs k >= 1", "k")
        self.ell, self.family, self.k = ell, family, k
        q = ell + 1
        self.scale = 1.0 / len(self.colorings)
        if family == "saw":
            self.scale /= rainbow_probability(q)
        self._blocks = [_Blocks(c) for c in self.colorings]
        self._cache = None
        if len(self.colorings) * self.n**2 * 8 <= cache_bytes:
            self._cache = [b.permute_matrix(self.Y) for b in self._blocks]

    def _part(self, t, Z):
        blocks = self._blocks[t]
        Yp = self._cache[t] if self._cache is not None else blocks.permute_matrix(self.Y)
        Zp = Z[blocks.order]
        if self.family == "saw":
            R = _saw_sweep(Yp, blocks, self.ell, Zp)
        else:
            R = _nbw_sweep(Yp, blocks, self.ell, self.k, Zp)
        return blocks.unpermute_rows(R)

    def matmat(self, Z):
        Z = _as_block(Z)
        return self.scale * _ordered_sum(lambda t: self._part(t, Z), len(self.colorings))

    def __call__(self, z):
        z = np.asarray(z, dtype=np.float64)
        out = self.matmat(z)
        return out[:, 0] if z.ndim == 1 else out

    def materialize(self):
        return self.matmat(np.eye(self.n))


def _config_colorings(Y, config: ColorCodeConfig):
    return config.colorings(np.asarray(Y).shape[0])


def saw_colorcoded(Y, config: ColorCodeConfig, colorings=None) -> np.ndarray:
    """Unbiased color-coded estimate of the full SAW matrix."""
    Y = np.asarray(Y, dtype=np.float64)
    n = Y.shape[0]
    if config.saw_state_count(n) > config.state_budget:
        raise CapExceededError(
            f"SAW state count {config.saw_state_count(n)} exceeds budget {config.state_budget}; "
            "use implicit mode (saw_operator_apply / ColorCodedOperator)")
    colorings = _config_colorings(Y, config) if colorings is None else colorings
    return ColorCodedOperator(Y, colorings, config.ell, "saw").materialize()


def saw_operator_apply(Y, colorings, ell: int, z) -> np.ndarray:
    return ColorCodedOperator(Y, colorings, ell, "saw")(z)


def nbw_colorcoded(Y, config: ColorCodeConfig, colorings=None) -> np.ndarray:
    if config.k is None:
        raise InvalidParameterError("nbw needs k", "k")
    colorings = _config_colorings(Y, config) if colorings is None else colorings
    return ColorCodedOperator(Y, colorings, config.ell, "nbw", config.k).materialize()


def nbw_operator_apply(Y, colorings, ell: int, k: int, z) -> np.ndarray:
    return ColorCodedOperator(Y, colorings, ell, "nbw", k)(z)


def make_operator(Y, config: ColorCodeConfig, family: str) -> ColorCodedOperator:
    return ColorCodedOperator(Y, _config_colorings(Y, config), config.ell, family, config.k)


# ---------------------------------------------------------------------------
# Debug dump: per-coloring matrices in the instance container layout


def dump_per_coloring(Y, colorings, ell: int, family: str, path, k: int | None = None) -> int:
    """Write every per-coloring matrix (pre-rescale) to ``path``; returns the count written.

    Layout matches the instance container: magic, ``<Q`` header length, sorted
    JSON header, then C row-major n x n blocks of little-endian float64.
    """
    Y = np.asarray(Y, dtype=np.float64)
    colorings = list(colorings)
    header = {"kind": "per-coloring", "family": family, "n": Y.shape[0], "ell": ell, "k": k,
              "q": ell + 1, "count": len(colorings),
              "assignments": [c.assignment.tolist() for c in colorings]}
    hbytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(hbytes)))
        fh.write(hbytes)
        for c in colorings:
            M = saw_per_coloring(Y, c, ell) if family == "saw" else nbw_per_coloring(Y, c, ell, k)
            fh.write(np.ascontiguousarray(M, dtype="<f8").tobytes())
    return len(colorings)


def load_per_coloring(path) -> tuple[dict, np.ndarray]:
    """Inverse of ``dump_per_coloring``: (header, array of shape (C, n, n))."""
    data = open(path, "rb").read()
    if data[:8] != MAGIC:
        raise InvalidParameterError("not a heavyspike container (bad magic)", "file")
    (hlen,) = struct.unpack("<Q", data[8:16])
    header = json.loads(data[16:16 + hlen].decode("utf-8"))
    n, count = header["n"], header["count"]
    mats = np.frombuffer(data, dtype="<f8", offset=16 + hlen, count=count * n * n)
    return header, mats.astype(np.float64).reshape(count, n, n)
