"""Exhaustive cross-checks between color-coded evaluators and brute-force enumeration."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .. import rng as _rng
from ..colorcode import (all_colorings, nbw_per_coloring, rainbow_probability, saw_per_coloring,
                         sample_coloring)
from ..detection import cycle_statistic_colorcoded
from ..errors import CapExceededError
from ..exact_walks import (MATRIX_CAP_ELL, MATRIX_CAP_N, TENSOR_CAP_N, cycle_statistic_exact,
                           enumerate_nbw, enumerate_saw, nbw_matrix_exact, saw_matrix_exact,
                           tensor_estimate_exact)
from ..tensor import tensor_amplify, tensor_per_coloring

TOL = 1e-9
# exhaustive coloring averages visit q**n colorings
MAX_COLORINGS = 200_000


@dataclass
class CheckResult:
    name: str
    max_error: float
    tolerance: float
    seconds: float

    @property
    def passed(self) -> bool:
        return self.max_error <= self.tolerance


def _sym(n, g):
    A = g.standard_normal((n, n))
    Y = A + A.T
    np.fill_diagonal(Y, 0.0)
    return Y


def _exhaustive(n, q):
    if q**n > MAX_COLORINGS:
        raise CapExceededError(f"{q}^{n} colorings exceeds the exhaustive cap {MAX_COLORINGS}")
    return list(all_colorings(n, q))


def saw_unbiasedness(n, ell, g):
    Y = _sym(n, g)
    q = ell + 1
    cols = _exhaustive(n, q)
    avg = sum(saw_per_coloring(Y, c, ell) for c in cols) / len(cols)
    return np.max(np.abs(avg - rainbow_probability(q) * saw_matrix_exact(Y, ell)))


def saw_identity(n, ell, g):
    worst = 0.0
    for _ in range(5):
        Y = _sym(n, g)
        c = sample_coloring(n, ell + 1, g)
        ref = np.zeros((n, n))
        for i in range(n):
            for j in range(n):
                if i != j:
                    for w in enumerate_saw(n, i, j, ell):
                        if c.is_rainbow(w):
                            ref[i, j] += np.prod(Y[list(w[:-1]), list(w[1:])])
        worst = max(worst, np.max(np.abs(saw_per_coloring(Y, c, ell) - ref)))
    return worst


def nbw_degeneration(n, ell, g):
    Y = _sym(n, g)
    c = sample_coloring(n, ell + 1, g)
    return np.max(np.abs(nbw_per_coloring(Y, c, ell, max(ell - 1, 1))
                         - saw_per_coloring(Y, c, ell)))


def nbw_unbiasedness(n, ell, g, k=1):
    Y = _sym(n, g)
    cols = _exhaustive(n, ell + 1)
    avg = sum(nbw_per_coloring(Y, c, ell, k) for c in cols) / len(cols)
    return np.max(np.abs(avg - nbw_matrix_exact(Y, ell, k, q=ell + 1)))


def cycle_unbiasedness(n, ell, g):
    ell = max(ell, 3)
    Y = _sym(n, g)
    cols = _exhaustive(n, ell)
    est = cycle_statistic_colorcoded(Y, ell, len(cols), 0, colorings=cols)
    return abs(est - cycle_statistic_exact(Y, ell))


def tensor_unbiasedness(n, ell, g):
    ell = min(ell, 2)
    Y = g.standard_normal((n, n, n))
    q = 3 * ell - 1
    cols = _exhaustive(n, q)
    avg = sum(tensor_per_coloring(Y, c, ell) for c in cols) / (len(cols) * rainbow_probability(q))
    return np.max(np.abs(avg - tensor_estimate_exact(Y, ell)))


def amplify_loop(n, ell, g):
    Y = g.standard_normal((n, n, n))
    y = g.standard_normal(n)
    ref = np.zeros(n)
    for i in range(n):
        for a in range(n):
            for b in range(n):
                ref[i] += Y[i, a, b] * y[a] * y[b]
    return np.max(np.abs(tensor_amplify(Y, y) - ref))


# name -> (function, default n, default ell, tensor?)
CHECKS = {
    "saw-unbiasedness": (saw_unbiasedness, 5, 3, False),
    "saw-identity": (saw_identity, 6, 4, False),
    "nbw-degeneration": (nbw_degeneration, 6, 4, False),
    "nbw-unbiasedness": (nbw_unbiasedness, 5, 3, False),
    "cycle-unbiasedness": (cycle_unbiasedness, 5, 3, False),
    "tensor-unbiasedness": (tensor_unbiasedness, 5, 2, True),
    "amplify-loop": (amplify_loop, 6, 1, True),
}


def check_caps(n: int | None, ell: int | None, tensor: bool) -> None:
    cap_n = TENSOR_CAP_N if tensor else MATRIX_CAP_N
    if n is not None and n > cap_n:
        raise CapExceededError(f"n={n} exceeds the enumeration cap n<={cap_n}")
    if ell is not None and ell > MATRIX_CAP_ELL:
        raise CapExceededError(f"ell={ell} exceeds the enumeration cap ell<={MATRIX_CAP_ELL}")


def run_checks(names=None, n: int | None = None, ell: int | None = None, seed: int = 0,
               tol: float = TOL) -> list[CheckResult]:
    names = list(CHECKS) if not names else names
    for name in names:
        if name not in CHECKS:
            raise KeyError(f"unknown check {name!r}; choose from {sorted(CHECKS)}")
        check_caps(n, ell, CHECKS[name][3])
    out = []
    for idx, name in enumerate(names):
        fn, dn, dl, _ = CHECKS[name]
        g = _rng.generator(seed, idx)
        t0 = time.perf_counter()
        err = float(fn(n or dn, ell or dl, g))
        out.append(CheckResult(name, err, tol, time.perf_counter() - t0))
    return out
