import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heavyspike.colorcode import (ColorCodeConfig, ColorCodedOperator, Coloring, all_colorings,
                                  dump_per_coloring, load_per_coloring, nbw_colorcoded,
                                  nbw_operator_apply, nbw_per_coloring, rainbow_probability,
                                  sample_colorings, saw_colorcoded, saw_operator_apply,
                                  saw_per_coloring)
from heavyspike.errors import CapExceededError, InvalidParameterError
from heavyspike.exact_walks import enumerate_nbw, enumerate_saw, nbw_matrix_exact, saw_matrix_exact


def sym(n, seed):
    g = np.random.default_rng(seed)
    A = g.standard_normal((n, n))
    Y = A + A.T
    np.fill_diagonal(Y, 0)
    return Y


def rand_coloring(n, q, seed):
    return Coloring(q, np.random.default_rng(seed).integers(0, q, n))


def chi(Y, w):
    return math.prod(Y[a, b] for a, b in zip(w, w[1:]))


def saw_filtered(Y, c, ell):
    n = Y.shape[0]
    out = np.zeros((n, n))
    for i, j in itertools.permutations(range(n), 2):
        out[i, j] = sum(chi(Y, w) for w in enumerate_saw(n, i, j, ell) if c.is_rainbow(w))
    return out


def nbw_filtered(Y, c, ell, k):
    n = Y.shape[0]
    out = np.zeros((n, n))
    for i, j in itertools.product(range(n), repeat=2):
        for w in enumerate_nbw(n, i, j, ell, k):
            if all(c.is_rainbow(w[s:s + k + 2]) for s in range(len(w) - 1)):
                out[i, j] += chi(Y, w)
    return out


def transfer_matrix_saw(Y, c, ell):
    """Literal dense construction over all (vertex, color set) states."""
    n, q = Y.shape[0], c.q
    states = [(v, S) for v in range(n) for r in range(1, q + 1)
              for S in itertools.combinations(range(q), r) if c.assignment[v] in S]
    index = {s: t for t, s in enumerate(states)}
    M = np.zeros((len(states), len(states)))
    for (u, S), a in index.items():
        for v in range(n):
            cv = int(c.assignment[v])
            if cv not in S:
                M[a, index[(v, tuple(sorted(S + (cv,))))]] = Y[u, v]
    H = np.zeros((n, len(states)))
    N = np.zeros((len(states), n))
    for (v, S), a in index.items():
        if S == (int(c.assignment[v]),):
            H[v, a] = 1
        if len(S) == ell + 1:
            N[a, v] = 1
    return H @ np.linalg.matrix_power(M, ell) @ N


# ---------------------------------------------------------------------------


def test_rainbow_probability():
    assert rainbow_probability(3) == pytest.approx(2 / 9, abs=1e-15)
    assert rainbow_probability(5, 2) == pytest.approx(20 / 25, abs=1e-15)


def test_sample_colorings_deterministic():
    a = sample_colorings(30, 4, 5, seed=9)
    b = sample_colorings(30, 4, 5, seed=9)
    assert all(np.array_equal(x.assignment, y.assignment) for x, y in zip(a, b))
    assert all(x.assignment.min() >= 0 and x.assignment.max() < 4 for x in a)
    # prefix stable: coloring t does not depend on how many are drawn
    c = sample_colorings(30, 4, 2, seed=9)
    assert np.array_equal(c[1].assignment, a[1].assignment)


def test_monochrome_coloring_is_zero():
    Y = sym(5, 0)
    c = Coloring(3, np.zeros(5, dtype=int))
    assert np.all(saw_per_coloring(Y, c, 2) == 0)
    assert np.all(nbw_per_coloring(Y, c, 2, 1) == 0)


def test_single_rainbow_walk():
    Y = np.zeros((3, 3))
    Y[0, 2] = Y[2, 0] = Y[2, 1] = Y[1, 2] = 2
    P = saw_per_coloring(Y, Coloring(3, np.array([0, 1, 2])), 2)
    assert P[0, 1] == 4


def test_per_coloring_seeded_example():
    Y, c = sym(5, 3), rand_coloring(5, 3, 11)
    assert np.max(np.abs(saw_per_coloring(Y, c, 2) - saw_filtered(Y, c, 2))) <= 1e-12


@pytest.mark.parametrize("seed", range(20))
def test_per_coloring_identity(seed):
    n, ell = 6, 4
    Y, c = sym(n, seed), rand_coloring(n, ell + 1, 1000 + seed)
    P = saw_per_coloring(Y, c, ell)
    assert np.max(np.abs(P - saw_filtered(Y, c, ell))) <= 1e-12
    assert np.max(np.abs(P - P.T)) <= 1e-12


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("ell", [1, 2, 3, 4])
def test_transfer_matrix_matches_dp(seed, ell):
    Y, c = sym(5, seed), rand_coloring(5, ell + 1, 50 + seed)
    assert np.max(np.abs(transfer_matrix_saw(Y, c, ell) - saw_per_coloring(Y, c, ell))) <= 1e-12


def test_palette_mismatch():
    Y = sym(5, 0)
    with pytest.raises(InvalidParameterError):
        saw_per_coloring(Y, rand_coloring(5, 3, 0), 3)
    with pytest.raises(InvalidParameterError):
        nbw_per_coloring(Y, rand_coloring(5, 5, 0), 3, 1)


def test_exhaustive_unbiasedness_ell2():
    Y = sym(5, 1)
    cols = list(all_colorings(5, 3))
    assert len(cols) == 243
    est = saw_colorcoded(Y, ColorCodeConfig(ell=2), colorings=cols)
    assert np.max(np.abs(est - saw_matrix_exact(Y, 2))) <= 1e-10


def test_exhaustive_average_pre_rescale():
    Y = sym(5, 2)
    cols = list(all_colorings(5, 4))
    avg = sum(saw_per_coloring(Y, c, 3) for c in cols) / len(cols)
    assert np.max(np.abs(avg - rainbow_probability(4) * saw_matrix_exact(Y, 3))) <= 1e-10


def test_zero_input():
    cfg = ColorCodeConfig(ell=3, k=1, num_colorings=4, seed=0)
    assert np.all(saw_colorcoded(np.zeros((6, 6)), cfg) == 0)
    assert np.all(nbw_colorcoded(np.zeros((6, 6)), cfg) == 0)


def test_monte_carlo_accuracy():
    # nonnegative weights: walk sums do not cancel, so relative error is meaningful
    A = np.random.default_rng(8).random((6, 6))
    Y = np.triu(A, 1) + np.triu(A, 1).T
    exact = saw_matrix_exact(Y, 3)
    est = saw_colorcoded(Y, ColorCodeConfig(ell=3, num_colorings=2000, seed=4))
    big = np.abs(exact) > 0.1
    assert np.max(np.abs(est - exact)[big] / np.abs(exact)[big]) <= 0.2


def test_operator_apply():
    n, ell = 5, 2
    Y = sym(n, 3)
    cols = list(all_colorings(n, ell + 1))
    assert np.all(saw_operator_apply(Y, cols, ell, np.zeros(n)) == 0)
    e1 = np.eye(n)[0]
    assert np.max(np.abs(saw_operator_apply(Y, cols, ell, e1) - saw_matrix_exact(Y, ell)[:, 0])) <= 1e-10
    g = np.random.default_rng(0)
    z1, z2 = g.standard_normal(n), g.standard_normal(n)
    sub = cols[:40]
    lhs = saw_operator_apply(Y, sub, ell, z1 + z2)
    rhs = saw_operator_apply(Y, sub, ell, z1) + saw_operator_apply(Y, sub, ell, z2)
    assert np.max(np.abs(lhs - rhs)) <= 1e-9
    lhs = nbw_operator_apply(Y, sub, ell, 1, z1 + z2)
    rhs = nbw_operator_apply(Y, sub, ell, 1, z1) + nbw_operator_apply(Y, sub, ell, 1, z2)
    assert np.max(np.abs(lhs - rhs)) <= 1e-9


def test_operator_matches_materialized():
    Y = sym(20, 5)
    cols = sample_colorings(20, 5, 6, seed=1)
    op = ColorCodedOperator(Y, cols, 4, "saw")
    Z = np.random.default_rng(1).standard_normal((20, 3))
    assert np.max(np.abs(op.matmat(Z) - op.materialize() @ Z)) <= 1e-9
    op_nocache = ColorCodedOperator(Y, cols, 4, "saw", cache_bytes=0)
    assert np.max(np.abs(op_nocache.matmat(Z) - op.matmat(Z))) <= 1e-12


def test_thread_count_does_not_change_result(monkeypatch):
    Y = sym(15, 6)
    cols = sample_colorings(15, 5, 7, seed=2)
    monkeypatch.setenv("HEAVYSPIKE_THREADS", "1")
    a = ColorCodedOperator(Y, cols, 4, "nbw", 1).materialize()
    monkeypatch.setenv("HEAVYSPIKE_THREADS", "4")
    b = ColorCodedOperator(Y, cols, 4, "nbw", 1).materialize()
    assert np.array_equal(a, b)


@pytest.mark.parametrize("seed", range(5))
def test_nbw_degenerates_to_saw(seed):
    n, ell = 6, 4
    Y, c = sym(n, seed), rand_coloring(n, ell + 1, seed)
    for k in (ell - 1, ell, ell + 2):
        assert np.max(np.abs(nbw_per_coloring(Y, c, ell, k) - saw_per_coloring(Y, c, ell))) <= 1e-12


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("k", [1, 2])
def test_nbw_per_coloring_identity(seed, k):
    n, ell = 6, 4
    Y, c = sym(n, 40 + seed), rand_coloring(n, ell + 1, 70 + seed)
    assert np.max(np.abs(nbw_per_coloring(Y, c, ell, k) - nbw_filtered(Y, c, ell, k))) <= 1e-12


def test_nbw_exhaustive_unbiasedness():
    Y = sym(5, 12)
    cols = list(all_colorings(5, 4))
    est = nbw_colorcoded(Y, ColorCodeConfig(ell=3, k=1), colorings=cols)
    assert np.max(np.abs(est - nbw_matrix_exact(Y, 3, 1, q=4))) <= 1e-10


def test_nbw_full_window_matches_saw_average():
    Y = sym(5, 13)
    cols = list(all_colorings(5, 4))
    nbw = nbw_colorcoded(Y, ColorCodeConfig(ell=3, k=2), colorings=cols)
    avg = sum(saw_per_coloring(Y, c, 3) for c in cols) / len(cols)
    assert np.max(np.abs(nbw - avg)) <= 1e-10


def test_variance_decreases_with_colorings():
    Y = sym(6, 21)
    exact = saw_matrix_exact(Y, 3)
    mse = []
    for C in (25, 50, 100, 200, 400, 800):
        errs = [np.mean((saw_colorcoded(Y, ColorCodeConfig(ell=3, num_colorings=C, seed=s))
                         - exact) ** 2) for s in range(20)]
        mse.append(np.mean(errs))
    # allow Monte Carlo wiggle between neighbours, require the overall trend
    assert all(b < 1.3 * a for a, b in zip(mse, mse[1:]))
    assert mse[-1] < mse[0] / 8


def test_state_budget():
    cfg = ColorCodeConfig(ell=3, num_colorings=1, state_budget=10)
    with pytest.raises(CapExceededError):
        saw_colorcoded(sym(6, 0), cfg)


def test_dump_round_trip(tmp_path):
    Y = sym(7, 3)
    cols = sample_colorings(7, 4, 3, seed=5)
    path = tmp_path / "dump.bin"
    assert dump_per_coloring(Y, cols, 3, "nbw", path, k=1) == 3
    header, mats = load_per_coloring(path)
    assert header["count"] == 3 and header["family"] == "nbw"
    for c, M in zip(cols, mats):
        assert np.array_equal(M, nbw_per_coloring(Y, c, 3, 1))
    assert open(path, "rb").read(8) == b"HSPIKE01"


@settings(max_examples=30, deadline=None)
@given(n=st.integers(3, 6), ell=st.integers(1, 4), seed=st.integers(0, 2**32 - 1))
def test_property_dp_equals_enumeration(n, ell, seed):
    Y, c = sym(n, seed), rand_coloring(n, ell + 1, seed + 1)
    assert np.max(np.abs(saw_per_coloring(Y, c, ell) - saw_filtered(Y, c, ell))) <= 1e-12


@settings(max_examples=20, deadline=None)
@given(n=st.integers(3, 5), ell=st.integers(2, 4), k=st.integers(1, 3),
       seed=st.integers(0, 2**32 - 1))
def test_property_nbw_dp_equals_enumeration(n, ell, k, seed):
    Y, c = sym(n, seed), rand_coloring(n, ell + 1, seed + 1)
    assert np.max(np.abs(nbw_per_coloring(Y, c, ell, k) - nbw_filtered(Y, c, ell, k))) <= 1e-12
