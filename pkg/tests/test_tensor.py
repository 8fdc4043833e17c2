import itertools

import numpy as np
import pytest

from heavyspike.colorcode import Coloring, all_colorings, rainbow_probability
from heavyspike.errors import InvalidParameterError
from heavyspike.exact_walks import enumerate_tensor_hyperpaths, tensor_estimate_exact
from heavyspike.model import NoiseModel, PlantedVector, generate_spiked_tensor
from heavyspike.spectral import squared_correlation
from heavyspike.tensor import (TensorEstimatorConfig, tensor_amplify, tensor_colorcoded_estimate,
                               tensor_detect_degree2, tensor_per_coloring, tensor_recover,
                               tensor_unfold_estimate)


def rank_one(x):
    return np.einsum("i,j,k->ijk", x, x, x)


def test_config_validation():
    TensorEstimatorConfig(ell=2).validate(5)
    with pytest.raises(InvalidParameterError):
        TensorEstimatorConfig(ell=2).validate(4)
    with pytest.raises(InvalidParameterError):
        TensorEstimatorConfig(ell=2, num_colorings=0).validate(10)
    assert TensorEstimatorConfig(ell=3).q == 8


def test_exhaustive_equals_exact():
    n = 5
    Y = np.random.default_rng(0).standard_normal((n, n, n))
    cols = list(all_colorings(n, 5))
    assert len(cols) == 3125
    est = tensor_colorcoded_estimate(Y, TensorEstimatorConfig(ell=2), colorings=cols)
    assert np.max(np.abs(est - tensor_estimate_exact(Y, 2))) <= 1e-9


def test_per_coloring_matches_filtered_enumeration():
    n = 6
    g = np.random.default_rng(3)
    for trial in range(5):
        Y = g.standard_normal((n, n, n))
        c = Coloring(5, g.integers(0, 5, n))
        got = tensor_per_coloring(Y, c, 2)
        for i in range(n):
            ref = 0.0
            for h in enumerate_tensor_hyperpaths(n, i, 2):
                if c.is_rainbow(h.vertices):
                    ref += np.prod([Y[e] for e in h.hyperedges])
            assert abs(got[i] - ref) <= 1e-12


def test_ell_one_exhaustive():
    n = 5
    Y = np.random.default_rng(2).standard_normal((n, n, n))
    cols = list(all_colorings(n, 2))
    est = tensor_colorcoded_estimate(Y, TensorEstimatorConfig(ell=1), colorings=cols)
    assert np.max(np.abs(est - tensor_estimate_exact(Y, 1))) <= 1e-10


def test_zero_tensor():
    cfg = TensorEstimatorConfig(ell=2, num_colorings=5, seed=1)
    assert np.all(tensor_colorcoded_estimate(np.zeros((6, 6, 6)), cfg) == 0)
    assert np.all(tensor_amplify(np.zeros((6, 6, 6)), np.ones(6)) == 0)
    assert tensor_detect_degree2(np.zeros((6, 6, 6))) == 0


def test_monte_carlo_accuracy():
    n = 8
    Y = np.random.default_rng(1).standard_normal((n, n, n))
    est = tensor_colorcoded_estimate(Y, TensorEstimatorConfig(ell=2, num_colorings=5000, seed=3))
    exact = tensor_estimate_exact(Y, 2)
    big = np.abs(exact) >= np.median(np.abs(exact))
    assert np.max(np.abs(est - exact)[big] / np.abs(exact)[big]) <= 0.3


def test_rainbow_rescale_constant():
    cfg = TensorEstimatorConfig(ell=2)
    assert rainbow_probability(cfg.q) == pytest.approx(120 / 3125, abs=1e-15)


def test_unfold_rank_one():
    x = np.random.default_rng(4).standard_normal(10)
    v, degenerate = tensor_unfold_estimate(rank_one(x), seed=0)
    assert not degenerate
    assert squared_correlation(v, x) >= 1 - 1e-9


def test_unfold_zero_is_flagged():
    v, degenerate = tensor_unfold_estimate(np.zeros((5, 5, 5)), seed=0)
    assert degenerate
    assert abs(np.linalg.norm(v) - 1) < 1e-12


def test_unfold_directional():
    vals = []
    for t in range(10):
        inst = generate_spiked_tensor(40, 8.0, "gaussian-normalized", NoiseModel.gaussian(), 300 + t)
        v, _ = tensor_unfold_estimate(inst.Y, seed=t)
        vals.append(squared_correlation(v, inst.spike.values))
    assert np.mean(vals) >= 0.2


def test_amplify_rank_one():
    x = np.random.default_rng(5).standard_normal(7)
    xhat = tensor_amplify(rank_one(x), x / np.linalg.norm(x))
    assert squared_correlation(xhat, x) >= 1 - 1e-12
    assert np.allclose(xhat, x * (x @ x), rtol=1e-12)


def test_amplify_triple_loop():
    n = 6
    g = np.random.default_rng(6)
    Y, y = g.standard_normal((n, n, n)), g.standard_normal(n)
    ref = np.zeros(n)
    for i, a, b in itertools.product(range(n), repeat=3):
        ref[i] += Y[i, a, b] * y[a] * y[b]
    assert np.max(np.abs(tensor_amplify(Y, y) - ref)) <= 1e-12


def test_amplify_linear_in_tensor():
    g = np.random.default_rng(7)
    Y1, Y2, y = g.standard_normal((6, 6, 6)), g.standard_normal((6, 6, 6)), g.standard_normal(6)
    lhs = tensor_amplify(Y1 + Y2, y)
    assert np.max(np.abs(lhs - tensor_amplify(Y1, y) - tensor_amplify(Y2, y))) <= 1e-12


def test_amplify_zero_vector():
    with pytest.raises(InvalidParameterError):
        tensor_amplify(np.ones((3, 3, 3)), np.zeros(3))


def test_degree2_examples():
    assert tensor_detect_degree2(np.ones((4, 4, 4))) == 4
    x = np.array([1.0, -2.0, 0.5, 3.0, 1.5])
    ref = sum((x[i] * x[j] * x[k]) ** 2 for i, j, k in itertools.combinations(range(5), 3))
    assert abs(tensor_detect_degree2(rank_one(x)) - ref) <= 1e-10
    Y = np.random.default_rng(8).standard_normal((5, 5, 5))
    ref = sum(Y[i, j, k] * Y[k, j, i] for i, j, k in itertools.combinations(range(5), 3))
    assert abs(tensor_detect_degree2(Y) - ref) <= 1e-12


def test_degree2_separation():
    planted, null = [], []
    for t in range(20):
        p = generate_spiked_tensor(40, 8.0, "gaussian-normalized", NoiseModel.gaussian(), 700 + t)
        z = generate_spiked_tensor(40, 0.0, "gaussian-normalized", NoiseModel.gaussian(), 900 + t)
        planted.append(tensor_detect_degree2(p.Y))
        null.append(tensor_detect_degree2(z.Y))
    pooled = np.sqrt((np.var(planted, ddof=1) + np.var(null, ddof=1)) / 2)
    assert np.mean(planted) - np.mean(null) > 3 * pooled


def test_recover_deterministic():
    inst = generate_spiked_tensor(12, 6.0, "gaussian-normalized", NoiseModel.gaussian(), 1)
    cfg = TensorEstimatorConfig(ell=2, num_colorings=16, seed=5)
    a, b = tensor_recover(inst.Y, cfg), tensor_recover(inst.Y, cfg)
    assert np.array_equal(a, b)
    assert abs(np.linalg.norm(a) - 1) < 1e-12


def test_recover_noiseless():
    x = PlantedVector.from_values(np.random.default_rng(9).standard_normal(10))
    inst = generate_spiked_tensor(10, 3.0, x, NoiseModel.zero(), 0)
    v = tensor_recover(inst.Y, TensorEstimatorConfig(ell=2, num_colorings=64, seed=0))
    assert squared_correlation(v, inst.spike.values) >= 1 - 1e-9
