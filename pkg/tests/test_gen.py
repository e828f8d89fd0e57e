"""Sampling of assignments and labeled graphs."""

import math

import numpy as np
import pytest

from lsbm.exceptions import SizeMismatch
from lsbm.gen import GenOptions, generate, sample_assignment, sample_graph
from lsbm.harness import builtin_model
from lsbm.iac import block_label_counts
from lsbm.model import LsbmParams
from lsbm.rng import make_rng


def model3_expected_edges():
    # sum over unordered pairs of p(sigma_u, sigma_v, 1) for 10 clusters of 400
    within = 10 * math.comb(400, 2)
    total = math.comb(4000, 2)
    return within * 0.032 + (total - within) * 0.005


class TestSampleAssignment:
    def test_single_cluster(self):
        P = LsbmParams.binary([1.0], [[0.5]])
        sigma = sample_assignment(P, 50, GenOptions(), make_rng(0))
        assert (sigma == 0).all()

    def test_fixed_sizes_model1(self):
        m = builtin_model(1)
        sigma = sample_assignment(m.params, m.n, GenOptions(sizes=m.sizes), make_rng(3))
        np.testing.assert_array_equal(np.bincount(sigma), [250] * 10)

    def test_fixed_sizes_is_a_permutation(self):
        m = builtin_model(2)
        a = sample_assignment(m.params, m.n, GenOptions(sizes=m.sizes), make_rng(3))
        b = sample_assignment(m.params, m.n, GenOptions(sizes=m.sizes), make_rng(4))
        assert not np.array_equal(a, b)
        np.testing.assert_array_equal(np.sort(a), np.sort(b))

    def test_multinomial_concentration(self):
        # binomial(10^4, 1/2): P(|X - 5000| > 200) = P(|Z| > 4) ~ 6e-5
        P = LsbmParams.binary([0.5, 0.5], [[0.5, 0.5], [0.5, 0.5]])
        ok = 0
        for seed in range(1000):
            sigma = sample_assignment(P, 10_000, GenOptions(), make_rng(seed))
            ok += abs(np.count_nonzero(sigma == 0) - 5000) <= 200
        assert ok >= 990

    @pytest.mark.parametrize("sizes", [(10, 10), (10, 10, 5), (25, 0, 0), (-5, 30)])
    def test_size_mismatch(self, sizes):
        P = LsbmParams.binary([0.5, 0.5], [[0.5, 0.5], [0.5, 0.5]])
        with pytest.raises(SizeMismatch):
            sample_assignment(P, 25, GenOptions(sizes=sizes), make_rng(0))


class TestSampleGraph:
    def test_all_zero_label(self):
        P = LsbmParams.binary([0.5, 0.5], np.zeros((2, 2)))
        _, g = generate(P, 40, GenOptions(1))
        assert g.n_edges == 0

    @pytest.mark.parametrize("method", ["dense", "sparse"])
    def test_complete(self, method):
        P = LsbmParams.binary([1.0], [[1.0]])
        _, g = generate(P, 3, GenOptions(1, method=method))
        assert g.n_edges == 3
        assert g.to_text() == "3 1\n0 1 1\n0 2 1\n1 2 1\n"

    def test_same_seed_byte_identical(self, tmp_path):
        m = builtin_model(4)
        for name in ("a", "b"):
            _, g = generate(m.params, m.n, GenOptions(11, m.sizes))
            g.save(tmp_path / f"{name}.txt")
        assert (tmp_path / "a.txt").read_bytes() == (tmp_path / "b.txt").read_bytes()

    def test_dense_consumes_one_uniform_per_pair(self):
        # the label of pair (u, v) is decided by the ((u, v)-th) uniform in lexicographic order
        P = LsbmParams([0.5, 0.5], np.array([[[0.5, 0.3, 0.2]] * 2] * 2))
        sigma = np.array([0, 1, 0, 1, 1])
        g = sample_graph(P, sigma, make_rng(9), "dense")
        r = make_rng(9).random(10)
        labels = np.searchsorted([0.5, 0.8], r, side="right")
        iu = np.triu_indices(5, 1)
        D = g.dense_labels()
        np.testing.assert_array_equal(D[iu], labels)

    def test_model3_edge_count(self):
        expected = model3_expected_edges()
        assert expected == pytest.approx(61536.0)
        m = builtin_model(3)
        ok = 0
        for seed in range(100):
            _, g = generate(m.params, m.n, GenOptions(seed, m.sizes))
            ok += abs(g.n_edges - expected) <= 3 * math.sqrt(expected)
        assert ok >= 99

    def test_label_frequencies_converge(self):
        p = np.array([[[0.70, 0.20, 0.10], [0.85, 0.05, 0.10]],
                      [[0.85, 0.05, 0.10], [0.60, 0.30, 0.10]]])
        P = LsbmParams([0.5, 0.5], p)
        pairs = np.array([[1000 * 999, 1000 * 1000], [1000 * 1000, 1000 * 999]], dtype=float)
        ok = 0
        for seed in range(100):
            sigma, g = generate(P, 2000, GenOptions(seed, (1000, 1000)))
            counts = block_label_counts(g, sigma, 2).astype(float)
            counts[:, :, 0] = pairs - counts[:, :, 1:].sum(axis=2)
            freq = counts / pairs[:, :, None]
            bound = 5 * np.sqrt(p * (1 - p) / pairs[:, :, None])
            ok += bool(np.all(np.abs(freq - p) <= bound))
        assert ok >= 95

    def test_sparse_path_distribution(self):
        # geometric skipping must reproduce the per-block, per-label rates
        p1 = np.array([[8e-4, 2e-4], [2e-4, 6e-4]])
        p2 = np.array([[1e-4, 3e-4], [3e-4, 2e-4]])
        P = LsbmParams([0.5, 0.5], np.stack([1 - p1 - p2, p1, p2], axis=-1))
        n, half = 4000, 2000
        pairs = np.array([[half * (half - 1), half * half], [half * half, half * (half - 1)]], float)
        totals = np.zeros((2, 2, 3))
        reps = 40
        for seed in range(reps):
            sigma, g = generate(P, n, GenOptions(seed, (half, half), method="sparse"))
            totals += block_label_counts(g, sigma, 2)
        expected = reps * pairs[:, :, None] * P.p
        for l in (1, 2):
            z = (totals[:, :, l] - expected[:, :, l]) / np.sqrt(expected[:, :, l])
            assert np.all(np.abs(z) < 5), z

    def test_auto_method_selection(self):
        sparse = LsbmParams.binary([0.5, 0.5], [[1e-3, 5e-4], [5e-4, 1e-3]])
        a = generate(sparse, 500, GenOptions(3, (250, 250)))[1]
        b = generate(sparse, 500, GenOptions(3, (250, 250), method="sparse"))[1]
        assert a == b
