"""Parameter validation, assumption diagnostics and the graph text format."""

import json
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lsbm.exceptions import DegenerateP, GraphFormatError, InvalidParams
from lsbm.harness import builtin_model
from lsbm.model import (AsymmetricTensor, BadAlpha, LabeledGraph, LsbmParams,
                        NonStochasticRow, assumption_report, param_violations,
                        validate_params)


def random_params(rng, K, L):
    alpha = rng.dirichlet(np.ones(K))
    p = rng.dirichlet(np.ones(L + 1), size=(K, K))
    iu = np.triu_indices(K, 1)
    p[iu[1], iu[0]] = p[iu]
    return LsbmParams(alpha, p)


class TestValidateParams:
    def test_valid_identity(self):
        P = LsbmParams.binary([0.5, 0.5], [[0.3, 0.1], [0.1, 0.3]])
        assert validate_params(P) is P

    def test_idempotent(self):
        P = random_params(np.random.default_rng(0), 3, 2)
        assert validate_params(validate_params(P)) is P
        assert param_violations(P) == []

    def test_asymmetric(self):
        p = np.array([[[0.7, 0.3], [0.6, 0.4]], [[0.5, 0.5], [0.7, 0.3]]])
        with pytest.raises(InvalidParams) as exc:
            validate_params(LsbmParams([0.5, 0.5], p))
        assert AsymmetricTensor(0, 1, 0) in exc.value.violations
        assert AsymmetricTensor(0, 1, 1) in exc.value.violations

    def test_bad_alpha(self):
        P = LsbmParams.binary([0.6, 0.6], [[0.3, 0.1], [0.1, 0.3]])
        with pytest.raises(InvalidParams) as exc:
            validate_params(P)
        assert any(isinstance(v, BadAlpha) for v in exc.value.violations)

    def test_non_stochastic_reports_every_pair(self):
        p = np.full((2, 2, 2), 0.6)
        with pytest.raises(InvalidParams) as exc:
            validate_params(LsbmParams([0.5, 0.5], p))
        rows = {(v.i, v.j) for v in exc.value.violations if isinstance(v, NonStochasticRow)}
        assert rows == {(0, 0), (0, 1), (1, 0), (1, 1)}

    def test_zero_alpha_rejected(self):
        P = LsbmParams.binary([1.0, 0.0], [[0.3, 0.1], [0.1, 0.3]])
        with pytest.raises(InvalidParams):
            validate_params(P)


class TestParamsJson:
    @pytest.mark.filterwarnings("ignore:label 0")
    def test_round_trip(self, tmp_path):
        P = random_params(np.random.default_rng(1), 3, 2)
        P.save(tmp_path / "p.json")
        Q = LsbmParams.load(tmp_path / "p.json")
        np.testing.assert_allclose(Q.p, P.p, atol=1e-15)
        np.testing.assert_allclose(Q.alpha, P.alpha, atol=1e-15)

    def test_out_of_tolerance_rejected(self, tmp_path):
        doc = {"K": 1, "L": 1, "alpha": [1.0], "p": [[[0.7, 0.31]]]}
        (tmp_path / "p.json").write_text(json.dumps(doc))
        with pytest.raises(InvalidParams):
            LsbmParams.load(tmp_path / "p.json")

    def test_within_tolerance_normalized(self):
        doc = {"K": 1, "L": 1, "alpha": [1.0], "p": [[[0.7, 0.3 + 5e-13]]]}
        P = LsbmParams.from_dict(doc)
        assert abs(P.p.sum() - 1.0) < 1e-15

    def test_shape_mismatch(self):
        with pytest.raises(InvalidParams):
            LsbmParams.from_dict({"K": 2, "L": 1, "alpha": [1.0], "p": [[[1, 0]]]})

    def test_label_zero_not_most_frequent_warns(self):
        doc = {"K": 1, "L": 1, "alpha": [1.0], "p": [[[0.2, 0.8]]]}
        with pytest.warns(UserWarning):
            LsbmParams.from_dict(doc)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            LsbmParams.from_dict({"K": 1, "L": 1, "alpha": [1.0], "p": [[[0.8, 0.2]]]})


class TestAssumptionReport:
    def test_constant_p(self):
        P = LsbmParams.binary([0.5, 0.5], [[0.2, 0.2], [0.2, 0.2]])
        r = assumption_report(P, 100, 1.0)
        assert r.eta == 1.0
        assert r.eps == 0.0

    def test_model1_direct_evaluation(self):
        r = assumption_report(builtin_model(1).params, 2500, 1.0)
        # largest ratio over all labels is 0.48/0.32 on label 1 (0.68/0.52 on label 0)
        assert r.eta == pytest.approx(0.48 / 0.32, rel=1e-14)
        # two differing columns, each contributes 0.16^2
        assert r.eps == pytest.approx(2 * 0.16**2 / 0.48**2, rel=1e-12)
        assert r.p_bar == 0.48
        # min n p = 800 against (n p_bar)^kappa = 1200^kappa
        assert not r.kappa_ok
        assert assumption_report(builtin_model(1).params, 2500, 0.9).kappa_ok

    def test_single_cluster_eps_infinite(self):
        P = LsbmParams.binary([1.0], [[0.3]])
        assert math.isinf(assumption_report(P, 10, 1.0).eps)

    def test_zero_denominator_sentinel(self):
        P = LsbmParams.binary([0.5, 0.5], [[0.3, 0.0], [0.0, 0.3]])
        assert math.isinf(assumption_report(P, 10, 1.0).eta)

    def test_degenerate(self):
        P = LsbmParams.binary([0.5, 0.5], [[0.0, 0.0], [0.0, 0.0]])
        with pytest.raises(DegenerateP):
            assumption_report(P, 10, 1.0)

    def test_kappa(self):
        P = builtin_model(3).params
        # min n p = 20, n p_bar = 128: 20 >= 128**0.6 (~18.4) but not 128**0.7
        assert assumption_report(P, 4000, 0.6).kappa_ok
        assert not assumption_report(P, 4000, 0.7).kappa_ok

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), K=st.integers(2, 4), L=st.integers(1, 3))
    def test_relabel_invariance(self, seed, K, L):
        rng = np.random.default_rng(seed)
        P = random_params(rng, K, L)
        perm = rng.permutation(K)
        a, b = assumption_report(P, 50, 0.5), assumption_report(P.permuted(perm), 50, 0.5)
        assert a.eta == b.eta
        assert a.eps == b.eps


class TestLabeledGraph:
    def test_text_round_trip_bit_exact(self):
        g = LabeledGraph.from_edges(6, 2, [3, 0, 1], [0, 5, 2], [2, 1, 1])
        text = g.to_text()
        assert text == "6 2\n0 3 2\n0 5 1\n1 2 1\n"
        assert LabeledGraph.from_text(text).to_text() == text

    def test_empty(self):
        g = LabeledGraph.empty(4)
        assert g.to_text() == "4 1\n"
        assert LabeledGraph.from_text("4 1\n") == g
        np.testing.assert_array_equal(g.degrees, 0)

    @pytest.mark.parametrize("text", [
        "3 1\n1 0 1\n",          # u > v
        "3 1\n0 0 1\n",          # self pair
        "3 1\n0 1 2\n",          # label out of range
        "3 1\n0 1 1\n0 1 1\n",   # duplicate
        "3 1\n1 2 1\n0 1 1\n",   # unsorted
        "3 1\n0 3 1\n",          # node out of range
        "3 1\n0 1\n",            # short line
    ])
    def test_rejects_malformed(self, text):
        with pytest.raises(GraphFormatError):
            LabeledGraph.from_text(text)

    def test_csr_and_degrees(self):
        g = LabeledGraph.from_edges(4, 2, [0, 0, 2], [1, 2, 3], [1, 2, 1])
        np.testing.assert_array_equal(g.degrees, [2, 1, 2, 1])
        np.testing.assert_array_equal(g.indices[g.indptr[0]:g.indptr[1]], [1, 2])
        np.testing.assert_array_equal(g.csr_labels[g.indptr[2]:g.indptr[3]], [2, 1])
        D = g.dense_labels()
        assert (D == D.T).all() and D[0, 2] == 2

    def test_immutable(self):
        g = LabeledGraph.from_edges(3, 1, [0], [1], [1])
        with pytest.raises(ValueError):
            g.u[0] = 1
