"""The compiled kernels and the numpy/scipy fallback must agree."""

import os
import subprocess
import sys

import numpy as np
import pytest

from lsbm import _fallback, kernels
from lsbm.gen import GenOptions, generate
from lsbm.model import LsbmParams

compiled = pytest.importorskip("lsbm._kernels")


@pytest.fixture(scope="module")
def graph():
    p = np.array([[[0.6, 0.3, 0.1], [0.8, 0.1, 0.1]],
                  [[0.8, 0.1, 0.1], [0.5, 0.2, 0.3]]])
    sigma, g = generate(LsbmParams([0.3, 0.7], p), 300, GenOptions(2))
    return sigma, g


class TestBackends:
    def test_selected_backend(self):
        assert kernels.BACKEND in ("cython", "python")

    @pytest.mark.parametrize("weighted", [False, True])
    def test_operator(self, graph, weighted):
        _, g = graph
        n = g.n
        cols = (g.csr_labels - 1) * n + g.indices
        rng = np.random.default_rng(0)
        w = rng.standard_normal(cols.size) if weighted else None
        a = compiled.AbarOperator(g.indptr, cols, n, 2 * n, w)
        b = _fallback.AbarOperator(g.indptr, cols, n, 2 * n, w)
        x, y = rng.standard_normal(2 * n), rng.standard_normal(n)
        np.testing.assert_allclose(a.matvec(x), b.matvec(x), rtol=1e-13, atol=1e-12)
        np.testing.assert_allclose(a.rmatvec(y), b.rmatvec(y), rtol=1e-13, atol=1e-12)
        np.testing.assert_allclose(a.gram(x, 4), b.gram(x, 4), rtol=1e-12)
        # adjoint identity <Ax, y> = <x, A^T y>
        assert a.matvec(x) @ y == pytest.approx(x @ a.rmatvec(y), rel=1e-12)

    def test_score_pass(self, graph):
        sigma, g = graph
        delta = np.random.default_rng(1).standard_normal((2, 3, 2))
        np.testing.assert_allclose(
            compiled.score_pass(g.indptr, g.indices, g.csr_labels, sigma, delta),
            _fallback.score_pass(g.indptr, g.indices, g.csr_labels, sigma, delta),
            rtol=1e-12, atol=1e-12)

    def test_tie_argmax(self):
        rng = np.random.default_rng(3)
        S = np.round(rng.standard_normal((2000, 5)))
        u = rng.random(2000)
        a = compiled.tie_argmax(S, u, 1e-12)
        np.testing.assert_array_equal(a, _fallback.tie_argmax(S, u, 1e-12))
        # the winner is always one of the maxima
        assert np.all(S[np.arange(2000), a] == S.max(axis=1))

    def test_tie_argmax_uniform_over_ties(self):
        S = np.zeros((6000, 3))
        u = np.random.default_rng(4).random(6000)
        counts = np.bincount(compiled.tie_argmax(S, u, 1e-12), minlength=3)
        assert np.all(np.abs(counts - 2000) < 4 * np.sqrt(6000 * (1 / 3) * (2 / 3)))

    def test_env_forces_fallback(self):
        env = dict(os.environ, LSBM_PURE_PYTHON="1")
        out = subprocess.run([sys.executable, "-c", "import lsbm.kernels as k; print(k.BACKEND)"],
                             env=env, capture_output=True, text=True, check=True)
        assert out.stdout.strip() == "python"

    def test_pipeline_agrees_across_backends(self):
        code = ("import numpy as np; from lsbm.harness import builtin_model; "
                "from lsbm.gen import generate, GenOptions; from lsbm.iac import run_iac; "
                "m = builtin_model(4); s, g = generate(m.params, m.n, GenOptions(5, m.sizes)); "
                "r = run_iac(g, 9); print(r.k_hat, np.bincount(r.labels).tolist())")
        outs = []
        for flag in ("", "1"):
            env = dict(os.environ, LSBM_PURE_PYTHON=flag)
            if not flag:
                env.pop("LSBM_PURE_PYTHON")
            outs.append(subprocess.run([sys.executable, "-c", code], env=env,
                                       capture_output=True, text=True, check=True).stdout)
        assert outs[0] == outs[1]
