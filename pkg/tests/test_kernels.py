"""The compiled kernels and the numpy fallback must agree."""
import numpy as np
import pytest

from lrcrystal import _fallback, kernels

compiled = pytest.importorskip("lrcrystal._kernels")


def test_compiled_selected():
    assert kernels.COMPILED


@pytest.mark.parametrize("alpha", [3.0, 3.5, 6.0, 4.2])
def test_shell_sums_agree(alpha):
    args = (0.3, 0.1, 1.0, 0.0, 0.5, 0.8660254037844386, alpha, 40, False)
    a, ra = compiled.shell_sums(*args)
    b, rb = _fallback.shell_sums(*args)
    assert np.allclose(a, b, rtol=1e-13, atol=0)
    assert ra == pytest.approx(rb)
    a, _ = compiled.shell_sums(0.0, 0.0, *args[2:8], True)
    b, _ = _fallback.shell_sums(0.0, 0.0, *args[2:8], True)
    assert a[0] == b[0] == 0.0
    assert np.allclose(a, b, rtol=1e-13, atol=0)


def _random_problem(rng, p):
    A = rng.uniform(0.01, 1.0, size=(p, p))
    W = A + A.T
    return np.ascontiguousarray(W)


@pytest.mark.parametrize("seed", range(6))
def test_descend_agrees(seed):
    rng = np.random.default_rng(seed)
    p = 9
    W = _random_problem(rng, p)
    for hardcore, cap, canonical in ((True, 1, True), (True, 1, False), (False, 3, True), (False, 3, False)):
        n0 = rng.integers(0, cap + 1, size=p).astype(np.int64)
        n1, n2 = n0.copy(), n0.copy()
        s1 = compiled.descend(W, n1, 1.1, 0.4, hardcore, cap, canonical, 1e-12)
        s2 = _fallback.descend(W, n2, 1.1, 0.4, hardcore, cap, canonical, 1e-12)
        assert np.array_equal(n1, n2)
        assert s1[0] == s2[0]


@pytest.mark.parametrize("seed", range(4))
def test_exhaustive_agrees(seed):
    rng = np.random.default_rng(seed)
    p = 7
    W = _random_problem(rng, p)
    for hardcore, cap, target in ((True, 1, 3), (True, 1, -1), (False, 2, 4), (False, 2, -1)):
        a = compiled.exhaustive_min(W, 0.9, 0.5, hardcore, cap, target, 1e-10)
        b = _fallback.exhaustive_min(W, 0.9, 0.5, hardcore, cap, target, 1e-10)
        assert np.array_equal(a[0], b[0])
        assert a[1] == pytest.approx(b[1], rel=1e-12)
        assert a[2] == b[2]
