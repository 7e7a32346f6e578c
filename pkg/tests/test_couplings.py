import numpy as np
import pytest

from lrcrystal import couplings, geometry, zcell
from lrcrystal.couplings import ResumParams

TRI = geometry.builtin_lattice("triangular")


def cell(pair, lattice=TRI):
    return geometry.embed(lattice, zcell.representatives(pair))


def test_alpha_validation():
    with pytest.raises(couplings.InvalidParameters, match="weak long-range"):
        ResumParams(2.0)
    with pytest.raises(couplings.InvalidParameters):
        ResumParams(2.4)
    with pytest.raises(couplings.InvalidParameters):
        ResumParams(6.0, K_schedule=(10, 5))
    with pytest.raises(couplings.InvalidParameters):
        ResumParams(6.0, K_schedule=(10, 20), fit_points=3)


def test_default_schedule_depends_on_decay():
    assert ResumParams(6.0).K_schedule == couplings.DEFAULT_K
    assert ResumParams(3.0).K_schedule == couplings.DEFAULT_K_SLOW_DECAY


def test_resum_small_cutoff_by_hand():
    c = cell(((1, 0), (0, 1)))
    # K=1: the 8 neighbours of a square box on the triangular lattice
    pts = [(k, l) for k in (-1, 0, 1) for l in (-1, 0, 1) if (k, l) != (0, 0)]
    expect = 0.0
    for k, l in pts:
        v = k * c.T1 - l * c.T2
        expect += np.hypot(*v) ** -6
    assert couplings.resum(c, 0, 0, 6.0, 1) == pytest.approx(expect, rel=1e-14)
    assert couplings.resum(c, 0, 0, 6.0, 0) == 0.0


def test_extrapolate_recovers_synthetic_intercept():
    alpha = 3.0
    vals = [(K, 7.0 - 2.5 * (K + 0.5) ** (2 - alpha)) for K in (64, 128, 256)]
    v, r = couplings.extrapolate(vals, alpha)
    assert v == pytest.approx(7.0, abs=1e-13) and r < 1e-13
    with pytest.raises(couplings.SingularFit):
        couplings.extrapolate([(4, 1.0)], alpha)


@pytest.mark.filterwarnings("ignore::lrcrystal.couplings.Unconverged")
def test_degenerate_geometry():
    bad = geometry.LatticeSpec("bad", (1, 0), (0, 1), ((0, 0), (0.5, 0.5)))
    ec = geometry.embed(bad, zcell.representatives(((1, 0), (0, 1))))
    # r_i - r_j never vanishes here; the basis is valid
    couplings.coupling_matrix(ec, ResumParams(6.0, (8, 16, 32)))
    ec = geometry.EmbeddedCell(ec.zcell, bad, ec.T1, ec.T2, np.array([[0, 0], [1.0, 0]]))
    with pytest.raises(couplings.DegenerateGeometry):
        couplings.coupling_matrix(ec, ResumParams(6.0, (8, 16, 32)))


def test_matrix_is_symmetric_and_translation_invariant():
    c = cell(((3, 1), (-1, 2)), geometry.builtin_lattice("kagome_site"))
    cm = couplings.coupling_matrix(c, ResumParams(6.0))
    assert np.array_equal(cm.V_inf, cm.V_inf.T)
    for perm in c.translation_perms():
        assert np.array_equal(cm.V_inf[np.ix_(perm, perm)], cm.V_inf)


def test_single_site_value_matches_direct_resum():
    c = cell(((1, 0), (0, 1)))
    p = ResumParams(6.0)
    direct = [(K, couplings.resum(c, 0, 0, 6.0, K)) for K in p.K_schedule]
    v, _ = couplings.extrapolate(direct, 6.0, p.fit_points)
    assert couplings.coupling_matrix(c, p).V_inf[0, 0] == pytest.approx(v, rel=1e-12)


@pytest.mark.parametrize("pair", [((2, 0), (0, 1)), ((2, 0), (1, 2)), ((3, 0), (1, 1))])
def test_row_sums_equal_lattice_sum(pair):
    p = ResumParams(6.0)
    mub = couplings.self_coupling_sum(TRI, p)
    cm = couplings.coupling_matrix(cell(pair), p)
    assert np.allclose(cm.row_sums(), mub, rtol=1e-9)


def test_unconverged_warns():
    p = ResumParams(3.0, (4, 8, 16), tol=1e-14)
    with pytest.warns(couplings.Unconverged):
        cm = couplings.coupling_matrix(cell(((1, 0), (0, 1))), p)
    assert not cm.converged


def test_cache_roundtrip(tmp_path):
    p = ResumParams(6.0)
    cache = couplings.CouplingCache(tmp_path)
    c = cell(((2, 0), (1, 2)))
    a = cache.matrix(c, p)
    assert cache.misses == 1
    fresh = couplings.CouplingCache(tmp_path)
    b = fresh.matrix(c, p)
    assert fresh.hits == 1 and fresh.misses == 0
    assert np.array_equal(a.V_inf, b.V_inf)
    assert len(fresh.records(TRI, p)) == 1


def test_matrices_for_uses_cache(tmp_path):
    p = ResumParams(6.0)
    cache = couplings.CouplingCache(tmp_path)
    cells = zcell.enumerate_cells(zcell.extent_set("B", 2))
    first = couplings.matrices_for(TRI, cells, p, cache)
    again = couplings.matrices_for(TRI, cells, p, cache)
    assert cache.misses == len(cells) and cache.hits == len(cells)
    assert all(np.array_equal(a.V_inf, b.V_inf) for a, b in zip(first, again))


def test_reduced_basis_is_short():
    T1, T2 = np.array([1.0, 0.0]), np.array([7.5, 0.5])
    a, b = couplings.reduced_basis(T1, T2)
    assert abs(a[0] * b[1] - a[1] * b[0]) == pytest.approx(0.5)
    assert max(a @ a, b @ b) < 1.0
