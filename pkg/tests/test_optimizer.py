from fractions import Fraction
import itertools

import numpy as np
import pytest

from lrcrystal import couplings, energy, geometry, optimizer, zcell
from lrcrystal.energy import ModelParams
from lrcrystal.optimizer import SearchBudget

TRI = geometry.builtin_lattice("triangular")
KAG = geometry.builtin_lattice("kagome_site")
P6 = couplings.ResumParams(6.0)


def matrix(pair, lattice=TRI, params=P6):
    return couplings.coupling_matrix(geometry.embed(lattice, zcell.representatives(pair)), params)


def brute(cm, params, target=None, cap=1):
    best = None
    for occ in itertools.product(range(cap + 1), repeat=cm.p):
        if target is not None and sum(occ) != target:
            continue
        e = energy.energy_per_site(occ, cm, params).eps_total
        if best is None or e < best[0] - 1e-12:
            best = (e, occ)
    return best


def test_budget_validation():
    with pytest.raises(ValueError):
        SearchBudget(restarts_without_improvement=0)


def test_two_site_cell():
    cm = matrix(((2, 0), (0, 1)))
    res = optimizer.exhaustive(cm, ModelParams(), Fraction(1, 2))
    assert res.exact and res.best.sum() == 1
    assert res.degeneracy == 2
    assert list(res.best) == [0, 1]  # lexicographically smallest minimiser


def test_stripe_beats_double_occupancy():
    cm = matrix(((2, 0), (0, 1)), params=couplings.ResumParams(3.0))
    res = optimizer.exhaustive(cm, ModelParams(U=1.0, V=0.2, alpha=3.0), Fraction(1, 2))
    assert sorted(res.best) == [0, 1]


def test_state_space_limit():
    cm = matrix(((4, 0), (1, 3)))
    with pytest.raises(optimizer.StateSpaceTooLarge):
        optimizer.exhaustive(cm, ModelParams(), Fraction(1, 2), limit=100)
    with pytest.raises(ValueError):
        optimizer.exhaustive(cm, ModelParams(), Fraction(1, 5))


@pytest.mark.parametrize("target", [None, 2, 3])
def test_exhaustive_matches_brute_force(target):
    cm = matrix(((3, 0), (1, 2)))
    params = ModelParams(mu=3.1)
    res = optimizer.exhaustive(cm, params, None if target is None else Fraction(target, 6))
    e, occ = brute(cm, params, target)
    assert res.energy == pytest.approx(e, abs=1e-12)
    assert tuple(res.best) == occ


def test_exhaustive_softcore_matches_brute_force():
    cm = matrix(((2, 0), (1, 2)), params=couplings.ResumParams(3.0))
    params = ModelParams(U=1.0, V=0.7, alpha=3.0)
    res = optimizer.exhaustive(cm, params, Fraction(1, 2))
    e, _ = brute(cm, params, target=2, cap=2)
    assert res.energy == pytest.approx(e, abs=1e-12)


def test_descent_from_local_minimum_is_stationary():
    cm = matrix(((3, 0), (1, 2)))
    params = ModelParams(mu=3.1)
    res = optimizer.exhaustive(cm, params)
    again = optimizer.steepest_descent(res.best, cm, params, canonical=False)
    assert np.array_equal(again, res.best)


def test_descent_separates_a_pair():
    cm = matrix(((4, 0), (0, 4)))
    params = ModelParams()
    start = np.zeros(16, dtype=np.int64)
    start[[0, 1]] = 1
    out = optimizer.steepest_descent(start, cm, params, canonical=True)
    e_out = energy.energy_per_site(out, cm, params).eps_total
    assert e_out <= energy.energy_per_site(start, cm, params).eps_total
    ref = optimizer.exhaustive(cm, params, Fraction(2, 16))
    assert e_out == pytest.approx(ref.energy, abs=1e-12)


def test_descent_exit_has_no_improving_move():
    cm = matrix(((3, 0), (1, 3)), KAG)
    params = ModelParams(mu=1.2)
    rng = np.random.default_rng(0)
    for _ in range(10):
        start = rng.integers(0, 2, size=cm.p)
        out = optimizer.steepest_descent(start, cm, params, canonical=False)
        assert energy.energy_per_site(out, cm, params).eps_total <= energy.energy_per_site(start, cm, params).eps_total + 1e-15
        for i in range(cm.p):
            if out[i]:
                assert energy.delta_remove(out, i, cm, params) >= -1e-12
                for j in range(cm.p):
                    if not out[j]:
                        assert energy.delta_move(out, i, j, cm, params) >= -1e-12
            else:
                assert energy.delta_insert(out, i, cm, params) >= -1e-12


def test_basin_hopping_is_deterministic():
    cm = matrix(((4, 0), (1, 4)), KAG)
    params = ModelParams(mu=0.9)
    a = optimizer.basin_hopping(cm, params, SearchBudget(rng_seed=7))
    b = optimizer.basin_hopping(cm, params, SearchBudget(rng_seed=7))
    assert np.array_equal(a.best, b.best)
    assert a.descents_run == b.descents_run and a.minima_histogram == b.minima_histogram
    assert not a.exact and a.converged


def test_basin_hopping_equals_exhaustive_on_small_cells(matrices):
    rng = np.random.default_rng(11)
    cells = matrices("kagome_site", "B", 2, 6.0, lambda n: n <= 4)
    for cm in cells:
        for _ in range(2):
            params = ModelParams(mu=float(rng.uniform(-0.1, 4.4)))
            ex = optimizer.exhaustive(cm, params)
            bh = optimizer.basin_hopping(cm, params, SearchBudget(rng_seed=3))
            assert bh.energy == pytest.approx(ex.energy, abs=1e-10)


def test_softcore_cap_is_raised():
    cm = matrix(((1, 0), (0, 1)), params=couplings.ResumParams(3.0))
    # huge chemical potential, weak repulsion: many bosons per site
    params = ModelParams(mu=40.0, U=1.0, V=0.1, alpha=3.0)
    res = optimizer.search(cm, params)
    assert res.best[0] > 4 and not res.saturated


def test_best_over_cells_filters_and_ties():
    mats = [matrix(p) for p in (((1, 0), (0, 1)), ((2, 0), (0, 1)), ((2, 0), (0, 2)), ((3, 0), (0, 1)))]
    params = ModelParams(mu=couplings.self_coupling_sum(TRI, P6) / 2)
    cm, res, allres = optimizer.best_over_cells(mats, params, filling=Fraction(1, 2))
    assert set(allres) == {"2_0_1", "2_0_2"}
    assert cm.cell.key == "2_0_1"  # the stripe ties on the 4-site cell; smaller wins
    assert allres["2_0_2"].energy == pytest.approx(res.energy, abs=1e-12)
    only, res1, _ = optimizer.best_over_cells(mats[:1], params)
    assert only is mats[0]


def test_jobs_do_not_change_results():
    mats = [matrix(p, KAG) for p in (((2, 0), (0, 2)), ((3, 0), (1, 2)))]
    params = ModelParams(mu=1.1)
    a = optimizer.best_over_cells(mats, params, SearchBudget(exhaustive_limit=0, rng_seed=5))
    b = optimizer.best_over_cells(mats, params, SearchBudget(exhaustive_limit=0, rng_seed=5), jobs=2)
    assert a[0].cell.key == b[0].cell.key and np.array_equal(a[1].best, b[1].best)
