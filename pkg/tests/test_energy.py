from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lrcrystal import couplings, energy, geometry, zcell
from lrcrystal.energy import HARDCORE, ModelParams

TRI = geometry.builtin_lattice("triangular")
KAG = geometry.builtin_lattice("kagome_site")
P6 = couplings.ResumParams(6.0)


@pytest.fixture(scope="module")
def tri6():
    ec = geometry.embed(TRI, zcell.representatives(((3, 0), (1, 2))))
    return couplings.coupling_matrix(ec, P6)


@pytest.fixture(scope="module")
def mub6():
    return couplings.self_coupling_sum(TRI, P6)


def test_empty_is_zero(tri6):
    assert energy.energy_per_site(np.zeros(6, int), tri6, ModelParams(mu=1.3)).eps_total == 0.0


def test_single_site_cell(mub6):
    cm = couplings.coupling_matrix(geometry.embed(TRI, zcell.representatives(((1, 0), (0, 1)))), P6)
    e = energy.energy_per_site([1], cm, ModelParams(mu=0.7))
    assert e.eps_total == pytest.approx(-0.7 + 0.5 * mub6, rel=1e-14)
    assert e.eps_self == pytest.approx(0.5 * mub6)


def test_breakdown_sums(tri6):
    occ = np.array([2, 0, 1, 3, 0, 1])
    e = energy.energy_per_site(occ, tri6, ModelParams(mu=0.4, U=0.8, V=1.7))
    assert e.eps_total == e.eps_mu + e.eps_pair + e.eps_self + e.eps_onsite
    assert e.eps_total * 6 == pytest.approx(energy.cell_energy(occ, tri6, ModelParams(mu=0.4, U=0.8, V=1.7)))


def test_validation(tri6):
    with pytest.raises(energy.DimensionMismatch):
        energy.energy_per_site([1, 0], tri6, ModelParams())
    with pytest.raises(energy.HardcoreViolation):
        energy.energy_per_site([2, 0, 0, 0, 0, 0], tri6, ModelParams())
    with pytest.raises(ValueError):
        ModelParams(V=0)
    with pytest.raises(ValueError):
        ModelParams(U=-1.0)


def test_delta_preconditions(tri6):
    occ = [1, 0, 0, 0, 0, 0]
    hc = ModelParams()
    assert energy.delta_move(occ, 0, 0, tri6, hc) == 0.0
    with pytest.raises(energy.IllegalOperation):
        energy.delta_insert(occ, 0, tri6, hc)
    with pytest.raises(energy.IllegalOperation):
        energy.delta_remove(occ, 1, tri6, hc)
    with pytest.raises(energy.IllegalOperation):
        energy.delta_move(occ, 1, 2, tri6, hc)


def test_insert_into_empty(tri6):
    mu = 0.9
    d = energy.delta_insert(np.zeros(6, int), 2, tri6, ModelParams(mu=mu))
    assert d == pytest.approx(-mu + 0.5 * tri6.V_inf[2, 2], abs=1e-15)


def test_deltas_match_recomputation(tri6):
    rng = np.random.default_rng(5)
    for trial in range(1000):
        soft = trial % 2 == 0
        params = ModelParams(mu=rng.uniform(-1, 4), U=rng.uniform(0, 3) if soft else HARDCORE,
                             V=rng.uniform(0.2, 2))
        occ = rng.integers(0, 4 if soft else 2, size=6)
        E0 = energy.cell_energy(occ, tri6, params)
        scale = max(1.0, abs(E0))
        i, j = rng.integers(6, size=2)
        if soft or occ[i] == 0:
            new = occ.copy(); new[i] += 1
            d = energy.delta_insert(occ, i, tri6, params)
            assert abs(d - (energy.cell_energy(new, tri6, params) - E0)) <= 1e-12 * scale
        if occ[i] > 0:
            new = occ.copy(); new[i] -= 1
            d = energy.delta_remove(occ, i, tri6, params)
            assert abs(d - (energy.cell_energy(new, tri6, params) - E0)) <= 1e-12 * scale
            if i != j and (soft or occ[j] == 0):
                new = occ.copy(); new[i] -= 1; new[j] += 1
                d = energy.delta_move(occ, i, j, tri6, params)
                assert abs(d - (energy.cell_energy(new, tri6, params) - E0)) <= 1e-12 * scale


def test_particle_hole():
    assert list(energy.particle_hole([0, 0, 0])) == [1, 1, 1]
    assert list(energy.particle_hole([1, 0, 0])) == [0, 1, 1]
    with pytest.raises(energy.SoftcoreUnsupported):
        energy.particle_hole([2, 0])


def test_particle_hole_energy_shift_is_constant():
    ec = geometry.embed(KAG, zcell.representatives(((2, 0), (1, 2))))
    cm = couplings.coupling_matrix(ec, P6)
    mub = couplings.self_coupling_sum(KAG, P6)
    rng = np.random.default_rng(1)
    for delta in (0.3, 1.7):
        mirrored = ModelParams(mu=energy.particle_hole_mu(delta, mub))
        diffs = []
        for _ in range(200):
            occ = rng.integers(0, 2, size=cm.p)
            diffs.append(energy.energy_per_site(occ, cm, ModelParams(mu=delta)).eps_total
                         - energy.energy_per_site(energy.particle_hole(occ), cm, mirrored).eps_total)
        assert np.ptp(diffs) <= 1e-9


def test_translation_invariance(tri6):
    rng = np.random.default_rng(2)
    params = ModelParams(mu=0.3, U=1.0)
    for _ in range(20):
        occ = rng.integers(0, 3, size=6)
        e = energy.energy_per_site(occ, tri6, params).eps_total
        for perm in tri6.cell.translation_perms():
            moved = np.empty_like(occ)
            moved[perm] = occ
            assert energy.energy_per_site(moved, tri6, params).eps_total == pytest.approx(e, rel=1e-12)


@given(st.integers(1, 8), st.integers(1, 4), st.integers(0, 10))
@settings(max_examples=80)
def test_state_count(p, cap, target):
    import itertools

    brute = sum(1 for s in itertools.product(range(cap + 1), repeat=p) if sum(s) == target)
    assert energy.state_count(p, cap, target) == brute
    assert energy.state_count(p, cap, None) == (cap + 1) ** p


def test_state_count_examples():
    assert energy.state_count(12, 1, 6) == 924


def test_occupation_serialisation():
    line = energy.dump_occupation([0, 1, 2], "2_1_3", {"x": 0.5})
    key, occ = energy.load_occupation(line)
    assert key == "2_1_3" and list(occ) == [0, 1, 2]
    assert energy.filling([0, 1, 2]) == Fraction(1)
