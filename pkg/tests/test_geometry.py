import json

import numpy as np
import pytest

from lrcrystal import geometry, zcell


def test_builtins():
    for name, m in (("triangular", 1), ("kagome_site", 3), ("kagome_link", 6)):
        assert geometry.builtin_lattice(name).m == m
    with pytest.raises(geometry.UnknownLattice):
        geometry.builtin_lattice("honeycomb")


@pytest.mark.parametrize("name", ["triangular", "kagome_site", "kagome_link"])
def test_nearest_neighbour_distance_is_one(name):
    spec = geometry.builtin_lattice(name)
    cell = geometry.embed(spec, zcell.representatives(((3, 0), (0, 3))))
    d = np.inf
    for i in range(cell.p):
        for j in range(cell.p):
            for a in (-1, 0, 1):
                for b in (-1, 0, 1):
                    v = cell.sites[j] - cell.sites[i] + a * cell.T1 + b * cell.T2
                    r = np.hypot(*v)
                    if r > 1e-9:
                        d = min(d, r)
    assert d == pytest.approx(1.0)


def test_invalid_lattices(tmp_path):
    with pytest.raises(geometry.InvalidLattice):
        geometry.LatticeSpec("x", (1, 0), (2, 0), ((0, 0),))
    with pytest.raises(geometry.InvalidLattice):
        geometry.LatticeSpec("x", (1, 0), (0, 1), ((0, 0), (1, 0)))
    path = tmp_path / "lat.json"
    path.write_text(json.dumps({"name": "sq", "t1": [1, 0], "t2": [0, 1], "basis": [[0, 0]]}))
    assert geometry.get_lattice(str(path)).m == 1
    path.write_text(json.dumps({"name": "sq", "t1": [1, 0]}))
    with pytest.raises(geometry.InvalidLattice):
        geometry.load_lattice(path)


def test_embed_orders_rep_major():
    spec = geometry.builtin_lattice("kagome_site")
    cell = geometry.embed(spec, zcell.representatives(((2, 0), (0, 1))))
    assert cell.p == 6
    for i in range(cell.p):
        z, k = cell.site_label(i)
        assert np.allclose(cell.sites[i], spec.position(z, k))


def test_translation_perms_are_permutations():
    spec = geometry.builtin_lattice("kagome_site")
    cell = geometry.embed(spec, zcell.representatives(((3, 1), (1, 2))))
    perms = cell.translation_perms()
    assert len(perms) == cell.zcell.index
    for perm in perms:
        assert sorted(perm) == list(range(cell.p))
    assert np.array_equal(perms[0], np.arange(cell.p))


def test_tile_occupation():
    spec = geometry.builtin_lattice("triangular")
    small = geometry.embed(spec, zcell.representatives(((2, 0), (0, 1))))
    big = geometry.embed(spec, geometry.supercell(small.zcell, 2, 2))
    occ = geometry.tile_occupation(small, big, [1, 0])
    assert big.p == 8 and occ.sum() == 4


def test_tile_occupation_rejects_non_supercell():
    spec = geometry.builtin_lattice("triangular")
    small = geometry.embed(spec, zcell.representatives(((2, 0), (0, 1))))
    other = geometry.embed(spec, zcell.representatives(((4, 0), (1, 3))))
    with pytest.raises(ValueError):
        geometry.tile_occupation(small, other, [1, 0])
