import io

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lrcrystal import zcell

small = st.integers(-7, 7)
pairs = st.tuples(st.tuples(small, small), st.tuples(small, small)).filter(
    lambda p: zcell.det(p) != 0)


@given(pairs)
def test_canonical_form_is_hnf(pair):
    (a, z), (b, c) = zcell.canonicalize_pair(pair)
    assert z == 0 and a > 0 and c > 0 and 0 <= b < a
    assert a * c == abs(zcell.det(pair))


@given(pairs, st.integers(-3, 3), st.integers(-3, 3))
def test_canonical_form_ignores_basis_choice(pair, k, l):
    z1, z2 = pair
    # unimodular change of basis: (z1, z2) -> (z1 + k*z2, z2) -> (z1', z2 + l*z1')
    w1 = (z1[0] + k * z2[0], z1[1] + k * z2[1])
    w2 = (z2[0] + l * w1[0], z2[1] + l * w1[1])
    assert zcell.canonicalize_pair((w2, w1)) == zcell.canonicalize_pair(pair)


@given(pairs)
def test_generators_are_contained(pair):
    hnf = zcell.canonicalize_pair(pair)
    for z in pair:
        assert zcell.contains(hnf, z)
        assert zcell.reduce(hnf, z) == (0, 0)


def test_zero_determinant():
    with pytest.raises(zcell.ZeroDeterminant):
        zcell.canonicalize_pair(((1, 2), (2, 4)))


@pytest.mark.parametrize("n", range(1, 13))
def test_hnf_count_is_divisor_sum(n):
    pairs = list(zcell.hnf_pairs_of_index(n))
    assert len(pairs) == len(set(pairs)) == zcell.divisor_sum(n)
    assert all(zcell.canonicalize_pair(p) == p for p in pairs)


@given(pairs)
@settings(max_examples=60)
def test_representatives_are_a_transversal(pair):
    cell = zcell.representatives(pair)
    assert len(cell.reps) == cell.index
    assert len({zcell.reduce(cell.pair, z) for z in cell.reps}) == cell.index
    assert cell.reps[0] == (0, 0)


def test_extent_counts():
    assert [len(zcell.enumerate_cells(zcell.extent_set("B", m))) for m in range(1, 5)] == [1, 9, 36, 100]
    assert zcell.enumerate_cells(zcell.extent_set("B", 0)) == []


def test_extent_max_index():
    for m in range(1, 5):
        cells = zcell.enumerate_pairs(zcell.extent_set("B", m))
        assert max(c.index for c in cells) == m * m


def test_enumeration_sorted_and_unique():
    cells = zcell.enumerate_pairs(zcell.extent_set("A", 2))
    keys = [(c.index, c.pair) for c in cells]
    assert keys == sorted(keys) and len(set(keys)) == len(keys)


def test_dump_roundtrip():
    cells = zcell.enumerate_cells(zcell.extent_set("B", 2))
    buf = io.StringIO()
    zcell.dump_cells(cells, buf, header={"x": 1})
    buf.seek(0)
    back = zcell.load_cells(buf)
    assert [c.pair for c in back] == [c.pair for c in cells]
    assert [c.reps for c in back] == [c.reps for c in cells]


def test_cell_key_roundtrip():
    c = zcell.representatives(((3, 1), (-1, 2)))
    assert zcell.cell_from_key(c.key).pair == c.pair
