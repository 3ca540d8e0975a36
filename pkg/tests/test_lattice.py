import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gapcert.errors import DecompositionError, EmptyRegionError
from gapcert.lattice import (
    Region,
    classify_region,
    diameter,
    dist,
    maximal_region,
    overlap_size,
    s_decompose,
    side_length,
    verify_decomposition,
)

I = Region.interval


def test_interval_and_set_algebra():
    A, B = I(0, 5), I(3, 9)
    assert len(A) == 6
    assert (A | B) == I(0, 9)
    assert (A & B) == I(3, 5)
    assert (A - B) == I(0, 2)
    assert I(1, 2) <= A


def test_dist_and_diameter():
    assert dist(I(0, 2), I(5, 7)) == 3
    assert dist(I(0, 2), Region(frozenset(), 1)) == math.inf
    assert diameter(Region.box([0, 0], [3, 4])) == pytest.approx(5.0)
    assert overlap_size(I(0, 9), I(5, 14)) == 5


def test_json_roundtrip():
    R = Region.box([0, 1], [2, 3])
    assert Region.from_json(R.to_json()) == R


def test_classify_examples():
    # l_1 = 1.5: a two-site interval (extent 1) fits R(0) with side l_1
    assert classify_region(I(0, 1)) == 0
    assert classify_region(I(0, 10)) == classify_region(I(7, 17))
    with pytest.raises(EmptyRegionError):
        classify_region(Region(frozenset(), 1))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 3), st.integers(0, 6), st.integers(-30, 30), st.data())
def test_classify_translation_and_permutation_invariant(D, ext, shift, data):
    exts = [data.draw(st.integers(0, ext)) for _ in range(D)]
    R = Region.box([0] * D, exts)
    k = classify_region(R)
    assert classify_region(R.translate([shift] * D)) == k
    perm = list(reversed(range(D)))
    assert classify_region(R.permute_axes(perm)) == k
    # R fits R(k) but not R(k-1)
    lengths = sorted(exts)
    assert all(s <= side_length(k + j + 1, D) for j, s in enumerate(lengths))


def test_s_decompose_example_1d():
    k = 8  # l_8 = 25.6, s <= 3
    R = maximal_region(k, 1)
    assert classify_region(R) == k
    for s in (1, 2, 3):
        rep = verify_decomposition(s_decompose(R, k, s))
        assert rep.ok and rep.min_distance >= rep.required_distance


def test_s_decompose_rejects_bad_input():
    R = maximal_region(8, 1)
    with pytest.raises(DecompositionError):
        s_decompose(R, 8, 4)  # s > l_k/8
    with pytest.raises(DecompositionError):
        s_decompose(R, 9, 1)  # wrong class
    with pytest.raises(EmptyRegionError):
        s_decompose(Region(frozenset(), 1), 3, 1)


def test_s_decompose_without_bound():
    R = maximal_region(4, 1)
    dec = s_decompose(R, 4, 2, enforce_s_bound=False)
    assert len(dec.pairs) == 2
    assert verify_decomposition(dec).prop1


@pytest.mark.parametrize("k", [16, 18, 20])
def test_three_dimensional_admissible_s(k):
    R = maximal_region(k, 3)
    assert classify_region(R) == k
    s = max(1, math.floor(side_length(k, 3) / 8))
    assert verify_decomposition(s_decompose(R, k, s)).ok


@settings(max_examples=40, deadline=None)
@given(st.integers(6, 14), st.data())
def test_s_decompose_random_1d(k, data):
    smax = math.floor(side_length(k, 1) / 8)
    s = data.draw(st.integers(1, smax))
    R = maximal_region(k, 1).translate([data.draw(st.integers(-50, 50))])
    assert verify_decomposition(s_decompose(R, k, s)).ok
