import numpy as np
import pytest
from hypothesis import given, strategies as st

from gl2tower import residue
from gl2tower.residue import (
    NotInvertible,
    all_gl2,
    gl2_order,
    identity,
    mat_det,
    mat_inv,
    mat_mul,
    mat_mul_arrays,
    pack,
    parse_mat,
    format_mat,
    point_act,
    projective_line,
    sl2_order,
    unpack,
)

mats_mod8 = st.tuples(*[st.integers(0, 7)] * 4)


def test_identity_neutral():
    m = (7, 14, 0, 1)
    assert mat_mul(identity(16), m, 16) == m
    assert mat_mul(m, identity(16), 16) == m


def test_known_square_mod16():
    # (7*7, 7*14+14; 0, 1) = (49, 112, 0, 1) = identity mod 16
    m = (7, 14, 0, 1)
    assert mat_mul(m, m, 16) == (1, 0, 0, 1)


@given(mats_mod8, mats_mod8)
def test_mul_matches_integer_oracle(x, y):
    a, b, c, d = x
    e, f, g, h = y
    oracle = (
        (a * e + b * g) % 8,
        (a * f + b * h) % 8,
        (c * e + d * g) % 8,
        (c * f + d * h) % 8,
    )
    assert mat_mul(x, y, 8) == oracle


@given(mats_mod8, mats_mod8, mats_mod8)
def test_mul_associative(x, y, z):
    assert mat_mul(mat_mul(x, y, 8), z, 8) == mat_mul(x, mat_mul(y, z, 8), 8)


def test_inverse_diagonal():
    assert mat_inv((3, 0, 0, 7), 16) == (11, 0, 0, 7)
    assert mat_inv(identity(16), 16) == identity(16)


def test_inverse_of_even_det_raises():
    with pytest.raises(NotInvertible):
        mat_inv((2, 0, 0, 1), 8)


@given(mats_mod8)
def test_inverse_roundtrip(x):
    det = mat_det(x, 8)
    if det % 2 == 0:
        with pytest.raises(NotInvertible):
            mat_inv(x, 8)
    else:
        assert mat_mul(x, mat_inv(x, 8), 8) == identity(8)


@pytest.mark.parametrize("k,expected", [(1, 6), (2, 96), (3, 1536), (5, 393216)])
def test_gl2_order_formula(k, expected):
    assert gl2_order(2**k) == expected
    assert gl2_order(2**k) == 3 * 2 ** (4 * k - 3)


@pytest.mark.parametrize("m", [2, 4])
def test_gl2_order_brute(m):
    count = 0
    for a in range(m):
        for b in range(m):
            for c in range(m):
                for d in range(m):
                    if (a * d - b * c) % 2 == 1:
                        count += 1
    assert count == gl2_order(m)
    assert all_gl2(m).size == count


def test_sl2_orders():
    assert sl2_order(4) == 48
    assert sl2_order(8) == 384
    assert sl2_order(32) == 24576


def test_unit_matrices_closed_mod4():
    g = all_gl2(4)
    prods = mat_mul_arrays(g[:, None], g[None, :], 4).ravel()
    assert np.isin(prods, g).all()


def test_projective_line_mod2():
    assert projective_line(2) == [(0, 1), (1, 0), (1, 1)]


@pytest.mark.parametrize("m,count", [(2, 3), (4, 6), (8, 12), (16, 24), (3, 4), (9, 12)])
def test_projective_line_counts(m, count):
    pts = projective_line(m)
    assert len(pts) == count
    assert len(set(pts)) == count


def test_projective_line_brute_oracle_mod8():
    # dedup all unimodular pairs by unit scaling
    orbits = set()
    for x in range(8):
        for y in range(8):
            if x % 2 == 0 and y % 2 == 0:
                continue
            orbit = frozenset(((u * x) % 8, (u * y) % 8) for u in (1, 3, 5, 7))
            orbits.add(orbit)
    assert len(orbits) == 12
    reps = {min(o) for o in orbits}
    assert reps == set(projective_line(8))


def test_right_action_is_group_action_mod4():
    pts = projective_line(4)
    g = [unpack(int(v), 4) for v in all_gl2(4)]
    import random

    rng = random.Random(0)
    sample = rng.sample(g, 12)
    for a in sample:
        for b in sample:
            ab = mat_mul(a, b, 4)
            for v in pts:
                assert point_act(point_act(v, a, 4), b, 4) == point_act(v, ab, 4)


def test_pack_roundtrip():
    for m in (2, 8, 16):
        for mat in [(1, 0, 0, 1), (m - 1, 2 % m, 3 % m, 1)]:
            assert unpack(pack(mat, m), m) == mat


def test_text_format_roundtrip():
    m = (7, 14, 0, 1)
    text = format_mat(m, 16)
    assert text == "[[7,14],[0,1]] mod 16"
    assert parse_mat(text) == (m, 16)
