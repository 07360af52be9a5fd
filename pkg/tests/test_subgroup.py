import numpy as np
import pytest

from gl2tower.residue import gl2_order, identity, minus_identity, pack
from gl2tower.subgroup import (
    NonUnitGenerator,
    OpenSubgroup,
    adjoin_minus_identity,
    close,
    close_by_random_products,
    from_generators_mod,
    full_group,
    lift_array,
    predicates,
    transpose,
)

# generator lists quoted from the bundled reference tables
ROW1_GENS = [(7, 14, 0, 1), (1, 5, 6, 11), (3, 0, 0, 7)]  # level 16
H57_GENS = [(11, 4, 8, 3), (15, 11, 0, 1), (7, 2, 2, 1), (15, 15, 1, 0)]  # level 16
H57A_GENS = [(10, 21, 3, 13), (15, 1, 27, 2), (7, 7, 0, 1)]  # level 32
H155_GENS = [(1, 3, 0, 3), (1, 0, 2, 3), (1, 3, 12, 3), (1, 1, 12, 7)]  # level 16


def test_close_minus_identity():
    got = close([minus_identity(16)], 16)
    assert got == {identity(16), minus_identity(16)}


def test_close_rejects_non_unit():
    with pytest.raises(NonUnitGenerator):
        close([(2, 0, 0, 1)], 8)


def test_close_sl2_mod4():
    got = close([(1, 1, 0, 1), (0, -1, 1, 0)], 4)
    # brute force: all 96 invertible matrices mod 4, keep det = 1
    brute = set()
    for a in range(4):
        for b in range(4):
            for c in range(4):
                for d in range(4):
                    if (a * d - b * c) % 4 == 1:
                        brute.add((a, b, c, d))
    assert len(brute) == 48
    assert got == brute


def test_close_idempotent():
    first = close(ROW1_GENS, 16)
    again = close(sorted(first), 16)
    assert first == again


def test_close_matches_random_saturation_oracle():
    bfs = close(H57_GENS, 16)
    sat = close_by_random_products(H57_GENS, 16, seed=7)
    assert bfs == sat


def test_row1_closure_size():
    # index-96 subgroup of the ambient group at level 16
    got = close(ROW1_GENS, 16)
    assert 24576 % len(got) == 0
    assert gl2_order(16) // len(got) == 96


def test_level_of_full_group_given_mod8():
    H = OpenSubgroup(8, [], elements=None)  # trivial gens: Gamma(8) only
    # the *full* group given mod 8 normalizes to level 1
    G = full_group(8)
    assert G.level == 1
    assert G.index == 1
    # while Gamma(8) itself keeps level 8
    assert H.level == 8
    assert H.order == 1


def test_level_of_h57a_is_32():
    H = from_generators_mod(H57A_GENS, 32)
    assert H.level == 32


def test_level_normalization_roundtrip():
    # full preimage mod 16 of a level-4 subgroup drops back to level 4
    H4 = from_generators_mod([(1, 1, 0, 1), (0, 1, 3, 0), (3, 0, 0, 1)], 4)
    lifted = lift_array(H4.elements, H4.level, 16)
    H16 = OpenSubgroup(16, [], elements=lifted)
    assert H16.level == H4.level
    assert H16.fingerprint == H4.fingerprint


def test_index_in_ambient():
    assert full_group().index == 1
    H57 = from_generators_mod(H57_GENS, 16)
    assert H57.index == 16
    H155 = from_generators_mod(H155_GENS, 16)
    assert H155.index == 24


def test_lift_counts():
    G = full_group()
    lifted = lift_array(G.elements, 1, 4)
    assert lifted.size == 96
    H57 = from_generators_mod(H57_GENS, 16)
    assert H57.lift(32).size == H57.order * 16


def test_reduce_lift_roundtrip():
    H = from_generators_mod(ROW1_GENS, 16)
    up = H.lift(32)
    H2 = OpenSubgroup(32, [], elements=up)
    assert H2.level == 16
    assert H2.fingerprint == H.fingerprint


def test_lagrange_identity():
    for gens, mod in [(ROW1_GENS, 16), (H57_GENS, 16), (H155_GENS, 16)]:
        H = from_generators_mod(gens, mod)
        assert H.order * H.index == gl2_order(H.level)


def test_predicates_full_group():
    p = predicates(full_group())
    assert p.det_surjective and p.contains_minus_identity
    assert p.has_trace0_detm1 and p.has_refined_cc_element


def test_predicates_row1_contains_minus_identity():
    H = from_generators_mod(ROW1_GENS, 16)
    assert predicates(H).contains_minus_identity


def test_predicates_h57a_minus_identity_free():
    H = from_generators_mod(H57A_GENS, 32)
    p = predicates(H)
    assert not p.contains_minus_identity
    assert p.det_surjective


def test_adjoin_minus_identity_fixed_point():
    H = from_generators_mod(ROW1_GENS, 16)
    assert adjoin_minus_identity(H) == H


def test_adjoin_minus_identity_on_h57a_gives_h57():
    H57a = from_generators_mod(H57A_GENS, 32)
    H57 = from_generators_mod(H57_GENS, 16)
    up = adjoin_minus_identity(H57a)
    assert up.index == H57a.index // 2
    assert up == H57


def test_transpose_involution_and_invariants():
    for gens, mod in [(H57_GENS, 16), (H155_GENS, 16), (H57A_GENS, 32)]:
        H = from_generators_mod(gens, mod)
        T = transpose(H)
        assert transpose(T) == H
        assert T.level == H.level
        assert T.index == H.index
        assert predicates(T).as_dict() == predicates(H).as_dict()


def test_squaring_map_surjective_on_congruence_layers():
    # squares of I + 2^k M cover every class I + 2^(k+1) M for k = 2, 3
    from gl2tower.residue import mat_mul, mat_reduce

    for k in (2, 3):
        mod = 2 ** (k + 2)
        targets = set()
        images = set()
        for bits in range(16):
            M = [(bits >> i) & 1 for i in range(4)]
            g = (1 + 2**k * M[0], 2**k * M[1], 2**k * M[2], 1 + 2**k * M[3])
            g = mat_reduce(g, mod)
            sq = mat_mul(g, g, mod)
            images.add(sq)
            t = (1 + 2 ** (k + 1) * M[0], 2 ** (k + 1) * M[1], 2 ** (k + 1) * M[2], 1 + 2 ** (k + 1) * M[3])
            targets.add(mat_reduce(t, mod))
        assert targets <= images


def test_json_and_text_roundtrip():
    H = from_generators_mod(H57_GENS, 16)
    H2 = OpenSubgroup.from_json_dict(H.to_json_dict())
    assert H2 == H
    H3 = OpenSubgroup.from_text(H.to_text())
    assert H3 == H
