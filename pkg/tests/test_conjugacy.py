import numpy as np
import pytest

from gl2tower.conjugacy import (
    ambient_table,
    conjugacy_classes,
    conjugate_subgroup,
    count_ambient_conjugates,
    is_conjugate,
    is_conjugate_into,
    lift_generating_mats,
)
from gl2tower.residue import all_gl2, mat_inv, mat_mul, unpack
from gl2tower.subgroup import OpenSubgroup, close_array, from_generators_mod, full_group

H556_GENS = [(7, 0, 0, 3), (3, 5, 14, 7), (7, 7, 2, 1)]  # level 16, index 96
H57_GENS = [(11, 4, 8, 3), (15, 11, 0, 1), (7, 2, 2, 1), (15, 15, 1, 0)]


def test_ambient_table_partitions():
    tab = ambient_table(8)
    assert tab.class_sizes.sum() == tab.order == 1536
    # transporters actually transport
    for i in (0, 100, 777):
        x = unpack(int(tab.elements[i]), 8)
        cid = int(tab.class_id[i])
        rep = unpack(int(tab.class_reps[cid]), 8)
        t = unpack(int(tab.transporter[i]), 8)
        assert mat_mul(mat_mul(t, rep, 8), mat_inv(t, 8), 8) == x


def test_self_conjugate():
    H = from_generators_mod(H57_GENS, 16)
    g = is_conjugate(H, H)
    assert g == (1, 0, 0, 1)


def test_conjugate_by_construction():
    H = from_generators_mod(H556_GENS, 16)
    for g in [(3, 2, 5, 1), (0, 1, 1, 0), (1, 4, 3, 13)]:
        K = conjugate_subgroup(g, H)
        w = is_conjugate(H, K)
        assert w is not None
        assert conjugate_subgroup(w, H) == K


def test_borel_upper_lower_conjugate_mod4():
    upper = from_generators_mod([(1, 1, 0, 1), (3, 0, 0, 1), (1, 0, 0, 3)], 4)
    lower = from_generators_mod([(1, 0, 1, 1), (3, 0, 0, 1), (1, 0, 0, 3)], 4)
    w = is_conjugate(upper, lower)
    assert w is not None
    # brute-force transporter oracle over all 96 ambient elements
    brute = None
    for v in all_gl2(4):
        g = unpack(int(v), 4)
        if conjugate_subgroup(g, upper) == lower:
            brute = g
            break
    assert brute is not None
    assert conjugate_subgroup((0, 1, 1, 0), upper) == lower


def test_non_conjugate_different_groups():
    H = from_generators_mod(H556_GENS, 16)
    K = from_generators_mod(H57_GENS, 16)
    # indexes differ (96 vs 16), quick sanity
    assert H.order != K.order
    assert is_conjugate(H, K) is None


def test_count_ambient_conjugates_full_and_normal():
    assert count_ambient_conjugates(full_group()) == 1
    # full preimage of {+-I} mod 4 is normal
    H = from_generators_mod([(3, 0, 0, 3)], 4)
    assert count_ambient_conjugates(H) == 1


def test_count_ambient_conjugates_h556():
    H = from_generators_mod(H556_GENS, 16)
    assert H.index == 96
    assert count_ambient_conjugates(H) == 24


def test_conjugacy_classes_abelian():
    H = from_generators_mod([(3, 0, 0, 3), (3, 0, 0, 1)], 4)
    classes = conjugacy_classes(H)
    assert all(size == 1 for _, size in classes)
    assert len(classes) == H.order


def test_conjugacy_classes_h556_mod16():
    H = from_generators_mod(H556_GENS, 16)
    assert len(conjugacy_classes(H, 16)) == 46


def test_conjugacy_classes_h57_mod32():
    H = from_generators_mod(H57_GENS, 16)
    assert len(conjugacy_classes(H, 32)) == 416


def test_lift_generating_mats_cover():
    H = from_generators_mod(H556_GENS, 16)
    gens = lift_generating_mats(H, 32)
    from gl2tower.residue import pack

    got = close_array([pack(g, 32) for g in gens], 32)
    assert got.size == H.order * 16


def test_is_conjugate_into_containment():
    H57 = from_generators_mod(H57_GENS, 16)
    G = full_group()
    assert is_conjugate_into(H57, G) is not None
    # H57 inside itself
    assert is_conjugate_into(H57, H57) is not None
    # the big group does not embed in the small one
    assert is_conjugate_into(G, H57) is None


def test_is_conjugate_into_via_conjugated_overgroup():
    H556 = from_generators_mod(H556_GENS, 16)
    g = (1, 2, 7, 3)
    K = conjugate_subgroup(g, H556)
    # K is conjugate-into any overgroup of H556; use adjoined transpose trick:
    assert is_conjugate_into(K, H556) is not None


def test_full_preimage_conjugacy_equivalence_spotcheck():
    # conjugacy verdicts agree computed at the level and one level up
    rng = np.random.default_rng(1)
    H = from_generators_mod([(1, 1, 0, 1), (0, 1, 3, 0), (3, 0, 0, 1)], 4)
    K_yes = conjugate_subgroup((1, 2, 1, 3), H)
    up = 2 * H.level
    H_up = OpenSubgroup(up, [], elements=H.lift(up))
    K_up = OpenSubgroup(up, [], elements=K_yes.lift(up))
    # normalization drops both back to level 4; force comparison via sets
    assert (is_conjugate(H, K_yes) is not None) == (is_conjugate(H_up, K_up) is not None)
