import pytest
from fractions import Fraction

from gl2tower.curve import CurveInvariants, cusp_count, cusp_count_p1, invariants
from gl2tower.subgroup import OpenSubgroup, from_generators_mod, full_group, close
from gl2tower.residue import gl2_order, sl2_order

H57_GENS = [(11, 4, 8, 3), (15, 11, 0, 1), (7, 2, 2, 1), (15, 15, 1, 0)]
K_AUX_GENS = [(13, 2, 14, 11), (1, 1, 15, 0), (1, 0, 7, 7)]
H155_GENS = [(1, 3, 0, 3), (1, 0, 2, 3), (1, 3, 12, 3), (1, 1, 12, 7)]


def nonsplit_cartan_normalizer(m: int) -> OpenSubgroup:
    """Unit group of the unramified quadratic order (basis 1, w with
    w^2 = w + 1, so mult-by-(a + bw) has matrix [[a,b],[b,a+b]]) plus the
    conjugation involution, as full preimage at modulus m.

    The variant built from the non-maximal order Z[sqrt(5)], with matrices
    [[a,b],[5b,a]], generates a strictly smaller group (index 96 instead
    of 64 at m = 16) whose curve has genus 3, not 2.
    """
    gens = []
    for a in range(m):
        for b in range(m):
            if (a % 2, b % 2) != (0, 0):
                gens.append((a, b, b, (a + b) % m))
    gens.append((1, 0, 1, m - 1))
    return from_generators_mod(gens, m)


def test_full_group_is_x1():
    inv = invariants(full_group())
    assert (inv.psl2_index, inv.cusps, inv.e2, inv.e3, inv.genus) == (1, 1, 1, 1, 0)


def test_invariants_stable_under_larger_modulus():
    H = from_generators_mod(H57_GENS, 16)
    a = invariants(H)
    b = invariants(H, modulus=32)
    assert (a.psl2_index, a.cusps, a.e2, a.e3, a.genus) == (b.psl2_index, b.cusps, b.e2, b.e3, b.genus)
    G = full_group()
    c = invariants(G, modulus=8)
    assert (c.psl2_index, c.cusps, c.e2, c.e3, c.genus) == (1, 1, 1, 1, 0)


def test_h57_has_two_cusps():
    assert cusp_count(from_generators_mod(H57_GENS, 16)) == 2


def test_aux_subgroup_has_eight_cusps():
    assert cusp_count(from_generators_mod(K_AUX_GENS, 16)) == 8


def test_nonsplit_cartan_normalizer_mod16_genus_2():
    H = nonsplit_cartan_normalizer(16)
    assert invariants(H).genus == 2


def test_full_level8_structure_genus5_cusps24():
    # Gamma(8) as an open subgroup: level 8, trivial reduction
    H = OpenSubgroup(8, [])
    inv = invariants(H)
    # classical X(N): g = 1 + d(N-6)/(12N) with d = |SL2(Z/N)|/2
    d = sl2_order(8) // 2
    g_classical = 1 + Fraction(d * (8 - 6), 12 * 8)
    assert inv.genus == g_classical == 5
    assert inv.cusps == d // 8 == 24
    assert inv.e2 == inv.e3 == 0


def test_riemann_hurwitz_consistency():
    for gens, mod in [(H57_GENS, 16), (K_AUX_GENS, 16), (H155_GENS, 16)]:
        inv = invariants(from_generators_mod(gens, mod))
        assert 12 * (inv.genus - 1) + 6 * inv.cusps + 3 * inv.e2 + 4 * inv.e3 == inv.psl2_index


def test_genus_conjugation_and_transpose_invariant():
    from gl2tower.conjugacy import conjugate_subgroup
    from gl2tower.subgroup import transpose

    H = from_generators_mod(H57_GENS, 16)
    base = invariants(H)
    for g in [(1, 2, 3, 7), (0, 1, 1, 0), (5, 4, 2, 1)]:
        K = conjugate_subgroup(g, H)
        inv = invariants(K)
        assert (inv.genus, inv.cusps, inv.e2, inv.e3) == (base.genus, base.cusps, base.e2, base.e3)
    T = transpose(H)
    inv = invariants(T)
    assert (inv.genus, inv.cusps, inv.e2, inv.e3) == (base.genus, base.cusps, base.e2, base.e3)


def test_p1_variant_agrees_on_known_examples():
    for gens, mod, expected in [(H57_GENS, 16, 2), (K_AUX_GENS, 16, 8)]:
        H = from_generators_mod(gens, mod)
        assert cusp_count_p1(H) == expected == cusp_count(H)
    assert cusp_count_p1(full_group()) == 1


def test_h155_genus_one():
    # its curve is an elliptic curve in the reference data
    H = from_generators_mod(H155_GENS, 16)
    assert H.index == 24
    assert invariants(H).genus == 1
