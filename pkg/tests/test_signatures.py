import pytest

from gl2tower.residue import identity, minus_identity
from gl2tower.signatures import (
    Signature,
    all_subgroups_up_to_conjugacy,
    are_conjugate_subgroups,
    conjugate_set,
    fix_rank,
    order_ell_pair,
    signature,
    signature_separates,
)
from gl2tower.subgroup import close


def test_trivial_group_mod2():
    sig = signature([identity(2)], 2)
    assert sig.triples == frozenset({(1, 0, 2)})


def test_order_two_group_mod3():
    sig = signature([minus_identity(3)], 3)
    # -I has det 1, trace -2 = 1 mod 3, fixes only 0
    assert sig.triples == frozenset({(1, 2, 2), (1, 1, 0)})


def test_fix_rank_examples():
    assert fix_rank(identity(4), 4) == 2
    assert fix_rank((1, 0, 0, 3), 4) == 1
    assert fix_rank(minus_identity(5), 5) == 0
    # mod 9: [[4,0],[0,7]] - I = [[3,0],[0,6]]: kernel = 3Z/9 x 3Z/9, two generators...
    # each invariant factor Z/3: p-torsion count 9 -> rank 2
    assert fix_rank((4, 0, 0, 7), 9) == 2


def test_mod9_pair_same_signature():
    g1, g2 = order_ell_pair(3)
    assert g1 == (7, 3, 0, 4) and g2 == (7, 6, 0, 4)
    s1 = signature([g1], 9)
    s2 = signature([g2], 9)
    assert s1.triples == s2.triples


def test_mod9_pair_not_conjugate():
    g1, g2 = order_ell_pair(3)
    H1 = frozenset(close([g1], 9))
    H2 = frozenset(close([g2], 9))
    assert len(H1) == len(H2) == 3
    assert not are_conjugate_subgroups(H1, H2, 9)


def test_signature_conjugation_invariant():
    g1, _ = order_ell_pair(3)
    H = close([g1], 9)
    for g in [(1, 1, 0, 1), (2, 1, 1, 1), (4, 3, 2, 5)]:
        K = conjugate_set(g, frozenset(H), 9)
        sig_h = signature(list(H), 9)
        sig_k = signature(list(K), 9)
        assert sig_h.triples == sig_k.triples


def test_signature_separates_2():
    ok, violations = signature_separates(2)
    assert ok, violations


def test_signature_separates_3():
    ok, violations = signature_separates(3)
    assert ok, violations


@pytest.mark.slow
def test_signature_separates_5():
    ok, violations = signature_separates(5)
    assert ok, violations


def test_fix_rank_needed_for_gl2f2():
    # dropping the fixed-space rank merges the trivial and order-2 subgroups
    triv = signature([identity(2)], 2)
    order2 = signature([(1, 1, 0, 1)], 2)
    assert triv.triples != order2.triples
    without_rank_t = {(d, t) for d, t, _ in triv.triples}
    without_rank_o = {(d, t) for d, t, _ in order2.triples}
    assert without_rank_t == without_rank_o


def test_subgroup_classes_gl2f2():
    classes = all_subgroups_up_to_conjugacy(2)
    # GL2(F2) = S3: subgroup classes are 1, C2, C3, S3
    assert sorted(len(H) for H, _ in classes) == [1, 2, 3, 6]
