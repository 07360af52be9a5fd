"""Conjugacy-invariant signatures of finite subgroups of GL2 over Z/l Z and
Z/l^2 Z: the set of (det, trace, rank of fixed submodule) triples.

At prime modulus the signature determines the subgroup up to conjugacy
(checkable exhaustively for small primes); at prime-square modulus it does
not, and the canonical order-l counterexample pair is exercised in tests.
"""

from dataclasses import dataclass

from . import residue
from .residue import Mat, mat_mul, mat_reduce
from .subgroup import close


@dataclass(frozen=True)
class Signature:
    modulus: int
    triples: frozenset  # set of (det, trace, fix_rank)
    counted: tuple  # sorted ((det, trace, fix_rank), multiplicity) pairs

    def as_sorted_list(self):
        return sorted(self.triples)


def _prime_of(modulus: int) -> int:
    p = residue.min_prime_factor(modulus)
    if modulus not in (p, p * p):
        raise ValueError("modulus must be a prime or a prime square")
    return p


def fix_rank(A: Mat, modulus: int) -> int:
    """Minimal generator count of {v : vA = v} as a Z/modulus-module.

    Equals log_p of the number of p-torsion fixed vectors: an abelian
    p-group needs one generator per nonzero invariant factor, and each
    contributes exactly p torsion points.
    """
    p = _prime_of(modulus)
    a, b, c, d = A
    am = ((a - 1) % modulus, b % modulus, c % modulus, (d - 1) % modulus)
    step = modulus // p  # p-torsion vectors are multiples of modulus/p
    count = 0
    for x in range(0, modulus, step):
        for y in range(0, modulus, step):
            if (x * am[0] + y * am[2]) % modulus == 0 and (x * am[1] + y * am[3]) % modulus == 0:
                count += 1
    rank = 0
    while count > 1:
        count //= p
        rank += 1
    return rank


def signature(generators: list[Mat], modulus: int) -> Signature:
    _prime_of(modulus)
    elements = close(generators, modulus)
    triples = frozenset(
        (residue.mat_det(A, modulus), residue.mat_trace(A, modulus), fix_rank(A, modulus))
        for A in elements
    )
    return Signature(modulus, triples)


def _order_profile(elements: frozenset, modulus: int):
    prof = {}
    for A in elements:
        o = 1
        cur = A
        ident = residue.identity(modulus)
        while cur != ident:
            cur = mat_mul(cur, A, modulus)
            o += 1
        key = (residue.mat_det(A, modulus), residue.mat_trace(A, modulus), o)
        prof[key] = prof.get(key, 0) + 1
    return tuple(sorted(prof.items()))


def conjugate_set(g: Mat, elements: frozenset, modulus: int) -> frozenset:
    gi = residue.mat_inv(g, modulus)
    return frozenset(mat_mul(mat_mul(g, A, modulus), gi, modulus) for A in elements)


def are_conjugate_subgroups(A: frozenset, B: frozenset, modulus: int) -> bool:
    """Exhaustive transporter search in GL2(Z/modulus)."""
    if len(A) != len(B):
        return False
    if A == B:
        return True
    for v in residue.all_gl2(modulus):
        g = residue.unpack(int(v), modulus)
        if conjugate_set(g, A, modulus) == B:
            return True
    return False


def all_subgroups_up_to_conjugacy(modulus: int):
    """Subgroup classes of GL2(Z/modulus), modulus a small prime.

    Breadth-first closure over extensions of class representatives by one
    element; class dedup by exhaustive transporter behind an order-profile
    prefilter.  Returns a list of (element set, generators).
    """
    G = [residue.unpack(int(v), modulus) for v in residue.all_gl2(modulus)]
    ident = residue.identity(modulus)
    classes: list[tuple[frozenset, list]] = [(frozenset([ident]), [])]
    profiles = {_order_profile(classes[0][0], modulus): [0]}
    seen_sets = {classes[0][0]}
    frontier = [0]
    while frontier:
        nxt = []
        for ci in frontier:
            H, gens = classes[ci]
            reps = _coset_reps(G, H, modulus)
            for y in reps:
                if y in H:
                    continue
                T = frozenset(close(gens + [y], modulus))
                if T in seen_sets:
                    continue
                seen_sets.add(T)
                prof = _order_profile(T, modulus)
                bucket = profiles.setdefault(prof, [])
                if any(are_conjugate_subgroups(T, classes[j][0], modulus) for j in bucket):
                    continue
                bucket.append(len(classes))
                nxt.append(len(classes))
                classes.append((T, gens + [y]))
        frontier = nxt
    return classes


def _coset_reps(G, H: frozenset, modulus: int):
    seen = set()
    reps = []
    for g in G:
        coset = frozenset(mat_mul(h, g, modulus) for h in H)
        if coset not in seen:
            seen.add(coset)
            reps.append(g)
    return reps


def signature_separates(ell: int):
    """True iff equal signatures imply conjugacy among subgroups of
    GL2(F_ell); returns (verdict, violating class pairs)."""
    if ell not in (2, 3, 5):
        raise ValueError("exhaustive check supported for ell in {2, 3, 5}")
    classes = all_subgroups_up_to_conjugacy(ell)
    by_sig: dict[frozenset, list[int]] = {}
    for i, (H, gens) in enumerate(classes):
        sig = signature(gens, ell) if gens else signature([residue.identity(ell)], ell)
        by_sig.setdefault(sig.triples, []).append(i)
    violations = []
    for sig, members in by_sig.items():
        for i in range(len(members)):
            for j in range(i + 1, len(members)):
                A, B = classes[members[i]][0], classes[members[j]][0]
                if not are_conjugate_subgroups(A, B, ell):
                    violations.append((members[i], members[j]))
    return (not violations), violations


def order_ell_pair(ell: int):
    """The two order-ell subgroups of GL2(Z/ell^2) generated by
    [[1-l, l],[0, 1+l]] and [[1-l, -l],[0, 1+l]]."""
    m = ell * ell
    g1 = mat_reduce((1 - ell, ell, 0, 1 + ell), m)
    g2 = mat_reduce((1 - ell, -ell, 0, 1 + ell), m)
    return g1, g2
