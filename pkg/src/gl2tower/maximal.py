"""Maximal open subgroups of an open subgroup of GL2(Z2).

Work happens in the finite quotient Q = H mod 2^(k+1) (mod 8 for levels
below 4), which contains every maximal subgroup because the congruence
kernel one level down is inside the Frattini subgroup.  Indices of maximal
subgroups here are always 2, 3 or 4: chief factors of Q sit inside the
congruence layers, which carry the scalar / trace-zero filtration, so they
have order 2, 3 or 4.

Routes, each complete for its index:

  index 2: kernels of Q -> F2, i.e. hyperplanes of Q / <squares, commutators>
           (the squares-quotient hyperplane construction);
  index 3: every index-3 subgroup contains the mod-2 kernel K2 (its index in
           the 2-group K2 would be an odd 2-power), so pull back the index-3
           subgroups of the mod-2 image, a subgroup of GL2(F2);
  index 4: a maximal index-4 subgroup gives a primitive degree-4 coset
           action, so a surjection onto A4 or S4 whose Klein-four preimage
           is exactly K2.  These correspond to Q-invariant codimension-2
           subspaces U of D = K2/Phi(K2) with D/U the standard GL2(F2)
           module; the quotient Q/U~ is then A4 or S4 (the extension always
           splits) and the children are preimages of its point stabilizers.
"""

import numpy as np

from . import residue
from .residue import Mat, mat_inv, mat_mul, mat_mul_arrays, pack, unpack
from .subgroup import OpenSubgroup, close_array, generating_set
from .conjugacy import is_conjugate, lift_generating_mats


class MaximalSet:
    """Maximal subgroups of a parent, deduplicated up to ambient conjugacy."""

    __slots__ = ("parent_fingerprint", "children", "indices", "completeness_note")

    def __init__(self, parent_fingerprint, children, indices, completeness_note):
        self.parent_fingerprint = parent_fingerprint
        self.children = children
        self.indices = indices
        self.completeness_note = completeness_note

    def __iter__(self):
        return iter(zip(self.children, self.indices))

    def __len__(self):
        return len(self.children)


def working_modulus(level: int) -> int:
    return max(8, 2 * level)


def _member(sorted_arr, values):
    idx = np.searchsorted(sorted_arr, values)
    idx = np.clip(idx, 0, sorted_arr.size - 1)
    return sorted_arr[idx] == values


def _coset_ids(elements, subgroup, m):
    """Left==right coset decomposition by a normal subgroup (packed arrays)."""
    n = elements.size
    cid = np.full(n, -1, dtype=np.int64)
    reps = []
    next_id = 0
    for i in range(n):
        if cid[i] >= 0:
            continue
        rep = np.int64(elements[i])
        coset = mat_mul_arrays(rep, subgroup, m)
        rank = np.searchsorted(elements, np.sort(coset))
        cid[rank] = next_id
        reps.append(int(rep))
        next_id += 1
    return cid, reps


def _normal_closure(seed_packed, conj_gens_packed, m):
    """Subgroup generated by `seed` closed under conjugation by the given
    generators (and their inverses)."""
    conj = []
    for g in conj_gens_packed:
        gm = unpack(int(g), m)
        conj.append((np.int64(g), np.int64(pack(mat_inv(gm, m), m))))
    current = close_array(seed_packed, m)
    while True:
        new_seeds = []
        for gp, gi in conj:
            img = mat_mul_arrays(mat_mul_arrays(gp, current, m), gi, m)
            img = np.sort(img)
            outside = img[~_member(current, img)]
            if outside.size:
                new_seeds.append(outside)
        if not new_seeds:
            return current
        seeds = np.unique(np.concatenate([current] + new_seeds))
        current = close_array(seeds.tolist(), m)


def _elementary_coords(coset_mult, e_id):
    """F2 coordinates on an elementary abelian 2-group given its mult table."""
    t = len(coset_mult)
    coords = {e_id: 0}
    dim = 0
    for c in range(t):
        if c in coords:
            continue
        bit = 1 << dim
        dim += 1
        for v, bits in list(coords.items()):
            coords[coset_mult[v][c]] = bits | bit
    assert len(coords) == t == 1 << dim
    return coords, dim


def _coset_mult_table(reps, subgroup_elements, elements, cid, m):
    t = len(reps)
    table = [[0] * t for _ in range(t)]
    for i in range(t):
        for j in range(t):
            p = pack(mat_mul(unpack(reps[i], m), unpack(reps[j], m), m), m)
            table[i][j] = int(cid[np.searchsorted(elements, p)])
    return table


def _index2_children(Q, gens_mats, m):
    """All index-2 subgroups of Q via the squares-quotient hyperplanes."""
    if not gens_mats:
        return []
    seeds = [pack(mat_mul(g, g, m), m) for g in gens_mats]
    for i in range(len(gens_mats)):
        for j in range(len(gens_mats)):
            if i != j:
                gi, gj = gens_mats[i], gens_mats[j]
                comm = mat_mul(mat_mul(gi, gj, m), mat_inv(mat_mul(gj, gi, m), m), m)
                seeds.append(pack(comm, m))
    gens_packed = [pack(g, m) for g in gens_mats]
    N = _normal_closure(seeds, gens_packed, m)
    if N.size == Q.size:
        return []
    cid, reps = _coset_ids(Q, N, m)
    table = _coset_mult_table(reps, N, Q, cid, m)
    e_id = int(cid[np.searchsorted(Q, pack(residue.identity(m), m))])
    coords, dim = _elementary_coords(table, e_id)
    assert dim <= 16, "unexpectedly large elementary-2 quotient"
    coord_of_coset = np.zeros(len(reps), dtype=np.int64)
    for c, bits in coords.items():
        coord_of_coset[c] = bits
    elem_coords = coord_of_coset[cid]
    children = []
    for chi in range(1, 1 << dim):
        parity = np.bitwise_count(elem_coords & chi) & 1
        children.append(Q[parity == 0])
    return children


def _mod2_image_data(Q, m):
    red = residue.reduce_array(Q, m, 2)
    image = np.unique(red)
    k2 = Q[red == pack(residue.identity(2), 2)]
    return image, red, k2


def _index3_children(Q, red2, image):
    """Pull back index-3 subgroups of the mod-2 image."""
    r = image.size
    if r == 3:
        return [Q[red2 == pack(residue.identity(2), 2)]]
    if r != 6:
        return []
    children = []
    for v in image:
        mat = unpack(int(v), 2)
        if mat != (1, 0, 0, 1) and mat_mul(mat, mat, 2) == (1, 0, 0, 1):
            keep = (red2 == pack(residue.identity(2), 2)) | (red2 == v)
            children.append(Q[keep])
    assert len(children) == 3
    return children


def _f2_nullspace(rows, width):
    """Nullspace basis of an F2 system given as bitmask rows (RREF)."""
    pivots: dict[int, int] = {}
    for r in rows:
        r = int(r)
        while r:
            lead = r.bit_length() - 1
            if lead in pivots:
                r ^= pivots[lead]
            else:
                for l2 in list(pivots):
                    if (pivots[l2] >> lead) & 1:
                        pivots[l2] ^= r
                pivots[lead] = r
                break
    basis = []
    for fc in range(width):
        if fc in pivots:
            continue
        vec = 1 << fc
        for lead, row in pivots.items():
            if (row >> fc) & 1:
                vec |= 1 << lead
        basis.append(vec)
    return basis


def _index4_children(Q, gens_mats, red2, image, k2, m):
    """Maximal index-4 subgroups.

    A codimension-2 subspace U of D = K2/Phi(K2) yields the quotient
    Q/(preimage of U) isomorphic to A4 or S4 exactly when U is invariant
    under the conjugation action and an order-3 element acts on D/U with
    no nonzero fixed vector (the action is then faithful and the extension
    splits).  Children are preimages of the four point stabilizers.
    """
    r = image.size
    if r not in (3, 6):
        return []
    k2_gens = generating_set(k2, m)
    if not k2_gens:
        return []
    seeds = [pack(mat_mul(g, g, m), m) for g in k2_gens]
    for i in range(len(k2_gens)):
        for j in range(len(k2_gens)):
            if i != j:
                comm = mat_mul(
                    mat_mul(k2_gens[i], k2_gens[j], m),
                    mat_inv(mat_mul(k2_gens[j], k2_gens[i], m), m),
                    m,
                )
                seeds.append(pack(comm, m))
    phi = _normal_closure(seeds, [pack(g, m) for g in k2_gens], m)
    if phi.size == k2.size:
        return []
    cid, reps = _coset_ids(k2, phi, m)
    table = _coset_mult_table(reps, phi, k2, cid, m)
    e_id = int(cid[np.searchsorted(k2, pack(residue.identity(m), m))])
    coords, dim = _elementary_coords(table, e_id)
    if dim < 2:
        return []
    assert dim <= 14, "unexpectedly large Frattini quotient"
    coord_of_coset = np.zeros(len(reps), dtype=np.int64)
    for c, bits in coords.items():
        coord_of_coset[c] = bits
    elem_coords = coord_of_coset[cid]

    basis_reps = []
    for bit in range(dim):
        want = 1 << bit
        for c, bits in coords.items():
            if bits == want:
                basis_reps.append(unpack(reps[c], m))
                break

    def d_coords_of(mat):
        return int(elem_coords[int(np.searchsorted(k2, pack(mat, m)))])

    def action_rows(g):
        # row i = coordinates of g * basis_i * g^-1
        gi = mat_inv(g, m)
        return [d_coords_of(mat_mul(mat_mul(g, b, m), gi, m)) for b in basis_reps]

    act = [action_rows(g) for g in gens_mats]

    def dual_image(rows, f):
        # functional f |-> f o (action): bit i = parity(rows[i] & f)
        out = 0
        for i in range(dim):
            if (rows[i] & f).bit_count() & 1:
                out |= 1 << i
        return out

    # an element of Q whose mod-2 image has order 3
    order3_packed = (pack((0, 1, 1, 1), 2), pack((1, 1, 1, 0), 2))
    hits = np.flatnonzero((red2 == order3_packed[0]) | (red2 == order3_packed[1]))
    assert hits.size
    order3 = unpack(int(Q[hits[0]]), m)
    w_rows = action_rows(order3)

    children = []
    full = 1 << dim
    for f1 in range(1, full):
        for f2 in range(f1 + 1, full):
            f3 = f1 ^ f2
            if f3 < f2:
                continue  # canonical triple representative
            span = {0, f1, f2, f3}
            if any(dual_image(rows, f) not in span for rows in act for f in (f1, f2)):
                continue
            # matrix of the order-3 action on the 2-dim dual span
            g1, g2 = dual_image(w_rows, f1), dual_image(w_rows, f2)
            b11, b21 = (g1 == f1 or g1 == f3), (g1 == f2 or g1 == f3)
            b12, b22 = (g2 == f1 or g2 == f3), (g2 == f2 or g2 == f3)
            trace = int(b11) ^ int(b22)
            det = (int(b11) & int(b22)) ^ (int(b12) & int(b21))
            if not (trace == 1 and det == 1):
                continue  # order-3 action has a fixed vector: not A4/S4
            in_u = ((np.bitwise_count(elem_coords & f1) & 1) == 0) & (
                (np.bitwise_count(elem_coords & f2) & 1) == 0
            )
            upre = k2[in_u]
            qcid, qreps = _coset_ids(Q, upre, m)
            t = len(qreps)
            assert t == 4 * r
            qtable = _coset_mult_table(qreps, upre, Q, qcid, m)
            stabs = _small_subgroups_of_order(qtable, t // 4)
            assert len(stabs) == 4, "quotient is not A4/S4"
            for sub in stabs:
                keep = np.isin(qcid, np.fromiter(sub, dtype=np.int64))
                children.append(Q[keep])
    return children


def _small_subgroups_of_order(table, order):
    """All subgroups of the given order in a small group (mult table)."""
    t = len(table)
    found = set()
    e = _table_identity(table)

    def closure(gens):
        els = {e}
        frontier = [e]
        while frontier:
            nxt = []
            for x in frontier:
                for g in gens:
                    y = table[x][g]
                    if y not in els:
                        els.add(y)
                        nxt.append(y)
                    if len(els) > order:
                        return None
            frontier = nxt
        return frozenset(els)

    for i in range(t):
        c = closure([i])
        if c and len(c) == order:
            found.add(c)
        for j in range(i + 1, t):
            c = closure([i, j])
            if c and len(c) == order:
                found.add(c)
    return found


def _table_identity(table):
    t = len(table)
    for i in range(t):
        if table[i][i] == i and all(table[i][j] == j for j in range(t)):
            return i
    raise RuntimeError("no identity in multiplication table")


def maximal_subgroup_sets(H: OpenSubgroup):
    """Raw maximal subgroups as (packed element array, modulus, index) triples,
    deduplicated as sets but not yet up to conjugacy."""
    m = working_modulus(H.level)
    Q = H.lift(m)
    gens = lift_generating_mats(H, m)
    image, red2, k2 = _mod2_image_data(Q, m)
    children = []
    children += [(c, 2) for c in _index2_children(Q, gens, m)]
    children += [(c, 3) for c in _index3_children(Q, red2, image)]
    children += [(c, 4) for c in _index4_children(Q, gens, red2, image, k2, m)]
    out = []
    seen = set()
    for arr, idx in children:
        assert arr.size * idx == Q.size, "child has wrong index"
        key = hash(arr.tobytes())
        if key in seen:
            continue
        seen.add(key)
        out.append((arr, m, idx))
    return out


def maximal_subgroups(H: OpenSubgroup) -> MaximalSet:
    """Complete list of maximal open subgroups up to ambient conjugacy."""
    raw = maximal_subgroup_sets(H)
    kept: list[OpenSubgroup] = []
    indices: list[int] = []
    for arr, m, idx in raw:
        M = OpenSubgroup(m, [], elements=arr)
        if any(M.level == K.level and is_conjugate(M, K) is not None for K in kept):
            continue
        kept.append(M)
        indices.append(idx)
    order = sorted(range(len(kept)), key=lambda i: (indices[i], kept[i].fingerprint))
    kept = [kept[i] for i in order]
    indices = [indices[i] for i in order]
    note = f"working modulus {working_modulus(H.level)}, indices searched {{2,3,4}} (chief-factor bound)"
    return MaximalSet(H.fingerprint, kept, indices, note)


def minus_identity_free_index2_subgroups(H: OpenSubgroup, dedup: bool = True):
    """Index-2 subgroups of H not containing -I, each satisfying
    <K, -I> = H; deduplicated up to ambient conjugacy unless dedup=False."""
    from .subgroup import predicates

    if not predicates(H).contains_minus_identity:
        raise ValueError("-I must lie in H")
    m = working_modulus(H.level)
    Q = H.lift(m)
    gens = lift_generating_mats(H, m)
    neg = pack(residue.minus_identity(m), m)
    out = []
    for arr in _index2_children(Q, gens, m):
        i = int(np.searchsorted(arr, neg))
        if i < arr.size and int(arr[i]) == neg:
            continue
        out.append(OpenSubgroup(m, [], elements=arr))
    out.sort(key=lambda K: (K.level, K.fingerprint))
    if not dedup:
        return out
    kept: list[OpenSubgroup] = []
    for K in out:
        if not any(K.level == J.level and is_conjugate(K, J) is not None for J in kept):
            kept.append(K)
    return kept


def is_maximal(M: OpenSubgroup, H: OpenSubgroup) -> bool:
    """Exhaustive check: adjoining any element of H - M regenerates H.

    <M, x> only depends on the coset x M, so one representative per coset
    is enough.
    """
    m = max(working_modulus(H.level), M.level)
    if m % M.level or m % H.level:
        raise ValueError("incompatible levels")
    Hm = H.lift(m) if H.level < m else H.elements
    Mm = M.lift(m) if M.level < m else M.elements
    inside = _member(Hm, Mm)
    if not inside.all() or Mm.size == Hm.size:
        raise ValueError("M must be a proper subgroup of H")
    m_gens = [pack(g, m) for g in (lift_generating_mats(M, m) if M.level < m else M.generating_mats())]
    reps = _right_coset_reps(Hm, Mm, m)
    for p in reps:
        if _member(Mm, np.array([p], dtype=np.int64))[0]:
            continue
        got = close_array(m_gens + [p], m)
        if got.size != Hm.size:
            return False
    return True


def _right_coset_reps(elements, subgroup, m):
    """First element of each right coset subgroup*x."""
    n = elements.size
    assigned = np.zeros(n, dtype=bool)
    reps = []
    for i in range(n):
        if assigned[i]:
            continue
        rep = np.int64(elements[i])
        coset = np.sort(mat_mul_arrays(subgroup, rep, m))
        assigned[np.searchsorted(elements, coset)] = True
        reps.append(int(rep))
    return reps


def audit_maximal_subgroups(H: OpenSubgroup, max_index: int = 8, size_limit: int = 400):
    """Brute-force diagnostic for small parents: enumerate the full subgroup
    lattice of the working quotient by extending generator sets, then keep
    the maximal proper subgroups.  Reports any of index > 4, which would
    contradict the chief-factor bound underlying the fast search.
    Returns a list of (element array, index)."""
    m = working_modulus(H.level)
    Q = H.lift(m)
    if Q.size > size_limit:
        raise ValueError("audit limited to small parents")
    trivial = close_array([], m)
    subs = {trivial.tobytes(): (trivial, [])}
    frontier = [(trivial, [])]
    while frontier:
        nxt = []
        for S, gens in frontier:
            if S.size == Q.size:
                continue
            for p in _right_coset_reps(Q, S, m):
                if _member(S, np.array([p], dtype=np.int64))[0]:
                    continue
                T = close_array(gens + [p], m)
                key = T.tobytes()
                if key not in subs:
                    entry = (T, gens + [p])
                    subs[key] = entry
                    nxt.append(entry)
        frontier = nxt
    proper = sorted((S for S, _ in subs.values() if S.size < Q.size), key=lambda a: -a.size)
    out = []
    for s in proper:
        if any(t.size > s.size and bool(_member(t, s).all()) for t in proper):
            continue
        if Q.size // s.size <= max_index:
            out.append((s, Q.size // s.size))
    return out
