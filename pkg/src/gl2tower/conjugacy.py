"""Conjugacy tests, conjugacy classes, normalizers, containment transporters.

Two open subgroups are GL2(Z2)-conjugate iff their reductions at the common
(maximal) level are conjugate in GL2(Z/2^m Z): conjugation preserves the
congruence kernels, so any finite conjugator lifts to one of the full
preimages and conversely.  All searches below therefore run in the finite
ambient group at the appropriate level.

Per-level ambient tables (every element, its conjugacy class id, and a
transporter to the class representative) make the searches cheap: the
candidates for g with g H g^-1 = K form cosets of a centralizer, which cuts
the ambient scan by the size of a conjugacy class.
"""

import threading

import numpy as np

from . import residue
from .residue import Mat, identity, mat_inv, mat_mul, mat_mul_arrays, pack, unpack
from .subgroup import OpenSubgroup, close_array

_lock = threading.Lock()
_ambient_cache: dict[int, "AmbientTable"] = {}
_conjugacy_memo: dict[tuple[str, str], tuple] = {}


def _ambient_generators(m: int) -> list[Mat]:
    gens = [(1, 1, 0, 1), (1, 0, 1, 1)]
    if m > 2:
        gens.append((m - 1, 0, 0, 1))
        if m > 4:
            gens.append((5 % m, 0, 0, 1))
    return [residue.mat_reduce(g, m) for g in gens]


class AmbientTable:
    """Conjugacy data for the full group GL2(Z/2^m Z)."""

    def __init__(self, modulus: int):
        self.modulus = modulus
        self.elements = residue.all_gl2(modulus)  # sorted packed
        n = self.elements.size
        self.class_id = np.full(n, -1, dtype=np.int32)
        self.transporter = np.zeros(n, dtype=np.int64)  # g with g*rep*g^-1 = x
        gens = _ambient_generators(modulus)
        gpk = [np.int64(pack(g, modulus)) for g in gens]
        # conjugation by each generator as a permutation of element ranks
        perms = []
        for g in gens:
            conj = residue.conjugate_array(g, self.elements, modulus)
            perms.append(np.searchsorted(self.elements, conj))
        id_pk = np.int64(pack(identity(modulus), modulus))
        reps = []
        cid = 0
        cursor = 0
        while cursor < n:
            if self.class_id[cursor] >= 0:
                cursor += 1
                continue
            reps.append(int(self.elements[cursor]))
            self.class_id[cursor] = cid
            self.transporter[cursor] = id_pk
            frontier = np.array([cursor], dtype=np.int64)
            while frontier.size:
                t_fr = self.transporter[frontier]
                nxt_ranks = []
                nxt_t = []
                for gi in range(len(perms)):
                    nxt_ranks.append(perms[gi][frontier])
                    nxt_t.append(mat_mul_arrays(gpk[gi], t_fr, modulus))
                rank = np.concatenate(nxt_ranks)
                tnew = np.concatenate(nxt_t)
                order = np.argsort(rank, kind="stable")
                rank = rank[order]
                tnew = tnew[order]
                keep = np.ones(rank.size, dtype=bool)
                keep[1:] = rank[1:] != rank[:-1]
                rank = rank[keep]
                tnew = tnew[keep]
                fresh = self.class_id[rank] < 0
                rank = rank[fresh]
                self.class_id[rank] = cid
                self.transporter[rank] = tnew[fresh]
                frontier = rank
            cid += 1
        self.class_reps = np.array(reps, dtype=np.int64)
        self.class_sizes = np.bincount(self.class_id, minlength=cid).astype(np.int64)
        self._centralizers: dict[int, np.ndarray] = {}

    @property
    def order(self) -> int:
        return int(self.elements.size)

    def rank_of(self, packed):
        r = np.searchsorted(self.elements, packed)
        return r

    def class_of_packed(self, packed):
        return self.class_id[self.rank_of(packed)]

    def class_counts(self, packed_subset) -> np.ndarray:
        cls = self.class_of_packed(np.asarray(packed_subset, dtype=np.int64))
        return np.bincount(cls, minlength=self.class_reps.size)

    def centralizer_of_rep(self, cid: int) -> np.ndarray:
        hit = self._centralizers.get(cid)
        if hit is not None:
            return hit
        m = self.modulus
        r = np.int64(self.class_reps[cid])
        left = mat_mul_arrays(self.elements, r, m)
        right = mat_mul_arrays(r, self.elements, m)
        cent = self.elements[left == right]
        self._centralizers[cid] = cent
        return cent

    def transporter_from_rep(self, packed):
        """g with g * rep * g^-1 = x for each packed x."""
        return self.transporter[self.rank_of(packed)]


def ambient_table(modulus: int) -> AmbientTable:
    with _lock:
        tab = _ambient_cache.get(modulus)
    if tab is None:
        tab = AmbientTable(modulus)
        with _lock:
            _ambient_cache[modulus] = tab
    return tab


def class_multiset_key(H: OpenSubgroup) -> bytes:
    """Ambient-conjugation invariant of the element set (exact for the
    purpose of prefiltering: conjugate subgroups have equal keys)."""
    if H.level == 1:
        return b"root"
    tab = ambient_table(H.level)
    counts = tab.class_counts(H.elements)
    return counts.tobytes()


def _membership(sorted_arr: np.ndarray, values: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(sorted_arr, values)
    idx = np.clip(idx, 0, sorted_arr.size - 1)
    return sorted_arr[idx] == values


def _pick_pivot(H: OpenSubgroup, tab: AmbientTable) -> int:
    """Generator (packed) of H lying in the largest ambient class."""
    gens = H.generating_mats()
    cands = [pack(g, H.level) for g in gens if g != identity(H.level)]
    if not cands:
        cands = [int(v) for v in H.elements[:8]]
    arr = np.array(cands, dtype=np.int64)
    cls = tab.class_of_packed(arr)
    return int(arr[np.argmax(tab.class_sizes[cls])])


def is_conjugate(H: OpenSubgroup, K: OpenSubgroup):
    """Conjugator g (as a matrix mod max level) with g H g^-1 = K, or None."""
    if H.level != K.level:
        return None
    m = H.level
    if m == 1:
        return identity(1)
    if H.order != K.order:
        return None
    key = (H.fingerprint, K.fingerprint)
    with _lock:
        if key in _conjugacy_memo:
            return _conjugacy_memo[key][0]
    g = _conjugator(H, K)
    with _lock:
        _conjugacy_memo[key] = (g,)
        _conjugacy_memo[(key[1], key[0])] = (mat_inv(g, m),) if g is not None else (None,)
    return g


def _conjugator(H: OpenSubgroup, K: OpenSubgroup):
    m = H.level
    if H.fingerprint == K.fingerprint:
        return identity(m)
    tab = ambient_table(m)
    if class_multiset_key(H) != class_multiset_key(K):
        return None
    gens = [pack(g, m) for g in H.generating_mats()]
    pivot = _pick_pivot(H, tab)
    if pivot not in gens:
        gens = [pivot] + gens
    else:
        gens = [pivot] + [g for g in gens if g != pivot]
    gens_arr = np.array(gens, dtype=np.int64)
    cid = int(tab.class_of_packed(np.array([pivot], dtype=np.int64))[0])
    t_h = np.int64(tab.transporter_from_rep(np.array([pivot], dtype=np.int64))[0])
    t_h_inv = np.int64(pack(mat_inv(unpack(int(t_h), m), m), m))
    cent = tab.centralizer_of_rep(cid)
    targets = K.elements[tab.class_of_packed(K.elements) == cid]
    if targets.size == 0:
        return None
    t_k = tab.transporter_from_rep(targets)
    # candidates g = t_k * c * t_h^-1 over targets x centralizer
    right = mat_mul_arrays(cent, t_h_inv, m)
    for i in range(t_k.size):
        g_cand = mat_mul_arrays(np.int64(t_k[i]), right, m)
        ok = np.ones(g_cand.size, dtype=bool)
        for gp in gens_arr:
            if not ok.any():
                break
            sub = g_cand[ok]
            ginv = _inv_array(sub, m)
            img = mat_mul_arrays(mat_mul_arrays(sub, gp, m), ginv, m)
            ok[np.flatnonzero(ok)[~_membership(K.elements, img)]] = False
        hits = np.flatnonzero(ok)
        if hits.size:
            return unpack(int(g_cand[hits[0]]), m)
    return None


def _inv_array(v: np.ndarray, m: int) -> np.ndarray:
    a, b, c, d = residue.unpack_array(v, m)
    det = (a * d - b * c) % m
    # batch modular inverse via pow on Python ints (m is a 2-power: unit
    # inverses by exponentiation with phi(m) - 1 would be fine too)
    det_inv = np.array([residue.inv_mod(int(x), m) for x in det], dtype=np.int64)
    return residue.pack_array((d * det_inv) % m, (-b * det_inv) % m, (-c * det_inv) % m, (a * det_inv) % m, m)


def lift_generating_mats(H: OpenSubgroup, m: int) -> list[Mat]:
    """Verified generating set for the full preimage of H mod m.

    Arbitrary lifts of the generators plus the elementary congruence
    matrices I + level*E usually suffice; the closure size is checked and
    the set extended greedily when the congruence layers need more.
    """
    if m % H.level:
        raise ValueError("modulus must be a multiple of the level")
    if m == H.level:
        return H.generating_mats()
    if H.level == 1:
        return _ambient_generators(m)
    target = H.lift(m)
    gens = [residue.mat_reduce(g, m) for g in H.generating_mats()]
    lvl = max(H.level, 2)
    for pos in range(4):
        e = [1, 0, 0, 1]
        e[pos] += lvl
        gens.append(tuple(x % m for x in e))
    got = close_array([pack(g, m) for g in gens], m)
    while got.size != target.size:
        missing = target[~_membership(got, target)]
        gens.append(unpack(int(missing[0]), m))
        got = close_array([pack(g, m) for g in gens], m)
    return gens


def conjugate_subgroup(g: Mat, H: OpenSubgroup) -> OpenSubgroup:
    m = H.level
    if m == 1:
        return H
    elems = residue.conjugate_array(g, H.elements, m)
    gens = [mat_mul(mat_mul(g, x, m), mat_inv(g, m), m) for x in H.generating_mats()]
    return OpenSubgroup(m, gens, elements=np.sort(elems))


def is_conjugate_into(K: OpenSubgroup, H: OpenSubgroup):
    """g with g K g^-1 inside H (as open subgroups), or None.

    H is lifted implicitly: membership of x mod level(K) in the lift of H
    only depends on x mod level(H).
    """
    if K.level % H.level:
        return None
    if H.level == 1:
        return identity(max(K.level, 2))
    m = K.level
    lam = residue.gl2_order(m) // residue.gl2_order(H.level) * H.order  # |lift of H mod m|
    if lam % K.order:
        return None
    tab = ambient_table(m)
    # class-count domination prefilter
    cnt_K = tab.class_counts(K.elements)
    cnt_H = _lift_class_counts(H, m)
    if (cnt_K > cnt_H).any():
        return None
    gens = [pack(g, m) for g in K.generating_mats()]
    pivot = _pick_pivot(K, tab)
    gens = [pivot] + [g for g in gens if g != pivot]
    gens_arr = np.array(gens, dtype=np.int64)
    cid = int(tab.class_of_packed(np.array([pivot], dtype=np.int64))[0])
    t_h = np.int64(tab.transporter_from_rep(np.array([pivot], dtype=np.int64))[0])
    t_h_inv = np.int64(pack(mat_inv(unpack(int(t_h), m), m), m))
    cent = tab.centralizer_of_rep(cid)
    cls_mask = tab.class_id == cid
    class_elems = tab.elements[cls_mask]
    targets = class_elems[H.contains_packed(class_elems, m)]
    if targets.size == 0:
        return None
    t_k = tab.transporter_from_rep(targets)
    right = mat_mul_arrays(cent, t_h_inv, m)
    for i in range(t_k.size):
        g_cand = mat_mul_arrays(np.int64(t_k[i]), right, m)
        ok = np.ones(g_cand.size, dtype=bool)
        for gp in gens_arr:
            if not ok.any():
                break
            sub = g_cand[ok]
            ginv = _inv_array(sub, m)
            img = mat_mul_arrays(mat_mul_arrays(sub, gp, m), ginv, m)
            ok[np.flatnonzero(ok)[~H.contains_packed(img, m)]] = False
        hits = np.flatnonzero(ok)
        if hits.size:
            return unpack(int(g_cand[hits[0]]), m)
    return None


_lift_counts_cache: dict[tuple[str, int], np.ndarray] = {}


def _lift_class_counts(H: OpenSubgroup, m: int) -> np.ndarray:
    key = (H.fingerprint, m)
    with _lock:
        hit = _lift_counts_cache.get(key)
    if hit is not None:
        return hit
    tab = ambient_table(m)
    mask = H.contains_packed(tab.elements, m)
    counts = np.bincount(tab.class_id[mask], minlength=tab.class_reps.size)
    with _lock:
        _lift_counts_cache[key] = counts
    return counts


def count_ambient_conjugates(H: OpenSubgroup) -> int:
    """Number of distinct GL2(Z2)-conjugates = |GL2(Z/level)| / |normalizer|."""
    m = H.level
    if m == 1:
        return 1
    tab = ambient_table(m)
    gens = np.array([pack(g, m) for g in H.generating_mats()], dtype=np.int64)
    norm = np.ones(tab.elements.size, dtype=bool)
    ginv = _inv_array(tab.elements, m)
    for gp in gens:
        img = mat_mul_arrays(mat_mul_arrays(tab.elements, gp, m), ginv, m)
        norm &= _membership(H.elements, img)
        if not norm.any():
            break
    n_norm = int(norm.sum())
    assert tab.order % n_norm == 0
    return tab.order // n_norm


def conjugacy_classes(H: OpenSubgroup, modulus: int | None = None) -> list[tuple[Mat, int]]:
    """(representative, class size) pairs of the finite group H mod modulus."""
    m = H.level if modulus is None else modulus
    if m % H.level:
        raise ValueError("modulus must be a multiple of the level")
    if m == 1:
        return [((0, 0, 0, 0), 1)]
    elems = H.lift(m)
    gens = lift_generating_mats(H, m) if H.level < m else H.generating_mats()
    gpk = np.array([pack(g, m) for g in gens], dtype=np.int64)
    gpk_inv = np.array([pack(mat_inv(g, m), m) for g in gens], dtype=np.int64)
    out = []
    assigned = np.zeros(elems.size, dtype=bool)
    for start in range(elems.size):
        if assigned[start]:
            continue
        rep = int(elems[start])
        frontier = elems[start:start + 1]
        assigned[start] = True
        size = 1
        while frontier.size:
            batches = [
                mat_mul_arrays(mat_mul_arrays(gpk[i], frontier, m), gpk_inv[i], m)
                for i in range(gpk.size)
            ]
            conj = np.unique(np.concatenate(batches))
            rank = np.searchsorted(elems, conj)
            fresh = ~assigned[rank]
            rank = rank[fresh]
            assigned[rank] = True
            size += rank.size
            frontier = conj[fresh]
        out.append((unpack(rep, m), size))
    assert sum(s for _, s in out) == elems.size
    return out
