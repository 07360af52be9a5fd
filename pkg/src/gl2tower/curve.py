"""Modular-curve invariants of an open subgroup: index over PSL2, cusps,
elliptic point counts and genus.

Everything is computed on the right coset space of S~ = (H meet SL2) * {+-I}
inside SL2(Z/2^k Z):

  * a coset S~x is fixed by right multiplication by w iff x w x^-1 in S~,
    so fixed-coset counts are one membership scan over SL2;
  * cusps are orbits of T = [[1,1],[0,1]]; the j with x T^j x^-1 in S~ form
    a subgroup 2^t(x) Z/2^k Z, and Burnside turns the orbit count into
    sum_x 2^(-t(x)) / |S~|.

The fixed-coset count for order-3 points uses [[0,-1],[1,-1]]; any element
of its conjugacy class gives the same count.
"""

import threading
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import residue
from .residue import pack_array, unpack_array
from .subgroup import OpenSubgroup, SubgroupPredicates, generating_set, predicates


class Sl2Scan:
    """Per-modulus precomputation over all of SL2(Z/2^k Z)."""

    def __init__(self, modulus: int):
        if modulus < 2:
            raise ValueError("scan modulus must be at least 2")
        m = self.modulus = modulus
        self.k = modulus.bit_length() - 1
        els = residue.all_sl2(m)
        self.elements = els
        a, b, c, d = unpack_array(els, m)
        inv = pack_array(d, (-b) % m, (-c) % m, a, m)  # det = 1
        w2 = np.int64(residue.pack(((0, m - 1, 1, 0)), m))
        w3 = np.int64(residue.pack(((0, m - 1, 1, m - 1)), m))
        self.w2_conj = residue.mat_mul_arrays(residue.mat_mul_arrays(els, w2, m), inv, m)
        self.w3_conj = residue.mat_mul_arrays(residue.mat_mul_arrays(els, w3, m), inv, m)
        # N_x = x E12 x^-1 = [[-ac, a^2], [-c^2, ac]]
        nx_a, nx_b, nx_c, nx_d = (-a * c) % m, (a * a) % m, (-c * c) % m, (a * c) % m
        self.t_powers = []
        for t in range(self.k):
            s = 1 << t
            self.t_powers.append(
                pack_array((1 + s * nx_a) % m, (s * nx_b) % m, (s * nx_c) % m, (1 + s * nx_d) % m, m)
            )


_scan_lock = threading.Lock()
_scans: dict[int, Sl2Scan] = {}


def sl2_scan(modulus: int) -> Sl2Scan:
    with _scan_lock:
        s = _scans.get(modulus)
    if s is None:
        s = Sl2Scan(modulus)
        with _scan_lock:
            _scans[modulus] = s
    return s


@dataclass(frozen=True)
class CurveInvariants:
    psl2_index: int
    cusps: int
    e2: int
    e3: int
    genus: int
    flags: SubgroupPredicates

    def as_dict(self) -> dict:
        return {
            "psl2_index": self.psl2_index,
            "cusps": self.cusps,
            "e2": self.e2,
            "e3": self.e3,
            "genus": self.genus,
            "flags": self.flags.as_dict(),
        }


def _sl2_part_with_minus(H: OpenSubgroup, m: int) -> np.ndarray:
    """Sorted element set of (H meet SL2) * {+-I} at modulus m."""
    if H.level == 1:
        return sl2_scan(m).elements
    els = H.elements if H.level == m else H.lift(m)
    dets = residue.det_array(els, m)
    S = els[dets == 1 % m]
    neg = np.int64(residue.pack(residue.minus_identity(m), m))
    return np.union1d(S, residue.mat_mul_arrays(neg, S, m))


def _member(sorted_arr: np.ndarray, values: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(sorted_arr, values)
    idx = np.clip(idx, 0, sorted_arr.size - 1)
    return sorted_arr[idx] == values


def invariants(H: OpenSubgroup, modulus: int | None = None) -> CurveInvariants:
    """Genus data of the modular curve of H.

    `modulus` defaults to max(level, 2); any multiple of the level gives
    the same answer (the coset space only grows by a free factor).
    """
    m = max(H.level, 2) if modulus is None else modulus
    if m % max(H.level, 2):
        raise ValueError("modulus must be a multiple of the level")
    scan = sl2_scan(m)
    stilde = _sl2_part_with_minus(H, m)
    s_order = int(stilde.size)
    n = scan.elements.size
    index = Fraction(n, s_order)
    assert index.denominator == 1
    index = int(index)

    fixed2 = int(_member(stilde, scan.w2_conj).sum())
    fixed3 = int(_member(stilde, scan.w3_conj).sum())
    assert fixed2 % s_order == 0 and fixed3 % s_order == 0
    e2 = fixed2 // s_order
    e3 = fixed3 // s_order

    # t(x) = least t with I + 2^t N_x in S~ (t = k when only j = 0 works)
    k = scan.k
    t_of_x = np.full(n, k, dtype=np.int64)
    for t in range(k - 1, -1, -1):
        t_of_x[_member(stilde, scan.t_powers[t])] = t
    weight = (np.int64(1) << (k - t_of_x)).sum()
    cusps = Fraction(int(weight), (1 << k) * s_order)
    assert cusps.denominator == 1
    cusps = int(cusps)

    genus = 1 + Fraction(index, 12) - Fraction(e2, 4) - Fraction(e3, 3) - Fraction(cusps, 2)
    assert genus.denominator == 1, f"non-integral genus for level {H.level}"
    genus = int(genus)
    assert genus >= 0 and cusps >= 1
    assert 12 * (genus - 1) + 6 * cusps + 3 * e2 + 4 * e3 == index
    return CurveInvariants(index, cusps, e2, e3, genus, predicates(H))


def cusp_count(H: OpenSubgroup) -> int:
    return invariants(H).cusps


def genus(H: OpenSubgroup) -> int:
    return invariants(H).genus


def cusp_count_p1(H: OpenSubgroup) -> int:
    """Orbit count of H meet SL2 on the projective line mod 2^k.

    Points of the line are primitive row vectors identified under v ~ -v,
    the model under which boundary points of the curve correspond to
    orbits (identifying under all unit scalings instead merges distinct
    boundary points: it gives 4 instead of 8 on the reference subgroup
    with 8 cusps).  A second, independent count; the coset count in
    `invariants` stays authoritative for genus.
    """
    m = max(H.level, 2)
    if H.level == 1:
        return 1
    dets = residue.det_array(H.elements, m)
    S = H.elements[dets == 1 % m]
    gens = generating_set(S, m)

    def canon(x, y):
        return min((x, y), ((-x) % m, (-y) % m))

    pts = sorted({canon(x, y) for x in range(m) for y in range(m) if x % 2 or y % 2})
    rank_of = {p: i for i, p in enumerate(pts)}
    parent = list(range(len(pts)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for (a, b, c, d) in gens:
        for i, (x, y) in enumerate(pts):
            j = rank_of[canon((x * a + y * c) % m, (x * b + y * d) % m)]
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[ri] = rj
    return len({find(i) for i in range(len(pts))})
