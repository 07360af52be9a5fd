"""Exact 2x2 matrix arithmetic over Z/p^m Z and the projective line.

Matrices are 4-tuples (a, b, c, d), row major, entries reduced into
[0, modulus).  For bulk work the same matrices are packed into single
integers with radix = modulus, which keeps multi-million element sets cheap
to store, hash and sort (numpy int64 arrays).
"""

import math

import numpy as np

Mat = tuple[int, int, int, int]


class NotInvertible(ValueError):
    """Determinant is not a unit modulo the modulus."""


def is_prime_power(m: int) -> bool:
    if m < 2:
        return False
    p = min_prime_factor(m)
    while m % p == 0:
        m //= p
    return m == 1


def min_prime_factor(m: int) -> int:
    if m % 2 == 0:
        return 2
    f = 3
    while f * f <= m:
        if m % f == 0:
            return f
        f += 2
    return m


def mat_reduce(m: Mat, modulus: int) -> Mat:
    a, b, c, d = m
    return (a % modulus, b % modulus, c % modulus, d % modulus)


def mat_mul(x: Mat, y: Mat, modulus: int) -> Mat:
    a, b, c, d = x
    e, f, g, h = y
    return (
        (a * e + b * g) % modulus,
        (a * f + b * h) % modulus,
        (c * e + d * g) % modulus,
        (c * f + d * h) % modulus,
    )


def mat_det(m: Mat, modulus: int) -> int:
    a, b, c, d = m
    return (a * d - b * c) % modulus

def mat_trace(m: Mat, modulus: int) -> int:
    return (m[0] + m[3]) % modulus


def inv_mod(a: int, modulus: int) -> int:
    a %= modulus
    g, x = _egcd(a, modulus)
    if g != 1:
        raise NotInvertible(f"{a} is not invertible mod {modulus}")
    return x % modulus


def _egcd(a: int, b: int) -> tuple[int, int]:
    # returns (gcd, x) with a*x = gcd mod b
    x0, x1, r0, r1 = 1, 0, a, b
    while r1:
        q = r0 // r1
        r0, r1 = r1, r0 - q * r1
        x0, x1 = x1, x0 - q * x1
    return r0, x0


def mat_inv(m: Mat, modulus: int) -> Mat:
    a, b, c, d = m
    det_inv = inv_mod(a * d - b * c, modulus)
    return (
        (d * det_inv) % modulus,
        (-b * det_inv) % modulus,
        (-c * det_inv) % modulus,
        (a * det_inv) % modulus,
    )


def mat_pow(m: Mat, n: int, modulus: int) -> Mat:
    if n < 0:
        return mat_pow(mat_inv(m, modulus), -n, modulus)
    out = identity(modulus)
    base = mat_reduce(m, modulus)
    while n:
        if n & 1:
            out = mat_mul(out, base, modulus)
        base = mat_mul(base, base, modulus)
        n >>= 1
    return out


def identity(modulus: int) -> Mat:
    return (1 % modulus, 0, 0, 1 % modulus)


def minus_identity(modulus: int) -> Mat:
    return ((-1) % modulus, 0, 0, (-1) % modulus)


def is_unit(x: int, modulus: int) -> bool:
    return math.gcd(x % modulus, modulus) == 1


def units(modulus: int) -> list[int]:
    return [u for u in range(modulus) if math.gcd(u, modulus) == 1]


def gl2_order(modulus: int) -> int:
    """|GL2(Z/mZ)| for a prime power modulus m = p^k."""
    if modulus == 1:
        return 1
    p = min_prime_factor(modulus)
    k = 0
    m = modulus
    while m % p == 0:
        m //= p
        k += 1
    if m != 1:
        raise ValueError(f"modulus {modulus} is not a prime power")
    return (p**2 - 1) * (p**2 - p) * p ** (4 * (k - 1))


def sl2_order(modulus: int) -> int:
    if modulus == 1:
        return 1
    return gl2_order(modulus) // euler_phi(modulus)


def euler_phi(modulus: int) -> int:
    p = min_prime_factor(modulus)
    out = 1
    m = modulus
    while m % p == 0:
        m //= p
        out *= p
    out = out // p * (p - 1)
    if m != 1:
        raise ValueError(f"modulus {modulus} is not a prime power")
    return out


# ---------------------------------------------------------------------------
# packing

def pack(m: Mat, modulus: int) -> int:
    a, b, c, d = m
    return ((a * modulus + b) * modulus + c) * modulus + d


def unpack(v: int, modulus: int) -> Mat:
    v, d = divmod(v, modulus)
    v, c = divmod(v, modulus)
    a, b = divmod(v, modulus)
    return (a, b, c, d)


def pack_array(a, b, c, d, modulus: int):
    return ((a.astype(np.int64) * modulus + b) * modulus + c) * modulus + d


def unpack_array(v, modulus: int):
    v = v.astype(np.int64)
    v, d = np.divmod(v, modulus)
    v, c = np.divmod(v, modulus)
    a, b = np.divmod(v, modulus)
    return a, b, c, d


def mat_mul_arrays(x, y, modulus: int):
    """Entrywise product of packed arrays (broadcasting allowed)."""
    a, b, c, d = unpack_array(x, modulus)
    e, f, g, h = unpack_array(y, modulus)
    return pack_array(
        (a * e + b * g) % modulus,
        (a * f + b * h) % modulus,
        (c * e + d * g) % modulus,
        (c * f + d * h) % modulus,
        modulus,
    )


def det_array(v, modulus: int):
    a, b, c, d = unpack_array(v, modulus)
    return (a * d - b * c) % modulus


def trace_array(v, modulus: int):
    a, b, c, d = unpack_array(v, modulus)
    return (a + d) % modulus


def reduce_array(v, modulus_from: int, modulus_to: int):
    if modulus_from % modulus_to:
        raise ValueError("target modulus must divide source modulus")
    a, b, c, d = unpack_array(v, modulus_from)
    return pack_array(a % modulus_to, b % modulus_to, c % modulus_to, d % modulus_to, modulus_to)


def conjugate_array(g: Mat, v, modulus: int):
    """g * x * g^-1 for every packed x in v."""
    gp = np.int64(pack(g, modulus))
    gi = np.int64(pack(mat_inv(g, modulus), modulus))
    return mat_mul_arrays(mat_mul_arrays(gp, v, modulus), gi, modulus)


def all_gl2(modulus: int):
    """Sorted packed array of every invertible matrix mod a prime power."""
    n = modulus**4
    v = np.arange(n, dtype=np.int64)
    p = min_prime_factor(modulus)
    dets = det_array(v, modulus)
    return v[dets % p != 0]


def all_sl2(modulus: int):
    n = modulus**4
    v = np.arange(n, dtype=np.int64)
    return v[det_array(v, modulus) == 1]


# ---------------------------------------------------------------------------
# projective line

Point = tuple[int, int]


def _orbit_canonical(x: int, y: int, modulus: int) -> Point:
    best = None
    for u in units(modulus):
        cand = ((u * x) % modulus, (u * y) % modulus)
        if best is None or cand < best:
            best = cand
    return best


def projective_line(modulus: int) -> list[Point]:
    """Canonical representatives of P^1(Z/mZ), m a prime power.

    The representative of an orbit under unit scaling is its
    lexicographically least member.  For m = 2^k there are 3*2^(k-1)
    points; in general p^(k-1) * (p+1).
    """
    seen: set[Point] = set()
    out: list[Point] = []
    p = min_prime_factor(modulus)
    for x in range(modulus):
        for y in range(modulus):
            if x % p == 0 and y % p == 0:
                continue
            rep = _orbit_canonical(x, y, modulus)
            if rep not in seen:
                seen.add(rep)
                out.append(rep)
    return sorted(out)


def point_act(v: Point, m: Mat, modulus: int) -> Point:
    """Right action (row vector times matrix), canonicalized."""
    x, y = v
    a, b, c, d = m
    return _orbit_canonical((x * a + y * c) % modulus, (x * b + y * d) % modulus, modulus)


# ---------------------------------------------------------------------------
# text format

def format_mat(m: Mat, modulus: int) -> str:
    a, b, c, d = m
    return f"[[{a},{b}],[{c},{d}]] mod {modulus}"


def parse_mat(text: str) -> tuple[Mat, int]:
    body, _, mod = text.partition("mod")
    mod = int(mod.strip())
    nums = [int(t) for t in body.replace("[", " ").replace("]", " ").replace(",", " ").split()]
    if len(nums) != 4:
        raise ValueError(f"expected four entries in {text!r}")
    return mat_reduce(tuple(nums), mod), mod
