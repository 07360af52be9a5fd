"""Odd-order-reduction density: the Haar integral of |det(M - I)|_2 over an
open subgroup, as a certified rational interval.

Branch and bound over residue classes.  A class M mod 2^j where
det(M - I) is nonzero mod 2^j has |det(M' - I)|_2 = 2^-t on every lift M',
t the 2-adic valuation of that residue, so its full mass settles exactly.
Classes with det(M - I) = 0 mod 2^j contribute between 0 and 2^-j times
their mass and are split 16 ways into the next level (every child stays in
the group: an open subgroup is the full preimage of its reduction).
Arithmetic on the bounds is exact rational throughout.
"""

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import residue
from .residue import pack_array, unpack_array
from .subgroup import OpenSubgroup


@dataclass
class DensityInterval:
    lower: Fraction
    upper: Fraction
    refinement_level: int  # modulus 2^m reached
    converged: bool

    @property
    def width(self) -> Fraction:
        return self.upper - self.lower

    def __contains__(self, value) -> bool:
        return self.lower <= Fraction(value) <= self.upper

    def as_dict(self) -> dict:
        return {
            "lower": str(self.lower),
            "upper": str(self.upper),
            "refinement_level": self.refinement_level,
            "converged": self.converged,
        }


class ToleranceUnreachable(RuntimeError):
    def __init__(self, interval: DensityInterval):
        super().__init__(f"density interval width {interval.width} above tolerance at cap")
        self.interval = interval


def _split_classes(classes: np.ndarray, m: int) -> np.ndarray:
    """All 16 lifts of each class from modulus m to 2m."""
    a, b, c, d = unpack_array(classes, m)
    bump = np.arange(2, dtype=np.int64) * m
    a = a[:, None, None, None, None] + bump[None, :, None, None, None]
    b = b[:, None, None, None, None] + bump[None, None, :, None, None]
    c = c[:, None, None, None, None] + bump[None, None, None, :, None]
    d = d[:, None, None, None, None] + bump[None, None, None, None, :]
    a, b, c, d = np.broadcast_arrays(a, b, c, d)
    return pack_array(a.ravel(), b.ravel(), c.ravel(), d.ravel(), 2 * m)


def odd_order_density(
    H: OpenSubgroup,
    tol,
    max_classes: int = 1 << 22,
    max_modulus: int = 1 << 15,
    strict: bool = True,
) -> DensityInterval:
    """Certified interval for the density integral over H.

    Raises ToleranceUnreachable (or returns the best interval when
    strict=False) if the class or modulus cap is hit first.
    """
    tol = Fraction(tol)
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    m = max(H.level, 2)
    classes = H.elements if H.level > 1 else residue.all_gl2(2)
    group_order = int(classes.size)  # |H mod m|, maintained alongside m
    lower = Fraction(0)
    settled_total = Fraction(0)

    def settle(batch, modulus, order):
        nonlocal lower, settled_total
        a, b, c, d = unpack_array(batch, modulus)
        det = ((a - 1) * (d - 1) - b * c) % modulus
        nz = det != 0
        if nz.any():
            dv = det[nz]
            t = np.log2((dv & -dv).astype(np.float64)).astype(np.int64)
            for tv, cnt in enumerate(np.bincount(t)):
                if cnt:
                    lower += Fraction(int(cnt), order) * Fraction(1, 1 << tv)
            settled_total += Fraction(int(nz.sum()), order)
        return batch[~nz]

    classes = settle(classes, m, group_order)
    while True:
        unsettled_mass = Fraction(int(classes.size), group_order)
        assert settled_total + unsettled_mass == 1
        upper = lower + unsettled_mass * Fraction(1, m)
        interval = DensityInterval(lower, upper, m, upper - lower <= tol)
        if interval.converged:
            return interval
        if classes.size > max_classes or 2 * m > max_modulus:
            if strict:
                raise ToleranceUnreachable(interval)
            return interval
        m2, order2 = 2 * m, 16 * group_order
        survivors = []
        chunk = max(1, (1 << 20) // 16)
        for start in range(0, classes.size, chunk):
            kids = _split_classes(classes[start:start + chunk], m)
            survivors.append(settle(kids, m2, order2))
        classes = np.concatenate(survivors) if survivors else classes[:0]
        m, group_order = m2, order2


def sample_abs_det_values(H: OpenSubgroup, n: int, depth_modulus: int = 1 << 12, seed: int = 0):
    """Monte-Carlo oracle: |det(M - I)|_2 for n uniform elements of H,
    sampled as a uniform element of the reduction mod level with uniform
    lift bits up to depth_modulus (valuations at or beyond the depth are
    truncated to it, a downward bias below 1/depth_modulus)."""
    rng = np.random.default_rng(seed)
    m = max(H.level, 2)
    base = H.elements if H.level > 1 else residue.all_gl2(2)
    pick = rng.integers(0, base.size, size=n)
    a, b, c, d = unpack_array(base[pick], m)
    while m < depth_modulus:
        a = a + m * rng.integers(0, 2, size=n)
        b = b + m * rng.integers(0, 2, size=n)
        c = c + m * rng.integers(0, 2, size=n)
        d = d + m * rng.integers(0, 2, size=n)
        m *= 2
    det = ((a - 1) * (d - 1) - b * c) % m
    out = np.empty(n, dtype=np.float64)
    zero = det == 0
    out[zero] = 1.0 / m
    dv = det[~zero]
    out[~zero] = 1.0 / np.exp2(np.log2((dv & -dv).astype(np.float64)))
    return out


def density_report(lattice, tol=Fraction(1, 1000), workers: int = 1):
    """Certified interval per listed node, deterministic order by node id.

    Returns a list of (node_id, DensityInterval).
    """
    nodes = sorted(lattice.listed, key=lambda n: n.id)
    if workers > 1:
        import multiprocessing as mp

        with mp.Pool(workers) as pool:
            payload = [(n.subgroup.level, [list(g) for g in n.subgroup.generating_mats()], str(Fraction(tol))) for n in nodes]
            results = pool.map(_density_worker, payload)
        return [(n.id, iv) for n, iv in zip(nodes, results)]
    return [(n.id, odd_order_density(n.subgroup, tol, strict=False)) for n in nodes]


def _density_worker(payload):
    level, gens, tol = payload
    H = OpenSubgroup(level, [tuple(g) for g in gens])
    return odd_order_density(H, Fraction(tol), strict=False)


def report_to_csv(report, path: str) -> None:
    with open(path, "w") as fh:
        fh.write("node_id,lower,upper\n")
        for nid, iv in report:
            fh.write(f"{nid},{iv.lower},{iv.upper}\n")
