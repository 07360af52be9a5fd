"""Queue enumeration of arithmetically maximal open subgroups of GL2(Z2).

Breadth-first from the full group: pop a subgroup, list its maximal
subgroups, record each child that has surjective determinant, contains -I
and has a trace-zero determinant-minus-one element, up to ambient
conjugacy; children of genus at most 1 go back on the queue.  After the
queue drains, every recorded node contained (up to conjugacy) in a
recorded node of genus >= 2 is pruned away; survivors are the
arithmetically maximal subgroups.

Containment witnesses never need groups outside the recorded set: walking
any chain of maximal steps down from the full group, conditions (det
surjective, witness element, -I) are inherited upward from the contained
node, genus only rises going down, so the first genus >= 2 group on the
chain has genus <= 1 ancestors only and was therefore reached and
recorded by the queue.
"""

import json
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import residue
from .conjugacy import class_multiset_key, is_conjugate, is_conjugate_into
from .curve import CurveInvariants, cusp_count_p1, invariants
from .maximal import maximal_subgroup_sets
from .subgroup import OpenSubgroup, adjoin_minus_identity, full_group, predicates


@dataclass
class TowerConfig:
    refined_cc: bool = False
    max_level: int = 128  # hard stop for the working modulus of children
    genus_queue_bound: int = 1
    checkpoint_path: str | None = None
    checkpoint_every: int = 50
    workers: int = 1  # accepted knob; enumeration itself is sequential


@dataclass
class TowerNode:
    id: int
    subgroup: OpenSubgroup
    invariants: CurveInvariants
    status: str  # queued | listed | pruned-genus | pruned-contained
    pruned_by: int | None = None

    def as_dict(self) -> dict:
        d = {
            "id": self.id,
            "level": self.subgroup.level,
            "generators": [list(g) for g in self.subgroup.generating_mats()],
            "index": self.subgroup.index,
            "genus": self.invariants.genus,
            "cusps": self.invariants.cusps,
            "e2": self.invariants.e2,
            "e3": self.invariants.e3,
            "flags": self.invariants.flags.as_dict(),
            "status": self.status,
            "fingerprint": self.subgroup.fingerprint,
        }
        if self.pruned_by is not None:
            d["pruned_by"] = self.pruned_by
        return d


class TowerLattice:
    def __init__(self, nodes, edges, stage_counts):
        self.nodes = nodes
        self.edges = edges  # (from id, to id, degree), parent -> child
        self.stage_counts = stage_counts

    @property
    def listed(self):
        return [n for n in self.nodes if n.status == "listed"]

    @property
    def pre_prune_count(self) -> int:
        return len(self.nodes)

    @property
    def listed_count(self) -> int:
        return len(self.listed)

    def genus_histogram(self) -> dict[int, int]:
        hist: dict[int, int] = {}
        for n in self.listed:
            hist[n.invariants.genus] = hist.get(n.invariants.genus, 0) + 1
        return dict(sorted(hist.items()))

    def locate(self, H: OpenSubgroup) -> TowerNode | None:
        """Node whose subgroup is ambient-conjugate to H."""
        for n in self.nodes:
            if n.subgroup.level == H.level and n.subgroup.order == H.order:
                if is_conjugate(n.subgroup, H) is not None:
                    return n
        return None

    def to_json_dict(self) -> dict:
        return {
            "schema": "gl2tower-lattice/1",
            "stage_counts": self.stage_counts,
            "nodes": [n.as_dict() for n in self.nodes],
            "edges": [{"from": a, "to": b, "degree": d} for a, b, d in self.edges],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "TowerLattice":
        nodes = []
        for nd in data["nodes"]:
            H = OpenSubgroup(int(nd["level"]), [tuple(g) for g in nd["generators"]])
            inv = invariants(H)
            assert inv.genus == nd["genus"] and inv.cusps == nd["cusps"]
            node = TowerNode(int(nd["id"]), H, inv, nd["status"], nd.get("pruned_by"))
            nodes.append(node)
        edges = [(int(e["from"]), int(e["to"]), int(e["degree"])) for e in data["edges"]]
        return cls(nodes, edges, dict(data.get("stage_counts", {})))

    def to_dot(self) -> str:
        lines = ["digraph tower {", "  rankdir=TB;", "  node [shape=box];"]
        for n in sorted(self.listed, key=lambda n: n.id):
            lines.append(f'  n{n.id} [label="{n.id}:{n.invariants.genus}:{n.subgroup.index}"];')
        for a, b, d in sorted(self.edges):
            style = "" if d == 2 else f' [label="{d}"]'
            lines.append(f"  n{a} -> n{b}{style};")
        lines.append("}")
        return "\n".join(lines) + "\n"


def _bucket_key(H: OpenSubgroup, inv: CurveInvariants) -> tuple:
    return (
        H.level,
        H.order,
        inv.genus,
        inv.cusps,
        inv.e2,
        inv.e3,
        class_multiset_key(H),
    )


def enumerate_tower(config: TowerConfig | None = None, progress=None) -> TowerLattice:
    config = config or TowerConfig()
    counts = {
        "candidates": 0,
        "fail_det_surjective": 0,
        "fail_minus_identity": 0,
        "fail_trace0_detm1": 0,
        "fail_refined_cc": 0,
        "conjugate_duplicates": 0,
        "recorded": 0,
        "expanded": 0,
        "pruned_contained": 0,
        "listed": 0,
    }

    root = full_group()
    root_inv = invariants(root)
    recorded_subs: list[OpenSubgroup] = [root]
    recorded_inv: list[CurveInvariants] = [root_inv]
    buckets: dict[tuple, list[int]] = {_bucket_key(root, root_inv): [0]}
    raw_edges: set[tuple[int, int, int]] = set()
    queue: deque[int] = deque([0])

    while queue:
        cur = queue.popleft()
        counts["expanded"] += 1
        H = recorded_subs[cur]
        for arr, m, idx in maximal_subgroup_sets(H):
            counts["candidates"] += 1
            child = OpenSubgroup(m, [], elements=arr)
            if child.level > config.max_level:
                raise RuntimeError(f"child level {child.level} exceeds configured bound")
            p = predicates(child)
            if not p.det_surjective:
                counts["fail_det_surjective"] += 1
                continue
            if not p.contains_minus_identity:
                counts["fail_minus_identity"] += 1
                continue
            if not p.has_trace0_detm1:
                counts["fail_trace0_detm1"] += 1
                continue
            if config.refined_cc and not p.has_refined_cc_element:
                counts["fail_refined_cc"] += 1
                continue
            inv = invariants(child)
            key = _bucket_key(child, inv)
            found = None
            for nid in buckets.get(key, ()):
                if is_conjugate(child, recorded_subs[nid]) is not None:
                    found = nid
                    break
            if found is None:
                found = len(recorded_subs)
                recorded_subs.append(child)
                recorded_inv.append(inv)
                buckets.setdefault(key, []).append(found)
                counts["recorded"] += 1
                if inv.genus <= config.genus_queue_bound:
                    queue.append(found)
            else:
                counts["conjugate_duplicates"] += 1
            raw_edges.add((cur, found, idx))
        if progress is not None and counts["expanded"] % 25 == 0:
            progress(counts, len(queue))

    # prune: recorded nodes contained up to conjugacy in a recorded node of
    # genus >= 2 (witness necessarily satisfies all recorded filters)
    status = ["listed"] * len(recorded_subs)
    pruned_by: list[int | None] = [None] * len(recorded_subs)
    heavy = [
        i
        for i, inv in enumerate(recorded_inv)
        if inv.genus >= 2
    ]
    for i, (K, invK) in enumerate(zip(recorded_subs, recorded_inv)):
        if invK.genus < 2:
            continue  # genus can only drop upward; no genus >= 2 overgroup
        for w in heavy:
            if w == i:
                continue
            W, invW = recorded_subs[w], recorded_inv[w]
            if invW.genus > invK.genus:
                continue
            if K.level % W.level or K.index % W.index or W.index == K.index:
                continue
            if is_conjugate_into(K, W) is not None:
                status[i] = "pruned-contained"
                pruned_by[i] = w
                break

    counts["pruned_contained"] = sum(1 for s in status if s == "pruned-contained")
    counts["listed"] = sum(1 for s in status if s == "listed")

    # deterministic ids: sort by (index, level, fingerprint)
    order = sorted(
        range(len(recorded_subs)),
        key=lambda i: (recorded_subs[i].index, recorded_subs[i].level, recorded_subs[i].fingerprint),
    )
    new_id = {old: new for new, old in enumerate(order)}
    nodes = []
    for old in order:
        nodes.append(
            TowerNode(
                new_id[old],
                recorded_subs[old],
                recorded_inv[old],
                status[old],
                new_id[pruned_by[old]] if pruned_by[old] is not None else None,
            )
        )
    nodes.sort(key=lambda n: n.id)
    listed_ids = {n.id for n in nodes if n.status == "listed"}
    edges = sorted(
        {
            (new_id[a], new_id[b], d)
            for a, b, d in raw_edges
            if new_id[a] in listed_ids and new_id[b] in listed_ids
        }
    )
    return TowerLattice(nodes, edges, counts)


def genus_histogram(lattice: TowerLattice) -> dict[int, int]:
    return lattice.genus_histogram()


def minus_identity_free_layer(lattice: TowerLattice, flags: dict[str, bool]):
    """Index-2 subgroups without -I of the flagged genus-0 listed nodes,
    deduplicated across the whole collection up to ambient conjugacy.

    `flags` maps node fingerprints to has_rational_point booleans; nodes
    without an entry count as unflagged.  Returns (count, groups, sources).
    """
    from .maximal import _index2_children
    from .conjugacy import lift_generating_mats
    from .maximal import working_modulus

    kept: list[OpenSubgroup] = []
    sources: list[int] = []
    buckets: dict[tuple, list[int]] = {}
    for node in lattice.listed:
        if node.invariants.genus != 0:
            continue
        if not flags.get(node.subgroup.fingerprint, False):
            continue
        H = node.subgroup
        m = working_modulus(H.level)
        Q = H.lift(m)
        gens = lift_generating_mats(H, m)
        neg = residue.pack(residue.minus_identity(m), m)
        for arr in _index2_children(Q, gens, m):
            i = int(np.searchsorted(arr, neg))
            if i < arr.size and int(arr[i]) == neg:
                continue
            K = OpenSubgroup(m, [], elements=arr)
            up = adjoin_minus_identity(K)
            assert up.level == H.level and is_conjugate(up, H) is not None
            key = (K.level, K.order, class_multiset_key(K))
            hit = False
            for j in buckets.get(key, ()):
                if is_conjugate(K, kept[j]) is not None:
                    hit = True
                    break
            if not hit:
                buckets.setdefault(key, []).append(len(kept))
                kept.append(K)
                sources.append(node.id)
    return len(kept), kept, sources


def export_lattice(lattice: TowerLattice, path: str, fmt: str = "json") -> None:
    if fmt == "json":
        with open(path, "w") as fh:
            json.dump(lattice.to_json_dict(), fh, indent=1, sort_keys=True)
            fh.write("\n")
    elif fmt == "dot":
        with open(path, "w") as fh:
            fh.write(lattice.to_dot())
    else:
        raise ValueError(f"unknown export format {fmt!r}")


def load_lattice(path: str) -> TowerLattice:
    with open(path) as fh:
        return TowerLattice.from_json_dict(json.load(fh))
