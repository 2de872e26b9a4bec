"""Directed acyclic graphs as immutable per-node parent sets.

Nodes are dense 0-based indices. A directed edge (i, j) always means
"i is a parent of j". Internally parent sets are stored as integer
bitmasks, which keeps the MCMC inner loops allocation-free; the public
constructors and accessors speak ordinary sets of indices.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Iterable, Sequence


class GraphError(Exception):
    """Base class for graph construction and edge-operation errors."""


class CycleViolation(GraphError):
    """The requested graph or edge operation would create a directed cycle."""


class SelfLoopViolation(GraphError):
    """A node was listed as its own parent."""


class ParentLimitViolation(GraphError):
    """An operation would exceed the maximum parent-set size."""


class ConstraintViolation(GraphError):
    """An operation conflicts with a ban/retain structural constraint."""


class EdgePresentError(GraphError):
    """Tried to add an edge that is already present."""


class EdgeAbsentError(GraphError):
    """Tried to delete or reverse an edge that is not present."""


def mask_of(indices: Iterable[int]) -> int:
    """Pack node indices into a bitmask."""
    m = 0
    for i in indices:
        m |= 1 << i
    return m


def bits_of(mask: int):
    """Yield the node indices set in ``mask`` in ascending order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def masks_acyclic(parent_masks: Sequence[int], n_nodes: int) -> bool:
    """Kahn's algorithm on bitmask parent sets; O(V^2) with tiny constants."""
    remaining = (1 << n_nodes) - 1
    while remaining:
        progressed = False
        rest = remaining
        while rest:
            low = rest & -rest
            v = low.bit_length() - 1
            rest ^= low
            if not (parent_masks[v] & remaining):
                remaining ^= low
                progressed = True
        if not progressed:
            return False
    return True


def descendants_mask(parent_masks: Sequence[int], n_nodes: int, v: int) -> int:
    """Bitmask of all nodes reachable from ``v`` by directed paths (v excluded)."""
    desc = 0
    frontier = 1 << v
    while frontier:
        new = 0
        for w in range(n_nodes):
            bw = 1 << w
            if not (desc & bw) and (parent_masks[w] & frontier):
                new |= bw
        new &= ~(1 << v)
        desc |= new
        frontier = new
    return desc


def is_acyclic(parent_sets: Sequence[Iterable[int]]) -> bool:
    """True iff the node-indexed parent sets admit a topological order.

    Accepts raw candidate parent sets (they need not form a valid
    :class:`Dag`; 2-cycles and longer cycles return False).
    """
    n = len(parent_sets)
    masks = [mask_of(ps) for ps in parent_sets]
    return masks_acyclic(masks, n)


@dataclass(frozen=True, slots=True)
class Dag:
    """An immutable DAG over ``n_nodes`` dense indices.

    ``parent_masks[v]`` has bit ``u`` set iff the edge u -> v is present.
    Construction validates the no-self-loop and acyclicity invariants.
    """

    n_nodes: int
    parent_masks: tuple[int, ...]

    def __post_init__(self):
        if self.n_nodes < 1:
            raise GraphError("a Dag needs at least one node")
        if len(self.parent_masks) != self.n_nodes:
            raise GraphError("parent_masks length must equal n_nodes")
        full = (1 << self.n_nodes) - 1
        for v, m in enumerate(self.parent_masks):
            if m & (1 << v):
                raise SelfLoopViolation(f"node {v} listed as its own parent")
            if m & ~full:
                raise GraphError(f"parent set of node {v} references unknown nodes")
        if not masks_acyclic(self.parent_masks, self.n_nodes):
            raise CycleViolation("parent sets contain a directed cycle")

    @classmethod
    def from_parent_sets(cls, parent_sets: Sequence[Iterable[int]]) -> "Dag":
        return cls(len(parent_sets), tuple(mask_of(ps) for ps in parent_sets))

    @classmethod
    def empty(cls, n_nodes: int) -> "Dag":
        return cls(n_nodes, (0,) * n_nodes)

    @classmethod
    def from_edges(cls, n_nodes: int, edges: Iterable[tuple[int, int]]) -> "Dag":
        masks = [0] * n_nodes
        for i, j in edges:
            masks[j] |= 1 << i
        return cls(n_nodes, tuple(masks))

    def parent_set(self, v: int) -> frozenset[int]:
        return frozenset(bits_of(self.parent_masks[v]))

    @property
    def parents(self) -> tuple[frozenset[int], ...]:
        return tuple(self.parent_set(v) for v in range(self.n_nodes))

    def children_mask(self, v: int) -> int:
        m = 0
        bv = 1 << v
        for w in range(self.n_nodes):
            if self.parent_masks[w] & bv:
                m |= 1 << w
        return m

    def has_edge(self, i: int, j: int) -> bool:
        return bool(self.parent_masks[j] >> i & 1)

    def edges(self) -> list[tuple[int, int]]:
        """All edges as (parent, child) pairs, sorted."""
        out = []
        for j in range(self.n_nodes):
            for i in bits_of(self.parent_masks[j]):
                out.append((i, j))
        out.sort()
        return out

    @property
    def n_edges(self) -> int:
        return sum(m.bit_count() for m in self.parent_masks)

    def topological_order(self) -> list[int]:
        order = []
        placed = 0
        remaining = (1 << self.n_nodes) - 1
        while remaining:
            for v in bits_of(remaining):
                if not (self.parent_masks[v] & ~placed):
                    order.append(v)
                    placed |= 1 << v
                    remaining ^= 1 << v
                    break
            else:  # pragma: no cover - construction guarantees acyclicity
                raise CycleViolation("no topological order exists")
        return order

    def replace_parents(self, v: int, new_mask: int) -> "Dag":
        masks = list(self.parent_masks)
        masks[v] = new_mask
        return Dag(self.n_nodes, tuple(masks))


def markov_blanket(dag: Dag, v: int) -> frozenset[int]:
    """Parents, children, and co-parents of children of ``v`` (v excluded)."""
    if not 0 <= v < dag.n_nodes:
        raise IndexError(f"node {v} out of range for {dag.n_nodes} nodes")
    blanket = dag.parent_masks[v]
    kids = dag.children_mask(v)
    blanket |= kids
    for c in bits_of(kids):
        blanket |= dag.parent_masks[c]
    blanket &= ~(1 << v)
    return frozenset(bits_of(blanket))


# --- single-edge operations -------------------------------------------------

def apply_edge_op(dag: Dag, op: tuple[str, int, int], prior=None) -> Dag:
    """Apply one of ("add", i, j), ("delete", i, j), ("reverse", i, j).

    The result is returned iff it is acyclic and, when ``prior`` is given,
    respects its max-parent limit and ban/retain masks; otherwise a typed
    exception states the violated constraint.
    """
    kind, i, j = op
    n = dag.n_nodes
    if not (0 <= i < n and 0 <= j < n) or i == j:
        raise GraphError(f"invalid edge indices ({i}, {j})")

    if kind == "add":
        if dag.has_edge(i, j):
            raise EdgePresentError(f"edge {i}->{j} already present")
        new = dag.parent_masks[j] | (1 << i)
        masks = list(dag.parent_masks)
        masks[j] = new
        _check_prior(prior, j, new)
        if not masks_acyclic(masks, n):
            raise CycleViolation(f"adding {i}->{j} creates a cycle")
        return Dag(n, tuple(masks))

    if kind == "delete":
        if not dag.has_edge(i, j):
            raise EdgeAbsentError(f"edge {i}->{j} not present")
        new = dag.parent_masks[j] & ~(1 << i)
        _check_prior(prior, j, new)
        return dag.replace_parents(j, new)

    if kind == "reverse":
        if not dag.has_edge(i, j):
            raise EdgeAbsentError(f"edge {i}->{j} not present")
        masks = list(dag.parent_masks)
        masks[j] &= ~(1 << i)
        masks[i] |= 1 << j
        _check_prior(prior, j, masks[j])
        _check_prior(prior, i, masks[i])
        if not masks_acyclic(masks, n):
            raise CycleViolation(f"reversing {i}->{j} creates a cycle")
        return Dag(n, tuple(masks))

    raise GraphError(f"unknown edge operation {kind!r}")


def _check_prior(prior, v: int, new_mask: int) -> None:
    if prior is None:
        return
    if new_mask.bit_count() > prior.max_parents:
        raise ParentLimitViolation(
            f"node {v} would have {new_mask.bit_count()} parents "
            f"(limit {prior.max_parents})"
        )
    if new_mask & prior.ban_masks[v]:
        raise ConstraintViolation(f"parent set of node {v} hits a banned edge")
    if new_mask & prior.retain_masks[v] != prior.retain_masks[v]:
        raise ConstraintViolation(f"parent set of node {v} drops a retained edge")


# --- canonical hexadecimal encoding ------------------------------------------

def encode_dag(dag: Dag) -> str:
    """Canonical hex string: row-major bits of the adjacency matrix.

    Bit k = r*n + c (row r = child, column c = parent) is 1 iff the edge
    c -> r is present. Bits are read most-significant-first and padded at
    the end to a whole number of hex digits, so the string has exactly
    ceil(n^2 / 4) characters. Bijective with the Dag for fixed n_nodes.
    """
    n = dag.n_nodes
    nbits = n * n
    width = -(-nbits // 4)  # hex digits
    acc = 0
    for r in range(n):
        row = dag.parent_masks[r]
        base = nbits - 1 - r * n
        for c in bits_of(row):
            acc |= 1 << (base - c)
    acc <<= 4 * width - nbits
    return format(acc, f"0{width}x")


def decode_dag(encoding: str, n_nodes: int) -> Dag:
    """Inverse of :func:`encode_dag` for the given node count."""
    nbits = n_nodes * n_nodes
    width = -(-nbits // 4)
    if len(encoding) != width:
        raise GraphError(
            f"encoding {encoding!r} has {len(encoding)} hex digits, "
            f"expected {width} for n_nodes={n_nodes}"
        )
    acc = int(encoding, 16) >> (4 * width - nbits)
    masks = [0] * n_nodes
    for r in range(n_nodes):
        base = nbits - 1 - r * n_nodes
        for c in range(n_nodes):
            if acc >> (base - c) & 1:
                masks[r] |= 1 << c
    return Dag(n_nodes, tuple(masks))


# --- interop formats ----------------------------------------------------------

def dag_to_json(dag: Dag, names: Sequence[str]) -> dict:
    """{"nodes": [...], "parents": {"name": [parent names]}}."""
    if len(names) != dag.n_nodes:
        raise GraphError("names length must equal n_nodes")
    return {
        "nodes": list(names),
        "parents": {
            names[v]: [names[u] for u in sorted(bits_of(dag.parent_masks[v]))]
            for v in range(dag.n_nodes)
        },
    }


def dag_from_json(obj: dict) -> tuple[Dag, list[str]]:
    names = list(obj["nodes"])
    index = {name: i for i, name in enumerate(names)}
    if len(index) != len(names):
        raise GraphError("duplicate node names in DAG JSON")
    masks = [0] * len(names)
    for child, parents in obj["parents"].items():
        for p in parents:
            masks[index[child]] |= 1 << index[p]
    return Dag(len(names), tuple(masks)), names


def load_dag_json(path) -> tuple[Dag, list[str]]:
    with open(path, "r", encoding="utf-8") as fh:
        return dag_from_json(json.load(fh))


def dag_to_adjacency_csv(dag: Dag, path) -> None:
    """0/1 matrix with row = child, column = parent."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        for r in range(dag.n_nodes):
            writer.writerow([(dag.parent_masks[r] >> c) & 1 for c in range(dag.n_nodes)])


def read_edge_mask_csv(path) -> set[tuple[int, int]]:
    """Read a 0/1 adjacency-matrix CSV (row = child, column = parent).

    Returns the set of (parent, child) edges marked 1; used for ban and
    retain masks.
    """
    edges: set[tuple[int, int]] = set()
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    n = len(rows)
    for r, row in enumerate(rows):
        if len(row) != n:
            raise GraphError(f"adjacency matrix row {r} has {len(row)} cells, expected {n}")
        for c, cell in enumerate(row):
            val = cell.strip()
            if val not in ("0", "1"):
                raise GraphError(f"adjacency matrix cell ({r},{c}) is {cell!r}, expected 0 or 1")
            if val == "1":
                if r == c:
                    raise GraphError(f"self-edge at node {r} in adjacency matrix")
                edges.add((c, r))
    return edges
