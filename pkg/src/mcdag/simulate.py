"""Forward sampling of discrete observations from a CPT-parameterized DAG,
plus the built-in five-node benchmark network.

Nodes are drawn in topological order; each row of a CPT is the
distribution of the child given one parent configuration, configurations
enumerated in mixed-radix order over the CPT's own (ordered) parent
list, first parent most significant. Generation uses a seeded numpy
PCG64 stream, so a (seed, n) pair yields the same dataset on every
platform.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from typing import Sequence

import numpy as np

from .data import Dataset
from .graph import Dag, bits_of, dag_from_json

SIMULATOR_GENERATOR = "pcg64"


class SimulateError(Exception):
    pass


@dataclass(frozen=True)
class Cpt:
    """Conditional probability table of one node.

    ``table`` has one row per parent configuration and one column per
    child state; rows must be distributions (non-negative, summing to 1
    within 1e-9).
    """

    node: int
    parents: tuple[int, ...]
    table: np.ndarray

    def __post_init__(self):
        table = np.asarray(self.table, dtype=np.float64)
        object.__setattr__(self, "table", table)
        if table.ndim != 2 or table.shape[1] < 2:
            raise SimulateError(
                f"CPT of node {self.node} must be 2-D with >= 2 child states"
            )
        if (table < 0).any():
            raise SimulateError(f"CPT of node {self.node} has negative entries")
        bad = np.abs(table.sum(axis=1) - 1.0) > 1e-9
        if bad.any():
            raise SimulateError(
                f"CPT of node {self.node}: rows {np.flatnonzero(bad).tolist()} "
                "do not sum to 1"
            )
        table.setflags(write=False)

    @property
    def arity(self) -> int:
        return int(self.table.shape[1])


def _validate_cpts(dag: Dag, cpts: Sequence[Cpt]) -> list[Cpt]:
    n = dag.n_nodes
    if len(cpts) != n:
        raise SimulateError(f"need one CPT per node: got {len(cpts)} for {n} nodes")
    by_node: list[Cpt | None] = [None] * n
    for cpt in cpts:
        if not 0 <= cpt.node < n:
            raise SimulateError(f"CPT node {cpt.node} out of range")
        if by_node[cpt.node] is not None:
            raise SimulateError(f"duplicate CPT for node {cpt.node}")
        by_node[cpt.node] = cpt
    ordered = [c for c in by_node if c is not None]
    if len(ordered) != n:
        raise SimulateError("missing CPT for some node")
    arities = [c.arity for c in ordered]
    for cpt in ordered:
        if set(cpt.parents) != set(bits_of(dag.parent_masks[cpt.node])):
            raise SimulateError(
                f"CPT of node {cpt.node} lists parents {sorted(cpt.parents)}, "
                f"DAG has {sorted(bits_of(dag.parent_masks[cpt.node]))}"
            )
        q = 1
        for p in cpt.parents:
            q *= arities[p]
        if cpt.table.shape[0] != q:
            raise SimulateError(
                f"CPT of node {cpt.node} has {cpt.table.shape[0]} rows, "
                f"expected {q} parent configurations"
            )
    return ordered


def forward_sample(
    dag: Dag,
    cpts: Sequence[Cpt],
    n: int,
    seed: int,
    names: Sequence[str] | None = None,
) -> Dataset:
    """Simulate ``n`` independent rows from the network."""
    if n < 1:
        raise SimulateError(f"need at least one row, got {n}")
    ordered = _validate_cpts(dag, cpts)
    arities = [c.arity for c in ordered]
    rng = np.random.default_rng(seed)
    values = np.empty((n, dag.n_nodes), dtype=np.int64)
    for v in dag.topological_order():
        cpt = ordered[v]
        cfg = np.zeros(n, dtype=np.int64)
        for p in cpt.parents:
            cfg = cfg * arities[p] + values[:, p]
        probs = cpt.table[cfg]
        cum = np.cumsum(probs, axis=1)
        u = rng.random(n)
        values[:, v] = np.minimum(
            (u[:, None] > cum).sum(axis=1), cpt.arity - 1
        )
    if names is None:
        names = tuple(f"x{k}" for k in range(dag.n_nodes))
    return Dataset(tuple(names), tuple(arities), values)


# --- CPT JSON -------------------------------------------------------------------

def cpts_from_json(obj, names: Sequence[str]) -> list[Cpt]:
    """Parse [{"node": "b", "parents": ["a"], "table": [[...], ...]}, ...]."""
    index = {name: k for k, name in enumerate(names)}
    cpts = []
    for entry in obj:
        cpts.append(
            Cpt(
                node=index[entry["node"]],
                parents=tuple(index[p] for p in entry["parents"]),
                table=np.asarray(entry["table"], dtype=np.float64),
            )
        )
    return cpts


def cpts_to_json(cpts: Sequence[Cpt], names: Sequence[str]) -> list[dict]:
    return [
        {
            "node": names[c.node],
            "parents": [names[p] for p in c.parents],
            "table": c.table.tolist(),
        }
        for c in cpts
    ]


def load_cpts_json(path, names: Sequence[str]) -> list[Cpt]:
    with open(path, "r", encoding="utf-8") as fh:
        return cpts_from_json(json.load(fh), names)


# --- the committed benchmark ------------------------------------------------------

@dataclass(frozen=True)
class BenchmarkSpec:
    """The built-in sparse 5-node, 5-arc binary network.

    The committed structure keeps a and b adjacent while a,d and b,c stay
    non-adjacent, and its Markov equivalence class has exactly four
    members, so large-sample posteriors concentrate on a handful of DAGs.
    """

    version: int
    names: tuple[str, ...]
    dag: Dag
    cpts: tuple[Cpt, ...]
    sample_sizes: tuple[int, ...]


def benchmark_spec() -> BenchmarkSpec:
    """Load the versioned benchmark asset shipped with the package."""
    text = resources.files("mcdag").joinpath("assets/benchmark5.json").read_text(
        encoding="utf-8"
    )
    obj = json.loads(text)
    dag, names = dag_from_json(obj["dag"])
    cpts = cpts_from_json(obj["cpts"], names)
    _validate_cpts(dag, cpts)
    return BenchmarkSpec(
        version=int(obj["version"]),
        names=tuple(names),
        dag=dag,
        cpts=tuple(cpts),
        sample_sizes=tuple(obj["sample_sizes"]),
    )
