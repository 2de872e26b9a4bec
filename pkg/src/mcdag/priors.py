"""Structural priors: ban/retain edge masks plus a max-parent limit.

The only prior kind shipped is uniform over the admissible DAG set; the
log prior ratio between two admissible DAGs is therefore zero, but it is
exposed as an overridable hook so non-uniform structure priors can slot
in without touching the proposal kernels.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .graph import Dag, masks_acyclic

UNIFORM = "UniformOverAdmissibleDags"


class PriorError(Exception):
    """Inconsistent ban/retain/max-parent specification."""


@dataclass(frozen=True)
class StructPrior:
    """Defines the DAG support set for sampling and scoring.

    ``ban`` and ``retain`` are sets of directed (parent, child) edges.
    Retained edges must be present in every admissible DAG, banned edges
    in none; the retained set itself must be acyclic and within the
    parent limit.
    """

    n_nodes: int
    max_parents: int | None = None
    ban: frozenset[tuple[int, int]] = frozenset()
    retain: frozenset[tuple[int, int]] = frozenset()
    prior_kind: str = UNIFORM
    ban_masks: tuple[int, ...] = field(init=False, repr=False)
    retain_masks: tuple[int, ...] = field(init=False, repr=False)

    def __post_init__(self):
        n = self.n_nodes
        if n < 1:
            raise PriorError("need at least one node")
        limit = self.max_parents if self.max_parents is not None else n - 1
        if not 0 <= limit <= n - 1:
            raise PriorError(f"max_parents={limit} outside [0, {n - 1}]")
        object.__setattr__(self, "max_parents", limit)
        object.__setattr__(self, "ban", frozenset(self.ban))
        object.__setattr__(self, "retain", frozenset(self.retain))
        if self.prior_kind != UNIFORM:
            raise PriorError(f"unknown prior kind {self.prior_kind!r}")

        for i, j in self.ban | self.retain:
            if not (0 <= i < n and 0 <= j < n) or i == j:
                raise PriorError(f"edge ({i}, {j}) invalid for {n} nodes")
        overlap = self.ban & self.retain
        if overlap:
            raise PriorError(f"edges both banned and retained: {sorted(overlap)}")

        ban_masks = [0] * n
        retain_masks = [0] * n
        for i, j in self.ban:
            ban_masks[j] |= 1 << i
        for i, j in self.retain:
            retain_masks[j] |= 1 << i
        object.__setattr__(self, "ban_masks", tuple(ban_masks))
        object.__setattr__(self, "retain_masks", tuple(retain_masks))

        for v, m in enumerate(retain_masks):
            if m.bit_count() > limit:
                raise PriorError(
                    f"node {v} retains {m.bit_count()} parents, over limit {limit}"
                )
        if not masks_acyclic(retain_masks, n):
            raise PriorError("retained edge set contains a cycle")

    def admits_parent_set(self, v: int, mask: int) -> bool:
        return (
            mask.bit_count() <= self.max_parents
            and not mask & (1 << v)
            and not mask & self.ban_masks[v]
            and mask & self.retain_masks[v] == self.retain_masks[v]
        )

    def is_admissible(self, dag: Dag) -> bool:
        if dag.n_nodes != self.n_nodes:
            return False
        return all(
            self.admits_parent_set(v, dag.parent_masks[v]) for v in range(self.n_nodes)
        )

    def minimal_dag(self) -> Dag:
        """The admissible DAG with the fewest edges (just the retained ones)."""
        return Dag(self.n_nodes, self.retain_masks)

    def log_prior_ratio(self, proposed: Dag, current: Dag) -> float:
        """Uniform over the admissible set: zero for any admissible pair."""
        return 0.0


def unconstrained(n_nodes: int, max_parents: int | None = None) -> StructPrior:
    return StructPrior(n_nodes=n_nodes, max_parents=max_parents)


def prior_from_edge_sets(
    n_nodes: int,
    max_parents: int | None = None,
    ban: Iterable[tuple[int, int]] = (),
    retain: Iterable[tuple[int, int]] = (),
) -> StructPrior:
    return StructPrior(
        n_nodes=n_nodes,
        max_parents=max_parents,
        ban=frozenset(ban),
        retain=frozenset(retain),
    )
