"""BDeu log marginal-likelihood scoring and the exhaustive parent-set cache.

The score of a DAG decomposes into per-node local scores, so the sampler
only ever needs one table lookup per changed node. The cache enumerates
every admissible (node, parent set) pair up front; admissibility under
the structural prior is thereby encoded in key presence, which the move
kernels exploit.

BDeu with equivalent sample size ``ess`` assigns equal scores to
Markov-equivalent DAGs; binary variables are the 2-category special case.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable

import numpy as np
from scipy.special import gammaln

from .data import Dataset, counts
from .graph import Dag, bits_of, mask_of
from .priors import StructPrior, unconstrained

DEFAULT_ESS = 1.0
DEFAULT_CACHE_CEILING = 10_000_000


class ScoringError(Exception):
    pass


class CacheMiss(ScoringError):
    """A parent set absent from the cache — signals a violated
    max_parents/ban/retain constraint or a cache/prior mismatch."""


class CacheBudgetError(ScoringError):
    """Requested cache would exceed the combinatorial entry ceiling."""


def local_score(
    dataset: Dataset, child: int, parent_set: Iterable[int], ess: float = DEFAULT_ESS
) -> float:
    """BDeu log local score of ``child`` given ``parent_set``.

    sum_j [lnG(a_j) - lnG(a_j + N_j)] + sum_jk [lnG(a_jk + N_jk) - lnG(a_jk)]
    with a_jk = ess/(q*r), a_j = ess/q, q parent configurations, r child
    states. Pure and deterministic; 0.0 on an empty data slice.
    """
    if ess <= 0:
        raise ScoringError(f"ess must be positive, got {ess}")
    n_jk = counts(dataset, child, parent_set)
    q, r = n_jk.shape
    a_jk = ess / (q * r)
    a_j = ess / q
    n_j = n_jk.sum(axis=1)
    score = float(
        np.sum(gammaln(a_j) - gammaln(a_j + n_j))
        + np.sum(gammaln(a_jk + n_jk) - gammaln(a_jk))
    )
    return score


@dataclass
class ScoreCache:
    """Per-node tables mapping parent-set bitmask -> log local score.

    ``tables[v]`` is complete over the admissible sets for node v; the
    parallel ``entries[v]`` list of (mask, score) pairs serves the move
    kernels' candidate enumeration. Immutable by convention after build.
    """

    n_nodes: int
    max_parents: int
    ess: float
    prior: StructPrior
    tables: list[dict[int, float]]
    names: tuple[str, ...] | None = None
    entries: list[list[tuple[int, float]]] = field(init=False, repr=False)

    def __post_init__(self):
        for v, table in enumerate(self.tables):
            for m, s in table.items():
                if not math.isfinite(s):
                    raise ScoringError(f"non-finite cache entry at node {v}")
        self.entries = [sorted(t.items()) for t in self.tables]

    def local(self, v: int, parent_mask: int) -> float:
        try:
            return self.tables[v][parent_mask]
        except KeyError:
            raise CacheMiss(
                f"node {v} has no cached score for parent set "
                f"{sorted(bits_of(parent_mask))}"
            ) from None

    @property
    def n_entries(self) -> int:
        return sum(len(t) for t in self.tables)


def expected_entry_count(n_nodes: int, max_parents: int) -> int:
    per_node = sum(math.comb(n_nodes - 1, k) for k in range(max_parents + 1))
    return n_nodes * per_node


def admissible_parent_masks(prior: StructPrior, v: int) -> list[int]:
    """All parent-set bitmasks for node v admitted by the prior, sorted."""
    others = [u for u in range(prior.n_nodes) if u != v]
    required = prior.retain_masks[v]
    masks = []
    for k in range(prior.max_parents + 1):
        for combo in combinations(others, k):
            m = mask_of(combo)
            if m & prior.ban_masks[v]:
                continue
            if m & required != required:
                continue
            masks.append(m)
    masks.sort()
    return masks


def build_cache(
    dataset: Dataset,
    max_parents: int | None = None,
    ess: float = DEFAULT_ESS,
    prior: StructPrior | None = None,
    ceiling: int = DEFAULT_CACHE_CEILING,
    threads: int = 1,
) -> ScoreCache:
    """Score every admissible (node, parent set) pair of the dataset.

    Entries are pure functions of the immutable dataset, so the per-node
    work parallelizes over a thread pool when ``threads`` > 1.
    """
    n = dataset.n_vars
    if prior is None:
        prior = unconstrained(n, max_parents)
    elif prior.n_nodes != n:
        raise ScoringError(f"prior is for {prior.n_nodes} nodes, dataset has {n}")
    if max_parents is not None and max_parents != prior.max_parents:
        raise ScoringError(
            f"max_parents={max_parents} conflicts with prior limit {prior.max_parents}"
        )
    if ess <= 0:
        raise ScoringError(f"ess must be positive, got {ess}")
    if expected_entry_count(n, prior.max_parents) > ceiling:
        raise CacheBudgetError(
            f"cache would hold up to {expected_entry_count(n, prior.max_parents)} "
            f"entries, over the ceiling {ceiling}"
        )

    def score_node(v: int) -> dict[int, float]:
        return {
            m: local_score(dataset, v, list(bits_of(m)), ess)
            for m in admissible_parent_masks(prior, v)
        }

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            tables = list(pool.map(score_node, range(n)))
    else:
        tables = [score_node(v) for v in range(n)]

    return ScoreCache(
        n_nodes=n,
        max_parents=prior.max_parents,
        ess=ess,
        prior=prior,
        tables=tables,
        names=dataset.names,
    )


def total_score(dag: Dag, cache: ScoreCache) -> float:
    """Sum of cached local scores over nodes 0..n-1, in index order."""
    if dag.n_nodes != cache.n_nodes:
        raise ScoringError(
            f"dag has {dag.n_nodes} nodes, cache has {cache.n_nodes}"
        )
    total = 0.0
    for v in range(dag.n_nodes):
        total += cache.local(v, dag.parent_masks[v])
    return total


def flat_cache(
    n_nodes: int,
    prior: StructPrior | None = None,
    value: float = 0.0,
    ess: float = DEFAULT_ESS,
) -> ScoreCache:
    """A cache with every admissible entry equal; the induced posterior is
    uniform over the admissible DAG set. Used to test detailed balance."""
    if prior is None:
        prior = unconstrained(n_nodes)
    tables = [
        {m: value for m in admissible_parent_masks(prior, v)} for v in range(n_nodes)
    ]
    return ScoreCache(
        n_nodes=n_nodes,
        max_parents=prior.max_parents,
        ess=ess,
        prior=prior,
        tables=tables,
    )


# --- serialization ------------------------------------------------------------

def _mask_key(mask: int) -> str:
    return ",".join(str(i) for i in bits_of(mask))


def cache_to_json(cache: ScoreCache) -> dict:
    """JSON form with parent sets as sorted comma-joined index strings.

    Carries the prior's ban/retain edges (and variable names when known)
    so downstream commands can rebuild the sampling support from the
    cache artifact alone.
    """
    obj = {
        "n": cache.n_nodes,
        "ess": cache.ess,
        "max_parents": cache.max_parents,
        "scores": {
            str(v): {_mask_key(m): s for m, s in cache.entries[v]}
            for v in range(cache.n_nodes)
        },
    }
    if cache.names is not None:
        obj["nodes"] = list(cache.names)
    if cache.prior.ban:
        obj["ban"] = sorted(list(e) for e in cache.prior.ban)
    if cache.prior.retain:
        obj["retain"] = sorted(list(e) for e in cache.prior.retain)
    return obj


def cache_from_json(obj: dict) -> ScoreCache:
    n = int(obj["n"])
    prior = StructPrior(
        n_nodes=n,
        max_parents=int(obj["max_parents"]),
        ban=frozenset(tuple(e) for e in obj.get("ban", [])),
        retain=frozenset(tuple(e) for e in obj.get("retain", [])),
    )
    tables: list[dict[int, float]] = [{} for _ in range(n)]
    for v_str, table in obj["scores"].items():
        v = int(v_str)
        for key, s in table.items():
            mask = mask_of(int(tok) for tok in key.split(",")) if key else 0
            tables[v][mask] = float(s)
    names = tuple(obj["nodes"]) if "nodes" in obj else None
    return ScoreCache(
        n_nodes=n,
        max_parents=int(obj["max_parents"]),
        ess=float(obj["ess"]),
        prior=prior,
        tables=tables,
        names=names,
    )


def save_cache(cache: ScoreCache, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(cache_to_json(cache), fh, indent=1)
        fh.write("\n")


def load_cache(path) -> ScoreCache:
    with open(path, "r", encoding="utf-8") as fh:
        return cache_from_json(json.load(fh))
