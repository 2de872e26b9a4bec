"""Shared fixtures: random DAG/dataset generators and a tiny 3-node DGP."""

from __future__ import annotations

import random

import numpy as np
import pytest

from mcdag import Cpt, Dag, dataset_from_rows, forward_sample
from mcdag.sampler import Trace


def random_dag(rng: random.Random, n: int, max_parents: int | None = None) -> Dag:
    """Random DAG via a random permutation and random predecessor subsets."""
    limit = n - 1 if max_parents is None else max_parents
    perm = list(range(n))
    rng.shuffle(perm)
    masks = [0] * n
    placed: list[int] = []
    for v in perm:
        k = rng.randint(0, min(limit, len(placed)))
        for u in rng.sample(placed, k):
            masks[v] |= 1 << u
        placed.append(v)
    return Dag(n, tuple(masks))


def random_binary_dataset(rng: random.Random, n_vars: int, n_rows: int):
    rows = [[rng.randint(0, 1) for _ in range(n_vars)] for _ in range(n_rows)]
    # force both categories in every column so inferred arities are 2
    for c in range(n_vars):
        rows[0][c] = 0
        rows[-1][c] = 1
    return dataset_from_rows(rows)


def chain3_dgp():
    """The committed 3-node chain 0 -> 1 -> 2 used for oracle comparisons."""
    dag = Dag.from_parent_sets([[], [0], [1]])
    cpts = [
        Cpt(0, (), [[0.5, 0.5]]),
        Cpt(1, (0,), [[0.7, 0.3], [0.3, 0.7]]),
        Cpt(2, (1,), [[0.65, 0.35], [0.35, 0.65]]),
    ]
    return dag, cpts


def chain3_dataset(seed: int, n_rows: int = 200):
    dag, cpts = chain3_dgp()
    return forward_sample(dag, cpts, n_rows, seed)


def trace_from_dags(dags: list[Dag], log_scores=None, names=None) -> Trace:
    """Assemble a minimal Trace for query-level tests."""
    from mcdag import encode_dag

    n = dags[0].n_nodes
    size = len(dags)
    if log_scores is None:
        log_scores = [0.0] * size
    meta = {"seed": 0, "generator": "mt19937", "ess": 1.0,
            "weights": "single=0.8,rev=0.1,mbr=0.1", "burn_in": 0, "thin": 1}
    if names is not None:
        meta["nodes"] = list(names)
    return Trace(
        n_nodes=n,
        steps=np.arange(1, size + 1, dtype=np.int64),
        moves=["add"] * size,
        accepted=np.ones(size, dtype=bool),
        degenerate=np.zeros(size, dtype=bool),
        log_scores=np.asarray(log_scores, dtype=np.float64),
        encodings=[encode_dag(d) for d in dags],
        meta=meta,
    )


@pytest.fixture
def rng():
    return random.Random(20240808)
