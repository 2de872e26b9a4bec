"""Proposal kernels: single-edge operations, new edge reversal (REV), and
Markov blanket resampling (MBR).

Each kernel returns a :class:`Proposal` holding the proposed DAG and the
log Hastings correction log[q(G|G') / q(G'|G)]. The sampler adds this to
the log score difference, so detailed balance with respect to the
cache-induced posterior holds kernel by kernel.

Single-edge moves explore finely; REV and MBR make large jumps by
resampling whole parent sets proportionally to their cached scores.
Partition sums over parent sets are computed in log space with the
max-subtraction trick: at 10,000 rows scores differ by hundreds of log
units and raw exponentials would overflow.

All candidate enumeration runs over the score cache's per-node entry
lists, so a parent set is a candidate iff it satisfies max_parents and
the ban/retain masks (key presence in a complete cache) and the stated
acyclicity constraint.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from random import Random

from .graph import Dag, bits_of, descendants_mask
from .priors import StructPrior
from .scoring import ScoreCache

# move kind labels as recorded in traces
ADD = "add"
DELETE = "delete"
REVERSE = "reverse"
SINGLE = "single"  # degenerate single-edge proposal (no specific op chosen)
REV = "rev"
MBR = "mbr"


@dataclass(frozen=True, slots=True)
class Proposal:
    """A proposed transition.

    ``log_hastings`` is log[q(G|G')/q(G'|G)], finite when not degenerate.
    ``degenerate`` is True when no valid move existed and the chain must
    self-loop; ``proposed`` then equals the current DAG.
    ``changed`` lists the nodes whose parent sets may differ from the
    current DAG, letting the sampler rescore incrementally.
    """

    proposed: Dag
    log_hastings: float
    move_kind: str
    degenerate: bool = False
    changed: tuple[int, ...] = ()


@dataclass(frozen=True)
class MoveWeights:
    """Mixture weights of the three kernels; must sum to 1."""

    p_single: float = 0.8
    p_rev: float = 0.1
    p_mbr: float = 0.1

    def __post_init__(self):
        for p in (self.p_single, self.p_rev, self.p_mbr):
            if p < 0:
                raise ValueError(f"negative move weight {p}")
        total = self.p_single + self.p_rev + self.p_mbr
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"move weights sum to {total}, expected 1")

    @classmethod
    def normalized(cls, single: float, rev: float, mbr: float) -> "MoveWeights":
        total = single + rev + mbr
        if total <= 0:
            raise ValueError("move weights must have a positive sum")
        return cls(single / total, rev / total, mbr / total)


def parse_weights(text: str) -> MoveWeights:
    """Parse the CLI syntax ``single=0.8,rev=0.1,mbr=0.1``."""
    values = {"single": 0.0, "rev": 0.0, "mbr": 0.0}
    for part in text.split(","):
        key, _, val = part.partition("=")
        key = key.strip()
        if key not in values or not val:
            raise ValueError(f"bad move-weight component {part!r}")
        values[key] = float(val)
    return MoveWeights.normalized(values["single"], values["rev"], values["mbr"])


def format_weights(w: MoveWeights) -> str:
    return f"single={w.p_single!r},rev={w.p_rev!r},mbr={w.p_mbr!r}"


# --- score-proportional draws over candidate parent sets ---------------------

def _log_partition(cands: list[tuple[int, float]]) -> float:
    hi = cands[0][1]
    for _, s in cands:
        if s > hi:
            hi = s
    total = 0.0
    for _, s in cands:
        total += math.exp(s - hi)
    return hi + math.log(total)


def _draw_proportional(
    cands: list[tuple[int, float]], rng: Random
) -> tuple[int, float, float]:
    """Draw (mask, score) with probability exp(score)/Z; returns log Z too."""
    hi = cands[0][1]
    for _, s in cands:
        if s > hi:
            hi = s
    cum = []
    total = 0.0
    for _, s in cands:
        total += math.exp(s - hi)
        cum.append(total)
    k = bisect_right(cum, rng.random() * total)
    if k >= len(cands):
        k = len(cands) - 1
    mask, score = cands[k]
    return mask, score, hi + math.log(total)


def _candidates(
    entries: list[tuple[int, float]], forbid: int, require: int
) -> list[tuple[int, float]]:
    return [
        (m, s) for m, s in entries if not m & forbid and m & require == require
    ]


# --- single-edge kernel -------------------------------------------------------

def _neighborhood(
    masks: list[int], n: int, cache: ScoreCache, count_only: bool = False
):
    """Valid add/delete/reverse operations from the DAG given as masks.

    Admissibility under max_parents/ban/retain is exactly key presence in
    the complete cache; acyclicity of additions uses precomputed
    descendant masks, reversals re-check on the modified graph.
    """
    desc = [descendants_mask(masks, n, v) for v in range(n)]
    count = 0
    ops = None if count_only else []
    tables = cache.tables
    for j in range(n):
        pj = masks[j]
        table_j = tables[j]
        for i in range(n):
            if i == j:
                continue
            bi = 1 << i
            if pj & bi:
                reduced = pj & ~bi
                if reduced in table_j:
                    count += 1  # delete i->j
                    if ops is not None:
                        ops.append((DELETE, i, j))
                    grown = masks[i] | (1 << j)
                    if grown in tables[i]:
                        # reverse i->j: acyclic iff i cannot reach j once
                        # i->j is removed
                        masks[j] = reduced
                        reachable = descendants_mask(masks, n, i)
                        masks[j] = pj
                        if not reachable >> j & 1:
                            count += 1
                            if ops is not None:
                                ops.append((REVERSE, i, j))
            else:
                if not desc[j] >> i & 1 and (pj | bi) in table_j:
                    count += 1  # add i->j
                    if ops is not None:
                        ops.append((ADD, i, j))
    return count if count_only else ops


def propose_single_edge(
    dag: Dag, prior: StructPrior, cache: ScoreCache, rng: Random
) -> Proposal:
    """Uniform draw from the valid add/delete/reverse neighborhood N(G).

    log_hastings = ln|N(G)| - ln|N(G')|; degenerate iff |N(G)| = 0.
    """
    n = dag.n_nodes
    masks = list(dag.parent_masks)
    ops = _neighborhood(masks, n, cache)
    if not ops:
        return Proposal(dag, 0.0, SINGLE, degenerate=True)
    kind, i, j = ops[rng.randrange(len(ops))]
    if kind == ADD:
        masks[j] |= 1 << i
        changed = (j,)
    elif kind == DELETE:
        masks[j] &= ~(1 << i)
        changed = (j,)
    else:
        masks[j] &= ~(1 << i)
        masks[i] |= 1 << j
        changed = (i, j)
    size_there = len(ops)
    size_back = _neighborhood(masks, n, cache, count_only=True)
    proposed = Dag(n, tuple(masks))
    return Proposal(
        proposed,
        math.log(size_there) - math.log(size_back),
        kind,
        changed=changed,
    )


# --- new edge reversal kernel (REV) -------------------------------------------

def _selectable_edges(masks: list[int], n: int, prior: StructPrior):
    """Edges (i, j) whose reversal is not statically impossible: i->j not
    retained and j->i not banned. Coincides with all edges when the prior
    has no constraints."""
    sel = []
    ban, retain = prior.ban_masks, prior.retain_masks
    for j in range(n):
        pj = masks[j]
        if not pj:
            continue
        rj = retain[j]
        for i in bits_of(pj):
            if rj >> i & 1:
                continue
            if ban[i] >> j & 1:
                continue
            sel.append((i, j))
    return sel


def propose_rev(
    dag: Dag, prior: StructPrior, cache: ScoreCache, rng: Random
) -> Proposal:
    """New edge reversal.

    Picks an edge i->j uniformly, orphans both endpoints, samples a new
    parent set for i constrained to contain j (establishing j->i), then a
    new parent set for j, each draw proportional to exp(cache score) among
    acyclicity-consistent admissible sets. The Hastings term combines the
    forward and reverse partition sums with the selectable-edge-count
    ratio. Degenerate iff the DAG has no selectable edge.
    """
    n = dag.n_nodes
    masks = list(dag.parent_masks)
    sel = _selectable_edges(masks, n, prior)
    if not sel:
        return Proposal(dag, 0.0, REV, degenerate=True)
    i, j = sel[rng.randrange(len(sel))]
    orig_i = masks[i]
    orig_j = masks[j]
    entries_i = cache.entries[i]
    entries_j = cache.entries[j]

    # orphan both endpoints
    g0 = masks
    g0[i] = 0
    g0[j] = 0

    # forward stage 1: parents of i, constrained to contain j
    req = prior.retain_masks[i] | (1 << j)
    cands = _candidates(entries_i, descendants_mask(g0, n, i), req)
    if not cands:
        return Proposal(dag, 0.0, REV, degenerate=True)
    new_i, s_new_i, z_fwd1 = _draw_proportional(cands, rng)
    g0[i] = new_i

    # forward stage 2: parents of j, unconstrained
    cands = _candidates(entries_j, descendants_mask(g0, n, j), prior.retain_masks[j])
    if not cands:
        return Proposal(dag, 0.0, REV, degenerate=True)
    new_j, s_new_j, z_fwd2 = _draw_proportional(cands, rng)
    g0[j] = new_j

    proposed = Dag(n, tuple(g0))
    n_sel_back = len(_selectable_edges(g0, n, prior))

    # reverse stage 1: parents of j from the orphaned graph, must contain i
    g0[i] = 0
    g0[j] = 0
    req_back = prior.retain_masks[j] | (1 << i)
    z_rev1 = _log_partition(
        _candidates(entries_j, descendants_mask(g0, n, j), req_back)
    )
    # reverse stage 2: parents of i with j's original parents restored
    g0[j] = orig_j
    z_rev2 = _log_partition(
        _candidates(entries_i, descendants_mask(g0, n, i), prior.retain_masks[i])
    )

    s_orig_i = cache.tables[i][orig_i]
    s_orig_j = cache.tables[j][orig_j]
    log_q_fwd = -math.log(len(sel)) + (s_new_i - z_fwd1) + (s_new_j - z_fwd2)
    log_q_rev = -math.log(n_sel_back) + (s_orig_j - z_rev1) + (s_orig_i - z_rev2)
    return Proposal(proposed, log_q_rev - log_q_fwd, REV, changed=(i, j))


# --- Markov blanket resampling kernel (MBR) -------------------------------------

def propose_mbr(
    dag: Dag, prior: StructPrior, cache: ScoreCache, rng: Random
) -> Proposal:
    """Markov blanket resampling.

    Picks a node v uniformly, orphans v and all its children, then
    resamples the parent set of v and of each child in ascending index
    order (each child keeps its edge from v), every draw proportional to
    exp(cache score) among acyclicity-consistent admissible sets. The
    Hastings term replays the same stages toward the original parent
    sets. Degenerate when a child stage has no admissible set.
    """
    n = dag.n_nodes
    orig = dag.parent_masks
    v = rng.randrange(n)
    bv = 1 << v
    children = [w for w in range(n) if orig[w] & bv]

    g0 = list(orig)
    g0[v] = 0
    for w in children:
        g0[w] = 0

    # stage for v: forward and reverse share the candidate space since both
    # start from the same orphaned graph
    cands_v = _candidates(cache.entries[v], descendants_mask(g0, n, v), prior.retain_masks[v])
    new_v, s_new_v, z_v = _draw_proportional(cands_v, rng)
    log_q_fwd = s_new_v - z_v
    log_q_rev = cache.tables[v][orig[v]] - z_v

    fwd = list(g0)
    fwd[v] = new_v
    for y in children:
        req = prior.retain_masks[y] | bv
        cands = _candidates(cache.entries[y], descendants_mask(fwd, n, y), req)
        if not cands:
            return Proposal(dag, 0.0, MBR, degenerate=True)
        new_y, s_new_y, z_y = _draw_proportional(cands, rng)
        log_q_fwd += s_new_y - z_y
        fwd[y] = new_y

    if children:
        rev = g0
        rev[v] = orig[v]
        for y in children:
            req = prior.retain_masks[y] | bv
            z_y = _log_partition(
                _candidates(cache.entries[y], descendants_mask(rev, n, y), req)
            )
            log_q_rev += cache.tables[y][orig[y]] - z_y
            rev[y] = orig[y]

    proposed = Dag(n, tuple(fwd))
    return Proposal(
        proposed, log_q_rev - log_q_fwd, MBR, changed=(v, *children)
    )
