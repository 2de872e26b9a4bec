"""Metropolis-Hastings chain over DAG space.

States are DAGs, the stationary distribution is the cache-induced
posterior restricted to the prior's admissible set. Acceptance decisions
are made in log space (accept iff ln u < delta), never by exponentiating
large score differences. Chains are bit-reproducible: one seeded
``random.Random`` (MT19937) stream per chain drives every draw, and the
trace header records the generator name and seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from random import Random

import numpy as np

from .graph import Dag, decode_dag, encode_dag, masks_acyclic
from .moves import (
    MoveWeights,
    format_weights,
    parse_weights,
    propose_mbr,
    propose_rev,
    propose_single_edge,
)
from .priors import StructPrior
from .scoring import ScoreCache, total_score

GENERATOR_NAME = "mt19937"

START_EMPTY = "empty"
START_RANDOM = "random"


class SamplerError(Exception):
    pass


class TraceError(Exception):
    """A trace record violates a structural or score invariant."""


@dataclass(frozen=True)
class ChainConfig:
    steps: int
    seed: int = 0
    start: Dag | str = START_EMPTY
    weights: MoveWeights = field(default_factory=MoveWeights)
    burn_in: int = 0
    thin: int = 1

    def __post_init__(self):
        if self.steps < 1:
            raise SamplerError(f"steps must be >= 1, got {self.steps}")
        if self.thin < 1:
            raise SamplerError(f"thin must be >= 1, got {self.thin}")
        if not 0 <= self.burn_in < self.steps:
            raise SamplerError(
                f"burn_in must lie in [0, steps), got {self.burn_in}"
            )
        if isinstance(self.start, str) and self.start not in (
            START_EMPTY,
            START_RANDOM,
        ):
            raise SamplerError(f"unknown start kind {self.start!r}")


@dataclass
class Trace:
    """Columnar record of the retained chain steps."""

    n_nodes: int
    steps: np.ndarray
    moves: list[str]
    accepted: np.ndarray
    degenerate: np.ndarray
    log_scores: np.ndarray
    encodings: list[str]
    meta: dict

    def __len__(self) -> int:
        return len(self.encodings)

    @property
    def names(self) -> tuple[str, ...] | None:
        nodes = self.meta.get("nodes")
        return tuple(nodes) if nodes else None

    def dag_at(self, k: int) -> Dag:
        return decode_dag(self.encodings[k], self.n_nodes)

    def last_dag(self) -> Dag:
        if not self.encodings:
            raise TraceError("empty trace")
        return decode_dag(self.encodings[-1], self.n_nodes)


def _random_start(prior: StructPrior, cache: ScoreCache, rng: Random) -> Dag:
    """Dispersion device: a uniform node permutation, then a uniform
    admissible parent set per node among already-placed predecessors.
    This is NOT uniform over DAGs."""
    n = prior.n_nodes
    for _ in range(1000):
        perm = list(range(n))
        rng.shuffle(perm)
        masks = [0] * n
        placed = 0
        ok = True
        for v in perm:
            options = [
                m for m, _ in cache.entries[v] if m & placed == m
            ]
            if not options:
                ok = False
                break
            masks[v] = options[rng.randrange(len(options))]
            placed |= 1 << v
        if ok:
            return Dag(n, tuple(masks))
    raise SamplerError("could not draw a random admissible start DAG")


def _resolve_start(
    start: Dag | str, prior: StructPrior, cache: ScoreCache, rng: Random
) -> Dag:
    if isinstance(start, Dag):
        if not prior.is_admissible(start):
            raise SamplerError("start DAG is inadmissible under the prior")
        return start
    if start == START_EMPTY:
        # minimal admissible DAG: exactly the retained edges
        return prior.minimal_dag()
    return _random_start(prior, cache, rng)


def run_chain(
    cache: ScoreCache, prior: StructPrior | None, config: ChainConfig
) -> Trace:
    """Run the Metropolis-Hastings chain and return the retained records.

    At each step a move kind is drawn from the mixture weights, the
    kernel proposes, and the proposal is accepted with probability
    min(1, exp(delta_score + log_prior_ratio + log_hastings)). Under the
    uniform structure prior the log prior ratio is zero for admissible
    proposals. Deterministic given the seed.
    """
    if prior is None:
        prior = cache.prior
    elif prior != cache.prior:
        raise SamplerError(
            "cache/prior mismatch: the cache was built under a different prior"
        )
    n = cache.n_nodes
    rng = Random(config.seed)
    current = _resolve_start(config.start, prior, cache, rng)
    if current.n_nodes != n:
        raise SamplerError(
            f"start DAG has {current.n_nodes} nodes, cache has {n}"
        )
    node_scores = [cache.local(v, current.parent_masks[v]) for v in range(n)]

    w = config.weights
    cut_single = w.p_single
    cut_rev = w.p_single + w.p_rev
    tables = cache.tables
    log_prior_ratio = prior.log_prior_ratio

    rec_steps: list[int] = []
    rec_moves: list[str] = []
    rec_accepted: list[bool] = []
    rec_degenerate: list[bool] = []
    rec_scores: list[float] = []
    rec_encodings: list[str] = []
    encode_memo: dict[tuple[int, ...], str] = {}

    burn_in, thin = config.burn_in, config.thin
    for step in range(1, config.steps + 1):
        r = rng.random()
        if r < cut_single:
            prop = propose_single_edge(current, prior, cache, rng)
        elif r < cut_rev:
            prop = propose_rev(current, prior, cache, rng)
        else:
            prop = propose_mbr(current, prior, cache, rng)

        if prop.degenerate:
            accepted = False
        else:
            delta = 0.0
            new_masks = prop.proposed.parent_masks
            for v in prop.changed:
                delta += tables[v][new_masks[v]] - node_scores[v]
            log_ratio = (
                delta + log_prior_ratio(prop.proposed, current) + prop.log_hastings
            )
            u = 1.0 - rng.random()
            accepted = math.log(u) < log_ratio
            if accepted:
                for v in prop.changed:
                    node_scores[v] = tables[v][new_masks[v]]
                current = prop.proposed

        assert masks_acyclic(current.parent_masks, n)

        if step > burn_in and (step - burn_in) % thin == 0:
            total = 0.0
            for v in range(n):
                total += node_scores[v]
            key = current.parent_masks
            enc = encode_memo.get(key)
            if enc is None:
                enc = encode_memo[key] = encode_dag(current)
            rec_steps.append(step)
            rec_moves.append(prop.move_kind)
            rec_accepted.append(accepted)
            rec_degenerate.append(prop.degenerate)
            rec_scores.append(total)
            rec_encodings.append(enc)

    meta = {
        "seed": config.seed,
        "generator": GENERATOR_NAME,
        "ess": cache.ess,
        "weights": format_weights(w),
        "burn_in": burn_in,
        "thin": thin,
        "start": config.start if isinstance(config.start, str) else "dag",
    }
    if cache.names is not None:
        meta["nodes"] = list(cache.names)
    return Trace(
        n_nodes=n,
        steps=np.asarray(rec_steps, dtype=np.int64),
        moves=rec_moves,
        accepted=np.asarray(rec_accepted, dtype=bool),
        degenerate=np.asarray(rec_degenerate, dtype=bool),
        log_scores=np.asarray(rec_scores, dtype=np.float64),
        encodings=rec_encodings,
        meta=meta,
    )


def resume_chain(
    trace: Trace,
    cache: ScoreCache,
    prior: StructPrior | None,
    extra_steps: int,
    seed: int,
) -> Trace:
    """Continue from the last recorded DAG with a fresh stream.

    With ``extra_steps == 0`` the trace is returned unchanged.
    """
    if len(trace) == 0:
        raise TraceError("cannot resume an empty trace")
    if trace.n_nodes != cache.n_nodes:
        raise SamplerError(
            f"trace has {trace.n_nodes} nodes, cache has {cache.n_nodes}"
        )
    if extra_steps == 0:
        return trace
    config = ChainConfig(
        steps=extra_steps,
        seed=seed,
        start=trace.last_dag(),
        weights=parse_weights(trace.meta["weights"]),
        burn_in=0,
        thin=int(trace.meta.get("thin", 1)),
    )
    segment = run_chain(cache, prior, config)
    offset = int(trace.steps[-1])
    meta = dict(trace.meta)
    meta.setdefault("resume_seeds", [])
    meta["resume_seeds"] = list(meta["resume_seeds"]) + [seed]
    return Trace(
        n_nodes=trace.n_nodes,
        steps=np.concatenate([trace.steps, segment.steps + offset]),
        moves=trace.moves + segment.moves,
        accepted=np.concatenate([trace.accepted, segment.accepted]),
        degenerate=np.concatenate([trace.degenerate, segment.degenerate]),
        log_scores=np.concatenate([trace.log_scores, segment.log_scores]),
        encodings=trace.encodings + segment.encodings,
        meta=meta,
    )


def validate_trace(
    trace: Trace, cache: ScoreCache, prior: StructPrior | None = None
) -> None:
    """Re-validate the trace invariants; raises TraceError on violation.

    Every recorded DAG must be acyclic and admissible (retained edges
    present, banned edges absent, parent limit respected), and every
    recorded log score must equal the cache total of the decoded DAG
    within 1e-9. Where records are one step apart, consecutive DAGs must
    differ by at most the recorded move's effect.
    """
    if prior is None:
        prior = cache.prior
    if len(trace) == 0:
        raise TraceError("empty trace")
    seen: dict[str, float] = {}
    for k, enc in enumerate(trace.encodings):
        expected = seen.get(enc)
        if expected is None:
            dag = decode_dag(enc, trace.n_nodes)  # Dag construction checks acyclicity
            if not prior.is_admissible(dag):
                raise TraceError(f"record {k}: DAG {enc} violates the prior")
            expected = seen[enc] = total_score(dag, cache)
        if abs(expected - float(trace.log_scores[k])) > 1e-9:
            raise TraceError(
                f"record {k}: stored log score {trace.log_scores[k]} != "
                f"recomputed {expected}"
            )
        if k and trace.steps[k] == trace.steps[k - 1] + 1:
            _check_move_effect(trace, k)


def _check_move_effect(trace: Trace, k: int) -> None:
    """Consecutive records may differ only in the recorded move's reach."""
    prev = decode_dag(trace.encodings[k - 1], trace.n_nodes)
    cur = decode_dag(trace.encodings[k], trace.n_nodes)
    changed = {
        v
        for v in range(trace.n_nodes)
        if prev.parent_masks[v] != cur.parent_masks[v]
    }
    if not changed:
        return
    move = trace.moves[k]
    if not trace.accepted[k] or trace.degenerate[k]:
        raise TraceError(f"record {k}: state changed on a rejected step")
    if move in ("add", "delete"):
        ok = len(changed) == 1
    elif move in ("reverse", "rev"):
        ok = len(changed) <= 2
    elif move == "mbr":
        from .graph import bits_of

        ok = any(
            changed <= ({v} | set(bits_of(prev.children_mask(v)))) for v in changed
        )
    else:
        ok = False
    if not ok:
        raise TraceError(
            f"record {k}: move {move!r} cannot explain changes at nodes {sorted(changed)}"
        )


# --- trace CSV ----------------------------------------------------------------

TRACE_COLUMNS = "step,move,accepted,degenerate,log_score,dag_hex"


def trace_csv_text(trace: Trace) -> str:
    """Trace CSV with '#'-prefixed key=value header comments."""
    lines = [f"# n_nodes={trace.n_nodes}"]
    for key in ("seed", "generator", "ess", "weights", "burn_in", "thin", "start"):
        if key in trace.meta:
            lines.append(f"# {key}={trace.meta[key]}")
    if trace.meta.get("nodes"):
        lines.append("# nodes=" + ",".join(trace.meta["nodes"]))
    lines.append(TRACE_COLUMNS)
    for k in range(len(trace)):
        lines.append(
            f"{trace.steps[k]},{trace.moves[k]},{int(trace.accepted[k])},"
            f"{int(trace.degenerate[k])},{float(trace.log_scores[k])!r},"
            f"{trace.encodings[k]}"
        )
    return "\n".join(lines) + "\n"


def write_trace_csv(trace: Trace, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(trace_csv_text(trace))


def read_trace_csv(path) -> Trace:
    meta: dict = {}
    steps: list[int] = []
    moves: list[str] = []
    accepted: list[bool] = []
    degenerate: list[bool] = []
    scores: list[float] = []
    encodings: list[str] = []
    header_seen = False
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                meta[key.strip()] = val.strip()
                continue
            if not header_seen:
                if line != TRACE_COLUMNS:
                    raise TraceError(f"unexpected trace header {line!r}")
                header_seen = True
                continue
            parts = line.split(",", 5)
            if len(parts) != 6:
                raise TraceError(f"malformed trace row {line!r}")
            steps.append(int(parts[0]))
            moves.append(parts[1])
            accepted.append(parts[2] == "1")
            degenerate.append(parts[3] == "1")
            scores.append(float(parts[4]))
            encodings.append(parts[5])
    if "n_nodes" not in meta:
        raise TraceError("trace file lacks the n_nodes header")
    n_nodes = int(meta.pop("n_nodes"))
    if "nodes" in meta:
        meta["nodes"] = meta["nodes"].split(",")
    for key in ("seed", "burn_in", "thin"):
        if key in meta:
            meta[key] = int(meta[key])
    if "ess" in meta:
        meta["ess"] = float(meta["ess"])
    return Trace(
        n_nodes=n_nodes,
        steps=np.asarray(steps, dtype=np.int64),
        moves=moves,
        accepted=np.asarray(accepted, dtype=bool),
        degenerate=np.asarray(degenerate, dtype=bool),
        log_scores=np.asarray(scores, dtype=np.float64),
        encodings=encodings,
        meta=meta,
    )
