"""Structural queries over a trace: Monte Carlo feature posteriors,
DAG frequency tables, and normalized score traces.

A feature posterior is the arithmetic mean of a 0/1 function of the DAG
over the retained samples. Besides the built-in arc/adjacency features,
``estimate`` accepts any predicate taking a decoded Dag and returning a
truth value. Adjacency counts an arc in either direction; since 2-cycles
are impossible the two directed indicators never co-occur, so the
adjacency estimate equals the sum of the two directed ones.
"""

from __future__ import annotations

import csv
import io
import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .graph import Dag, decode_dag
from .sampler import Trace


class QueryError(Exception):
    pass


@dataclass(frozen=True)
class DirectedArc:
    i: int
    j: int


@dataclass(frozen=True)
class UndirectedAdjacency:
    i: int
    j: int


@dataclass(frozen=True)
class AllArcs:
    pass


@dataclass(frozen=True)
class AllAdjacencies:
    pass


FeatureQuery = (
    DirectedArc | UndirectedAdjacency | AllArcs | AllAdjacencies | Callable[[Dag], bool]
)


@dataclass
class QueryReport:
    """Feature -> posterior probability estimates plus optional DAG table."""

    estimates: dict[str, float]
    sample_size: int
    method: str = "mcmc"
    dag_frequency: list[tuple[str, int, float]] | None = None
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        obj: dict = {
            "method": self.method,
            "sample_size": self.sample_size,
            "estimates": self.estimates,
        }
        if self.dag_frequency is not None:
            obj["dag_frequency"] = [
                {"dag_hex": enc, "count": count, "log_score": score}
                for enc, count, score in self.dag_frequency
            ]
        obj.update(self.extra)
        return obj

    def to_csv_text(self) -> str:
        """Plot-ready CSV: feature rows, then DAG-frequency rows if any."""
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["feature", "estimate"])
        for name, value in self.estimates.items():
            writer.writerow([name, repr(float(value))])
        if self.dag_frequency is not None:
            writer.writerow([])
            writer.writerow(["dag_hex", "count", "log_score"])
            for enc, count, score in self.dag_frequency:
                writer.writerow([enc, count, repr(float(score))])
        return buf.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv_text())

    def write_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, indent=1)
            fh.write("\n")


def _label(names: Sequence[str] | None, v: int) -> str:
    return names[v] if names else str(v)


def arc_label(i: int, j: int, names=None) -> str:
    return f"arc:{_label(names, i)}->{_label(names, j)}"


def adj_label(i: int, j: int, names=None) -> str:
    a, b = sorted((i, j))
    return f"adj:{_label(names, a)}-{_label(names, b)}"


def _distinct_dags(trace: Trace) -> list[tuple[Dag, int]]:
    counter = Counter(trace.encodings)
    return [
        (decode_dag(enc, trace.n_nodes), count) for enc, count in counter.items()
    ]


def _check_pair(trace: Trace, i: int, j: int) -> None:
    n = trace.n_nodes
    if not (0 <= i < n and 0 <= j < n) or i == j:
        raise QueryError(f"node pair ({i}, {j}) invalid for {n} nodes")


def estimate(trace: Trace, query: FeatureQuery, label: str | None = None) -> QueryReport:
    """Eq.-style Monte Carlo estimate: the mean of the feature indicator
    over the retained samples (burn-in/thinning already applied upstream)."""
    if len(trace) == 0:
        raise QueryError("empty trace")
    names = trace.names
    distinct = _distinct_dags(trace)
    total = len(trace)

    def mean_of(pred: Callable[[Dag], bool]) -> float:
        hits = sum(count for dag, count in distinct if pred(dag))
        return hits / total

    estimates: dict[str, float] = {}
    if isinstance(query, DirectedArc):
        _check_pair(trace, query.i, query.j)
        i, j = query.i, query.j
        estimates[arc_label(i, j, names)] = mean_of(lambda d: d.has_edge(i, j))
    elif isinstance(query, UndirectedAdjacency):
        _check_pair(trace, query.i, query.j)
        i, j = query.i, query.j
        estimates[adj_label(i, j, names)] = mean_of(
            lambda d: d.has_edge(i, j) or d.has_edge(j, i)
        )
    elif isinstance(query, AllArcs):
        for i in range(trace.n_nodes):
            for j in range(trace.n_nodes):
                if i != j:
                    estimates[arc_label(i, j, names)] = mean_of(
                        lambda d, i=i, j=j: d.has_edge(i, j)
                    )
    elif isinstance(query, AllAdjacencies):
        for i in range(trace.n_nodes):
            for j in range(i + 1, trace.n_nodes):
                estimates[adj_label(i, j, names)] = mean_of(
                    lambda d, i=i, j=j: d.has_edge(i, j) or d.has_edge(j, i)
                )
    elif callable(query):
        estimates[label or "custom"] = mean_of(lambda d: bool(query(d)))
    else:
        raise QueryError(f"unsupported query {query!r}")
    return QueryReport(estimates=estimates, sample_size=total)


def dag_frequency(trace: Trace, top_k: int | None = None) -> QueryReport:
    """Most-visited DAGs with counts and log scores, count-descending."""
    if len(trace) == 0:
        raise QueryError("empty trace")
    counter = Counter(trace.encodings)
    score_of: dict[str, float] = {}
    for enc, s in zip(trace.encodings, trace.log_scores):
        if enc not in score_of:
            score_of[enc] = float(s)
    ranked = sorted(counter.items(), key=lambda item: (-item[1], item[0]))
    if top_k is not None:
        ranked = ranked[:top_k]
    table = [(enc, count, score_of[enc]) for enc, count in ranked]
    return QueryReport(
        estimates={},
        sample_size=len(trace),
        dag_frequency=table,
        extra={"n_distinct": len(counter)},
    )


def normalized_score_trace(trace: Trace, sort: bool = False) -> np.ndarray:
    """log score minus its running maximum: non-positive, max exactly 0.

    With ``sort=True`` the values come back ascending (reordered by
    increasing score), which is how the trace is usually plotted.
    """
    if len(trace) == 0:
        raise QueryError("empty trace")
    rel = trace.log_scores - trace.log_scores.max()
    return np.sort(rel) if sort else rel


# --- CLI feature grammar --------------------------------------------------------

def _resolve_node(token: str, names: Sequence[str] | None, n_nodes: int) -> int:
    token = token.strip()
    if names and token in names:
        return list(names).index(token)
    try:
        v = int(token)
    except ValueError:
        raise QueryError(f"unknown node {token!r}") from None
    if not 0 <= v < n_nodes:
        raise QueryError(f"node index {v} out of range for {n_nodes} nodes")
    return v


def parse_feature(text: str, names: Sequence[str] | None, n_nodes: int):
    """Parse the CLI grammar:

    arc:a->b | adj:a-b | all-arcs | all-adj | dag-freq:k | score-trace[:sorted]
    """
    text = text.strip()
    if text == "all-arcs":
        return AllArcs()
    if text == "all-adj":
        return AllAdjacencies()
    if text == "score-trace":
        return ("score-trace", False)
    if text == "score-trace:sorted":
        return ("score-trace", True)
    if text.startswith("dag-freq:"):
        try:
            k = int(text.split(":", 1)[1])
        except ValueError:
            raise QueryError(f"bad dag-freq count in {text!r}") from None
        if k < 1:
            raise QueryError("dag-freq count must be >= 1")
        return ("dag-freq", k)
    if text.startswith("arc:"):
        body = text[4:]
        if "->" not in body:
            raise QueryError(f"expected arc:a->b, got {text!r}")
        a, b = body.split("->", 1)
        return DirectedArc(_resolve_node(a, names, n_nodes), _resolve_node(b, names, n_nodes))
    if text.startswith("adj:"):
        body = text[4:]
        if "-" not in body:
            raise QueryError(f"expected adj:a-b, got {text!r}")
        a, b = body.split("-", 1)
        return UndirectedAdjacency(
            _resolve_node(a, names, n_nodes), _resolve_node(b, names, n_nodes)
        )
    raise QueryError(f"unrecognized feature {text!r}")
