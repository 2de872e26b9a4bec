"""mcdag: structure MCMC over Bayesian-network DAGs.

Sample DAGs from their posterior given discrete data with single-edge,
new-edge-reversal (REV), and Markov-blanket-resampling (MBR) moves, and
answer structural queries (arc/adjacency posteriors, DAG frequencies,
score traces) by averaging over the visited structures. An exhaustive
enumeration oracle provides exact posteriors on up to five nodes for
validation.
"""

__version__ = "0.1.0"

from .data import Dataset, counts, dataset_from_rows, load_csv
from .graph import (
    Dag,
    apply_edge_op,
    decode_dag,
    encode_dag,
    is_acyclic,
    markov_blanket,
)
from .moves import (
    MoveWeights,
    Proposal,
    propose_mbr,
    propose_rev,
    propose_single_edge,
)
from .oracle import ExactPosterior, enumerate_dags, exact_posterior
from .priors import StructPrior, unconstrained
from .queries import (
    AllAdjacencies,
    AllArcs,
    DirectedArc,
    QueryReport,
    UndirectedAdjacency,
    dag_frequency,
    estimate,
    normalized_score_trace,
)
from .sampler import (
    ChainConfig,
    Trace,
    read_trace_csv,
    resume_chain,
    run_chain,
    validate_trace,
    write_trace_csv,
)
from .scoring import (
    ScoreCache,
    build_cache,
    flat_cache,
    load_cache,
    local_score,
    save_cache,
    total_score,
)
from .simulate import BenchmarkSpec, Cpt, benchmark_spec, forward_sample

__all__ = [
    "__version__",
    "AllAdjacencies",
    "AllArcs",
    "BenchmarkSpec",
    "ChainConfig",
    "Cpt",
    "Dag",
    "Dataset",
    "DirectedArc",
    "ExactPosterior",
    "MoveWeights",
    "Proposal",
    "QueryReport",
    "ScoreCache",
    "StructPrior",
    "Trace",
    "UndirectedAdjacency",
    "apply_edge_op",
    "benchmark_spec",
    "build_cache",
    "counts",
    "dag_frequency",
    "dataset_from_rows",
    "decode_dag",
    "encode_dag",
    "enumerate_dags",
    "estimate",
    "exact_posterior",
    "flat_cache",
    "forward_sample",
    "is_acyclic",
    "load_cache",
    "load_csv",
    "local_score",
    "markov_blanket",
    "normalized_score_trace",
    "propose_mbr",
    "propose_rev",
    "propose_single_edge",
    "read_trace_csv",
    "resume_chain",
    "run_chain",
    "save_cache",
    "total_score",
    "unconstrained",
    "validate_trace",
    "write_trace_csv",
]
