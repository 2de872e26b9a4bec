"""
The five-node benchmark study across sample sizes
=================================================

Simulate 250 / 500 / 1,000 / 10,000 rows from the benchmark network, run
100,000 sampling steps per dataset starting from the true model (no
burn-in, no thinning), and tabulate structural queries. Small samples
leave every query far from 0 and 1; large samples pin the true adjacency
at ~100% and the false ones near 0%, and the posterior concentrates on a
handful of score-equivalent DAGs.
"""

from mcdag import (
    ChainConfig,
    UndirectedAdjacency,
    benchmark_spec,
    build_cache,
    dag_frequency,
    estimate,
    forward_sample,
    run_chain,
)

bench = benchmark_spec()
a, b, c, d = (bench.names.index(x) for x in "abcd")
queries = {"a - d": (a, d), "a - b": (a, b), "b - c": (b, c)}

rows = {label: [] for label in queries}
concentration = {}
variability = {}
for n in bench.sample_sizes:
    data = forward_sample(bench.dag, bench.cpts, n, seed=20240801, names=bench.names)
    cache = build_cache(data, ess=1.0)
    trace = run_chain(
        cache, None, ChainConfig(steps=100_000, seed=424242, start=bench.dag)
    )
    for label, (i, j) in queries.items():
        prob = next(iter(estimate(trace, UndirectedAdjacency(i, j)).estimates.values()))
        rows[label].append(prob)
    report = dag_frequency(trace)
    top4 = sum(count for _, count, _ in report.dag_frequency[:4])
    concentration[n] = top4 / len(trace)
    variability[n] = report.extra["n_distinct"]

# adjacency posteriors (%) by sample size; a-b is a real arc, the others not
header = "query   " + "".join(f"{n:>9d}" for n in bench.sample_sizes)
print(header)
for label, values in rows.items():
    print(f"{label:8s}" + "".join(f"{100 * v:9.1f}" for v in values))

print("\nshare of visits going to the top 4 DAGs:")
for n, share in concentration.items():
    print(f"  n={n:6d}: {share:.3f}")

print("\ndistinct DAGs visited in 100,000 steps:")
for n, distinct in variability.items():
    print(f"  n={n:6d}: {distinct}")
print("larger datasets generate less structural variability during exploration")
