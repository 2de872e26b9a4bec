import math

import pytest

from mcdag import (
    Dag,
    build_cache,
    dataset_from_rows,
    flat_cache,
    forward_sample,
    load_cache,
    local_score,
    save_cache,
    total_score,
)
from mcdag.graph import bits_of
from mcdag.priors import StructPrior
from mcdag.scoring import (
    CacheBudgetError,
    CacheMiss,
    ScoringError,
    admissible_parent_masks,
    cache_to_json,
)
from mcdag import Cpt

from conftest import random_binary_dataset


def bdeu_reference(dataset, child, parents, ess):
    """Independent BDeu oracle: raw row loops and math.lgamma only."""
    parents = sorted(parents)
    r = dataset.arities[child]
    q = 1
    for p in parents:
        q *= dataset.arities[p]
    tallies = {}
    for row in dataset.rows.tolist():
        cfg = 0
        for p in parents:
            cfg = cfg * dataset.arities[p] + row[p]
        key = (cfg, row[child])
        tallies[key] = tallies.get(key, 0) + 1
    a_jk = ess / (q * r)
    a_j = ess / q
    score = 0.0
    for j in range(q):
        n_j = sum(tallies.get((j, k), 0) for k in range(r))
        score += math.lgamma(a_j) - math.lgamma(a_j + n_j)
        for k in range(r):
            n_jk = tallies.get((j, k), 0)
            score += math.lgamma(a_jk + n_jk) - math.lgamma(a_jk)
    return score


class TestLocalScore:
    def test_no_parent_binary_column(self):
        # column with one 0 and three 1s, ess=1: exactly ln(0.0390625)
        ds = dataset_from_rows([[0, 1], [0, 0], [0, 1], [0, 1]], names=["a", "b"])
        got = local_score(ds, 1, [], ess=1.0)
        assert got == pytest.approx(math.log(0.0390625), abs=1e-12)
        assert got == pytest.approx(-3.2426, abs=5e-5)

    def test_one_parent_hand_value(self):
        ds = dataset_from_rows([[0, 0], [0, 1], [1, 1], [1, 1]], names=["a", "b"])
        got = local_score(ds, 1, [0], ess=1.0)
        assert got == pytest.approx(-3.3603753871419, abs=1e-10)

    def test_matches_independent_oracle(self, rng):
        for _ in range(30):
            ds = random_binary_dataset(rng, rng.randint(2, 5), rng.randint(2, 50))
            child = rng.randrange(ds.n_vars)
            others = [v for v in range(ds.n_vars) if v != child]
            parents = rng.sample(others, rng.randint(0, len(others)))
            ess = rng.choice([0.5, 1.0, 2.0, 10.0])
            assert local_score(ds, child, parents, ess) == pytest.approx(
                bdeu_reference(ds, child, parents, ess), abs=1e-9
            )

    def test_unobserved_parent_configuration_contributes_zero(self):
        # parent column never takes value 1: configs with zero rows cancel
        ds = dataset_from_rows([[0, 0], [0, 1]], arities=(2, 2), names=["a", "b"])
        with_parent = local_score(ds, 1, [0], ess=1.0)
        # manual: only config j=0 contributes; q=2 so a_j=0.5, a_jk=0.25
        expected = (
            math.lgamma(0.5)
            - math.lgamma(0.5 + 2)
            + (math.lgamma(0.25 + 1) - math.lgamma(0.25)) * 2
        )
        assert with_parent == pytest.approx(expected, abs=1e-12)

    def test_non_positive_ess(self):
        ds = dataset_from_rows([[0, 1], [1, 0]])
        with pytest.raises(ScoringError):
            local_score(ds, 0, [], ess=0.0)

    def test_row_order_invariance(self, rng):
        ds = random_binary_dataset(rng, 3, 30)
        perm = list(range(30))
        rng.shuffle(perm)
        shuffled = dataset_from_rows(ds.rows[perm], names=ds.names, arities=ds.arities)
        assert local_score(ds, 2, [0, 1]) == pytest.approx(
            local_score(shuffled, 2, [0, 1]), abs=1e-12
        )


class TestScoreEquivalence:
    def test_two_node_markov_equivalent_dags(self, rng):
        forward = Dag.from_parent_sets([[], [0]])
        backward = Dag.from_parent_sets([[1], []])
        for _ in range(20):
            ds = random_binary_dataset(rng, 2, rng.randint(4, 80))
            cache = build_cache(ds, ess=1.0)
            assert total_score(forward, cache) == pytest.approx(
                total_score(backward, cache), abs=1e-9
            )

    def test_monotone_data_response(self):
        # strong X -> Y dependence at 10,000 rows: parent set {X} must win
        dag = Dag.from_parent_sets([[], [0]])
        cpts = [Cpt(0, (), [[0.5, 0.5]]), Cpt(1, (0,), [[0.9, 0.1], [0.1, 0.9]])]
        ds = forward_sample(dag, cpts, 10_000, seed=3)
        assert local_score(ds, 1, [0]) > local_score(ds, 1, [])


class TestBuildCache:
    def test_entry_counts_default_limit(self, rng):
        ds = random_binary_dataset(rng, 5, 30)
        cache = build_cache(ds)
        assert all(len(t) == 16 for t in cache.tables)
        assert cache.n_entries == 80

    def test_entry_counts_max_parents_two(self, rng):
        ds = random_binary_dataset(rng, 5, 30)
        cache = build_cache(ds, max_parents=2)
        assert all(len(t) == 11 for t in cache.tables)  # 1 + 4 + 6

    def test_lookup_equals_fresh_computation(self, rng):
        ds = random_binary_dataset(rng, 5, 40)
        cache = build_cache(ds, ess=1.0)
        for _ in range(100):
            v = rng.randrange(5)
            mask = rng.choice(list(cache.tables[v]))
            fresh = local_score(ds, v, list(bits_of(mask)), ess=1.0)
            assert cache.tables[v][mask] == pytest.approx(fresh, abs=1e-12)

    def test_ban_excludes_parent_sets(self, rng):
        ds = random_binary_dataset(rng, 3, 20)
        prior = StructPrior(n_nodes=3, ban=frozenset({(1, 0), (2, 0)}))
        cache = build_cache(ds, prior=prior)
        assert len(cache.tables[0]) == 1  # only the empty set survives
        assert set(cache.tables[0]) == {0}

    def test_retain_requires_parent(self, rng):
        ds = random_binary_dataset(rng, 3, 20)
        prior = StructPrior(n_nodes=3, retain=frozenset({(0, 1)}))
        cache = build_cache(ds, prior=prior)
        assert all(mask & 1 for mask in cache.tables[1])

    def test_budget_ceiling(self, rng):
        ds = random_binary_dataset(rng, 5, 10)
        with pytest.raises(CacheBudgetError):
            build_cache(ds, ceiling=10)

    def test_threaded_build_matches_sequential(self, rng):
        ds = random_binary_dataset(rng, 4, 25)
        assert build_cache(ds).tables == build_cache(ds, threads=3).tables

    def test_prior_dimension_mismatch(self, rng):
        ds = random_binary_dataset(rng, 3, 10)
        with pytest.raises(ScoringError):
            build_cache(ds, prior=StructPrior(n_nodes=4))


class TestTotalScore:
    def test_empty_dag_is_sum_of_orphan_scores(self, rng):
        ds = random_binary_dataset(rng, 4, 30)
        cache = build_cache(ds)
        expected = sum(local_score(ds, v, []) for v in range(4))
        assert total_score(Dag.empty(4), cache) == pytest.approx(expected, abs=1e-9)

    def test_decomposability_single_node_difference(self, rng):
        ds = random_binary_dataset(rng, 4, 30)
        cache = build_cache(ds)
        base = Dag.from_parent_sets([[], [0], [], []])
        alt = Dag.from_parent_sets([[], [0, 2], [], []])
        diff = total_score(alt, cache) - total_score(base, cache)
        entry_diff = cache.tables[1][0b101] - cache.tables[1][0b001]
        assert diff == pytest.approx(entry_diff, abs=1e-12)

    def test_against_brute_force_marginal_likelihood(self):
        # full product-of-Gammas on a 4-row dataset, independent route
        ds = dataset_from_rows(
            [[0, 0, 1, 0, 1], [1, 1, 0, 0, 1], [0, 1, 1, 1, 0], [1, 0, 0, 1, 1]]
        )
        cache = build_cache(ds, ess=1.0)
        dag = Dag.from_parent_sets([[], [0], [0], [2], [1, 3]])
        brute = sum(
            bdeu_reference(ds, v, sorted(dag.parent_set(v)), 1.0) for v in range(5)
        )
        assert total_score(dag, cache) == pytest.approx(brute, abs=1e-9)

    def test_cache_miss(self, rng):
        ds = random_binary_dataset(rng, 3, 15)
        cache = build_cache(ds, max_parents=1)
        with pytest.raises(CacheMiss):
            total_score(Dag.from_parent_sets([[], [0], [0, 1]]), cache)


class TestCacheSerialization:
    def test_json_shape(self, rng):
        ds = random_binary_dataset(rng, 3, 12)
        cache = build_cache(ds, ess=1.5, max_parents=2)
        obj = cache_to_json(cache)
        assert obj["n"] == 3
        assert obj["ess"] == 1.5
        assert obj["max_parents"] == 2
        assert "" in obj["scores"]["0"]  # empty parent set key
        assert "1,2" in obj["scores"]["0"]
        assert obj["nodes"] == list(ds.names)

    def test_roundtrip(self, rng, tmp_path):
        ds = random_binary_dataset(rng, 4, 20)
        prior = StructPrior(n_nodes=4, max_parents=2, ban=frozenset({(0, 3)}),
                            retain=frozenset({(1, 2)}))
        cache = build_cache(ds, prior=prior)
        path = tmp_path / "cache.json"
        save_cache(cache, path)
        back = load_cache(path)
        assert back.n_nodes == cache.n_nodes
        assert back.ess == cache.ess
        assert back.max_parents == cache.max_parents
        assert back.prior == cache.prior
        assert back.tables == cache.tables
        assert back.names == cache.names

    def test_flat_cache_admissible_sets(self):
        prior = StructPrior(n_nodes=3, max_parents=1)
        cache = flat_cache(3, prior=prior, value=-2.0)
        assert all(set(t) == {0, *{1 << u for u in range(3) if u != v}}
                   for v, t in enumerate(cache.tables))
        assert all(s == -2.0 for t in cache.tables for s in t.values())

    def test_admissible_parent_masks_respects_limit(self):
        prior = StructPrior(n_nodes=5, max_parents=2)
        masks = admissible_parent_masks(prior, 0)
        assert len(masks) == 11
        assert all(m.bit_count() <= 2 and not m & 1 for m in masks)
