import itertools
import random
from collections import deque

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kurel import graph
from kurel.graph import (
    LabeledPair,
    PairExtractionError,
    balance_and_split,
    build_network,
    close_duplicates,
    extract_pairs,
    make_pair,
    resolve_overlaps,
)
from kurel.ingest import LinkRecord
from kurel.labels import DIRECT, DUPLICATE, INDIRECT, ISOLATED


def links(*triples):
    return [LinkRecord(a, b, kind) for a, b, kind in triples]


@st.composite
def random_networks(draw, max_nodes=20):
    n = draw(st.integers(2, max_nodes))
    nodes = set(range(n))
    n_links = draw(st.integers(0, 2 * n))
    triples = []
    for _ in range(n_links):
        a = draw(st.integers(0, n - 1))
        b = draw(st.integers(0, n - 1))
        if a == b:
            continue
        triples.append(LinkRecord(a, b, draw(st.sampled_from([DUPLICATE, DIRECT]))))
    return resolve_overlaps(build_network(triples, nodes))


class TestBuildNetwork:
    def test_single_edge(self):
        net = build_network(links((1, 2, DUPLICATE)), {1, 2})
        assert net.edges == {(1, 2): DUPLICATE}

    def test_unordered_dedup(self):
        net = build_network(links((1, 2, DUPLICATE), (2, 1, DUPLICATE)), {1, 2})
        assert len(net.edges) == 1

    def test_conflict_flagged(self):
        net = build_network(links((1, 2, DUPLICATE), (1, 2, DIRECT)), {1, 2})
        assert net.conflicts == {(1, 2)}

    def test_endpoint_outside_nodes_rejected(self):
        with pytest.raises(ValueError):
            build_network(links((1, 9, DIRECT)), {1, 2})


class TestResolveOverlaps:
    def test_conflict_becomes_duplicate(self):
        net = build_network(links((1, 2, DIRECT), (1, 2, DUPLICATE)), {1, 2})
        resolved = resolve_overlaps(net)
        assert resolved.edges[(1, 2)] == DUPLICATE
        assert not resolved.conflicts

    def test_pure_direct_unchanged(self):
        net = resolve_overlaps(build_network(links((1, 2, DIRECT)), {1, 2}))
        assert net.edges[(1, 2)] == DIRECT

    def test_empty_graph(self):
        assert resolve_overlaps(build_network([], set())).edges == {}


class TestCloseDuplicates:
    def test_transitivity(self):
        net = resolve_overlaps(
            build_network(links((1, 2, DUPLICATE), (2, 3, DUPLICATE)), {1, 2, 3})
        )
        closed = close_duplicates(net)
        assert closed.edges[(1, 3)] == DUPLICATE

    def test_chain_of_four_gives_all_six_pairs(self):
        triples = [(1, 2, DUPLICATE), (2, 3, DUPLICATE), (3, 4, DUPLICATE)]
        closed = close_duplicates(
            resolve_overlaps(build_network(links(*triples), {1, 2, 3, 4}))
        )
        expected = {pair: DUPLICATE
                    for pair in itertools.combinations((1, 2, 3, 4), 2)}
        assert closed.edges == expected

    def test_direct_edge_inside_component_upgraded(self):
        triples = [(1, 2, DUPLICATE), (2, 3, DUPLICATE), (1, 3, DIRECT)]
        closed = close_duplicates(
            resolve_overlaps(build_network(links(*triples), {1, 2, 3}))
        )
        assert closed.edges[(1, 3)] == DUPLICATE

    def test_only_direct_edges_unchanged(self):
        net = resolve_overlaps(
            build_network(links((1, 2, DIRECT), (3, 4, DIRECT)), {1, 2, 3, 4})
        )
        assert close_duplicates(net).edges == net.edges

    def test_unresolved_conflicts_rejected(self):
        net = build_network(links((1, 2, DUPLICATE), (1, 2, DIRECT)), {1, 2})
        with pytest.raises(ValueError):
            close_duplicates(net)

    @given(random_networks())
    @settings(max_examples=60, deadline=None)
    def test_idempotent(self, net):
        once = close_duplicates(net)
        twice = close_duplicates(once)
        assert once.edges == twice.edges


class TestExtractPairs:
    def test_indirect_at_distance_two(self):
        net = close_duplicates(resolve_overlaps(
            build_network(links((1, 2, DIRECT), (2, 3, DIRECT)), {1, 2, 3})
        ))
        pairs = extract_pairs(net, (2, 5), isolated_count=0, seed=0)
        assert LabeledPair(1, 3, INDIRECT) in pairs

    def test_distance_six_excluded(self):
        chain = {i: None for i in range(7)}
        triples = [(i, i + 1, DIRECT) for i in range(6)]
        net = close_duplicates(resolve_overlaps(
            build_network(links(*triples), set(chain))
        ))
        pairs = extract_pairs(net, (2, 5), isolated_count=0, seed=0)
        labels = {(p.ku1, p.ku2): p.label for p in pairs}
        assert (0, 6) not in labels  # distance 6: dropped entirely
        assert labels[(0, 5)] == INDIRECT

    def test_isolated_from_different_components(self):
        net = close_duplicates(resolve_overlaps(
            build_network(links((1, 2, DIRECT)), {1, 2, 3})
        ))
        pairs = extract_pairs(net, (2, 5), isolated_count=2, seed=0)
        isolated = {(p.ku1, p.ku2) for p in pairs if p.label == ISOLATED}
        assert isolated == {(1, 3), (2, 3)}

    def test_isolated_budget_exceeded(self):
        net = close_duplicates(resolve_overlaps(build_network([], {1, 2})))
        with pytest.raises(PairExtractionError):
            extract_pairs(net, (2, 5), isolated_count=5, seed=0)

    def test_seeded_sampling_deterministic(self):
        net = close_duplicates(resolve_overlaps(
            build_network(links((1, 2, DIRECT)), set(range(30)))
        ))
        a = extract_pairs(net, (2, 5), isolated_count=10, seed=7)
        b = extract_pairs(net, (2, 5), isolated_count=10, seed=7)
        assert a == b

    def test_default_budget_matches_indirect_count(self):
        triples = [(1, 2, DIRECT), (2, 3, DIRECT), (3, 4, DIRECT)]
        net = close_duplicates(resolve_overlaps(
            build_network(links(*triples), {1, 2, 3, 4, 5, 6, 7, 8})
        ))
        pairs = extract_pairs(net, (2, 5), seed=0)
        n_indirect = sum(1 for p in pairs if p.label == INDIRECT)
        n_isolated = sum(1 for p in pairs if p.label == ISOLATED)
        assert n_indirect == n_isolated > 0


def random_pairs(rng, n_nodes=120, per_class=600):
    """A label-balanced random pair set dense enough that every split
    keeps all four classes after partitioning."""
    pairs = set()
    labels = [DUPLICATE, DIRECT, INDIRECT, ISOLATED]
    out = []
    while len(out) < per_class * 4:
        a, b = rng.sample(range(n_nodes), 2)
        key = (min(a, b), max(a, b))
        if key in pairs:
            continue
        pairs.add(key)
        out.append(LabeledPair(key[0], key[1], labels[len(out) % 4]))
    return out


class TestBalanceAndSplit:
    def test_class_counts_equal_within_each_split(self):
        rng = random.Random(0)
        split = balance_and_split(random_pairs(rng), seed=3)
        for counts in split.counts().values():
            assert len(set(counts.values())) == 1

    def test_splits_disjoint_and_leak_free(self):
        rng = random.Random(1)
        split = balance_and_split(random_pairs(rng), seed=5)
        seen = set()
        for bucket in split.splits().values():
            keys = {(p.ku1, p.ku2) for p in bucket}
            assert not keys & seen
            seen |= keys
        # pairs only connect endpoints inside their own KU partition
        kus = {name: {k for p in bucket for k in (p.ku1, p.ku2)}
               for name, bucket in split.splits().items()}
        assert not kus["train"] & kus["dev"]
        assert not kus["train"] & kus["test"]
        assert not kus["dev"] & kus["test"]

    def test_min_rule(self):
        # skewed per-class sizes within one split still reduce to the minimum
        rng = random.Random(2)
        pairs = random_pairs(rng)
        extra = [p for p in random_pairs(random.Random(7))
                 if p.label == ISOLATED][:300]
        merged = {(p.ku1, p.ku2): p for p in pairs + extra}
        split = balance_and_split(list(merged.values()), seed=1)
        for counts in split.counts().values():
            assert len(set(counts.values())) == 1

    def test_same_seed_identical(self):
        rng = random.Random(3)
        pairs = random_pairs(rng)
        a = balance_and_split(pairs, seed=9)
        b = balance_and_split(pairs, seed=9)
        assert a.splits() == b.splits()

    def test_empty_class_is_an_error_with_counts(self):
        pairs = [LabeledPair(1, 2, DUPLICATE), LabeledPair(3, 4, DIRECT)]
        with pytest.raises(PairExtractionError, match="counts"):
            balance_and_split(pairs, seed=0, nodes=set(range(40)))

    def test_bad_ratios_rejected(self):
        with pytest.raises(ValueError):
            balance_and_split([LabeledPair(1, 2, DUPLICATE)], ratios=(0.5, 0.5, 0.5))


def test_pair_canonical_orientation():
    with pytest.raises(ValueError):
        LabeledPair(5, 2, DUPLICATE)
    assert make_pair(5, 2, DUPLICATE) == LabeledPair(2, 5, DUPLICATE)


def test_pair_row_roundtrip():
    pair = LabeledPair(1, 2, INDIRECT)
    assert graph.pair_from_row(graph.pair_to_row(pair)) == pair
