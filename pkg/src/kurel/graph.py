"""Knowledge-unit network: closure, four-class pair extraction, splits."""

import logging
import random
from collections import deque
from dataclasses import dataclass, field

from .labels import CLASSES, DIRECT, DUPLICATE, INDIRECT, ISOLATED, class_rank

log = logging.getLogger(__name__)


class PairExtractionError(ValueError):
    pass


@dataclass(frozen=True)
class LabeledPair:
    ku1: int
    ku2: int
    label: str

    def __post_init__(self):
        if self.ku1 >= self.ku2:
            raise ValueError(f"pair must be canonically ordered: {self.ku1}, {self.ku2}")


def make_pair(a, b, label):
    return LabeledPair(min(a, b), max(a, b), label)


def _pair_sort_key(pair):
    return (class_rank(pair.label), pair.ku1, pair.ku2)


class KUNet:
    """Undirected graph over knowledge units with duplicate/direct edges."""

    def __init__(self, nodes=None):
        self.nodes = set(nodes) if nodes else set()
        self.edges = {}  # (u, v) with u < v -> label
        self.conflicts = set()  # pairs seen with both labels

    def copy(self):
        net = KUNet(self.nodes)
        net.edges = dict(self.edges)
        net.conflicts = set(self.conflicts)
        return net

    def label(self, a, b):
        return self.edges.get((min(a, b), max(a, b)))

    def adjacency(self):
        adj = {n: [] for n in self.nodes}
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return adj

    def components(self):
        """Connected components (label-blind), singletons included."""
        adj = self.adjacency()
        comp = {}
        for start in sorted(self.nodes):
            if start in comp:
                continue
            queue = deque([start])
            comp[start] = start
            while queue:
                node = queue.popleft()
                for nbr in adj[node]:
                    if nbr not in comp:
                        comp[nbr] = start
                        queue.append(nbr)
        return comp


def build_network(links, nodes):
    """Build the KUNet; pairs reported with both labels get a conflict flag."""
    net = KUNet(nodes)
    for link in links:
        if link.source_ku not in net.nodes or link.target_ku not in net.nodes:
            raise ValueError(f"link endpoint outside node set: {link}")
        if link.source_ku == link.target_ku:
            continue
        pair = (min(link.source_ku, link.target_ku), max(link.source_ku, link.target_ku))
        existing = net.edges.get(pair)
        if existing is None:
            net.edges[pair] = link.link_kind
        elif existing != link.link_kind:
            net.conflicts.add(pair)
    return net


def resolve_overlaps(net):
    """Any pair linked as both duplicate and direct becomes duplicate."""
    resolved = net.copy()
    for pair in resolved.conflicts:
        resolved.edges[pair] = DUPLICATE
    resolved.conflicts = set()
    return resolved


class _UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}
        self.size = {x: 1 for x in items}

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]


def close_duplicates(net):
    """Transitive closure of the duplicate relation.

    Every pair inside a duplicate-connected component becomes a duplicate
    edge (upgrading any direct edge caught inside); direct edges across
    components are untouched.
    """
    if net.conflicts:
        raise ValueError("resolve overlaps before closing duplicates")
    uf = _UnionFind(net.nodes)
    for (u, v), label in net.edges.items():
        if label == DUPLICATE:
            uf.union(u, v)

    groups = {}
    for node in net.nodes:
        groups.setdefault(uf.find(node), []).append(node)

    closed = KUNet(net.nodes)
    for members in groups.values():
        members.sort()
        for i, u in enumerate(members):
            for v in members[i + 1:]:
                closed.edges[(u, v)] = DUPLICATE
    for (u, v), label in net.edges.items():
        if label == DIRECT and uf.find(u) != uf.find(v):
            closed.edges[(u, v)] = DIRECT
    return closed


def _bfs_in_range(adj, source, max_dist):
    """Nodes within max_dist of source, with distances."""
    dist = {source: 0}
    queue = deque([source])
    while queue:
        node = queue.popleft()
        d = dist[node]
        if d == max_dist:
            continue
        for nbr in adj[node]:
            if nbr not in dist:
                dist[nbr] = d + 1
                queue.append(nbr)
    return dist


def extract_pairs(net, distance_range=(2, 5), isolated_count=None, seed=0):
    """Extract the four pair classes from a closed network.

    duplicate/direct pairs are the edges; indirect pairs sit at label-blind
    shortest-path distance within ``distance_range``; isolated pairs are a
    seeded uniform sample of ``isolated_count`` cross-component pairs
    (default: as many as there are indirect pairs).  Connected pairs beyond
    the distance range are excluded entirely.
    """
    lo, hi = distance_range
    if lo < 2:
        raise ValueError("indirect distance starts at 2 (distance 1 pairs are edges)")
    if net.conflicts:
        raise ValueError("resolve overlaps before extracting pairs")

    pairs = [make_pair(u, v, label) for (u, v), label in net.edges.items()]

    adj = net.adjacency()
    indirect = []
    for source in sorted(net.nodes):
        dist = _bfs_in_range(adj, source, hi)
        for node, d in dist.items():
            if source < node and lo <= d <= hi:
                indirect.append(LabeledPair(source, node, INDIRECT))
    pairs.extend(indirect)

    comp = net.components()
    sizes = {}
    for root in comp.values():
        sizes[root] = sizes.get(root, 0) + 1
    n = len(net.nodes)
    total_pairs = n * (n - 1) // 2
    within = sum(s * (s - 1) // 2 for s in sizes.values())
    cross_total = total_pairs - within

    budget = len(indirect) if isolated_count is None else isolated_count
    if budget > cross_total:
        raise PairExtractionError(
            f"requested {budget} isolated pairs but only {cross_total} "
            f"cross-component pairs exist"
        )
    pairs.extend(_sample_isolated(sorted(net.nodes), comp, budget, cross_total, seed))

    pairs.sort(key=_pair_sort_key)
    return pairs


def _sample_isolated(nodes, comp, budget, cross_total, seed):
    rng = random.Random(seed)
    if budget == 0:
        return []
    # Enumerate when feasible; otherwise rejection-sample (still seeded).
    if cross_total <= max(200_000, 4 * budget):
        eligible = [
            (u, v)
            for i, u in enumerate(nodes)
            for v in nodes[i + 1:]
            if comp[u] != comp[v]
        ]
        chosen = rng.sample(eligible, budget)
    else:
        chosen = set()
        while len(chosen) < budget:
            u, v = rng.sample(nodes, 2)
            if comp[u] == comp[v]:
                continue
            chosen.add((min(u, v), max(u, v)))
        chosen = sorted(chosen)
    return [LabeledPair(u, v, ISOLATED) for u, v in sorted(chosen)]


@dataclass
class DatasetSplit:
    train: list
    dev: list
    test: list
    seed: int
    ratios: tuple
    dropped_cross_partition: int = 0
    pre_balance_counts: dict = field(default_factory=dict)

    def splits(self):
        return {"train": self.train, "dev": self.dev, "test": self.test}

    def counts(self):
        out = {}
        for name, pairs in self.splits().items():
            per = {}
            for p in pairs:
                per[p.label] = per.get(p.label, 0) + 1
            out[name] = per
        return out


def balance_and_split(pairs, ratios=(0.6, 0.1, 0.3), seed=0, nodes=None):
    """Partition KU ids into train/dev/test, keep within-partition pairs,
    and undersample each split to equal class counts.

    Pairs whose endpoints straddle two partitions are dropped (prevents
    leakage between splits).
    """
    if abs(sum(ratios) - 1.0) > 1e-9 or len(ratios) != 3:
        raise ValueError(f"ratios must be three values summing to 1: {ratios}")
    labels = sorted({p.label for p in pairs}, key=class_rank)
    if not labels:
        raise ValueError("no pairs to split")

    if nodes is None:
        nodes = {p.ku1 for p in pairs} | {p.ku2 for p in pairs}
    ids = sorted(nodes)
    rng = random.Random(seed)
    rng.shuffle(ids)
    n = len(ids)
    n_train = int(n * ratios[0])
    n_dev = int(n * ratios[1])
    assignment = {}
    for i, ku in enumerate(ids):
        assignment[ku] = "train" if i < n_train else "dev" if i < n_train + n_dev else "test"

    buckets = {"train": [], "dev": [], "test": []}
    dropped = 0
    for pair in sorted(pairs, key=_pair_sort_key):
        split1 = assignment.get(pair.ku1)
        split2 = assignment.get(pair.ku2)
        if split1 is None or split2 is None or split1 != split2:
            dropped += 1
            continue
        buckets[split1].append(pair)

    pre_counts = {}
    balanced = {}
    for name, bucket in buckets.items():
        by_label = {label: [] for label in labels}
        for pair in bucket:
            by_label[pair.label].append(pair)
        pre_counts[name] = {label: len(by_label[label]) for label in labels}
        empty = [label for label in labels if not by_label[label]]
        if empty:
            raise PairExtractionError(
                f"split {name!r} has empty classes {empty}; counts: {pre_counts[name]}"
            )
        floor = min(len(v) for v in by_label.values())
        kept = []
        for label in labels:
            kept.extend(rng.sample(by_label[label], floor))
        kept.sort(key=_pair_sort_key)
        balanced[name] = kept

    return DatasetSplit(
        train=balanced["train"],
        dev=balanced["dev"],
        test=balanced["test"],
        seed=seed,
        ratios=tuple(ratios),
        dropped_cross_partition=dropped,
        pre_balance_counts=pre_counts,
    )


def pair_to_row(pair):
    return {"ku1": pair.ku1, "ku2": pair.ku2, "label": pair.label}


def pair_from_row(row):
    return LabeledPair(row["ku1"], row["ku2"], row["label"])
