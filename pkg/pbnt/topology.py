#!/usr/bin/env python

"""topology.py: networks, monitoring paths and the pruned logical view of observations."""
import itertools
import warnings
from dataclasses import dataclass, field
from typing import FrozenSet, Mapping, Tuple

import networkx as nx
import numpy as np

from .util import to_mask


@dataclass(frozen=True)
class Network:
    """Undirected network over dense node ids 0..n-1.

    Attributes:
        graph (networkx.Graph): frozen graph, every node carries a 'label' attribute
        monitors (frozenset): monitor node ids
    """
    graph: nx.Graph
    monitors: FrozenSet[int] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, 'monitors', frozenset(int(m) for m in self.monitors))
        n = self.graph.number_of_nodes()
        if n < 1:
            raise ValueError("a network needs at least one node.")
        if set(self.graph.nodes) != set(range(n)):
            raise ValueError("node ids must be the dense integers 0..n-1.")
        if nx.number_of_selfloops(self.graph) > 0:
            raise ValueError("self-loop edges are not allowed.")
        if not self.monitors <= set(self.graph.nodes):
            raise ValueError(f"monitors {sorted(self.monitors - set(self.graph.nodes))} are not nodes of the graph.")

    @property
    def nodes(self):
        return frozenset(self.graph.nodes)

    @property
    def edges(self):
        return frozenset(tuple(sorted(e)) for e in self.graph.edges)

    @property
    def labels(self):
        """tuple: node label of every id, indexed by id."""
        return tuple(self.graph.nodes[v]['label'] for v in range(self.graph.number_of_nodes()))

    def node_ids(self, labels):
        """Translate node labels to ids."""
        lookup = {label: v for v, label in enumerate(self.labels)}
        try:
            return [lookup[str(label)] for label in labels]
        except KeyError as err:
            raise ValueError(f"unknown node label {err.args[0]!r}.") from err

    def with_monitors(self, monitors):
        return Network(self.graph, monitors)


def from_graph(graph, monitors=()):
    """Build a Network from any networkx graph.

    Node keys (or their 'label' attribute when present) become labels, ids are
    assigned in node insertion order, parallel edges collapse and self-loops are dropped.

    Args:
        graph (networkx.Graph): any graph, directed graphs are read as undirected
        monitors (iterable, optional): monitor ids in the new numbering. Defaults to ().

    Returns:
        Network: the dense network
    """
    dense = nx.Graph()
    ids = {}
    for i, (key, attrs) in enumerate(graph.nodes(data=True)):
        ids[key] = i
        dense.add_node(i, label=str(attrs.get('label', key)))
    labels = [dense.nodes[v]['label'] for v in dense.nodes]
    if len(set(labels)) != len(labels):
        duplicated = sorted({l for l in labels if labels.count(l) > 1})
        raise ValueError(f"node labels must be unique, duplicated: {duplicated}")
    loops = 0
    for u, v in graph.edges():
        if u == v:
            loops += 1
            continue
        dense.add_edge(ids[u], ids[v])
    if loops:
        warnings.warn(f"dropped {loops} self-loop edge(s).")
    return Network(nx.freeze(dense), monitors)


@dataclass(frozen=True)
class GroundTruth:
    """True node states: every node not in failed works."""
    failed: FrozenSet[int] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, 'failed', frozenset(int(v) for v in self.failed))

    def path_works(self, path):
        return not (path.node_set & self.failed)


@dataclass(frozen=True)
class MonitoringPath:
    """Ordered, cycle-free node sequence between two monitors.

    Attributes:
        id (int): index of the path in its path table
        nodes (tuple): traversed node ids, first is the source, last the destination
    """
    id: int
    nodes: Tuple[int, ...]
    node_set: FrozenSet[int] = field(init=False, repr=False, compare=False)
    mask: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        nodes = tuple(int(v) for v in self.nodes)
        if not nodes:
            raise ValueError(f"path {self.id} is empty.")
        if len(set(nodes)) != len(nodes):
            raise ValueError(f"path {self.id} visits a node twice: {nodes}")
        object.__setattr__(self, 'nodes', nodes)
        object.__setattr__(self, 'node_set', frozenset(nodes))
        object.__setattr__(self, 'mask', to_mask(nodes))

    @property
    def src(self):
        return self.nodes[0]

    @property
    def dst(self):
        return self.nodes[-1]

    def __len__(self):
        return len(self.nodes)


def covered_nodes(paths):
    """All nodes traversed by at least one path."""
    return frozenset().union(*(p.node_set for p in paths)) if paths else frozenset()


def observe(path, truth):
    """Outcome of probing a path: True (works) iff it holds no failed node."""
    return truth.path_works(path)


@dataclass(frozen=True)
class ObservationSet:
    """Ordered record of (path id, works) probe outcomes."""
    entries: Tuple[Tuple[int, bool], ...] = ()

    def __post_init__(self):
        entries = tuple((int(pid), bool(works)) for pid, works in self.entries)
        ids = [pid for pid, _ in entries]
        if len(set(ids)) != len(ids):
            raise ValueError(f"a path id appears twice in {ids}")
        object.__setattr__(self, 'entries', entries)

    @property
    def tested(self):
        return frozenset(pid for pid, _ in self.entries)

    @property
    def failed(self):
        return frozenset(pid for pid, works in self.entries if not works)

    def append(self, path_id, works):
        return ObservationSet(self.entries + ((path_id, works),))

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


@dataclass(frozen=True)
class LogicalView:
    """Pruned state of the network implied by a set of observations.

    Attributes:
        paths (tuple): the full path table, paths[i].id == i
        tested (frozenset): ids of tested paths
        working (frozenset): nodes known to work (W)
        pruned_failed (dict): failed path id -> residual node set (nodes minus W)
        known_broken (frozenset): nodes certainly failed
        active (frozenset): untested path ids still worth probing
        touched (frozenset): nodes on any tested path
        contradictory (bool): True if the observations cannot all hold at once
    """
    paths: Tuple[MonitoringPath, ...]
    tested: FrozenSet[int] = frozenset()
    working: FrozenSet[int] = frozenset()
    pruned_failed: Mapping[int, FrozenSet[int]] = field(default_factory=dict)
    known_broken: FrozenSet[int] = frozenset()
    active: FrozenSet[int] = frozenset()
    touched: FrozenSet[int] = frozenset()
    contradictory: bool = False

    def residual(self, path_id):
        return self.paths[path_id].node_set - self.working

    def is_implied(self, path_id):
        """True if the outcome of an untested path already follows from the observations."""
        residual = self.residual(path_id)
        if not residual or residual & self.known_broken:
            return True
        return any(r <= residual for r in self.pruned_failed.values())

    @property
    def covered(self):
        return covered_nodes(self.paths)

    @property
    def unknown(self):
        """Covered nodes whose state is not certain yet."""
        return self.covered - self.working - self.known_broken


def _active_actions(paths, tested, working, failed):
    failed_residuals = set(failed.values())
    seen = set()
    active = []
    for path in paths:
        if path.id in tested:
            continue
        residual = path.node_set - working
        if not residual:
            continue
        # super-paths of a failed residual are failing
        if any(r <= residual for r in failed_residuals):
            continue
        # merged paths: first id wins
        if residual in seen:
            continue
        seen.add(residual)
        active.append(path.id)
    return frozenset(active)


def initial_view(paths):
    """Logical view before any probe.

    Args:
        paths (sequence): MonitoringPath table, ids must equal positions

    Returns:
        LogicalView: empty view
    """
    paths = tuple(paths)
    for i, path in enumerate(paths):
        if path.id != i:
            raise ValueError(f"path table out of order: position {i} holds path {path.id}")
    return LogicalView(paths=paths, active=_active_actions(paths, frozenset(), frozenset(), {}))


def apply_observation(view, path, works, repeat=False):
    """Fold one probe outcome into the view.

    A working path proves all of its nodes working and shrinks the failed
    residuals; residuals of size one pin their node as broken. A failed path
    records its residual. Contradictions are flagged on the returned view.

    Args:
        view (LogicalView): current view, left untouched
        path (MonitoringPath or int): probed path
        works (bool): outcome
        repeat (bool, optional): accept a path that was already tested, as happens
            inside a dynamic window. Defaults to False.

    Returns:
        LogicalView: the updated view
    """
    if not isinstance(path, MonitoringPath):
        path = view.paths[int(path)]
    if path.id in view.tested and not repeat:
        raise ValueError(f"path {path.id} was already tested.")
    contradictory = view.contradictory
    working = view.working
    failed = dict(view.pruned_failed)
    if works:
        if path.node_set & view.known_broken:
            contradictory = True
        working = working | path.node_set
        failed = {pid: r - path.node_set for pid, r in failed.items()}
    else:
        failed[path.id] = path.node_set - working
    if any(not r for r in failed.values()):
        contradictory = True
    known_broken = frozenset(next(iter(r)) for r in failed.values() if len(r) == 1)
    tested = view.tested | {path.id}
    return LogicalView(
        paths=view.paths,
        tested=tested,
        working=working,
        pruned_failed=failed,
        known_broken=known_broken,
        active=_active_actions(view.paths, tested, working, failed),
        touched=view.touched | path.node_set,
        contradictory=contradictory,
    )


def replay(entries, paths, view=None, repeat=False):
    """Apply a sequence of (path id, works) observations to a fresh (or given) view."""
    if view is None:
        view = initial_view(paths)
    for pid, works in entries:
        view = apply_observation(view, view.paths[pid], works, repeat=repeat)
    return view


def _lexicographic_shortest_path(graph, src, dst, dist):
    # dist holds hop distances to dst
    path = [src]
    v = src
    while v != dst:
        v = min(u for u in graph[v] if dist.get(u, -1) == dist[v] - 1)
        path.append(v)
    return tuple(path)


def _alternate_paths(graph, src, dst, primary, count, rng, poolFactor=4):
    pool = []
    for p in itertools.islice(nx.shortest_simple_paths(graph, src, dst), count * poolFactor + 1):
        p = tuple(p)
        if p != primary:
            pool.append(p)
    # random order decides between equally good alternates
    pool = [pool[i] for i in rng.permutation(len(pool))]
    used = set(primary[1:-1])
    chosen = []
    for _ in range(count):
        remaining = [p for p in pool if p not in chosen]
        if not remaining:
            break
        best = min(remaining, key=lambda p: (len(used.intersection(p[1:-1])), len(p)))
        chosen.append(best)
        used.update(best[1:-1])
    return chosen


def generate_paths(graph, monitors, seed=0, pathsPerPair=1):
    """Route a monitoring path for every ordered monitor pair.

    The primary route is the shortest path with lexicographically smallest
    node ids. With pathsPerPair > 1, alternates are drawn from the loop-free
    k-shortest paths, preferring few shared interior nodes.

    Args:
        graph (networkx.Graph or Network): the topology
        monitors (iterable): monitor node ids
        seed (int or numpy.random.Generator, optional): seed for ties between alternates. Defaults to 0.
        pathsPerPair (int, optional): routes per ordered pair. Defaults to 1.

    Returns:
        list: MonitoringPath objects with ids in generation order
    """
    if isinstance(graph, Network):
        graph = graph.graph
    monitors = sorted(int(m) for m in monitors)
    if len(set(monitors)) < 2:
        raise ValueError("at least two monitors are needed.")
    if not set(monitors) <= set(graph.nodes):
        raise ValueError("monitors must be nodes of the graph.")
    if pathsPerPair < 1:
        raise ValueError("pathsPerPair must be at least 1.")
    rng = np.random.default_rng(seed)
    dist = {m: nx.single_source_shortest_path_length(graph, m) for m in monitors}
    sequences = []
    seen = set()
    skipped = []
    for src, dst in itertools.permutations(monitors, 2):
        if src not in dist[dst]:
            skipped.append((src, dst))
            continue
        primary = _lexicographic_shortest_path(graph, src, dst, dist[dst])
        candidates = [primary]
        if pathsPerPair > 1:
            candidates += _alternate_paths(graph, src, dst, primary, pathsPerPair - 1, rng)
        for seq in candidates:
            if seq not in seen:
                seen.add(seq)
                sequences.append(seq)
    if skipped:
        warnings.warn(f"{len(skipped)} monitor pair(s) are disconnected and were skipped, e.g. {skipped[:3]}")
    return [MonitoringPath(i, seq) for i, seq in enumerate(sequences)]
