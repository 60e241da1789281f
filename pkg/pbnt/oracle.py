#!/usr/bin/env python

"""oracle.py: brute-force posteriors by enumerating every state of the covered nodes."""
from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from .bayes import ContradictionError
from .topology import covered_nodes

# 2^20 states of the covered nodes
MAX_ORACLE_NODES = 20


@dataclass(frozen=True)
class OracleResult:
    """Enumerated P(O), path working posteriors (all paths) and node failure posteriors (covered nodes)."""
    joint_prob: float
    path_working: Dict[int, float] = field(default_factory=dict)
    node_failure: Dict[int, float] = field(default_factory=dict)


def enumerate_posteriors(paths, entries, p):
    """Exact posteriors by summing over all failure assignments of the covered nodes.

    Args:
        paths (sequence): MonitoringPath table
        entries (iterable): (path id, works) observations
        p (float): node failure prior

    Returns:
        OracleResult: joint probability and posteriors
    """
    nodes = sorted(covered_nodes(paths))
    n = len(nodes)
    if n > MAX_ORACLE_NODES:
        raise ValueError(f"the oracle enumerates at most {MAX_ORACLE_NODES} nodes, got {n}.")
    column = {v: j for j, v in enumerate(nodes)}
    # failed[s, j]: node j failed in state s
    failed = ((np.arange(2 ** n)[:, None] >> np.arange(n)) & 1).astype(bool)
    k = failed.sum(axis=1)
    weights = np.power(p, k) * np.power(1.0 - p, n - k)
    works = np.column_stack([~failed[:, [column[v] for v in path.nodes]].any(axis=1) for path in paths]) \
        if paths else np.ones((2 ** n, 0), dtype=bool)
    consistent = np.ones(2 ** n, dtype=bool)
    for pid, outcome in entries:
        if not 0 <= pid < len(paths):
            raise ValueError(f"unknown path id {pid}.")
        consistent &= works[:, pid] == bool(outcome)
    w = weights * consistent
    po = float(w.sum())
    if po <= 0.0:
        raise ContradictionError("the observations have zero probability under the prior.")
    path_working = {path.id: float(w[works[:, path.id]].sum() / po) for path in paths}
    node_failure = {v: float(w[failed[:, column[v]]].sum() / po) for v in nodes}
    return OracleResult(po, path_working, node_failure)


def certain_count(result, tol=1e-12):
    """Number of covered nodes whose state the observations fix (posterior 0 or 1)."""
    return sum(1 for value in result.node_failure.values() if value <= tol or value >= 1.0 - tol)
