#!/usr/bin/env python

"""metrics.py: classification of node scores and evaluation metrics."""
import logging
from dataclasses import dataclass
from typing import FrozenSet, Tuple

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Classification:
    """Working set W_h, broken set B_h and the failure ranking of the covered nodes."""
    working: FrozenSet[int] = frozenset()
    broken: FrozenSet[int] = frozenset()
    ranking: Tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, 'working', frozenset(self.working))
        object.__setattr__(self, 'broken', frozenset(self.broken))
        object.__setattr__(self, 'ranking', tuple(self.ranking))
        if self.working & self.broken:
            raise ValueError(f"nodes {sorted(self.working & self.broken)} are classified both working and broken.")

    def state(self, node):
        """'W', 'F' or None when the node is unclassified."""
        if node in self.working:
            return 'W'
        if node in self.broken:
            return 'F'
        return None


def classify(scores):
    """Classification from node failure scores: 0 is working, 1 is broken.

    Args:
        scores (dict): node id -> failure score in [0, 1]

    Returns:
        Classification: ranking sorted by descending score, ties by ascending id
    """
    working = {v for v, s in scores.items() if s == 0.0}
    broken = {v for v, s in scores.items() if s == 1.0}
    ranking = sorted(scores, key=lambda v: (-scores[v], v))
    return Classification(working, broken, ranking)


def _ratio(num, den):
    return 1.0 if den == 0 else num / den


def accuracy(classification, baseline):
    """(a_W, a_B) of a classification against the all-paths baseline classification."""
    a_w = _ratio(len(classification.working & baseline.working), len(baseline.working))
    a_b = _ratio(len(classification.broken & baseline.broken), len(baseline.broken))
    return a_w, a_b


def literal_r2(ranking, failed):
    """k/(n-i+1) with i the 1-based position of the deepest failed node."""
    positions = [i for i, v in enumerate(ranking, start=1) if v in failed]
    if not positions:
        return None
    return len(positions) / (len(ranking) - max(positions) + 1)


def rank_metrics(ranking, failed):
    """R1 and R2 of a failure ranking.

    Failed nodes outside the ranking (not covered by any path) are ignored.

    Args:
        ranking (sequence): node ids by descending failure score
        failed (iterable): truly failed nodes

    Returns:
        tuple: (R1, R2), both None when no ranked node failed
    """
    ranking = list(ranking)
    failed = frozenset(failed) & frozenset(ranking)
    k = len(failed)
    if k == 0:
        return None, None
    r1 = len(failed.intersection(ranking[:k])) / k
    deepest = max(i for i, v in enumerate(ranking, start=1) if v in failed)
    r2 = k / deepest
    logger.debug("R2 = %.6g, literal form %s", r2, literal_r2(ranking, failed))
    return r1, r2


def precision_recall(classification, truth, nodes):
    """Precision and recall of the asserted node states.

    Args:
        classification (Classification): asserted states
        truth (GroundTruth): real states
        nodes (iterable): nodes under evaluation, usually the covered ones

    Returns:
        tuple: (P, R), a zero denominator gives 1
    """
    nodes = frozenset(nodes)
    working = classification.working & nodes
    broken = classification.broken & nodes
    tp = len(working - truth.failed) + len(broken & truth.failed)
    fp = len(working & truth.failed) + len(broken - truth.failed)
    fn = len(nodes - working - broken)
    return _ratio(tp, tp + fp), _ratio(tp, tp + fn)


def _stats(values):
    if not values:
        return None, None
    if len(values) == 1:
        return float(values[0]), 0.0
    return float(np.mean(values)), float(np.std(values, ddof=1))


@dataclass(frozen=True)
class DetectionStats:
    """Detected share (0-100) and detection time statistics of state changes per direction."""
    pct_fw: float = None
    pct_wf: float = None
    time_fw: float = None
    time_fw_std: float = None
    time_wf: float = None
    time_wf_std: float = None
    changes_fw: int = 0
    changes_wf: int = 0

    def as_dict(self):
        return {'pctFW': self.pct_fw, 'pctWF': self.pct_wf, 'timeFW': self.time_fw, 'timeFWStd': self.time_fw_std,
                'timeWF': self.time_wf, 'timeWFStd': self.time_wf_std,
                'changesFW': self.changes_fw, 'changesWF': self.changes_wf}


def change_detection(classifications, truths, nodes):
    """Share of node state changes the classification catches and how fast.

    A change at step s is detected at the first step s' > s, before the node
    changes again, whose classification matches the new state.

    Args:
        classifications (sequence): Classification per step
        truths (sequence): GroundTruth per step, same length
        nodes (iterable): nodes to follow

    Returns:
        DetectionStats: percentages are None when no change of that direction happened
    """
    if len(classifications) != len(truths):
        raise ValueError("one classification per truth step is needed.")
    times = {'FW': [], 'WF': []}
    counts = {'FW': 0, 'WF': 0}
    horizon = len(truths)
    for v in sorted(nodes):
        states = ['F' if v in t.failed else 'W' for t in truths]
        changes = [s for s in range(1, horizon) if states[s] != states[s - 1]]
        for j, s in enumerate(changes):
            direction = states[s - 1] + states[s]
            counts[direction] += 1
            end = changes[j + 1] if j + 1 < len(changes) else horizon
            for later in range(s + 1, end):
                if classifications[later].state(v) == states[s]:
                    times[direction].append(later - s)
                    break
    pct = {d: (100.0 * len(times[d]) / counts[d] if counts[d] else None) for d in counts}
    fw, fw_std = _stats(times['FW'])
    wf, wf_std = _stats(times['WF'])
    return DetectionStats(pct['FW'], pct['WF'], fw, fw_std, wf, wf_std, counts['FW'], counts['WF'])


def summarize(report, by=('strategy', 'failures')):
    """Mean and sample standard deviation of the summary rows per group.

    Args:
        report (pandas.DataFrame): report rows with a 'kind' column
        by (tuple, optional): grouping columns. Defaults to ('strategy', 'failures').

    Returns:
        pandas.DataFrame: one row per group, columns <metric>Mean and <metric>Std
    """
    rows = report[report['kind'] == 'summary']
    columns = [c for c in ('a_W', 'a_B', 'R1', 'R2', 'probesUsed', 'alphaMaxima', 'alphaCandidate') if c in rows]
    grouped = rows.groupby(list(by), sort=True, dropna=False)[columns]
    mean = grouped.mean().add_suffix('Mean')
    std = grouped.std(ddof=1).fillna(0.0).add_suffix('Std')
    out = pd.concat([mean, std], axis=1)
    out.insert(0, 'repetitions', grouped.size())
    ordered = ['repetitions'] + [f"{c}{s}" for c in columns for s in ('Mean', 'Std')]
    return out[ordered].reset_index()
