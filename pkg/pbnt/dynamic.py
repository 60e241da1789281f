#!/usr/bin/env python

"""dynamic.py: sliding-window probing while node states change over time."""
import logging
import warnings
from dataclasses import dataclass
from typing import FrozenSet, Tuple

from .bayes import DEFAULT_CAP, Prior, is_contradictory
from .centrality import CentralityParams
from .metrics import Classification, change_detection, classify, precision_recall
from .strategies import DYNAMIC_STRATEGIES, StrategyState, node_scores, step_function
from .topology import GroundTruth, covered_nodes, observe, replay
from .util import SEED_DYNAMIC, make_rng

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DynamicConfig:
    """Node state dynamics and window of the dynamic strategies.

    Attributes:
        pWF (float): probability that a working node fails in one step
        pFW (float): probability that a failed node is repaired in one step
        windowLen (int): number of most recent observations kept
        horizon (int): number of time steps
    """
    pWF: float = 0.01
    pFW: float = 0.1
    windowLen: int = 12
    horizon: int = 200

    def __post_init__(self):
        for name in ('pWF', 'pFW'):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if self.windowLen < 1:
            raise ValueError(f"windowLen must be at least 1, got {self.windowLen}")
        if self.horizon < 0:
            raise ValueError(f"horizon must be non-negative, got {self.horizon}")
        if self.pWF >= self.pFW and not (self.pWF == 0.0 and self.pFW == 0.0):
            warnings.warn(f"pWF={self.pWF} >= pFW={self.pFW}: nodes fail faster than they are repaired.")


@dataclass(frozen=True)
class DynamicStep:
    """One time step: the probe, the window after it and the resulting classification."""
    t: int
    path_id: int
    works: bool
    reprobe: bool
    window: Tuple[Tuple[int, bool], ...]
    truncated: bool
    classification: Classification
    precision: float
    recall: float


@dataclass(frozen=True)
class DynamicTrace:
    strategy: str
    steps: Tuple[DynamicStep, ...]
    truths: Tuple[GroundTruth, ...]
    nodes: FrozenSet[int]

    @property
    def contradictions(self):
        return sum(1 for s in self.steps if s.truncated)

    def detection(self):
        """DetectionStats of the run."""
        return change_detection([s.classification for s in self.steps], self.truths, self.nodes)


def coverage_size(paths):
    """Number of paths greedy set cover needs to touch every covered node."""
    uncovered = set(covered_nodes(paths))
    count = 0
    while uncovered:
        best = max(paths, key=lambda p: (len(p.node_set & uncovered), -p.id))
        uncovered -= best.node_set
        count += 1
    return count


def check_window(config, paths):
    """Warn when the window cannot hold enough observations to cover the monitored nodes."""
    needed = coverage_size(paths)
    if config.windowLen < needed:
        warnings.warn(f"windowLen={config.windowLen} is below the {needed} probes needed to cover every node.")
    return needed


def evolve_truth(truth, nodes, pWF, pFW, rng):
    """Draw the next node states: working nodes fail with pWF, failed ones recover with pFW."""
    nodes = sorted(nodes)
    draws = rng.random(len(nodes))
    failed = set()
    for v, draw in zip(nodes, draws):
        if v in truth.failed:
            if draw >= pFW:
                failed.add(v)
        elif draw < pWF:
            failed.add(v)
    return GroundTruth(failed)


def truncate_window(entries, paths):
    """Drop the most recent observation that causes a contradiction and everything older.

    The suffix is grown from the newest observation backwards; the first one
    whose addition makes it contradictory is cut together with all older ones.

    Args:
        entries (sequence): window (path id, works) entries, oldest first
        paths (sequence): path table

    Returns:
        tuple: the consistent suffix
    """
    suffix = []
    for entry in reversed(list(entries)):
        candidate = [entry] + suffix
        if is_contradictory(candidate, paths):
            break
        suffix = candidate
    return tuple(suffix)


def run_dynamic(strategy, paths, config, seed=0, repetition=0, prior=Prior(), params=CentralityParams(),
                cap=DEFAULT_CAP, timeline=None, initial=None):
    """Probe one path per time step against changing node states.

    At every step the node states evolve first, the oldest observation leaves a
    full window, the static step logic runs on the window alone and the chosen
    path is probed. When the step logic finds nothing worth probing, the path
    probed least recently is probed again. A contradictory window is truncated.

    Args:
        strategy (str): 'dpop' or 'dface'
        paths (sequence): path table
        config (DynamicConfig): dynamics and window length
        seed (int, optional): master seed of the state evolution. Defaults to 0.
        repetition (int, optional): repetition counter mixed into the seed. Defaults to 0.
        prior (Prior, optional): node prior. Defaults to Prior().
        params (CentralityParams, optional): centrality parameters. Defaults to CentralityParams().
        cap (int, optional): residual cap. Defaults to DEFAULT_CAP.
        timeline (sequence, optional): GroundTruth per step, replaces the random evolution. Defaults to None.
        initial (GroundTruth, optional): states before the first step. Defaults to all working.

    Returns:
        DynamicTrace: per-step probes, classifications and truths
    """
    if strategy not in DYNAMIC_STRATEGIES:
        raise ValueError(f"{strategy!r} is not a dynamic strategy, use one of {DYNAMIC_STRATEGIES}")
    if timeline is not None and len(timeline) < config.horizon:
        raise ValueError(f"the timeline holds {len(timeline)} steps, the horizon is {config.horizon}.")
    paths = tuple(paths)
    nodes = covered_nodes(paths)
    check_window(config, paths)
    step = step_function(strategy, prior, params, cap)
    rng = make_rng(seed, SEED_DYNAMIC, repetition)
    truth = initial if initial is not None else GroundTruth()
    window = ()
    last_probe = {}
    steps, truths = [], []
    for t in range(config.horizon):
        if timeline is not None:
            truth = timeline[t]
        else:
            truth = evolve_truth(truth, nodes, config.pWF, config.pFW, rng)
        if len(window) >= config.windowLen:
            window = window[len(window) - config.windowLen + 1:]
        view = replay(window, paths, repeat=True)
        pid = step(StrategyState(view, window))
        reprobe = pid is None
        if reprobe:
            pid = min(range(len(paths)), key=lambda i: (last_probe.get(i, -1), i))
        works = observe(paths[pid], truth)
        window = window + ((pid, works),)
        last_probe[pid] = t
        truncated = is_contradictory(window, paths)
        if truncated:
            window = truncate_window(window, paths)
            logger.debug("t=%d: contradiction, window cut to %d observation(s)", t, len(window))
        view = replay(window, paths, repeat=True)
        classification = classify(node_scores(strategy, view, prior, params, cap))
        precision, recall = precision_recall(classification, truth, nodes)
        steps.append(DynamicStep(t, pid, works, reprobe, window, truncated, classification, precision, recall))
        truths.append(truth)
    return DynamicTrace(strategy, tuple(steps), tuple(truths), nodes)
