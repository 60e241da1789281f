#!/usr/bin/env python

"""strategies.py: probing strategies, the exact expectimax policy and the static run loop."""
import logging
from dataclasses import dataclass, field
from functools import partial
from typing import FrozenSet, Mapping, Optional, Sequence, Tuple

from .bayes import (DEFAULT_CAP, CapacityError, Prior, node_posteriors, observation_prob,
                    path_posterior_working)
from .centrality import CentralityParams, centrality_map
from .topology import (LogicalView, ObservationSet, apply_observation, initial_view, observe, replay)
from .utility import (ZERO_UTILITY, exclusion_count, expected_utility_centrality, expected_utility_exact,
                      realized_utility)

logger = logging.getLogger(__name__)

STATIC_STRATEGIES = ('pop', 'face', 'gc', 'apc', 'dp')
DYNAMIC_STRATEGIES = ('dpop', 'dface')
STRATEGIES = STATIC_STRATEGIES + DYNAMIC_STRATEGIES

ALL_KNOWN = 'allKnown'
NO_USEFUL_PATHS = 'noUsefulPaths'
BUDGET_EXHAUSTED = 'budgetExhausted'
PATHS_EXHAUSTED = 'pathsExhausted'

# relative tolerance under which two utilities tie
TIE_TOLERANCE = 1e-9
DP_MAX_PATHS = 12


@dataclass(frozen=True)
class StrategyState:
    """Decision state: the view, the observations behind it and the probe budget."""
    view: LogicalView
    observations: Sequence = ()
    budget: Optional[int] = None

    @property
    def step_index(self):
        return len(self.observations)


@dataclass(frozen=True)
class StepRecord:
    """One probe and the classification right after it."""
    path_id: int
    works: bool
    working: FrozenSet[int]
    broken: FrozenSet[int]
    scores: Mapping[int, float] = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class StrategyTrace:
    strategy: str
    steps: Tuple[StepRecord, ...]
    termination: str
    final_view: LogicalView = field(compare=False, repr=False, default=None)

    @property
    def order(self):
        return [s.path_id for s in self.steps]

    @property
    def probes(self):
        return len(self.steps)


def select_best(utilities):
    """Lowest path id among the maximal utilities, None if the maximum is zero."""
    if not utilities:
        return None
    best = max(utilities.values())
    if best < ZERO_UTILITY:
        return None
    return min(pid for pid, u in utilities.items() if u >= best - TIE_TOLERANCE * max(1.0, best))


def pop_utilities(view, prior, cap=DEFAULT_CAP):
    """Exact expected utility of every active action."""
    if not view.active:
        return {}
    po = observation_prob(view, prior, cap)
    return {pid: expected_utility_exact(pid, view, prior, cap, po) for pid in sorted(view.active)}


def face_utilities(view, params):
    """Centrality expected utility of every active action."""
    if not view.active:
        return {}
    scores = centrality_map(view, params)
    return {pid: expected_utility_centrality(pid, view, params, scores) for pid in sorted(view.active)}


def pop_greedy_step(state, prior, cap=DEFAULT_CAP):
    """PoPGreedy: the active path with the largest exact expected utility."""
    return select_best(pop_utilities(state.view, prior, cap))


def face_greedy_step(state, params):
    """FaCeGreedy: the active path with the largest centrality expected utility."""
    return select_best(face_utilities(state.view, params))


def _coverage_gain(view):
    covered = view.touched
    return {p.id: len(p.node_set - covered) for p in view.paths if p.id not in view.tested}


def coverage_greedy_step(state):
    """GC: the untested path adding most uncovered nodes, stop when none adds any."""
    gains = _coverage_gain(state.view)
    if not gains or max(gains.values()) == 0:
        return None
    best = max(gains.values())
    return min(pid for pid, g in gains.items() if g == best)


def apc_step(state):
    """APC: coverage greedy first, then binary search on the unclassified nodes.

    Once coverage stalls, the eligible paths are the untested ones whose residual
    is non-empty, avoids every known broken node and contains no failed residual.
    The one whose residual size is closest to half the unclassified nodes wins,
    ties going to the smaller residual, then the lower id.
    """
    view = state.view
    pid = coverage_greedy_step(state)
    if pid is not None:
        return pid
    unclassified = view.touched - view.working - view.known_broken
    if not unclassified:
        return None
    half = len(unclassified) / 2.0
    eligible = []
    for path in view.paths:
        if path.id in view.tested or view.is_implied(path.id):
            continue
        size = len(view.residual(path.id))
        eligible.append((abs(size - half), size, path.id))
    if not eligible:
        return None
    return min(eligible)[2]


class _Expectimax:
    """Memoized expectimax over observation sets of a small path table."""

    def __init__(self, paths, prior, cap=DEFAULT_CAP):
        self.paths = tuple(paths)
        self.prior = prior
        self.cap = cap
        self.views = {}
        self.memo = {}

    def view(self, key):
        if key not in self.views:
            self.views[key] = replay(sorted(key), self.paths)
        return self.views[key]

    def branches(self, key, pid):
        view = self.view(key)
        size = len(view.residual(pid))
        pz = path_posterior_working(pid, view, self.prior, self.cap)
        out = []
        if pz > 0.0:
            out.append((pz, realized_utility(size, exclusion_count(pid, view), True), key | {(pid, True)}))
        if pz < 1.0:
            out.append((1.0 - pz, realized_utility(size, 0, False), key | {(pid, False)}))
        return out

    def expected(self, key, pid, remaining, policy):
        value, depth = 0.0, 0
        for prob, gain, child in self.branches(key, pid):
            v, d = policy(child, remaining - 1)
            value += prob * (gain + v)
            depth = max(depth, d + 1)
        return value, depth

    def optimal(self, key, remaining):
        """(value, depth) of the optimal policy, the first action is kept in self.memo."""
        if remaining <= 0:
            return 0.0, 0
        if (key, remaining) in self.memo:
            value, _, depth = self.memo[(key, remaining)]
            return value, depth
        best = (0.0, None, 0)
        for pid in sorted(self.view(key).active):
            value, depth = self.expected(key, pid, remaining, self.optimal)
            if value > best[0] + TIE_TOLERANCE * max(1.0, best[0]):
                best = (value, pid, depth)
        self.memo[(key, remaining)] = best
        return best[0], best[2]

    def greedy(self, key, remaining):
        """(value, depth) of the PoPGreedy policy."""
        if remaining <= 0:
            return 0.0, 0
        pid = select_best(pop_utilities(self.view(key), self.prior, self.cap))
        if pid is None:
            return 0.0, 0
        return self.expected(key, pid, remaining, self.greedy)


@dataclass(frozen=True)
class PolicyValue:
    value: float
    first_action: Optional[int]
    depth: int


def exact_dp_policy(paths, prior, horizon, entries=(), cap=DEFAULT_CAP):
    """Optimal expected cumulative utility within horizon probes.

    Args:
        paths (sequence): path table, at most DP_MAX_PATHS paths
        prior (Prior): node prior
        horizon (int): number of probes K
        entries (iterable, optional): observations already made. Defaults to ().
        cap (int, optional): residual cap. Defaults to DEFAULT_CAP.

    Returns:
        PolicyValue: value V, optimal first action (None if nothing is worth probing), tree depth
    """
    if len(paths) > DP_MAX_PATHS:
        raise CapacityError(f"exact DP is limited to {DP_MAX_PATHS} paths, got {len(paths)}.")
    solver = _Expectimax(paths, prior, cap)
    key = frozenset(entries)
    value, depth = solver.optimal(key, horizon)
    first = solver.memo.get((key, horizon), (0.0, None, 0))[1] if horizon > 0 else None
    return PolicyValue(value, first, depth)


def greedy_policy_value(paths, prior, horizon, cap=DEFAULT_CAP):
    """Expected cumulative utility of PoPGreedy within horizon probes, with its tree depth."""
    solver = _Expectimax(paths, prior, cap)
    value, depth = solver.greedy(frozenset(), horizon)
    return PolicyValue(value, select_best(pop_utilities(solver.view(frozenset()), prior, cap)), depth)


def greedy_policy_alpha(paths, prior, horizon, cap=DEFAULT_CAP):
    """Empirical ratio U(a|T)/U(a|T') over every branch of the PoPGreedy policy tree."""
    solver = _Expectimax(paths, prior, cap)
    utilities = {}

    def utility(key, a):
        if (key, a) not in utilities:
            utilities[(key, a)] = expected_utility_exact(a, solver.view(key), prior, cap)
        return utilities[(key, a)]

    def walk(key, ancestors, remaining):
        alpha = 1.0
        view = solver.view(key)
        for a in range(len(paths)):
            if a in view.tested:
                continue
            later = utility(key, a)
            if later <= ZERO_UTILITY:
                continue
            for earlier_key in ancestors:
                earlier = utility(earlier_key, a)
                if ZERO_UTILITY < earlier < later:
                    alpha = min(alpha, earlier / later)
        if remaining <= 0:
            return alpha
        pid = select_best(pop_utilities(view, prior, cap))
        if pid is None:
            return alpha
        for _, _, child in solver.branches(key, pid):
            alpha = min(alpha, walk(child, ancestors + [key], remaining - 1))
        return alpha

    return walk(frozenset(), [], horizon)


def dp_step(state, prior, horizon=None, cap=DEFAULT_CAP):
    """Re-planning exact policy: first action of the optimal policy for the remaining horizon."""
    view = state.view
    if horizon is None:
        horizon = len(view.paths)
    remaining = horizon - state.step_index
    if state.budget is not None:
        remaining = min(remaining, state.budget - state.step_index)
    if remaining <= 0:
        return None
    return exact_dp_policy(view.paths, prior, remaining, tuple(state.observations), cap).first_action


def step_function(strategy, prior=Prior(), params=CentralityParams(), cap=DEFAULT_CAP, dpHorizon=None):
    """Bind a strategy name to its step function f(state) -> path id or None."""
    if strategy in ('pop', 'dpop'):
        return partial(pop_greedy_step, prior=prior, cap=cap)
    if strategy in ('face', 'dface'):
        return partial(face_greedy_step, params=params)
    if strategy == 'gc':
        return coverage_greedy_step
    if strategy == 'apc':
        return apc_step
    if strategy == 'dp':
        return partial(dp_step, prior=prior, horizon=dpHorizon, cap=cap)
    raise ValueError(f"unknown strategy {strategy!r}, use one of {STRATEGIES}")


def node_scores(strategy, view, prior=Prior(), params=CentralityParams(), cap=DEFAULT_CAP):
    """Failure score of every covered node as the strategy ranks them."""
    if strategy in ('face', 'dface'):
        return centrality_map(view, params)
    return node_posteriors(view, prior, cap=cap)


def run_strategy(strategy, paths, truth, budget=None, prior=Prior(), params=CentralityParams(),
                 cap=DEFAULT_CAP, dpHorizon=None, recordScores=True):
    """Probe paths one at a time until a termination condition holds.

    Args:
        strategy (str): one of STATIC_STRATEGIES
        paths (sequence): path table
        truth (GroundTruth): decides every probe outcome
        budget (int, optional): maximal number of probes. Defaults to None.
        prior (Prior, optional): node prior. Defaults to Prior().
        params (CentralityParams, optional): centrality parameters. Defaults to CentralityParams().
        cap (int, optional): residual cap of exact inference. Defaults to DEFAULT_CAP.
        dpHorizon (int, optional): planning horizon of 'dp'. Defaults to None.
        recordScores (bool, optional): keep node scores after every step. Defaults to True.

    Returns:
        StrategyTrace: chosen paths, outcomes, classifications and termination reason
    """
    if strategy not in STATIC_STRATEGIES:
        raise ValueError(f"{strategy!r} is not a static strategy, use one of {STATIC_STRATEGIES}")
    if budget is not None and budget < 0:
        raise ValueError("budget must be non-negative.")
    step = step_function(strategy, prior, params, cap, dpHorizon)
    view = initial_view(paths)
    observations = ObservationSet()
    steps = []
    while True:
        if budget is not None and len(observations) >= budget:
            reason = BUDGET_EXHAUSTED
            break
        if not view.unknown:
            reason = ALL_KNOWN
            break
        if len(view.tested) == len(view.paths):
            reason = PATHS_EXHAUSTED
            break
        pid = step(StrategyState(view, observations, budget))
        if pid is None:
            reason = NO_USEFUL_PATHS
            break
        works = observe(view.paths[pid], truth)
        view = apply_observation(view, view.paths[pid], works)
        observations = observations.append(pid, works)
        scores = node_scores(strategy, view, prior, params, cap) if recordScores else {}
        steps.append(StepRecord(pid, works, view.working, view.known_broken, scores))
        logger.debug("%s step %d: path %d %s", strategy, len(steps), pid, 'works' if works else 'fails')
    return StrategyTrace(strategy, tuple(steps), reason, view)
