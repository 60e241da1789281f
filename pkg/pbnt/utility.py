#!/usr/bin/env python

"""utility.py: probing utilities, identification by exclusion and approximation-bound constants."""
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .bayes import DEFAULT_CAP, path_posterior_working
from .centrality import centrality_map, centrality_path_working
from .topology import apply_observation, initial_view

# expected utilities below this count as zero
ZERO_UTILITY = 1e-12


@dataclass(frozen=True)
class BoundInputs:
    """Inputs of the adaptive-submodularity ratio bound.

    Attributes:
        p (float): node prior, in (0, 1)
        path_len_max (int): longest path length
        deg_max (int): largest number of failed paths through one node
        candidate_len (int): residual size of the candidate
        f1_count (int): nodes the candidate would pin by exclusion
    """
    p: float
    path_len_max: int
    deg_max: int
    candidate_len: int
    f1_count: int = 0

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise ValueError(f"the bound needs p in (0, 1), got {self.p}")
        if min(self.path_len_max, self.deg_max, self.candidate_len, self.f1_count) < 0:
            raise ValueError("bound counts must be non-negative.")
        if self.candidate_len + self.f1_count < 1:
            raise ValueError("candidate_len + f1_count must be at least 1.")


def f1_set(candidate, view):
    """Failed tested paths the candidate would reduce to a single unknown node if it worked."""
    nodes = view.paths[candidate].node_set
    out = set()
    for pid, residual in view.pruned_failed.items():
        if len(residual) < 2:
            continue
        rest = residual - nodes
        if len(rest) == 1 and not rest <= view.known_broken:
            out.add(pid)
    return frozenset(out)


def exclusion_count(candidate, view):
    """Number of distinct nodes newly pinned broken if the candidate works."""
    nodes = view.paths[candidate].node_set
    return len({next(iter(view.pruned_failed[pid] - nodes)) for pid in f1_set(candidate, view)})


def realized_utility(residual_size, f1_count, works):
    """Node-state assessments gained by a probe outcome."""
    if works:
        return residual_size + f1_count
    return 1 // residual_size if residual_size > 0 else 0


def expected_utility_exact(candidate, view, prior, cap=DEFAULT_CAP, po=None):
    """U(a|O_T) with the exact path posterior.

    Args:
        candidate (int): path id
        view (LogicalView): current observations
        prior (Prior): node prior
        cap (int, optional): residual cap. Defaults to DEFAULT_CAP.
        po (float, optional): P(O_T) if already known. Defaults to None.

    Returns:
        float: expected utility, 0 for implied outcomes
    """
    if view.is_implied(candidate):
        return 0.0
    size = len(view.residual(candidate))
    pz = path_posterior_working(candidate, view, prior, cap, po)
    return (realized_utility(size, exclusion_count(candidate, view), True) * pz
            + realized_utility(size, 0, False) * (1.0 - pz))


def expected_utility_centrality(candidate, view, params, scores=None):
    """U_c(a|O_T) with the centrality estimate of the path working."""
    if view.is_implied(candidate):
        return 0.0
    size = len(view.residual(candidate))
    if scores is None:
        scores = centrality_map(view, params)
    pz = centrality_path_working(candidate, view, params, scores)
    bonus = exclusion_count(candidate, view) if params.exclusion_bonus else 0
    return realized_utility(size, bonus, True) * pz + realized_utility(size, 0, False) * (1.0 - pz)


def cumulative_utility(view):
    """Distinct node states assessed so far: known working plus known broken nodes."""
    return len(view.working) + len(view.known_broken)


def empirical_alpha(paths, entries, prior, cap=DEFAULT_CAP):
    """Smallest ratio U(a|T)/U(a|T') over prefixes T of T' of an observation run.

    Only actions untested in T' with U(a|T') > U(a|T) > 0 count; 1 when none do.

    Args:
        paths (sequence): path table
        entries (iterable): ordered (path id, works) observations
        prior (Prior): node prior
        cap (int, optional): residual cap. Defaults to DEFAULT_CAP.

    Returns:
        float: the empirical ratio in (0, 1]
    """
    views = [initial_view(paths)]
    for pid, works in entries:
        views.append(apply_observation(views[-1], pid, works))
    utilities = {}

    def utility(i, a):
        if (i, a) not in utilities:
            utilities[(i, a)] = expected_utility_exact(a, views[i], prior, cap)
        return utilities[(i, a)]

    alpha = 1.0
    for j in range(1, len(views)):
        for a in range(len(views[j].paths)):
            if a in views[j].tested:
                continue
            later = utility(j, a)
            if later <= ZERO_UTILITY:
                continue
            for i in range(j):
                earlier = utility(i, a)
                if ZERO_UTILITY < earlier < later:
                    alpha = min(alpha, earlier / later)
    return alpha


def alpha_bound(inputs):
    """Lower bound constants (delta_min, delta_max_prime, alpha) for the greedy policy.

    Args:
        inputs (BoundInputs): prior and path/degree sizes

    Returns:
        tuple: delta_min, delta_max_prime and alpha = delta_min/delta_max_prime clamped to (0, 1]
    """
    p = inputs.p
    # n(1-p)^n peaks at -1/ln(1-p), rounded half up
    n_star = max(1, int(math.floor(-1.0 / math.log(1.0 - p) + 0.5)))
    delta_max = n_star * (1.0 - p) ** n_star
    p_min = 1.0 - p / (1.0 + (1.0 - p) * (p ** inputs.deg_max - 1.0))
    delta_min = (inputs.candidate_len + inputs.f1_count) * p_min ** inputs.path_len_max
    return delta_min, delta_max, min(1.0, delta_min / delta_max)


def delta3(p, degPerNode, pathLen):
    """Utility of a candidate whose nodes each sit on three-node failed paths.

    Args:
        p (float): node prior in (0, 1)
        degPerNode (int or sequence): failed paths through each node, one value for all or one per node
        pathLen (int): candidate residual size

    Returns:
        float: pathLen * prod(1 - p/(1 + (1-p)((2p - p^2)^deg - 1)))
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"delta3 needs p in (0, 1), got {p}")
    degs = np.full(pathLen, degPerNode) if np.isscalar(degPerNode) else np.asarray(degPerNode)
    if len(degs) != pathLen:
        raise ValueError("one degree per node is needed.")
    factors = 1.0 - p / (1.0 + (1.0 - p) * ((2 * p - p * p) ** degs.astype(float) - 1.0))
    return pathLen * float(np.prod(factors))


def exclusion_bound_ratio(p, pathLen, deg):
    """delta_min/delta3 for a candidate of pathLen nodes each on deg failed paths (|F| = pathLen*deg)."""
    failed = pathLen * deg
    p_min = 1.0 - p / (1.0 + (1.0 - p) * (p ** deg - 1.0))
    delta_min = (pathLen + failed) * p_min ** pathLen
    return delta_min / delta3(p, deg, pathLen)


def bound_sweep(ps=(0.05, 0.1, 0.3), lengths=range(2, 11), degs=range(1, 9)):
    """Tabulate delta_min/delta3 over a parameter grid.

    Returns:
        pandas.DataFrame: columns p, pathLen, deg, failedPaths, ratio
    """
    rows = []
    for p in ps:
        for length in lengths:
            for deg in degs:
                rows.append({'p': p, 'pathLen': length, 'deg': deg, 'failedPaths': length * deg,
                             'ratio': exclusion_bound_ratio(p, length, deg)})
    return pd.DataFrame(rows, columns=['p', 'pathLen', 'deg', 'failedPaths', 'ratio'])
