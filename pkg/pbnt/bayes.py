#!/usr/bin/env python

"""bayes.py: exact node and path posteriors by inclusion-exclusion over failed residuals."""
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict

import numpy as np

from .topology import replay
from .util import popcount, to_mask

DEFAULT_CAP = 25
# float slack tolerated before clamping
JOINT_SLACK = 1e-12
POSTERIOR_SLACK = 1e-9


class CapacityError(RuntimeError):
    """Exact inference would need more failed residuals than the configured cap."""


class ContradictionError(ValueError):
    """Posterior requested for observations of zero probability."""


@dataclass(frozen=True)
class Prior:
    """Uniform, independent node failure prior."""
    p: float = 0.1

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"prior p must lie in [0, 1], got {self.p}")

    @property
    def q(self):
        return 1.0 - self.p


@dataclass(frozen=True)
class PosteriorReport:
    """Posteriors for every untested path and every covered node."""
    path_working: Dict[int, float] = field(default_factory=dict)
    node_failure: Dict[int, float] = field(default_factory=dict)
    joint_prob: float = 1.0


def _checked(value, slack):
    assert -slack <= value <= 1.0 + slack, f"probability {value} out of range"
    return min(1.0, max(0.0, value))


def prior_path_working(path_residual_size, prior):
    """Prior probability that a path with this many unknown nodes works, (1-p)^size."""
    return prior.q ** path_residual_size


def _subset_minimal(masks):
    # a residual containing another one adds no constraint
    keep = []
    for m in sorted(set(masks), key=lambda m: (popcount(m), m)):
        if not any(k & m == k for k in keep):
            keep.append(m)
    return keep


def _components(masks):
    """Split masks into groups with pairwise disjoint unions."""
    groups = []
    for m in masks:
        union, members = m, [m]
        kept = []
        for g_union, g_members in groups:
            # existing groups are disjoint, so only a direct overlap with union matters
            if g_union & union:
                union |= g_union
                members = g_members + members
            else:
                kept.append((g_union, g_members))
        groups = kept + [(union, members)]
    return [tuple(sorted(members)) for _, members in groups]


@lru_cache(maxsize=65536)
def _component_hit(masks, q):
    # signed coefficients per distinct union of residual subsets
    terms = {0: 1}
    for m in masks:
        update = dict(terms)
        for union, coeff in terms.items():
            u = union | m
            update[u] = update.get(u, 0) - coeff
        terms = {u: c for u, c in update.items() if c}
    unions = list(terms)
    coeffs = np.array([terms[u] for u in unions], dtype=float)
    sizes = np.array([popcount(u) for u in unions], dtype=float)
    return float(np.dot(coeffs, np.power(q, sizes)))


def hit_probability(masks, q, cap=DEFAULT_CAP):
    """Probability that every residual bitset holds at least one failed node.

    Nodes fail independently with probability 1-q. Residuals that contain another
    residual are dropped, the rest are split into independent groups and each group
    is summed by inclusion-exclusion over its 2^k subsets.

    Args:
        masks (iterable): residual node sets as integer bitsets
        q (float): probability that a node works
        cap (int, optional): largest group handled exactly. Defaults to DEFAULT_CAP.

    Returns:
        float: the probability
    """
    masks = list(masks)
    if any(m == 0 for m in masks):
        return 0.0
    result = 1.0
    for component in _components(_subset_minimal(masks)):
        if len(component) > cap:
            raise CapacityError(f"{len(component)} overlapping failed residuals exceed the cap of {cap}; "
                                f"exact inference costs 2^{len(component)} terms.")
        result *= _component_hit(component, float(q))
    return result


def joint_observation_prob(view, prior, working=(), failed=(), cap=DEFAULT_CAP):
    """Joint probability of the observations, optionally with some node states fixed.

    Working observations enter as the factor (1-p)^|W|, failed ones as the
    event that each pruned residual holds a failed node.

    Args:
        view (LogicalView): the pruned observations
        prior (Prior): node prior
        working (iterable, optional): nodes fixed working. Defaults to ().
        failed (iterable, optional): nodes fixed failed. Defaults to ().
        cap (int, optional): residual cap. Defaults to DEFAULT_CAP.

    Returns:
        float: P(O_T and the fixings)
    """
    p, q = prior.p, prior.q
    fixed_failed = frozenset(failed)
    fixed_working = frozenset(working) - view.working
    if fixed_failed & (view.working | fixed_working):
        return 0.0
    factor = q ** (len(view.working) + len(fixed_working)) * p ** len(fixed_failed)
    if factor == 0.0:
        return 0.0
    masks = []
    for residual in view.pruned_failed.values():
        if residual & fixed_failed:
            continue
        masks.append(to_mask(residual - fixed_working))
    return _checked(factor * hit_probability(masks, q, cap), JOINT_SLACK)


def observation_prob(view, prior, cap=DEFAULT_CAP):
    """P(O_T), raising ContradictionError when it is zero."""
    if view.contradictory:
        raise ContradictionError("the observations contradict each other.")
    po = joint_observation_prob(view, prior, cap=cap)
    if po <= 0.0:
        raise ContradictionError("the observations have zero probability under the prior.")
    return po


def path_posterior_working(path_id, view, prior, cap=DEFAULT_CAP, po=None):
    """P(Z|O_T): posterior probability that a path works."""
    if po is None and view.contradictory:
        raise ContradictionError("the observations contradict each other.")
    residual = view.residual(path_id)
    if not residual:
        return 1.0
    if view.is_implied(path_id):
        return 0.0
    if po is None:
        po = observation_prob(view, prior, cap)
    return _checked(joint_observation_prob(view, prior, working=residual, cap=cap) / po, POSTERIOR_SLACK)


def node_posterior_failure(node, view, prior, cap=DEFAULT_CAP, po=None):
    """P(S̄_v|O_T): posterior probability that a node is broken."""
    if po is None and view.contradictory:
        raise ContradictionError("the observations contradict each other.")
    if node in view.working:
        return 0.0
    if node in view.known_broken:
        return 1.0
    if node not in view.touched:
        return prior.p
    if po is None:
        po = observation_prob(view, prior, cap)
    return _checked(joint_observation_prob(view, prior, failed=(node,), cap=cap) / po, POSTERIOR_SLACK)


def node_posteriors(view, prior, nodes=None, cap=DEFAULT_CAP):
    """Failure posterior of every covered node (or of the given nodes)."""
    nodes = sorted(view.covered if nodes is None else nodes)
    po = observation_prob(view, prior, cap)
    return {v: node_posterior_failure(v, view, prior, cap, po) for v in nodes}


def posterior_report(view, prior, cap=DEFAULT_CAP):
    """PosteriorReport for all untested paths and all covered nodes."""
    po = observation_prob(view, prior, cap)
    paths = {p.id: path_posterior_working(p.id, view, prior, cap, po)
             for p in view.paths if p.id not in view.tested}
    return PosteriorReport(path_working=paths, node_failure=node_posteriors(view, prior, cap=cap), joint_prob=po)


def is_contradictory(entries, paths):
    """True iff replaying the entries (repeats allowed) flags a contradiction."""
    return replay(entries, paths, repeat=True).contradictory
