#!/usr/bin/env python

"""centrality.py: failure centrality, a polynomial stand-in for node failure posteriors."""
import math
from dataclasses import dataclass
from fractions import Fraction


@dataclass(frozen=True)
class CentralityParams:
    """Parameters of the failure centrality.

    Attributes:
        c0 (float): centrality of nodes no tested path touches
        epsilon (float): saturation constant of T2, re-validated against the current view
        exclusion_bonus (bool): add the identification-by-exclusion bonus to the
            working branch of the centrality utility
    """
    c0: float = 0.1
    epsilon: float = 0.05
    exclusion_bonus: bool = False

    def __post_init__(self):
        if not 0.0 <= self.c0 <= 1.0:
            raise ValueError(f"c0 must lie in [0, 1], got {self.c0}")
        if not self.epsilon > 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")


def epsilon_for_union_size(epsilon, d):
    """Keep epsilon below 1-q* = 1/d, halving the bound when it is not."""
    if d < 1:
        return epsilon
    limit = 1.0 / d
    return epsilon if epsilon < limit else limit / 2


def _failed_through(view, node):
    return [r for r in view.pruned_failed.values() if node in r]


def max_union_size(view):
    """Largest union of the failed residuals sharing a node."""
    nodes = set()
    for residual in view.pruned_failed.values():
        nodes |= residual
    return max((len(frozenset().union(*_failed_through(view, v))) for v in nodes), default=0)


def validate_epsilon(params, view):
    return epsilon_for_union_size(params.epsilon, max_union_size(view))


def t2_score(pv, epsilon):
    """T2 = P_v + H(floor(P_v) - 1) * (1 - epsilon/P_v - P_v), with H(0) = 1.

    Args:
        pv (Fraction or float): failed-path density of the node, > 0
        epsilon (float): saturation constant

    Returns:
        float: T2
    """
    pv = Fraction(pv)
    step = 1 if math.floor(pv) - 1 >= 0 else 0
    value = float(pv)
    return value + step * (1.0 - epsilon / value - value)


def failure_centrality(node, view, params, epsilon=None):
    """Failure centrality c(v|O_T) of a node.

    Args:
        node (int): node id
        view (LogicalView): current observations
        params (CentralityParams): c0 and epsilon
        epsilon (float, optional): already validated epsilon. Defaults to None.

    Returns:
        float: score in [0, 1]
    """
    if node in view.working:
        return 0.0
    if node not in view.touched:
        return params.c0
    residuals = _failed_through(view, node)
    if not residuals:
        return params.c0
    if epsilon is None:
        epsilon = validate_epsilon(params, view)
    t1 = math.ceil(Fraction(sum(1 // len(r) for r in residuals), len(residuals)))
    pv = Fraction(len(residuals), len(frozenset().union(*residuals)))
    return float(max(t1, t2_score(pv, epsilon)))


def centrality_map(view, params, nodes=None):
    """Centrality of every covered node (or of the given nodes), epsilon validated once."""
    epsilon = validate_epsilon(params, view)
    nodes = sorted(view.covered if nodes is None else nodes)
    return {v: failure_centrality(v, view, params, epsilon) for v in nodes}


def centrality_path_working(path_id, view, params, scores=None):
    """Centrality estimate that a path works: product of (1 - c(v)) over its residual."""
    residual = view.residual(path_id)
    if scores is None:
        scores = centrality_map(view, params, residual)
    value = 1.0
    for v in sorted(residual):
        value *= 1.0 - scores[v]
    return value
