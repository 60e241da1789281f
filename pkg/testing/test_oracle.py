import numpy as np
import pytest

from pbnt.bayes import (ContradictionError, Prior, joint_observation_prob, node_posterior_failure,
                        path_posterior_working)
from pbnt.oracle import certain_count, enumerate_posteriors
from pbnt.topology import MonitoringPath, apply_observation, replay
from pbnt.utility import cumulative_utility, exclusion_count, expected_utility_exact


def test_oracle_on_single_failed_path():
    paths = [MonitoringPath(0, (0, 1))]
    result = enumerate_posteriors(paths, [(0, False)], 0.1)
    assert result.joint_prob == pytest.approx(0.19)
    assert result.node_failure[0] == pytest.approx(0.1 / 0.19)
    assert result.path_working[0] == 0.0
    assert certain_count(result) == 0


def test_oracle_rejects_impossible_observations():
    paths = [MonitoringPath(0, (0, 1)), MonitoringPath(1, (0, 1))]
    with pytest.raises(ContradictionError):
        enumerate_posteriors(paths, [(0, False), (1, True)], 0.1)
    with pytest.raises(ValueError):
        enumerate_posteriors(paths, [(4, True)], 0.1)


def test_exact_posteriors_match_enumeration(random_instances):
    for paths, entries, _, p in random_instances(500, seed=11):
        prior = Prior(p)
        view = replay(entries, paths)
        oracle = enumerate_posteriors(paths, entries, p)
        for path in paths:
            assert path_posterior_working(path.id, view, prior) == pytest.approx(
                oracle.path_working[path.id], abs=1e-9)
        for v, expected in oracle.node_failure.items():
            assert node_posterior_failure(v, view, prior) == pytest.approx(expected, abs=1e-9)


def test_marginal_benefit_is_expected_assessment_gain(random_instances):
    # U(a|O) equals the expected growth of known nodes when probing a
    for paths, entries, _, p in random_instances(200, seed=5):
        prior = Prior(p)
        view = replay(entries, paths)
        oracle = enumerate_posteriors(paths, entries, p)
        before = cumulative_utility(view)
        for a in sorted(view.active):
            pz = oracle.path_working[a]
            gain = 0.0
            for works, prob in ((True, pz), (False, 1.0 - pz)):
                if prob <= 0.0:
                    continue
                gain += prob * (cumulative_utility(apply_observation(view, a, works)) - before)
            assert expected_utility_exact(a, view, prior) == pytest.approx(gain, abs=1e-9)


def test_exclusion_count_matches_newly_pinned_nodes(random_instances):
    for paths, entries, _, _ in random_instances(200, seed=9):
        view = replay(entries, paths)
        for a in sorted(view.active):
            after = apply_observation(view, a, True)
            if after.contradictory:
                continue
            assert exclusion_count(a, view) == len(after.known_broken - view.known_broken)


def test_certain_count_grows_with_probes(ten_node):
    entries = []
    counts = []
    for path in ten_node.paths:
        entries.append((path.id, not (path.node_set & ten_node.truth.failed)))
        counts.append(certain_count(enumerate_posteriors(ten_node.paths, entries, 0.1)))
    assert counts == sorted(counts)
    # v10 only sits on failed paths
    assert counts[-1] == 9
    assert np.isclose(enumerate_posteriors(ten_node.paths, entries, 0.1).node_failure[8], 1.0)


def test_joint_probability_splits_over_next_outcome(random_instances):
    for paths, entries, _, p in random_instances(300, seed=17):
        prior = Prior(p)
        view = replay(entries, paths)
        total = joint_observation_prob(view, prior)
        for path in paths:
            if path.id in view.tested:
                continue
            works = joint_observation_prob(apply_observation(view, path.id, True), prior)
            fails = joint_observation_prob(apply_observation(view, path.id, False), prior)
            assert works + fails == pytest.approx(total, abs=1e-12)


def test_observed_path_posterior_is_certain(random_instances):
    for paths, entries, _, p in random_instances(300, seed=19):
        prior = Prior(p)
        view = replay(entries, paths)
        for path in paths:
            if path.id in view.tested:
                continue
            for works, expected in ((True, 1.0), (False, 0.0)):
                after = apply_observation(view, path.id, works)
                if after.contradictory or joint_observation_prob(after, prior) <= 0.0:
                    continue
                assert path_posterior_working(path.id, after, prior) == expected
