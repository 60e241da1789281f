import os
from types import SimpleNamespace

import numpy as np
import pytest

from pbnt import io as pbio
from pbnt.run import ExperimentConfig, build_instance
from pbnt.topology import GroundTruth, MonitoringPath, observe

FIXTURES = os.path.abspath(os.path.join(os.path.dirname(__file__), '..', 'fixtures'))


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@pytest.fixture
def ten_node():
    """Ten-node example with four monitors: six paths, node v<i> is id i-1, only v9 failed."""
    network = pbio.read_topology(os.path.join(FIXTURES, 'ten_node.gml'))
    paths, labels = pbio.read_paths(os.path.join(FIXTURES, 'ten_node_paths.txt'), network.labels)
    return SimpleNamespace(network=network, paths=paths, labels=labels, truth=GroundTruth({8}))


def _fixture_paths(name):
    paths, labels = pbio.read_paths(os.path.join(FIXTURES, name))
    return SimpleNamespace(paths=paths, labels=labels, id={label: v for v, label in enumerate(labels)})


@pytest.fixture
def pinned_example():
    return _fixture_paths('pinned_paths.txt')


@pytest.fixture
def superpath_example():
    return _fixture_paths('superpath_paths.txt')


@pytest.fixture
def order_example():
    return _fixture_paths('order_paths.txt')


@pytest.fixture
def bics_paths():
    """Routed paths between six monitors of the 33-node backbone."""
    config = ExperimentConfig(topology=os.path.join(FIXTURES, 'bics_scale.gml'), monitorCount=6, masterSeed=7)
    return build_instance(config).paths


def random_paths(rng, max_nodes=12, max_paths=8, max_len=5):
    n = int(rng.integers(3, max_nodes + 1))
    m = int(rng.integers(2, max_paths + 1))
    paths = []
    for i in range(m):
        size = int(rng.integers(1, min(max_len, n) + 1))
        paths.append(MonitoringPath(i, tuple(int(v) for v in rng.choice(n, size=size, replace=False))))
    return paths


def random_observations(rng, paths, fail=0.25):
    """Consistent observations of a random subset of paths under a random truth."""
    nodes = sorted(set().union(*(p.node_set for p in paths)))
    truth = GroundTruth(v for v in nodes if rng.random() < fail)
    order = rng.permutation(len(paths))[:int(rng.integers(0, len(paths) + 1))]
    return [(int(pid), observe(paths[pid], truth)) for pid in order], truth


@pytest.fixture
def random_instances():
    """Generator of (paths, observations, truth, p) for enumerable random instances."""
    def generate(count, seed=0, max_nodes=12, max_paths=8, priors=(0.05, 0.1, 0.3)):
        rng = np.random.default_rng(seed)
        for i in range(count):
            paths = random_paths(rng, max_nodes, max_paths)
            entries, truth = random_observations(rng, paths)
            yield paths, entries, truth, priors[i % len(priors)]
    return generate
