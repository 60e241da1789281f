import json
import os

import numpy as np
import pandas as pd
import pytest

from pbnt import run
from pbnt.bayes import CapacityError
from pbnt.strategies import run_strategy
from pbnt.topology import GroundTruth, covered_nodes


def _bics_config(fixtures_dir, **kwargs):
    settings = dict(topology=os.path.join(fixtures_dir, 'bics_scale.gml'), monitorCount=6, failures=[1, 2],
                    strategies=['pop', 'face', 'gc', 'apc'], budget='boundedByFaceConvergence', repetitions=2,
                    masterSeed=11)
    settings.update(kwargs)
    return run.ExperimentConfig(**settings)


@pytest.mark.parametrize('kwargs, key', [
    ({}, 'topology'),
    ({'topology': 'x.gml', 'strategies': ['pop', 'random']}, 'strategies'),
    ({'topology': 'x.gml', 'strategies': []}, 'strategies'),
    ({'topology': 'x.gml', 'budget': 'fixedK'}, 'budgetK'),
    ({'topology': 'x.gml', 'budget': 'boundedByFaceConvergence', 'strategies': ['pop']}, 'budget'),
    ({'topology': 'x.gml', 'failures': [1, -2]}, 'failures'),
    ({'topology': 'x.gml', 'prior': 1.5}, 'prior'),
    ({'topology': 'x.gml', 'failureMode': 'bursty'}, 'failureMode'),
    ({'topology': 'x.gml', 'monitorCount': 1}, 'monitorCount'),
    ({'topology': 'x.gml', 'dynamic': {'window': 3}}, 'dynamic'),
    ({'topology': 'x.gml', 'dynamic': {'strategies': ['pop']}}, 'dynamic.strategies'),
    ({'topology': 'x.gml', 'dynamic': {'pWF': 2.0}}, 'dynamic'),
])
def test_config_validation_names_the_key(kwargs, key):
    with pytest.raises(run.ConfigError) as err:
        run.ExperimentConfig(**kwargs)
    assert str(err.value).startswith(f"{key}:")


def test_config_scenarios():
    assert run.ExperimentConfig(topology='x.gml', failures=[1, 3]).scenarios == [1, 3]
    assert run.ExperimentConfig(topology='x.gml', failureMode='iid', failureProb=0.2).scenarios == [0.2]
    assert run.ExperimentConfig(topology='x.gml', failedNodes=['a', 'b']).scenarios == [2]


def test_load_config_rejects_unknown_keys(tmp_path):
    fname = tmp_path / 'config.json'
    fname.write_text(json.dumps({'topology': 'x.gml', 'colour': 'blue'}))
    with pytest.raises(run.ConfigError):
        run.load_config(str(fname))
    fname.write_text("{'topology': ")
    with pytest.raises(run.ConfigError):
        run.load_config(str(fname))


def test_config_round_trip_resolves_paths(tmp_path):
    fname = str(tmp_path / 'config.json')
    run.make_config(fname, topology='net.gml', strategies=['gc'], failures=[1, 2])
    config = run.load_config(fname)
    assert config.topology == os.path.join(str(tmp_path), 'net.gml')
    assert config.strategies == ['gc']
    assert config.failures == [1, 2]


def test_generate_failures_fixed_k():
    truth = run.generate_failures(range(10), 'fixedK', 3, seed=1)
    assert len(truth.failed) == 3
    assert truth.failed <= set(range(10))
    assert run.generate_failures(range(10), 'fixedK', 3, seed=1) == truth
    assert run.generate_failures(range(10), 'fixedK', 0) == GroundTruth()
    with pytest.raises(ValueError):
        run.generate_failures(range(3), 'fixedK', 4)
    with pytest.raises(ValueError):
        run.generate_failures(range(3), 'burst', 1)


def test_generate_failures_iid():
    assert run.generate_failures(range(20), 'iid', 0.0).failed == frozenset()
    assert run.generate_failures(range(20), 'iid', 1.0).failed == set(range(20))
    count = len(run.generate_failures(range(1000), 'iid', 0.1, seed=3).failed)
    # binomial(1000, 0.1) within four standard deviations
    assert abs(count - 100) < 4 * np.sqrt(1000 * 0.1 * 0.9)


def test_worked_example_experiment(fixtures_dir, tmp_path):
    config = run.load_config(os.path.join(fixtures_dir, 'ten_node.json'))
    report, summary = run.run_experiment(config, str(tmp_path))
    for name in ('report.csv', 'summary.csv', 'timing.csv', 'labels.csv'):
        assert os.path.isfile(tmp_path / name)
    rows = report[report['kind'] == 'summary'].set_index('strategy')
    assert rows.loc['pop', 'probesUsed'] == 4
    assert rows.loc['face', 'probesUsed'] == 4
    assert rows.loc['gc', 'probesUsed'] == 5
    for strategy in ('pop', 'face', 'gc', 'apc', 'dp'):
        assert rows.loc[strategy, 'a_W'] == 1.0
        assert rows.loc[strategy, 'a_B'] == 1.0
        assert rows.loc[strategy, 'R1'] == 1.0
        assert rows.loc[strategy, 'failedCount'] == 1
    assert rows.loc['pop', 'terminationReason'] == 'noUsefulPaths'
    steps = report[(report['kind'] == 'step') & (report['strategy'] == 'pop')]
    assert steps['pathId'].tolist() == [2, 3, 0, 1]
    assert set(summary['strategy']) == {'pop', 'face', 'gc', 'apc', 'dp'}
    labels = pd.read_csv(tmp_path / 'labels.csv')
    assert labels['label'].tolist()[8] == 'v9'


def test_accuracy_never_drops_along_a_run(fixtures_dir):
    report, _ = run.run_experiment(_bics_config(fixtures_dir, repetitions=1))
    steps = report[report['kind'] == 'step']
    for _, group in steps.groupby(['strategy', 'failures', 'repetition']):
        assert group['a_W'].is_monotonic_increasing
        assert group['a_B'].is_monotonic_increasing


def test_budget_bounded_by_face(fixtures_dir):
    report, _ = run.run_experiment(_bics_config(fixtures_dir))
    rows = report[report['kind'] == 'summary']
    for _, group in rows.groupby(['failures', 'repetition']):
        used = group.set_index('strategy')['probesUsed']
        assert (used <= used['face']).all()


def test_reports_are_reproducible(fixtures_dir, tmp_path):
    config = _bics_config(fixtures_dir)
    run.run_experiment(config, str(tmp_path / 'serial'))
    run.run_experiment(config, str(tmp_path / 'pool'), nWorkers=2)
    for name in ('report.csv', 'summary.csv', 'labels.csv'):
        with open(tmp_path / 'serial' / name, 'rb') as f, open(tmp_path / 'pool' / name, 'rb') as g:
            assert f.read() == g.read()


def test_capacity_error_gives_failed_row(fixtures_dir, monkeypatch):
    real = run.run_strategy

    def capped(strategy, *args, **kwargs):
        if strategy == 'pop':
            raise CapacityError("too many residuals")
        return real(strategy, *args, **kwargs)

    monkeypatch.setattr(run, 'run_strategy', capped)
    config = run.load_config(os.path.join(fixtures_dir, 'ten_node.json'))
    config.strategies = ['pop', 'face']
    report, _ = run.run_experiment(config)
    rows = report[report['kind'] == 'summary'].set_index('strategy')
    assert rows.loc['pop', 'terminationReason'] == run.FAILED
    assert rows.loc['pop', 'probesUsed'] == 0
    assert rows.loc['face', 'terminationReason'] == 'noUsefulPaths'


def test_external_traces_join_the_report(fixtures_dir, tmp_path):
    trace = tmp_path / 'tomo.csv'
    pd.DataFrame({'strategy': ['tomo'], 'repetition': [0], 'step': [1], 'a_W': [0.5], 'a_B': [1.0]}).to_csv(
        trace, index=False)
    config = run.load_config(os.path.join(fixtures_dir, 'ten_node.json'))
    config.externalTraces = [str(trace)]
    config.strategies = ['pop']
    report, _ = run.run_experiment(config)
    assert 'tomo' in set(report['strategy'])
    broken = tmp_path / 'broken.csv'
    pd.DataFrame({'strategy': ['tomo'], 'step': [1]}).to_csv(broken, index=False)
    with pytest.raises(run.ConfigError):
        run.load_external_traces([str(broken)])


def test_unknown_failed_node_label(fixtures_dir):
    config = run.load_config(os.path.join(fixtures_dir, 'ten_node.json'))
    config.failedNodes = ['v99']
    with pytest.raises(run.ConfigError):
        run.run_experiment(config)


def test_dynamic_experiment(fixtures_dir, tmp_path):
    config = _bics_config(fixtures_dir, dynamic={'pWF': 0.01, 'pFW': 0.2, 'windowLen': 12, 'horizon': 15,
                                                 'strategies': ['dpop', 'dface'], 'repetitions': 2})
    steps, detection = run.run_dynamic_experiment(config, str(tmp_path))
    assert len(steps) == 2 * 2 * 15
    assert list(steps.columns) == run.DYNAMIC_COLUMNS
    assert set(detection['strategy']) == {'dpop', 'dface'}
    assert {'contradictions', 'pctWF', 'timeFW'} <= set(detection.columns)
    for name in ('dynamic.csv', 'detection.csv', 'labels.csv'):
        assert os.path.isfile(tmp_path / name)
    with pytest.raises(run.ConfigError):
        run.run_dynamic_experiment(_bics_config(fixtures_dir))


def test_zero_budget_summary_ranks_with_strategy_scores(fixtures_dir, monkeypatch):
    real = run.node_scores
    seen = []

    def recorded(strategy, *args, **kwargs):
        seen.append(strategy)
        return real(strategy, *args, **kwargs)

    monkeypatch.setattr(run, 'node_scores', recorded)
    config = run.load_config(os.path.join(fixtures_dir, 'ten_node.json'))
    config.strategies = ['pop', 'face']
    config.budget, config.budgetK = 'fixedK', 0
    report, _ = run.run_experiment(config)
    rows = report[report['kind'] == 'summary'].set_index('strategy')
    assert (rows['probesUsed'] == 0).all()
    assert rows['R1'].notna().all()
    assert seen == ['pop', 'face']


def test_dynamic_capacity_error_gives_failed_row(fixtures_dir, monkeypatch):
    real = run.run_dynamic

    def capped(strategy, *args, **kwargs):
        if strategy == 'dpop':
            raise CapacityError("too many residuals")
        return real(strategy, *args, **kwargs)

    monkeypatch.setattr(run, 'run_dynamic', capped)
    config = _bics_config(fixtures_dir, dynamic={'windowLen': 12, 'horizon': 5, 'strategies': ['dpop', 'dface'],
                                                 'repetitions': 1})
    steps, detection = run.run_dynamic_experiment(config)
    assert set(steps['strategy']) == {'dface'}
    rows = detection.set_index('strategy')
    assert rows.loc['dpop', 'status'] == run.FAILED
    assert rows.loc['dface', 'status'] == 'ok'


def test_face_and_pop_on_bics_draws(fixtures_dir):
    config = run.load_config(os.path.join(fixtures_dir, 'bics.json'))
    paths = run.build_instance(config).paths
    nodes = covered_nodes(paths)
    prior, centrality = config.prior_model, config.centrality
    for k in config.scenarios:
        probes = {'pop': [], 'face': []}
        for rep in range(config.repetitions):
            truth = run.draw_truth(config, nodes, k, rep)
            baseline = run.baseline_classification(paths, truth)
            for strategy in probes:
                trace = run_strategy(strategy, paths, truth, prior=prior, params=centrality,
                                     cap=config.residualCap, recordScores=False)
                assert trace.final_view.working == baseline.working
                assert trace.final_view.known_broken == baseline.broken
                probes[strategy].append(trace.probes)
        # both stop at the logical closure, FaCe averages less than one probe more
        assert np.mean(probes['face']) <= np.mean(probes['pop']) + 1.0
