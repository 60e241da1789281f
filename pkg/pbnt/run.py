#!/usr/bin/env python

"""run.py: experiment configuration, failure scenarios and batch execution with CSV reports."""
import json
import logging
import os
import time
from dataclasses import asdict, dataclass, field, fields
from typing import List, Optional, Union

import numpy as np
import pandas as pd

from . import io as pbio
from .bayes import CapacityError, Prior
from .centrality import CentralityParams
from .dynamic import DynamicConfig, run_dynamic
from .metrics import Classification, accuracy, classify, rank_metrics, summarize
from .strategies import DYNAMIC_STRATEGIES, STATIC_STRATEGIES, node_scores, run_strategy
from .topology import GroundTruth, covered_nodes, generate_paths, observe, replay
from .util import SEED_FAILURES, SEED_MONITORS, SEED_ROUTING, make_rng, parallel_analysis
from .utility import BoundInputs, alpha_bound

logger = logging.getLogger(__name__)

FAILURE_MODES = ('fixedK', 'iid')
BUDGET_MODES = ('untilConvergence', 'boundedByFaceConvergence', 'fixedK')
DYNAMIC_KEYS = ('pWF', 'pFW', 'windowLen', 'horizon', 'strategies', 'repetitions')

REPORT_COLUMNS = ['kind', 'strategy', 'repetition', 'failures', 'failedCount', 'step', 'pathId', 'works',
                  'a_W', 'a_B', 'R1', 'R2', 'probesUsed', 'terminationReason', 'alphaMaxima', 'alphaCandidate']
NUMERIC_COLUMNS = ['a_W', 'a_B', 'R1', 'R2', 'alphaMaxima', 'alphaCandidate']
TIMING_COLUMNS = ['strategy', 'repetition', 'failures', 'wallClockSeconds']
DYNAMIC_COLUMNS = ['strategy', 'repetition', 't', 'pathId', 'works', 'reprobe', 'windowSize', 'truncated',
                   'failedCount', 'working', 'broken', 'precision', 'recall']
EXTERNAL_REQUIRED = ('strategy', 'repetition', 'step', 'a_W', 'a_B')
FAILED = 'failed'


class ConfigError(ValueError):
    """Invalid experiment configuration, the message names the offending key."""


@dataclass
class ExperimentConfig:
    """Parameters of one experiment, mirrored one to one by the JSON config file."""
    topology: Optional[str] = None
    format: Optional[str] = None
    paths: Optional[str] = None
    monitors: Optional[List[str]] = None
    failedNodes: Optional[List[str]] = None
    monitorCount: int = 4
    pathsPerPair: int = 1
    failureMode: str = 'fixedK'
    failures: Union[int, List[int]] = 1
    failureProb: float = 0.1
    prior: float = 0.1
    c0: float = 0.1
    epsilon: float = 0.05
    exclusionBonus: bool = False
    strategies: List[str] = field(default_factory=lambda: ['pop', 'face'])
    budget: str = 'untilConvergence'
    budgetK: Optional[int] = None
    repetitions: int = 1
    masterSeed: int = 0
    residualCap: int = 25
    dpHorizon: Optional[int] = None
    externalTraces: List[str] = field(default_factory=list)
    dynamic: Optional[dict] = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        def fail(key, message):
            raise ConfigError(f"{key}: {message}")

        if self.topology is None and self.paths is None:
            fail('topology', "a topology or a path fixture is required.")
        if self.format not in (None,) + pbio.FORMATS:
            fail('format', f"use one of {pbio.FORMATS}, got {self.format!r}")
        if self.monitors is None and self.paths is None and self.monitorCount < 2:
            fail('monitorCount', "at least two monitors are needed.")
        if self.pathsPerPair < 1:
            fail('pathsPerPair', "must be at least 1.")
        if self.failureMode not in FAILURE_MODES:
            fail('failureMode', f"use one of {FAILURE_MODES}, got {self.failureMode!r}")
        if any(not isinstance(k, int) or k < 0 for k in self.failure_counts):
            fail('failures', f"expected non-negative integers, got {self.failures!r}")
        for key in ('failureProb', 'prior', 'c0'):
            if not 0.0 <= getattr(self, key) <= 1.0:
                fail(key, f"must lie in [0, 1], got {getattr(self, key)}")
        if not self.epsilon > 0.0:
            fail('epsilon', f"must be positive, got {self.epsilon}")
        if not self.strategies:
            fail('strategies', "at least one strategy is required.")
        unknown = [s for s in self.strategies if s not in STATIC_STRATEGIES]
        if unknown:
            fail('strategies', f"unknown strategies {unknown}, use {STATIC_STRATEGIES}")
        if self.budget not in BUDGET_MODES:
            fail('budget', f"use one of {BUDGET_MODES}, got {self.budget!r}")
        if self.budget == 'fixedK' and (self.budgetK is None or self.budgetK < 0):
            fail('budgetK', "a non-negative budgetK is required with budget 'fixedK'.")
        if self.budget == 'boundedByFaceConvergence' and 'face' not in self.strategies:
            fail('budget', "'boundedByFaceConvergence' needs 'face' among the strategies.")
        if self.repetitions < 1:
            fail('repetitions', "must be at least 1.")
        if self.masterSeed < 0:
            fail('masterSeed', "must be non-negative.")
        if self.residualCap < 1:
            fail('residualCap', "must be at least 1.")
        if self.dpHorizon is not None and self.dpHorizon < 0:
            fail('dpHorizon', "must be non-negative.")
        if self.dynamic is not None:
            extra = sorted(set(self.dynamic) - set(DYNAMIC_KEYS))
            if extra:
                fail('dynamic', f"unknown keys {extra}")
            unknown = [s for s in self.dynamic.get('strategies', DYNAMIC_STRATEGIES) if s not in DYNAMIC_STRATEGIES]
            if unknown:
                fail('dynamic.strategies', f"unknown strategies {unknown}, use {DYNAMIC_STRATEGIES}")
            if self.dynamic.get('repetitions', 1) < 1:
                fail('dynamic.repetitions', "must be at least 1.")
            try:
                self.dynamic_config()
            except ValueError as err:
                fail('dynamic', str(err))

    @property
    def failure_counts(self):
        return list(self.failures) if isinstance(self.failures, (list, tuple)) else [self.failures]

    @property
    def scenarios(self):
        """Failure scenarios: every k of a fixedK sweep, the single failureProb for iid, the size of failedNodes."""
        if self.failedNodes is not None:
            return [len(self.failedNodes)]
        return self.failure_counts if self.failureMode == 'fixedK' else [self.failureProb]

    @property
    def prior_model(self):
        return Prior(self.prior)

    @property
    def centrality(self):
        return CentralityParams(self.c0, self.epsilon, self.exclusionBonus)

    def dynamic_config(self):
        settings = {k: v for k, v in (self.dynamic or {}).items() if k in ('pWF', 'pFW', 'windowLen', 'horizon')}
        return DynamicConfig(**settings)


def load_config(fname):
    """Read an experiment config JSON, unknown keys are rejected.

    Args:
        fname (str): config file, relative file names inside resolve against its folder

    Returns:
        ExperimentConfig: the validated config
    """
    with open(fname, encoding='utf-8') as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as err:
            raise ConfigError(f"{fname}: not valid JSON, {err}") from err
    if not isinstance(data, dict):
        raise ConfigError(f"{fname}: expected a JSON object.")
    known = {f.name for f in fields(ExperimentConfig)}
    extra = sorted(set(data) - known)
    if extra:
        raise ConfigError(f"unknown keys {extra}")
    folder = os.path.dirname(os.path.abspath(fname))
    for key in ('topology', 'paths'):
        if data.get(key):
            data[key] = os.path.join(folder, data[key])
    data['externalTraces'] = [os.path.join(folder, t) for t in data.get('externalTraces', [])]
    try:
        return ExperimentConfig(**data)
    except TypeError as err:
        raise ConfigError(str(err)) from err


def save_config(config, fname):
    with open(fname, 'w', encoding='utf-8') as f:
        f.write(json.dumps(asdict(config), indent=4))
    return fname


def make_config(fname=None, **kwargs):
    """Build (and optionally write) a validated config from keyword arguments."""
    config = ExperimentConfig(**kwargs)
    if fname is not None:
        save_config(config, fname)
    return config


def generate_failures(nodes, mode, value, seed=0):
    """Draw the failed nodes of one scenario.

    Args:
        nodes (iterable): candidate nodes, usually the covered ones
        mode (str): 'fixedK' for a uniform k-subset, 'iid' for independent failures
        value (int or float): k for 'fixedK', the failure probability for 'iid'
        seed (int or numpy.random.Generator, optional): seed or generator. Defaults to 0.

    Returns:
        GroundTruth: the failed nodes
    """
    nodes = np.array(sorted(nodes), dtype=int)
    rng = np.random.default_rng(seed)
    if mode == 'fixedK':
        if value > len(nodes):
            raise ValueError(f"cannot fail {value} nodes out of {len(nodes)} covered nodes.")
        return GroundTruth(nodes[rng.choice(len(nodes), size=int(value), replace=False)].tolist())
    if mode == 'iid':
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"failure probability must lie in [0, 1], got {value}")
        return GroundTruth(nodes[rng.random(len(nodes)) < value].tolist())
    raise ValueError(f"unknown failure mode {mode!r}, use one of {FAILURE_MODES}")


def draw_truth(config, nodes, scenario, rep, failed=None):
    """GroundTruth of one repetition: the configured failed nodes or a seeded draw of the scenario."""
    if failed is not None:
        return GroundTruth(failed)
    counter = scenario if config.failureMode == 'fixedK' else 0
    return generate_failures(nodes, config.failureMode, scenario,
                             make_rng(config.masterSeed, SEED_FAILURES, counter, rep))


@dataclass(frozen=True)
class Instance:
    """Monitoring paths of an experiment with the node labels they refer to."""
    paths: tuple
    labels: tuple
    monitors: tuple = ()

    @property
    def nodes(self):
        return covered_nodes(self.paths)

    def node_ids(self, labels):
        lookup = {label: v for v, label in enumerate(self.labels)}
        missing = [str(label) for label in labels if str(label) not in lookup]
        if missing:
            raise ConfigError(f"failedNodes: unknown node labels {missing}")
        return [lookup[str(label)] for label in labels]

    def params(self, config):
        """Shared worker parameters."""
        failed = self.node_ids(config.failedNodes) if config.failedNodes is not None else None
        return {'config': config, 'paths': self.paths, 'failed': failed}


def build_instance(config):
    """Read the topology, place the monitors and route (or read) the monitoring paths."""
    network = pbio.read_topology(config.topology, config.format) if config.topology else None
    if config.paths:
        paths, labels = pbio.read_paths(config.paths, network.labels if network else None)
        return Instance(tuple(paths), labels)
    if config.monitors:
        try:
            monitors = network.node_ids(config.monitors)
        except ValueError as err:
            raise ConfigError(f"monitors: {err}") from err
    else:
        n = network.graph.number_of_nodes()
        if config.monitorCount > n:
            raise ConfigError(f"monitorCount: {config.monitorCount} monitors on {n} nodes.")
        rng = make_rng(config.masterSeed, SEED_MONITORS)
        monitors = sorted(rng.choice(n, size=config.monitorCount, replace=False).tolist())
    network = network.with_monitors(monitors)
    paths = generate_paths(network, monitors, seed=make_rng(config.masterSeed, SEED_ROUTING),
                           pathsPerPair=config.pathsPerPair)
    logger.info(f"{len(paths)} monitoring paths between {len(monitors)} monitors.")
    return Instance(tuple(paths), network.labels, tuple(monitors))


def baseline_classification(paths, truth):
    """Classification obtained by probing every path, the reference of a_W and a_B."""
    view = replay([(p.id, observe(p, truth)) for p in paths], paths)
    return Classification(view.working, view.known_broken)


def alpha_estimates(paths, truth, p):
    """Bound alpha of one repetition with the maxima and with the candidate convention.

    Returns:
        tuple: (alphaMaxima, alphaCandidate), None when p is 0 or 1
    """
    if not 0.0 < p < 1.0:
        return None, None
    failed = [path for path in paths if not observe(path, truth)]
    through = [sum(1 for path in failed if v in path.node_set) for v in covered_nodes(paths)]
    deg_max = max(through, default=0)
    len_max = max(len(path) for path in paths)
    len_min = min(len(path) for path in paths)
    maxima = alpha_bound(BoundInputs(p, len_max, deg_max, len_max, deg_max))[2]
    candidate = alpha_bound(BoundInputs(p, len_max, deg_max, len_min, 0))[2]
    return maxima, candidate


def _row(kind, strategy, repetition, failures, failed_nodes, step, path_id=None, works=None,
         classification=None, baseline=None, truth=None, reason='', alpha=(None, None)):
    a_w, a_b = accuracy(classification, baseline)
    r1, r2 = rank_metrics(classification.ranking, truth.failed)
    return {'kind': kind, 'strategy': strategy, 'repetition': repetition, 'failures': failures,
            'failedCount': failed_nodes, 'step': step, 'pathId': path_id, 'works': works,
            'a_W': a_w, 'a_B': a_b, 'R1': r1, 'R2': r2, 'probesUsed': step, 'terminationReason': reason,
            'alphaMaxima': alpha[0], 'alphaCandidate': alpha[1]}


def _budgets(config, paths, truth, prior, params):
    if config.budget == 'fixedK':
        return {s: config.budgetK for s in config.strategies}
    if config.budget == 'untilConvergence':
        return {s: None for s in config.strategies}
    face = run_strategy('face', paths, truth, prior=prior, params=params, recordScores=False)
    return {s: (None if s == 'face' else face.probes) for s in config.strategies}


def run_repetition(job, params):
    """Worker: run every strategy of the config on one failure draw.

    Args:
        job (tuple): (failure scenario, repetition index)
        params (dict): 'config' (ExperimentConfig) and 'paths' (path table)

    Returns:
        tuple: report rows and timing rows
    """
    scenario, rep = job
    config, paths = params['config'], params['paths']
    nodes = covered_nodes(paths)
    truth = draw_truth(config, nodes, scenario, rep, params.get('failed'))
    prior, centrality = config.prior_model, config.centrality
    baseline = baseline_classification(paths, truth)
    alpha = alpha_estimates(paths, truth, config.prior)
    budgets = _budgets(config, paths, truth, prior, centrality)
    rows, timing = [], []
    common = dict(repetition=rep, failures=scenario, failed_nodes=len(truth.failed), baseline=baseline, truth=truth)
    for strategy in config.strategies:
        start = time.perf_counter()
        try:
            trace = run_strategy(strategy, paths, truth, budget=budgets[strategy], prior=prior, params=centrality,
                                 cap=config.residualCap, dpHorizon=config.dpHorizon)
        except CapacityError as err:
            logger.warning(f"{strategy} repetition {rep}: {err}")
            timing.append({'strategy': strategy, 'repetition': rep, 'failures': scenario,
                           'wallClockSeconds': time.perf_counter() - start})
            rows.append({**{c: None for c in REPORT_COLUMNS}, 'kind': 'summary', 'strategy': strategy,
                         'repetition': rep, 'failures': scenario, 'failedCount': len(truth.failed),
                         'step': 0, 'probesUsed': 0, 'terminationReason': FAILED})
            continue
        timing.append({'strategy': strategy, 'repetition': rep, 'failures': scenario,
                       'wallClockSeconds': time.perf_counter() - start})
        final = Classification()
        for i, step in enumerate(trace.steps, start=1):
            final = classify(step.scores)
            rows.append(_row('step', strategy, step=i, path_id=step.path_id, works=step.works,
                             classification=final, **common))
        if not trace.steps:
            final = classify(node_scores(strategy, trace.final_view, prior, centrality, config.residualCap))
        rows.append(_row('summary', strategy, step=trace.probes, classification=final,
                         reason=trace.termination, alpha=alpha, **common))
    return rows, timing


def load_external_traces(files):
    """Read externally produced strategy traces into report rows.

    Args:
        files (list): CSV files with at least the columns strategy, repetition, step, a_W, a_B

    Returns:
        pandas.DataFrame: rows in report column order
    """
    frames = []
    for fname in files:
        df = pd.read_csv(fname)
        missing = [c for c in EXTERNAL_REQUIRED if c not in df.columns]
        if missing:
            raise ConfigError(f"externalTraces: {fname} lacks columns {missing}")
        if 'kind' not in df.columns:
            df['kind'] = 'step'
        frames.append(df.reindex(columns=REPORT_COLUMNS))
    return pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=REPORT_COLUMNS)


def _report_frame(rows):
    report = pd.DataFrame(rows, columns=REPORT_COLUMNS)
    for column in NUMERIC_COLUMNS:
        report[column] = pd.to_numeric(report[column], errors='coerce').astype(float)
    return report


def run_experiment(config, outPath=None, nWorkers=1):
    """Run every repetition of every failure scenario and write the reports.

    Files written to outPath: report.csv (per-step and summary rows),
    summary.csv (mean and std per strategy and scenario), timing.csv
    (wall clock per strategy run) and labels.csv (node id table).

    Args:
        config (ExperimentConfig): the experiment
        outPath (str, optional): output folder, nothing is written if None. Defaults to None.
        nWorkers (int, optional): worker processes. Defaults to 1.

    Returns:
        pandas.DataFrame: report
        pandas.DataFrame: summary
    """
    instance = build_instance(config)
    jobs = [(scenario, rep) for scenario in config.scenarios for rep in range(config.repetitions)]
    logger.info(f"running {len(jobs)} repetition(s) of {config.strategies} on {len(instance.paths)} paths.")
    results = parallel_analysis(jobs, instance.params(config), run_repetition, nWorkers)
    rows = [r for rep_rows, _ in results for r in rep_rows]
    timing = pd.DataFrame([t for _, rep_timing in results for t in rep_timing], columns=TIMING_COLUMNS)
    report = _report_frame(rows)
    if config.externalTraces:
        report = pd.concat([report, load_external_traces(config.externalTraces)], ignore_index=True)
    report = report.sort_values(['failures', 'strategy', 'repetition', 'kind', 'step'],
                                kind='mergesort').reset_index(drop=True)
    summary = summarize(report)
    if outPath is not None:
        pbio.write_csv(report, os.path.join(outPath, 'report.csv'))
        pbio.write_csv(summary, os.path.join(outPath, 'summary.csv'))
        pbio.write_csv(timing, os.path.join(outPath, 'timing.csv'))
        pbio.write_label_table(instance.labels, os.path.join(outPath, 'labels.csv'))
        logger.info(f"reports written to {outPath}")
    return report, summary


def run_dynamic_repetition(job, params):
    """Worker: one dynamic strategy run, returns its step rows and detection row."""
    strategy, rep = job
    config, paths = params['config'], params['paths']
    initial = draw_truth(config, covered_nodes(paths), config.scenarios[0], rep, params.get('failed'))
    try:
        trace = run_dynamic(strategy, paths, config.dynamic_config(), seed=config.masterSeed, repetition=rep,
                            prior=config.prior_model, params=config.centrality, cap=config.residualCap,
                            initial=initial)
    except CapacityError as err:
        logger.warning(f"{strategy} repetition {rep}: {err}")
        return [], {'strategy': strategy, 'repetition': rep, 'contradictions': None, 'status': FAILED}
    rows = [{'strategy': strategy, 'repetition': rep, 't': s.t, 'pathId': s.path_id, 'works': s.works,
             'reprobe': s.reprobe, 'windowSize': len(s.window), 'truncated': s.truncated,
             'failedCount': len(truth.failed), 'working': len(s.classification.working),
             'broken': len(s.classification.broken), 'precision': s.precision, 'recall': s.recall}
            for s, truth in zip(trace.steps, trace.truths)]
    detection = {'strategy': strategy, 'repetition': rep, 'contradictions': trace.contradictions,
                 **trace.detection().as_dict(), 'status': 'ok'}
    return rows, detection


def run_dynamic_experiment(config, outPath=None, nWorkers=1):
    """Run the dynamic strategies and write dynamic.csv and detection.csv.

    Returns:
        pandas.DataFrame: per-step rows
        pandas.DataFrame: change detection per strategy and repetition
    """
    if config.dynamic is None:
        raise ConfigError("dynamic: the config has no dynamic section.")
    instance = build_instance(config)
    strategies = list(config.dynamic.get('strategies', DYNAMIC_STRATEGIES))
    repetitions = config.dynamic.get('repetitions', config.repetitions)
    jobs = [(s, rep) for s in strategies for rep in range(repetitions)]
    logger.info(f"running {len(jobs)} dynamic run(s) over {config.dynamic_config().horizon} steps.")
    results = parallel_analysis(jobs, instance.params(config), run_dynamic_repetition, nWorkers)
    steps = pd.DataFrame([r for rows, _ in results for r in rows], columns=DYNAMIC_COLUMNS)
    detection = pd.DataFrame([d for _, d in results])
    steps = steps.sort_values(['strategy', 'repetition', 't'], kind='mergesort').reset_index(drop=True)
    detection = detection.sort_values(['strategy', 'repetition'], kind='mergesort').reset_index(drop=True)
    if outPath is not None:
        pbio.write_csv(steps, os.path.join(outPath, 'dynamic.csv'))
        pbio.write_csv(detection, os.path.join(outPath, 'detection.csv'))
        pbio.write_label_table(instance.labels, os.path.join(outPath, 'labels.csv'))
    return steps, detection
