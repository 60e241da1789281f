import pandas as pd
import pytest

from pbnt.metrics import (Classification, accuracy, change_detection, classify, literal_r2, precision_recall,
                          rank_metrics, summarize)
from pbnt.topology import GroundTruth


def test_classify_scores():
    c = classify({0: 0.0, 1: 1.0, 2: 0.3, 3: 0.3})
    assert c.working == {0}
    assert c.broken == {1}
    assert c.ranking == (1, 2, 3, 0)
    assert c.state(0) == 'W'
    assert c.state(1) == 'F'
    assert c.state(2) is None


def test_classification_rejects_overlap():
    with pytest.raises(ValueError):
        Classification({1}, {1})


def test_accuracy_against_baseline():
    baseline = Classification({0, 1, 2}, {3})
    assert accuracy(Classification({0, 1}, ()), baseline) == (pytest.approx(2 / 3), 0.0)
    assert accuracy(Classification({0}, ()), Classification({0}, ())) == (1.0, 1.0)


def test_rank_metrics():
    r1, r2 = rank_metrics([5, 3, 1, 2], {3, 1})
    assert r1 == 0.5
    assert r2 == pytest.approx(2 / 3)
    assert literal_r2([5, 3, 1, 2], {3, 1}) == 1.0
    assert rank_metrics([3, 1, 5], {3, 1}) == (1.0, 1.0)


def test_rank_metrics_ignore_unranked_failures():
    assert rank_metrics([1, 2], {7}) == (None, None)
    assert rank_metrics([1, 2], {1, 7}) == (1.0, 1.0)


def test_precision_recall():
    truth = GroundTruth({1, 2})
    nodes = {0, 1, 2, 3}
    assert precision_recall(Classification({0}, {1}), truth, nodes) == (1.0, 0.5)
    precision, recall = precision_recall(Classification({0, 2}, {1}), truth, nodes)
    assert precision == pytest.approx(2 / 3)
    assert recall == pytest.approx(2 / 3)
    assert precision_recall(Classification(), truth, set()) == (1.0, 1.0)


def test_change_detection():
    truths = [GroundTruth(f) for f in ({2}, {0}, {0, 2}, {0, 2}, {2}, {2})]
    states = [({0}, ()), ({0}, ()), ((), ()), ((), {0}), ((), {0}), ({0}, ())]
    classifications = [Classification(w, b) for w, b in states]
    stats = change_detection(classifications, truths, [0, 1, 2])
    # node 0: W->F at 1 seen at 3, F->W at 4 seen at 5; node 2 flips twice unseen
    assert stats.changes_wf == 2
    assert stats.changes_fw == 2
    assert stats.pct_wf == 50.0
    assert stats.pct_fw == 50.0
    assert stats.time_wf == 2.0
    assert stats.time_fw == 1.0
    assert stats.time_wf_std == 0.0
    assert set(stats.as_dict()) == {'pctFW', 'pctWF', 'timeFW', 'timeFWStd', 'timeWF', 'timeWFStd',
                                    'changesFW', 'changesWF'}


def test_change_detection_without_changes():
    truths = [GroundTruth()] * 3
    stats = change_detection([Classification()] * 3, truths, [0])
    assert stats.pct_fw is None
    assert stats.pct_wf is None
    assert stats.time_wf is None
    with pytest.raises(ValueError):
        change_detection([Classification()], truths, [0])


def test_summarize_groups_summary_rows():
    report = pd.DataFrame([
        {'kind': 'step', 'strategy': 'pop', 'failures': 1, 'a_W': 0.0, 'probesUsed': None},
        {'kind': 'summary', 'strategy': 'pop', 'failures': 1, 'a_W': 1.0, 'probesUsed': 4},
        {'kind': 'summary', 'strategy': 'pop', 'failures': 1, 'a_W': 0.5, 'probesUsed': 6},
        {'kind': 'summary', 'strategy': 'face', 'failures': 1, 'a_W': 1.0, 'probesUsed': 4},
    ])
    summary = summarize(report)
    assert list(summary.columns) == ['strategy', 'failures', 'repetitions', 'a_WMean', 'a_WStd',
                                     'probesUsedMean', 'probesUsedStd']
    assert summary['strategy'].tolist() == ['face', 'pop']
    assert summary['repetitions'].tolist() == [1, 2]
    pop = summary.iloc[1]
    assert pop['a_WMean'] == pytest.approx(0.75)
    assert pop['a_WStd'] == pytest.approx(0.5 ** 0.5 / 2)
    assert pop['probesUsedMean'] == 5.0
    assert summary.iloc[0]['a_WStd'] == 0.0
