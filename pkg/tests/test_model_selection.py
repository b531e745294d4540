import json

import numpy as np
import pytest

from estrace import BaseEstimator
from estrace.ensemble import ExtraTreesClassifier
from estrace.model_selection import CVResult, clone, cv_table_csv, kfold_cv, logo_cv


class MajorityStub(BaseEstimator):
    """Predicts the most common training label; ignores features."""

    def __init__(self, random_state=None):
        self.random_state = random_state

    def fit(self, X, y):
        labels, counts = np.unique(y, return_counts=True)
        self.label_ = labels[np.argmax(counts)]
        return self

    def predict(self, X):
        return np.full(np.asarray(X).shape[0], self.label_)


class MeanStub(BaseEstimator):
    def __init__(self, random_state=None):
        self.random_state = random_state

    def fit(self, X, y):
        self.mean_ = float(np.mean(y))
        return self

    def predict(self, X):
        return np.full(np.asarray(X).shape[0], self.mean_)


def _blobs(rng, n_per=12, n_classes=3):
    X = np.concatenate(
        [rng.normal(4.0 * c, 0.3, size=(n_per, 2)) for c in range(n_classes)]
    )
    y = np.repeat(np.arange(n_classes), n_per)
    return X, y


def test_clone_copies_params_and_drops_fitted_state():
    est = MajorityStub(random_state=3).fit(np.zeros((2, 1)), [1, 1])
    fresh = clone(est)
    assert fresh.get_params() == {"random_state": 3}
    assert not hasattr(fresh, "label_")
    assert clone(est, random_state=9).random_state == 9


def test_stratified_folds_balance_labels_exactly(rng):
    X, y = _blobs(rng)
    res = kfold_cv(MajorityStub(), X, y, k=4, random_state=0)
    for fold in range(4):
        labels = y[res.assignment == fold]
        assert [int(n) for n in np.bincount(labels)] == [3, 3, 3]


def test_kfold_deterministic_and_seed_sensitive(rng):
    X, y = _blobs(rng)
    a = kfold_cv(MajorityStub(), X, y, k=4, random_state=11)
    b = kfold_cv(MajorityStub(), X, y, k=4, random_state=11)
    c = kfold_cv(MajorityStub(), X, y, k=4, random_state=12)
    assert np.array_equal(a.assignment, b.assignment)
    assert a.fold_metrics == b.fold_metrics
    assert a.assignment_digest() == b.assignment_digest()
    assert not np.array_equal(a.assignment, c.assignment)


def test_kfold_accepts_seedsequence(rng):
    X, y = _blobs(rng)
    ss = np.random.SeedSequence((4, 2))
    a = kfold_cv(MajorityStub(), X, y, k=3, random_state=ss)
    b = kfold_cv(MajorityStub(), X, y, k=3, random_state=np.random.SeedSequence((4, 2)))
    assert np.array_equal(a.assignment, b.assignment)


def test_kfold_validation(rng):
    X, y = _blobs(rng)
    with pytest.raises(ValueError):
        kfold_cv(MajorityStub(), X, y, k=1)
    with pytest.raises(ValueError):
        kfold_cv(MajorityStub(), X, y, k=len(y) + 1)
    with pytest.raises(ValueError):
        kfold_cv(MajorityStub(), X, y[:-1])
    with pytest.raises(ValueError):
        kfold_cv(MajorityStub(), X, y, task="rank")


def test_kfold_metric_keys_per_task(rng):
    X, y = _blobs(rng)
    cls = kfold_cv(MajorityStub(), X, y, k=3, random_state=0)
    assert cls.metric_names == ["accuracy", "f1_macro"]
    reg = kfold_cv(MeanStub(), X, y.astype(float), k=3, task="regress", random_state=0)
    assert reg.metric_names == ["r2"]


def test_cvresult_report_shape(rng):
    X, y = _blobs(rng)
    res = kfold_cv(MajorityStub(random_state=7), X, y, k=3, random_state=5)
    d = res.to_dict()
    assert sorted(d) == ["assignment_digest", "folds", "mean", "params", "std", "task"]
    assert len(d["folds"]) == 3
    assert d["mean"]["accuracy"] == pytest.approx(res.mean("accuracy"))
    assert d["params"] == {"random_state": 7}
    assert json.loads(res.to_json()) == json.loads(res.to_json())


def test_forest_under_kfold_learns_blobs(rng):
    X, y = _blobs(rng, n_per=10)
    res = kfold_cv(
        ExtraTreesClassifier(n_trees=15), X, y, k=3, random_state=2
    )
    assert res.mean("accuracy") > 0.9


def test_logo_holds_out_each_group(rng):
    X, y = _blobs(rng)
    groups = np.tile([10, 20, 30], len(y) // 3)
    out = logo_cv(MajorityStub(), X, y, groups, random_state=1)
    assert sorted(out) == [10, 20, 30]
    for metrics in out.values():
        assert sorted(metrics) == ["accuracy", "f1_macro"]
    again = logo_cv(MajorityStub(), X, y, groups, random_state=1)
    assert out == again


def test_logo_needs_two_groups(rng):
    X, y = _blobs(rng)
    with pytest.raises(ValueError):
        logo_cv(MajorityStub(), X, y, np.zeros(len(y)))
    with pytest.raises(ValueError):
        logo_cv(MajorityStub(), X, y, np.zeros(len(y) - 1))


def test_cv_table_csv_format():
    table = cv_table_csv({2: {"b": 0.5, "a": 1.0}, 1: {"a": 0.25}})
    assert table == "fid,a,b\n1,0.250000,\n2,1.000000,0.500000\n"
    with pytest.raises(ValueError):
        cv_table_csv({})
