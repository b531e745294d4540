"""Cross-validation harnesses: shuffled K-fold and leave-one-group-out.

Estimators are cloned per fold via get_params/set_params and reseeded
from the harness seed, so CV results depend only on (data, estimator
params, random_state).
"""

import hashlib
import json

import numpy as np

from .metrics import accuracy, f1_macro, r2_score
from .validation import check_array

__all__ = ["CVResult", "clone", "kfold_cv", "logo_cv", "cv_table_csv"]


def clone(estimator, **overrides):
    """Fresh unfitted copy with the same constructor parameters."""
    params = estimator.get_params()
    params.update(overrides)
    return type(estimator)(**params)


class CVResult:
    """Per-fold metrics plus the fold assignment that produced them."""

    def __init__(self, task, fold_metrics, assignment, params):
        self.task = task
        self.fold_metrics = list(fold_metrics)
        self.assignment = np.asarray(assignment)
        self.params = dict(params)

    @property
    def metric_names(self):
        return sorted(self.fold_metrics[0])

    def mean(self, name):
        return float(np.mean([m[name] for m in self.fold_metrics]))

    def std(self, name):
        return float(np.std([m[name] for m in self.fold_metrics]))

    def assignment_digest(self):
        payload = ",".join(str(v) for v in self.assignment)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def to_dict(self):
        return {
            "task": self.task,
            "folds": self.fold_metrics,
            "mean": {n: self.mean(n) for n in self.metric_names},
            "std": {n: self.std(n) for n in self.metric_names},
            "assignment_digest": self.assignment_digest(),
            "params": {
                k: v for k, v in self.params.items()
                if isinstance(v, (int, float, str, bool, type(None)))
            },
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)


def _fold_assignment(y, k, stratify, rng):
    """Fold index per row; stratified dealing keeps labels balanced."""
    n = len(y)
    if k < 2:
        raise ValueError("need at least 2 folds")
    if k > n:
        raise ValueError(f"cannot make {k} folds from {n} rows")
    assignment = np.empty(n, dtype=np.int64)
    if stratify:
        order = []
        for label in np.unique(y):
            members = np.flatnonzero(y == label)
            order.extend(members[rng.permutation(members.size)])
        order = np.asarray(order)
    else:
        order = rng.permutation(n)
    # deal the shuffled stream round-robin; every fold gets >= floor(n/k)
    for pos, row in enumerate(order):
        assignment[row] = pos % k
    return assignment


def _eval_fold(task, y_test, y_hat):
    if task == "classify":
        return {"accuracy": accuracy(y_test, y_hat), "f1_macro": f1_macro(y_test, y_hat)}
    return {"r2": r2_score(y_test, y_hat)}


def _check_task(task):
    if task not in ("classify", "regress"):
        raise ValueError(f"task must be 'classify' or 'regress', got {task!r}")


def kfold_cv(estimator, X, y, *, k=24, task="classify", stratify=True,
             random_state=None):
    """Shuffled K-fold CV; stratification applies to classification only."""
    _check_task(task)
    X = check_array(X, ndim=2, name="X")
    y = np.asarray(y)
    if y.shape[0] != X.shape[0]:
        raise ValueError("X and y disagree on row count")
    ss = (random_state if isinstance(random_state, np.random.SeedSequence)
          else np.random.SeedSequence(random_state))
    shuffle_ss, *fold_ss = ss.spawn(k + 1)
    rng = np.random.default_rng(shuffle_ss)
    assignment = _fold_assignment(
        y, k, stratify and task == "classify", rng
    )
    folds = []
    for fold in range(k):
        test = assignment == fold
        model = clone(estimator, random_state=fold_ss[fold])
        model.fit(X[~test], y[~test])
        folds.append(_eval_fold(task, y[test], model.predict(X[test])))
    return CVResult(task, folds, assignment, estimator.get_params())


def logo_cv(estimator, X, y, groups, *, task="classify", random_state=None):
    """Leave-one-group-out CV; returns {group: fold metrics}."""
    _check_task(task)
    X = check_array(X, ndim=2, name="X")
    y = np.asarray(y)
    groups = np.asarray(groups)
    if not (y.shape[0] == groups.shape[0] == X.shape[0]):
        raise ValueError("X, y and groups disagree on row count")
    unique = np.unique(groups)
    if unique.size < 2:
        raise ValueError("leave-one-group-out needs at least 2 groups")
    ss = (random_state if isinstance(random_state, np.random.SeedSequence)
          else np.random.SeedSequence(random_state))
    seeds = ss.spawn(unique.size)
    out = {}
    for group, seed in zip(unique, seeds):
        test = groups == group
        model = clone(estimator, random_state=seed)
        model.fit(X[~test], y[~test])
        key = group.item() if hasattr(group, "item") else group
        out[key] = _eval_fold(task, y[test], model.predict(X[test]))
    return out


def cv_table_csv(rows):
    """Render {fid: {metric: value}} as a fid-per-row CSV string."""
    if not rows:
        raise ValueError("no rows to render")
    metric_names = sorted({m for row in rows.values() for m in row})
    lines = ["fid," + ",".join(metric_names)]
    for fid in sorted(rows):
        cells = [f"{rows[fid][m]:.6f}" if m in rows[fid] else "" for m in metric_names]
        lines.append(f"{fid}," + ",".join(cells))
    return "\n".join(lines) + "\n"
