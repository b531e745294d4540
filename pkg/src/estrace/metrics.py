"""Evaluation metrics with pinned degenerate-case conventions."""

import numpy as np

__all__ = ["accuracy", "f1_macro", "r2_score"]


def _check_pair(y_true, y_pred):
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.ndim != 1 or y_pred.ndim != 1:
        raise ValueError("y_true and y_pred must be 1-D")
    if y_true.size == 0:
        raise ValueError("empty input")
    if y_true.shape != y_pred.shape:
        raise ValueError(
            f"length mismatch: {y_true.shape[0]} vs {y_pred.shape[0]}"
        )
    return y_true, y_pred


def accuracy(y_true, y_pred):
    y_true, y_pred = _check_pair(y_true, y_pred)
    return float(np.mean(y_true == y_pred))


def f1_macro(y_true, y_pred):
    """Unweighted mean over labels of 2pr/(p+r).

    The label set is the sorted union of both arrays; a label with
    p + r = 0 contributes 0.
    """
    y_true, y_pred = _check_pair(y_true, y_pred)
    labels = np.unique(np.concatenate([y_true, y_pred]))
    scores = []
    for label in labels:
        tp = np.count_nonzero((y_true == label) & (y_pred == label))
        pred_pos = np.count_nonzero(y_pred == label)
        true_pos = np.count_nonzero(y_true == label)
        p = tp / pred_pos if pred_pos else 0.0
        r = tp / true_pos if true_pos else 0.0
        scores.append(2 * p * r / (p + r) if p + r > 0 else 0.0)
    return float(np.mean(scores))


def r2_score(y_true, y_pred):
    """1 - SS_res / SS_tot.

    Constant y_true is degenerate: exact predictions score 1.0, any
    error scores 0.0.
    """
    y_true, y_pred = _check_pair(
        np.asarray(y_true, dtype=float), np.asarray(y_pred, dtype=float)
    )
    ss_res = float(np.sum((y_true - y_pred) ** 2))
    ss_tot = float(np.sum((y_true - np.mean(y_true)) ** 2))
    if ss_tot == 0.0:
        return 1.0 if ss_res == 0.0 else 0.0
    return 1.0 - ss_res / ss_tot
