"""All-relevant feature selection with shadow features, plus the
cross-group consensus reduction.

Each iteration appends a permuted shadow copy of every active column,
fits a tree-ensemble classifier, and scores a hit for a real feature
whose importance exceeds the best shadow importance.  Hit counts are
tested against Binomial(iterations, 0.5), two-sided at alpha with a
Bonferroni correction over the original feature count; decisions latch,
and rejected columns leave the design matrix.  Tentative features at
the iteration cap are not accepted.

Consensus over groups keeps features accepted in every group, then
retains only the highest-importance parameterization per (function,
channel) pair.
"""

import json
import logging
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import binom

from ._base import BaseEstimator, check_is_fitted
from .features.catalog import FeatureSpec
from .validation import check_X_y

__all__ = [
    "BorutaSelector",
    "boruta_select",
    "GroupSelection",
    "SelectionReport",
    "select_on_matrix",
    "consensus_select",
]

log = logging.getLogger(__name__)


class BorutaSelector(BaseEstimator):
    """Shadow-feature relevance test driven by ensemble importances.

    Attributes after fit: ``accepted_``, ``rejected_``, ``tentative_``
    (sorted column index arrays), ``importances_`` (per-column mean
    importance over the iterations in which the column was active) and
    ``n_iterations_``.
    """

    def __init__(self, n_trees=100, max_iter=150, alpha=0.05,
                 random_state=None):
        self.n_trees = n_trees
        self.max_iter = max_iter
        self.alpha = alpha
        self.random_state = random_state

    def fit(self, X, y):
        from .ensemble import ExtraTreesClassifier

        X, y = check_X_y(X, y)
        labels, label_counts = np.unique(y, return_counts=True)
        if labels.size < 2:
            raise ValueError("need at least 2 classes")
        if label_counts.min() < 2:
            raise ValueError("every class needs at least 2 rows")
        if self.max_iter < 0:
            raise ValueError("max_iter must be >= 0")
        n, p = X.shape
        decisions = np.zeros(p, dtype=np.int64)  # 0 tentative, 1 in, -1 out
        hits = np.zeros(p, dtype=np.int64)
        imp_sums = np.zeros(p)
        imp_iters = np.zeros(p, dtype=np.int64)
        # two one-sided tails at alpha/2 make the test two-sided at alpha
        threshold = (self.alpha / 2.0) / p

        ss = (self.random_state
              if isinstance(self.random_state, np.random.SeedSequence)
              else np.random.SeedSequence(self.random_state))
        iterations = 0
        for it in range(1, self.max_iter + 1):
            active = np.flatnonzero(decisions >= 0)
            if active.size == 0 or not np.any(decisions == 0):
                break
            perm_ss, forest_ss = ss.spawn(2)
            rng = np.random.default_rng(perm_ss)
            real = X[:, active]
            shadows = np.empty_like(real)
            for c in range(real.shape[1]):
                shadows[:, c] = real[rng.permutation(n), c]
            clf = ExtraTreesClassifier(
                n_trees=self.n_trees, random_state=forest_ss
            ).fit(np.hstack([real, shadows]), y)
            imp = clf.feature_importances_
            real_imp = imp[: active.size]
            shadow_best = imp[active.size :].max()
            hits[active[real_imp > shadow_best]] += 1
            imp_sums[active] += real_imp
            imp_iters[active] += 1
            iterations = it

            undecided = np.flatnonzero(decisions == 0)
            p_accept = binom.sf(hits[undecided] - 1, it, 0.5)
            p_reject = binom.cdf(hits[undecided], it, 0.5)
            decisions[undecided[p_accept <= threshold]] = 1
            decisions[undecided[p_reject <= threshold]] = -1

        self.accepted_ = np.flatnonzero(decisions == 1)
        self.rejected_ = np.flatnonzero(decisions == -1)
        self.tentative_ = np.flatnonzero(decisions == 0)
        self.importances_ = np.where(imp_iters > 0, imp_sums / np.maximum(imp_iters, 1), 0.0)
        self.n_iterations_ = iterations
        return self

    def support_mask(self):
        check_is_fitted(self, "accepted_")
        mask = np.zeros(self.importances_.size, dtype=bool)
        mask[self.accepted_] = True
        return mask


def boruta_select(X, y, max_iter=150, random_state=None, *, n_trees=100,
                  alpha=0.05):
    """Functional form; returns (accepted, rejected, tentative) indices."""
    sel = BorutaSelector(
        n_trees=n_trees, max_iter=max_iter, alpha=alpha,
        random_state=random_state,
    ).fit(X, y)
    return sel.accepted_, sel.rejected_, sel.tentative_


@dataclass
class GroupSelection:
    """Selection outcome for one (fid, L) group."""

    fid: int
    L: int
    accepted: list
    rejected: list
    tentative: list
    importances: dict  # column name -> mean importance while active


def select_on_matrix(matrix, *, label_key="variant", max_iter=150,
                     n_trees=100, alpha=0.05, random_state=None):
    """Run the selector on one group's FeatureMatrix."""
    fids = set(matrix.meta_array("fid").tolist())
    lengths = set(m["L"] for m in matrix.meta)
    if len(fids) != 1 or len(lengths) != 1:
        raise ValueError(
            f"group must be a single (fid, L) pair, got fids={sorted(fids)} "
            f"lengths={sorted(lengths)}"
        )
    y = matrix.meta_array(label_key)
    sel = BorutaSelector(
        n_trees=n_trees, max_iter=max_iter, alpha=alpha,
        random_state=random_state,
    ).fit(matrix.values, y)
    cols = matrix.columns
    return GroupSelection(
        fid=int(next(iter(fids))),
        L=int(next(iter(lengths))),
        accepted=[matrix.specs[i] for i in sel.accepted_],
        rejected=[matrix.specs[i] for i in sel.rejected_],
        tentative=[matrix.specs[i] for i in sel.tentative_],
        importances={cols[i]: float(v) for i, v in enumerate(sel.importances_)},
    )


class SelectionReport:
    """Consensus set plus the per-group decisions that produced it."""

    def __init__(self, groups, consensus, status):
        self.groups = list(groups)
        self.consensus = list(consensus)  # (FeatureSpec, mean importance)
        self.status = status

    def consensus_specs(self):
        return [spec for spec, _ in self.consensus]

    def channel_summary(self):
        """Per-channel selected counts and importance totals."""
        from .trace import CHANNELS

        out = {}
        for channel in CHANNELS:
            entries = [imp for spec, imp in self.consensus
                       if spec.channel == channel]
            out[channel] = {
                "selected": len(entries),
                "importance_total": float(np.sum(entries)) if entries else 0.0,
                "importance_mean": float(np.mean(entries)) if entries else 0.0,
            }
        return out

    def to_dict(self):
        return {
            "status": self.status,
            "groups": [
                {
                    "fid": g.fid,
                    "L": g.L,
                    "accepted": [s.column_name() for s in g.accepted],
                    "rejected": [s.column_name() for s in g.rejected],
                    "tentative": [s.column_name() for s in g.tentative],
                }
                for g in self.groups
            ],
            "consensus": [
                {"column": spec.column_name(), "importance": imp}
                for spec, imp in self.consensus
            ],
            "channels": self.channel_summary(),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)


def consensus_select(groups):
    """Intersect per-group accepted sets and dedup parameterizations.

    Importance attached to a consensus feature is its mean importance
    across groups; within a (function, channel) pair only the highest
    importance parameterization survives.
    """
    groups = list(groups)
    if not groups:
        raise ValueError("no groups given")
    accepted_sets = [{s.column_name() for s in g.accepted} for g in groups]
    common = set.intersection(*accepted_sets)
    spec_by_col = {
        s.column_name(): s for g in groups for s in g.accepted
    }
    scored = []
    for col in common:
        imps = [g.importances[col] for g in groups if col in g.importances]
        scored.append((spec_by_col[col], float(np.mean(imps))))
    best = {}
    for spec, imp in scored:
        key = (spec.function_name, spec.channel)
        if key not in best or imp > best[key][1]:
            best[key] = (spec, imp)
    consensus = sorted(
        best.values(), key=lambda item: (-item[1], item[0].column_name())
    )
    status = "ok"
    if not consensus:
        status = "empty_consensus"
        log.warning("consensus selection is empty across %d groups", len(groups))
        warnings.warn("consensus selection is empty", stacklevel=2)
    return SelectionReport(groups, consensus, status)
