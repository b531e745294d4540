import json

import numpy as np
import pytest

from estrace.features import FeatureMatrix, FeatureSpec
from estrace.selection import (
    BorutaSelector,
    GroupSelection,
    boruta_select,
    consensus_select,
    select_on_matrix,
)


def _planted(rng, n=160, noise=9):
    """Binary labels, one informative column, in-sample-null noise.

    Each noise column assigns the same value multiset to both classes,
    so every threshold splits the classes evenly and the column scores
    at shadow level.  Plain iid noise would not do: its finite-sample
    association with y is real signal to an all-relevant selector.
    """
    half = n // 2
    y = np.repeat([0, 1], half)
    cols = [rng.normal(size=n) + 3.0 * y]
    for _ in range(noise):
        vals = rng.normal(size=half)
        col = np.concatenate([vals[rng.permutation(half)],
                              vals[rng.permutation(half)]])
        cols.append(col)
    return np.column_stack(cols), y


def test_planted_column_accepted_noise_rejected(rng):
    X, y = _planted(rng)
    sel = BorutaSelector(n_trees=40, max_iter=150, random_state=7).fit(X, y)
    assert 0 in sel.accepted_
    assert len(sel.rejected_) >= 7
    assert sel.n_iterations_ <= 150
    mask = sel.support_mask()
    assert mask[0] and mask.size == X.shape[1]


def test_decisions_partition_columns(rng):
    X, y = _planted(rng)
    sel = BorutaSelector(n_trees=25, max_iter=25, random_state=3).fit(X, y)
    merged = np.concatenate([sel.accepted_, sel.rejected_, sel.tentative_])
    assert sorted(merged.tolist()) == list(range(X.shape[1]))


def test_same_seed_same_decisions(rng):
    X, y = _planted(rng, n=80)
    a = BorutaSelector(n_trees=20, max_iter=20, random_state=11).fit(X, y)
    b = BorutaSelector(n_trees=20, max_iter=20, random_state=11).fit(X, y)
    assert np.array_equal(a.accepted_, b.accepted_)
    assert np.array_equal(a.rejected_, b.rejected_)
    assert np.array_equal(a.importances_, b.importances_)


def test_seedsequence_accepted(rng):
    X, y = _planted(rng, n=80)
    ss = np.random.SeedSequence((1, 2, 3))
    sel = BorutaSelector(n_trees=15, max_iter=10, random_state=ss).fit(X, y)
    assert sel.n_iterations_ == 10 or sel.tentative_.size == 0


def test_zero_iterations_leaves_all_tentative(rng):
    X, y = _planted(rng, n=40)
    sel = BorutaSelector(max_iter=0, random_state=0).fit(X, y)
    assert sel.accepted_.size == 0
    assert sel.rejected_.size == 0
    assert sel.tentative_.size == X.shape[1]
    assert np.all(sel.importances_ == 0.0)


def test_fit_validation(rng):
    X = rng.normal(size=(10, 3))
    with pytest.raises(ValueError):
        BorutaSelector().fit(X, np.zeros(10))  # single class
    with pytest.raises(ValueError):
        BorutaSelector().fit(X, np.array([0] * 9 + [1]))  # class with 1 row
    with pytest.raises(ValueError):
        BorutaSelector(max_iter=-1).fit(X, np.repeat([0, 1], 5))


def test_functional_form_matches_estimator(rng):
    X, y = _planted(rng, n=80)
    acc, rej, tent = boruta_select(X, y, max_iter=15, random_state=5, n_trees=20)
    sel = BorutaSelector(n_trees=20, max_iter=15, random_state=5).fit(X, y)
    assert np.array_equal(acc, sel.accepted_)
    assert np.array_equal(rej, sel.rejected_)
    assert np.array_equal(tent, sel.tentative_)


def _toy_matrix(rng, fid=1, L=100, n_runs=8):
    specs = [
        FeatureSpec("mean", "sigma"),
        FeatureSpec("median", "sigma"),
        FeatureSpec("mean", "f_best"),
    ]
    variants = ["standard", "tpa"]
    meta = []
    rows = []
    for variant in variants:
        for run in range(n_runs):
            meta.append({"variant": variant, "fid": fid, "run": run, "L": L,
                         "targets_hit": 0})
            shift = 2.5 if variant == "tpa" else 0.0
            rows.append([rng.normal(shift), rng.normal(), rng.normal()])
    return FeatureMatrix(specs, np.asarray(rows), meta).scale_unit_interval()


def test_select_on_matrix_returns_group_selection(rng):
    m = _toy_matrix(rng)
    got = select_on_matrix(m, max_iter=30, n_trees=25, random_state=2)
    assert isinstance(got, GroupSelection)
    assert (got.fid, got.L) == (1, 100)
    accepted_cols = [s.column_name() for s in got.accepted]
    assert "sigma__mean" in accepted_cols
    assert set(got.importances) == set(m.columns)


def test_select_on_matrix_rejects_mixed_groups(rng):
    a = _toy_matrix(rng, fid=1)
    b = _toy_matrix(rng, fid=2)
    mixed = FeatureMatrix(
        a.specs, np.vstack([a.values, b.values]), a.meta + b.meta
    )
    with pytest.raises(ValueError, match="single"):
        select_on_matrix(mixed, max_iter=5)


def _group(fid, L, accepted, importances):
    return GroupSelection(
        fid=fid, L=L,
        accepted=[FeatureSpec.parse(c) for c in accepted],
        rejected=[], tentative=[],
        importances=importances,
    )


def test_consensus_is_intersection():
    g1 = _group(1, 100, ["sigma__mean", "sigma__median"],
                {"sigma__mean": 0.5, "sigma__median": 0.4})
    g2 = _group(2, 100, ["sigma__mean"],
                {"sigma__mean": 0.3, "sigma__median": 0.2})
    rep = consensus_select([g1, g2])
    assert [s.column_name() for s in rep.consensus_specs()] == ["sigma__mean"]
    assert rep.status == "ok"
    assert rep.consensus[0][1] == pytest.approx(0.4)  # mean of 0.5, 0.3


def test_consensus_keeps_best_parameterization_per_pair():
    cols = ["sigma__autocorrelation__2", "sigma__autocorrelation__5"]
    g1 = _group(1, 100, cols, {cols[0]: 0.2, cols[1]: 0.6})
    g2 = _group(2, 100, cols, {cols[0]: 0.3, cols[1]: 0.5})
    rep = consensus_select([g1, g2])
    names = [s.column_name() for s in rep.consensus_specs()]
    assert names == ["sigma__autocorrelation__5"]


def test_consensus_sorted_by_importance_then_name():
    g = _group(1, 100,
               ["sigma__mean", "f_best__mean", "v_norm__median"],
               {"sigma__mean": 0.2, "f_best__mean": 0.2,
                "v_norm__median": 0.9})
    rep = consensus_select([g])
    names = [s.column_name() for s in rep.consensus_specs()]
    assert names == ["v_norm__median", "f_best__mean", "sigma__mean"]


def test_empty_consensus_warns():
    g1 = _group(1, 100, ["sigma__mean"], {"sigma__mean": 0.5})
    g2 = _group(2, 100, ["sigma__median"], {"sigma__median": 0.5})
    with pytest.warns(UserWarning, match="empty"):
        rep = consensus_select([g1, g2])
    assert rep.status == "empty_consensus"
    assert rep.consensus == []
    with pytest.raises(ValueError):
        consensus_select([])


def test_report_serialization_round_trip():
    g = _group(3, 500, ["sigma__mean"], {"sigma__mean": 0.7})
    rep = consensus_select([g])
    d = json.loads(rep.to_json())
    assert d["status"] == "ok"
    assert d["groups"][0]["fid"] == 3
    assert d["consensus"][0]["column"] == "sigma__mean"
    assert d["channels"]["sigma"]["selected"] == 1
    assert d["channels"]["f_best"]["selected"] == 0
