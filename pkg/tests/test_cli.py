"""End-to-end pipeline runs on a deliberately tiny grid.

Two variants, two fids, three runs, sixty generations: every stage
finishes in seconds while still exercising the artifact handshake
(digest stamping, resume, refuse-to-mix) the full protocol relies on.
"""

import json
import shutil

import numpy as np
import pytest

from estrace import cli
from estrace.cluster import parse_newick

INI = """\
[experiment]
variants = standard, tpa
fids = 1, 10
dim = 5
runs = 3
lengths = 10, 60
budget_generations = 60
master_seed = 0
out_dir = {out}
jobs = 1

[select]
trees = 25
max_iter = 25
alpha = 0.05

[learn]
cv_folds = 3
forest_trees = 40
"""


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """Run every stage once; tests below inspect the artifacts."""
    root = tmp_path_factory.mktemp("cli")
    out = root / "out"
    ini = root / "exp.ini"
    ini.write_text(INI.format(out=out))
    for argv in (
        ["generate", "--config", str(ini)],
        ["extract", "--config", str(ini)],
        ["extract", "--config", str(ini), "--catalog", "raw"],
        ["select", "--config", str(ini)],
        ["classify", "--config", str(ini)],
        ["cluster", "--config", str(ini)],
        ["regress", "--config", str(ini)],
        ["report", "--config", str(ini)],
    ):
        assert cli.main(argv) == 0, f"stage {argv[0]} failed"
    return {"ini": ini, "out": out}


def _json(path):
    with open(path) as fh:
        return json.load(fh)


def test_generate_writes_traces_and_resumes(pipeline):
    traces = sorted((pipeline["out"] / "traces").glob("*.csv"))
    assert len(traces) == 2 * 2 * 3
    names = {p.stem for p in traces}
    assert "standard_1_0" in names and "tpa_10_2" in names
    assert all(p.with_suffix(".json").exists() for p in traces)
    before = {p: p.stat().st_mtime_ns for p in traces}
    assert cli.main(["generate", "--config", str(pipeline["ini"])]) == 0
    after = {p: p.stat().st_mtime_ns for p in traces}
    assert before == after  # everything was current; nothing re-ran


def test_extract_writes_scaled_matrices(pipeline):
    for catalog, width in (("selected", 32), ("raw", 592)):
        for L in (10, 60):
            path = pipeline["out"] / "features" / f"features_{catalog}_L{L}.csv"
            header = path.read_text().splitlines()[0].split(",")
            assert header[:5] == ["variant", "fid", "run", "L", "targets_hit"]
            assert len(header) == 5 + width
            body = np.loadtxt(
                path, delimiter=",", skiprows=1, usecols=range(5, 5 + width)
            )
            assert body.shape == (12, width)
            assert body.min() >= 0.0 and body.max() <= 1.0


def test_select_report(pipeline):
    rep = _json(pipeline["out"] / "reports" / "select.json")
    assert rep["lengths"] == [10, 60]
    assert rep["params"] == {"n_trees": 25, "max_iter": 25, "alpha": 0.05}
    sel = rep["selection"]
    assert sel["status"] in ("ok", "empty_consensus")
    assert sel["n_groups"] == 4  # 2 fids x 2 lengths
    for feat in sel["consensus"]:
        assert set(feat) >= {"column_name", "importance"}


def test_classify_reports_and_table(pipeline):
    rep = _json(pipeline["out"] / "reports" / "classify_variant.json")
    assert rep["target"] == "variant"
    for L in ("10", "60"):
        for fid in ("1", "10"):
            res = rep["per_length"][L][fid]
            assert res["task"] == "classify"
            assert set(res["mean"]) == {"accuracy", "f1_macro"}
            assert 0.0 <= res["mean"]["accuracy"] <= 1.0
            assert len(res["folds"]) == 3

    pooled = _json(pipeline["out"] / "reports" / "classify_variant-all.json")
    for L in ("10", "60"):
        entry = pooled["per_length"][L]
        assert "kfold" in entry
        logo = entry["logo"]
        assert sorted(logo["per_fid"]) == ["1", "10"]
        assert set(logo["mean"]) == {"accuracy", "f1_macro"}

    fid_rep = _json(pipeline["out"] / "reports" / "classify_fid.json")
    assert fid_rep["per_length"]["60"]["n_classes"] == 2

    group_rep = _json(pipeline["out"] / "reports" / "classify_group.json")
    assert group_rep["per_length"]["60"]["grouping"] == "bbob"
    assert group_rep["per_length"]["60"]["grouping_digest"] == ""
    assert group_rep["per_length"]["60"]["n_classes"] == 2

    table = (pipeline["out"] / "tables" / "classify_variant.csv").read_text()
    lines = table.splitlines()
    assert lines[0] == "fid,accuracy_L10,accuracy_L60,f1_macro_L10,f1_macro_L60"
    assert [row.split(",")[0] for row in lines[1:]] == ["1", "10"]


def test_classify_rerun_is_byte_identical(pipeline):
    path = pipeline["out"] / "reports" / "classify_variant.json"
    before = path.read_bytes()
    assert cli.main(["classify", "--config", str(pipeline["ini"]),
                     "--target", "variant"]) == 0
    assert path.read_bytes() == before


def test_cluster_artifacts(pipeline):
    out = pipeline["out"]
    rep = _json(out / "reports" / "cluster.json")["by"]["variant"]
    assert rep["labels"] == ["standard", "tpa"]
    for L in ("10", "60"):
        d = np.array(rep["distances"][L])
        assert d.shape == (2, 2)
        assert d[0, 0] == d[1, 1] == 0.0
        assert d[0, 1] == d[1, 0] >= 0.0
    assert rep["combined"] == {"lower": 10, "upper": 60}
    # two leaves pin the cophenetic correlation at 1 by construction
    assert rep["bakers_gamma"] == pytest.approx(1.0)

    newick = (out / "cluster" / "dendro_variant_L60.newick").read_text()
    dendro = parse_newick(newick)
    assert sorted(dendro.labels) == ["standard", "tpa"]
    merges = (out / "cluster" / "merges_fid_L60.csv").read_text().splitlines()
    assert merges[0] == "height,left,right"
    assert (out / "cluster" / "distance_variant.csv").exists()

    fid_rep = _json(out / "reports" / "cluster.json")["by"]["fid"]
    assert fid_rep["labels"] == ["1", "10"]


def test_regress_report(pipeline):
    rep = _json(pipeline["out"] / "reports" / "regress.json")
    assert rep["target"] == "targets_hit"
    for L in ("10", "60"):
        entry = rep["per_length"][L]
        assert entry["all"]["task"] == "regress"
        assert set(entry["all"]["mean"]) == {"r2"}
        assert sorted(entry["per_variant"]) == ["standard", "tpa"]


def test_report_aggregates_all_sections(pipeline):
    rep = _json(pipeline["out"] / "reports" / "report.json")
    assert sorted(rep["sections"]) == [
        "classify_fid",
        "classify_group",
        "classify_variant",
        "classify_variant-all",
        "cluster",
        "regress",
        "select",
    ]
    assert rep["missing_sections"] == []
    assert rep["config"]["fids"] == [1, 10]
    digests = {sec["digest"] for sec in rep["sections"].values()}
    assert digests == {rep["digest"]}


def test_length_flag_on_artifact_copy(pipeline, tmp_path, monkeypatch):
    """--length restricts a stage; ESTRACE_OUT redirects its artifacts."""
    copy = tmp_path / "copy"
    shutil.copytree(pipeline["out"], copy)
    monkeypatch.setenv("ESTRACE_OUT", str(copy))
    assert cli.main(["cluster", "--config", str(pipeline["ini"]),
                     "--length", "60"]) == 0
    rep = _json(copy / "reports" / "cluster.json")["by"]["variant"]
    assert rep["lengths"] == [60]
    assert rep["bakers_gamma"] is None
    first = (copy / "cluster" / "distance_variant.csv").read_text().splitlines()[0]
    assert first == "labels,standard,tpa"


def test_missing_inputs_exit_3(tmp_path):
    ini = tmp_path / "exp.ini"
    ini.write_text(INI.format(out=tmp_path / "fresh"))
    for stage in ("extract", "select", "classify", "cluster", "regress", "report"):
        assert cli.main([stage, "--config", str(ini)]) == 3


def test_config_errors_exit_2(pipeline, tmp_path):
    ini = str(pipeline["ini"])
    # a length outside the configured grid
    assert cli.main(["cluster", "--config", ini, "--length", "999"]) == 2
    # artifacts were generated under master seed 0; seed 1 must refuse
    assert cli.main(["extract", "--config", ini, "--seed", "1"]) == 2
    assert cli.main(["classify", "--config", ini, "--seed", "1"]) == 2
    # missing config file
    assert cli.main(["generate", "--config", str(tmp_path / "no.ini")]) == 2


def test_argparse_rejects_unknown_choices():
    with pytest.raises(SystemExit):
        cli.main(["generate", "--preset", "warp"])
    with pytest.raises(SystemExit):
        cli.main(["frobnicate"])
    with pytest.raises(SystemExit):
        cli.main([])


def test_group_target_with_custom_labels(pipeline, tmp_path):
    labels = tmp_path / "labels.csv"
    labels.write_text("fid,group\n1,unimodal\n10,conditioned\n")
    ini = tmp_path / "exp.ini"
    ini.write_text(
        INI.format(out=pipeline["out"])
        + f"mersmann_file = {labels}\n"
    )
    assert cli.main(["classify", "--config", str(ini), "--target", "group"]) == 0
    rep = _json(pipeline["out"] / "reports" / "classify_group.json")
    entry = rep["per_length"]["60"]
    assert entry["grouping"] == str(labels)
    assert len(entry["grouping_digest"]) == 16
    assert entry["n_classes"] == 2


def test_cluster_skips_fid_without_standard_variant(tmp_path):
    out = tmp_path / "out"
    ini = tmp_path / "exp.ini"
    ini.write_text(
        INI.format(out=out).replace("standard, tpa", "msr, tpa")
    )
    assert cli.main(["generate", "--config", str(ini)]) == 0
    assert cli.main(["extract", "--config", str(ini)]) == 0
    assert cli.main(["cluster", "--config", str(ini)]) == 0
    rep = _json(out / "reports" / "cluster.json")
    assert "skipped" in rep["by"]["fid"]
    assert rep["by"]["variant"]["labels"] == ["msr", "tpa"]
    # fid identification needs the standard variant
    assert cli.main(["classify", "--config", str(ini), "--target", "fid"]) == 2
