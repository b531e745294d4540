"""Command line pipeline.

Stages write their artifacts under the configured output directory and
stamp them with the config digest, so each stage can run in its own
process (or on another day) and still refuse inputs built under a
different setup:

    estrace generate --preset desk
    estrace extract  --preset desk --catalog raw
    estrace extract  --preset desk
    estrace select   --preset desk
    estrace classify --preset desk
    estrace cluster  --preset desk
    estrace regress  --preset desk
    estrace report   --preset desk

Exit codes: 0 success, 2 bad or inconsistent configuration, 3 missing
input artifacts.
"""

import argparse
import functools
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .cluster import (
    bakers_gamma,
    combined_matrix_csv,
    distance_matrix,
    mean_vectors,
    render_merge_csv,
    render_newick,
    ward_linkage,
)
from .cmaes import VARIANTS, variant_config
from .config import (
    PRESETS,
    ConfigError,
    MissingInputError,
    load_config,
    load_grouping,
)
from .ensemble import ExtraTreesClassifier, ExtraTreesRegressor
from .features import FeatureMatrix, extract_row, raw_catalog, selected_catalog
from .model_selection import cv_table_csv, kfold_cv, logo_cv
from .problems import make_problem
from .selection import consensus_select, select_on_matrix
from .trace import Trace, run_and_trace

__all__ = ["main"]

# Stage tags keep the derived seed streams of different pipeline steps
# disjoint; run seeds use tag 0 implicitly via ExperimentConfig.run_seed.
_STAGE_SELECT = 3
_STAGE_CLASSIFY = 2
_STAGE_CLUSTER = 4
_STAGE_REGRESS = 5
_TARGET_CODE = {"variant": 0, "variant-all": 1, "fid": 2, "group": 3}

STANDARD = "standard"


def _stage_seed(config, *tags):
    return np.random.SeedSequence((config.master_seed, *tags))


def _traces_dir(config):
    return config.out_dir / "traces"


def _trace_paths(config, variant, fid, run):
    base = _traces_dir(config) / f"{variant}_{fid}_{run}"
    return base.with_suffix(".csv"), base.with_suffix(".json")


def _matrix_path(config, catalog, length):
    return config.out_dir / "features" / f"features_{catalog}_L{length}.csv"


def _report_path(config, name):
    return config.out_dir / "reports" / f"{name}.json"


def _write_json(path, payload):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")
    return path


def _write_text(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def _restrict_lengths(config, length):
    if length is None:
        return config.lengths
    if length not in config.lengths:
        raise ConfigError(
            f"--length {length} not among configured lengths {list(config.lengths)}"
        )
    return (length,)


@functools.lru_cache(maxsize=4)
def _catalog(name):
    if name == "raw":
        return raw_catalog()
    if name == "selected":
        return selected_catalog()
    raise ConfigError(f"unknown catalog {name!r}")


def _pool_map(jobs, fn, tasks):
    """Order-preserving map, in-process unless jobs > 1."""
    tasks = list(tasks)
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
        return list(pool.map(fn, tasks, chunksize=1))


# ---------------------------------------------------------------- generate

def _trace_current(config, variant, fid, run):
    """True if a stored trace matches what generate would produce."""
    csv_path, json_path = _trace_paths(config, variant, fid, run)
    if not (csv_path.exists() and json_path.exists()):
        return False
    try:
        with open(json_path) as fh:
            meta = json.load(fh)
    except (OSError, json.JSONDecodeError):
        return False
    return (
        meta.get("experiment_digest") == config.generation_digest()
        and meta.get("generations") == config.budget_generations
        and meta.get("transform_seed") == config.instance
        and meta.get("seed") == list(config.seed_key(variant, fid, run))
    )


def _generate_one(task):
    config, variant, fid, run = task
    mcfg = variant_config(
        variant, config.dim, budget_generations=config.budget_generations
    )
    problem = make_problem(fid, config.dim, transform_seed=config.instance)
    trace = run_and_trace(
        mcfg,
        problem,
        config.run_seed(variant, fid, run),
        variant=variant,
        run=run,
        extra_meta={
            "experiment_digest": config.generation_digest(),
            "transform_seed": config.instance,
        },
    )
    trace.save(_traces_dir(config))
    return trace.basename()


def cmd_generate(config, args):
    tasks = [
        (config, v, f, r)
        for v in config.variants
        for f in config.fids
        for r in range(config.runs)
    ]
    pending = [t for t in tasks if not _trace_current(config, *t[1:])]
    config.save_ini(config.out_dir / "config.ini")
    print(
        f"generate: {len(tasks) - len(pending)} traces current, "
        f"{len(pending)} to run"
    )
    _pool_map(config.jobs, _generate_one, pending)
    print(f"generate: traces in {_traces_dir(config)}")
    return 0


# ----------------------------------------------------------------- extract

def _extract_one(task):
    path, catalog_name, lengths = task
    trace = Trace.load(path)
    rows = {
        L: extract_row(trace, _catalog(catalog_name), length=L).tolist()
        for L in lengths
    }
    meta = trace.meta
    return meta["variant"], meta["fid"], meta["run"], meta["targets_hit"], rows


def cmd_extract(config, args):
    catalog_name = args.catalog
    lengths = _restrict_lengths(config, args.length)
    specs = list(_catalog(catalog_name))
    keys = sorted(
        (v, f, r)
        for v in config.variants
        for f in config.fids
        for r in range(config.runs)
    )
    missing = []
    tasks = []
    for variant, fid, run in keys:
        csv_path, json_path = _trace_paths(config, variant, fid, run)
        if not (csv_path.exists() and json_path.exists()):
            missing.append(csv_path)
            continue
        with open(json_path) as fh:
            meta = json.load(fh)
        if meta.get("experiment_digest") != config.generation_digest():
            raise ConfigError(
                f"{csv_path} was generated under digest "
                f"{meta.get('experiment_digest')!r}, current generation digest "
                f"is {config.generation_digest()!r}; refusing to mix"
            )
        tasks.append((str(csv_path), catalog_name, lengths))
    if missing:
        for path in missing:
            print(f"missing trace: {path}", file=sys.stderr)
        raise MissingInputError(
            f"{len(missing)} of {len(keys)} traces missing; run 'estrace generate'"
        )
    results = _pool_map(config.jobs, _extract_one, tasks)
    for L in lengths:
        meta = [
            {"variant": v, "fid": f, "run": r, "L": L, "targets_hit": hits}
            for v, f, r, hits, _ in results
        ]
        values = np.array([rows[L] for *_ignored, rows in results])
        matrix = FeatureMatrix(specs, values, meta).scale_unit_interval()
        path = _matrix_path(config, catalog_name, L)
        matrix.save(
            path,
            extra_meta={
                "digest": config.digest(),
                "catalog": catalog_name,
                "L": L,
            },
        )
        print(f"extract: wrote {path} ({matrix.values.shape[0]} rows)")
    return 0


def _load_matrix(config, catalog_name, length):
    path = _matrix_path(config, catalog_name, length)
    if not path.exists():
        raise MissingInputError(
            f"feature matrix not found: {path}; run 'estrace extract"
            + (" --catalog raw'" if catalog_name == "raw" else "'")
        )
    sidecar = FeatureMatrix.read_sidecar(path)
    if sidecar.get("digest") != config.digest():
        raise ConfigError(
            f"{path} carries digest {sidecar.get('digest')!r} but the current "
            f"config digest is {config.digest()!r}; refusing to mix"
        )
    return FeatureMatrix.load(path)


# ------------------------------------------------------------------ select

def _select_one(task):
    matrix, n_trees, max_iter, alpha, entropy = task
    return select_on_matrix(
        matrix,
        n_trees=n_trees,
        max_iter=max_iter,
        alpha=alpha,
        random_state=np.random.SeedSequence(entropy),
    )


def cmd_select(config, args):
    lengths = _restrict_lengths(config, args.length)
    tasks = []
    for L in lengths:
        matrix = _load_matrix(config, "raw", L)
        fid_col = matrix.meta_array("fid")
        for fid in config.fids:
            sub = matrix.select_rows(fid_col == fid)
            if sub.values.shape[0] == 0:
                raise ConfigError(f"raw matrix at L={L} has no rows for fid {fid}")
            tasks.append(
                (
                    sub,
                    config.select_trees,
                    config.select_max_iter,
                    config.select_alpha,
                    (config.master_seed, _STAGE_SELECT, fid, L),
                )
            )
    groups = _pool_map(config.jobs, _select_one, tasks)
    report = consensus_select(groups)
    payload = {
        "digest": config.digest(),
        "lengths": list(lengths),
        "params": {
            "n_trees": config.select_trees,
            "max_iter": config.select_max_iter,
            "alpha": config.select_alpha,
        },
        "selection": report.to_dict(),
    }
    path = _write_json(_report_path(config, "select"), payload)
    print(
        f"select: {len(report.consensus)} consensus features "
        f"({report.status}), report at {path}"
    )
    return 0


# ---------------------------------------------------------------- classify

def _classifier(config):
    return ExtraTreesClassifier(n_trees=config.forest_trees)


def _require_rows(n, k, what):
    if n < k:
        raise ConfigError(
            f"{what} has {n} rows but cv_folds={k}; lower cv_folds or add runs"
        )


def _classify_variant(config, matrix, L):
    """Per-fid variant identification, one CV per function."""
    out = {}
    fid_col = matrix.meta_array("fid")
    for fid in config.fids:
        sub = matrix.select_rows(fid_col == fid)
        _require_rows(sub.values.shape[0], config.cv_folds, f"fid {fid} at L={L}")
        res = kfold_cv(
            _classifier(config),
            sub.values,
            sub.meta_array("variant"),
            k=config.cv_folds,
            task="classify",
            random_state=_stage_seed(
                config, _STAGE_CLASSIFY, _TARGET_CODE["variant"], L, fid
            ),
        )
        out[str(fid)] = res.to_dict()
    return out


def _classify_variant_all(config, matrix, L):
    """Pooled variant identification: K-fold plus leave-one-fid-out."""
    y = matrix.meta_array("variant")
    _require_rows(matrix.values.shape[0], config.cv_folds, f"pooled rows at L={L}")
    res = kfold_cv(
        _classifier(config),
        matrix.values,
        y,
        k=config.cv_folds,
        task="classify",
        random_state=_stage_seed(
            config, _STAGE_CLASSIFY, _TARGET_CODE["variant-all"], L
        ),
    )
    out = {"kfold": res.to_dict()}
    fids = matrix.meta_array("fid")
    if np.unique(fids).size >= 2:
        logo = logo_cv(
            _classifier(config),
            matrix.values,
            y,
            fids,
            task="classify",
            random_state=_stage_seed(
                config, _STAGE_CLASSIFY, _TARGET_CODE["variant-all"], L, 1
            ),
        )
        metrics = sorted(next(iter(logo.values())))
        out["logo"] = {
            "per_fid": {str(g): m for g, m in logo.items()},
            "mean": {
                name: float(np.mean([m[name] for m in logo.values()]))
                for name in metrics
            },
        }
    else:
        out["logo"] = None
    return out


def _standard_rows(config, matrix):
    if STANDARD not in config.variants:
        raise ConfigError(
            f"target needs the {STANDARD!r} variant in the config"
        )
    variant_col = matrix.meta_array("variant")
    return matrix.select_rows(variant_col == STANDARD)


def _classify_fid(config, matrix, L):
    """Which problem was being solved, from standard-variant rows only."""
    sub = _standard_rows(config, matrix)
    y = sub.meta_array("fid")
    if np.unique(y).size < 2:
        raise ConfigError("fid classification needs at least 2 fids")
    _require_rows(sub.values.shape[0], config.cv_folds, f"standard rows at L={L}")
    res = kfold_cv(
        _classifier(config),
        sub.values,
        y,
        k=config.cv_folds,
        task="classify",
        random_state=_stage_seed(config, _STAGE_CLASSIFY, _TARGET_CODE["fid"], L),
    )
    return {"kfold": res.to_dict(), "n_classes": int(np.unique(y).size)}


def _classify_group(config, matrix, L, grouping, grouping_digest):
    sub = _standard_rows(config, matrix)
    fids = sub.meta_array("fid")
    y = np.array([grouping[int(f)] for f in fids], dtype=object)
    if np.unique(y.astype(str)).size < 2:
        raise ConfigError("group classification needs at least 2 groups")
    _require_rows(sub.values.shape[0], config.cv_folds, f"standard rows at L={L}")
    res = kfold_cv(
        _classifier(config),
        sub.values,
        y,
        k=config.cv_folds,
        task="classify",
        random_state=_stage_seed(config, _STAGE_CLASSIFY, _TARGET_CODE["group"], L),
    )
    return {
        "kfold": res.to_dict(),
        "grouping": config.mersmann_file or "bbob",
        "grouping_digest": grouping_digest,
        "n_classes": int(np.unique(y.astype(str)).size),
    }


def cmd_classify(config, args):
    lengths = _restrict_lengths(config, args.length)
    targets = (
        list(_TARGET_CODE) if args.target == "all" else [args.target]
    )
    grouping = grouping_digest = None
    if "group" in targets:
        grouping, grouping_digest = load_grouping(config)
    matrices = {L: _load_matrix(config, "selected", L) for L in lengths}
    for target in targets:
        per_length = {}
        for L in lengths:
            matrix = matrices[L]
            if target == "variant":
                per_length[str(L)] = _classify_variant(config, matrix, L)
            elif target == "variant-all":
                per_length[str(L)] = _classify_variant_all(config, matrix, L)
            elif target == "fid":
                per_length[str(L)] = _classify_fid(config, matrix, L)
            else:
                per_length[str(L)] = _classify_group(
                    config, matrix, L, grouping, grouping_digest
                )
        payload = {
            "digest": config.digest(),
            "target": target,
            "per_length": per_length,
        }
        path = _write_json(_report_path(config, f"classify_{target}"), payload)
        print(f"classify: wrote {path}")
        if target == "variant":
            rows = {}
            for L in lengths:
                for fid_str, res in per_length[str(L)].items():
                    rows.setdefault(int(fid_str), {}).update(
                        {
                            f"accuracy_L{L}": res["mean"]["accuracy"],
                            f"f1_macro_L{L}": res["mean"]["f1_macro"],
                        }
                    )
            table = _write_text(
                config.out_dir / "tables" / "classify_variant.csv",
                cv_table_csv(rows),
            )
            print(f"classify: wrote {table}")
    return 0


# ----------------------------------------------------------------- cluster

def _matrix_csv(dm):
    lines = ["labels," + ",".join(dm.labels)]
    for label, row in zip(dm.labels, dm.d):
        lines.append(label + "," + ",".join(f"{v:.17g}" for v in row))
    return "\n".join(lines) + "\n"


def cmd_cluster(config, args):
    lengths = _restrict_lengths(config, args.length)
    cluster_dir = config.out_dir / "cluster"
    report = {"digest": config.digest(), "by": {}}
    for by in ("variant", "fid"):
        if by == "fid" and STANDARD not in config.variants:
            report["by"][by] = {"skipped": f"no {STANDARD!r} variant configured"}
            continue
        dendros = {}
        distances = {}
        entry = {"lengths": [int(L) for L in lengths]}
        for L in lengths:
            matrix = _load_matrix(config, "selected", L)
            labels, vectors = mean_vectors(matrix, by)
            labels = [str(lab) for lab in labels]  # fid labels arrive as ints
            dm = distance_matrix(labels, vectors, scale=True)
            dendro = ward_linkage(labels, vectors)
            dendros[L] = dendro
            distances[L] = dm
            _write_text(
                cluster_dir / f"dendro_{by}_L{L}.newick", render_newick(dendro)
            )
            _write_text(
                cluster_dir / f"merges_{by}_L{L}.csv", render_merge_csv(dendro)
            )
        entry["labels"] = list(distances[lengths[0]].labels)
        entry["distances"] = {
            str(L): [[float(v) for v in row] for row in distances[L].d]
            for L in lengths
        }
        if len(lengths) >= 2:
            lo, hi = lengths[0], lengths[-1]
            _write_text(
                cluster_dir / f"distance_{by}.csv",
                combined_matrix_csv(distances[lo], distances[hi]),
            )
            entry["combined"] = {"lower": int(lo), "upper": int(hi)}
            gamma = bakers_gamma(dendros[lo], dendros[hi])
            # undefined below 3 leaves (single cophenetic pair); keep the
            # reports strict JSON
            entry["bakers_gamma"] = gamma if math.isfinite(gamma) else None
        else:
            only = lengths[0]
            _write_text(
                cluster_dir / f"distance_{by}.csv", _matrix_csv(distances[only])
            )
            entry["bakers_gamma"] = None
        report["by"][by] = entry
    path = _write_json(_report_path(config, "cluster"), report)
    print(f"cluster: artifacts in {cluster_dir}, report at {path}")
    return 0


# ----------------------------------------------------------------- regress

def cmd_regress(config, args):
    lengths = _restrict_lengths(config, args.length)
    per_length = {}
    for L in lengths:
        matrix = _load_matrix(config, "selected", L)
        y = matrix.meta_array("targets_hit").astype(float)
        _require_rows(matrix.values.shape[0], config.cv_folds, f"rows at L={L}")
        res_all = kfold_cv(
            ExtraTreesRegressor(n_trees=config.forest_trees),
            matrix.values,
            y,
            k=config.cv_folds,
            task="regress",
            stratify=False,
            random_state=_stage_seed(config, _STAGE_REGRESS, 0, L),
        )
        per_variant = {}
        variant_col = matrix.meta_array("variant")
        for vi, variant in enumerate(config.variants):
            sub = matrix.select_rows(variant_col == variant)
            _require_rows(
                sub.values.shape[0], config.cv_folds, f"{variant} rows at L={L}"
            )
            res = kfold_cv(
                ExtraTreesRegressor(n_trees=config.forest_trees),
                sub.values,
                sub.meta_array("targets_hit").astype(float),
                k=config.cv_folds,
                task="regress",
                stratify=False,
                random_state=_stage_seed(config, _STAGE_REGRESS, 1, L, vi),
            )
            per_variant[variant] = res.to_dict()
        per_length[str(L)] = {"all": res_all.to_dict(), "per_variant": per_variant}
    payload = {
        "digest": config.digest(),
        "target": "targets_hit",
        "per_length": per_length,
    }
    path = _write_json(_report_path(config, "regress"), payload)
    means = {
        L: per_length[str(L)]["all"]["mean"]["r2"] for L in lengths
    }
    summary = ", ".join(f"L{L}: R2={means[L]:.3f}" for L in lengths)
    print(f"regress: {summary}; report at {path}")
    return 0


# ------------------------------------------------------------------ report

_SECTIONS = (
    "select",
    "classify_variant",
    "classify_variant-all",
    "classify_fid",
    "classify_group",
    "cluster",
    "regress",
)


def cmd_report(config, args):
    sections = {}
    absent = []
    for name in _SECTIONS:
        path = _report_path(config, name)
        if not path.exists():
            absent.append(name)
            continue
        with open(path) as fh:
            payload = json.load(fh)
        if payload.get("digest") != config.digest():
            raise ConfigError(
                f"{path} carries digest {payload.get('digest')!r} but the "
                f"current config digest is {config.digest()!r}; refusing to mix"
            )
        sections[name] = payload
    if not sections:
        raise MissingInputError(
            "no stage reports found; run the pipeline stages first"
        )
    payload = {
        "digest": config.digest(),
        "config": {
            "variants": list(config.variants),
            "fids": list(config.fids),
            "dim": config.dim,
            "runs": config.runs,
            "lengths": list(config.lengths),
            "budget_generations": config.budget_generations,
            "master_seed": config.master_seed,
            "instance": config.instance,
        },
        "sections": sections,
        "missing_sections": absent,
    }
    path = _write_json(_report_path(config, "report"), payload)
    print(f"report: {len(sections)} sections aggregated at {path}")
    return 0


# -------------------------------------------------------------------- main

_COMMANDS = {
    "generate": cmd_generate,
    "extract": cmd_extract,
    "select": cmd_select,
    "classify": cmd_classify,
    "cluster": cmd_cluster,
    "regress": cmd_regress,
    "report": cmd_report,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="estrace",
        description="Strategy-parameter trace pipeline for modular CMA-ES "
        "variants on the BBOB suite.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for name, fn in _COMMANDS.items():
        sp = sub.add_parser(name, help=fn.__doc__ or name)
        sp.set_defaults(func=fn)
        sp.add_argument("--config", help="INI config file")
        sp.add_argument(
            "--preset", choices=sorted(PRESETS), help="named parameter preset"
        )
        sp.add_argument("--seed", type=int, help="override master seed")
        sp.add_argument("--jobs", type=int, help="worker processes")
        if name in ("extract", "select", "classify", "cluster", "regress"):
            sp.add_argument(
                "--length", type=int, help="restrict to one trace prefix length"
            )
        if name == "extract":
            sp.add_argument(
                "--catalog",
                choices=("selected", "raw"),
                default="selected",
                help="feature catalog to extract",
            )
        if name == "classify":
            sp.add_argument(
                "--target",
                choices=sorted(_TARGET_CODE) + ["all"],
                default="all",
                help="classification target",
            )
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        config = load_config(
            args.config, args.preset, master_seed=args.seed, jobs=args.jobs
        )
        return args.func(config, args)
    except ConfigError as exc:
        print(f"estrace: config error: {exc}", file=sys.stderr)
        return 2
    except MissingInputError as exc:
        print(f"estrace: missing input: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
