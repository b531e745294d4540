"""Experiment configuration: defaults, presets, INI round-trip, digests.

One :class:`ExperimentConfig` pins everything a pipeline result depends
on.  Its :meth:`~ExperimentConfig.digest` is stamped into every emitted
artifact so later stages can refuse to mix files from different setups.
Execution details (output directory, worker count) are deliberately
outside the digest.
"""

import hashlib
import json
import os
from configparser import ConfigParser
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .cmaes import VARIANTS

__all__ = [
    "BBOB_GROUPS",
    "ConfigError",
    "ExperimentConfig",
    "MissingInputError",
    "bbob_group",
    "load_config",
    "load_grouping",
]

ENV_OUT = "ESTRACE_OUT"

# The five standard BBOB function groups, by fid range.
BBOB_GROUPS = {
    "separable": (1, 2, 3, 4, 5),
    "low_conditioning": (6, 7, 8, 9),
    "high_conditioning": (10, 11, 12, 13, 14),
    "multimodal_adequate": (15, 16, 17, 18, 19),
    "multimodal_weak": (20, 21, 22, 23, 24),
}

_FID_TO_GROUP = {fid: name for name, fids in BBOB_GROUPS.items() for fid in fids}


class ConfigError(Exception):
    """Invalid configuration or inconsistent artifacts (exit code 2)."""


class MissingInputError(Exception):
    """A required input artifact does not exist yet (exit code 3)."""


def bbob_group(fid):
    """Group name for a BBOB function id."""
    if fid not in _FID_TO_GROUP:
        raise ConfigError(f"fid {fid} outside 1..24")
    return _FID_TO_GROUP[fid]


@dataclass
class ExperimentConfig:
    """Everything one experiment depends on, in INI-serialisable form.

    ``instance`` selects the deterministic problem transform shared by
    every run; per-run randomness comes only from the optimizer seed
    ``SeedSequence((master_seed, variant_index, fid, run))`` where
    ``variant_index`` is the position in the canonical variant registry.
    """

    variants: tuple = tuple(VARIANTS)
    fids: tuple = tuple(range(1, 25))
    dim: int = 5
    runs: int = 100
    lengths: tuple = (100, 500)
    budget_generations: int = 500
    master_seed: int = 0
    instance: int = 1
    out_dir: Path = field(default_factory=lambda: Path("estrace_out"))
    jobs: int = 1
    mersmann_file: str = ""
    # selection hyperparameters
    select_trees: int = 100
    select_max_iter: int = 150
    select_alpha: float = 0.05
    # classification / regression hyperparameters
    cv_folds: int = 24
    forest_trees: int = 100

    def __post_init__(self):
        self.variants = tuple(self.variants)
        self.fids = tuple(int(f) for f in self.fids)
        self.lengths = tuple(int(n) for n in self.lengths)
        self.out_dir = Path(os.environ.get(ENV_OUT) or self.out_dir)
        unknown = [v for v in self.variants if v not in VARIANTS]
        if unknown:
            raise ConfigError(f"unknown variants {unknown}; registry has {list(VARIANTS)}")
        if not self.variants:
            raise ConfigError("no variants selected")
        if len(set(self.variants)) != len(self.variants):
            raise ConfigError("duplicate variants")
        bad = [f for f in self.fids if not 1 <= f <= 24]
        if bad or not self.fids:
            raise ConfigError(f"fids must lie in 1..24, got {list(self.fids)}")
        if len(set(self.fids)) != len(self.fids):
            raise ConfigError("duplicate fids")
        if self.dim < 2:
            raise ConfigError(f"dim must be >= 2, got {self.dim}")
        if self.runs < 1:
            raise ConfigError(f"runs must be >= 1, got {self.runs}")
        if self.budget_generations < 1:
            raise ConfigError("budget_generations must be >= 1")
        over = [n for n in self.lengths if not 1 <= n <= self.budget_generations]
        if over or not self.lengths:
            raise ConfigError(
                f"lengths must lie in 1..budget_generations "
                f"({self.budget_generations}), got {list(self.lengths)}"
            )
        if len(set(self.lengths)) != len(self.lengths):
            raise ConfigError("duplicate lengths")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if self.cv_folds < 2:
            raise ConfigError("cv_folds must be >= 2")
        for name in ("select_trees", "select_max_iter", "forest_trees"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if not 0.0 < self.select_alpha < 1.0:
            raise ConfigError("select_alpha must lie in (0, 1)")

    def digest(self):
        """16-hex digest over the result-affecting fields."""
        payload = {
            "variants": list(self.variants),
            "fids": list(self.fids),
            "dim": self.dim,
            "runs": self.runs,
            "lengths": list(self.lengths),
            "budget_generations": self.budget_generations,
            "master_seed": self.master_seed,
            "instance": self.instance,
            "select_trees": self.select_trees,
            "select_max_iter": self.select_max_iter,
            "select_alpha": self.select_alpha,
            "cv_folds": self.cv_folds,
            "forest_trees": self.forest_trees,
        }
        blob = json.dumps(payload, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def generation_digest(self):
        """Digest over the fields a single trace depends on.

        Narrower than :meth:`digest` on purpose: a stored trace stays
        reusable when only the variant/fid/run selection or analysis
        hyperparameters change.
        """
        payload = {
            "dim": self.dim,
            "budget_generations": self.budget_generations,
            "master_seed": self.master_seed,
            "instance": self.instance,
        }
        blob = json.dumps(payload, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def run_seed(self, variant, fid, run):
        """Spawn-free deterministic seed for one optimizer run.

        Uses the variant's index in the full registry, not in this
        config's subset, so traces stay valid across subset changes.
        """
        import numpy as np

        return np.random.SeedSequence(self.seed_key(variant, fid, run))

    def seed_key(self, variant, fid, run):
        return (self.master_seed, tuple(VARIANTS).index(variant), int(fid), int(run))

    def save_ini(self, path):
        parser = ConfigParser()
        parser["experiment"] = {
            "variants": ", ".join(self.variants),
            "fids": ", ".join(str(f) for f in self.fids),
            "dim": str(self.dim),
            "runs": str(self.runs),
            "lengths": ", ".join(str(n) for n in self.lengths),
            "budget_generations": str(self.budget_generations),
            "master_seed": str(self.master_seed),
            "instance": str(self.instance),
            "out_dir": str(self.out_dir),
            "jobs": str(self.jobs),
            "mersmann_file": self.mersmann_file,
        }
        parser["select"] = {
            "trees": str(self.select_trees),
            "max_iter": str(self.select_max_iter),
            "alpha": repr(self.select_alpha),
        }
        parser["learn"] = {
            "cv_folds": str(self.cv_folds),
            "forest_trees": str(self.forest_trees),
        }
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as fh:
            parser.write(fh)
        return path


# Presets resolve before any INI/flag overrides.  "desk" is the quick
# layout used throughout the test suite; "paper" is the full protocol.
PRESETS = {
    "paper": {},
    "desk": {"runs": 20, "fids": (1, 2, 5, 8, 13, 21)},
}


def _parse_int_list(text):
    out = []
    for part in text.replace(",", " ").split():
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return tuple(out)


def _parse_name_list(text):
    if text.strip().lower() == "all":
        return tuple(VARIANTS)
    return tuple(part for part in text.replace(",", " ").split())


def load_config(path=None, preset=None, **overrides):
    """Build a config from preset, optional INI file, then overrides."""
    if preset is not None and preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    values = dict(PRESETS.get(preset or "paper", {}))
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        parser = ConfigParser()
        try:
            parser.read(path)
        except Exception as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
        sec = parser["experiment"] if parser.has_section("experiment") else {}
        try:
            if "variants" in sec:
                values["variants"] = _parse_name_list(sec["variants"])
            if "fids" in sec:
                values["fids"] = _parse_int_list(sec["fids"])
            if "lengths" in sec:
                values["lengths"] = _parse_int_list(sec["lengths"])
            for key in ("dim", "runs", "budget_generations", "master_seed",
                        "instance", "jobs"):
                if key in sec:
                    values[key] = int(sec[key])
            if "out_dir" in sec:
                values["out_dir"] = Path(sec["out_dir"])
            if "mersmann_file" in sec:
                values["mersmann_file"] = sec["mersmann_file"]
            if parser.has_section("select"):
                sel = parser["select"]
                if "trees" in sel:
                    values["select_trees"] = int(sel["trees"])
                if "max_iter" in sel:
                    values["select_max_iter"] = int(sel["max_iter"])
                if "alpha" in sel:
                    values["select_alpha"] = float(sel["alpha"])
            if parser.has_section("learn"):
                lrn = parser["learn"]
                if "cv_folds" in lrn:
                    values["cv_folds"] = int(lrn["cv_folds"])
                if "forest_trees" in lrn:
                    values["forest_trees"] = int(lrn["forest_trees"])
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"bad value in {path}: {exc}") from exc
    values.update({k: v for k, v in overrides.items() if v is not None})
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"unknown config keys {unknown}")
    try:
        return ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_grouping(config):
    """fid -> group-label map: BBOB built-ins or a user label file.

    The label file is two CSV columns ``fid,group`` with no header
    magic (a leading ``fid,group`` line is tolerated).  Returns the map
    and a short content digest ("" for the built-in grouping).
    """
    if not config.mersmann_file:
        return {fid: bbob_group(fid) for fid in config.fids}, ""
    path = Path(config.mersmann_file)
    if not path.exists():
        raise MissingInputError(f"grouping file not found: {path}")
    text = path.read_text()
    mapping = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.lower().startswith("fid,"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 2 or not parts[1]:
            raise ConfigError(f"{path}:{line_no}: expected 'fid,group'")
        try:
            fid = int(parts[0])
        except ValueError as exc:
            raise ConfigError(f"{path}:{line_no}: bad fid {parts[0]!r}") from exc
        mapping[fid] = parts[1]
    missing = [f for f in config.fids if f not in mapping]
    if missing:
        raise ConfigError(f"grouping file {path} lacks labels for fids {missing}")
    digest = hashlib.sha256(text.encode()).hexdigest()[:16]
    return {fid: mapping[fid] for fid in config.fids}, digest


def with_overrides(config, **overrides):
    """Copy of ``config`` with fields replaced (validation re-runs)."""
    return replace(config, **overrides)
