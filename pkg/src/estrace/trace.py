"""Per-generation strategy-parameter traces and their on-disk format.

Each generation contributes one :class:`TracePoint` with eight channels
recorded after adaptation: step size, best objective value so far, the
norms of the eigenvalue square roots and of the two evolution paths,
and the means of the same three vectors.  A full run yields a matrix of
shape (8, generations) consumed by the feature extraction stage.

On disk a trace is a CSV file named ``{variant}_{fid}_{run}.csv`` with
a JSON sidecar of the same stem.  Floats are rendered with 17
significant digits, so the round trip through text is bit-exact.
"""

import csv
import hashlib
import json
import math
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .cmaes import CMAES

__all__ = [
    "CHANNELS",
    "TracePoint",
    "Trace",
    "TraceError",
    "count_targets_hit",
    "precision_targets",
    "run_and_trace",
    "config_digest",
]

CHANNELS = (
    "sigma",
    "f_best",
    "v_norm",
    "ps_norm",
    "pc_norm",
    "v_mean",
    "ps_mean",
    "pc_mean",
)

_HEADER = ("generation",) + CHANNELS


class TraceError(RuntimeError):
    """Raised when a recorded run violates a trace invariant."""


@dataclass
class TracePoint:
    """One generation's record; field order matches the CSV columns."""

    generation: int
    sigma: float
    f_best: float
    v_norm: float
    ps_norm: float
    pc_norm: float
    v_mean: float
    ps_mean: float
    pc_mean: float


def precision_targets():
    """The 52 precision targets 10**(2 - (x - 1) / 5), x = 0..51."""
    return 10.0 ** (2.0 - (np.arange(52) - 1.0) / 5.0)


def count_targets_hit(f_best_final, f_opt=0.0):
    """Number of targets reached by the precision f_best_final - f_opt.

    f_best below f_opt means the objective accounting is broken
    somewhere upstream, so it is a hard error rather than a clamp.
    """
    precision = f_best_final - f_opt
    if math.isnan(precision):
        raise ValueError("precision must be a number")
    if precision < 0:
        raise TraceError(
            f"f_best {f_best_final} below f_opt {f_opt}: objective accounting bug"
        )
    return int(np.sum(precision <= precision_targets()))


def config_digest(config):
    """Short stable digest of a ModularConfig, for artifact provenance."""
    payload = json.dumps(
        {k: getattr(config, k) for k in sorted(vars(config))}, sort_keys=True
    )
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


class Trace:
    """A recorded run: an ordered list of points plus metadata.

    ``meta`` carries at least variant, fid, run, dim, seed,
    config_digest, f_opt and targets_hit; the save/load round trip
    preserves it verbatim.
    """

    def __init__(self, points, meta):
        self.points = list(points)
        self.meta = dict(meta)

    def __len__(self):
        return len(self.points)

    def channels(self, length=None):
        """Channel matrix of shape (8, L).

        ``length`` truncates to the first L generations; None keeps the
        full trace.  Requesting more generations than recorded raises.
        """
        n = len(self.points) if length is None else int(length)
        if n > len(self.points):
            raise ValueError(f"trace has {len(self.points)} generations, need {n}")
        out = np.empty((len(CHANNELS), n))
        for i, p in enumerate(self.points[:n]):
            for c, name in enumerate(CHANNELS):
                out[c, i] = getattr(p, name)
        return out

    def basename(self):
        return f"{self.meta['variant']}_{self.meta['fid']}_{self.meta['run']}"

    def save(self, directory):
        """Write the CSV and JSON sidecar; returns both paths."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        csv_path = directory / f"{self.basename()}.csv"
        json_path = directory / f"{self.basename()}.json"
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(_HEADER)
            for p in self.points:
                writer.writerow(
                    [p.generation] + [f"{getattr(p, c):.17g}" for c in CHANNELS]
                )
        with open(json_path, "w") as fh:
            json.dump(self.meta, fh, sort_keys=True, indent=1)
            fh.write("\n")
        return csv_path, json_path

    @classmethod
    def load(cls, csv_path):
        """Read a trace and its sidecar back from disk."""
        csv_path = Path(csv_path)
        json_path = csv_path.with_suffix(".json")
        with open(json_path) as fh:
            meta = json.load(fh)
        points = []
        with open(csv_path, newline="") as fh:
            reader = csv.reader(fh)
            header = tuple(next(reader))
            if header != _HEADER:
                raise TraceError(f"unexpected trace header {header!r} in {csv_path}")
            for row in reader:
                points.append(
                    TracePoint(int(row[0]), *(float(v) for v in row[1:]))
                )
        return cls(points, meta)


def _seed_repr(seed):
    """JSON-friendly record of the seed that produced a run, or None."""
    if seed is None or isinstance(seed, np.random.Generator):
        return None
    if isinstance(seed, np.random.SeedSequence):
        entropy = seed.entropy
        if isinstance(entropy, (tuple, list)):
            return [int(v) for v in entropy]
        return int(entropy)
    return int(seed)


def run_and_trace(config, problem, seed, *, variant="custom", run=0, extra_meta=None):
    """Run one optimizer instance to its budget and record the trace.

    The problem must expose ``f_opt``; observing a best value below it
    is a hard error, since the recorded precision would be negative.
    ``extra_meta`` entries are merged into the sidecar; they may not
    shadow the keys the tracer itself owns.
    """
    es = CMAES(config, seed)
    points = []
    for _ in range(config.budget_generations):
        es.step(problem)
        if es.f_best < problem.f_opt:
            raise TraceError(
                f"f_best {es.f_best} fell below f_opt {problem.f_opt} "
                f"on fid {getattr(problem, 'fid', '?')}: broken problem or overflow"
            )
        points.append(
            TracePoint(
                generation=es.generation,
                sigma=float(es.sigma),
                f_best=float(es.f_best),
                v_norm=float(np.linalg.norm(es.D)),
                ps_norm=float(np.linalg.norm(es.p_sigma)),
                pc_norm=float(np.linalg.norm(es.p_c)),
                v_mean=float(np.mean(es.D)),
                ps_mean=float(np.mean(es.p_sigma)),
                pc_mean=float(np.mean(es.p_c)),
            )
        )
    meta = {
        "variant": variant,
        "fid": getattr(problem, "fid", None),
        "run": int(run),
        "dim": config.dim,
        "seed": _seed_repr(seed),
        "generations": config.budget_generations,
        "config_digest": config_digest(config),
        "f_opt": float(problem.f_opt),
        "f_best": float(es.f_best),
        "targets_hit": count_targets_hit(es.f_best, problem.f_opt),
        "repair_count": int(es.repair_count),
        "evaluations": int(es.evaluations),
    }
    if extra_meta:
        clash = sorted(set(extra_meta) & set(meta))
        if clash:
            raise ValueError(f"extra_meta may not override {clash}")
        meta.update(extra_meta)
    return Trace(points, meta)
