"""Feature matrices over collections of traces.

A row is one run: metadata ``variant, fid, run, L, targets_hit`` plus
one real per catalog entry.  Scaling maps each column to the unit
interval independently within each fid group; since a matrix is always
built at a single trace length, per-fid scaling here is per (fid, L)
overall.  The CSV round trip is bit-exact (17 significant digits), with
a JSON sidecar holding the scaled flag and optional provenance.
"""

import csv
import json
from pathlib import Path

import numpy as np

from ..trace import CHANNELS
from .catalog import FeatureSpec, compute_feature

__all__ = ["FeatureMatrix", "extract_row"]

_META = ("variant", "fid", "run", "L", "targets_hit")


def extract_row(trace, catalog, length=None):
    """Evaluate the catalog on one trace, truncated to ``length``."""
    if not catalog:
        raise ValueError("catalog must be non-empty")
    mat = trace.channels(length)
    series = {name: mat[i] for i, name in enumerate(CHANNELS)}
    return np.array([compute_feature(s, series[s.channel]) for s in catalog])


class FeatureMatrix:
    """Runs x features with per-row metadata."""

    def __init__(self, specs, values, meta, scaled=False):
        self.specs = list(specs)
        self.values = np.ascontiguousarray(values, dtype=float)
        self.meta = [dict(m) for m in meta]
        self.scaled = bool(scaled)
        if self.values.ndim != 2:
            raise ValueError("values must be 2-D")
        if self.values.shape != (len(self.meta), len(self.specs)):
            raise ValueError(
                f"shape {self.values.shape} does not match "
                f"{len(self.meta)} rows x {len(self.specs)} specs"
            )
        names = [s.column_name() for s in self.specs]
        if len(set(names)) != len(names):
            raise ValueError("duplicate feature columns")
        for m in self.meta:
            missing = [k for k in _META if k not in m]
            if missing:
                raise ValueError(f"row metadata missing {missing}")

    def __len__(self):
        return len(self.meta)

    @property
    def columns(self):
        return [s.column_name() for s in self.specs]

    def meta_array(self, key):
        """One metadata field across rows, as an array."""
        vals = [m[key] for m in self.meta]
        if key == "variant":
            return np.array(vals, dtype=object)
        return np.array(vals)

    @classmethod
    def from_traces(cls, traces, catalog, length=None):
        """Extract the catalog over traces, rows ordered by (variant, fid, run)."""
        ordered = sorted(
            traces, key=lambda t: (t.meta["variant"], t.meta["fid"], t.meta["run"])
        )
        rows = []
        meta = []
        for t in ordered:
            rows.append(extract_row(t, catalog, length))
            meta.append(
                {
                    "variant": t.meta["variant"],
                    "fid": int(t.meta["fid"]),
                    "run": int(t.meta["run"]),
                    "L": len(t) if length is None else int(length),
                    "targets_hit": int(t.meta["targets_hit"]),
                }
            )
        return cls(list(catalog), np.array(rows), meta, scaled=False)

    def scale_unit_interval(self):
        """Min-max scale each column within each fid group.

        Non-constant columns end with an exact 0 and 1 per group;
        constant columns collapse to 0.
        """
        out = self.values.copy()
        fids = self.meta_array("fid")
        for fid in np.unique(fids):
            rows = fids == fid
            block = out[rows]
            mn = block.min(axis=0)
            mx = block.max(axis=0)
            span = mx - mn
            constant = span == 0
            span[constant] = 1.0
            block = (block - mn) / span
            block[:, constant] = 0.0
            out[rows] = block
        return FeatureMatrix(self.specs, out, self.meta, scaled=True)

    def select_columns(self, specs):
        """Sub-matrix restricted to the given specs, in the given order."""
        index = {s.column_name(): i for i, s in enumerate(self.specs)}
        try:
            cols = [index[s.column_name()] for s in specs]
        except KeyError as err:
            raise ValueError(f"feature not in matrix: {err.args[0]}") from None
        return FeatureMatrix(
            list(specs), self.values[:, cols], self.meta, scaled=self.scaled
        )

    def select_rows(self, mask):
        mask = np.asarray(mask, dtype=bool)
        meta = [m for m, keep in zip(self.meta, mask) if keep]
        return FeatureMatrix(self.specs, self.values[mask], meta, scaled=self.scaled)

    def save(self, path, extra_meta=None):
        """Write ``path`` (CSV) and a ``.json`` sidecar with the scaled flag.

        ``extra_meta`` entries land in the sidecar next to ``scaled``.
        """
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(list(_META) + self.columns)
            for m, row in zip(self.meta, self.values):
                writer.writerow(
                    [m["variant"], m["fid"], m["run"], m["L"], m["targets_hit"]]
                    + [f"{v:.17g}" for v in row]
                )
        sidecar = {"scaled": self.scaled}
        if extra_meta:
            if "scaled" in extra_meta:
                raise ValueError("extra_meta may not override 'scaled'")
            sidecar.update(extra_meta)
        with open(path.with_suffix(".json"), "w") as fh:
            json.dump(sidecar, fh, sort_keys=True)
            fh.write("\n")
        return path

    @staticmethod
    def read_sidecar(path):
        """Return the sidecar dict for a saved matrix ({} if absent)."""
        sidecar = Path(path).with_suffix(".json")
        if not sidecar.exists():
            return {}
        with open(sidecar) as fh:
            return json.load(fh)

    @classmethod
    def load(cls, path):
        path = Path(path)
        sidecar = path.with_suffix(".json")
        scaled = False
        if sidecar.exists():
            with open(sidecar) as fh:
                scaled = bool(json.load(fh).get("scaled", False))
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if tuple(header[: len(_META)]) != _META:
                raise ValueError(f"unexpected header start {header[:5]!r} in {path}")
            specs = [FeatureSpec.parse(c) for c in header[len(_META) :]]
            meta = []
            rows = []
            for row in reader:
                meta.append(
                    {
                        "variant": row[0],
                        "fid": int(row[1]),
                        "run": int(row[2]),
                        "L": int(row[3]),
                        "targets_hit": int(row[4]),
                    }
                )
                rows.append([float(v) for v in row[len(_META) :]])
        values = np.array(rows) if rows else np.empty((0, len(specs)))
        return cls(specs, values, meta, scaled=scaled)
