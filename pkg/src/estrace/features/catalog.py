"""Time-series feature catalog: 18 functions with pinned semantics.

Every function maps a finite 1-D series of length >= 3 to one real and
is total: zero-variance and all-zero inputs take documented fallback
values instead of producing NaN, so downstream tree learners always see
finite matrices.

A :class:`FeatureSpec` names one (function, channel, params) triple.
Its canonical column name is ``{channel}__{function}`` with parameters
appended as ``__{p1}_{p2}_...`` (booleans as True/False, numbers via
``%g``), and :func:`FeatureSpec.parse` inverts that rendering.
"""

from dataclasses import dataclass, field

import numpy as np

from ..trace import CHANNELS
from ..validation import check_array

__all__ = [
    "FeatureSpec",
    "compute_feature",
    "raw_catalog",
    "selected_catalog",
    "FUNCTION_NAMES",
]


def _absolute_sum_of_changes(x):
    return float(np.sum(np.abs(np.diff(x))))


def _approximate_entropy(x, m, r):
    n = x.size
    tol = r * float(np.std(x))
    if n <= m + 1:
        return 0.0
    # Chebyshev window distance <= tol iff every componentwise
    # difference is, so one pairwise comparison matrix serves both
    # window lengths.
    close = np.abs(x[:, None] - x[None, :]) <= tol

    def phi(mm):
        cnt = n - mm + 1
        match = close[:cnt, :cnt].copy()
        for k in range(1, mm):
            match &= close[k : k + cnt, k : k + cnt]
        frac = np.count_nonzero(match, axis=1) / cnt
        return float(np.sum(np.log(frac))) / cnt

    return abs(phi(m) - phi(m + 1))


def _autocorrelation(x, lag):
    if lag <= 0 or lag >= x.size:
        raise ValueError(f"lag {lag} out of range for length {x.size}")
    var = float(np.var(x))
    if var == 0.0:
        return 0.0
    mu = float(np.mean(x))
    num = float(np.sum((x[:-lag] - mu) * (x[lag:] - mu)))
    return num / ((x.size - lag) * var)


def _change_quantiles(x, f_agg, isabs, ql, qh):
    if f_agg != "mean":
        raise ValueError(f"unsupported aggregator {f_agg!r}")
    if not 0.0 <= ql < qh <= 1.0:
        raise ValueError(f"need 0 <= ql < qh <= 1, got ({ql}, {qh})")
    lo = np.quantile(x, ql)
    hi = np.quantile(x, qh)
    inside = (x >= lo) & (x <= hi)
    keep = inside[:-1] & inside[1:]
    if not np.any(keep):
        return 0.0
    diffs = np.diff(x)[keep]
    if isabs:
        diffs = np.abs(diffs)
    return float(np.mean(diffs))


def _cid_ce(x, normalize):
    if normalize:
        sd = float(np.std(x))
        if sd == 0.0:
            return 0.0
        x = (x - np.mean(x)) / sd
    return float(np.sqrt(np.sum(np.diff(x) ** 2)))


def _energy_ratio_by_chunks(x, num_segments, segment_focus):
    if not 0 <= segment_focus < num_segments:
        raise ValueError(f"segment_focus {segment_focus} not in [0, {num_segments})")
    total = float(np.sum(x * x))
    if total == 0.0:
        return 0.0
    chunk = np.array_split(x, num_segments)[segment_focus]
    return float(np.sum(chunk * chunk)) / total


def _spectrum(x):
    # one-sided magnitudes k = 0..floor(L/2)
    return np.abs(np.fft.rfft(x))


def _fft_aggregated(x, aggtype):
    if aggtype != "centroid":
        raise ValueError(f"unsupported aggregate {aggtype!r}")
    mags = _spectrum(x)
    denom = float(np.sum(mags))
    if denom == 0.0:
        return 0.0
    return float(np.sum(np.arange(mags.size) * mags)) / denom


def _fft_coefficient(x, k, attr):
    if attr != "abs":
        raise ValueError(f"unsupported attribute {attr!r}")
    if not 0 <= k <= x.size // 2:
        raise ValueError(f"coefficient {k} outside one-sided range")
    n = x.size
    return float(abs(np.exp(-2j * np.pi * k * np.arange(n) / n) @ x))


def _index_mass_quantile(x, q):
    if not 0.0 < q <= 1.0:
        raise ValueError(f"q must be in (0, 1], got {q}")
    mass = np.abs(x)
    total = float(np.sum(mass))
    if total == 0.0:
        return 1.0
    reached = np.cumsum(mass) >= q * total
    return (int(np.argmax(reached)) + 1) / x.size


def _mean(x):
    return float(np.mean(x))


def _median(x):
    return float(np.median(x))


def _minimum(x):
    return float(np.min(x))


def _number_crossing_m(x, m):
    sign = np.sign(x - m)
    return int(np.count_nonzero(sign[:-1] * sign[1:] < 0))


def _number_peaks(x, n):
    if n < 1:
        raise ValueError("peak support must be >= 1")
    core = x[n:-n]
    if core.size == 0:
        return 0
    ok = np.ones(core.size, dtype=bool)
    for k in range(1, n + 1):
        ok &= core > x[n - k : n - k + core.size]
        ok &= core > x[n + k : n + k + core.size]
    return int(np.count_nonzero(ok))


def _partial_autocorrelation(x, lag):
    # equals plain autocorrelation at lag 1; larger lags not supported
    if lag != 1:
        raise ValueError("only lag 1 is supported")
    return _autocorrelation(x, lag)


def _quantile(x, q):
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must be in [0, 1], got {q}")
    return float(np.quantile(x, q))


def _range_count(x, lower, upper):
    if lower >= upper:
        raise ValueError(f"need lower < upper, got ({lower}, {upper})")
    return int(np.count_nonzero((x >= lower) & (x < upper)))


def _sum_values(x):
    return float(np.sum(x))


# name -> (implementation, parameter types in positional order)
_FUNCTIONS = {
    "absolute_sum_of_changes": (_absolute_sum_of_changes, ()),
    "approximate_entropy": (_approximate_entropy, (int, float)),
    "autocorrelation": (_autocorrelation, (int,)),
    "change_quantiles": (_change_quantiles, (str, bool, float, float)),
    "cid_ce": (_cid_ce, (bool,)),
    "energy_ratio_by_chunks": (_energy_ratio_by_chunks, (int, int)),
    "fft_aggregated": (_fft_aggregated, (str,)),
    "fft_coefficient": (_fft_coefficient, (int, str)),
    "index_mass_quantile": (_index_mass_quantile, (float,)),
    "mean": (_mean, ()),
    "median": (_median, ()),
    "minimum": (_minimum, ()),
    "number_crossing_m": (_number_crossing_m, (float,)),
    "number_peaks": (_number_peaks, (int,)),
    "partial_autocorrelation": (_partial_autocorrelation, (int,)),
    "quantile": (_quantile, (float,)),
    "range_count": (_range_count, (float, float)),
    "sum_values": (_sum_values, ()),
}

FUNCTION_NAMES = tuple(sorted(_FUNCTIONS))


def _param_str(value):
    if isinstance(value, bool):
        return "True" if value else "False"
    if isinstance(value, str):
        return value
    return f"{value:g}"


@dataclass(frozen=True)
class FeatureSpec:
    """One feature: a catalog function applied to one trace channel."""

    function_name: str
    channel: str
    params: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.function_name not in _FUNCTIONS:
            raise ValueError(f"unknown feature function {self.function_name!r}")
        if self.channel not in CHANNELS:
            raise ValueError(f"unknown channel {self.channel!r}")
        object.__setattr__(self, "params", tuple(self.params))
        types = _FUNCTIONS[self.function_name][1]
        if len(self.params) != len(types):
            raise ValueError(
                f"{self.function_name} takes {len(types)} parameters, "
                f"got {len(self.params)}"
            )

    def column_name(self):
        base = f"{self.channel}__{self.function_name}"
        if not self.params:
            return base
        return base + "__" + "_".join(_param_str(p) for p in self.params)

    @classmethod
    def parse(cls, column):
        parts = column.split("__")
        if len(parts) not in (2, 3):
            raise ValueError(f"malformed feature column {column!r}")
        channel, function_name = parts[0], parts[1]
        if function_name not in _FUNCTIONS:
            raise ValueError(f"unknown feature function {function_name!r}")
        types = _FUNCTIONS[function_name][1]
        params = ()
        if len(parts) == 3:
            raw = parts[2].split("_")
            if len(raw) != len(types):
                raise ValueError(f"parameter arity mismatch in {column!r}")
            converted = []
            for text, typ in zip(raw, types):
                if typ is bool:
                    if text not in ("True", "False"):
                        raise ValueError(f"bad boolean {text!r} in {column!r}")
                    converted.append(text == "True")
                else:
                    converted.append(typ(text))
            params = tuple(converted)
        return cls(function_name, channel, params)


def compute_feature(spec, series):
    """Evaluate one FeatureSpec on a series (the channel is the caller's
    business; only the function and params matter here)."""
    x = check_array(series, ndim=1, name="series")
    if x.size < 3:
        raise ValueError(f"series must have length >= 3, got {x.size}")
    fn, types = _FUNCTIONS[spec.function_name]
    for value, typ in zip(spec.params, types):
        if typ is bool:
            if not isinstance(value, (bool, np.bool_)):
                raise TypeError(f"{spec.function_name}: expected bool, got {value!r}")
        elif typ in (int, float) and isinstance(value, bool):
            raise TypeError(f"{spec.function_name}: expected {typ.__name__}, got bool")
    return float(fn(x, *spec.params))


# parameter grid for the raw catalog; includes every parameterization
# that survives selection, plus a neighborhood of each
_CQ_BOUNDS = [
    (ql / 5, qh / 5) for ql in range(5) for qh in range(ql + 1, 6)
] + [(0.5, 0.6)]

_RAW_GRID = {
    "absolute_sum_of_changes": [()],
    "approximate_entropy": [(2, 0.1), (2, 0.3)],
    "autocorrelation": [(1,), (2,), (5,)],
    "change_quantiles": [
        ("mean", isabs, ql, qh) for isabs in (False, True) for ql, qh in _CQ_BOUNDS
    ],
    "cid_ce": [(False,)],
    "energy_ratio_by_chunks": [(10, focus) for focus in range(10)],
    "fft_aggregated": [("centroid",)],
    "fft_coefficient": [(k, "abs") for k in range(5)],
    "index_mass_quantile": [(0.1,), (0.5,), (0.9,)],
    "mean": [()],
    "median": [()],
    "minimum": [()],
    "number_crossing_m": [(-1.0,), (0.0,), (1.0,)],
    "number_peaks": [(1,), (3,), (5,)],
    "partial_autocorrelation": [(1,)],
    "quantile": [(0.1,), (0.2,), (0.8,), (0.9,)],
    "range_count": [(-1.0, 1.0)],
    "sum_values": [()],
}


def raw_catalog(channels=CHANNELS):
    """Full function x parameterization x channel grid, in channel order."""
    specs = []
    for channel in channels:
        for name in sorted(_RAW_GRID):
            for params in _RAW_GRID[name]:
                specs.append(FeatureSpec(name, channel, params))
    return specs


# the 32 features surviving consensus selection at paper scale, keyed by
# channel; counts per channel: ps_norm 9, ps_mean 1, pc_norm 8, v_norm 5,
# v_mean 6, sigma 3, f_best 0, pc_mean 0
_SELECTED = {
    "ps_norm": [
        ("approximate_entropy", (2, 0.1)),
        ("autocorrelation", (1,)),
        ("change_quantiles", ("mean", False, 0.4, 0.6)),
        ("cid_ce", (False,)),
        ("median", ()),
        ("number_crossing_m", (1.0,)),
        ("partial_autocorrelation", (1,)),
        ("quantile", (0.1,)),
        ("range_count", (-1.0, 1.0)),
    ],
    "ps_mean": [
        ("change_quantiles", ("mean", True, 0.4, 0.6)),
    ],
    "pc_norm": [
        ("absolute_sum_of_changes", ()),
        ("change_quantiles", ("mean", False, 0.5, 0.6)),
        ("fft_coefficient", (0, "abs")),
        ("mean", ()),
        ("median", ()),
        ("quantile", (0.1,)),
        ("range_count", (-1.0, 1.0)),
        ("sum_values", ()),
    ],
    "v_norm": [
        ("energy_ratio_by_chunks", (10, 0)),
        ("index_mass_quantile", (0.1,)),
        ("median", ()),
        ("minimum", ()),
        ("quantile", (0.1,)),
    ],
    "v_mean": [
        ("energy_ratio_by_chunks", (10, 0)),
        ("fft_aggregated", ("centroid",)),
        ("index_mass_quantile", (0.1,)),
        ("median", ()),
        ("minimum", ()),
        ("quantile", (0.1,)),
    ],
    "sigma": [
        ("change_quantiles", ("mean", False, 0.2, 0.6)),
        ("number_peaks", (1,)),
        ("quantile", (0.1,)),
    ],
}


def selected_catalog():
    """The fixed 32-feature catalog, ordered by channel then function."""
    specs = []
    for channel in CHANNELS:
        for name, params in _SELECTED.get(channel, []):
            specs.append(FeatureSpec(name, channel, params))
    return specs
