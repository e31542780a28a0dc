"""Real-data preparation: quantile matching, KS-chosen power transform, flooring."""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import pdtr

from .core import CountMatrix, DataError

log = logging.getLogger(__name__)

ALPHA_GRID = np.round(np.arange(1, 101) / 100.0, 2)


@dataclass
class PreprocessReport:
    scales: list[float] = field(default_factory=list)
    alpha: float = 1.0
    ks: float = float("nan")
    dropped_units: list[int] = field(default_factory=list)
    skipped_columns: list[int] = field(default_factory=list)
    quantile: float = 0.95
    reference_quantile: float = float("nan")
    unit_axis: str = "rows"

    def to_dict(self) -> dict:
        return asdict(self)


def _as_nonneg(data) -> np.ndarray:
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 2:
        raise DataError("expected a 2-D matrix")
    if not np.all(np.isfinite(arr)):
        raise DataError("matrix contains non-finite values")
    if np.any(arr < 0):
        bad = np.argwhere(arr < 0)[0]
        raise DataError(f"negative value at row {bad[0]}, column {bad[1]}")
    return arr


def quantile_normalize(data, q: float = 0.95, axis: str = "rows"):
    """Rescale each statistical unit so its ``q``-quantile equals the median one.

    Returns ``(normalized, scales, dropped)``: kept units in original order,
    their scale factors, and the indices of units with a zero q-quantile
    (which cannot be matched and are removed).
    """
    arr = _as_nonneg(data)
    if axis not in ("rows", "columns"):
        raise ValueError("axis must be 'rows' or 'columns'")
    if not (0.0 < q < 1.0):
        raise ValueError("q must lie in (0, 1)")
    units = arr if axis == "rows" else arr.T
    qs = np.quantile(units, q, axis=1)
    keep = qs > 0
    dropped = np.flatnonzero(~keep).tolist()
    if not keep.any():
        raise DataError("every unit has a zero quantile")
    ref = float(np.median(qs[keep]))
    scales = ref / qs[keep]
    out = units[keep] * scales[:, None]
    if axis == "columns":
        out = out.T
    return out, scales, dropped


def _poisson_ks(col: np.ndarray) -> float:
    """KS distance between an integer sample and Poisson with its mean."""
    ints = col.astype(np.int64)
    top = int(ints.max())
    ecdf = np.cumsum(np.bincount(ints, minlength=top + 1)) / ints.size
    ref = pdtr(np.arange(top + 1), ints.mean())
    # both CDFs are step functions jumping at integers, so the sup is on the grid
    return float(np.max(np.abs(ecdf - ref)))


def ks_objective(data, alpha: float) -> tuple[float, list[int]]:
    """Mean over columns of the Poisson KS distance of ``floor(x ** alpha)``.

    Columns that are constant after the transform carry no distributional
    information; they are skipped and listed.
    """
    arr = np.floor(np.power(_as_nonneg(data), alpha))
    vals, skipped = [], []
    for j in range(arr.shape[1]):
        col = arr[:, j]
        if col.min() == col.max():
            skipped.append(j)
            continue
        vals.append(_poisson_ks(col))
    if not vals:
        return float("nan"), skipped
    return float(np.mean(vals)), skipped


def power_transform_ks(data, grid=ALPHA_GRID):
    """Pick the exponent in ``grid`` minimising :func:`ks_objective`.

    Ties go to the larger exponent. Returns ``(data ** alpha, alpha, ks,
    skipped_columns)``.
    """
    arr = _as_nonneg(data)
    best_alpha, best_ks, best_skip = None, np.inf, []
    for a in sorted(float(x) for x in grid):
        ks, skipped = ks_objective(arr, a)
        if np.isnan(ks):
            continue
        if ks <= best_ks:
            best_alpha, best_ks, best_skip = a, ks, skipped
    if best_alpha is None:
        raise DataError("every column is constant for every exponent")
    if best_skip:
        log.info("columns %s constant after transform; excluded from KS", best_skip)
    return np.power(arr, best_alpha), best_alpha, best_ks, best_skip


def floor_counts(data, names=None) -> CountMatrix:
    arr = _as_nonneg(data)
    return CountMatrix(np.floor(arr).astype(np.int64), names)


def preprocess(data, names=None, q: float = 0.95, axis: str = "rows",
               grid=ALPHA_GRID) -> tuple[CountMatrix, PreprocessReport]:
    """Normalize, power-transform and floor a non-negative matrix (samples as rows)."""
    arr = _as_nonneg(data)
    normed, scales, dropped = quantile_normalize(arr, q, axis)
    if axis == "columns" and names is not None:
        names = [s for i, s in enumerate(names) if i not in set(dropped)]
    transformed, alpha, ks, skipped = power_transform_ks(normed, grid)
    counts = floor_counts(transformed, names)
    units = arr if axis == "rows" else arr.T
    qs = np.quantile(units, q, axis=1)
    report = PreprocessReport(
        scales=[float(s) for s in scales], alpha=alpha, ks=ks,
        dropped_units=dropped, skipped_columns=skipped, quantile=q,
        reference_quantile=float(np.median(qs[qs > 0])), unit_axis=axis)
    return counts, report
