"""Composite quality scores and the exhaustive metric-subset search.

A composite score for a segment is the mean of its normalized metrics, over
all ten (full mean) or over a chosen subset (subset mean).  The subset
search enumerates every mask of two or more metrics, selects the
lowest-scoring method per window under each mask, and keeps the mask whose
selections give the lowest mean absolute RR error against ground truth.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from . import _kernels
from .errors import ArityMismatch, EmptyMask, InsufficientData, NoValidCandidates, WrongStage
from .quality import METRICS, NORMALIZED, QualityVector


@dataclass(frozen=True)
class MetricMask:
    included: tuple[bool, ...]

    def __post_init__(self):
        object.__setattr__(self, "included", tuple(bool(b) for b in self.included))

    @property
    def popcount(self) -> int:
        return sum(self.included)

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(i for i, b in enumerate(self.included) if b)

    @classmethod
    def from_indices(cls, indices, arity: int = len(METRICS)) -> "MetricMask":
        return cls(tuple(i in set(indices) for i in range(arity)))

    @classmethod
    def full(cls, arity: int = len(METRICS)) -> "MetricMask":
        return cls((True,) * arity)

    def metric_names(self) -> tuple[str, ...]:
        if len(self.included) != len(METRICS):
            raise ArityMismatch(f"mask arity {len(self.included)} is not {len(METRICS)}")
        return tuple(METRICS[i] for i in self.indices)


@dataclass(frozen=True)
class SubsetResult:
    mask: MetricMask
    mae_bpm: float
    source_population: str = ""


def fmm(qv: QualityVector) -> float:
    """Mean of all normalized metrics (the full-mask composite)."""
    if qv.stage != NORMALIZED:
        raise WrongStage(f"composite scores need NORMALIZED vectors, got {qv.stage}")
    return float(qv.values.mean())


def smm(qv: QualityVector, mask: MetricMask) -> float:
    """Mean over the masked subset of normalized metrics."""
    if qv.stage != NORMALIZED:
        raise WrongStage(f"composite scores need NORMALIZED vectors, got {qv.stage}")
    if mask.popcount < 1:
        raise EmptyMask("subset mean needs at least one included metric")
    if len(mask.included) != qv.values.size:
        raise ArityMismatch(f"mask arity {len(mask.included)} vs vector {qv.values.size}")
    return float(qv.values[list(mask.indices)].mean())


def select_by_score(scores) -> int:
    """Index of the lowest finite score; ties go to the lowest index."""
    arr = np.asarray(scores, dtype=np.float64)
    finite = np.isfinite(arr)
    if not finite.any():
        raise NoValidCandidates("every candidate score is invalid")
    masked = np.where(finite, arr, np.inf)
    return int(np.argmin(masked))


def enumerate_masks(arity: int, min_popcount: int = 2) -> list[MetricMask]:
    """All masks with at least ``min_popcount`` metrics, in tie-break order.

    Order is ascending popcount, then lexicographic on the sorted index
    tuple, so a scan that keeps the first strict improvement realizes the
    smaller-popcount-then-lexicographic preference.
    """
    out = []
    for pop in range(min_popcount, arity + 1):
        for combo in combinations(range(arity), pop):
            out.append(MetricMask.from_indices(combo, arity))
    return out


def _as_matrix(masks: list[MetricMask]) -> np.ndarray:
    return np.array([m.included for m in masks], dtype=np.uint8)


def selection_mae(
    quality: np.ndarray, errors: np.ndarray, mask: MetricMask, valid: np.ndarray | None = None
) -> float:
    """MAE of per-window selections under one mask.

    quality: (W, M, F) normalized values; errors: (W, M) absolute errors;
    valid: (W, M) booleans, False excluding a method from a window.  Windows
    with no valid method are skipped.
    """
    w, m, f = quality.shape
    if len(mask.included) != f:
        raise ArityMismatch(f"mask arity {len(mask.included)} vs {f} metrics")
    if mask.popcount < 1:
        raise EmptyMask("selection needs a non-empty mask")
    valid = _effective_valid(errors, valid)
    scores = quality[:, :, list(mask.indices)].mean(axis=2)
    scores[~valid] = np.inf
    sel = np.argmin(scores, axis=1)
    rows = np.arange(w)
    kept = np.isfinite(scores[rows, sel])
    if not kept.any():
        raise InsufficientData("no window has a valid candidate under this mask")
    return float(np.abs(errors[rows, sel])[kept].mean())


def _effective_valid(errors: np.ndarray, valid: np.ndarray | None) -> np.ndarray:
    eff = np.isfinite(errors)
    if valid is not None:
        eff = eff & valid.astype(bool)
    return eff


def subset_search(
    quality: np.ndarray,
    errors: np.ndarray,
    valid: np.ndarray | None = None,
    min_popcount: int = 2,
    population_id: str = "",
) -> SubsetResult:
    """Exhaustive search for the metric subset minimizing selection MAE.

    Enumerates every mask of ``min_popcount`` or more metrics (1013 masks
    for ten metrics).  MAE ties resolve to the smaller popcount and then the
    lexicographically smallest index set, independent of evaluation order.
    """
    quality = np.ascontiguousarray(quality, dtype=np.float64)
    errors = np.ascontiguousarray(errors, dtype=np.float64)
    if quality.ndim != 3 or errors.shape != quality.shape[:2]:
        raise InsufficientData(f"shape mismatch: quality {quality.shape}, errors {errors.shape}")
    w, m, f = quality.shape
    if w < 1 or m < 2:
        raise InsufficientData(f"need at least 1 window and 2 methods, got {w}x{m}")
    masks = enumerate_masks(f, min_popcount)
    eff_valid = np.ascontiguousarray(_effective_valid(errors, valid), dtype=np.uint8)
    best_idx, best_mae = _kernels.subset_scan(
        _as_matrix(masks), quality, np.abs(errors), eff_valid
    )
    if best_idx < 0:
        raise InsufficientData("no mask produced a valid selection")
    return SubsetResult(masks[best_idx], float(best_mae), population_id)


def transfer_subset(
    result: SubsetResult,
    quality: np.ndarray,
    errors: np.ndarray,
    valid: np.ndarray | None = None,
) -> float:
    """Apply a frozen mask to a new population and report its MAE (no refit)."""
    quality = np.ascontiguousarray(quality, dtype=np.float64)
    errors = np.ascontiguousarray(errors, dtype=np.float64)
    if quality.ndim != 3 or len(result.mask.included) != quality.shape[2]:
        raise ArityMismatch(
            f"mask arity {len(result.mask.included)} vs target {quality.shape} metrics"
        )
    return selection_mae(quality, errors, result.mask, valid)
