"""End-to-end orchestration: per-window RR series, quality population,
fusion strategies, low-quality filtering, and MAE/PCC evaluation.

A ``MethodCandidateSet`` packs everything one recording contributes on a
shared window grid: per-method RR series under each estimator, normalized
quality vectors, and the ground-truth RR series processed by the identical
chain.  Fusion strategies pick one candidate method per window; they never
fabricate values, so every fused RR is one of that window's candidates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EmptySeries,
    FractionOutOfRange,
    GridMismatch,
    InsufficientData,
    MissingMask,
    MissingModel,
)
from .quality import (
    NormalizationStats,
    PreferenceTable,
    QualityVector,
    compute_quality_vector,
    fit_normalization,
    normalize,
    orient,
)
from .scoring import MetricMask, subset_search
from .signals import BandLimits, Segment, TimeSeries, WindowingConfig, bandpass, detrend, segment
from .spectral import ESTIMATORS, MusicConfig, WelchConfig, estimate_rr

STRATEGY_KINDS = (
    "baseline",
    "fmm",
    "smm",
    "smm_transfer",
    "regressor",
    "classifier",
    "oracle_gt_mae",
    "oracle_gt_smm",
)


@dataclass(frozen=True)
class ChainConfig:
    """Everything the segment -> detrend -> spectrum -> RR chain needs."""

    windowing: WindowingConfig = WindowingConfig()
    band: BandLimits = BandLimits()
    estimator: str = "welch"
    music: MusicConfig = MusicConfig()
    welch: WelchConfig = WelchConfig()
    n_fft: int = 4096


@dataclass
class MethodCandidateSet:
    """Per-recording candidates on one window grid."""

    recording_id: str
    methods: list[str]
    gt_rr: np.ndarray                       # (W,) default-estimator GT series
    rr: np.ndarray                          # (W, M) default-estimator candidates
    quality: np.ndarray                     # (W, M, F) normalized metric values
    valid: np.ndarray                       # (W, M) quality validity
    group_tags: dict[str, str] = field(default_factory=dict)
    rr_grid: dict[str, np.ndarray] = field(default_factory=dict)   # estimator -> (W, M)
    gt_grid: dict[str, np.ndarray] = field(default_factory=dict)   # estimator -> (W,)
    stats: NormalizationStats | None = None

    @property
    def window_count(self) -> int:
        return self.gt_rr.size

    def abs_errors(self) -> np.ndarray:
        return np.abs(self.rr - self.gt_rr[:, None])

    def method_index(self, method_id: str) -> int:
        return self.methods.index(method_id)

    def restrict(self, methods: list[str]) -> "MethodCandidateSet":
        """Candidate set over a subset of methods (scenario filtering)."""
        idx = [self.method_index(m) for m in methods]
        return MethodCandidateSet(
            recording_id=self.recording_id,
            methods=list(methods),
            gt_rr=self.gt_rr,
            rr=self.rr[:, idx],
            quality=self.quality[:, idx, :],
            valid=self.valid[:, idx],
            group_tags={m: self.group_tags.get(m, "") for m in methods},
            rr_grid={e: g[:, idx] for e, g in self.rr_grid.items()},
            gt_grid=dict(self.gt_grid),
            stats=self.stats,
        )


def segments_of(ts: TimeSeries, chain: ChainConfig) -> list[Segment]:
    """Band-pass the full recording, then slice and detrend the windows."""
    filtered = bandpass(ts, chain.band)
    return [detrend(s) for s in segment(filtered, chain.windowing)]


def rr_series(ts: TimeSeries, chain: ChainConfig, estimator: str | None = None) -> np.ndarray:
    """Per-window RR in bpm through the standard chain; NaN where estimation fails."""
    est = estimator or chain.estimator
    return np.array(
        [
            estimate_rr(s, est, chain.band, chain.music, chain.welch, chain.n_fft).rr_bpm
            for s in segments_of(ts, chain)
        ]
    )


def gt_rr_series(gt: TimeSeries, chain: ChainConfig, estimator: str | None = None) -> np.ndarray:
    """Ground-truth RR series via the identical chain as the candidates."""
    if gt.duration_s < chain.windowing.window_s:
        raise GridMismatch(
            f"ground truth covers {gt.duration_s:.3g} s, below one {chain.windowing.window_s} s window"
        )
    return rr_series(gt, chain, estimator)


def quality_matrix(
    candidates: dict[str, TimeSeries],
    chain: ChainConfig,
    stats: NormalizationStats | None = None,
    prefs: PreferenceTable = PreferenceTable(),
):
    """Oriented quality vectors for every (window, method), then normalize.

    When ``stats`` is None the normalization population is this recording's
    own vectors across all methods and windows; passing frozen stats gives
    the trainset-transfer mode.
    """
    methods = list(candidates)
    oriented: dict[str, list[QualityVector]] = {}
    for m in methods:
        segs = segments_of(candidates[m], chain)
        oriented[m] = [orient(compute_quality_vector(s, chain.band), prefs) for s in segs]
    counts = {len(v) for v in oriented.values()}
    if len(counts) != 1:
        raise GridMismatch(f"methods disagree on window count: {sorted(counts)}")
    if stats is None:
        population = [qv for vecs in oriented.values() for qv in vecs]
        stats = fit_normalization(population, population_id="self")
    w = counts.pop()
    f = len(oriented[methods[0]][0].values)
    quality = np.zeros((w, len(methods), f))
    valid = np.zeros((w, len(methods)), dtype=bool)
    for j, m in enumerate(methods):
        for i, qv in enumerate(oriented[m]):
            nv = normalize(qv, stats)
            quality[i, j, :] = nv.values
            valid[i, j] = nv.valid
    return quality, valid, stats


def build_candidate_set(
    recording_id: str,
    gt: TimeSeries,
    candidates: dict[str, TimeSeries],
    chain: ChainConfig,
    group_tags: dict[str, str] | None = None,
    stats: NormalizationStats | None = None,
    estimators: tuple[str, ...] = ESTIMATORS,
) -> MethodCandidateSet:
    """Process raw signals into a candidate set on a shared window grid."""
    from .signals import resample

    methods = list(candidates)
    if not methods:
        raise InsufficientData("candidate set needs at least one method")
    rate = candidates[methods[0]].sample_rate_hz
    aligned = {
        m: ts if ts.sample_rate_hz == rate else resample(ts, rate) for m, ts in candidates.items()
    }
    gt_aligned = gt if gt.sample_rate_hz == rate else resample(gt, rate)

    rr_grid = {}
    for est in estimators:
        rr_grid[est] = np.column_stack([rr_series(aligned[m], chain, est) for m in methods])
    gt_grid = {est: gt_rr_series(gt_aligned, chain, est) for est in estimators}
    for est in estimators:
        if gt_grid[est].size != rr_grid[est].shape[0]:
            raise GridMismatch("ground truth and candidates disagree on window count")
    quality, valid, stats = quality_matrix(aligned, chain, stats)
    if quality.shape[0] != gt_grid[chain.estimator].size:
        raise GridMismatch("quality grid does not match the RR window grid")
    return MethodCandidateSet(
        recording_id=recording_id,
        methods=methods,
        gt_rr=gt_grid[chain.estimator],
        rr=rr_grid[chain.estimator],
        quality=quality,
        valid=valid,
        group_tags=dict(group_tags or {}),
        rr_grid=rr_grid,
        gt_grid=gt_grid,
        stats=stats,
    )


# ---------------------------------------------------------------------------
# fusion strategies
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FusionStrategy:
    kind: str
    method: str | None = None        # baseline
    estimator: str | None = None     # baseline
    mask: MetricMask | None = None   # smm variants
    model: object | None = None      # regressor / classifier
    scaler: object | None = None
    label: str | None = None

    def name(self) -> str:
        return self.label or self.kind


@dataclass
class FusionTrace:
    """Per-window record of candidates, scores, choice, and error."""

    strategy: str
    methods: list[str]
    candidates: np.ndarray       # (W, M) RR values the strategy chose among
    scores: np.ndarray           # (W, M) selection scores (lower wins) or NaN
    chosen: np.ndarray           # (W,) method index, -1 where skipped
    fused_rr: np.ndarray         # (W,) NaN where skipped
    gt_rr: np.ndarray            # (W,)
    abs_error: np.ndarray        # (W,) NaN where skipped

    @property
    def kept(self) -> np.ndarray:
        return self.chosen >= 0

    @property
    def coverage_fraction(self) -> float:
        return float(self.kept.mean()) if self.chosen.size else 0.0


def _selection_scores(cset: MethodCandidateSet, strategy: FusionStrategy) -> np.ndarray:
    """Lower-is-better score per (window, method); NaN marks an unusable candidate."""
    w, m = cset.rr.shape
    if strategy.kind == "baseline":
        if strategy.method is None:
            raise MissingModel("baseline strategy needs a frozen method")
        scores = np.full((w, m), np.nan)
        scores[:, cset.method_index(strategy.method)] = 0.0
        return scores
    if strategy.kind == "fmm":
        scores = cset.quality.mean(axis=2)
    elif strategy.kind in ("smm", "smm_transfer", "oracle_gt_smm"):
        mask = strategy.mask
        if mask is None:
            if strategy.kind != "oracle_gt_smm":
                raise MissingMask(f"{strategy.kind} strategy needs a metric mask")
            mask = subset_search(cset.quality, cset.abs_errors(), cset.valid).mask
        if len(mask.included) != cset.quality.shape[2]:
            raise MissingMask(
                f"mask arity {len(mask.included)} vs {cset.quality.shape[2]} metrics"
            )
        scores = cset.quality[:, :, list(mask.indices)].mean(axis=2)
    elif strategy.kind == "regressor":
        if strategy.model is None:
            raise MissingModel("regressor strategy needs a trained model")
        feats = cset.quality.reshape(w * m, -1)
        if strategy.scaler is not None:
            feats = strategy.scaler.transform(feats)
        scores = np.asarray(strategy.model.predict(feats), dtype=np.float64).reshape(w, m)
    elif strategy.kind == "classifier":
        if strategy.model is None:
            raise MissingModel("classifier strategy needs a trained model")
        feats = cset.quality.reshape(w, -1)
        if strategy.scaler is not None:
            per_method = cset.quality.reshape(w * m, -1)
            feats = strategy.scaler.transform(per_method).reshape(w, -1)
        picked = np.asarray(strategy.model.predict_best_method(feats), dtype=int)
        # the pick is final: other methods stay unusable so a missing estimate
        # skips the window instead of falling back
        scores = np.full((w, m), np.nan)
        scores[np.arange(w), picked] = 0.0
        return scores
    elif strategy.kind == "oracle_gt_mae":
        # the oracle consults true errors directly and ignores quality validity
        return cset.abs_errors().astype(np.float64, copy=True)
    else:
        raise MissingModel(f"unknown strategy kind {strategy.kind!r}")
    scores = scores.astype(np.float64, copy=True)
    scores[~cset.valid] = np.nan
    return scores


def fuse(cset: MethodCandidateSet, strategy: FusionStrategy) -> FusionTrace:
    """Select one method per window and collect the fused RR trace.

    Windows where the chosen method's estimate is missing, or where no
    candidate is usable, are skipped and count against coverage; they are
    never silently filled from another method.
    """
    w, m = cset.rr.shape
    if strategy.kind == "baseline" and strategy.estimator:
        candidates = cset.rr_grid.get(strategy.estimator)
        gt = cset.gt_grid.get(strategy.estimator)
        if candidates is None or gt is None:
            raise MissingModel(f"baseline estimator {strategy.estimator!r} not in the RR grid")
    else:
        candidates, gt = cset.rr, cset.gt_rr
    scores = _selection_scores(cset, strategy)
    usable = np.isfinite(scores) & np.isfinite(candidates)
    masked = np.where(usable, scores, np.inf)
    chosen = np.argmin(masked, axis=1)
    rows = np.arange(w)
    kept = np.isfinite(masked[rows, chosen])
    chosen = np.where(kept, chosen, -1)
    fused = np.where(kept, candidates[rows, np.maximum(chosen, 0)], np.nan)
    err = np.abs(fused - gt)
    return FusionTrace(
        strategy=strategy.name(),
        methods=list(cset.methods),
        candidates=candidates,
        scores=scores,
        chosen=chosen,
        fused_rr=fused,
        gt_rr=gt,
        abs_error=err,
    )


def baseline_select(cset: MethodCandidateSet) -> tuple[str, str]:
    """The (method, estimator) pair with the lowest training MAE.

    Ties resolve to the lowest method index, then estimator declaration
    order.  The returned pair is meant to be frozen and applied to
    evaluation data.
    """
    if not cset.rr_grid:
        raise InsufficientData("baseline selection needs the full estimator grid")
    best = None
    for e_idx, est in enumerate(ESTIMATORS):
        if est not in cset.rr_grid:
            continue
        grid = cset.rr_grid[est]
        gt = cset.gt_grid[est]
        for m_idx, method in enumerate(cset.methods):
            err = np.abs(grid[:, m_idx] - gt)
            err = err[np.isfinite(err)]
            if err.size == 0:
                continue
            key = (float(err.mean()), m_idx, e_idx)
            if best is None or key < best:
                best = key
                best_pair = (method, est)
    if best is None:
        raise InsufficientData("no (method, estimator) pair produced finite errors")
    return best_pair


@dataclass(frozen=True)
class EvalReport:
    mae_bpm: float
    pcc: float
    pcc_defined: bool
    window_count: int
    coverage_fraction: float


def evaluate(est: np.ndarray, gt: np.ndarray, coverage_fraction: float = 1.0) -> EvalReport:
    """MAE and Pearson correlation over kept windows.

    A constant series on either side leaves the correlation undefined; it is
    reported as 0 with the defined flag cleared, and reports render it with
    a marker.
    """
    est = np.asarray(est, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    keep = np.isfinite(est) & np.isfinite(gt)
    if not keep.any():
        raise EmptySeries("no windows to evaluate")
    e, g = est[keep], gt[keep]
    mae = float(np.abs(e - g).mean())
    if e.size < 2 or e.std() == 0.0 or g.std() == 0.0:
        return EvalReport(mae, 0.0, False, int(e.size), coverage_fraction)
    pcc = float(np.corrcoef(e, g)[0, 1])
    return EvalReport(mae, pcc, True, int(e.size), coverage_fraction)


def evaluate_trace(trace: FusionTrace) -> EvalReport:
    return evaluate(trace.fused_rr, trace.gt_rr, trace.coverage_fraction)


def filter_segments(badness: np.ndarray, q: float) -> np.ndarray:
    """Kept window indices after dropping the worst fraction ``q``.

    Drops the ceil(q * W) windows with the highest badness score; ties drop
    the higher window index first.  Returns kept indices in ascending order.
    """
    if not 0.0 <= q <= 0.5:
        raise FractionOutOfRange(f"filter fraction {q} outside [0, 0.5]")
    badness = np.asarray(badness, dtype=np.float64)
    w = badness.size
    n_drop = int(np.ceil(q * w))
    if n_drop == 0:
        return np.arange(w)
    order = sorted(range(w), key=lambda i: (-badness[i], -i))
    dropped = set(order[:n_drop])
    return np.array([i for i in range(w) if i not in dropped], dtype=int)


FILTER_FRACTIONS = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5)


def filter_sweep(
    rr: np.ndarray, gt: np.ndarray, badness: np.ndarray, fractions=FILTER_FRACTIONS
) -> list[tuple[float, EvalReport]]:
    """Evaluate one method's RR series at each filtering fraction."""
    out = []
    w = rr.size
    for q in fractions:
        kept = filter_segments(badness, q)
        out.append((q, evaluate(rr[kept], gt[kept], coverage_fraction=kept.size / w)))
    return out


def sweep_report(cset: MethodCandidateSet) -> dict[tuple[str, str], EvalReport]:
    """MAE/PCC per (method, estimator) cell over the full grid."""
    out: dict[tuple[str, str], EvalReport] = {}
    for est, grid in cset.rr_grid.items():
        gt = cset.gt_grid[est]
        for m_idx, method in enumerate(cset.methods):
            out[(method, est)] = evaluate(grid[:, m_idx], gt)
    return out


def best_cell(report: dict[tuple[str, str], EvalReport]) -> tuple[str, str]:
    """Grid cell with the lowest MAE; ties keep declaration order."""
    return min(report, key=lambda k: report[k].mae_bpm)
