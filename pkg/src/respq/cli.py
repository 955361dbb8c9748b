"""Command-line entry points.

Subcommands cover the whole offline workflow: generate a synthetic
benchmark, estimate RR per window, score quality, search metric subsets,
train the learned predictors, fuse, filter, sweep the estimator grid, and
render reports.  Every command is deterministic given (files, config, seed);
RESPQ_THREADS caps internal parallelism.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import fileio, svgplot
from .errors import (
    ConfigError,
    InsufficientData,
    MissingInput,
    ParseError,
    RespqError,
)
from .fusion import (
    FILTER_FRACTIONS,
    FusionStrategy,
    MethodCandidateSet,
    baseline_select,
    best_cell,
    evaluate_trace,
    filter_sweep,
    fuse,
    gt_rr_series,
    rr_series,
    segments_of,
    sweep_report,
)
from .predictors import (
    TrainConfig,
    fit_scaler,
    labels_from_errors,
    load_model,
    save_model,
    train_classifier,
    train_regressor,
)
from .quality import (
    METRICS,
    NormalizationStats,
    PreferenceTable,
    compute_quality_vector,
    fit_normalization,
    normalize,
    orient,
)
from .scoring import MetricMask, subset_search
from .signals import TimeSeries, resample
from .spectral import ESTIMATORS
from .synth import PRESETS, gen_benchmark

SCENARIOS = ("ALL", "NLM", "DLM")
_DISPLAY_TO_METRIC = {v: k for k, v in fileio.METRIC_DISPLAY.items()}


def thread_count() -> int:
    raw = os.environ.get("RESPQ_THREADS", "")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ConfigError("RESPQ_THREADS", f"cannot parse {raw!r} as an integer")
    return min(4, os.cpu_count() or 1)


def _map(fn, items):
    items = list(items)
    n = thread_count()
    if n <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# shared loading helpers
# ---------------------------------------------------------------------------


def _load_recordings(signals_path, streams_path):
    """Group signal streams into per-recording GT and candidate series."""
    signals = fileio.read_signals(signals_path)
    streams = fileio.read_streams(streams_path)
    recordings: dict[str, dict] = {}
    for rec, method, rate, tag in streams:
        entry = recordings.setdefault(rec, {"gt": None, "methods": {}, "tags": {}})
        key = (rec, method)
        if key not in signals:
            raise MissingInput(f"stream {rec}/{method} has no samples in the signals file")
        ts = TimeSeries(signals[key], rate, method)
        if tag == "GT":
            entry["gt"] = ts
        else:
            entry["methods"][method] = ts
            entry["tags"][method] = tag
    for rec, entry in recordings.items():
        if entry["gt"] is None:
            raise MissingInput(f"recording {rec} has no GT stream")
        if not entry["methods"]:
            raise InsufficientData(f"recording {rec} has no candidate methods")
    return dict(sorted(recordings.items()))


def _aligned_methods(entry, chain):
    rate = next(iter(entry["methods"].values())).sample_rate_hz
    methods = {
        m: ts if ts.sample_rate_hz == rate else resample(ts, rate)
        for m, ts in entry["methods"].items()
    }
    gt = entry["gt"]
    gt = gt if gt.sample_rate_hz == rate else resample(gt, rate)
    return gt, methods


def _scenario_methods(methods: list[str], tags: dict[str, str], scenario: str) -> list[str]:
    if scenario == "ALL":
        return list(methods)
    picked = [m for m in methods if tags.get(m, "") == scenario]
    if not picked:
        raise InsufficientData(f"no methods carry the {scenario} tag")
    return picked


def _mask_from_arg(arg: str) -> MetricMask:
    names = [part.strip() for part in arg.split(",") if part.strip()]
    indices = []
    for name in names:
        key = _DISPLAY_TO_METRIC.get(name, name.lower())
        if key not in METRICS:
            raise ConfigError("mask", f"unknown metric {name!r}")
        indices.append(METRICS.index(key))
    if len(indices) < 1:
        raise ConfigError("mask", "mask needs at least one metric")
    return MetricMask.from_indices(indices)


def _build_sets_from_tables(rr_path, gt_path, quality_path, streams_path, cfg):
    """Reassemble per-recording candidate sets from the interchange tables."""
    rr_rows = fileio.read_rr(rr_path)
    gt_rows = fileio.read_gt_rr(gt_path)
    q_rows = fileio.read_quality(quality_path)
    streams = fileio.read_streams(streams_path)

    method_order: dict[str, list[str]] = {}
    tags: dict[str, dict[str, str]] = {}
    for rec, method, _, tag in streams:
        if tag == "GT":
            continue
        method_order.setdefault(rec, [])
        if method not in method_order[rec]:
            method_order[rec].append(method)
        tags.setdefault(rec, {})[method] = tag

    gt_grid: dict[str, dict[str, dict[int, float]]] = {}
    for rec, est, w, rr in gt_rows:
        gt_grid.setdefault(rec, {}).setdefault(est, {})[w] = rr
    rr_grid: dict[str, dict[str, dict[str, dict[int, float]]]] = {}
    for rec, method, est, w, rr in rr_rows:
        rr_grid.setdefault(rec, {}).setdefault(est, {}).setdefault(method, {})[w] = rr
    quality: dict[str, dict[str, dict[int, tuple]]] = {}
    for rec, method, w, valid, raw, oriented, norm in q_rows:
        quality.setdefault(rec, {}).setdefault(method, {})[w] = (valid, norm)

    sets = []
    for rec in sorted(rr_grid):
        methods = [m for m in method_order.get(rec, sorted(rr_grid[rec].get(cfg.estimator, {}))) if m]
        est_grids = {}
        windows = None
        for est in ESTIMATORS:
            per_est = rr_grid[rec].get(est)
            if per_est is None:
                continue
            w_indices = sorted(next(iter(per_est.values())).keys())
            windows = w_indices if windows is None else windows
            grid = np.full((len(w_indices), len(methods)), np.nan)
            for j, m in enumerate(methods):
                for i, w in enumerate(w_indices):
                    grid[i, j] = per_est[m][w]
            est_grids[est] = grid
        if windows is None:
            raise MissingInput(f"recording {rec} has no RR rows")
        gt_grids = {}
        for est, per_w in gt_grid.get(rec, {}).items():
            gt_grids[est] = np.array([per_w[w] for w in windows])
        if cfg.estimator not in est_grids or cfg.estimator not in gt_grids:
            raise MissingInput(f"recording {rec} lacks {cfg.estimator!r} rows")
        qual = np.zeros((len(windows), len(methods), len(METRICS)))
        valid = np.zeros((len(windows), len(methods)), dtype=bool)
        for j, m in enumerate(methods):
            per_w = quality.get(rec, {}).get(m)
            if per_w is None:
                raise MissingInput(f"recording {rec} method {m} missing from the quality table")
            for i, w in enumerate(windows):
                v, norm = per_w[w]
                qual[i, j, :] = norm
                valid[i, j] = v
        sets.append(
            MethodCandidateSet(
                recording_id=rec,
                methods=methods,
                gt_rr=gt_grids[cfg.estimator],
                rr=est_grids[cfg.estimator],
                quality=qual,
                valid=valid,
                group_tags=tags.get(rec, {}),
                rr_grid=est_grids,
                gt_grid=gt_grids,
            )
        )
    return sets


def merge_sets(sets: list[MethodCandidateSet]) -> MethodCandidateSet:
    """Concatenate recordings along the window axis (shared method list)."""
    first = sets[0]
    for s in sets[1:]:
        if s.methods != first.methods:
            raise InsufficientData("recordings disagree on the method list")
    ests = [e for e in first.rr_grid if all(e in s.rr_grid for s in sets)]
    return MethodCandidateSet(
        recording_id="+".join(s.recording_id for s in sets),
        methods=list(first.methods),
        gt_rr=np.concatenate([s.gt_rr for s in sets]),
        rr=np.vstack([s.rr for s in sets]),
        quality=np.vstack([s.quality for s in sets]),
        valid=np.vstack([s.valid for s in sets]),
        group_tags=dict(first.group_tags),
        rr_grid={e: np.vstack([s.rr_grid[e] for s in sets]) for e in ests},
        gt_grid={e: np.concatenate([s.gt_grid[e] for s in sets]) for e in ests},
    )


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_synth(args) -> int:
    cfg = fileio.load_config(args.config)
    seed = args.seed if args.seed is not None else cfg.seed
    series = {}
    streams = []
    for r in range(args.recordings):
        rec = f"rec{r:03d}"
        gt, methods = gen_benchmark(args.preset, seed + r, args.duration, args.fs)
        series[(rec, "gt")] = gt.samples
        streams.append((rec, "gt", gt.sample_rate_hz, "GT"))
        for i, (m, ts) in enumerate(methods.items()):
            series[(rec, m)] = ts.samples
            streams.append((rec, m, ts.sample_rate_hz, "NLM" if i % 2 == 0 else "DLM"))
    os.makedirs(args.out, exist_ok=True)
    fileio.write_signals(os.path.join(args.out, "signals.csv"), series)
    fileio.write_streams(os.path.join(args.out, "streams.csv"), streams)
    print(f"wrote {len(series)} streams for {args.recordings} recording(s) to {args.out}")
    return 0


def cmd_estimate(args) -> int:
    cfg = fileio.load_config(args.config)
    chain = cfg.chain()
    recordings = _load_recordings(args.signals, args.streams)
    rr_rows = []
    gt_rows = []
    err_rows = []
    for rec, entry in recordings.items():
        gt, methods = _aligned_methods(entry, chain)
        names = list(methods)
        per_est = {}
        for est in ESTIMATORS:
            series_list = _map(lambda m: rr_series(methods[m], chain, est), names)
            per_est[est] = dict(zip(names, series_list))
            gt_series = gt_rr_series(gt, chain, est)
            for m in names:
                for w, rr in enumerate(per_est[est][m]):
                    rr_rows.append((rec, m, est, w, rr))
            for w, rr in enumerate(gt_series):
                gt_rows.append((rec, est, w, rr))
            if est == chain.estimator:
                for m in names:
                    for w, rr in enumerate(per_est[est][m]):
                        err_rows.append((rec, m, w, abs(rr - gt_series[w])))
    os.makedirs(args.out, exist_ok=True)
    fileio.write_rr(os.path.join(args.out, "rr.csv"), rr_rows)
    fileio.write_gt_rr(os.path.join(args.out, "gt_rr.csv"), gt_rows)
    fileio.write_errors(os.path.join(args.out, "errors.csv"), err_rows)
    print(f"wrote {len(rr_rows)} RR rows to {args.out}")
    return 0


def cmd_quality(args) -> int:
    cfg = fileio.load_config(args.config)
    chain = cfg.chain()
    prefs = PreferenceTable()
    recordings = _load_recordings(args.signals, args.streams)

    oriented_rows = []  # (rec, method, window, raw qv, oriented qv)
    for rec, entry in recordings.items():
        _, methods = _aligned_methods(entry, chain)
        names = list(methods)

        def one(m):
            segs = segments_of(methods[m], chain)
            raws = [compute_quality_vector(s, chain.band) for s in segs]
            return [(raw, orient(raw, prefs)) for raw in raws]

        for m, pairs in zip(names, _map(one, names)):
            for w, (raw, oriented) in enumerate(pairs):
                oriented_rows.append((rec, m, w, raw, oriented))

    if cfg.normalization_scope == "trainset":
        if not args.stats:
            raise MissingInput("normalization_scope=trainset needs --stats")
        minima, maxima = fileio.read_stats(args.stats)
        stats = NormalizationStats(minima, maxima, population_id="trainset")
    else:
        stats = fit_normalization([o for _, _, _, _, o in oriented_rows], population_id="dataset")

    out_rows = []
    for rec, m, w, raw, oriented in oriented_rows:
        norm = normalize(oriented, stats)
        out_rows.append((rec, m, w, norm.valid, raw.values, oriented.values, norm.values))
    os.makedirs(args.out, exist_ok=True)
    fileio.write_quality(os.path.join(args.out, "quality.csv"), out_rows)
    fileio.write_stats(os.path.join(args.out, "stats.csv"), stats.minima, stats.maxima)
    print(f"wrote {len(out_rows)} quality rows to {args.out}")
    return 0


def _quality_error_matrices(quality_path, errors_path, streams_path, scenario):
    """Pooled (W, M, F) quality, (W, M) errors, (W, M) validity across recordings."""
    q_rows = fileio.read_quality(quality_path)
    e_rows = fileio.read_errors(errors_path)
    tags: dict[str, str] = {}
    order: list[str] = []
    if streams_path:
        for _, method, _, tag in fileio.read_streams(streams_path):
            if tag != "GT" and method not in order:
                order.append(method)
                tags[method] = tag
    per_rec: dict[str, dict[str, dict[int, tuple]]] = {}
    for rec, m, w, valid, raw, oriented, norm in q_rows:
        per_rec.setdefault(rec, {}).setdefault(m, {})[w] = (valid, norm)
    errors: dict[str, dict[str, dict[int, float]]] = {}
    for rec, m, w, err in e_rows:
        errors.setdefault(rec, {}).setdefault(m, {})[w] = err
    if not order:
        order = sorted({m for rec in per_rec.values() for m in rec})
    methods = _scenario_methods(order, tags, scenario) if streams_path else order
    q_blocks, e_blocks, v_blocks = [], [], []
    for rec in sorted(per_rec):
        windows = sorted(next(iter(per_rec[rec].values())).keys())
        q = np.zeros((len(windows), len(methods), len(METRICS)))
        v = np.zeros((len(windows), len(methods)), dtype=bool)
        e = np.full((len(windows), len(methods)), np.nan)
        for j, m in enumerate(methods):
            if m not in per_rec[rec]:
                raise MissingInput(f"method {m} missing from quality rows of {rec}")
            for i, w in enumerate(windows):
                valid, norm = per_rec[rec][m][w]
                q[i, j, :] = norm
                v[i, j] = valid
                e[i, j] = errors.get(rec, {}).get(m, {}).get(w, np.nan)
        q_blocks.append(q)
        e_blocks.append(e)
        v_blocks.append(v)
    return np.vstack(q_blocks), np.vstack(e_blocks), np.vstack(v_blocks), methods


def cmd_subset_search(args) -> int:
    quality, errors, valid, _ = _quality_error_matrices(
        args.quality, args.errors, args.streams, args.scenario
    )
    result = subset_search(quality, errors, valid, population_id=args.scenario)
    names = fileio.mask_display(result.mask.metric_names())
    os.makedirs(args.out, exist_ok=True)
    fileio.write_subset(
        os.path.join(args.out, "subset.csv"), [(args.scenario, names, result.mae_bpm)]
    )
    print(f"{args.scenario}: {names} (MAE {result.mae_bpm:.4f} bpm)")
    return 0


def cmd_train(args) -> int:
    cfg = fileio.load_config(args.config)
    seed = args.seed if args.seed is not None else cfg.seed
    quality, errors, valid, methods = _quality_error_matrices(
        args.quality, args.errors, args.streams, args.scenario
    )
    w, m, f = quality.shape
    rows = quality.reshape(w * m, f)
    targets = errors.reshape(w * m)
    keep = valid.reshape(w * m) & np.isfinite(targets)
    scaler = fit_scaler(rows[keep])
    tc = TrainConfig(seed=seed)
    regressor = train_regressor(scaler.transform(rows[keep]), targets[keep], tc)
    window_ok = valid.all(axis=1) & np.isfinite(errors).all(axis=1)
    feats = scaler.transform(quality.reshape(w * m, f)).reshape(w, m * f)
    classifier = train_classifier(
        feats[window_ok], labels_from_errors(errors[window_ok]), n_classes=m, cfg=tc
    )
    os.makedirs(args.out, exist_ok=True)
    save_model(scaler, os.path.join(args.out, "scaler.txt"))
    save_model(regressor, os.path.join(args.out, "regressor.txt"))
    save_model(classifier, os.path.join(args.out, "classifier.txt"))
    print(
        f"trained on {int(keep.sum())} segment rows, {int(window_ok.sum())} windows "
        f"({len(methods)} methods); models in {args.out}"
    )
    return 0


def _load_models(models_dir):
    scaler = load_model(os.path.join(models_dir, "scaler.txt"))
    regressor = load_model(os.path.join(models_dir, "regressor.txt"))
    classifier_path = os.path.join(models_dir, "classifier.txt")
    classifier = load_model(classifier_path) if os.path.exists(classifier_path) else None
    return scaler, regressor, classifier


def cmd_fuse(args) -> int:
    cfg = fileio.load_config(args.config)
    sets = _build_sets_from_tables(args.rr, args.gt, args.quality, args.streams, cfg)
    tags = {m: t for s in sets for m, t in s.group_tags.items()}
    pooled = merge_sets(sets)
    methods = _scenario_methods(pooled.methods, tags, args.scenario)
    pooled = pooled.restrict(methods)

    strategies = [FusionStrategy("oracle_gt_mae")]
    method, estimator = baseline_select(pooled)
    strategies.append(
        FusionStrategy("baseline", method=method, estimator=estimator, label="baseline")
    )
    strategies.append(FusionStrategy("fmm"))
    if len(methods) >= 2:  # the subset-search oracle needs method competition
        strategies.append(FusionStrategy("oracle_gt_smm"))
    if args.mask:
        strategies.append(
            FusionStrategy("smm_transfer", mask=_mask_from_arg(args.mask), label="smm_transfer")
        )
    if args.models:
        scaler, regressor, classifier = _load_models(args.models)
        strategies.append(
            FusionStrategy("regressor", model=regressor, scaler=scaler, label="regressor")
        )
        if classifier is not None and classifier.n_features == len(methods) * len(METRICS):
            strategies.append(
                FusionStrategy("classifier", model=classifier, scaler=scaler, label="classifier")
            )

    results = []
    trace_rows = []
    for strat in strategies:
        trace = fuse(pooled, strat)
        rep = evaluate_trace(trace)
        results.append(
            (strat.name(), args.scenario, rep.mae_bpm, rep.pcc if rep.pcc_defined else float("nan"), rep.coverage_fraction)
        )
        for w in range(trace.chosen.size):
            if trace.chosen[w] >= 0:
                trace_rows.append(
                    (strat.name(), w, trace.methods[trace.chosen[w]], trace.fused_rr[w], trace.gt_rr[w])
                )
    os.makedirs(args.out, exist_ok=True)
    fileio.write_results(os.path.join(args.out, "results.csv"), results)
    fileio.write_csv(
        os.path.join(args.out, "traces.csv"),
        ["strategy", "window_index", "chosen_method", "fused_rr_bpm", "gt_rr_bpm"],
        [[s, w, m, fileio.fmt(fr), fileio.fmt(gr)] for s, w, m, fr, gr in trace_rows],
    )
    for name, scenario, mae, pcc, cov in results:
        marker = "" if np.isfinite(pcc) else "*"
        shown = pcc if np.isfinite(pcc) else 0.0
        print(f"{name:>14} [{scenario}]: MAE {mae:6.3f} bpm  PCC {shown:5.2f}{marker}  coverage {cov:.3f}")
    return 0


def cmd_filter(args) -> int:
    cfg = fileio.load_config(args.config)
    sets = _build_sets_from_tables(args.rr, args.gt, args.quality, args.streams, cfg)
    pooled = merge_sets(sets)
    tags = {m: t for s in sets for m, t in s.group_tags.items()}
    methods = _scenario_methods(pooled.methods, tags, args.scenario)
    if args.method:
        if args.method not in methods:
            raise MissingInput(f"method {args.method!r} not in {methods}")
        methods = [args.method]
    scaler = regressor = None
    if args.models:
        scaler, regressor, _ = _load_models(args.models)
    rows = []
    for m in methods:
        j = pooled.method_index(m)
        rr = pooled.rr[:, j]
        errs = np.abs(rr - pooled.gt_rr)
        scores = {"gt": errs, "fmm": pooled.quality[:, j, :].mean(axis=1)}
        if regressor is not None:
            scores["mlp"] = regressor.predict(scaler.transform(pooled.quality[:, j, :]))
        for kind, badness in scores.items():
            for q, rep in filter_sweep(rr, pooled.gt_rr, badness):
                rows.append(
                    (m, kind, q, rep.mae_bpm, rep.pcc if rep.pcc_defined else float("nan"), rep.coverage_fraction)
                )
    os.makedirs(args.out, exist_ok=True)
    fileio.write_filter(os.path.join(args.out, "filter.csv"), rows)
    print(f"wrote {len(rows)} filtering rows ({len(methods)} method(s), q grid {FILTER_FRACTIONS})")
    return 0


def cmd_sweep(args) -> int:
    cfg = fileio.load_config(args.config)
    sets = _build_sets_from_tables(args.rr, args.gt, args.quality, args.streams, cfg) \
        if args.quality else None
    if sets is None:
        # quality is not needed for the estimator grid; rebuild minimal sets
        sets = _build_sets_no_quality(args.rr, args.gt, args.streams, cfg)
    pooled = merge_sets(sets)
    report = sweep_report(pooled)
    best = best_cell(report)
    rows = []
    for (m, e), rep in report.items():
        rows.append((m, e, rep.mae_bpm, rep.pcc if rep.pcc_defined else float("nan"), (m, e) == best))
    os.makedirs(args.out, exist_ok=True)
    fileio.write_sweep(os.path.join(args.out, "sweep.csv"), rows)
    print(f"best cell: method {best[0]!r} with estimator {best[1]!r}")
    return 0


def _build_sets_no_quality(rr_path, gt_path, streams_path, cfg):
    rr_rows = fileio.read_rr(rr_path)
    gt_rows = fileio.read_gt_rr(gt_path)
    streams = fileio.read_streams(streams_path)
    method_order: dict[str, list[str]] = {}
    tags: dict[str, dict[str, str]] = {}
    for rec, method, _, tag in streams:
        if tag == "GT":
            continue
        method_order.setdefault(rec, [])
        if method not in method_order[rec]:
            method_order[rec].append(method)
        tags.setdefault(rec, {})[method] = tag
    gt_grid: dict[str, dict[str, dict[int, float]]] = {}
    for rec, est, w, rr in gt_rows:
        gt_grid.setdefault(rec, {}).setdefault(est, {})[w] = rr
    rr_grid: dict[str, dict[str, dict[str, dict[int, float]]]] = {}
    for rec, method, est, w, rr in rr_rows:
        rr_grid.setdefault(rec, {}).setdefault(est, {}).setdefault(method, {})[w] = rr
    sets = []
    for rec in sorted(rr_grid):
        methods = method_order.get(rec) or sorted(rr_grid[rec].get(cfg.estimator, {}))
        est_grids = {}
        windows = None
        for est, per_est in rr_grid[rec].items():
            w_indices = sorted(next(iter(per_est.values())).keys())
            windows = w_indices if windows is None else windows
            grid = np.full((len(w_indices), len(methods)), np.nan)
            for j, m in enumerate(methods):
                for i, w in enumerate(w_indices):
                    grid[i, j] = per_est[m][w]
            est_grids[est] = grid
        gt_grids = {est: np.array([per_w[w] for w in windows]) for est, per_w in gt_grid[rec].items()}
        w_count = len(windows)
        sets.append(
            MethodCandidateSet(
                recording_id=rec,
                methods=methods,
                gt_rr=gt_grids.get(cfg.estimator, np.full(w_count, np.nan)),
                rr=est_grids.get(cfg.estimator, np.full((w_count, len(methods)), np.nan)),
                quality=np.zeros((w_count, len(methods), len(METRICS))),
                valid=np.ones((w_count, len(methods)), dtype=bool),
                group_tags=tags.get(rec, {}),
                rr_grid=est_grids,
                gt_grid=gt_grids,
            )
        )
    return sets


def cmd_report(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    wrote = []
    if args.sweep:
        rows = fileio.read_sweep(args.sweep)
        methods = []
        estimators = []
        mae = {}
        pcc = {}
        best = None
        for m, e, ma, pc, is_best in rows:
            if m not in methods:
                methods.append(m)
            if e not in estimators:
                estimators.append(e)
            mae[(m, e)] = ma
            pcc[(m, e)] = pc if np.isfinite(pc) else 0.0
            if is_best:
                best = (m, e)
        matrix_rows = []
        for m in methods:
            matrix_rows.append([m] + [fileio.fmt(mae[(m, e)]) for e in estimators])
        fileio.write_csv(
            os.path.join(args.out, "heatmap.csv"), ["method_id"] + estimators, matrix_rows
        )
        svg = svgplot.heatmap_svg(methods, estimators, mae, pcc, best or (methods[0], estimators[0]))
        fileio.atomic_write(os.path.join(args.out, "heatmap.svg"), svg)
        wrote += ["heatmap.csv", "heatmap.svg"]
    if args.filter:
        frows = []
        with open(args.filter, encoding="utf-8", newline="") as fh:
            import csv as _csv

            reader = _csv.reader(fh)
            header = next(reader)
            if header != fileio.FILTER_HEADER:
                raise ParseError(1, f"bad filter header {header!r}")
            for row in reader:
                frows.append((row[0], row[1], float(row[2]), float(row[3])))
        svg = svgplot.filter_curves_svg(frows)
        fileio.atomic_write(os.path.join(args.out, "filter.svg"), svg)
        wrote.append("filter.svg")
    if not wrote:
        raise MissingInput("report needs --sweep and/or --filter")
    print(f"wrote {', '.join(wrote)} to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# argument wiring
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="respq",
        description="Quality-aware respiratory-rate estimation from candidate respiration signals.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out=True):
        p.add_argument("--config", default=None, help="key=value run configuration file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        if out:
            p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("synth", help="generate a synthetic benchmark")
    p.add_argument("--preset", choices=PRESETS, required=True)
    p.add_argument("--duration", type=float, default=60.0)
    p.add_argument("--fs", type=float, default=20.0)
    p.add_argument("--recordings", type=int, default=1)
    common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("estimate", help="per-window RR for every method and estimator")
    p.add_argument("--signals", required=True)
    p.add_argument("--streams", required=True)
    common(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("quality", help="per-segment quality metrics")
    p.add_argument("--signals", required=True)
    p.add_argument("--streams", required=True)
    p.add_argument("--stats", default=None, help="frozen normalization stats (trainset scope)")
    common(p)
    p.set_defaults(func=cmd_quality)

    p = sub.add_parser("subset-search", help="exhaustive metric-subset search")
    p.add_argument("--quality", required=True)
    p.add_argument("--errors", required=True)
    p.add_argument("--streams", default=None)
    p.add_argument("--scenario", choices=SCENARIOS, default="ALL")
    common(p)
    p.set_defaults(func=cmd_subset_search)

    p = sub.add_parser("train", help="fit the scaler, error regressor, and method classifier")
    p.add_argument("--quality", required=True)
    p.add_argument("--errors", required=True)
    p.add_argument("--streams", default=None)
    p.add_argument("--scenario", choices=SCENARIOS, default="ALL")
    common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("fuse", help="per-window fusion under every available strategy")
    p.add_argument("--rr", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--quality", required=True)
    p.add_argument("--streams", required=True)
    p.add_argument("--models", default=None, help="directory with trained model files")
    p.add_argument("--mask", default=None, help="frozen metric subset, e.g. 'Hjorth-M, BPR, PI'")
    p.add_argument("--scenario", choices=SCENARIOS, default="ALL")
    common(p)
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("filter", help="low-quality segment filtering sweep")
    p.add_argument("--rr", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--quality", required=True)
    p.add_argument("--streams", required=True)
    p.add_argument("--models", default=None)
    p.add_argument("--method", default=None, help="restrict to one method")
    p.add_argument("--scenario", choices=SCENARIOS, default="ALL")
    common(p)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("sweep", help="MAE/PCC grid over methods and estimators")
    p.add_argument("--rr", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--quality", default=None)
    p.add_argument("--streams", required=True)
    common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="render CSV tables into SVG figures")
    p.add_argument("--sweep", default=None)
    p.add_argument("--filter", default=None)
    common(p)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except RespqError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
