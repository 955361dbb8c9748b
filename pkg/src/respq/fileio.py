"""CSV interchange formats and the flat key=value run configuration.

All files are UTF-8 with LF line endings and '.' decimals.  Floats are
rendered with 17 significant digits so every schema round-trips bit-exactly,
and writes go through a temp file plus rename so readers never see partial
output.
"""

from __future__ import annotations

import csv
import io
import os
import tempfile
from dataclasses import dataclass, fields, replace

import numpy as np

from .errors import ConfigError, MissingInput, ParseError
from .fusion import ChainConfig
from .quality import METRICS
from .signals import BandLimits, WindowingConfig
from .spectral import ESTIMATORS, MusicConfig, WelchConfig

GROUP_TAGS = ("NLM", "DLM", "MOTION", "GT")

METRIC_DISPLAY = {
    "zcr": "ZCR",
    "hjorth_m": "Hjorth-M",
    "hjorth_c": "Hjorth-C",
    "snr_db": "SNR",
    "ipr": "IPR",
    "bpr": "BPR",
    "kurt": "KURT",
    "skew": "SKEW",
    "pi": "PI",
    "tmcc": "TMCC",
}

SIGNALS_HEADER = ["recording_id", "method_id", "sample_index", "value"]
STREAMS_HEADER = ["recording_id", "method_id", "sample_rate_hz", "group_tag"]
RR_HEADER = ["recording_id", "method_id", "estimator", "window_index", "rr_bpm"]
GT_RR_HEADER = ["recording_id", "estimator", "window_index", "rr_bpm"]
ERRORS_HEADER = ["recording_id", "method_id", "window_index", "abs_error_bpm"]
RESULTS_HEADER = ["strategy", "scenario", "mae_bpm", "pcc", "coverage"]
FILTER_HEADER = ["method_id", "score_kind", "q", "mae_bpm", "pcc", "coverage"]
SWEEP_HEADER = ["method_id", "estimator", "mae_bpm", "pcc", "best"]
SUBSET_HEADER = ["scenario", "mask", "mae_bpm"]
STATS_HEADER = ["metric", "min", "max"]


def fmt(v: float) -> str:
    return f"{float(v):.17g}"


def atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".respq-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path: str, header: list[str], rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    atomic_write(path, buf.getvalue())


def _read_rows(path: str, expected_header: list[str]):
    if not os.path.exists(path):
        raise MissingInput(f"missing input file {path}")
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(1, f"empty file, expected header {','.join(expected_header)}")
        if header != expected_header:
            raise ParseError(1, f"bad header {','.join(header)!r}, expected {','.join(expected_header)!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(expected_header):
                raise ParseError(lineno, f"expected {len(expected_header)} fields, got {len(row)}")
            yield lineno, row


def _float(row_value: str, lineno: int, what: str) -> float:
    try:
        v = float(row_value)
    except ValueError:
        raise ParseError(lineno, f"{what} {row_value!r} is not a number")
    return v


def _finite(row_value: str, lineno: int, what: str) -> float:
    v = _float(row_value, lineno, what)
    if not np.isfinite(v):
        raise ParseError(lineno, f"{what} {row_value!r} is not finite")
    return v


# ---------------------------------------------------------------------------
# signals + stream headers
# ---------------------------------------------------------------------------


def write_signals(path: str, series: dict[tuple[str, str], np.ndarray]) -> None:
    """series maps (recording_id, method_id) to a sample vector."""
    rows = []
    for (rec, method), samples in series.items():
        for i, v in enumerate(np.asarray(samples, dtype=np.float64)):
            rows.append([rec, method, i, fmt(v)])
    write_csv(path, SIGNALS_HEADER, rows)


def read_signals(path: str) -> dict[tuple[str, str], np.ndarray]:
    data: dict[tuple[str, str], list[float]] = {}
    for lineno, row in _read_rows(path, SIGNALS_HEADER):
        rec, method, idx_s, val_s = row
        try:
            idx = int(idx_s)
        except ValueError:
            raise ParseError(lineno, f"sample_index {idx_s!r} is not an integer")
        samples = data.setdefault((rec, method), [])
        if idx != len(samples):
            raise ParseError(lineno, f"sample_index {idx} breaks contiguity (expected {len(samples)})")
        samples.append(_finite(val_s, lineno, "value"))
    return {key: np.array(vals) for key, vals in data.items()}


def write_streams(path: str, streams: list[tuple[str, str, float, str]]) -> None:
    rows = [[rec, method, fmt(rate), tag] for rec, method, rate, tag in streams]
    write_csv(path, STREAMS_HEADER, rows)


def read_streams(path: str) -> list[tuple[str, str, float, str]]:
    out = []
    for lineno, row in _read_rows(path, STREAMS_HEADER):
        rec, method, rate_s, tag = row
        rate = _finite(rate_s, lineno, "sample_rate_hz")
        if rate <= 0:
            raise ParseError(lineno, f"sample_rate_hz {rate_s!r} must be positive")
        if tag not in GROUP_TAGS:
            raise ParseError(lineno, f"group_tag {tag!r} not one of {GROUP_TAGS}")
        out.append((rec, method, rate, tag))
    return out


# ---------------------------------------------------------------------------
# derived tables
# ---------------------------------------------------------------------------


def write_rr(path: str, rows) -> None:
    write_csv(
        path,
        RR_HEADER,
        [[rec, method, est, w, fmt(rr)] for rec, method, est, w, rr in rows],
    )


def read_rr(path: str):
    out = []
    for lineno, row in _read_rows(path, RR_HEADER):
        rec, method, est, w_s, rr_s = row
        out.append((rec, method, est, int(w_s), _float(rr_s, lineno, "rr_bpm")))
    return out


def write_gt_rr(path: str, rows) -> None:
    write_csv(path, GT_RR_HEADER, [[rec, est, w, fmt(rr)] for rec, est, w, rr in rows])


def read_gt_rr(path: str):
    out = []
    for lineno, row in _read_rows(path, GT_RR_HEADER):
        rec, est, w_s, rr_s = row
        out.append((rec, est, int(w_s), _float(rr_s, lineno, "rr_bpm")))
    return out


def write_errors(path: str, rows) -> None:
    write_csv(path, ERRORS_HEADER, [[rec, m, w, fmt(e)] for rec, m, w, e in rows])


def read_errors(path: str):
    out = []
    for lineno, row in _read_rows(path, ERRORS_HEADER):
        rec, method, w_s, e_s = row
        out.append((rec, method, int(w_s), _float(e_s, lineno, "abs_error_bpm")))
    return out


def quality_header() -> list[str]:
    cols = ["recording_id", "method_id", "window_index", "valid"]
    for name in METRICS:
        cols += [f"{name}_raw", f"{name}_oriented", f"{name}_norm"]
    return cols


def write_quality(path: str, rows) -> None:
    """rows: (rec, method, window, valid, raw(10), oriented(10), norm(10))."""
    out = []
    for rec, method, w, valid, raw, oriented, norm in rows:
        row = [rec, method, w, int(valid)]
        for i in range(len(METRICS)):
            row += [fmt(raw[i]), fmt(oriented[i]), fmt(norm[i])]
        out.append(row)
    write_csv(path, quality_header(), out)


def read_quality(path: str):
    header = quality_header()
    out = []
    for lineno, row in _read_rows(path, header):
        rec, method, w_s, valid_s = row[:4]
        vals = [_float(v, lineno, "metric") for v in row[4:]]
        raw = np.array(vals[0::3])
        oriented = np.array(vals[1::3])
        norm = np.array(vals[2::3])
        out.append((rec, method, int(w_s), bool(int(valid_s)), raw, oriented, norm))
    return out


def write_results(path: str, rows) -> None:
    write_csv(
        path,
        RESULTS_HEADER,
        [[s, sc, fmt(mae), fmt(pcc), fmt(cov)] for s, sc, mae, pcc, cov in rows],
    )


def write_filter(path: str, rows) -> None:
    write_csv(
        path,
        FILTER_HEADER,
        [[m, k, fmt(q), fmt(mae), fmt(pcc), fmt(cov)] for m, k, q, mae, pcc, cov in rows],
    )


def write_sweep(path: str, rows) -> None:
    write_csv(
        path,
        SWEEP_HEADER,
        [[m, e, fmt(mae), fmt(pcc), int(best)] for m, e, mae, pcc, best in rows],
    )


def read_sweep(path: str):
    out = []
    for lineno, row in _read_rows(path, SWEEP_HEADER):
        m, e, mae_s, pcc_s, best_s = row
        out.append((m, e, _float(mae_s, lineno, "mae_bpm"), _float(pcc_s, lineno, "pcc"), bool(int(best_s))))
    return out


def mask_display(metric_names) -> str:
    return ", ".join(METRIC_DISPLAY[name] for name in metric_names)


def write_subset(path: str, rows) -> None:
    write_csv(path, SUBSET_HEADER, [[sc, mask, fmt(mae)] for sc, mask, mae in rows])


def write_stats(path: str, minima, maxima) -> None:
    rows = [[name, fmt(lo), fmt(hi)] for name, lo, hi in zip(METRICS, minima, maxima)]
    write_csv(path, STATS_HEADER, rows)


def read_stats(path: str):
    minima, maxima = [], []
    names = []
    for lineno, row in _read_rows(path, STATS_HEADER):
        name, lo_s, hi_s = row
        names.append(name)
        minima.append(_float(lo_s, lineno, "min"))
        maxima.append(_float(hi_s, lineno, "max"))
    if tuple(names) != METRICS:
        raise ParseError(2, f"stats rows must list metrics in order {METRICS}")
    return np.array(minima), np.array(maxima)


# ---------------------------------------------------------------------------
# run configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    window_s: float = 10.0
    step_s: float = 1.0
    band_lo_hz: float = 0.1
    band_hi_hz: float = 0.5
    estimator: str = "welch"
    music_p: int = 2
    music_nfft: int = 4096
    welch_subsegment_s: float = 5.0
    welch_overlap: float = 0.5
    nfft: int = 4096
    seed: int = 42
    normalization_scope: str = "dataset"
    filter_fraction: float = 0.0

    def chain(self) -> ChainConfig:
        return ChainConfig(
            windowing=WindowingConfig(self.window_s, self.step_s),
            band=BandLimits(self.band_lo_hz, self.band_hi_hz),
            estimator=self.estimator,
            music=MusicConfig(p=self.music_p, n_fft=self.music_nfft),
            welch=WelchConfig(self.welch_subsegment_s, self.welch_overlap, self.nfft),
            n_fft=self.nfft,
        )


_CONFIG_TYPES = {f.name: f.type for f in fields(RunConfig)}


def load_config(path: str | None) -> RunConfig:
    """Parse a key=value config file; unknown keys and bad values are errors."""
    cfg = RunConfig()
    if path is None:
        return cfg
    if not os.path.exists(path):
        raise MissingInput(f"missing config file {path}")
    overrides = {}
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if not sep:
                raise ConfigError(key or line, "expected key = value")
            if key not in _CONFIG_TYPES:
                raise ConfigError(key, "unknown configuration key")
            overrides[key] = _coerce(key, value)
    return replace(cfg, **overrides)


def _coerce(key: str, value: str):
    kind = _CONFIG_TYPES[key]
    try:
        if kind == "int":
            return int(value)
        if kind == "float":
            return float(value)
    except ValueError:
        raise ConfigError(key, f"cannot parse {value!r} as {kind}")
    if key == "estimator" and value not in ESTIMATORS:
        raise ConfigError(key, f"estimator {value!r} not one of {ESTIMATORS}")
    if key == "normalization_scope" and value not in ("dataset", "trainset"):
        raise ConfigError(key, f"scope {value!r} not one of ('dataset', 'trainset')")
    return value


def save_config(path: str, cfg: RunConfig) -> None:
    lines = []
    for f in fields(RunConfig):
        v = getattr(cfg, f.name)
        lines.append(f"{f.name} = {fmt(v) if isinstance(v, float) else v}")
    atomic_write(path, "\n".join(lines) + "\n")
