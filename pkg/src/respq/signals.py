"""Canonical signal carrier, resampling, band-pass conditioning, windowing.

Everything downstream consumes the types defined here: a uniformly sampled
``TimeSeries`` for whole recordings and a ``Segment`` for one sliding-window
slice of one method's signal.  All operations are pure; arrays are made
read-only at construction so values can be shared across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.signal import butter, sosfiltfilt

from .errors import (
    BandOutOfRange,
    EmptySignal,
    NonPositiveRate,
    SignalShorterThanWindow,
    SignalTooShort,
)

FILTER_ORDER = 4  # Butterworth prototype, applied forward-backward


def _freeze(a) -> np.ndarray:
    out = np.ascontiguousarray(a, dtype=np.float64)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class TimeSeries:
    """Uniformly sampled real-valued signal."""

    samples: np.ndarray
    sample_rate_hz: float
    id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "samples", _freeze(self.samples))
        if self.samples.ndim != 1 or self.samples.size < 1:
            raise EmptySignal(f"time series {self.id!r} must hold at least one sample")
        if not np.isfinite(self.sample_rate_hz) or self.sample_rate_hz <= 0:
            raise NonPositiveRate(f"sample rate {self.sample_rate_hz!r} must be finite and > 0")
        if not np.all(np.isfinite(self.samples)):
            raise EmptySignal(f"time series {self.id!r} contains non-finite samples")

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz

    def times(self) -> np.ndarray:
        return np.arange(self.samples.size) / self.sample_rate_hz


@dataclass(frozen=True)
class BandLimits:
    """Pass band in Hz; validity against a concrete rate is checked on use."""

    lo_hz: float = 0.1
    hi_hz: float = 0.5

    def __post_init__(self):
        if not (0 < self.lo_hz < self.hi_hz):
            raise BandOutOfRange(f"need 0 < lo < hi, got [{self.lo_hz}, {self.hi_hz}]")

    def validate_for_rate(self, sample_rate_hz: float) -> None:
        if self.hi_hz >= sample_rate_hz / 2:
            raise BandOutOfRange(
                f"band edge {self.hi_hz} Hz not below Nyquist {sample_rate_hz / 2} Hz"
            )

    @property
    def lo_bpm(self) -> float:
        return 60.0 * self.lo_hz

    @property
    def hi_bpm(self) -> float:
        return 60.0 * self.hi_hz


@dataclass(frozen=True)
class WindowingConfig:
    window_s: float = 10.0
    step_s: float = 1.0

    def __post_init__(self):
        if self.window_s <= 0 or not (0 < self.step_s <= self.window_s):
            raise SignalShorterThanWindow(
                f"need window_s > 0 and 0 < step_s <= window_s, got {self}"
            )


@dataclass(frozen=True)
class Segment:
    """One window of one method's signal at one window index."""

    method_id: str
    window_index: int
    start_time_s: float
    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        object.__setattr__(self, "samples", _freeze(self.samples))

    @property
    def n(self) -> int:
        return self.samples.size


def resample(ts: TimeSeries, target_rate_hz: float, antialias: bool = False) -> TimeSeries:
    """Linear-interpolation resampling onto a fresh uniform grid.

    Output length is round(N * target / source) so the duration is preserved
    to within one output sample period.  ``antialias`` applies a low-pass at
    0.45 * target rate first, for downsampling signals with content near the
    new Nyquist; respiration bands sampled at video rates do not need it.
    """
    if not np.isfinite(target_rate_hz) or target_rate_hz <= 0:
        raise NonPositiveRate(f"target rate {target_rate_hz!r} must be finite and > 0")
    x = ts.samples
    if antialias and target_rate_hz < ts.sample_rate_hz:
        cutoff = 0.45 * target_rate_hz / (ts.sample_rate_hz / 2)
        sos = butter(FILTER_ORDER, cutoff, btype="low", output="sos")
        pad = 3 * (2 * sos.shape[0] + 1)
        if x.size <= pad:
            raise SignalTooShort(f"{x.size} samples, anti-alias filtering needs > {pad}")
        x = sosfiltfilt(sos, x, padlen=pad)
    n_out = int(round(x.size * target_rate_hz / ts.sample_rate_hz))
    if n_out < 1:
        raise EmptySignal("resampling would produce an empty series")
    t_new = np.arange(n_out) / target_rate_hz
    t_old = np.arange(x.size) / ts.sample_rate_hz
    return TimeSeries(np.interp(t_new, t_old, x), target_rate_hz, ts.id)


def bandpass(ts: TimeSeries, band: BandLimits) -> TimeSeries:
    """Zero-phase band-pass of the full recording.

    Forward-backward Butterworth of order FILTER_ORDER, run as second-order
    sections (the band sits far below Nyquist, where polynomial coefficients
    are ill-conditioned), with reflected edge padding of three times the
    filter length.  Output has no group delay and the input's length and
    rate.
    """
    band.validate_for_rate(ts.sample_rate_hz)
    nyq = ts.sample_rate_hz / 2
    if band.lo_hz / nyq <= 0 or band.hi_hz / nyq >= 1:
        raise BandOutOfRange(f"band {band} invalid at rate {ts.sample_rate_hz}")
    sos = butter(FILTER_ORDER, [band.lo_hz / nyq, band.hi_hz / nyq], btype="band", output="sos")
    padlen = 3 * (2 * sos.shape[0] + 1)
    if ts.samples.size <= padlen:
        raise SignalTooShort(
            f"{ts.samples.size} samples, zero-phase filtering needs more than {padlen}"
        )
    return TimeSeries(sosfiltfilt(sos, ts.samples, padlen=padlen), ts.sample_rate_hz, ts.id)


def segment(ts: TimeSeries, cfg: WindowingConfig = WindowingConfig()) -> list[Segment]:
    """Slice a recording into sliding windows (pure slicing, no taper).

    Window and step lengths are converted to samples by rounding; the count
    is floor((N - n_window) / n_step) + 1 and no partial trailing window is
    emitted.
    """
    n = ts.samples.size
    n_win = int(round(cfg.window_s * ts.sample_rate_hz))
    n_step = int(round(cfg.step_s * ts.sample_rate_hz))
    if n_step < 1 or n_win < 1:
        raise SignalShorterThanWindow(f"windowing {cfg} degenerate at rate {ts.sample_rate_hz}")
    if n < n_win:
        raise SignalShorterThanWindow(
            f"{n} samples ({n / ts.sample_rate_hz:.3g} s) shorter than window {cfg.window_s} s"
        )
    count = (n - n_win) // n_step + 1
    return [
        Segment(
            method_id=ts.id,
            window_index=i,
            start_time_s=i * cfg.step_s,
            samples=ts.samples[i * n_step : i * n_step + n_win],
            sample_rate_hz=ts.sample_rate_hz,
        )
        for i in range(count)
    ]


def detrend(seg: Segment) -> Segment:
    """Remove the segment mean; shape and rate are unchanged."""
    return replace(seg, samples=seg.samples - seg.samples.mean())
