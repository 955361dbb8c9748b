"""Seeded synthetic benchmarks: a clean respiration trace plus corrupted
candidate signals with controlled, window-localized failure modes.

Noise levels are specified as in-band SNR (signal power over the noise power
that falls inside the respiration band), so difficulty is controlled where
the estimators actually look.  Dropout intervals replace the respiration
component with noise of comparable in-band power: the segment keeps a
plausible amplitude but carries no rate information.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ProfileOutOfBand
from .signals import BandLimits, TimeSeries

DEFAULT_BAND = BandLimits(0.1, 0.5)


@dataclass(frozen=True)
class BreathProfile:
    """Piecewise-linear breathing frequency trajectory inside the band."""

    duration_s: float
    fs: float
    times_s: tuple[float, ...]
    freqs_hz: tuple[float, ...]
    amplitude: float = 1.0
    band: BandLimits = DEFAULT_BAND

    def __post_init__(self):
        if len(self.times_s) != len(self.freqs_hz) or not self.times_s:
            raise ProfileOutOfBand("profile needs matching, non-empty breakpoint sequences")
        for f in self.freqs_hz:
            if not (self.band.lo_hz <= f <= self.band.hi_hz):
                raise ProfileOutOfBand(f"breakpoint {f} Hz outside {self.band}")

    @classmethod
    def constant(cls, f0: float, duration_s: float = 60.0, fs: float = 20.0, **kw) -> "BreathProfile":
        return cls(duration_s, fs, (0.0,), (f0,), **kw)

    @classmethod
    def ramp(cls, f_start: float, f_end: float, duration_s: float = 60.0, fs: float = 20.0, **kw):
        return cls(duration_s, fs, (0.0, duration_s), (f_start, f_end), **kw)

    def instantaneous_freq(self) -> np.ndarray:
        n = int(round(self.duration_s * self.fs))
        t = np.arange(n) / self.fs
        return np.interp(t, self.times_s, self.freqs_hz)


@dataclass(frozen=True)
class MethodCorruption:
    """Failure recipe for one simulated extraction method."""

    method_id: str
    snr_db: float = np.inf
    drift_amplitude: float = 0.0
    drift_freq_hz: float = 0.02
    dropout_intervals: tuple[tuple[float, float], ...] = ()
    harmonic_level: float = 0.0


@dataclass(frozen=True)
class CorruptionSpec:
    methods: tuple[MethodCorruption, ...]
    seed: int
    band: BandLimits = DEFAULT_BAND

    def __post_init__(self):
        if not self.methods:
            raise ProfileOutOfBand("corruption spec needs at least one method")


def _phase(profile: BreathProfile, seed: int) -> np.ndarray:
    rng = np.random.default_rng([profile_key(profile), seed])
    phase0 = rng.uniform(0.0, 2.0 * np.pi)
    f = profile.instantaneous_freq()
    # cumulative phase keeps the sinusoid continuous through frequency ramps
    return phase0 + 2.0 * np.pi * np.cumsum(f) / profile.fs


def profile_key(profile: BreathProfile) -> int:
    return hash((profile.duration_s, profile.fs, profile.times_s, profile.freqs_hz)) & 0x7FFFFFFF


def gen_respiration(profile: BreathProfile, seed: int = 0) -> TimeSeries:
    """Phase-continuous sinusoid following the profile; seed sets the phase."""
    return TimeSeries(
        profile.amplitude * np.sin(_phase(profile, seed)), profile.fs, "gt"
    )


# Dropout artifact texture: spectrally fast jitter (second-differenced white
# noise, in-band content tilted toward the upper band edge) under a bursty
# on/off envelope.  After the record-level band-pass this yields segments
# with no respiration information, erratic envelope (positive kurtosis), and
# crossing rates above any plausible breathing frequency.
DROPOUT_BURST_DUTY = 0.25
DROPOUT_BURST_BLOCK_S = 2.0
DROPOUT_NOISE_FLOOR = 0.2


def _dropout_artifact(rng, nd: int, fs: float, band: BandLimits, target_inband: float) -> np.ndarray:
    from .signals import bandpass

    white = rng.standard_normal(nd + 2)
    fast = np.diff(white, 2)
    block = max(1, int(round(DROPOUT_BURST_BLOCK_S * fs)))
    on = (rng.uniform(size=nd // block + 1) < DROPOUT_BURST_DUTY).astype(float)
    raw = fast * (DROPOUT_NOISE_FLOOR + on.repeat(block)[:nd])
    pad = 30  # zero-phase filtering needs headroom beyond the filter length
    if nd <= pad:
        return raw * np.sqrt(target_inband / max(float(np.var(raw)), 1e-30))
    probe = TimeSeries(raw - raw.mean(), fs, "probe")
    inband = float(np.var(bandpass(probe, band).samples))
    return raw * np.sqrt(target_inband / max(inband, 1e-30))


def gen_candidates(
    clean: TimeSeries,
    spec: CorruptionSpec,
    profile: BreathProfile | None = None,
) -> dict[str, TimeSeries]:
    """One corrupted series per simulated method, deterministic per seed."""
    n = clean.samples.size
    fs = clean.sample_rate_hz
    t = clean.times()
    band_width = spec.band.hi_hz - spec.band.lo_hz
    signal_power = float(np.var(clean.samples))
    out: dict[str, TimeSeries] = {}
    for m_idx, mc in enumerate(spec.methods):
        rng = np.random.default_rng([spec.seed, m_idx])
        x = clean.samples.copy()
        if mc.harmonic_level > 0.0:
            if profile is None:
                raise ProfileOutOfBand("harmonic distortion needs the source profile")
            x = x + mc.harmonic_level * profile.amplitude * np.sin(2.0 * _phase(profile, spec.seed))
        gate = np.ones(n)
        for start_s, end_s in mc.dropout_intervals:
            lo = max(0, int(round(start_s * fs)))
            hi = min(n, int(round(end_s * fs)))
            gate[lo:hi] = 0.0
        x = x * gate
        if np.isfinite(mc.snr_db):
            noise_in_band = signal_power / 10.0 ** (mc.snr_db / 10.0)
            sigma = np.sqrt(noise_in_band * (fs / 2.0) / band_width)
            x = x + sigma * rng.standard_normal(n)
        for start_s, end_s in mc.dropout_intervals:
            lo = max(0, int(round(start_s * fs)))
            hi = min(n, int(round(end_s * fs)))
            if hi > lo:
                x[lo:hi] += _dropout_artifact(rng, hi - lo, fs, spec.band, signal_power)
        if mc.drift_amplitude > 0.0:
            x = x + mc.drift_amplitude * np.sin(
                2.0 * np.pi * mc.drift_freq_hz * t + rng.uniform(0.0, 2.0 * np.pi)
            )
        out[mc.method_id] = TimeSeries(x, fs, mc.method_id)
    return out


# ---------------------------------------------------------------------------
# named presets, addressable from the CLI
# ---------------------------------------------------------------------------

PRESETS = ("uniform-noise", "disjoint-failure", "drift", "ramp")


def make_preset(name: str, seed: int, duration_s: float = 60.0, fs: float = 20.0):
    """Build (profile, spec) for a named benchmark preset.

    Breathing frequencies are drawn from the typical resting range 0.15 to
    0.35 Hz (9 to 21 bpm), inside the analysis band with margin.
    """
    rng = np.random.default_rng([0xB_E_C, seed])
    f0 = float(rng.uniform(0.15, 0.35))
    if name == "uniform-noise":
        profile = BreathProfile.constant(f0, duration_s, fs)
        methods = (
            MethodCorruption("m_clean", snr_db=15.0),
            MethodCorruption("m_noisy", snr_db=5.0),
        )
    elif name == "disjoint-failure":
        profile = BreathProfile.constant(f0, duration_s, fs)
        mid = duration_s / 2.0
        methods = (
            MethodCorruption(
                "m_early_fail", snr_db=15.0, dropout_intervals=((0.0, mid - 1.0),)
            ),
            MethodCorruption(
                "m_late_fail", snr_db=15.0, dropout_intervals=((mid + 1.0, duration_s),)
            ),
        )
    elif name == "drift":
        profile = BreathProfile.constant(f0, duration_s, fs)
        methods = (
            MethodCorruption("m_drifty", snr_db=15.0, drift_amplitude=2.0),
            MethodCorruption("m_stable", snr_db=15.0, drift_amplitude=0.3),
        )
    elif name == "ramp":
        lo = float(rng.uniform(0.15, 0.25))
        profile = BreathProfile.ramp(lo, lo + 0.1, duration_s, fs)
        methods = (
            MethodCorruption("m_clean", snr_db=15.0),
            MethodCorruption("m_noisy", snr_db=5.0),
        )
    else:
        raise ProfileOutOfBand(f"unknown preset {name!r}; choose from {PRESETS}")
    return profile, CorruptionSpec(methods, seed)


def gen_benchmark(name: str, seed: int, duration_s: float = 60.0, fs: float = 20.0):
    """Generate (gt, candidates) for a preset; pure function of its arguments."""
    profile, spec = make_preset(name, seed, duration_s, fs)
    gt = gen_respiration(profile, seed)
    return gt, gen_candidates(gt, spec, profile)
