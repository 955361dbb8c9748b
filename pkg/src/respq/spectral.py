"""The four per-segment RR estimators: FFT, Welch, MUSIC, peak detection.

MUSIC here is the single-channel variant: a small Toeplitz matrix of biased
autocorrelation lags is eigen-decomposed, the smallest eigenvectors span the
noise subspace, and the pseudo-spectrum is the reciprocal of the steering
vector's squared projection onto it.  Welch is delegated to scipy; FFT and
peak detection are direct.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import toeplitz
from scipy.signal import find_peaks
from scipy.signal import welch as _scipy_welch

from . import _kernels
from .errors import (
    DegenerateAutocorrelation,
    EigenFailure,
    EmptyBand,
    InsufficientPeaks,
    SegmentTooShort,
    SubsegmentTooLong,
)
from .signals import BandLimits, Segment

ESTIMATORS = ("welch", "music", "fft", "peak")
SPECTRAL_ESTIMATORS = ("welch", "music", "fft")


@dataclass(frozen=True)
class Spectrum:
    freqs_hz: np.ndarray
    power: np.ndarray
    estimator: str

    def __post_init__(self):
        f = np.ascontiguousarray(self.freqs_hz, dtype=np.float64)
        p = np.ascontiguousarray(self.power, dtype=np.float64)
        f.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "freqs_hz", f)
        object.__setattr__(self, "power", p)


@dataclass(frozen=True)
class MusicConfig:
    p: int = 2           # model order; two signal eigenvectors per real sinusoid
    n_fft: int = 4096    # pseudo-spectrum grid size over [0, fs/2)
    power_ceiling: float = 1e12

    @property
    def m(self) -> int:
        return 2 * self.p


@dataclass(frozen=True)
class WelchConfig:
    subsegment_s: float = 5.0
    overlap_fraction: float = 0.5
    n_fft: int = 4096


@dataclass(frozen=True)
class SubspaceDecomposition:
    """Eigenvalues (ascending) and the orthonormal noise-subspace basis."""

    eigenvalues: np.ndarray
    noise_basis: np.ndarray


@dataclass(frozen=True)
class RrEstimate:
    method_id: str
    window_index: int
    estimator: str
    rr_bpm: float


def autocorr_toeplitz(seg: Segment, m: int) -> np.ndarray:
    """Symmetric Toeplitz matrix of biased autocorrelation lags R[0..m-1].

    R[k] = (1/N) * sum_{n=0}^{N-k-1} x[n] x[n+k]; the 1/N normalization is
    kept for every lag, which guarantees a positive semidefinite matrix.
    """
    if seg.n <= m:
        raise SegmentTooShort(f"{seg.n} samples cannot support {m} autocorrelation lags")
    lags = _kernels.autocorr_lags(np.ascontiguousarray(seg.samples), m)
    return toeplitz(lags)


def subspace_decomposition(r: np.ndarray, p: int) -> SubspaceDecomposition:
    """Eigen-decompose a symmetric matrix; the M-p smallest eigenvectors form the noise basis."""
    try:
        eigenvalues, vectors = np.linalg.eigh(r)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(str(exc)) from exc
    return SubspaceDecomposition(eigenvalues=eigenvalues, noise_basis=vectors[:, : r.shape[0] - p])


def music_pseudospectrum(seg: Segment, cfg: MusicConfig = MusicConfig()) -> Spectrum:
    """Pseudo-spectrum on the grid f_i = i/n_fft * fs/2, i = 0..n_fft-1.

    P(f) = 1 / ||E_noise^H a(f)||^2 with steering entries
    exp(-j 2 pi m f / fs), m = 0..M-1.  Where the projection denominator
    drops below 1/power_ceiling the output is clipped at power_ceiling so
    exact signal frequencies stay finite.
    """
    if seg.n <= cfg.m:
        raise SegmentTooShort(f"{seg.n} samples too short for model order p={cfg.p}")
    r = autocorr_toeplitz(seg, cfg.m)
    if np.linalg.norm(r) < 1e-12 * seg.n:
        raise DegenerateAutocorrelation("autocorrelation matrix is numerically zero")
    dec = subspace_decomposition(r, cfg.p)
    den = _kernels.music_denominator(
        np.ascontiguousarray(dec.noise_basis), seg.sample_rate_hz, cfg.n_fft
    )
    floor = 1.0 / cfg.power_ceiling
    power = np.where(den < floor, cfg.power_ceiling, 1.0 / np.maximum(den, floor))
    freqs = np.arange(cfg.n_fft) / cfg.n_fft * (seg.sample_rate_hz / 2.0)
    return Spectrum(freqs, power, "music")


def fft_periodogram(seg: Segment, n_fft: int = 4096) -> Spectrum:
    """Zero-padded periodogram |X(f)|^2 / N at nonnegative frequencies."""
    if n_fft < seg.n:
        raise SegmentTooShort(f"n_fft={n_fft} below segment length {seg.n}")
    spec = np.abs(np.fft.rfft(seg.samples, n_fft)) ** 2 / seg.n
    freqs = np.fft.rfftfreq(n_fft, 1.0 / seg.sample_rate_hz)
    return Spectrum(freqs, spec, "fft")


def welch(seg: Segment, cfg: WelchConfig = WelchConfig()) -> Spectrum:
    """Mean of Hann-tapered subsegment periodograms on a fs/n_fft grid."""
    n_sub = int(round(cfg.subsegment_s * seg.sample_rate_hz))
    if n_sub > seg.n:
        raise SubsegmentTooLong(
            f"subsegment {cfg.subsegment_s} s exceeds segment of {seg.n} samples"
        )
    freqs, power = _scipy_welch(
        seg.samples,
        fs=seg.sample_rate_hz,
        window="hann",
        nperseg=n_sub,
        noverlap=int(cfg.overlap_fraction * n_sub),
        nfft=max(cfg.n_fft, n_sub),
        detrend=False,  # segments arrive detrended; per-subsegment mean removal
                        # subtracts phase-correlated signal content and shifts the peak
        scaling="density",
        average="mean",
    )
    return Spectrum(freqs, power, "welch")


def spectrum_rr(spec: Spectrum, band: BandLimits) -> RrEstimate:
    """RR in bpm from the in-band power argmax; ties go to the lowest frequency."""
    mask = (spec.freqs_hz >= band.lo_hz) & (spec.freqs_hz <= band.hi_hz)
    if not mask.any():
        raise EmptyBand(f"no grid point inside [{band.lo_hz}, {band.hi_hz}] Hz")
    in_band = spec.power[mask]
    f_star = spec.freqs_hz[mask][int(np.argmax(in_band))]
    return RrEstimate("", -1, spec.estimator, 60.0 * f_star)


def peak_rr(seg: Segment, band: BandLimits) -> RrEstimate:
    """RR from the median spacing of prominent local maxima.

    Peaks must be at least 1/hi_hz seconds apart with prominence at least
    0.2 segment standard deviations; the result is clamped to the band.
    """
    distance = max(1, int(round(seg.sample_rate_hz / band.hi_hz)))
    prominence = 0.2 * float(np.std(seg.samples))
    peaks, _ = find_peaks(seg.samples, distance=distance, prominence=prominence)
    if peaks.size < 2:
        raise InsufficientPeaks(f"found {peaks.size} peaks, need at least 2")
    median_interval_s = float(np.median(np.diff(peaks))) / seg.sample_rate_hz
    rr = float(np.clip(60.0 / median_interval_s, band.lo_bpm, band.hi_bpm))
    return RrEstimate(seg.method_id, seg.window_index, "peak", rr)


def estimate_rr(
    seg: Segment,
    estimator: str,
    band: BandLimits,
    music_cfg: MusicConfig = MusicConfig(),
    welch_cfg: WelchConfig = WelchConfig(),
    n_fft: int = 4096,
) -> RrEstimate:
    """Run one named estimator on a detrended segment; RR is NaN on failure.

    Estimator failures (degenerate autocorrelation, too few peaks) are data
    conditions, not bugs, so they surface as a NaN estimate that downstream
    selection treats as a missing candidate.
    """
    try:
        if estimator == "peak":
            est = peak_rr(seg, band)
        elif estimator == "music":
            est = spectrum_rr(music_pseudospectrum(seg, music_cfg), band)
        elif estimator == "fft":
            est = spectrum_rr(fft_periodogram(seg, max(n_fft, seg.n)), band)
        elif estimator == "welch":
            est = spectrum_rr(welch(seg, welch_cfg), band)
        else:
            raise ValueError(f"unknown estimator {estimator!r}")
    except (DegenerateAutocorrelation, InsufficientPeaks):
        return RrEstimate(seg.method_id, seg.window_index, estimator, float("nan"))
    return RrEstimate(seg.method_id, seg.window_index, estimator, est.rr_bpm)
