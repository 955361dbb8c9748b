"""Ten segment-level signal quality indices with orientation and normalization.

The raw metrics live on heterogeneous scales and preferred directions, so a
vector passes through three tagged stages: RAW (as computed), ORIENTED
(mapped so that lower always means better), NORMALIZED (min-max scaled to
[0, 1] against a reference population).  Stage tags are enforced to keep the
transformations from being applied twice.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import EmptyPopulation, WrongStage
from .signals import BandLimits, Segment
from .spectral import WelchConfig, welch

METRICS = ("zcr", "hjorth_m", "hjorth_c", "snr_db", "ipr", "bpr", "kurt", "skew", "pi", "tmcc")

RAW = "raw"
ORIENTED = "oriented"
NORMALIZED = "normalized"

LOWER_BETTER = "lower_better"
HIGHER_BETTER = "higher_better"
ZERO_BETTER = "zero_better"

# Reference band for the band power ratio; deliberately wider than the
# respiration band and distinct from the IPR denominator so the two ratios
# are not affine complements of each other.
BPR_REFERENCE_HZ = (0.05, 1.0)
# One Hann main-lobe half-width at a 10 s taper.  A narrower window sits
# below the spectral resolution cell and leaves the ratio insensitive to
# added noise.
SNR_PEAK_HALF_WIDTH_HZ = 0.15


@dataclass(frozen=True)
class QualityVector:
    """The ten metric values for one segment, in METRICS order."""

    values: np.ndarray
    stage: str = RAW
    valid: bool = True

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        if v.shape != (len(METRICS),):
            raise WrongStage(f"quality vector needs {len(METRICS)} values, got {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __getitem__(self, metric: str) -> float:
        return float(self.values[METRICS.index(metric)])

    def as_dict(self) -> dict[str, float]:
        return {name: float(v) for name, v in zip(METRICS, self.values)}


@dataclass(frozen=True)
class PreferenceTable:
    """Preferred direction per metric, defaulted to the study-wide choices."""

    directions: tuple[str, ...] = (
        LOWER_BETTER,   # zcr
        LOWER_BETTER,   # hjorth_m
        HIGHER_BETTER,  # hjorth_c
        HIGHER_BETTER,  # snr_db
        LOWER_BETTER,   # ipr
        HIGHER_BETTER,  # bpr
        ZERO_BETTER,    # kurt
        ZERO_BETTER,    # skew
        HIGHER_BETTER,  # pi
        HIGHER_BETTER,  # tmcc
    )


@dataclass(frozen=True)
class NormalizationStats:
    """Per-metric min/max of oriented values over a reference population."""

    minima: np.ndarray
    maxima: np.ndarray
    population_id: str = ""

    def __post_init__(self):
        lo = np.ascontiguousarray(self.minima, dtype=np.float64)
        hi = np.ascontiguousarray(self.maxima, dtype=np.float64)
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "minima", lo)
        object.__setattr__(self, "maxima", hi)


def _hjorth(x: np.ndarray) -> tuple[float, float]:
    var_x = float(np.var(x))
    dx = np.diff(x)
    var_dx = float(np.var(dx))
    if var_x <= 0.0 or var_dx <= 0.0:
        return 0.0, 0.0
    mobility = np.sqrt(var_dx / var_x)
    d2x = np.diff(dx)
    var_d2x = float(np.var(d2x))
    mobility_dx = np.sqrt(var_d2x / var_dx) if var_d2x > 0.0 else 0.0
    return float(mobility), float(mobility_dx / mobility)


def _moments(x: np.ndarray) -> tuple[float, float]:
    """Population skewness and excess kurtosis."""
    d = x - x.mean()
    m2 = float(np.mean(d * d))
    if m2 <= 0.0:
        return 0.0, 0.0
    m3 = float(np.mean(d**3))
    m4 = float(np.mean(d**4))
    return m3 / m2**1.5, m4 / m2**2 - 3.0


def _band_powers(freqs: np.ndarray, power: np.ndarray, band: BandLimits) -> tuple[float, float, float]:
    total = float(power.sum())
    in_band = (freqs >= band.lo_hz) & (freqs <= band.hi_hz)
    p_band = float(power[in_band].sum())
    ref = (freqs >= BPR_REFERENCE_HZ[0]) & (freqs <= BPR_REFERENCE_HZ[1])
    p_ref = float(power[ref].sum())
    return total, p_band, p_ref


def _snr_db(freqs: np.ndarray, power: np.ndarray, band: BandLimits) -> float:
    in_band = (freqs >= band.lo_hz) & (freqs <= band.hi_hz)
    band_power = power[in_band]
    band_freqs = freqs[in_band]
    f_star = band_freqs[int(np.argmax(band_power))]
    near_peak = np.abs(freqs - f_star) <= SNR_PEAK_HALF_WIDTH_HZ
    p_sig = float(power[near_peak].sum())
    p_rest = float(power[in_band & ~near_peak].sum())
    # relative epsilon keeps the ratio finite and scale-invariant
    eps = 1e-12 * max(float(power[in_band].sum()), np.finfo(float).tiny)
    return float(10.0 * np.log10((p_sig + eps) / (p_rest + eps)))


def _periodicity(x: np.ndarray, fs: float, band: BandLimits) -> tuple[float, int]:
    """Peak lag-compensated autocorrelation over plausible breath periods.

    Returns (peak value, period lag in samples).  The period is the smallest
    lag achieving 95% of the peak, which pins the fundamental rather than a
    multiple when several period multiples fit the lag range.  Lags are
    capped at half the segment so the lag-compensated estimate keeps at
    least N/2 overlapping products; beyond that its variance diverges and
    the peak would be dominated by estimation noise.
    """
    n = x.size
    kmin = max(1, int(np.ceil(fs / band.hi_hz)))
    kmax = min(n // 2, int(np.floor(fs / band.lo_hz)))
    if kmax < kmin:
        return 0.0, 0
    rho = _kernels.normalized_autocorr_range(np.ascontiguousarray(x), kmin, kmax)
    peak = float(rho.max())
    if peak <= 0.0:
        return peak, kmin + int(np.argmax(rho))
    period = kmin + int(np.argmax(rho >= 0.95 * peak))
    return peak, period


def compute_quality_vector(
    seg: Segment, band: BandLimits, welch_cfg: WelchConfig | None = None
) -> QualityVector:
    """All ten metrics of a detrended, band-passed segment (RAW stage).

    The spectral ratios (snr_db, ipr, bpr) come from the segment's Welch
    spectrum; by default that is a single full-segment Hann taper, since
    subsegment averaging trades away the frequency resolution those ratios
    need on 10 s windows.  Pass ``welch_cfg`` to override.

    A segment with zero variance leaves the moment- and derivative-based
    metrics undefined; the vector is returned flagged invalid with zero
    values rather than raising, so callers can exclude the method for that
    window while keeping the window itself.
    """
    x = np.ascontiguousarray(seg.samples, dtype=np.float64)
    n = x.size
    if welch_cfg is None:
        welch_cfg = WelchConfig(subsegment_s=n / seg.sample_rate_hz)
    if n < 2 or float(np.var(x)) <= 0.0:
        return QualityVector(np.zeros(len(METRICS)), RAW, valid=False)

    zcr = _kernels.sign_changes(x) / (n - 1)
    hjorth_m, hjorth_c = _hjorth(x)
    skew, kurt = _moments(x)

    spec = welch(seg, welch_cfg)
    total, p_band, p_ref = _band_powers(spec.freqs_hz, spec.power, band)
    if total <= 0.0:
        return QualityVector(np.zeros(len(METRICS)), RAW, valid=False)
    ipr = (total - p_band) / total
    bpr = p_band / max(p_ref, 1e-12 * total)
    snr_db = _snr_db(spec.freqs_hz, spec.power, band)

    pi, period = _periodicity(x, seg.sample_rate_hz, band)
    tmcc = float(_kernels.tmcc_mean(x, period, period // 4)) if period > 0 else 0.0

    return QualityVector(
        np.array([zcr, hjorth_m, hjorth_c, snr_db, ipr, bpr, kurt, skew, pi, tmcc]),
        RAW,
    )


def orient(qv: QualityVector, prefs: PreferenceTable = PreferenceTable()) -> QualityVector:
    """Map a RAW vector so that lower uniformly means better quality."""
    if qv.stage != RAW:
        raise WrongStage(f"orient expects a RAW vector, got {qv.stage}")
    out = np.empty_like(qv.values)
    for i, direction in enumerate(prefs.directions):
        v = qv.values[i]
        if direction == LOWER_BETTER:
            out[i] = v
        elif direction == HIGHER_BETTER:
            out[i] = -v
        else:
            out[i] = abs(v)
    return QualityVector(out, ORIENTED, qv.valid)


def fit_normalization(
    population: list[QualityVector], population_id: str = ""
) -> NormalizationStats:
    """Per-metric min/max over all valid oriented vectors of a population."""
    rows = []
    for qv in population:
        if qv.stage != ORIENTED:
            raise WrongStage(f"normalization stats need ORIENTED vectors, got {qv.stage}")
        if qv.valid:
            rows.append(qv.values)
    if not rows:
        raise EmptyPopulation("no valid oriented vectors to fit normalization stats")
    mat = np.vstack(rows)
    return NormalizationStats(mat.min(axis=0), mat.max(axis=0), population_id)


def normalize(qv: QualityVector, stats: NormalizationStats) -> QualityVector:
    """Min-max scale an ORIENTED vector to [0, 1].

    Out-of-population values clamp to the range ends; a degenerate metric
    (max equal to min in the population) maps to the neutral 0.5.
    """
    if qv.stage != ORIENTED:
        raise WrongStage(f"normalize expects an ORIENTED vector, got {qv.stage}")
    span = stats.maxima - stats.minima
    with np.errstate(invalid="ignore", divide="ignore"):
        scaled = (qv.values - stats.minima) / span
    scaled = np.where(span > 0.0, np.clip(scaled, 0.0, 1.0), 0.5)
    return QualityVector(scaled, NORMALIZED, qv.valid)
