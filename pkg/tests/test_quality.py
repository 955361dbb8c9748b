import numpy as np
import pytest

from respq.errors import EmptyPopulation, WrongStage
from respq.quality import (
    METRICS,
    NORMALIZED,
    ORIENTED,
    RAW,
    NormalizationStats,
    QualityVector,
    compute_quality_vector,
    fit_normalization,
    normalize,
    orient,
)
from respq.signals import BandLimits, Segment

BAND = BandLimits(0.1, 0.5)


def seg_of(x, fs=20.0):
    x = np.asarray(x, dtype=float)
    return Segment("m", 0, 0.0, x - x.mean(), fs)


def midpoint_sine(f0, fs=20.0, n=200):
    return np.sin(2 * np.pi * f0 * (np.arange(n) + 0.5) / fs)


def exact_hjorth_mobility(f0, fs, n):
    """Closed-form mobility of a detrended midpoint-sampled sinusoid.

    Uses the identity dx[m] = 2 sin(w/2) cos(w (m+1)), m = 0..n-2, and plain
    accumulation of the exact trigonometric sums.
    """
    w = 2 * np.pi * f0 / fs
    xs = [np.sin(w * (i + 0.5)) for i in range(n)]
    mean_x = sum(xs) / n
    var_x = sum((v - mean_x) ** 2 for v in xs) / n
    dxs = [xs[i + 1] - xs[i] for i in range(n - 1)]
    mean_d = sum(dxs) / (n - 1)
    var_d = sum((v - mean_d) ** 2 for v in dxs) / (n - 1)
    return np.sqrt(var_d / var_x)


class TestComputeQualityVector:
    """Frozen oracle values for two analytic sine segments.

    The 3-cycle segment (f0 = 0.3 at 20 Hz over 200 samples) tiles the phase
    circle symmetrically, so its sample moments are exact: 5 sign changes,
    zero skewness, excess kurtosis exactly -1.5.  The 2.5-cycle segment
    (f0 = 0.25) carries a leftover half-lobe and its values are frozen from
    independent counting and moment sums.
    """

    def test_three_cycle_sine_closed_forms(self):
        qv = compute_quality_vector(seg_of(midpoint_sine(0.3)), BAND)
        assert qv.valid
        assert qv["zcr"] == pytest.approx(5 / 199, abs=1e-12)
        assert qv["skew"] == pytest.approx(0.0, abs=1e-6)
        assert qv["kurt"] == pytest.approx(-1.5, abs=1e-9)
        assert qv["hjorth_m"] == pytest.approx(2 * np.sin(np.pi * 0.3 / 20.0), abs=1e-3)
        assert qv["pi"] >= 0.95
        assert qv["bpr"] >= 0.95
        assert qv["ipr"] <= 0.05

    def test_half_cycle_leftover_sine_frozen_values(self):
        x = midpoint_sine(0.25)
        changes = sum(1 for i in range(199) if (x[i] - x.mean()) * (x[i + 1] - x.mean()) < 0)
        qv = compute_quality_vector(seg_of(x), BAND)
        assert changes == 6
        assert qv["zcr"] == pytest.approx(changes / 199, abs=1e-12)
        # moments of the detrended samples, accumulated independently
        d = x - x.mean()
        m2 = sum(v * v for v in d) / 200
        skew = (sum(v**3 for v in d) / 200) / m2**1.5
        kurt = (sum(v**4 for v in d) / 200) / m2**2 - 3
        assert qv["skew"] == pytest.approx(skew, abs=1e-9)
        assert qv["kurt"] == pytest.approx(kurt, abs=1e-9)
        assert qv["pi"] >= 0.95
        assert qv["bpr"] >= 0.95
        assert qv["ipr"] <= 0.05

    def test_hjorth_matches_exact_discrete_form(self):
        for f0 in (0.2, 0.25, 0.3):
            qv = compute_quality_vector(seg_of(midpoint_sine(f0)), BAND)
            assert qv["hjorth_m"] == pytest.approx(exact_hjorth_mobility(f0, 20.0, 200), abs=1e-9)

    def test_zero_variance_flagged_invalid(self):
        qv = compute_quality_vector(Segment("m", 0, 0.0, np.zeros(200), 20.0), BAND)
        assert not qv.valid
        assert np.all(qv.values == 0.0)
        assert np.all(np.isfinite(qv.values))

    def test_scale_invariance_all_ten(self):
        rng = np.random.default_rng(21)
        for _ in range(5):
            x = midpoint_sine(rng.uniform(0.15, 0.4)) + 0.3 * rng.standard_normal(200)
            base = compute_quality_vector(seg_of(x), BAND).values
            for c in (0.5, 3.0, 1e3):
                scaled = compute_quality_vector(seg_of(c * x), BAND).values
                rel = np.abs(scaled - base) / np.maximum(np.abs(base), 1e-12)
                assert rel.max() < 1e-9

    def test_all_finite_on_noise(self):
        rng = np.random.default_rng(8)
        qv = compute_quality_vector(seg_of(rng.standard_normal(200)), BAND)
        assert qv.valid
        assert np.all(np.isfinite(qv.values))


class TestOrient:
    def test_direction_rules(self):
        raw = QualityVector(np.array([0.1, 0.2, 0.3, 12.0, 0.1, 0.9, -1.5, -0.4, 0.8, 0.7]), RAW)
        out = orient(raw)
        assert out.stage == ORIENTED
        assert out["zcr"] == pytest.approx(0.1)        # lower better, unchanged
        assert out["ipr"] == pytest.approx(0.1)        # lower better, unchanged
        assert out["snr_db"] == pytest.approx(-12.0)   # higher better, negated
        assert out["skew"] == pytest.approx(0.4)       # zero better, absolute value
        assert out["kurt"] == pytest.approx(1.5)

    def test_double_orientation_rejected(self):
        raw = QualityVector(np.zeros(10), RAW)
        oriented = orient(raw)
        with pytest.raises(WrongStage):
            orient(oriented)

    def test_invalid_flag_carried(self):
        raw = QualityVector(np.zeros(10), RAW, valid=False)
        assert not orient(raw).valid


class TestNormalization:
    def _oriented(self, values, valid=True):
        return QualityVector(np.asarray(values, dtype=float), ORIENTED, valid)

    def test_single_vector_population(self):
        vec = self._oriented(np.linspace(0, 9, 10))
        stats = fit_normalization([vec])
        assert np.array_equal(stats.minima, vec.values)
        assert np.array_equal(stats.maxima, vec.values)

    def test_two_vector_min_max(self):
        a = self._oriented(np.zeros(10))
        b = self._oriented(np.full(10, 2.0))
        stats = fit_normalization([a, b])
        assert np.all(stats.minima == 0.0)
        assert np.all(stats.maxima == 2.0)

    def test_permutation_invariant(self):
        rng = np.random.default_rng(3)
        vecs = [self._oriented(rng.uniform(size=10)) for _ in range(6)]
        s1 = fit_normalization(vecs)
        s2 = fit_normalization(vecs[::-1])
        assert np.array_equal(s1.minima, s2.minima)
        assert np.array_equal(s1.maxima, s2.maxima)

    def test_invalid_vectors_excluded(self):
        good = self._oriented(np.ones(10))
        bad = self._oriented(np.full(10, 100.0), valid=False)
        stats = fit_normalization([good, bad])
        assert np.all(stats.maxima == 1.0)

    def test_empty_population(self):
        with pytest.raises(EmptyPopulation):
            fit_normalization([])

    def test_endpoints_and_clamp(self):
        stats = NormalizationStats(np.zeros(10), np.full(10, 2.0))
        lo = normalize(self._oriented(np.zeros(10)), stats)
        hi = normalize(self._oriented(np.full(10, 2.0)), stats)
        below = normalize(self._oriented(np.full(10, -1.0)), stats)
        above = normalize(self._oriented(np.full(10, 9.0)), stats)
        assert np.all(lo.values == 0.0) and np.all(hi.values == 1.0)
        assert np.all(below.values == 0.0) and np.all(above.values == 1.0)
        assert lo.stage == NORMALIZED

    def test_degenerate_metric_maps_to_half(self):
        stats = NormalizationStats(np.ones(10), np.ones(10))
        out = normalize(self._oriented(np.ones(10)), stats)
        assert np.all(out.values == 0.5)

    def test_normalized_within_unit_cube(self):
        rng = np.random.default_rng(4)
        vecs = [self._oriented(rng.normal(size=10) * 10) for _ in range(20)]
        stats = fit_normalization(vecs)
        for v in vecs:
            out = normalize(v, stats)
            assert np.all(out.values >= 0.0) and np.all(out.values <= 1.0)

    def test_normalize_requires_oriented(self):
        stats = NormalizationStats(np.zeros(10), np.ones(10))
        with pytest.raises(WrongStage):
            normalize(QualityVector(np.zeros(10), RAW), stats)


class TestNoiseMonotonicity:
    def test_quality_worsens_with_noise(self):
        # same segment plus white noise of increasing power: the oriented,
        # normalized snr/bpr/pi/tmcc components must be non-decreasing
        # (lower is better) in at least 90% of seeded trials
        idx = [METRICS.index(k) for k in ("snr_db", "bpr", "pi", "tmcc")]
        ok = 0
        trials = 100
        for t in range(trials):
            rng = np.random.default_rng(1000 + t)
            f0 = rng.uniform(0.18, 0.35)
            clean = np.sin(2 * np.pi * f0 * np.arange(200) / 20.0 + rng.uniform(0, 2 * np.pi))
            noise = rng.standard_normal(200)
            oriented = []
            for snr_db in (20.0, 10.0, 0.0):
                sigma = np.sqrt((0.5 / 10 ** (snr_db / 10)) * (20 / 2) / 0.4)
                qv = compute_quality_vector(seg_of(clean + sigma * noise), BAND)
                oriented.append(orient(qv))
            stats = fit_normalization(oriented)
            seqs = [normalize(o, stats).values for o in oriented]
            ok += all(
                seqs[0][i] <= seqs[1][i] + 1e-12 and seqs[1][i] <= seqs[2][i] + 1e-12
                for i in idx
            )
        assert ok >= 0.9 * trials
