import numpy as np
import pytest

from respq.errors import (
    DegenerateAutocorrelation,
    EmptyBand,
    InsufficientPeaks,
    SegmentTooShort,
    SubsegmentTooLong,
)
from respq.signals import BandLimits, Segment
from respq.spectral import (
    MusicConfig,
    Spectrum,
    WelchConfig,
    autocorr_toeplitz,
    estimate_rr,
    fft_periodogram,
    music_pseudospectrum,
    peak_rr,
    spectrum_rr,
    subspace_decomposition,
    welch,
)

from _oracles import dft_power, jacobi_eigh, music_scan

BAND = BandLimits(0.1, 0.5)


def make_segment(x, fs=20.0, method="m"):
    x = np.asarray(x, dtype=float)
    return Segment(method, 0, 0.0, x - x.mean(), fs)


def sine_segment(f0, fs=20.0, n=200, phase_offset=0.5):
    n_idx = np.arange(n)
    return make_segment(np.sin(2 * np.pi * f0 * (n_idx + phase_offset) / fs), fs)


class TestAutocorrToeplitz:
    def test_hand_value_constant(self):
        seg = Segment("m", 0, 0.0, np.array([1.0, 1.0, 1.0, 1.0]), 20.0)
        r = autocorr_toeplitz(seg, 2)
        assert np.array_equal(r, np.array([[1.0, 0.75], [0.75, 1.0]]))

    def test_hand_value_alternating(self):
        seg = Segment("m", 0, 0.0, np.array([1.0, -1.0, 1.0, -1.0]), 20.0)
        r = autocorr_toeplitz(seg, 2)
        assert np.array_equal(r, np.array([[1.0, -0.75], [-0.75, 1.0]]))

    def test_zero_segment_gives_zero_matrix(self):
        seg = Segment("m", 0, 0.0, np.zeros(16), 20.0)
        assert np.all(autocorr_toeplitz(seg, 4) == 0.0)

    def test_exact_symmetry(self):
        rng = np.random.default_rng(5)
        seg = make_segment(rng.standard_normal(100))
        r = autocorr_toeplitz(seg, 4)
        assert np.array_equal(r, r.T)

    def test_too_short(self):
        with pytest.raises(SegmentTooShort):
            autocorr_toeplitz(Segment("m", 0, 0.0, np.ones(3), 20.0), 4)

    def test_matches_loop_oracle(self):
        from _oracles import autocorr_lags_loop

        rng = np.random.default_rng(6)
        x = rng.standard_normal(64)
        r = autocorr_toeplitz(make_segment(x), 4)
        lags = autocorr_lags_loop(x - x.mean(), 4)
        for i in range(4):
            for j in range(4):
                assert abs(r[i, j] - lags[abs(i - j)]) < 1e-12


class TestMusic:
    def test_model_order_dimensions(self):
        seg = sine_segment(0.25)
        r = autocorr_toeplitz(seg, 4)
        dec = subspace_decomposition(r, 2)
        assert r.shape == (4, 4)
        assert dec.noise_basis.shape == (4, 2)

    def test_noise_basis_orthonormal(self):
        seg = sine_segment(0.3)
        dec = subspace_decomposition(autocorr_toeplitz(seg, 4), 2)
        gram = dec.noise_basis.T @ dec.noise_basis
        assert np.abs(gram - np.eye(2)).max() < 1e-10

    def test_eigenvalues_ascending(self):
        seg = sine_segment(0.2)
        dec = subspace_decomposition(autocorr_toeplitz(seg, 4), 2)
        assert np.all(np.diff(dec.eigenvalues) >= -1e-14)

    def test_clean_sine_argmax_within_one_bin(self):
        seg = sine_segment(0.25)
        spec = music_pseudospectrum(seg)
        mask = (spec.freqs_hz >= 0.1) & (spec.freqs_hz <= 0.5)
        f_hat = spec.freqs_hz[mask][np.argmax(spec.power[mask])]
        assert abs(f_hat - 0.25) <= 20.0 / (2 * 4096)

    def test_matches_independent_eigensolver_scan(self):
        seg = sine_segment(0.3)
        spec = music_pseudospectrum(seg, MusicConfig(n_fft=512))
        grid, oracle_power = music_scan(np.asarray(seg.samples), 20.0, grid=spec.freqs_hz)
        assert np.allclose(spec.power, oracle_power, rtol=1e-6, atol=1e-6)

    def test_zero_segment_degenerate(self):
        with pytest.raises(DegenerateAutocorrelation):
            music_pseudospectrum(Segment("m", 0, 0.0, np.zeros(200), 20.0))

    def test_grid_definition(self):
        seg = sine_segment(0.25)
        spec = music_pseudospectrum(seg, MusicConfig(n_fft=128))
        assert np.allclose(spec.freqs_hz, np.arange(128) / 128 * 10.0, atol=0)

    def test_scale_invariant_argmax(self):
        rng = np.random.default_rng(9)
        x = np.sin(2 * np.pi * 0.22 * np.arange(200) / 20.0) + 0.1 * rng.standard_normal(200)
        base = music_pseudospectrum(make_segment(x))
        for c in (0.5, 3.0, -2.0):
            scaled = music_pseudospectrum(make_segment(c * x))
            assert np.argmax(scaled.power) == np.argmax(base.power)

    def test_too_short_for_order(self):
        with pytest.raises(SegmentTooShort):
            music_pseudospectrum(Segment("m", 0, 0.0, np.ones(4), 20.0))

    def test_jacobi_oracle_agrees_with_eigh(self):
        seg = sine_segment(0.27)
        r = autocorr_toeplitz(seg, 4)
        w_np, v_np = np.linalg.eigh(r)
        w_j, v_j = jacobi_eigh(r)
        assert np.allclose(w_np, w_j, atol=1e-10)
        # eigenvector signs are arbitrary; compare projectors
        p_np = v_np[:, :2] @ v_np[:, :2].T
        p_j = v_j[:, :2] @ v_j[:, :2].T
        assert np.abs(p_np - p_j).max() < 1e-8


class TestFftPeriodogram:
    def test_sine_at_bin_dominates(self):
        # 0.25 Hz sits exactly on the 256-point grid at fs=20 (bin 3.2 -> use n=256, f=k*fs/n)
        fs, n_fft = 20.0, 256
        k = 4
        f0 = k * fs / n_fft  # 0.3125 Hz, inside the band
        x = np.sin(2 * np.pi * f0 * np.arange(n_fft) / fs)
        seg = make_segment(x, fs)
        spec = fft_periodogram(seg, n_fft)
        band = (spec.freqs_hz >= 0.1) & (spec.freqs_hz <= 0.5)
        in_band = spec.power[band]
        assert in_band.max() / in_band.sum() >= 0.99

    def test_matches_direct_dft_sum(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal(32)
        seg = make_segment(x, 20.0)
        spec = fft_periodogram(seg, 64)
        oracle = dft_power(np.asarray(seg.samples), 64)
        assert np.allclose(spec.power, oracle, atol=1e-9)

    def test_zero_segment_all_zero(self):
        seg = Segment("m", 0, 0.0, np.zeros(100), 20.0)
        assert np.all(fft_periodogram(seg, 256).power == 0.0)

    def test_parseval(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal(200)
        seg = make_segment(x, 20.0)
        n_fft = 512
        spec = fft_periodogram(seg, n_fft)
        # fold the one-sided grid back to a full-grid sum, then rescale
        weights = np.full(spec.power.size, 2.0)
        weights[0] = 1.0
        weights[-1] = 1.0  # Nyquist bin is unpaired for even n_fft
        total = (weights * spec.power).sum() * seg.n / n_fft
        direct = float(np.sum(np.asarray(seg.samples) ** 2))
        assert abs(total - direct) / direct < 1e-9

    def test_nfft_below_n_rejected(self):
        with pytest.raises(SegmentTooShort):
            fft_periodogram(sine_segment(0.25), 128)


class TestWelch:
    def test_monte_carlo_seeded_recovery(self):
        # 0.25 Hz sine with white noise at 15 dB in-band SNR: the seeded
        # harness recovers the peak within 0.02 Hz in at least 95% of trials
        fs, n = 20.0, 200
        rng = np.random.default_rng(777)
        hits = 0
        ratios_sine = []
        ratios_noise = []
        for _ in range(200):
            sigma2 = (0.5 / 10 ** 1.5) * (fs / 2) / 0.4
            noise = np.sqrt(sigma2) * rng.standard_normal(n)
            x = np.sin(2 * np.pi * 0.25 * (np.arange(n) / fs) + rng.uniform(0, 2 * np.pi))
            spec = welch(make_segment(x + noise, fs))
            band = (spec.freqs_hz >= 0.1) & (spec.freqs_hz <= 0.5)
            f_hat = spec.freqs_hz[band][np.argmax(spec.power[band])]
            hits += abs(f_hat - 0.25) <= 0.02
            ratios_sine.append(spec.power[band].max() / np.median(spec.power[band]))
            spec_n = welch(make_segment(noise, fs))
            ratios_noise.append(spec_n.power[band].max() / np.median(spec_n.power[band]))
        assert hits >= 0.95 * 200
        assert np.median(ratios_noise) < np.median(ratios_sine)

    def test_zero_signal_zero_power(self):
        seg = Segment("m", 0, 0.0, np.zeros(200), 20.0)
        assert np.all(welch(seg).power == 0.0)

    def test_subsegment_too_long(self):
        with pytest.raises(SubsegmentTooLong):
            welch(sine_segment(0.25, n=80), WelchConfig(subsegment_s=5.0))

    def test_grid_spacing(self):
        spec = welch(sine_segment(0.25), WelchConfig(n_fft=4096))
        assert np.allclose(np.diff(spec.freqs_hz), 20.0 / 4096, atol=1e-12)


class TestSpectrumRr:
    def test_peak_maps_to_bpm(self):
        freqs = np.linspace(0.0, 1.0, 101)
        power = np.zeros(101)
        power[25] = 1.0  # 0.25 Hz
        est = spectrum_rr(Spectrum(freqs, power, "fft"), BAND)
        assert est.rr_bpm == pytest.approx(15.0)

    def test_flat_spectrum_tie_to_lowest(self):
        freqs = np.linspace(0.0, 1.0, 101)
        est = spectrum_rr(Spectrum(freqs, np.ones(101), "fft"), BAND)
        assert est.rr_bpm == pytest.approx(60 * 0.1)

    def test_band_restriction(self):
        freqs = np.linspace(0.0, 1.0, 101)
        power = np.zeros(101)
        power[80] = 5.0  # 0.8 Hz, outside
        power[20] = 1.0  # 0.2 Hz, inside
        est = spectrum_rr(Spectrum(freqs, power, "welch"), BAND)
        assert est.rr_bpm == pytest.approx(12.0)

    def test_empty_band(self):
        spec = Spectrum(np.array([1.0, 2.0]), np.array([1.0, 1.0]), "fft")
        with pytest.raises(EmptyBand):
            spectrum_rr(spec, BAND)

    def test_band_tightening_stays_inside(self):
        rng = np.random.default_rng(12)
        freqs = np.linspace(0.0, 1.0, 201)
        power = rng.uniform(size=201)
        wide = spectrum_rr(Spectrum(freqs, power, "fft"), BandLimits(0.1, 0.5))
        for hi in (0.4, 0.3, 0.2):
            tight = spectrum_rr(Spectrum(freqs, power, "fft"), BandLimits(0.1, hi))
            assert 60 * 0.1 <= tight.rr_bpm <= 60 * hi
            if wide.rr_bpm <= 60 * hi:
                assert tight.rr_bpm == wide.rr_bpm


class TestPeakRr:
    def test_clean_sine(self):
        seg = sine_segment(0.25, n=200)
        est = peak_rr(seg, BAND)
        assert est.rr_bpm == pytest.approx(15.0, abs=0.5)

    def test_constant_insufficient(self):
        with pytest.raises(InsufficientPeaks):
            peak_rr(Segment("m", 0, 0.0, np.zeros(200), 20.0), BAND)

    def test_upper_clamp(self):
        seg = sine_segment(0.5, n=200)
        est = peak_rr(seg, BAND)
        assert est.rr_bpm == pytest.approx(30.0, abs=1e-9)


class TestEstimatorAgreement:
    def test_spectral_estimators_agree_on_sine_with_small_noise(self):
        # Median-level agreement on a seeded corpus.  Worst-case spreads are
        # dominated by the 4-lag pseudo-spectrum's finite-sample bias and the
        # 5 s Hann lobe, both phase-dependent, so a per-draw bound does not
        # hold; medians measured at 0.027 (trio) and 0.025 (peak).
        rng = np.random.default_rng(2024)
        spreads = []
        peak_diffs = []
        for _ in range(60):
            f0 = rng.uniform(0.22, 0.35)
            x = np.sin(2 * np.pi * f0 * np.arange(200) / 20.0 + rng.uniform(0, 2 * np.pi))
            x = x + 0.05 * rng.standard_normal(200)
            seg = make_segment(x, 20.0)
            rr = {
                name: estimate_rr(seg, name, BAND).rr_bpm
                for name in ("welch", "fft", "music", "peak")
            }
            trio = np.array([rr["welch"], rr["fft"], rr["music"]]) / 60.0
            spreads.append(trio.max() - trio.min())
            assert np.isfinite(rr["peak"])
            peak_diffs.append(
                max(abs(rr["peak"] - rr[k]) for k in ("welch", "fft", "music")) / 60.0
            )
        assert np.median(spreads) <= 0.03
        assert np.median(peak_diffs) <= 0.03
        assert max(spreads) <= 0.10

    def test_failures_surface_as_nan(self):
        seg = Segment("m", 3, 3.0, np.zeros(200), 20.0)
        assert np.isnan(estimate_rr(seg, "music", BAND).rr_bpm)
        assert np.isnan(estimate_rr(seg, "peak", BAND).rr_bpm)
