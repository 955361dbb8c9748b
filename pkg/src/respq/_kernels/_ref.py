"""Pure-numpy reference implementations of the hot kernels.

Semantically identical to the compiled versions in ``_core``; used as the
fallback when the extension is unavailable or RESPQ_PURE_PYTHON is set.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def sign_changes(x: np.ndarray) -> int:
    """Count strict sign alternations between consecutive samples.

    A pair contributes iff x[i]*x[i+1] < 0; exact zeros never produce a
    crossing.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.size < 2:
        return 0
    return int(np.count_nonzero(x[:-1] * x[1:] < 0.0))


def autocorr_lags(x: np.ndarray, m: int) -> np.ndarray:
    """Biased autocorrelation lags R[0..m-1], normalized by 1/N for every lag."""
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    out = np.empty(m, dtype=np.float64)
    for k in range(m):
        out[k] = np.dot(x[: n - k], x[k:]) / n
    return out


def normalized_autocorr_range(x: np.ndarray, kmin: int, kmax: int) -> np.ndarray:
    """Lag-compensated normalized autocorrelation over lags kmin..kmax.

    rho[k] = ((1/(N-k)) * sum x[n] x[n+k]) / ((1/N) * sum x[n]^2).
    Values may slightly exceed 1 for near-periodic signals; returns zeros
    when the zero-lag power vanishes.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    r0 = np.dot(x, x) / n
    out = np.zeros(kmax - kmin + 1, dtype=np.float64)
    if r0 <= 0.0:
        return out
    for i, k in enumerate(range(kmin, kmax + 1)):
        out[i] = (np.dot(x[: n - k], x[k:]) / (n - k)) / r0
    return out


def music_denominator(noise_basis: np.ndarray, fs: float, n_fft: int) -> np.ndarray:
    """Squared projection of the steering vectors onto the noise subspace.

    Grid f_i = i/n_fft * fs/2 for i = 0..n_fft-1; steering entries
    exp(-j 2 pi m f_i / fs) for m = 0..M-1; returns the per-frequency sum of
    squared projection magnitudes (the pseudo-spectrum reciprocal).
    """
    e = np.asarray(noise_basis, dtype=np.float64)
    m_dim = e.shape[0]
    f = np.arange(n_fft, dtype=np.float64) / n_fft * (fs / 2.0)
    phase = -2.0 * np.pi * np.outer(np.arange(m_dim, dtype=np.float64), f) / fs
    steering = np.exp(1j * phase)
    proj = e.T @ steering
    return np.ascontiguousarray((np.abs(proj) ** 2).sum(axis=0))


def _ncc(a: np.ndarray, b: np.ndarray) -> float:
    da = a - a.mean()
    db = b - b.mean()
    den = np.sqrt(np.dot(da, da) * np.dot(db, db))
    if den <= 0.0:
        return 0.0
    return float(np.dot(da, db) / den)


def tmcc_mean(x: np.ndarray, period: int, max_shift: int) -> float:
    """Mean over adjacent same-length cycles of the best shifted correlation.

    Cycles are consecutive blocks of ``period`` samples; for each adjacent
    pair the follower is slid by -max_shift..max_shift samples (windows that
    leave the signal are skipped) and the maximum normalized correlation is
    kept.  With fewer than two full cycles, correlates the two halves.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    n_cycles = n // period if period > 0 else 0
    if n_cycles < 2:
        half = n // 2
        if half < 2:
            return 0.0
        return _ncc(x[:half], x[half : 2 * half])
    total = 0.0
    pairs = 0
    for i in range(n_cycles - 1):
        a = x[i * period : (i + 1) * period]
        best = -1.0
        for s in range(-max_shift, max_shift + 1):
            lo = (i + 1) * period + s
            hi = lo + period
            if lo < 0 or hi > n:
                continue
            c = _ncc(a, x[lo:hi])
            if c > best:
                best = c
        total += best
        pairs += 1
    return total / pairs


def subset_scan(
    masks: np.ndarray,
    quality: np.ndarray,
    errors: np.ndarray,
    valid: np.ndarray,
) -> tuple[int, float]:
    """Evaluate every candidate metric mask and return (best index, best MAE).

    masks   : (n_masks, F) uint8, already ordered by the tie-break preference
    quality : (W, M, F) float64 normalized metric values
    errors  : (W, M) float64 absolute RR errors
    valid   : (W, M) uint8, zero excludes a method from a window

    Per mask and window the method with the lowest masked metric mean wins
    (ties to the lowest method index); windows with no valid method are
    skipped.  Strict less-than keeps the earliest mask on MAE ties, which
    realizes the popcount-then-lexicographic rule via the mask ordering.

    Accumulation is deliberately sequential (ascending metric index, then
    ascending window index) so results are bit-identical to the compiled
    kernel; the window sum therefore runs through Python floats rather than
    a pairwise numpy reduction.
    """
    n_masks = masks.shape[0]
    w, m, _ = quality.shape
    best_idx = -1
    best_mae = np.inf
    inv = ~valid.astype(bool)
    rows = np.arange(w)
    abs_err = np.abs(errors)
    for j in range(n_masks):
        idx = np.flatnonzero(masks[j])
        scores = quality[:, :, idx[0]].copy()
        for i in idx[1:]:
            scores += quality[:, :, i]
        scores /= idx.size
        scores[inv] = np.inf
        sel = np.argmin(scores, axis=1)
        ok = np.isfinite(scores[rows, sel])
        if not ok.any():
            continue
        kept = abs_err[rows, sel][ok]
        total = 0.0
        for v in kept.tolist():
            total += v
        mae = total / kept.size
        if mae < best_mae:
            best_mae = mae
            best_idx = j
    return best_idx, best_mae
