# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Mirrors ``_ref`` exactly; see that module for docs."""

import numpy as np

cimport cython
from libc.math cimport cos, sin, sqrt, INFINITY

BACKEND = "compiled"


def sign_changes(const double[::1] x not None):
    cdef Py_ssize_t i, n = x.shape[0]
    cdef long count = 0
    for i in range(n - 1):
        if x[i] * x[i + 1] < 0.0:
            count += 1
    return count


def autocorr_lags(const double[::1] x not None, Py_ssize_t m):
    cdef Py_ssize_t n = x.shape[0]
    out_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t k, i
    cdef double acc
    for k in range(m):
        acc = 0.0
        for i in range(n - k):
            acc += x[i] * x[i + k]
        out[k] = acc / n
    return out_arr


def normalized_autocorr_range(const double[::1] x not None, Py_ssize_t kmin, Py_ssize_t kmax):
    cdef Py_ssize_t n = x.shape[0]
    out_arr = np.zeros(kmax - kmin + 1, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t k, i
    cdef double r0 = 0.0, acc
    for i in range(n):
        r0 += x[i] * x[i]
    r0 /= n
    if r0 <= 0.0:
        return out_arr
    for k in range(kmin, kmax + 1):
        acc = 0.0
        for i in range(n - k):
            acc += x[i] * x[i + k]
        out[k - kmin] = (acc / (n - k)) / r0
    return out_arr


def music_denominator(const double[:, ::1] noise_basis not None, double fs, Py_ssize_t n_fft):
    cdef Py_ssize_t m_dim = noise_basis.shape[0]
    cdef Py_ssize_t n_cols = noise_basis.shape[1]
    out_arr = np.empty(n_fft, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, k, m
    cdef double f, w, re, im, acc, c, s
    cdef double two_pi = 2.0 * 3.14159265358979323846
    for i in range(n_fft):
        f = (<double> i) / n_fft * (fs / 2.0)
        w = -two_pi * f / fs
        acc = 0.0
        for k in range(n_cols):
            re = 0.0
            im = 0.0
            for m in range(m_dim):
                c = cos(w * m)
                s = sin(w * m)
                re += noise_basis[m, k] * c
                im += noise_basis[m, k] * s
            acc += re * re + im * im
        out[i] = acc
    return out_arr


cdef double _ncc(const double[::1] x, Py_ssize_t a0, Py_ssize_t b0, Py_ssize_t length):
    cdef Py_ssize_t i
    cdef double ma = 0.0, mb = 0.0, num = 0.0, da, db, va = 0.0, vb = 0.0, den
    for i in range(length):
        ma += x[a0 + i]
        mb += x[b0 + i]
    ma /= length
    mb /= length
    for i in range(length):
        da = x[a0 + i] - ma
        db = x[b0 + i] - mb
        num += da * db
        va += da * da
        vb += db * db
    den = sqrt(va * vb)
    if den <= 0.0:
        return 0.0
    return num / den


def tmcc_mean(const double[::1] x not None, Py_ssize_t period, Py_ssize_t max_shift):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t n_cycles = n // period if period > 0 else 0
    cdef Py_ssize_t i, s, lo
    cdef double best, c, total = 0.0
    cdef Py_ssize_t pairs = 0, half
    if n_cycles < 2:
        half = n // 2
        if half < 2:
            return 0.0
        return _ncc(x, 0, half, half)
    for i in range(n_cycles - 1):
        best = -1.0
        for s in range(-max_shift, max_shift + 1):
            lo = (i + 1) * period + s
            if lo < 0 or lo + period > n:
                continue
            c = _ncc(x, i * period, lo, period)
            if c > best:
                best = c
        total += best
        pairs += 1
    return total / pairs


def subset_scan(
    const unsigned char[:, ::1] masks not None,
    const double[:, :, ::1] quality not None,
    const double[:, ::1] errors not None,
    const unsigned char[:, ::1] valid not None,
):
    cdef Py_ssize_t n_masks = masks.shape[0]
    cdef Py_ssize_t w_count = quality.shape[0]
    cdef Py_ssize_t m_count = quality.shape[1]
    cdef Py_ssize_t f_count = quality.shape[2]
    cdef Py_ssize_t j, w, m, f, sel, pop
    cdef double score, best_score, acc, mae
    cdef double best_mae = INFINITY
    cdef Py_ssize_t best_idx = -1, kept
    for j in range(n_masks):
        pop = 0
        for f in range(f_count):
            if masks[j, f]:
                pop += 1
        acc = 0.0
        kept = 0
        for w in range(w_count):
            sel = -1
            best_score = INFINITY
            for m in range(m_count):
                if not valid[w, m]:
                    continue
                score = 0.0
                for f in range(f_count):
                    if masks[j, f]:
                        score += quality[w, m, f]
                score /= pop
                if score < best_score:
                    best_score = score
                    sel = m
            if sel >= 0:
                acc += errors[w, sel] if errors[w, sel] >= 0.0 else -errors[w, sel]
                kept += 1
        if kept == 0:
            continue
        mae = acc / kept
        if mae < best_mae:
            best_mae = mae
            best_idx = j
    return best_idx, best_mae
