"""Hot inner loops.

Every kernel exists twice: a numba ``@njit`` version and a pure-numpy
version with identical semantics.  The numba path is used unless the
environment variable ``KDVLAB_DISABLE_NUMBA`` is set to a true-ish value
(``1``, ``true``, ``yes``) or numba cannot be imported.  The flag is read
once at import time; ``benchmarks/bench_kernels.py`` times both paths.
"""
from __future__ import annotations

import os

import numpy as np

_FLAG = os.environ.get("KDVLAB_DISABLE_NUMBA", "").strip().lower()

try:
    import numba as nb
except ImportError:  # pragma: no cover - numba is a declared dependency
    nb = None

USE_NUMBA = nb is not None and _FLAG not in ("1", "true", "yes", "on")


# ---------------------------------------------------------------------------
# trapezoid convolution on a uniform symmetric grid
#
# nodes xi_k = -X + k h, X = n h / 2.  xi_k - xi_j is node k - j + n/2, so
# for output k the admissible pairs (i, j) satisfy i + j = k + n/2 with both
# indices inside [0, n-1].  That index range is contiguous; the trapezoid
# rule puts weight h/2 on its two end pairs and h elsewhere.  The end pairs
# swap under f <-> g, so the rule is exactly commutative.


def _end_pairs(n):
    half = n // 2
    m = np.arange(n) + half
    j_lo = np.maximum(0, m - (n - 1))
    j_hi = np.minimum(n - 1, m)
    return m, j_lo, j_hi


def conv_trapezoid_numpy(f, g, h):
    n = f.shape[0]
    full = np.convolve(f, g)
    return _finish_trapezoid(full, f, g, h, n)


def conv_trapezoid_fft(f, g, h):
    from scipy.signal import fftconvolve

    n = f.shape[-1]
    full = fftconvolve(f, g, axes=-1)
    return _finish_trapezoid(full, f, g, h, n)


def _finish_trapezoid(full, f, g, h, n):
    m, j_lo, j_hi = _end_pairs(n)
    out = full[..., n // 2: n // 2 + n] * h
    out -= 0.5 * h * (f[..., m - j_lo] * g[..., j_lo] + f[..., m - j_hi] * g[..., j_hi])
    return out


def _conv_trapezoid_rows(f, g, h):
    out = np.empty(f.shape, dtype=np.complex128)
    for r in range(f.shape[0]):
        out[r] = _conv_trapezoid_loop(f[r], g[r], h)
    return out


def _conv_trapezoid_loop(f, g, h):
    n = f.shape[0]
    half = n // 2
    out = np.zeros(n, dtype=np.complex128)
    for k in range(n):
        m = k + half
        j_lo = max(0, m - (n - 1))
        j_hi = min(n - 1, m)
        acc = 0.5 * (f[m - j_lo] * g[j_lo] + f[m - j_hi] * g[j_hi])
        for j in range(j_lo + 1, j_hi):
            acc += f[m - j] * g[j]
        out[k] = acc * h
    return out


# ---------------------------------------------------------------------------
# closed-form second Picard iterate, summed over the data support
#
# out[k] = sum_j a[j] * b[k, j] * mult[k, j] * Q[k, j]
# Q = (exp(t*A) - exp(t*phi_out)) / z with A = z + phi_out and
# z = phi_pair - phi_out + i*res.  ``phase`` is t*res already reduced mod
# 2 pi.  The two algebraically equal forms below are picked by the sign of
# Re(t z) so neither exponential can overflow.


def _pair_sum_numpy(t, phi_out, phi_pair, res, phase, a, b, mult):
    dr = phi_pair - phi_out[:, None]
    z = dr + 1j * res
    tz = t * dr + 1j * phase
    e_out = np.broadcast_to(np.exp(t * phi_out)[:, None], z.shape)
    zero = z == 0.0
    zs = np.where(zero, 1.0, z)
    with np.errstate(over="ignore", invalid="ignore"):
        lo = e_out * np.expm1(tz) / zs
        hi = np.exp(t * phi_pair + 1j * phase) * (-np.expm1(-tz)) / zs
    q = np.where(tz.real <= 0.0, lo, hi)
    q = np.where(zero, t * e_out, q)
    return np.sum(a[None, :] * b * mult * q, axis=1)


def _pair_sum_loop(t, phi_out, phi_pair, res, phase, a, b, mult):
    nk, nj = b.shape
    out = np.zeros(nk, dtype=np.complex128)
    for k in range(nk):
        e_out = np.exp(t * phi_out[k])
        acc = 0.0 + 0.0j
        for j in range(nj):
            bj = b[k, j]
            if bj == 0.0:
                continue
            dr = phi_pair[k, j] - phi_out[k]
            z = dr + 1j * res[k, j]
            if z == 0.0:
                q = t * e_out + 0.0j
            else:
                tz = t * dr + 1j * phase[k, j]
                if tz.real <= 0.0:
                    q = e_out * _expm1c(tz) / z
                else:
                    q = np.exp(t * phi_pair[k, j] + 1j * phase[k, j]) * (-_expm1c(-tz)) / z
            acc += a[j] * bj * mult[k, j] * q
        out[k] = acc
    return out


def _expm1c(z):
    # complex expm1, series for small |z|
    if abs(z) < 1e-5:
        return z + 0.5 * z * z + z * z * z / 6.0
    return np.exp(z) - 1.0


if nb is not None:
    _njit = nb.njit(cache=True, nogil=True, fastmath=False)
    conv_trapezoid_numba = _njit(_conv_trapezoid_loop)
    _conv_trapezoid_loop = conv_trapezoid_numba
    conv_rows_numba = _njit(_conv_trapezoid_rows)
    _expm1c = _njit(_expm1c)
    pair_sum_numba = _njit(_pair_sum_loop)
else:  # pragma: no cover
    conv_trapezoid_numba = None
    conv_rows_numba = None
    pair_sum_numba = None


def conv_trapezoid(f, g, h, method="auto"):
    """Trapezoid-rule convolution of two coefficient arrays on one grid.

    ``method`` is ``"direct"`` (O(n^2)), ``"fft"``, or ``"auto"`` (direct
    below 2048 nodes).  A single direct convolution always goes through
    ``np.convolve``: it beats the compiled loop at every size measured by
    the benchmark.  ``"numba"`` forces the compiled loop.
    """
    f = np.ascontiguousarray(f, dtype=np.complex128)
    g = np.ascontiguousarray(g, dtype=np.complex128)
    if method == "auto":
        method = "direct" if f.shape[0] < 2048 else "fft"
    if method == "fft":
        return conv_trapezoid_fft(f, g, h)
    if method == "numba" and conv_trapezoid_numba is not None:
        return conv_trapezoid_numba(f, g, float(h))
    if method not in ("direct", "numba"):
        raise ValueError(f"unknown convolution method {method!r}")
    return conv_trapezoid_numpy(f, g, h)


def conv_trapezoid_rows(F, G, h, method="auto"):
    """Row-wise ``conv_trapezoid`` of two (k, n) arrays.

    Here the compiled loop pays off for small n (no per-row Python call),
    so ``direct`` follows the env flag.
    """
    F = np.ascontiguousarray(F, dtype=np.complex128)
    G = np.ascontiguousarray(G, dtype=np.complex128)
    if F.ndim == 1:
        return conv_trapezoid(F, G, h, method)
    n = F.shape[-1]
    if method == "auto":
        method = "direct" if n < 128 else "fft"
    if method == "fft":
        return conv_trapezoid_fft(F, G, h)
    if method != "direct":
        raise ValueError(f"unknown convolution method {method!r}")
    if USE_NUMBA:
        return conv_rows_numba(F, G, float(h))
    return np.stack([conv_trapezoid_numpy(a, b, h) for a, b in zip(F, G)])


def pair_sum(t, phi_out, phi_pair, res, phase, a, b, mult):
    args = (
        float(t),
        np.ascontiguousarray(phi_out, dtype=np.float64),
        np.ascontiguousarray(phi_pair, dtype=np.float64),
        np.ascontiguousarray(res, dtype=np.float64),
        np.ascontiguousarray(phase, dtype=np.float64),
        np.ascontiguousarray(a, dtype=np.complex128),
        np.ascontiguousarray(b, dtype=np.complex128),
        np.ascontiguousarray(mult, dtype=np.complex128),
    )
    if USE_NUMBA:
        return pair_sum_numba(*args)
    return _pair_sum_numpy(*args)
