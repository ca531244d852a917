"""Hot inner loops, each with a numba kernel and a pure-numpy twin.

The public names dispatch on :data:`expsums._accel.BACKEND`; the ``*_nb`` and
``*_np`` variants stay importable so tests and the benchmark can compare the
two paths directly.

Conventions shared by the complete-sum kernels:

* ``kext`` is a kernel table of length ``q + 1`` whose last slot holds the
  value at infinity (0 for every catalog kernel);
* ``pw`` maps ``x`` to ``x^c`` with ``q`` standing for a pole.
"""

import numpy as np

from ._accel import BACKEND, njit


# ---------------------------------------------------------------------------
# cyclic convolution on Z/n (multiplicative convolution in dlog coordinates)


@njit(cache=True)
def cyclic_convolve_nb(a, b):
    n = a.shape[0]
    out = np.zeros(n, dtype=np.complex128)
    for j in range(n):
        aj = a[j]
        if aj == 0:
            continue
        k = j
        for i in range(n):
            out[k] += aj * b[i]
            k += 1
            if k == n:
                k = 0
    return out


def cyclic_convolve_np(a, b):
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    n = a.shape[0]
    out = np.zeros(n, dtype=np.complex128)
    for j in np.flatnonzero(a):
        out += a[j] * np.roll(b, j)
    return out


def cyclic_convolve_fft(a, b):
    """FFT route; agrees with the direct sum to roundoff (~1e-12 relative)."""
    return np.fft.ifft(np.fft.fft(a) * np.fft.fft(b))


def cyclic_convolve(a, b, method="direct"):
    if method == "fft":
        return cyclic_convolve_fft(a, b)
    if method != "direct":
        raise ValueError(f"unknown convolution method {method!r}")
    a = np.ascontiguousarray(a, dtype=np.complex128)
    b = np.ascontiguousarray(b, dtype=np.complex128)
    if BACKEND == "numba":
        return cyclic_convolve_nb(a, b)
    return cyclic_convolve_np(a, b)


# ---------------------------------------------------------------------------
# Sigma_I over a batch of parameter tuples (prime fields)


@njit(cache=True)
def sigma1_batch_nb(kext, pw, tuples, l, q):
    T = tuples.shape[0]
    out = np.zeros(T, dtype=np.complex128)
    m = 2 * l
    base = np.empty(m, dtype=np.int64)
    for t in range(T):
        acc = 0.0 + 0.0j
        for r in range(q):
            for i in range(m):
                base[i] = pw[(r + tuples[t, i]) % q]
            for s in range(1, q):
                prod = 1.0 + 0.0j
                for i in range(m):
                    b = base[i]
                    idx = q if b == q else (s * b) % q
                    val = kext[idx]
                    if i < l:
                        prod *= val
                    else:
                        prod *= np.conj(val)
                    if prod == 0:
                        break
                acc += prod
        out[t] = acc
    return out


def kc_matrix_np(kext, pw, v, l, q):
    """``Kc[r, s-1] = prod_i K(s (r+v_i)^c) conj K(s (r+v_{i+l})^c)``."""
    r = np.arange(q, dtype=np.int64)
    s = np.arange(1, q, dtype=np.int64)
    out = np.ones((q, q - 1), dtype=np.complex128)
    for i, vi in enumerate(v):
        b = pw[(r + int(vi)) % q]
        idx = np.where(b[:, None] == q, q, (b[:, None] * s[None, :]) % q)
        vals = kext[idx]
        out *= vals if i < l else np.conj(vals)
    return out


@njit(cache=True)
def kc_matrix_nb(kext, pw, v, l, q):
    out = np.ones((q, q - 1), dtype=np.complex128)
    m = 2 * l
    for r in range(q):
        for i in range(m):
            b = pw[(r + v[i]) % q]
            for s in range(1, q):
                idx = q if b == q else (s * b) % q
                val = kext[idx]
                if i < l:
                    out[r, s - 1] *= val
                else:
                    out[r, s - 1] *= np.conj(val)
    return out


def sigma1_batch_np(kext, pw, tuples, l, q):
    tuples = np.asarray(tuples, dtype=np.int64)
    return np.array([kc_matrix_np(kext, pw, t, l, q).sum() for t in tuples], dtype=np.complex128)


def sigma1_batch(kext, pw, tuples, l, q):
    tuples = np.ascontiguousarray(tuples, dtype=np.int64)
    if BACKEND == "numba":
        return sigma1_batch_nb(
            np.ascontiguousarray(kext, dtype=np.complex128),
            np.ascontiguousarray(pw, dtype=np.int64),
            tuples,
            int(l),
            int(q),
        )
    return sigma1_batch_np(kext, pw, tuples, l, q)


def kc_matrix(kext, pw, v, l, q):
    v = np.ascontiguousarray(v, dtype=np.int64)
    if BACKEND == "numba":
        return kc_matrix_nb(
            np.ascontiguousarray(kext, dtype=np.complex128),
            np.ascontiguousarray(pw, dtype=np.int64),
            v,
            int(l),
            int(q),
        )
    return kc_matrix_np(kext, pw, v, l, q)


# ---------------------------------------------------------------------------
# sums of products  sum_{v != 0} prod K(u_i v) conj K(u_{i+l} v)


@njit(cache=True)
def sop_batch_nb(kvals, tuples, l, q):
    T = tuples.shape[0]
    m = 2 * l
    out = np.zeros(T, dtype=np.complex128)
    for t in range(T):
        acc = 0.0 + 0.0j
        for v in range(1, q):
            prod = 1.0 + 0.0j
            for i in range(m):
                val = kvals[(tuples[t, i] * v) % q]
                if i < l:
                    prod *= val
                else:
                    prod *= np.conj(val)
            acc += prod
        out[t] = acc
    return out


def sop_batch_np(kvals, tuples, l, q):
    tuples = np.asarray(tuples, dtype=np.int64)
    v = np.arange(1, q, dtype=np.int64)
    vals = kvals[(tuples[:, :, None] * v[None, None, :]) % q]
    prod = np.prod(vals[:, :l, :], axis=1) * np.conj(np.prod(vals[:, l:, :], axis=1))
    return prod.sum(axis=1)


def sop_batch(kvals, tuples, l, q):
    tuples = np.ascontiguousarray(tuples, dtype=np.int64)
    if BACKEND == "numba":
        return sop_batch_nb(np.ascontiguousarray(kvals, dtype=np.complex128), tuples, int(l), int(q))
    return sop_batch_np(kvals, tuples, l, q)
