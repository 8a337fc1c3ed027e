# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled batched stabilizer kernel.

Same contract as ``rfqas._kernels_py.clifford_energies``. Each sample runs in
its own scratch tableau, so sample ranges may be processed concurrently.
"""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t, int8_t
from libc.stdlib cimport malloc, free

cnp.import_array()


cdef extern from *:
    int popcount64 "__builtin_popcountll"(unsigned long long) nogil


cdef inline int _parity_anti(const uint64_t* ax, const uint64_t* az,
                             const uint64_t* bx, const uint64_t* bz, int W) noexcept nogil:
    cdef int w, c = 0
    for w in range(W):
        c += popcount64((ax[w] & bz[w]) ^ (az[w] & bx[w]))
    return c & 1


cdef inline int _phase(const uint64_t* x1, const uint64_t* z1,
                       const uint64_t* x2, const uint64_t* z2, int W) noexcept nogil:
    # exponent e with P1 P2 = i**e P3 (Hermitian representation)
    cdef int w, e = 0
    cdef uint64_t x3, z3
    for w in range(W):
        x3 = x1[w] ^ x2[w]
        z3 = z1[w] ^ z2[w]
        e += popcount64(x1[w] & z1[w]) + popcount64(x2[w] & z2[w])
        e += 2 * popcount64(z1[w] & x2[w]) - popcount64(x3 & z3)
    return e


cdef void _run_sample(
    const uint64_t[:, ::1] op_x, const uint64_t[:, ::1] op_z,
    const int64_t[::1] op_param, const int8_t[::1] op_k,
    const int8_t[::1] assign,
    const uint64_t[:, ::1] term_x, const uint64_t[:, ::1] term_z,
    const double[::1] coef, int n, int W,
    uint64_t* tx, uint64_t* tz, int* ts, uint64_t* ax, uint64_t* az,
    double* out,
) noexcept nogil:
    cdef int r, w, o, k, e, q, t, i, ph, zero
    cdef int n_ops = op_x.shape[0]
    cdef int T = term_x.shape[0]
    cdef int64_t p
    cdef uint64_t* rx
    cdef uint64_t* rz
    cdef double energy = 0.0

    for r in range(2 * n * W):
        tx[r] = 0
        tz[r] = 0
    for r in range(2 * n):
        ts[r] = 0
    for q in range(n):
        tx[q * W + q // 64] = (<uint64_t>1) << (q % 64)
        tz[(n + q) * W + q // 64] = (<uint64_t>1) << (q % 64)

    for o in range(n_ops):
        p = op_param[o]
        if p < 0:
            k = op_k[o]
        else:
            k = assign[p]
        k = k & 3
        if k == 0:
            continue
        for r in range(2 * n):
            rx = tx + r * W
            rz = tz + r * W
            if not _parity_anti(&op_x[o, 0], &op_z[o, 0], rx, rz, W):
                continue
            if k == 2:
                ts[r] ^= 1
                continue
            e = _phase(&op_x[o, 0], &op_z[o, 0], rx, rz, W)
            e += (3 if k == 1 else 1) + 2 * ts[r]
            ts[r] = (e & 3) >> 1
            for w in range(W):
                rx[w] ^= op_x[o, w]
                rz[w] ^= op_z[o, w]

    for t in range(T):
        zero = 0
        for i in range(n):
            if _parity_anti(&term_x[t, 0], &term_z[t, 0], tx + (n + i) * W, tz + (n + i) * W, W):
                zero = 1
                break
        if zero:
            continue
        for w in range(W):
            ax[w] = 0
            az[w] = 0
        ph = 0
        for i in range(n):
            if _parity_anti(&term_x[t, 0], &term_z[t, 0], tx + i * W, tz + i * W, W):
                ph += _phase(ax, az, tx + (n + i) * W, tz + (n + i) * W, W) + 2 * ts[n + i]
                for w in range(W):
                    ax[w] ^= tx[(n + i) * W + w]
                    az[w] ^= tz[(n + i) * W + w]
        if ph & 3 == 0:
            energy += coef[t]
        else:
            energy -= coef[t]
    out[0] = energy


def clifford_energies(
    const uint64_t[:, ::1] op_x, const uint64_t[:, ::1] op_z,
    const int64_t[::1] op_param, const int8_t[::1] op_k,
    const int8_t[:, ::1] assign,
    const uint64_t[:, ::1] term_x, const uint64_t[:, ::1] term_z,
    const double[::1] coef, int n,
):
    """Energy ``sum_j coef_j <h_j>`` for each row of ``assign`` (values 0..3)."""
    cdef Py_ssize_t S = assign.shape[0]
    cdef int W = term_x.shape[1]
    cdef Py_ssize_t s
    out = np.empty(S, dtype=np.float64)
    cdef double[::1] out_v = out
    cdef uint64_t* tx = <uint64_t*>malloc(2 * n * W * sizeof(uint64_t))
    cdef uint64_t* tz = <uint64_t*>malloc(2 * n * W * sizeof(uint64_t))
    cdef int* ts = <int*>malloc(2 * n * sizeof(int))
    cdef uint64_t* ax = <uint64_t*>malloc(W * sizeof(uint64_t))
    cdef uint64_t* az = <uint64_t*>malloc(W * sizeof(uint64_t))
    if not (tx and tz and ts and ax and az):
        free(tx); free(tz); free(ts); free(ax); free(az)
        raise MemoryError()
    try:
        with nogil:
            for s in range(S):
                _run_sample(op_x, op_z, op_param, op_k, assign[s], term_x, term_z, coef,
                            n, W, tx, tz, ts, ax, az, &out_v[s])
    finally:
        free(tx); free(tz); free(ts); free(ax); free(az)
    return out
