# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Dormand-Prince 5(4) integrator for the Lindblad equation.

Same algorithm, tableau and step control as ``_lindblad_py``; the right-hand
side is evaluated with plain loops over the small dense matrices.
"""
import numpy as np

from libc.math cimport sqrt, fabs, fmax, fmin, pow
from ._lindblad_py import stability_limit
from .errors import StepFailure

cdef double A21 = 1.0 / 5
cdef double A31 = 3.0 / 40, A32 = 9.0 / 40
cdef double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9
cdef double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561, A54 = -212.0 / 729
cdef double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247, A64 = 49.0 / 176, A65 = -5103.0 / 18656
cdef double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192, B5 = -2187.0 / 6784, B6 = 11.0 / 84
cdef double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920, E5 = -17253.0 / 339200
cdef double E6 = 22.0 / 525, E7 = -1.0 / 40


cdef inline double cabs(double complex z) nogil:
    return sqrt(z.real * z.real + z.imag * z.imag)


cdef void _rhs(double complex[:, ::1] rho, double complex[:, ::1] Heff,
               double complex[:, :, ::1] jumps, double complex[:, ::1] tmp,
               double complex[:, ::1] out) noexcept nogil:
    cdef Py_ssize_t d = rho.shape[0], nj = jumps.shape[0]
    cdef Py_ssize_t i, j, k, a
    cdef double complex s, mi = -1j
    # -i (Heff rho - rho Heff^dag)
    for i in range(d):
        for j in range(d):
            s = 0
            for k in range(d):
                s = s + Heff[i, k] * rho[k, j] - rho[i, k] * Heff[j, k].conjugate()
            out[i, j] = mi * s
    for a in range(nj):
        # tmp = L rho
        for i in range(d):
            for j in range(d):
                s = 0
                for k in range(d):
                    s = s + jumps[a, i, k] * rho[k, j]
                tmp[i, j] = s
        # out += tmp L^dag
        for i in range(d):
            for j in range(d):
                s = 0
                for k in range(d):
                    s = s + tmp[i, k] * jumps[a, j, k].conjugate()
                out[i, j] = out[i, j] + s


cdef double _norm(double complex[:, ::1] a, double complex[:, ::1] b, double complex[:, ::1] err,
                  double rtol, double atol) noexcept nogil:
    cdef Py_ssize_t d = a.shape[0], i, j
    cdef double acc = 0, sc, r
    for i in range(d):
        for j in range(d):
            sc = atol + rtol * fmax(cabs(a[i, j]), cabs(b[i, j]))
            r = cabs(err[i, j]) / sc
            acc += r * r
    return sqrt(acc / (d * d))


cdef double _rms_scaled(double complex[:, ::1] v, double complex[:, ::1] y, double rtol, double atol) noexcept nogil:
    cdef Py_ssize_t d = v.shape[0], i, j
    cdef double acc = 0, r
    for i in range(d):
        for j in range(d):
            r = cabs(v[i, j]) / (atol + rtol * cabs(y[i, j]))
            acc += r * r
    return sqrt(acc / (d * d))


def evolve(rho0, Heff, jumps, double t, double rtol=1e-10, double atol=1e-12, long max_steps=1_000_000):
    """Integrate from 0 to ``t``; returns the state and the accepted-step count."""
    y_arr = np.array(rho0, dtype=np.complex128, order="C", copy=True)
    if t == 0:
        return y_arr, 0
    cdef double complex[:, ::1] H = np.ascontiguousarray(Heff, dtype=np.complex128)
    jumps_arr = np.asarray(jumps, dtype=np.complex128)
    if jumps_arr.shape[0] == 0:
        jumps_arr = np.zeros((0,) + y_arr.shape, dtype=np.complex128)
    cdef double complex[:, :, ::1] L = np.ascontiguousarray(jumps_arr)
    cdef Py_ssize_t d = y_arr.shape[0], i, j
    cdef double complex[:, ::1] y = y_arr
    cdef double complex[:, :, ::1] k = np.zeros((7, d, d), dtype=np.complex128)
    cdef double complex[:, ::1] acc = np.zeros((d, d), dtype=np.complex128)
    cdef double complex[:, ::1] ynew = np.zeros((d, d), dtype=np.complex128)
    cdef double complex[:, ::1] err = np.zeros((d, d), dtype=np.complex128)
    cdef double complex[:, ::1] tmp = np.zeros((d, d), dtype=np.complex128)
    cdef double h_max = stability_limit(Heff, jumps_arr)
    cdef double now = 0, h, h0, h1, d0, d1, d2, norm, factor, eps = np.finfo(float).eps
    cdef long steps = 0, attempts = 0
    cdef bint last

    _rhs(y, H, L, tmp, k[0])
    # initial step size
    d0 = _rms_scaled(y, y, rtol, atol)
    d1 = _rms_scaled(k[0], y, rtol, atol)
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    h0 = fmin(h0, t)
    for i in range(d):
        for j in range(d):
            acc[i, j] = y[i, j] + h0 * k[0, i, j]
    _rhs(acc, H, L, tmp, k[1])
    for i in range(d):
        for j in range(d):
            err[i, j] = k[1, i, j] - k[0, i, j]
    d2 = _rms_scaled(err, y, rtol, atol) / h0
    if fmax(d1, d2) <= 1e-15:
        h1 = fmax(1e-6, h0 * 1e-3)
    else:
        h1 = pow(0.01 / fmax(d1, d2), 0.2)
    h = fmin(fmin(fmin(100 * h0, h1), t), h_max)

    while now < t:
        attempts += 1
        if attempts > max_steps:
            raise StepFailure(f"exceeded {max_steps} steps at t={now:.6g}")
        last = now + h >= t
        if last:
            h = t - now
        if h <= 16 * eps * fmax(fabs(now), 1.0):
            raise StepFailure(f"step size underflow at t={now:.6g}")
        with nogil:
            for i in range(d):
                for j in range(d):
                    acc[i, j] = y[i, j] + h * A21 * k[0, i, j]
            _rhs(acc, H, L, tmp, k[1])
            for i in range(d):
                for j in range(d):
                    acc[i, j] = y[i, j] + h * (A31 * k[0, i, j] + A32 * k[1, i, j])
            _rhs(acc, H, L, tmp, k[2])
            for i in range(d):
                for j in range(d):
                    acc[i, j] = y[i, j] + h * (A41 * k[0, i, j] + A42 * k[1, i, j] + A43 * k[2, i, j])
            _rhs(acc, H, L, tmp, k[3])
            for i in range(d):
                for j in range(d):
                    acc[i, j] = y[i, j] + h * (A51 * k[0, i, j] + A52 * k[1, i, j] + A53 * k[2, i, j]
                                               + A54 * k[3, i, j])
            _rhs(acc, H, L, tmp, k[4])
            for i in range(d):
                for j in range(d):
                    acc[i, j] = y[i, j] + h * (A61 * k[0, i, j] + A62 * k[1, i, j] + A63 * k[2, i, j]
                                               + A64 * k[3, i, j] + A65 * k[4, i, j])
            _rhs(acc, H, L, tmp, k[5])
            for i in range(d):
                for j in range(d):
                    ynew[i, j] = y[i, j] + h * (B1 * k[0, i, j] + B3 * k[2, i, j] + B4 * k[3, i, j]
                                                + B5 * k[4, i, j] + B6 * k[5, i, j])
            _rhs(ynew, H, L, tmp, k[6])
            for i in range(d):
                for j in range(d):
                    err[i, j] = h * (E1 * k[0, i, j] + E3 * k[2, i, j] + E4 * k[3, i, j]
                                     + E5 * k[4, i, j] + E6 * k[5, i, j] + E7 * k[6, i, j])
            norm = _norm(y, ynew, err, rtol, atol)
        if norm <= 1.0:
            now = t if last else now + h
            for i in range(d):
                for j in range(i, d):
                    y[i, j] = 0.5 * (ynew[i, j] + ynew[j, i].conjugate())
                    y[j, i] = y[i, j].conjugate()
            steps += 1
            # symmetrization moves y off the last stage point, so re-evaluate
            _rhs(y, H, L, tmp, k[0])
            factor = 10.0 if norm == 0 else fmin(10.0, fmax(0.2, 0.9 * pow(norm, -0.2)))
        else:
            factor = fmax(0.2, 0.9 * pow(norm, -0.2))
        h = fmin(h * factor, h_max)
    return y_arr, steps
