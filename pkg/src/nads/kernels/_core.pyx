# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled orbit kernel; same contract as ``_fallback.orbit_block``."""

from libc.math cimport fmod, NAN
from libc.stdint cimport int64_t

NAME = "cython"

cdef enum:
    AFFINE = 0
    TENT = 1
    DOUBLE = 2
    LOGISTIC = 3
    NEG = 4
    SQUARE = 5
    TRANSLATE = 6
    SCALE = 7

cdef enum:
    CIRCLE = 1


cdef inline double _mod1(double x) noexcept nogil:
    cdef double r = fmod(x, 1.0)
    if r < 0.0:
        r = r + 1.0
    if r >= 1.0:
        r = 0.0
    if r == 0.0:
        r = 0.0
    return r


cdef inline double _apply(int64_t op, double a, double b, double x) noexcept nogil:
    if op == AFFINE:
        return a * x + b
    elif op == TENT:
        if x <= 0.5:
            return 2.0 * x
        return 2.0 * (1.0 - x)
    elif op == DOUBLE:
        return _mod1(2.0 * x)
    elif op == LOGISTIC:
        return a * x * (1.0 - x)
    elif op == NEG:
        return -x
    elif op == SQUARE:
        return x * x
    elif op == TRANSLATE:
        return x + a
    elif op == SCALE:
        return a * x
    return NAN


def orbit_block(const int64_t[::1] ops, const double[:, ::1] args,
                const int64_t[::1] offsets, const int64_t[::1] sched,
                int space_code, double lo, double hi,
                const double[::1] x0, double[:, ::1] out, int64_t[::1] escaped):
    cdef Py_ssize_t m = x0.shape[0]
    cdef Py_ssize_t steps = sched.shape[0]
    cdef Py_ssize_t r, n, j, rest
    cdef int64_t g
    cdef double x
    cdef bint circle = space_code == CIRCLE
    with nogil:
        for r in range(m):
            x = x0[r]
            out[r, 0] = x
            escaped[r] = -1
            if not circle and not (x >= lo and x <= hi):
                escaped[r] = 0
                for rest in range(1, steps + 1):
                    out[r, rest] = NAN
                continue
            for n in range(steps):
                g = sched[n]
                for j in range(offsets[g], offsets[g + 1]):
                    x = _apply(ops[j], args[j, 0], args[j, 1], x)
                    if circle:
                        x = _mod1(x)
                out[r, n + 1] = x
                if not circle and not (x >= lo and x <= hi):
                    escaped[r] = n + 1
                    for rest in range(n + 2, steps + 1):
                        out[r, rest] = NAN
                    break
