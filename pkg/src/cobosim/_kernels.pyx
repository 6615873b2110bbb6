# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled ladder-operator kernel; same contract as ``_kernels_py``."""
import numpy as np

from libc.stdint cimport int8_t, int64_t, uint8_t, uint64_t

cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil


def apply_term(const uint64_t[::1] states, const int64_t[::1] modes,
               const uint8_t[::1] creates, const uint64_t[::1] masks):
    cdef Py_ssize_t n = states.shape[0]
    cdef Py_ssize_t k = modes.shape[0]
    out_arr = np.empty(n, dtype=np.uint64)
    sign_arr = np.empty(n, dtype=np.int8)
    cdef uint64_t[::1] out = out_arr
    cdef int8_t[::1] sign = sign_arr
    cdef Py_ssize_t i, j
    cdef uint64_t s, bit
    cdef int8_t sg
    with nogil:
        for i in range(n):
            s = states[i]
            sg = 1
            for j in range(k):
                bit = (<uint64_t>1) << modes[j]
                if ((s & bit) != 0) == (creates[j] != 0):
                    sg = 0
                    break
                if __builtin_popcountll(s & masks[j]) & 1:
                    sg = -sg
                s ^= bit
            out[i] = s
            sign[i] = sg
    return out_arr, sign_arr
