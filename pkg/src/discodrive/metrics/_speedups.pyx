# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled metric kernels. Optional: the pure-Python versions in
_kernels_py are selected at import when this module is not built."""

from libc.stdlib cimport free, malloc


def lcs_length_ids(list a, list b):
    """LCS length over two lists of small ints (token ids)."""
    cdef Py_ssize_t n = len(a), m = len(b)
    if n == 0 or m == 0:
        return 0
    cdef int *av = <int *> malloc(n * sizeof(int))
    cdef int *bv = <int *> malloc(m * sizeof(int))
    cdef int *prev = <int *> malloc((m + 1) * sizeof(int))
    cdef int *cur = <int *> malloc((m + 1) * sizeof(int))
    if av == NULL or bv == NULL or prev == NULL or cur == NULL:
        free(av); free(bv); free(prev); free(cur)
        raise MemoryError()
    cdef Py_ssize_t i, j
    cdef int ai, left, up
    cdef int *tmp
    try:
        for i in range(n):
            av[i] = a[i]
        for j in range(m):
            bv[j] = b[j]
        for j in range(m + 1):
            prev[j] = 0
            cur[j] = 0
        for i in range(n):
            ai = av[i]
            for j in range(1, m + 1):
                if ai == bv[j - 1]:
                    cur[j] = prev[j - 1] + 1
                else:
                    left = cur[j - 1]
                    up = prev[j]
                    cur[j] = left if left >= up else up
            tmp = prev
            prev = cur
            cur = tmp
        return prev[m]
    finally:
        free(av)
        free(bv)
        free(prev)
        free(cur)
