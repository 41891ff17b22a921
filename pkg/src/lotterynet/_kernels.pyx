# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled enumeration kernels; see _pykernels for the reference versions."""

from libc.stdlib cimport malloc, calloc, free

cdef extern from *:
    """
    typedef unsigned __int128 lotterynet_u128;
    """
    ctypedef unsigned long long u128 "lotterynet_u128"

ctypedef unsigned long long u64

cdef int MAXN = 8
cdef int MAXM = 64


cdef inline int lehmer_rank(int* state, int n) nogil:
    cdef int r = 0, i, j, smaller
    for i in range(n):
        smaller = 0
        for j in range(i + 1, n):
            if state[j] < state[i]:
                smaller += 1
        r = r * (n - i) + smaller
    return r


cdef void walk(int k, int m, int n, u128 w, int* state, int* froms, int* tos,
               u64* nums, u64* stays, u128* acc) nogil:
    cdef int i, j, t
    if k == m:
        acc[lehmer_rank(state, n)] += w
        return
    if stays[k]:
        walk(k + 1, m, n, w * stays[k], state, froms, tos, nums, stays, acc)
    if nums[k]:
        i = froms[k]
        j = tos[k]
        t = state[i]; state[i] = state[j]; state[j] = t
        walk(k + 1, m, n, w * nums[k], state, froms, tos, nums, stays, acc)
        t = state[i]; state[i] = state[j]; state[j] = t


cdef object u128_to_int(u128 x):
    cdef u64 hi = <u64>(x >> 64)
    cdef u64 lo = <u64>x
    return (int(hi) << 64) | int(lo)


def _unrank(int r, int n):
    items = list(range(1, n + 1))
    fact = [1] * (n + 1)
    for i in range(1, n + 1):
        fact[i] = fact[i - 1] * i
    out = []
    for i in range(n):
        f = fact[n - 1 - i]
        q = r // f
        r -= q * f
        out.append(items.pop(q))
    return tuple(out)


def enumerate_outcomes(n, froms, tos, nums, dens):
    cdef int m = len(froms)
    cdef int nn = n
    cdef int i, size
    denom = 1
    for d in dens:
        denom *= d
    if nn > MAXN or m > MAXM or denom >= (1 << 127):
        from ._pykernels import enumerate_outcomes as slow
        return slow(n, froms, tos, nums, dens)
    size = 1
    for i in range(2, nn + 1):
        size *= i
    cdef int state[8]
    cdef int cfroms[64]
    cdef int ctos[64]
    cdef u64 cnums[64]
    cdef u64 cstays[64]
    cdef u128* acc = <u128*>calloc(size, sizeof(u128))
    if acc == NULL:
        raise MemoryError()
    try:
        for i in range(nn):
            state[i] = i + 1
        for i in range(m):
            cfroms[i] = froms[i]
            ctos[i] = tos[i]
            cnums[i] = nums[i]
            cstays[i] = dens[i] - nums[i]
        with nogil:
            walk(0, m, nn, 1, state, cfroms, ctos, cnums, cstays, acc)
        counts = {}
        for i in range(size):
            if acc[i]:
                counts[_unrank(i, nn)] = u128_to_int(acc[i])
    finally:
        free(acc)
    return counts, denom


def first_swap_counts(int lam, nums, dens):
    cdef int m = len(nums)
    cdef u64 space = (<u64>1) << lam
    cdef u64* limits = <u64*>malloc(m * sizeof(u64))
    cdef u64* cdens = <u64*>malloc(m * sizeof(u64))
    cdef u64* xs = <u64*>calloc(m, sizeof(u64))
    cdef u64* out = <u64*>calloc(m + 1, sizeof(u64))
    cdef int t, pos
    cdef bint done = False
    if lam > 32 or m == 0:
        free(limits); free(cdens); free(xs); free(out)
        from ._pykernels import first_swap_counts as slow
        return slow(lam, nums, dens)
    if limits == NULL or cdens == NULL or xs == NULL or out == NULL:
        free(limits); free(cdens); free(xs); free(out)
        raise MemoryError()
    try:
        for t in range(m):
            limits[t] = nums[t] * space
            cdens[t] = dens[t]
        with nogil:
            while not done:
                for t in range(m):
                    if xs[t] * cdens[t] < limits[t]:
                        out[t] += 1
                        break
                else:
                    out[m] += 1
                pos = m - 1
                while pos >= 0:
                    xs[pos] += 1
                    if xs[pos] < space:
                        break
                    xs[pos] = 0
                    pos -= 1
                if pos < 0:
                    done = True
        result = [int(out[t]) for t in range(m + 1)]
    finally:
        free(limits); free(cdens); free(xs); free(out)
    return result


def xor_below_count(int lam, num, den):
    if lam > 24 or num > den:
        from ._pykernels import xor_below_count as slow
        return slow(lam, num, den)
    cdef u64 space = (<u64>1) << lam
    cdef u64 limit = num * space
    cdef u64 cden = den
    cdef u64 a, b, total = 0
    with nogil:
        for a in range(space):
            for b in range(space):
                if (a ^ b) * cden < limit:
                    total += 1
    return int(total)
