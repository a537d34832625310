# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled backend for the decision-tree split search.

Mirrors ``_split_py.best_split`` operation for operation: per candidate
column the explicit in-node entries are gathered in storage order, the
implicit zero block is appended as one aggregate group, groups are sorted
stably by value, and a single pass scans the boundaries.  Keeping gather
order, sort stability and the floating-point expressions identical to the
NumPy backend makes the two backends agree bit for bit.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

GINI = 0
MSE = 1

NO_SPLIT = (-1, 0.0, np.inf, 0)


cdef void _merge_sort(double* val, cnp.int64_t* cnt, double* gsum, double* gsq,
                      cnp.int64_t* idx, cnp.int64_t* tmp, long n) noexcept nogil:
    """Stable bottom-up merge sort of ``idx`` by ``val[idx]``."""
    cdef long width = 1, lo, mid, hi, i, j, k
    cdef cnp.int64_t* src = idx
    cdef cnp.int64_t* dst = tmp
    cdef cnp.int64_t* swap
    while width < n:
        lo = 0
        while lo < n:
            mid = lo + width
            if mid > n:
                mid = n
            hi = lo + 2 * width
            if hi > n:
                hi = n
            i = lo
            j = mid
            k = lo
            while i < mid and j < hi:
                if val[src[i]] <= val[src[j]]:
                    dst[k] = src[i]
                    i += 1
                else:
                    dst[k] = src[j]
                    j += 1
                k += 1
            while i < mid:
                dst[k] = src[i]
                i += 1
                k += 1
            while j < hi:
                dst[k] = src[j]
                j += 1
                k += 1
            lo += 2 * width
        swap = src
        src = dst
        dst = swap
        width *= 2
    if src != idx:
        for i in range(n):
            idx[i] = src[i]


def best_split(cnp.ndarray[cnp.float64_t, ndim=1] data,
               cnp.ndarray[cnp.int32_t, ndim=1] indices,
               cnp.ndarray[cnp.int32_t, ndim=1] indptr,
               cnp.ndarray[cnp.int64_t, ndim=1] cols,
               cnp.ndarray[cnp.uint8_t, ndim=1] in_node,
               cnp.ndarray[cnp.float64_t, ndim=1] target,
               long node_count, double node_sum, double node_sumsq,
               int criterion, long min_leaf):
    """Same contract as the NumPy backend; see ``_split_py.best_split``."""
    cdef long k = cols.shape[0]
    cdef long max_len = 0, j, c, s, e, p, m, row, n_groups, i
    cdef double best_score = np.inf
    cdef long best_col = -1, best_left = 0
    cdef double best_thr = 0.0
    cdef double t, nzs, nzq, v_lo, v_hi, thr
    cdef long nzc
    cdef double ls, rs, lq, rq, lcf, rcf, score
    cdef long lc, rc
    # Global running sums across columns, rebased per column; matches the
    # cumsum-minus-offset arithmetic of the NumPy backend bit for bit.
    cdef long cc_g = 0, cc0
    cdef double cs_g = 0.0, cq_g = 0.0, cs0, cq0

    for j in range(k):
        c = cols[j]
        m = indptr[c + 1] - indptr[c]
        if m + 1 > max_len:
            max_len = m + 1

    cdef cnp.ndarray[cnp.float64_t, ndim=1] val = np.empty(max_len, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] cnt = np.empty(max_len, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] gsum = np.empty(max_len, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] gsq = np.empty(max_len, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] order = np.empty(max_len, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] scratch = np.empty(max_len, dtype=np.int64)

    for j in range(k):
        c = cols[j]
        s = indptr[c]
        e = indptr[c + 1]
        m = 0
        nzs = 0.0
        nzq = 0.0
        for p in range(s, e):
            row = indices[p]
            if in_node[row]:
                t = target[row]
                val[m] = data[p]
                cnt[m] = 1
                gsum[m] = t
                gsq[m] = t * t
                nzs += t
                nzq += t * t
                m += 1
        nzc = m
        n_groups = m
        if node_count - nzc > 0:
            val[m] = 0.0
            cnt[m] = node_count - nzc
            gsum[m] = node_sum - nzs
            gsq[m] = node_sumsq - nzq
            n_groups += 1

        for i in range(n_groups):
            order[i] = i
        with nogil:
            _merge_sort(&val[0], &cnt[0], &gsum[0], &gsq[0],
                        &order[0], &scratch[0], n_groups)

        cc0 = cc_g
        cs0 = cs_g
        cq0 = cq_g
        for i in range(n_groups):
            cc_g += cnt[order[i]]
            cs_g += gsum[order[i]]
            cq_g += gsq[order[i]]
            if i == n_groups - 1:
                break
            v_lo = val[order[i]]
            v_hi = val[order[i + 1]]
            if v_lo >= v_hi:
                continue
            lc = cc_g - cc0
            rc = node_count - lc
            if lc < min_leaf or rc < min_leaf:
                continue
            lcf = <double>lc
            rcf = <double>rc
            ls = cs_g - cs0
            rs = node_sum - ls
            if criterion == GINI:
                score = ls * (lcf - ls) / lcf + rs * (rcf - rs) / rcf
            else:
                lq = cq_g - cq0
                rq = node_sumsq - lq
                score = (lq - ls * ls / lcf) + (rq - rs * rs / rcf)
            if score < best_score:
                best_score = score
                best_col = c
                best_left = lc
                thr = (v_lo + v_hi) / 2.0
                if thr >= v_hi:
                    thr = v_lo
                best_thr = thr

    if best_col < 0:
        return NO_SPLIT
    return int(best_col), float(best_thr), float(best_score), int(best_left)
