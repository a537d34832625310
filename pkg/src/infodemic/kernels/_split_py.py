"""Pure-NumPy backend for the decision-tree split search.

Both backends implement ``best_split`` with identical semantics: scan a set
of candidate feature columns of a CSC matrix restricted to the rows of one
tree node, and return the (column, threshold) pair minimising the impurity
criterion.  Rows without an explicit entry in a column count as zeros, so
the scan cost is proportional to the stored entries, not the node size.

Split predicate: ``x <= threshold`` goes to the left child.
"""

import numpy as np

GINI = 0  # binary classification, target holds 0/1 labels
MSE = 1   # regression on residuals, minimises summed squared error

NO_SPLIT = (-1, 0.0, np.inf, 0)


def _flat_ranges(starts, lengths):
    """Concatenate ``arange(s, s+l)`` for each (s, l) pair, vectorised."""
    nz = lengths > 0
    starts = starts[nz]
    lengths = lengths[nz]
    total = int(lengths.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64)
    out = np.ones(total, dtype=np.int64)
    ends = np.cumsum(lengths)
    out[0] = starts[0]
    out[ends[:-1]] = starts[1:] - (starts[:-1] + lengths[:-1]) + 1
    return np.cumsum(out)


def best_split(data, indices, indptr, cols, in_node, target,
               node_count, node_sum, node_sumsq, criterion, min_leaf):
    """Best (column, threshold) over ``cols`` for the rows flagged in ``in_node``.

    Returns ``(col, threshold, score, left_count)``; ``col`` is -1 when no
    valid split exists.  Lower score is better; ties keep the first
    candidate in (column order, ascending value) order, which makes the
    result deterministic and identical across backends.
    """
    k = len(cols)
    starts = indptr[cols].astype(np.int64)
    lengths = (indptr[cols + 1] - indptr[cols]).astype(np.int64)
    flat = _flat_ranges(starts, lengths)

    rows = indices[flat]
    keep = in_node[rows].astype(bool)
    rows = rows[keep]
    vals = data[flat][keep]
    colpos = np.repeat(np.arange(k, dtype=np.int64), lengths)[keep]
    tg = target[rows]

    # Per-column stats of the explicit in-node entries; the implicit zero
    # block of each column is synthesised as one aggregate group.
    nz_cnt = np.bincount(colpos, minlength=k)
    nz_sum = np.bincount(colpos, weights=tg, minlength=k)
    nz_sq = np.bincount(colpos, weights=tg * tg, minlength=k)
    zero_cnt = node_count - nz_cnt
    has_zeros = zero_cnt > 0

    cnt = np.concatenate([np.ones(len(vals), dtype=np.int64), zero_cnt[has_zeros]])
    gsum = np.concatenate([tg, node_sum - nz_sum[has_zeros]])
    gsq = np.concatenate([tg * tg, node_sumsq - nz_sq[has_zeros]])
    gval = np.concatenate([vals, np.zeros(int(has_zeros.sum()))])
    gcol = np.concatenate([colpos, np.flatnonzero(has_zeros)])

    if len(gval) < 2:
        return NO_SPLIT

    order = np.lexsort((gval, gcol))
    gval = gval[order]
    gcol = gcol[order]
    cnt = cnt[order]
    gsum = gsum[order]
    gsq = gsq[order]

    # Segmented (per-column) prefix sums.
    cc = np.cumsum(cnt)
    cs = np.cumsum(gsum)
    cq = np.cumsum(gsq)
    seg_starts = np.r_[0, np.flatnonzero(gcol[1:] != gcol[:-1]) + 1]
    seg_len = np.diff(np.r_[seg_starts, len(gcol)])
    cc = cc - np.repeat(np.r_[0, cc[seg_starts[1:] - 1]], seg_len)
    cs = cs - np.repeat(np.r_[0.0, cs[seg_starts[1:] - 1]], seg_len)
    cq = cq - np.repeat(np.r_[0.0, cq[seg_starts[1:] - 1]], seg_len)

    # A boundary between consecutive groups is a candidate when it stays in
    # the same column and the value strictly increases.
    cand = (gcol[:-1] == gcol[1:]) & (gval[:-1] < gval[1:])
    lc = cc[:-1]
    rc = node_count - lc
    cand &= (lc >= min_leaf) & (rc >= min_leaf)
    idx = np.flatnonzero(cand)
    if len(idx) == 0:
        return NO_SPLIT

    lcf = lc[idx].astype(np.float64)
    rcf = rc[idx].astype(np.float64)
    ls = cs[:-1][idx]
    rs = node_sum - ls
    if criterion == GINI:
        score = ls * (lcf - ls) / lcf + rs * (rcf - rs) / rcf
    else:
        lq = cq[:-1][idx]
        rq = node_sumsq - lq
        score = (lq - ls * ls / lcf) + (rq - rs * rs / rcf)

    best = int(np.argmin(score))
    i = idx[best]
    v_lo = gval[i]
    v_hi = gval[i + 1]
    threshold = (v_lo + v_hi) / 2.0
    if threshold >= v_hi:  # adjacent floats: keep the predicate consistent
        threshold = v_lo
    return int(cols[gcol[i]]), float(threshold), float(score[best]), int(lc[i])
