"""Exact CART growth kernels.

Split search follows the classic presort scheme: row orders per feature are
computed once per fit, then partitioned in place level by level, so growing
a tree costs O(depth * n * d) after the initial sort. Thresholds are the
midpoints between consecutive distinct float32 values; candidate splits are
scored by weighted Gini, ties resolved toward the lowest feature id and then
the lowest threshold. Bootstrap resampling enters as integer row weights.

All kernels release the GIL so forests can be grown from a thread pool.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True, nogil=True, inline="always")
def _rng_next(state):
    # xorshift64; state must be nonzero
    state ^= state << np.uint64(13)
    state ^= state >> np.uint64(7)
    state ^= state << np.uint64(17)
    return state


@njit(cache=True, nogil=True)
def grow_tree(
    X,            # (n, d_total) float32
    y,            # (n,) int32 class codes
    n_classes,    # int
    weight,       # (n,) int64 multiplicities, 0 = row absent from this tree
    sort_idx,     # (d_total, n) int32 rows sorted per feature (stable)
    cols,         # (d_act,) int32 usable column ids, ascending
    max_depth,
    min_samples_split,
    bag_size,     # features sampled per split; >= d_act means all
    bag_seed,     # uint64
):
    n_all = X.shape[0]
    d_act = cols.shape[0]

    n_act = 0
    for i in range(n_all):
        if weight[i] > 0:
            n_act += 1

    order = np.empty((d_act, n_act), dtype=np.int32)
    for a in range(d_act):
        src = sort_idx[cols[a]]
        k = 0
        for i in range(n_all):
            r = src[i]
            if weight[r] > 0:
                order[a, k] = r
                k += 1

    if max_depth < 30:
        cap_leaves = min(n_act, 1 << max_depth)
    else:
        cap_leaves = n_act
    cap = 2 * cap_leaves + 1

    node_feature = np.full(cap, -1, dtype=np.int32)
    node_threshold = np.zeros(cap, dtype=np.float32)
    node_left = np.full(cap, -1, dtype=np.int32)
    node_right = np.full(cap, -1, dtype=np.int32)
    node_impurity = np.zeros(cap, dtype=np.float64)
    node_n = np.zeros(cap, dtype=np.float64)
    node_leaf_slot = np.full(cap, -1, dtype=np.int32)
    leaf_counts = np.zeros((cap_leaves, n_classes), dtype=np.float64)

    counts_total = np.zeros(n_classes, dtype=np.float64)
    counts_left = np.zeros(n_classes, dtype=np.float64)
    tmp = np.empty(n_act, dtype=np.int32)
    side = np.zeros(n_all, dtype=np.uint8)
    pool = np.empty(d_act, dtype=np.int32)
    bag = np.empty(d_act, dtype=np.int32)

    stack_cap = max_depth + 4
    st_start = np.empty(stack_cap, dtype=np.int64)
    st_end = np.empty(stack_cap, dtype=np.int64)
    st_depth = np.empty(stack_cap, dtype=np.int64)
    st_parent = np.empty(stack_cap, dtype=np.int64)
    st_isleft = np.empty(stack_cap, dtype=np.int64)

    rng = bag_seed if bag_seed != np.uint64(0) else np.uint64(88172645463325252)
    n_nodes = 0
    n_leaves = 0

    top = 0
    st_start[0] = 0
    st_end[0] = n_act
    st_depth[0] = 0
    st_parent[0] = -1
    st_isleft[0] = 0

    while top >= 0:
        s = st_start[top]
        e = st_end[top]
        depth = st_depth[top]
        parent = st_parent[top]
        isleft = st_isleft[top]
        top -= 1

        node_id = n_nodes
        n_nodes += 1
        if parent >= 0:
            if isleft == 1:
                node_left[parent] = node_id
            else:
                node_right[parent] = node_id

        for k in range(n_classes):
            counts_total[k] = 0.0
        W = 0.0
        for i in range(s, e):
            r = order[0, i]
            w = float(weight[r])
            counts_total[y[r]] += w
            W += w
        sumsq_tot = 0.0
        for k in range(n_classes):
            sumsq_tot += counts_total[k] * counts_total[k]
        impurity = 1.0 - sumsq_tot / (W * W)
        node_impurity[node_id] = impurity
        node_n[node_id] = W

        found = False
        best_feat = -1
        best_thr = np.float32(0.0)
        if depth < max_depth and W >= min_samples_split and impurity > 0.0:
            # proxy maximized by the best split: sum(c_left^2)/W_left + sum(c_right^2)/W_right
            best_s = sumsq_tot / W

            m = bag_size if bag_size < d_act else d_act
            if m < d_act:
                for a in range(d_act):
                    pool[a] = a
                for i in range(m):
                    rng = _rng_next(rng)
                    j = i + int(rng % np.uint64(d_act - i))
                    t = pool[i]
                    pool[i] = pool[j]
                    pool[j] = t
                    bag[i] = pool[i]
                # ascending scan order makes the lowest-feature tie-break hold
                for i in range(1, m):
                    v = bag[i]
                    j = i - 1
                    while j >= 0 and bag[j] > v:
                        bag[j + 1] = bag[j]
                        j -= 1
                    bag[j + 1] = v
            else:
                for a in range(d_act):
                    bag[a] = a

            for bi in range(m):
                a = bag[bi]
                col = cols[a]
                for k in range(n_classes):
                    counts_left[k] = 0.0
                WL = 0.0
                sumsq_l = 0.0
                dot = 0.0
                for i in range(s, e - 1):
                    r = order[a, i]
                    w = float(weight[r])
                    c = y[r]
                    sumsq_l += w * (2.0 * counts_left[c] + w)
                    dot += w * counts_total[c]
                    counts_left[c] += w
                    WL += w
                    v = X[r, col]
                    v_next = X[order[a, i + 1], col]
                    if v < v_next:
                        WR = W - WL
                        sumsq_r = sumsq_tot - 2.0 * dot + sumsq_l
                        score = sumsq_l / WL + sumsq_r / WR
                        if score > best_s:
                            thr = v + (v_next - v) * np.float32(0.5)
                            if thr >= v_next:  # adjacent floats: snap to left value
                                thr = v
                            best_s = score
                            best_feat = col
                            best_thr = thr
                            found = True

        if found:
            node_feature[node_id] = best_feat
            node_threshold[node_id] = best_thr
            nl = 0
            for i in range(s, e):
                r = order[0, i]
                if X[r, best_feat] <= best_thr:
                    side[r] = 1
                    nl += 1
                else:
                    side[r] = 0
            for a in range(d_act):
                kl = s
                kr = 0
                for i in range(s, e):
                    r = order[a, i]
                    if side[r] == 1:
                        order[a, kl] = r
                        kl += 1
                    else:
                        tmp[kr] = r
                        kr += 1
                for i in range(kr):
                    order[a, kl + i] = tmp[i]
            top += 1
            st_start[top] = s + nl
            st_end[top] = e
            st_depth[top] = depth + 1
            st_parent[top] = node_id
            st_isleft[top] = 0
            top += 1
            st_start[top] = s
            st_end[top] = s + nl
            st_depth[top] = depth + 1
            st_parent[top] = node_id
            st_isleft[top] = 1
        else:
            slot = n_leaves
            n_leaves += 1
            node_leaf_slot[node_id] = slot
            for k in range(n_classes):
                leaf_counts[slot, k] = counts_total[k]

    return (
        node_feature[:n_nodes].copy(),
        node_threshold[:n_nodes].copy(),
        node_left[:n_nodes].copy(),
        node_right[:n_nodes].copy(),
        node_impurity[:n_nodes].copy(),
        node_n[:n_nodes].copy(),
        node_leaf_slot[:n_nodes].copy(),
        leaf_counts[:n_leaves].copy(),
    )


@njit(cache=True, nogil=True)
def predict_tree(X, feature, threshold, left, right, node_pred, out):
    for i in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = node_pred[node]


@njit(cache=True, nogil=True)
def add_tree_votes(X, feature, threshold, left, right, node_pred, votes):
    for i in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        votes[i, node_pred[node]] += 1
