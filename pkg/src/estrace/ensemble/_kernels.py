"""Compiled kernels for extremely randomized trees.

Randomness is counter-based: each node owns a splitmix64 stream seeded
from (tree_seed, node_id), so a grown tree is a function of the data
multiset and the seed alone — row order and thread scheduling cannot
change it.  Regression sums are accumulated over value-sorted copies
for the same reason.

Trees are stored as parallel arrays indexed by node id: ``feat`` < 0
marks a leaf, ``value`` holds the majority class code or the leaf mean,
``left``/``right`` hold child ids.
"""

import numpy as np
from numba import njit, prange

U64 = np.uint64
_GOLDEN = U64(0x9E3779B97F4A7C15)
_MIX1 = U64(0xBF58476D1CE4E5B9)
_MIX2 = U64(0x94D049BB133111EB)
_INV53 = 2.0**-53


@njit(inline="always")
def _sm_next(state):
    state = state + _GOLDEN
    z = state
    z = (z ^ (z >> U64(30))) * _MIX1
    z = (z ^ (z >> U64(27))) * _MIX2
    return state, z ^ (z >> U64(31))


@njit(inline="always")
def _node_state(tree_seed, node_id):
    return tree_seed ^ (U64(node_id + 1) * _GOLDEN)


@njit(cache=True)
def grow_tree(X, y, n_classes, k, min_split, tree_seed,
              feat, thr, left, right, value, imp):
    """Grow one tree in place; returns the number of nodes used.

    Classification when n_classes > 0 (y holds class codes), regression
    otherwise.  Output arrays must hold 2n - 1 nodes.
    """
    n, p = X.shape
    classify = n_classes > 0
    idx = np.arange(n)
    perm = np.empty(p, np.int64)
    counts = np.zeros(max(n_classes, 1), np.int64)
    counts_left = np.zeros(max(n_classes, 1), np.int64)
    buf = np.empty(n, np.float64)

    stack_node = np.empty(n + 2, np.int64)
    stack_lo = np.empty(n + 2, np.int64)
    stack_hi = np.empty(n + 2, np.int64)
    top = 0
    stack_node[top] = 0
    stack_lo[top] = 0
    stack_hi[top] = n
    top += 1
    n_nodes = 1

    while top > 0:
        top -= 1
        node = stack_node[top]
        lo = stack_lo[top]
        hi = stack_hi[top]
        cnt = hi - lo

        # node statistics and purity
        if classify:
            for c in range(n_classes):
                counts[c] = 0
            for r in range(lo, hi):
                counts[int(y[idx[r]])] += 1
            majority = 0
            for c in range(1, n_classes):
                if counts[c] > counts[majority]:
                    majority = c
            leaf_value = float(majority)
            pure = counts[majority] == cnt
        else:
            for r in range(lo, hi):
                buf[r - lo] = y[idx[r]]
            seg = buf[:cnt]
            seg.sort()
            total = 0.0
            for i in range(cnt):
                total += seg[i]
            leaf_value = total / cnt
            pure = seg[0] == seg[cnt - 1]

        make_leaf = pure or cnt < min_split
        best_f = -1
        best_thr = 0.0
        best_gain = -1.0

        if not make_leaf:
            if classify:
                g_tot = 1.0
                for c in range(n_classes):
                    frac = counts[c] / cnt
                    g_tot -= frac * frac
            else:
                s1 = 0.0
                s2 = 0.0
                seg = buf[:cnt]
                for i in range(cnt):
                    s1 += seg[i]
                    s2 += seg[i] * seg[i]
                mu = s1 / cnt
                g_tot = max(s2 / cnt - mu * mu, 0.0)

            state = _node_state(tree_seed, node)
            for i in range(p):
                perm[i] = i
            for i in range(p - 1, 0, -1):
                state, z = _sm_next(state)
                j = int(z % U64(i + 1))
                tmp = perm[i]
                perm[i] = perm[j]
                perm[j] = tmp

            found = 0
            for pi in range(p):
                f = perm[pi]
                fmin = X[idx[lo], f]
                fmax = fmin
                for r in range(lo + 1, hi):
                    v = X[idx[r], f]
                    if v < fmin:
                        fmin = v
                    elif v > fmax:
                        fmax = v
                if fmin == fmax:
                    continue

                t = fmin
                for _ in range(64):
                    state, z = _sm_next(state)
                    u = float(z >> U64(11)) * _INV53
                    t = fmin + u * (fmax - fmin)
                    if fmin < t < fmax:
                        break
                if not (fmin < t < fmax):
                    t = np.nextafter(fmin, fmax)
                    if not (fmin < t < fmax):
                        continue  # no representable interior threshold

                if classify:
                    for c in range(n_classes):
                        counts_left[c] = 0
                    nl = 0
                    for r in range(lo, hi):
                        if X[idx[r], f] < t:
                            counts_left[int(y[idx[r]])] += 1
                            nl += 1
                    nr = cnt - nl
                    g_l = 1.0
                    g_r = 1.0
                    for c in range(n_classes):
                        fl = counts_left[c] / nl
                        fr = (counts[c] - counts_left[c]) / nr
                        g_l -= fl * fl
                        g_r -= fr * fr
                    gain = g_tot - (nl / cnt) * g_l - (nr / cnt) * g_r
                else:
                    nl = 0
                    for r in range(lo, hi):
                        if X[idx[r], f] < t:
                            buf[nl] = y[idx[r]]
                            nl += 1
                    nr = cnt - nl
                    segl = buf[:nl]
                    segl.sort()
                    s1 = 0.0
                    s2 = 0.0
                    for i in range(nl):
                        s1 += segl[i]
                        s2 += segl[i] * segl[i]
                    mu = s1 / nl
                    var_l = max(s2 / nl - mu * mu, 0.0)
                    j = nl
                    for r in range(lo, hi):
                        if not (X[idx[r], f] < t):
                            buf[j] = y[idx[r]]
                            j += 1
                    segr = buf[nl:cnt]
                    segr.sort()
                    s1 = 0.0
                    s2 = 0.0
                    for i in range(nr):
                        s1 += segr[i]
                        s2 += segr[i] * segr[i]
                    mu = s1 / nr
                    var_r = max(s2 / nr - mu * mu, 0.0)
                    gain = g_tot - (nl / cnt) * var_l - (nr / cnt) * var_r

                better = gain > best_gain
                if gain == best_gain:
                    if f < best_f or (f == best_f and t < best_thr):
                        better = True
                if better:
                    best_gain = gain
                    best_f = f
                    best_thr = t
                found += 1
                if found == k:
                    break

            if best_f < 0:
                make_leaf = True

        if make_leaf:
            feat[node] = -1
            thr[node] = 0.0
            left[node] = -1
            right[node] = -1
            value[node] = leaf_value
            continue

        if best_gain > 0.0:
            imp[best_f] += (cnt / n) * best_gain

        i = lo
        j = hi - 1
        while i <= j:
            if X[idx[i], best_f] < best_thr:
                i += 1
            else:
                tmp = idx[i]
                idx[i] = idx[j]
                idx[j] = tmp
                j -= 1
        mid = i

        left_id = n_nodes
        right_id = n_nodes + 1
        n_nodes += 2
        feat[node] = best_f
        thr[node] = best_thr
        left[node] = left_id
        right[node] = right_id
        value[node] = leaf_value

        stack_node[top] = right_id
        stack_lo[top] = mid
        stack_hi[top] = hi
        top += 1
        stack_node[top] = left_id
        stack_lo[top] = lo
        stack_hi[top] = mid
        top += 1

    return n_nodes


@njit(parallel=True, cache=True)
def grow_forest(X, y, n_classes, k, min_split, tree_seeds,
                feat, thr, left, right, value, imp, n_nodes):
    for t in prange(tree_seeds.size):
        n_nodes[t] = grow_tree(
            X, y, n_classes, k, min_split, tree_seeds[t],
            feat[t], thr[t], left[t], right[t], value[t], imp[t],
        )


@njit(cache=True)
def predict_votes(X, feat, thr, left, right, value, n_classes):
    """Per-row class vote counts over all trees."""
    n = X.shape[0]
    n_trees = feat.shape[0]
    votes = np.zeros((n, n_classes), np.int64)
    for i in range(n):
        for t in range(n_trees):
            node = 0
            while feat[t, node] >= 0:
                if X[i, feat[t, node]] < thr[t, node]:
                    node = left[t, node]
                else:
                    node = right[t, node]
            votes[i, int(value[t, node])] += 1
    return votes


@njit(cache=True)
def predict_mean(X, feat, thr, left, right, value):
    """Per-row mean of leaf values over all trees."""
    n = X.shape[0]
    n_trees = feat.shape[0]
    out = np.zeros(n)
    for i in range(n):
        acc = 0.0
        for t in range(n_trees):
            node = 0
            while feat[t, node] >= 0:
                if X[i, feat[t, node]] < thr[t, node]:
                    node = left[t, node]
                else:
                    node = right[t, node]
            acc += value[t, node]
        out[i] = acc / n_trees
    return out
