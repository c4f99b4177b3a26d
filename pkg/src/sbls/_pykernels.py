"""NumPy/pure-Python kernels; the fallback when ``_ckernels`` is not built."""

import numpy as np


def class_rank_sums(scores, labels, n_classes):
    """Per (class, column): twice the sum of midranks of that class's rows.

    Ranks are 1-based and computed per column over all rows, ties sharing
    their average rank; doubling keeps every quantity an exact integer.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.intp)
    n, k = scores.shape
    out = np.zeros((n_classes, k), dtype=np.int64)
    if n == 0:
        return out
    order = np.argsort(scores, axis=0, kind="stable")
    for j in range(k):
        idx = order[:, j]
        v = scores[idx, j]
        starts = np.flatnonzero(np.r_[True, v[1:] != v[:-1]])
        ends = np.r_[starts[1:], n]
        rank2 = np.repeat(starts + 1 + ends, ends - starts)
        out[:, j] = np.bincount(labels[idx], weights=rank2, minlength=n_classes).astype(np.int64)
    return out


def hungarian_max(weights):
    """Row -> column assignment maximizing total weight (square matrix).

    Shortest augmenting path with potentials, O(n^3).
    """
    w = np.asarray(weights, dtype=np.float64)
    n = w.shape[0]
    inf = float("inf")
    u = [0.0] * (n + 1)
    v = [0.0] * (n + 1)
    p = [0] * (n + 1)
    way = [0] * (n + 1)
    cost = (-w).tolist()
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [inf] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            row = cost[i0 - 1]
            delta = inf
            j1 = 0
            for j in range(1, n + 1):
                if not used[j]:
                    cur = row[j - 1] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    perm = np.empty(n, dtype=np.intp)
    for j in range(1, n + 1):
        perm[p[j] - 1] = j - 1
    return perm


def confusion_counts(true, pred, k):
    true = np.asarray(true, dtype=np.intp)
    pred = np.asarray(pred, dtype=np.intp)
    return np.bincount(true * k + pred, minlength=k * k).astype(np.int64).reshape(k, k)
