"""Pure-Python versions of the compiled kernels in ``_kernels.pyx``.

Same signatures and results; used when the extension is not built or when
``DTWMEAN_PURE_PYTHON`` is set.
"""

import math

import numpy as np


def dtw_matrix(s, t, lo, hi):
    m, n = len(s), len(t)
    acc = np.full((m, n), np.inf)
    for j in range(n):
        a = max(int(lo[j]), 0)
        b = min(int(hi[j]), m - 1)
        for i in range(a, b + 1):
            diff = s[i] - t[j]
            if i == 0 and j == 0:
                acc[0, 0] = diff * diff
                continue
            best = math.inf
            if i > 0 and j > 0 and acc[i - 1, j - 1] < best:
                best = acc[i - 1, j - 1]
            if i > 0 and acc[i - 1, j] < best:
                best = acc[i - 1, j]
            if j > 0 and acc[i, j - 1] < best:
                best = acc[i, j - 1]
            if best != math.inf:
                acc[i, j] = best + diff * diff
    return acc


def interval_max(values, a, b, level):
    prefix = [0.0]
    for v in values[a:b + 1]:
        prefix.append(prefix[-1] + v)
    n = len(prefix) - 1
    best = -math.inf
    for x in range(n):
        for y in range(x + 1, n + 1):
            score = (prefix[y] - prefix[x]) - level * (y - x)
            if score > best:
                best = score
    return best
