"""Fenwick (binary indexed) trees over float weights, compiled with numba.

Trees are 1-based arrays of length n + 1; the public helpers take 0-based
item indices.
"""
import numba as nb


@nb.njit(cache=True, nogil=True)
def fw_build(tree, values):
    n = values.shape[0]
    for i in range(n + 1):
        tree[i] = 0.0
    for i in range(1, n + 1):
        tree[i] += values[i - 1]
        j = i + (i & -i)
        if j <= n:
            tree[j] += tree[i]


@nb.njit(cache=True, nogil=True)
def fw_add(tree, i, delta):
    n = tree.shape[0] - 1
    j = i + 1
    while j <= n:
        tree[j] += delta
        j += j & -j


@nb.njit(cache=True, nogil=True)
def fw_prefix(tree, i):
    """Sum of items 0..i-1."""
    s = 0.0
    j = i
    while j > 0:
        s += tree[j]
        j -= j & -j
    return s


@nb.njit(cache=True, nogil=True)
def fw_top(n):
    top = 1
    while top * 2 <= n:
        top *= 2
    return top


@nb.njit(cache=True, nogil=True)
def fw_find(tree, u, top):
    """Smallest 0-based index whose inclusive prefix sum exceeds u.

    Returns n when u is not below the stored total (possible under rounding
    drift); callers reject and redraw.
    """
    n = tree.shape[0] - 1
    pos = 0
    step = top
    while step > 0:
        nxt = pos + step
        if nxt <= n and tree[nxt] <= u:
            u -= tree[nxt]
            pos = nxt
        step >>= 1
    return pos
