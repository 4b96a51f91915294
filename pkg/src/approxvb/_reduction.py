"""Sparse column reduction over ``Z/p``.

Columns are given in CSC form ``(indptr, indices, data)``.  Columns are
processed in the order given by ``order``; each one is reduced against the
already-processed columns until its pivot (smallest nonzero row) is new or
the column vanishes.  Both the reduced matrix ``R`` and the bookkeeping
matrix ``V`` (with ``R = A V``) are returned, column by column.

Two interchangeable implementations: a numba kernel with a dense
accumulator and a lazy binary heap, and a pure python fallback with dict
columns.
"""

from __future__ import annotations

import numpy as np

from ._accel import USE_NUMBA, njit


@njit
def _heap_push(heap, hn, x):
    if hn == heap.shape[0]:
        new = np.empty(2 * heap.shape[0], dtype=np.int64)
        new[:hn] = heap[:hn]
        heap = new
    i = hn
    heap[i] = x
    while i > 0:
        parent = (i - 1) >> 1
        if heap[parent] <= heap[i]:
            break
        heap[parent], heap[i] = heap[i], heap[parent]
        i = parent
    return heap, hn + 1


@njit
def _heap_pop(heap, hn):
    hn -= 1
    heap[0] = heap[hn]
    i = 0
    while True:
        left = 2 * i + 1
        if left >= hn:
            break
        c = left
        if left + 1 < hn and heap[left + 1] < heap[left]:
            c = left + 1
        if heap[i] <= heap[c]:
            break
        heap[i], heap[c] = heap[c], heap[i]
        i = c
    return hn


@njit
def _append(buf_i, buf_v, n, i, v):
    if n == buf_i.shape[0]:
        ni = np.empty(2 * n, dtype=np.int64)
        nv = np.empty(2 * n, dtype=np.int64)
        ni[:n] = buf_i[:n]
        nv[:n] = buf_v[:n]
        buf_i, buf_v = ni, nv
    buf_i[n] = i
    buf_v[n] = v
    return buf_i, buf_v, n + 1


@njit
def _reduce_nb(indptr, indices, data, n_rows, order, p, inv):
    n_cols = indptr.shape[0] - 1
    acc = np.zeros(n_rows, dtype=np.int64)
    heap = np.empty(1024, dtype=np.int64)
    hn = 0
    vacc = np.zeros(n_cols, dtype=np.int64)
    vlist = np.empty(n_cols, dtype=np.int64)
    vin = np.zeros(n_cols, dtype=np.bool_)
    owner = np.full(n_rows, -1, dtype=np.int64)
    pivot = np.full(n_cols, -1, dtype=np.int64)
    pcoef = np.zeros(n_cols, dtype=np.int64)
    r_start = np.zeros(n_cols, dtype=np.int64)
    r_len = np.zeros(n_cols, dtype=np.int64)
    v_start = np.zeros(n_cols, dtype=np.int64)
    v_len = np.zeros(n_cols, dtype=np.int64)
    rb_i = np.empty(1024, dtype=np.int64)
    rb_v = np.empty(1024, dtype=np.int64)
    rn = 0
    vb_i = np.empty(1024, dtype=np.int64)
    vb_v = np.empty(1024, dtype=np.int64)
    vn_total = 0
    for oi in range(order.shape[0]):
        j = order[oi]
        for e in range(indptr[j], indptr[j + 1]):
            t = indices[e]
            acc[t] = (acc[t] + data[e]) % p
            heap, hn = _heap_push(heap, hn, t)
        vn = 1
        vlist[0] = j
        vin[j] = True
        vacc[j] = 1
        piv = -1
        while True:
            piv = -1
            while hn > 0:
                t = heap[0]
                if acc[t] == 0:
                    hn = _heap_pop(heap, hn)
                else:
                    piv = t
                    break
            if piv == -1:
                break
            o = owner[piv]
            if o == -1:
                break
            f = (p - acc[piv]) * inv[pcoef[o]] % p
            for e in range(r_start[o], r_start[o] + r_len[o]):
                t = rb_i[e]
                acc[t] = (acc[t] + f * rb_v[e]) % p
                heap, hn = _heap_push(heap, hn, t)
            for e in range(v_start[o], v_start[o] + v_len[o]):
                s = vb_i[e]
                vacc[s] = (vacc[s] + f * vb_v[e]) % p
                if not vin[s]:
                    vin[s] = True
                    vlist[vn] = s
                    vn += 1
        # store R column (deduplicated through the accumulator)
        r_start[j] = rn
        for h in range(hn):
            t = heap[h]
            if acc[t] != 0:
                rb_i, rb_v, rn = _append(rb_i, rb_v, rn, t, acc[t])
                acc[t] = 0
        r_len[j] = rn - r_start[j]
        hn = 0
        v_start[j] = vn_total
        for h in range(vn):
            s = vlist[h]
            if vacc[s] != 0:
                vb_i, vb_v, vn_total = _append(vb_i, vb_v, vn_total, s, vacc[s])
            vacc[s] = 0
            vin[s] = False
        v_len[j] = vn_total - v_start[j]
        if piv != -1:
            owner[piv] = j
            pivot[j] = piv
            # pivot coefficient sits in the stored column
            for e in range(r_start[j], r_start[j] + r_len[j]):
                if rb_i[e] == piv:
                    pcoef[j] = rb_v[e]
    return pivot, r_start, r_len, rb_i[:rn], rb_v[:rn], v_start, v_len, vb_i[:vn_total], vb_v[:vn_total]


def _reduce_py(indptr, indices, data, n_rows, order, p, inv):
    n_cols = indptr.shape[0] - 1
    owner: dict[int, int] = {}
    pivot = np.full(n_cols, -1, dtype=np.int64)
    R: dict[int, dict[int, int]] = {}
    V: dict[int, dict[int, int]] = {}
    for j in order.tolist():
        col: dict[int, int] = {}
        for e in range(indptr[j], indptr[j + 1]):
            t = int(indices[e])
            col[t] = (col.get(t, 0) + int(data[e])) % p
        col = {t: v for t, v in col.items() if v}
        vcol = {j: 1}
        while col:
            piv = min(col)
            o = owner.get(piv)
            if o is None:
                break
            f = (p - col[piv]) * int(inv[R[o][piv]]) % p
            for t, v in R[o].items():
                nv = (col.get(t, 0) + f * v) % p
                if nv:
                    col[t] = nv
                else:
                    col.pop(t, None)
            for s, v in V[o].items():
                nv = (vcol.get(s, 0) + f * v) % p
                if nv:
                    vcol[s] = nv
                else:
                    vcol.pop(s, None)
        R[j] = col
        V[j] = vcol
        if col:
            piv = min(col)
            owner[piv] = j
            pivot[j] = piv
    return pivot, R, V


def _pack(cols: dict, n_cols: int):
    start = np.zeros(n_cols, dtype=np.int64)
    length = np.zeros(n_cols, dtype=np.int64)
    idx, val = [], []
    pos = 0
    for j in range(n_cols):
        c = cols.get(j)
        start[j] = pos
        if c:
            keys = sorted(c)
            idx.extend(keys)
            val.extend(c[k] for k in keys)
            length[j] = len(keys)
            pos += len(keys)
    return start, length, np.array(idx, dtype=np.int64), np.array(val, dtype=np.int64)


def inverse_table(p: int) -> np.ndarray:
    inv = np.zeros(p, dtype=np.int64)
    for a in range(1, p):
        inv[a] = pow(a, p - 2, p)
    return inv


class Reduction:
    """Result of reducing a sparse matrix over ``Z/p``.

    ``pivot[j]`` is the pivot row of reduced column ``j`` (``-1`` if it
    vanished or was never processed).  ``r_col(j)`` / ``v_col(j)`` give the
    reduced column and its bookkeeping column as ``(rows, values)`` pairs.
    """

    def __init__(self, pivot, r_start, r_len, r_idx, r_val, v_start, v_len, v_idx, v_val):
        self.pivot = pivot
        self._r = (r_start, r_len, r_idx, r_val)
        self._v = (v_start, v_len, v_idx, v_val)

    @staticmethod
    def _col(store, j):
        start, length, idx, val = store
        s, n = start[j], length[j]
        o = np.argsort(idx[s:s + n], kind="stable")
        return idx[s:s + n][o], val[s:s + n][o]

    def r_col(self, j: int):
        return self._col(self._r, j)

    def v_col(self, j: int):
        return self._col(self._v, j)


def reduce_columns(indptr, indices, data, n_rows: int, order, p: int, use_numba: bool | None = None) -> Reduction:
    """Reduce the columns listed in ``order`` (others are left untouched)."""
    use_numba = USE_NUMBA if use_numba is None else use_numba
    indptr = np.ascontiguousarray(indptr, dtype=np.int64)
    indices = np.ascontiguousarray(indices, dtype=np.int64)
    data = np.ascontiguousarray(np.asarray(data, dtype=np.int64) % p)
    order = np.ascontiguousarray(order, dtype=np.int64)
    inv = inverse_table(p)
    n_cols = indptr.shape[0] - 1
    if use_numba:
        return Reduction(*_reduce_nb(indptr, indices, data, int(n_rows), order, int(p), inv))
    pivot, R, V = _reduce_py(indptr, indices, data, n_rows, order, p, inv)
    return Reduction(pivot, *_pack(R, n_cols), *_pack(V, n_cols))
