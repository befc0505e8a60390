"""Hot loops: co-association accumulation and average-link agglomeration.

Each kernel has a numba ``@njit`` implementation and a pure-numpy twin that
performs the same floating-point operations in the same order, so both
backends return bit-identical results. The numba path is used when numba
imports and ``ECPCS_NO_NUMBA`` is unset (or ``0``/``false``).
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

_DISABLED = os.environ.get("ECPCS_NO_NUMBA", "").strip().lower() not in ("", "0", "false", "no")
HAVE_NUMBA = numba is not None
BACKEND = "numba" if HAVE_NUMBA and not _DISABLED else "numpy"


# --------------------------------------------------------------------------
# co-association accumulation


def accumulate_coassociation_numpy(glabels: np.ndarray, Z: np.ndarray) -> np.ndarray:
    M, n = glabels.shape
    Zs = np.array(Z, dtype=np.float64)
    np.fill_diagonal(Zs, 1.0)
    out = np.zeros((n, n), dtype=np.float64)
    for m in range(M):
        g = glabels[m]
        out += Zs[g[:, None], g[None, :]]
    out /= M
    np.fill_diagonal(out, 1.0)
    return out


def _accumulate_coassociation_py(glabels, Z):
    M, n = glabels.shape
    out = np.empty((n, n), dtype=np.float64)
    for i in range(n):
        out[i, i] = 1.0
        for j in range(i + 1, n):
            s = 0.0
            for m in range(M):
                u = glabels[m, i]
                v = glabels[m, j]
                if u == v:
                    s += 1.0
                else:
                    s += Z[u, v]
            s /= M
            out[i, j] = s
            out[j, i] = s
    return out


# --------------------------------------------------------------------------
# average-link agglomeration
#
# Slots hold regions; merging a and b keeps the lower slot. The best partner
# of every active slot is cached and only rescanned when that partner
# disappears. Ties go to the lexicographically smallest (low, high) pair of
# region ids.


def _better(s1, lo1, hi1, s2, lo2, hi2):
    if s1 > s2:
        return True
    if s1 < s2:
        return False
    return lo1 < lo2 or (lo1 == lo2 and hi1 < hi2)


def _scan_row_py(S, i, active, rid, n):
    best_j = -1
    best_s = 0.0
    blo = 0
    bhi = 0
    ri = rid[i]
    for j in range(n):
        if j == i or not active[j]:
            continue
        rj = rid[j]
        lo = ri if ri < rj else rj
        hi = rj if ri < rj else ri
        if best_j < 0 or _better(S[i, j], lo, hi, best_s, blo, bhi):
            best_j = j
            best_s = S[i, j]
            blo = lo
            bhi = hi
    return best_j, best_s


def _agglomerate_py(S):
    n = S.shape[0]
    active = np.ones(n, dtype=np.bool_)
    size = np.ones(n, dtype=np.float64)
    rid = np.arange(n, dtype=np.int64)
    best_j = np.empty(n, dtype=np.int64)
    best_s = np.empty(n, dtype=np.float64)
    left = np.empty(n - 1, dtype=np.int64)
    right = np.empty(n - 1, dtype=np.int64)
    sims = np.empty(n - 1, dtype=np.float64)
    for i in range(n):
        best_j[i], best_s[i] = _scan_row_py(S, i, active, rid, n)

    for q in range(n - 1):
        top = -1
        tlo = 0
        thi = 0
        for i in range(n):
            if not active[i] or best_j[i] < 0:
                continue
            ri = rid[i]
            rj = rid[best_j[i]]
            lo = ri if ri < rj else rj
            hi = rj if ri < rj else ri
            if top < 0 or _better(best_s[i], lo, hi, best_s[top], tlo, thi):
                top = i
                tlo = lo
                thi = hi
        a = top
        b = best_j[top]
        if b < a:
            a, b = b, a
        left[q] = tlo
        right[q] = thi
        sims[q] = best_s[top]

        na = size[a]
        nb = size[b]
        for k in range(n):
            if active[k] and k != a and k != b:
                v = (na * S[a, k] + nb * S[b, k]) / (na + nb)
                S[a, k] = v
                S[k, a] = v
        size[a] = na + nb
        active[b] = False
        rid[a] = n + q

        best_j[a], best_s[a] = _scan_row_py(S, a, active, rid, n)
        ra = rid[a]
        for k in range(n):
            if not active[k] or k == a:
                continue
            bk = best_j[k]
            if bk == a or bk == b:
                best_j[k], best_s[k] = _scan_row_py(S, k, active, rid, n)
            else:
                rk = rid[k]
                rb = rid[bk]
                clo = rk if rk < rb else rb
                chi = rb if rk < rb else rk
                lo = rk if rk < ra else ra
                hi = ra if rk < ra else rk
                if _better(S[k, a], lo, hi, best_s[k], clo, chi):
                    best_j[k] = a
                    best_s[k] = S[k, a]
    return left, right, sims


def _scan_row_np(S, i, act, rid):
    idx = act[act != i]
    if idx.size == 0:
        return -1, 0.0
    vals = S[i, idx]
    top = vals.max()
    cand = idx[vals == top]
    if cand.size > 1:
        lo = np.minimum(rid[i], rid[cand])
        hi = np.maximum(rid[i], rid[cand])
        cand = cand[np.lexsort((hi, lo))]
    return int(cand[0]), float(top)


def agglomerate_numpy(S: np.ndarray):
    n = S.shape[0]
    active = np.ones(n, dtype=bool)
    size = np.ones(n, dtype=np.float64)
    rid = np.arange(n, dtype=np.int64)
    best_j = np.empty(n, dtype=np.int64)
    best_s = np.empty(n, dtype=np.float64)
    left = np.empty(n - 1, dtype=np.int64)
    right = np.empty(n - 1, dtype=np.int64)
    sims = np.empty(n - 1, dtype=np.float64)
    act = np.arange(n)
    for i in range(n):
        best_j[i], best_s[i] = _scan_row_np(S, i, act, rid)

    for q in range(n - 1):
        live = act[best_j[act] >= 0]
        vals = best_s[live]
        cand = live[vals == vals.max()]
        lo = np.minimum(rid[cand], rid[best_j[cand]])
        hi = np.maximum(rid[cand], rid[best_j[cand]])
        pick = np.lexsort((hi, lo))[0]
        top = cand[pick]
        a, b = sorted((int(top), int(best_j[top])))
        left[q] = lo[pick]
        right[q] = hi[pick]
        sims[q] = best_s[top]

        others = act[(act != a) & (act != b)]
        na, nb = size[a], size[b]
        v = (na * S[a, others] + nb * S[b, others]) / (na + nb)
        S[a, others] = v
        S[others, a] = v
        size[a] = na + nb
        active[b] = False
        rid[a] = n + q
        act = np.flatnonzero(active)

        best_j[a], best_s[a] = _scan_row_np(S, a, act, rid)
        stale = (best_j[others] == a) | (best_j[others] == b)
        for k in others[stale]:
            best_j[k], best_s[k] = _scan_row_np(S, k, act, rid)
        rest = others[~stale]
        if rest.size:
            new = S[rest, a]
            cur = best_s[rest]
            rk, rb, ra = rid[rest], rid[best_j[rest]], rid[a]
            clo, chi = np.minimum(rk, rb), np.maximum(rk, rb)
            nlo, nhi = np.minimum(rk, ra), np.maximum(rk, ra)
            wins = (new > cur) | (
                (new == cur) & ((nlo < clo) | ((nlo == clo) & (nhi < chi)))
            )
            best_j[rest[wins]] = a
            best_s[rest[wins]] = new[wins]
    return left, right, sims


if HAVE_NUMBA:
    _jit = numba.njit(cache=True, nogil=True)
    _better = _jit(_better)
    _scan_row_py = _jit(_scan_row_py)
    agglomerate_numba = _jit(_agglomerate_py)
    accumulate_coassociation_numba = _jit(_accumulate_coassociation_py)
else:  # pragma: no cover
    agglomerate_numba = None
    accumulate_coassociation_numba = None


def _resolve(backend: str | None) -> str:
    name = backend or BACKEND
    if name not in ("numba", "numpy"):
        raise ValueError(f"backend must be 'numba' or 'numpy', got {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise ValueError("numba backend requested but numba is not installed")
    return name


def accumulate_coassociation(glabels: np.ndarray, Z: np.ndarray, backend: str | None = None):
    """``out[i, j] = mean_m (1 if same cluster in member m else Z[u, v])``."""
    glabels = np.ascontiguousarray(glabels, dtype=np.int64)
    Z = np.ascontiguousarray(Z, dtype=np.float64)
    if _resolve(backend) == "numba":
        return accumulate_coassociation_numba(glabels, Z)
    return accumulate_coassociation_numpy(glabels, Z)


def agglomerate(S: np.ndarray, backend: str | None = None):
    """Average-link merges over similarity ``S`` (copied, never modified).

    Returns ``(left, right, similarity)`` arrays of length N-1; merge ``q``
    creates region id ``N + q``.
    """
    name = _resolve(backend)
    S = np.array(S, dtype=np.float64, order="C", copy=True)
    if name == "numba":
        return agglomerate_numba(S)
    return agglomerate_numpy(S)
