"""Compiled inner loops (numba). All kernels release the GIL.

Bit convention: 0 is the +1 message, 1 is the -1 message. A variable's
"disagreeing" messages are those different from its received bit.
"""

import numpy as np
from numba import njit


@njit(nogil=True, cache=True)
def syndrome_ok(dec, chk_ptr, chk_edges, edge_var):
    for c in range(len(chk_ptr) - 1):
        par = 0
        for k in range(chk_ptr[c], chk_ptr[c + 1]):
            par ^= dec[edge_var[chk_edges[k]]]
        if par:
            return False
    return True


@njit(nogil=True, cache=True)
def decode_word(var_ptr, edge_chk, edge_var, chk_ptr, chk_edges, thresh, dthresh,
                received, max_iter, early_stop, record, trace, v2c, c2v, dec):
    """Flooding MB decoding of ``received``.

    A variable sends the complement of its received bit on an edge when at
    least ``thresh[j]`` extrinsic check messages disagree with it; its
    decision flips when at least ``dthresh[j]`` of all its check messages do.

    Decisions of iteration l go to ``trace[l]`` when ``record`` is set.
    Returns the number of message-passing iterations performed; ``dec``
    holds the final decisions.
    """
    n = len(var_ptr) - 1
    for j in range(n):
        dec[j] = received[j]
        for e in range(var_ptr[j], var_ptr[j + 1]):
            v2c[e] = received[j]
    if record:
        trace[0, :] = dec
    if early_stop and syndrome_ok(dec, chk_ptr, chk_edges, edge_var):
        return 0
    for it in range(1, max_iter + 1):
        for c in range(len(chk_ptr) - 1):
            tot = 0
            for k in range(chk_ptr[c], chk_ptr[c + 1]):
                tot ^= v2c[chk_edges[k]]
            for k in range(chk_ptr[c], chk_ptr[c + 1]):
                e = chk_edges[k]
                c2v[e] = tot ^ v2c[e]
        for j in range(n):
            r = received[j]
            t = thresh[j]
            cnt = 0
            for e in range(var_ptr[j], var_ptr[j + 1]):
                if c2v[e] != r:
                    cnt += 1
            dec[j] = r ^ 1 if cnt >= dthresh[j] else r
            for e in range(var_ptr[j], var_ptr[j + 1]):
                ext = cnt - 1 if c2v[e] != r else cnt
                v2c[e] = r ^ 1 if ext >= t else r
        if record:
            trace[it, :] = dec
        if early_stop and syndrome_ok(dec, chk_ptr, chk_edges, edge_var):
            return it
    return max_iter


@njit(nogil=True, cache=True)
def colex_unrank(rank, w, binom, out):
    """Write the colex ``rank``-th w-subset into ``out[:w]`` (ascending)."""
    r = rank
    for i in range(w, 0, -1):
        c = i - 1
        while binom[c + 1, i] <= r:
            c += 1
        out[i - 1] = c
        r -= binom[c, i]


@njit(nogil=True, cache=True)
def colex_next(comb, w, n):
    """Advance ``comb`` to its colex successor in place; False when exhausted."""
    for i in range(w):
        limit = comb[i + 1] if i + 1 < w else n
        if comb[i] + 1 < limit:
            comb[i] += 1
            for k in range(i):
                comb[k] = k
            return True
    return False


@njit(nogil=True, cache=True)
def enumerate_range(var_ptr, edge_chk, edge_var, chk_ptr, chk_edges, thresh, dthresh,
                    n, w, rank_start, rank_stop, binom, max_iter, early_stop, fail_ranks):
    """Decode every weight-w pattern with colex rank in [rank_start, rank_stop).

    Failing ranks are written to ``fail_ranks`` (sized by the caller to hold
    the whole range). Returns the failure count.
    """
    ne = len(edge_chk)
    v2c = np.empty(ne, np.uint8)
    c2v = np.empty(ne, np.uint8)
    dec = np.empty(n, np.uint8)
    rec = np.zeros(n, np.uint8)
    trace = np.empty((1, n), np.uint8)
    comb = np.empty(max(w, 1), np.int64)
    nfail = 0
    if rank_start >= rank_stop:
        return 0
    colex_unrank(rank_start, w, binom, comb)
    for rank in range(rank_start, rank_stop):
        for k in range(w):
            rec[comb[k]] = 1
        decode_word(var_ptr, edge_chk, edge_var, chk_ptr, chk_edges, thresh, dthresh,
                    rec, max_iter, early_stop, False, trace, v2c, c2v, dec)
        bad = False
        for j in range(n):
            if dec[j]:
                bad = True
                break
        if bad:
            fail_ranks[nfail] = rank
            nfail += 1
        for k in range(w):
            rec[comb[k]] = 0
        colex_next(comb, w, n)
    return nfail


@njit(nogil=True, cache=True)
def decode_batch(var_ptr, edge_chk, edge_var, chk_ptr, chk_edges, thresh, dthresh,
                 errors, max_iter, early_stop, residual):
    """Decode each row of ``errors`` (error patterns); store output weights."""
    nframes, n = errors.shape
    ne = len(edge_chk)
    v2c = np.empty(ne, np.uint8)
    c2v = np.empty(ne, np.uint8)
    dec = np.empty(n, np.uint8)
    trace = np.empty((1, n), np.uint8)
    for f in range(nframes):
        decode_word(var_ptr, edge_chk, edge_var, chk_ptr, chk_edges, thresh, dthresh,
                    errors[f], max_iter, early_stop, False, trace, v2c, c2v, dec)
        s = 0
        for j in range(n):
            s += dec[j]
        residual[f] = s
