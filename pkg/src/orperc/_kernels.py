"""Compiled inner loops.

Everything here is ``nogil`` so replica batches can be spread over threads.
Vertices are stored in an open-addressing table keyed by their linear index
inside the window's bounding box; coordinates live in a growable array.
"""
import numpy as np
from numba import njit

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_MASK = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_S5 = np.uint64(5)
_S6 = np.uint64(6)
_FOLD_TAG = np.uint64(0x7F4A7C15)
_REPLICA_TAG0 = np.uint64(0x5EED5EED)
_REPLICA_TAG1 = np.uint64(0x0C0FFEE0)
_GOLD = np.uint64(0x9E3779B97F4A7C15)

EMPTY = -1

TERM_EXHAUSTED = 0
TERM_WINDOW = 1
TERM_BUDGET = 2

FPP_FOUND = 0
FPP_UNREACHABLE = 1
FPP_BUDGET = 2
FPP_BORDER = 3


@njit(cache=True, nogil=True)
def philox4x32(c0, c1, c2, c3, k0, k1):
    """Philox4x32-10 block function; words are uint64 holding 32-bit values."""
    for _ in range(10):
        p0 = _M0 * c0
        p1 = _M1 * c2
        hi0 = p0 >> _S32
        lo0 = p0 & _MASK
        hi1 = p1 >> _S32
        lo1 = p1 & _MASK
        c0, c1, c2, c3 = (hi1 ^ c1 ^ k0) & _MASK, lo1, (hi0 ^ c3 ^ k1) & _MASK, lo0
        k0 = (k0 + _W0) & _MASK
        k1 = (k1 + _W1) & _MASK
    return c0, c1, c2, c3


@njit(cache=True, nogil=True)
def _word(v):
    return np.uint64(v & 0xFFFFFFFF)


@njit(cache=True, nogil=True)
def replica_key(k0, k1, r):
    o0, o1, _, _ = philox4x32(_word(r), _word(r >> 32), _REPLICA_TAG0, _REPLICA_TAG1, k0, k1)
    return o0, o1


@njit(cache=True, nogil=True)
def replica_keys(k0, k1, start, count):
    out0 = np.empty(count, dtype=np.uint64)
    out1 = np.empty(count, dtype=np.uint64)
    for i in range(count):
        out0[i], out1[i] = replica_key(k0, k1, start + i)
    return out0, out1


@njit(cache=True, nogil=True)
def edge_uniform(k0, k1, x, k):
    """Uniform in [0, 1) attached to the edge leaving ``x`` along direction ``k``."""
    d = x.shape[0]
    c0 = _word(x[0])
    c1 = _word(x[1]) if d > 1 else np.uint64(0)
    c2 = _word(x[2]) if d > 2 else np.uint64(0)
    i = 3
    while i < d:
        # fold further coordinates into the key, three at a time
        a = _word(x[i])
        b = _word(x[i + 1]) if i + 1 < d else np.uint64(0)
        c = _word(x[i + 2]) if i + 2 < d else np.uint64(0)
        k0, k1, _, _ = philox4x32(a, b, c, _FOLD_TAG, k0, k1)
        i += 3
    o0, o1, _, _ = philox4x32(c0, c1, c2, _word(k), k0, k1)
    return ((o0 >> _S5) * np.uint64(67108864) + (o1 >> _S6)) / 9007199254740992.0


# ---------------------------------------------------------------- vertex table


@njit(cache=True, nogil=True)
def _slot(keys, key):
    mask = keys.shape[0] - 1
    i = np.int64((np.uint64(key) * _GOLD) >> _S32) & mask
    while True:
        k = keys[i]
        if k == key or k == EMPTY:
            return i
        i = (i + 1) & mask


@njit(cache=True, nogil=True)
def _grow_table(keys, vals):
    nk = np.full(keys.shape[0] * 2, EMPTY, dtype=np.int64)
    nv = np.empty(keys.shape[0] * 2, dtype=np.int64)
    for i in range(keys.shape[0]):
        if keys[i] != EMPTY:
            s = _slot(nk, keys[i])
            nk[s] = keys[i]
            nv[s] = vals[i]
    return nk, nv


@njit(cache=True, nogil=True)
def make_set(index_list):
    cap = 16
    while cap < 2 * index_list.shape[0] + 2:
        cap *= 2
    keys = np.full(cap, EMPTY, dtype=np.int64)
    for key in index_list:
        keys[_slot(keys, key)] = key
    return keys


@njit(cache=True, nogil=True)
def _in_set(keys, key):
    return keys[_slot(keys, key)] == key


@njit(cache=True, nogil=True)
def _grow_rows(a, n):
    b = np.empty((a.shape[0] * 2, a.shape[1]), dtype=a.dtype)
    b[:n] = a[:n]
    return b


@njit(cache=True, nogil=True)
def _grow_vec(a, n):
    b = np.empty(a.shape[0] * 2, dtype=a.dtype)
    b[:n] = a[:n]
    return b


@njit(cache=True, nogil=True)
def _index(y, radius, strides):
    idx = 0
    for i in range(y.shape[0]):
        idx += (y[i] + radius[i]) * strides[i]
    return idx


@njit(cache=True, nogil=True)
def _inside(y, radius, forms, psi_cap, use_members, members, strides):
    for i in range(y.shape[0]):
        if y[i] > radius[i] or y[i] < -radius[i]:
            return False
    for j in range(forms.shape[0]):
        s = 0
        for i in range(y.shape[0]):
            s += forms[j, i] * y[i]
        if s > psi_cap:
            return False
    if use_members:
        return _in_set(members, _index(y, radius, strides))
    return True


# ------------------------------------------------------------------- explore


@njit(cache=True, nogil=True)
def _explore(k0, k1, probs, dirs, order, x0, radius, strides, forms, psi_cap,
             use_members, members, budget, probes, greedy, goal, goal_level,
             use_goal, lo_open, lo_closed, record):
    m, d = dirs.shape
    cap = 64
    coords = np.empty((cap, d), dtype=np.int64)
    keys = np.full(2 * cap, EMPTY, dtype=np.int64)
    vals = np.empty(2 * cap, dtype=np.int64)
    stack = np.empty(cap, dtype=np.int64)
    y = np.empty(d, dtype=np.int64)

    coords[0] = x0
    s = _slot(keys, _index(x0, radius, strides))
    keys[s] = _index(x0, radius, strides)
    vals[s] = 0
    count = 1
    head = 0
    top = 0
    if greedy:
        stack[0] = 0
        top = 1

    extents = np.zeros(probes.shape[0], dtype=np.int64)
    exits = 0
    loglr = 0.0
    hit_window = False
    term = TERM_EXHAUSTED
    goal_hit = False
    if use_goal and goal_level <= 0:
        goal_hit = True

    while not goal_hit:
        if greedy:
            if top == 0:
                break
            top -= 1
            cur = stack[top]
        else:
            if head == count:
                break
            cur = head
            head += 1
        stop = False
        for jj in range(m):
            k = order[jj]
            for i in range(d):
                y[i] = coords[cur, i] + dirs[k, i]
            inside = _inside(y, radius, forms, psi_cap, use_members, members, strides)
            key = 0
            if inside:
                key = _index(y, radius, strides)
                if keys[_slot(keys, key)] == key:
                    continue
            else:
                exits += 1
            u = edge_uniform(k0, k1, coords[cur], k)
            if u < probs[k]:
                loglr += lo_open[k]
            else:
                loglr += lo_closed[k]
                continue
            if not inside:
                hit_window = True
                continue
            if count == budget:
                term = TERM_BUDGET
                stop = True
                break
            if count == coords.shape[0]:
                coords = _grow_rows(coords, count)
                if greedy:
                    stack = _grow_vec(stack, top)
            if 2 * (count + 1) > keys.shape[0]:
                keys, vals = _grow_table(keys, vals)
            sl = _slot(keys, key)
            keys[sl] = key
            vals[sl] = count
            coords[count] = y
            for q in range(probes.shape[0]):
                acc = 0
                for i in range(d):
                    acc += (y[i] - x0[i]) * probes[q, i]
                if acc > extents[q]:
                    extents[q] = acc
            if greedy:
                stack[top] = count
                top += 1
            count += 1
            if use_goal:
                acc = 0
                for i in range(d):
                    acc += (y[i] - x0[i]) * goal[i]
                if acc >= goal_level:
                    goal_hit = True
                    stop = True
                    break
        if stop:
            break
    if term != TERM_BUDGET and hit_window:
        term = TERM_WINDOW
    if record:
        out = coords[:count].copy()
    else:
        out = np.empty((0, d), dtype=np.int64)
    return count, extents, term, exits, goal_hit, loglr, out


@njit(cache=True, nogil=True)
def explore_batch(k0s, k1s, probs, dirs, order, x0, radius, strides, forms, psi_cap,
                  use_members, members, budget, probes, greedy, goal, goal_level,
                  use_goal, lo_open, lo_closed):
    n = k0s.shape[0]
    counts = np.empty(n, dtype=np.int64)
    extents = np.empty((n, probes.shape[0]), dtype=np.int64)
    terms = np.empty(n, dtype=np.int64)
    exits = np.empty(n, dtype=np.int64)
    goals = np.empty(n, dtype=np.bool_)
    loglrs = np.empty(n, dtype=np.float64)
    for r in range(n):
        c, e, t, x, g, l, _ = _explore(
            k0s[r], k1s[r], probs, dirs, order, x0, radius, strides, forms, psi_cap,
            use_members, members, budget, probes, greedy, goal, goal_level, use_goal,
            lo_open, lo_closed, False)
        counts[r] = c
        extents[r] = e
        terms[r] = t
        exits[r] = x
        goals[r] = g
        loglrs[r] = l
    return counts, extents, terms, exits, goals, loglrs


@njit(cache=True, nogil=True)
def explore_one(k0, k1, probs, dirs, order, x0, radius, strides, forms, psi_cap,
                use_members, members, budget, probes, greedy, goal, goal_level,
                use_goal, lo_open, lo_closed):
    return _explore(k0, k1, probs, dirs, order, x0, radius, strides, forms, psi_cap,
                    use_members, members, budget, probes, greedy, goal, goal_level,
                    use_goal, lo_open, lo_closed, True)


# -------------------------------------------------------- 0-1 bucket Dijkstra


@njit(cache=True, nogil=True)
def _push(buf, n, v):
    if n == buf.shape[0]:
        buf = _grow_vec(buf, n)
    buf[n] = v
    return buf, n + 1


@njit(cache=True, nogil=True)
def _dijkstra01(k0, k1, p, dirs, x0, radius, strides, forms, psi_cap, use_members,
                members, target_mode, target, target_level, hop_mode,
                stop_at_border, budget, record, collect_exits):
    """Settle vertices in order of passage time from ``x0``.

    ``target_mode``: 0 vertex ``target``, 1 half-space ``<x, target> >= target_level``,
    2 settle everything.  In ``hop_mode`` closed edges are absent and open
    edges cost 1; otherwise open edges cost 0 and closed edges cost 1.
    """
    m, d = dirs.shape
    cap = 64
    coords = np.empty((cap, d), dtype=np.int64)
    dist = np.empty(cap, dtype=np.int64)
    done = np.zeros(cap, dtype=np.bool_)
    keys = np.full(2 * cap, EMPTY, dtype=np.int64)
    vals = np.empty(2 * cap, dtype=np.int64)
    cur = np.empty(cap, dtype=np.int64)
    nxt = np.empty(cap, dtype=np.int64)
    exit_times = np.empty(16, dtype=np.int64)
    n_exit = 0
    y = np.empty(d, dtype=np.int64)

    coords[0] = x0
    dist[0] = 0
    key0 = _index(x0, radius, strides)
    s = _slot(keys, key0)
    keys[s] = key0
    vals[s] = 0
    count = 1
    ncur = 1
    cur[0] = 0
    nnxt = 0
    level = 0
    settled = 0
    status = FPP_UNREACHABLE
    found_time = -1

    while True:
        if ncur == 0:
            if nnxt == 0:
                break
            cur, nxt = nxt, cur
            ncur, nnxt = nnxt, 0
            level += 1
            continue
        ncur -= 1
        v = cur[ncur]
        if done[v] or dist[v] != level:
            continue
        done[v] = True
        settled += 1
        hit = False
        if target_mode == 0:
            hit = True
            for i in range(d):
                if coords[v, i] != target[i]:
                    hit = False
                    break
        elif target_mode == 1:
            acc = 0
            for i in range(d):
                acc += coords[v, i] * target[i]
            hit = acc >= target_level
        if hit:
            status = FPP_FOUND
            found_time = level
            break
        if stop_at_border:
            for i in range(d):
                if coords[v, i] == radius[i] or coords[v, i] == -radius[i]:
                    hit = True
            if hit:
                status = FPP_BORDER
                found_time = level
                break
        if settled == budget:
            status = FPP_BUDGET
            break
        for k in range(m):
            for i in range(d):
                y[i] = coords[v, i] + dirs[k, i]
            inside = _inside(y, radius, forms, psi_cap, use_members, members, strides)
            if not inside and not collect_exits:
                continue
            is_open = edge_uniform(k0, k1, coords[v], k) < p
            if hop_mode:
                if not is_open:
                    continue
                w = 1
            else:
                w = 0 if is_open else 1
            if not inside:
                if n_exit == exit_times.shape[0]:
                    exit_times = _grow_vec(exit_times, n_exit)
                exit_times[n_exit] = level + w
                n_exit += 1
                continue
            key = _index(y, radius, strides)
            sl = _slot(keys, key)
            if keys[sl] == key:
                j = vals[sl]
                if done[j] or dist[j] <= level + w:
                    continue
                dist[j] = level + w
            else:
                if count == coords.shape[0]:
                    coords = _grow_rows(coords, count)
                    dist = _grow_vec(dist, count)
                    nd = np.zeros(done.shape[0] * 2, dtype=np.bool_)
                    nd[:count] = done[:count]
                    done = nd
                if 2 * (count + 1) > keys.shape[0]:
                    keys, vals = _grow_table(keys, vals)
                    sl = _slot(keys, key)
                keys[sl] = key
                vals[sl] = count
                coords[count] = y
                dist[count] = level + w
                j = count
                count += 1
            if w == 0:
                cur, ncur = _push(cur, ncur, j)
            else:
                nxt, nnxt = _push(nxt, nnxt, j)
    if record:
        sel = np.empty(settled, dtype=np.int64)
        c = 0
        for j in range(count):
            if done[j]:
                sel[c] = j
                c += 1
        out_coords = coords[sel].copy()
        out_dist = dist[sel].copy()
    else:
        out_coords = np.empty((0, d), dtype=np.int64)
        out_dist = np.empty(0, dtype=np.int64)
    return status, found_time, settled, out_coords, out_dist, exit_times[:n_exit].copy()


@njit(cache=True, nogil=True)
def dijkstra_one(k0, k1, p, dirs, x0, radius, strides, forms, psi_cap, use_members,
                 members, target_mode, target, target_level, hop_mode, stop_at_border,
                 budget, record, collect_exits):
    return _dijkstra01(k0, k1, p, dirs, x0, radius, strides, forms, psi_cap, use_members,
                       members, target_mode, target, target_level, hop_mode,
                       stop_at_border, budget, record, collect_exits)


@njit(cache=True, nogil=True)
def dijkstra_batch(k0s, k1s, p, dirs, x0, radius, strides, forms, psi_cap, use_members,
                   members, target_mode, target, target_level, budget):
    n = k0s.shape[0]
    status = np.empty(n, dtype=np.int64)
    times = np.empty(n, dtype=np.int64)
    settled = np.empty(n, dtype=np.int64)
    for r in range(n):
        st, t, s, _, _, _ = _dijkstra01(
            k0s[r], k1s[r], p, dirs, x0, radius, strides, forms, psi_cap, use_members,
            members, target_mode, target, target_level, False, False, budget, False, False)
        status[r] = st
        times[r] = t
        settled[r] = s
    return status, times, settled


# ------------------------------------------------------ exhaustive enumeration


@njit(cache=True, nogil=True)
def enumerate_times(nv, tails, heads, source, lo, hi, is_target):
    """Tabulate restricted passage times over edge configurations ``lo..hi-1``.

    Bit ``e`` of a configuration is the state of edge ``e`` (1 = open, time 0).
    Returns ``counts[v, t, k]``: number of configurations with ``k`` open edges
    in which the passage time from ``source`` to ``v`` equals ``t``; ``t = m + 1``
    means ``v`` is unreachable inside the edge set.  ``set_counts[t, k]`` does
    the same for the minimum time over the vertices flagged in ``is_target``.
    """
    m = tails.shape[0]
    counts = np.zeros((nv, m + 2, m + 1), dtype=np.int64)
    set_counts = np.zeros((m + 2, m + 1), dtype=np.int64)
    offs = np.zeros(nv + 1, dtype=np.int64)
    for e in range(m):
        offs[tails[e] + 1] += 1
    for v in range(nv):
        offs[v + 1] += offs[v]
    adj = np.empty(m, dtype=np.int64)
    fill = offs[:-1].copy()
    for e in range(m):
        adj[fill[tails[e]]] = e
        fill[tails[e]] += 1
    inf = m + 1
    dist = np.empty(nv, dtype=np.int64)
    done = np.empty(nv, dtype=np.bool_)
    cur = np.empty(m + 2, dtype=np.int64)
    nxt = np.empty(m + 2, dtype=np.int64)
    for mask in range(lo, hi):
        k = 0
        t = mask
        while t:
            t &= t - 1
            k += 1
        dist[:] = inf
        done[:] = False
        dist[source] = 0
        cur[0] = source
        ncur = 1
        nnxt = 0
        level = 0
        while True:
            if ncur == 0:
                if nnxt == 0:
                    break
                for i in range(nnxt):
                    cur[i] = nxt[i]
                ncur = nnxt
                nnxt = 0
                level += 1
                continue
            ncur -= 1
            v = cur[ncur]
            if done[v] or dist[v] != level:
                continue
            done[v] = True
            for a in range(offs[v], offs[v + 1]):
                e = adj[a]
                h = heads[e]
                w = 0 if (mask >> e) & 1 else 1
                if dist[h] > level + w:
                    dist[h] = level + w
                    if w == 0:
                        cur[ncur] = h
                        ncur += 1
                    else:
                        nxt[nnxt] = h
                        nnxt += 1
        best = inf
        for v in range(nv):
            counts[v, dist[v], k] += 1
            if is_target[v] and dist[v] < best:
                best = dist[v]
        set_counts[best, k] += 1
    return counts, set_counts
