"""Compiled inner loops.  All kernels take plain index arrays (see ``Graph``)."""
import numpy as np
from numba import njit

_OPTS = dict(cache=True, nogil=True)


class UnrevealedReadError(RuntimeError):
    """An exploration read the clock of an edge it had not revealed."""


@njit(**_OPTS)
def cdpre_sweep(ea, eb, kappa, u, t):
    """Open/closed state at time t: attempts in clock order, ties by edge id."""
    m = ea.shape[0]
    out = np.zeros(m, dtype=np.bool_)
    cand = np.nonzero(u <= t)[0]
    order = cand[np.argsort(u[cand], kind="mergesort")]
    deg = np.zeros(kappa.shape[0], dtype=np.int64)
    for e in order:
        a = ea[e]
        b = eb[e]
        if deg[a] < kappa[a] and deg[b] < kappa[b]:
            out[e] = True
            deg[a] += 1
            deg[b] += 1
    return out


@njit(**_OPTS)
def cdpre_sweep_batch(ea, eb, kappa, u, t):
    n = u.shape[0]
    out = np.zeros(u.shape, dtype=np.bool_)
    for i in range(n):
        out[i] = cdpre_sweep(ea, eb, kappa, u[i], t)
    return out


@njit(**_OPTS)
def block_events(u, blk_a, blk_rest):
    """C_{r,s} for each block: every A clock below every other block clock."""
    nb = blk_a.shape[0]
    occ = np.zeros(nb, dtype=np.bool_)
    amax = np.empty(nb)
    rmin = np.empty(nb)
    for b in range(nb):
        hi = -1.0
        for j in range(blk_a.shape[1]):
            x = u[blk_a[b, j]]
            if x > hi:
                hi = x
        lo = 2.0
        for j in range(blk_rest.shape[1]):
            x = u[blk_rest[b, j]]
            if x < lo:
                lo = x
        amax[b] = hi
        rmin[b] = lo
        occ[b] = hi < lo
    return occ, amax, rmin


@njit(**_OPTS)
def bfs(indptr, nbr, nbr_e, is_open, sources):
    """Graph distance from ``sources`` through open edges (-1 if unreached)."""
    nv = indptr.shape[0] - 1
    dist = np.full(nv, -1, dtype=np.int64)
    queue = np.empty(nv, dtype=np.int64)
    head = 0
    tail = 0
    for s in sources:
        if dist[s] < 0:
            dist[s] = 0
            queue[tail] = s
            tail += 1
    while head < tail:
        v = queue[head]
        head += 1
        for j in range(indptr[v], indptr[v + 1]):
            w = nbr[j]
            if dist[w] < 0 and is_open[nbr_e[j]]:
                dist[w] = dist[v] + 1
                queue[tail] = w
                tail += 1
    return dist


@njit(**_OPTS)
def reaches(indptr, nbr, nbr_e, is_open, src, norms, n, seen, stamp, queue):
    """True iff the open cluster of ``src`` contains a vertex of sup-norm >= n.

    ``seen``/``stamp`` avoid clearing a visited array between calls.
    """
    if norms[src] >= n:
        return True
    seen[src] = stamp
    queue[0] = src
    head = 0
    tail = 1
    while head < tail:
        v = queue[head]
        head += 1
        for j in range(indptr[v], indptr[v + 1]):
            w = nbr[j]
            if seen[w] != stamp and is_open[nbr_e[j]]:
                if norms[w] >= n:
                    return True
                seen[w] = stamp
                queue[tail] = w
                tail += 1
    return False


@njit(**_OPTS)
def decreasing_zone(ea, eb, u, t, source_mask):
    """Vertices reachable from the sources along strictly decreasing clocks below t.

    Edges are swept in decreasing clock order; a vertex's label is the clock
    of the edge it was first entered by, which is the largest possible.
    """
    nv = source_mask.shape[0]
    label = np.full(nv, -1.0)
    for v in range(nv):
        if source_mask[v]:
            label[v] = t
    order = np.argsort(-u, kind="mergesort")
    for e in order:
        x = u[e]
        if x >= t:
            continue
        a = ea[e]
        b = eb[e]
        la = label[a] > x
        lb = label[b] > x
        if la and label[b] < x:
            label[b] = x
        if lb and label[a] < x:
            label[a] = x
    return label >= 0.0


# ---------------------------------------------------------------------------
# exploration algorithm


@njit(**_OPTS)
def _open_guarded(e, u, t, revealed, gblock, c_known, c_val):
    if not revealed[e]:
        raise UnrevealedReadError("unrevealed clock read")
    b = gblock[e]
    if b >= 0:
        if not c_known[b]:
            raise UnrevealedReadError("g edge read before its block was determined")
        return u[e] <= t and not c_val[b]
    return u[e] <= t


@njit(**_OPTS)
def run_tk(
    indptr, nbr, nbr_e, norms, u, t, k, n, origin,
    blk_a, blk_rest, blk_edges, blk_ext, blk_verts, in_scope, gblock,
):
    """Explore from ∂B(k), one eligible block at a time (lexicographic order).

    Returns (bit, revealed mask, Z mask, processed block sequence, reads).
    Every openness query goes through a guard that raises on unrevealed edges.
    """
    nv = indptr.shape[0] - 1
    ne = u.shape[0]
    nb = blk_a.shape[0]
    revealed = np.zeros(ne, dtype=np.bool_)
    in_z = np.zeros(nv, dtype=np.bool_)
    done = np.zeros(nb, dtype=np.bool_)
    c_known = np.zeros(nb, dtype=np.bool_)
    c_val = np.zeros(nb, dtype=np.bool_)
    seq = np.full(nb, -1, dtype=np.int64)
    queue = np.empty(nv, dtype=np.int64)
    reads = 0
    for v in range(nv):
        if norms[v] == k:
            in_z[v] = True
    steps = 0
    while True:
        pick = -1
        for b in range(nb):
            if done[b] or not in_scope[b]:
                continue
            for j in range(blk_verts.shape[1]):
                if in_z[blk_verts[b, j]]:
                    pick = b
                    break
            if pick >= 0:
                break
        if pick < 0:
            break
        # Determine(g): reveal E(Λ) ∪ ∂^eΛ
        for j in range(blk_edges.shape[1]):
            revealed[blk_edges[pick, j]] = True
        for j in range(blk_ext.shape[1]):
            e = blk_ext[pick, j]
            if e >= 0:
                revealed[e] = True
        hi = -1.0
        for j in range(blk_a.shape[1]):
            e = blk_a[pick, j]
            if not revealed[e]:
                raise UnrevealedReadError("unrevealed clock read")
            reads += 1
            if u[e] > hi:
                hi = u[e]
        lo = 2.0
        for j in range(blk_rest.shape[1]):
            e = blk_rest[pick, j]
            if not revealed[e]:
                raise UnrevealedReadError("unrevealed clock read")
            reads += 1
            if u[e] < lo:
                lo = u[e]
        c_known[pick] = True
        c_val[pick] = hi < lo
        done[pick] = True
        seq[steps] = pick
        steps += 1
        # grow Z: everything joined to it through revealed open edges
        head = 0
        tail = 0
        for v in range(nv):
            if in_z[v]:
                queue[tail] = v
                tail += 1
        while head < tail:
            v = queue[head]
            head += 1
            for j in range(indptr[v], indptr[v + 1]):
                w = nbr[j]
                e = nbr_e[j]
                if in_z[w] or not revealed[e]:
                    continue
                reads += 1
                if _open_guarded(e, u, t, revealed, gblock, c_known, c_val):
                    in_z[w] = True
                    queue[tail] = w
                    tail += 1
    # evaluate {origin <-> ∂B(n)} on revealed open edges only
    bit = norms[origin] >= n
    seen = np.zeros(nv, dtype=np.bool_)
    seen[origin] = True
    queue[0] = origin
    head = 0
    tail = 1
    while head < tail and not bit:
        v = queue[head]
        head += 1
        for j in range(indptr[v], indptr[v + 1]):
            w = nbr[j]
            e = nbr_e[j]
            if seen[w] or not revealed[e]:
                continue
            reads += 1
            if _open_guarded(e, u, t, revealed, gblock, c_known, c_val):
                if norms[w] >= n:
                    bit = True
                    break
                seen[w] = True
                queue[tail] = w
                tail += 1
    return bit, revealed, in_z, seq[:steps], reads


@njit(**_OPTS)
def influence_flips(
    indptr, nbr, nbr_e, norms, u, t, n, origin,
    blk_a, blk_rest, blk_g, gblock, eblock, cands, u_new,
):
    """Whether 1{origin <-> ∂B(n)} in the intermediate model changes when the
    clock of each candidate edge alone is replaced by ``u_new``."""
    nv = indptr.shape[0] - 1
    occ, _, _ = block_events(u, blk_a, blk_rest)
    is_open = u <= t
    for b in range(blk_g.shape[0]):
        if occ[b]:
            is_open[blk_g[b]] = False
    seen = np.zeros(nv, dtype=np.int64)
    queue = np.empty(nv, dtype=np.int64)
    stamp = 1
    f0 = reaches(indptr, nbr, nbr_e, is_open, origin, norms, n, seen, stamp, queue)
    flips = np.zeros(cands.shape[0], dtype=np.bool_)
    work = u.copy()
    for i in range(cands.shape[0]):
        e = cands[i]
        old = work[e]
        work[e] = u_new[i]
        b = eblock[e]
        g = -1
        g_new = False
        if b >= 0:
            g = blk_g[b]
            hi = -1.0
            for j in range(blk_a.shape[1]):
                x = work[blk_a[b, j]]
                if x > hi:
                    hi = x
            lo = 2.0
            for j in range(blk_rest.shape[1]):
                x = work[blk_rest[b, j]]
                if x < lo:
                    lo = x
            g_new = work[g] <= t and not (hi < lo)
        if gblock[e] >= 0:
            e_new = g_new
        else:
            e_new = work[e] <= t
        changed = e_new != is_open[e]
        if g >= 0 and g != e and g_new != is_open[g]:
            changed = True
        if changed:
            e_old = is_open[e]
            g_old = is_open[g] if g >= 0 else False
            is_open[e] = e_new
            if g >= 0:
                is_open[g] = g_new
            stamp += 1
            f1 = reaches(indptr, nbr, nbr_e, is_open, origin, norms, n, seen, stamp, queue)
            flips[i] = f1 != f0
            if g >= 0:
                is_open[g] = g_old
            is_open[e] = e_old
        work[e] = old
    return f0, flips
