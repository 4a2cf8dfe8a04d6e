"""Jitted implementations of the hot kernels.

Twin of ``_numpy_impl``; see that module for the per-function contracts.
Kernels are compiled lazily on first call and cached on disk, so the first
call in a fresh environment pays a one-time compilation cost.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def point_candidates(db_xy, db_th, db_desc, q_xy, q_th, q_desc, r0, th0, k0):
    nd = db_xy.shape[0]
    nq = q_xy.shape[0]
    cap = nd * nq
    ii = np.empty(cap, np.int64)
    jj = np.empty(cap, np.int64)
    kd = np.empty(cap)
    w = 0
    for i in range(nd):
        for j in range(nq):
            dx = db_xy[i, 0] - q_xy[j, 0]
            dy = db_xy[i, 1] - q_xy[j, 1]
            sd = np.sqrt(dx * dx + dy * dy)
            if sd > r0:
                continue
            d = abs(db_th[i] - q_th[j])
            if 360.0 - d < d:
                d = 360.0 - d
            if d > th0:
                continue
            s = 0.0
            for c in range(db_desc.shape[1]):
                df = db_desc[i, c] - q_desc[j, c]
                s += df * df
            k = np.sqrt(s)
            if k > k0:
                continue
            ii[w] = i
            jj[w] = j
            kd[w] = k
            w += 1
    return ii[:w].copy(), jj[:w].copy(), kd[:w].copy()


@njit(cache=True)
def triangle_candidates(fa, fb, d_alpha, d_len, d_theta, d_ratio):
    na = fa.shape[0]
    nb = fb.shape[0]
    cap = na * nb
    ii = np.empty(cap, np.int64)
    jj = np.empty(cap, np.int64)
    cost = np.empty(cap)
    w = 0
    for i in range(na):
        for j in range(nb):
            dmin = abs(fa[i, 0] - fb[j, 0])
            if dmin > d_alpha:
                continue
            dmed = abs(fa[i, 1] - fb[j, 1])
            if dmed > d_alpha:
                continue
            dl = abs(fa[i, 2] - fb[j, 2])
            if dl > d_len:
                continue
            c1 = abs(fa[i, 3] - fb[j, 3])
            if 360.0 - c1 < c1:
                c1 = 360.0 - c1
            if c1 > d_theta:
                continue
            c2 = abs(fa[i, 4] - fb[j, 4])
            if 360.0 - c2 < c2:
                c2 = 360.0 - c2
            if c2 > d_theta:
                continue
            c3 = abs(fa[i, 5] - fb[j, 5])
            if 360.0 - c3 < c3:
                c3 = 360.0 - c3
            if c3 > d_theta:
                continue
            dr12 = abs(fa[i, 6] - fb[j, 6])
            if dr12 > d_ratio:
                continue
            dr23 = abs(fa[i, 7] - fb[j, 7])
            if dr23 > d_ratio:
                continue
            ii[w] = i
            jj[w] = j
            cost[w] = (
                dmin / d_alpha + dmed / d_alpha + dl / d_len
                + (c1 + c2 + c3) / d_theta
                + dr12 / d_ratio + dr23 / d_ratio
            )
            w += 1
    return ii[:w].copy(), jj[:w].copy(), cost[:w].copy()


@njit(cache=True)
def gabor_responses(img, cxs, cys, kernels):
    h = img.shape[0]
    wd = img.shape[1]
    n = cxs.shape[0]
    nc = kernels.shape[0]
    k = kernels.shape[1]
    r = (k - 1) // 2
    out = np.empty((n, nc))
    for p in range(n):
        for c in range(nc):
            acc = 0.0
            for ky in range(k):
                iy = cys[p] - r + ky
                if iy < 0:
                    iy = 0
                elif iy > h - 1:
                    iy = h - 1
                for kx in range(k):
                    ix = cxs[p] - r + kx
                    if ix < 0:
                        ix = 0
                    elif ix > wd - 1:
                        ix = wd - 1
                    acc += kernels[c, ky, kx] * img[iy, ix]
            out[p, c] = acc
    return out


@njit(cache=True)
def farthest_point_init(pts, k, first):
    n = pts.shape[0]
    dim = pts.shape[1]
    chosen = np.empty(k, np.int64)
    taken = np.zeros(n, np.bool_)
    chosen[0] = first
    taken[first] = True
    mind = np.empty(n)
    for i in range(n):
        s = 0.0
        for j in range(dim):
            df = pts[i, j] - pts[first, j]
            s += df * df
        mind[i] = s
    for c in range(1, k):
        best = -1
        bd = -1.0
        for i in range(n):
            if not taken[i] and mind[i] > bd:
                bd = mind[i]
                best = i
        chosen[c] = best
        taken[best] = True
        for i in range(n):
            s = 0.0
            for j in range(dim):
                df = pts[i, j] - pts[best, j]
                s += df * df
            if s < mind[i]:
                mind[i] = s
    return chosen


@njit(cache=True)
def kmeans_lloyd(pts, init_idx, max_iter):
    n = pts.shape[0]
    dim = pts.shape[1]
    k = init_idx.shape[0]
    centers = np.empty((k, dim))
    for c in range(k):
        for j in range(dim):
            centers[c, j] = pts[init_idx[c], j]
    labels = np.full(n, -1, np.int64)
    new = np.empty(n, np.int64)
    for _ in range(max_iter):
        for i in range(n):
            best = 0
            bd = np.inf
            for c in range(k):
                s = 0.0
                for j in range(dim):
                    df = pts[i, j] - centers[c, j]
                    s += df * df
                if s < bd:
                    bd = s
                    best = c
            new[i] = best
        counts = np.zeros(k, np.int64)
        for i in range(n):
            counts[new[i]] += 1
        stolen = np.zeros(n, np.bool_)
        for c in range(k):
            if counts[c] == 0:
                donor = -1
                dd = -1.0
                for i in range(n):
                    if stolen[i] or counts[new[i]] <= 1:
                        continue
                    s = 0.0
                    for j in range(dim):
                        df = pts[i, j] - centers[new[i], j]
                        s += df * df
                    if s > dd:
                        dd = s
                        donor = i
                counts[new[donor]] -= 1
                new[donor] = c
                counts[c] = 1
                stolen[donor] = True
        same = True
        for i in range(n):
            if new[i] != labels[i]:
                same = False
            labels[i] = new[i]
        centers = np.zeros((k, dim))
        for i in range(n):
            for j in range(dim):
                centers[labels[i], j] += pts[i, j]
        for c in range(k):
            for j in range(dim):
                centers[c, j] /= counts[c]
        if same:
            break
    return labels, centers


@njit(cache=True)
def _circumcircle(ax, ay, bx, by, cx, cy):
    d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
    if d == 0.0:
        return 0.0, 0.0, np.inf
    a2 = ax * ax + ay * ay
    b2 = bx * bx + by * by
    c2 = cx * cx + cy * cy
    ux = (a2 * (by - cy) + b2 * (cy - ay) + c2 * (ay - by)) / d
    uy = (a2 * (cx - bx) + b2 * (ax - cx) + c2 * (bx - ax)) / d
    dx = ax - ux
    dy = ay - uy
    return ux, uy, dx * dx + dy * dy


@njit(cache=True)
def delaunay_core(pts):
    m = pts.shape[0]
    minx = pts[:, 0].min()
    maxx = pts[:, 0].max()
    miny = pts[:, 1].min()
    maxy = pts[:, 1].max()
    ctx = 0.5 * (minx + maxx)
    cty = 0.5 * (miny + maxy)
    span = max(maxx - minx, maxy - miny)
    if span <= 0.0:
        span = 1.0
    big = span * 4096.0
    verts = np.empty((m + 3, 2))
    verts[:m] = pts
    verts[m, 0] = ctx - 2.0 * big
    verts[m, 1] = cty - big
    verts[m + 1, 0] = ctx + 2.0 * big
    verts[m + 1, 1] = cty - big
    verts[m + 2, 0] = ctx
    verts[m + 2, 1] = cty + 2.0 * big

    cap = 6 * m + 64
    tri = np.zeros((cap, 3), np.int64)
    alive = np.zeros(cap, np.bool_)
    ccx = np.zeros(cap)
    ccy = np.zeros(cap)
    cr2 = np.zeros(cap)
    free = np.empty(cap, np.int64)
    nfree = 0
    ntri = 1
    tri[0, 0] = m
    tri[0, 1] = m + 1
    tri[0, 2] = m + 2
    ux, uy, r2 = _circumcircle(
        verts[m, 0], verts[m, 1], verts[m + 1, 0], verts[m + 1, 1],
        verts[m + 2, 0], verts[m + 2, 1],
    )
    ccx[0] = ux
    ccy[0] = uy
    cr2[0] = r2
    alive[0] = True

    bad = np.empty(cap, np.int64)
    edges = np.empty((3 * cap, 2), np.int64)
    for p in range(m):
        px = verts[p, 0]
        py = verts[p, 1]
        nbad = 0
        for t in range(ntri):
            if alive[t]:
                dx = px - ccx[t]
                dy = py - ccy[t]
                if dx * dx + dy * dy - cr2[t] < 0.0:
                    bad[nbad] = t
                    nbad += 1
        if nbad == 0:
            bt = -1
            bv = np.inf
            for t in range(ntri):
                if alive[t]:
                    dx = px - ccx[t]
                    dy = py - ccy[t]
                    v = dx * dx + dy * dy - cr2[t]
                    if v < bv:
                        bv = v
                        bt = t
            bad[0] = bt
            nbad = 1
        ne = 0
        for b in range(nbad):
            t = bad[b]
            for e in range(3):
                u = tri[t, e]
                v = tri[t, (e + 1) % 3]
                if u > v:
                    u, v = v, u
                edges[ne, 0] = u
                edges[ne, 1] = v
                ne += 1
            alive[t] = False
            free[nfree] = t
            nfree += 1
        for e in range(ne):
            u = edges[e, 0]
            v = edges[e, 1]
            dup = False
            for f in range(ne):
                if f != e and edges[f, 0] == u and edges[f, 1] == v:
                    dup = True
                    break
            if dup:
                continue
            if nfree > 0:
                nfree -= 1
                s = free[nfree]
            else:
                s = ntri
                ntri += 1
                if ntri > cap:
                    raise RuntimeError("triangulation slot overflow")
            tri[s, 0] = u
            tri[s, 1] = v
            tri[s, 2] = p
            ux, uy, r2 = _circumcircle(
                verts[u, 0], verts[u, 1], verts[v, 0], verts[v, 1], px, py,
            )
            ccx[s] = ux
            ccy[s] = uy
            cr2[s] = r2
            alive[s] = True
    cnt = 0
    for t in range(ntri):
        if alive[t] and tri[t, 0] < m and tri[t, 1] < m and tri[t, 2] < m:
            cnt += 1
    out = np.empty((cnt, 3), np.int64)
    w = 0
    for t in range(ntri):
        if alive[t] and tri[t, 0] < m and tri[t, 1] < m and tri[t, 2] < m:
            out[w, 0] = tri[t, 0]
            out[w, 1] = tri[t, 1]
            out[w, 2] = tri[t, 2]
            w += 1
    return out
