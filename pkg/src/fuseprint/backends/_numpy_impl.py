"""Pure-numpy implementations of the hot kernels.

Twin of ``_numba_impl``: every function here has the same name, signature and
semantics as its jitted counterpart.  Integer outputs (candidate indices,
cluster labels, triangles) are identical across backends on non-degenerate
data; float outputs can differ in the last ulps because numpy reductions use
pairwise summation while the jitted loops accumulate sequentially.
"""

from __future__ import annotations

import numpy as np


def point_candidates(db_xy, db_th, db_desc, q_xy, q_th, q_desc, r0, th0, k0):
    """All (i, j) pairs passing the three gates sd<=r0, dd<=th0, kd<=k0.

    Returns (ii, jj, kd) in db-major order.  kd is only computed for pairs
    that survive the two cheap gates.
    """
    nd = db_xy.shape[0]
    nq = q_xy.shape[0]
    if nd == 0 or nq == 0:
        return (np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0))
    dx = db_xy[:, 0:1] - q_xy[None, :, 0]
    dy = db_xy[:, 1:2] - q_xy[None, :, 1]
    sd = np.sqrt(dx * dx + dy * dy)
    d = np.abs(db_th[:, None] - q_th[None, :])
    dd = np.minimum(d, 360.0 - d)
    mask = (sd <= r0) & (dd <= th0)
    ii, jj = np.nonzero(mask)
    if ii.size == 0:
        return (ii.astype(np.int64), jj.astype(np.int64), np.empty(0))
    diff = db_desc[ii] - q_desc[jj]
    kd = np.sqrt(np.sum(diff * diff, axis=1))
    keep = kd <= k0
    return (ii[keep].astype(np.int64), jj[keep].astype(np.int64), kd[keep])


def triangle_candidates(fa, fb, d_alpha, d_len, d_theta, d_ratio):
    """Pairs of triangle-feature rows within every attribute threshold.

    Feature rows are [alphaMin, alphaMed, L, th1, th2, th3, r12, r23].
    Returns (ii, jj, cost) in fa-major order, cost being the sum of the
    per-attribute differences each divided by its threshold.
    """
    na = fa.shape[0]
    nb = fb.shape[0]
    if na == 0 or nb == 0:
        return (np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0))
    A = fa[:, None, :]
    B = fb[None, :, :]
    dmin = np.abs(A[..., 0] - B[..., 0])
    dmed = np.abs(A[..., 1] - B[..., 1])
    dl = np.abs(A[..., 2] - B[..., 2])
    c1 = np.abs(A[..., 3] - B[..., 3])
    c1 = np.minimum(c1, 360.0 - c1)
    c2 = np.abs(A[..., 4] - B[..., 4])
    c2 = np.minimum(c2, 360.0 - c2)
    c3 = np.abs(A[..., 5] - B[..., 5])
    c3 = np.minimum(c3, 360.0 - c3)
    dr12 = np.abs(A[..., 6] - B[..., 6])
    dr23 = np.abs(A[..., 7] - B[..., 7])
    mask = (
        (dmin <= d_alpha) & (dmed <= d_alpha) & (dl <= d_len)
        & (c1 <= d_theta) & (c2 <= d_theta) & (c3 <= d_theta)
        & (dr12 <= d_ratio) & (dr23 <= d_ratio)
    )
    ii, jj = np.nonzero(mask)
    cost = (
        dmin[ii, jj] / d_alpha + dmed[ii, jj] / d_alpha + dl[ii, jj] / d_len
        + (c1[ii, jj] + c2[ii, jj] + c3[ii, jj]) / d_theta
        + dr12[ii, jj] / d_ratio + dr23[ii, jj] / d_ratio
    )
    return (ii.astype(np.int64), jj.astype(np.int64), cost)


def gabor_responses(img, cxs, cys, kernels):
    """Responses of every kernel at integer patch centers, edge-replicated.

    img: (H, W) float64; cxs/cys: int64 centers; kernels: (C, K, K) with K odd.
    Returns (len(cxs), C).
    """
    n = cxs.shape[0]
    nc = kernels.shape[0]
    k = kernels.shape[1]
    r = (k - 1) // 2
    out = np.empty((n, nc))
    if n == 0:
        return out
    padded = np.pad(img, r, mode="edge")
    flat = kernels.reshape(nc, k * k)
    for p in range(n):
        patch = padded[cys[p]:cys[p] + k, cxs[p]:cxs[p] + k]
        out[p] = flat @ patch.reshape(k * k)
    return out


def farthest_point_init(pts, k, first):
    """Greedy max-min seeding: start at `first`, then repeatedly take the
    unchosen point farthest from the chosen set (first index on ties)."""
    n = pts.shape[0]
    chosen = np.empty(k, np.int64)
    taken = np.zeros(n, np.bool_)
    chosen[0] = first
    taken[first] = True
    diff = pts - pts[first]
    mind = np.sum(diff * diff, axis=1)
    for c in range(1, k):
        cand = np.where(taken, -1.0, mind)
        best = int(np.argmax(cand))
        chosen[c] = best
        taken[best] = True
        diff = pts - pts[best]
        mind = np.minimum(mind, np.sum(diff * diff, axis=1))
    return chosen


def kmeans_lloyd(pts, init_idx, max_iter):
    """Lloyd iterations from the given seed indices.

    Assignment takes the first nearest center on ties; an emptied cluster
    steals the point farthest from its own center (clusters of size 1 are
    exempt, each point is stolen at most once per iteration).  Stops when
    assignments stabilize or after max_iter rounds; returned centers are
    recomputed from the final labels.
    """
    n = pts.shape[0]
    k = init_idx.shape[0]
    centers = pts[init_idx].astype(np.float64).copy()
    labels = np.full(n, -1, np.int64)
    for _ in range(max_iter):
        d2 = np.sum((pts[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        new = np.argmin(d2, axis=1).astype(np.int64)
        counts = np.bincount(new, minlength=k)
        stolen = np.zeros(n, np.bool_)
        for c in range(k):
            if counts[c] == 0:
                own = np.sum((pts - centers[new]) ** 2, axis=1)
                own = np.where(stolen | (counts[new] <= 1), -1.0, own)
                donor = int(np.argmax(own))
                counts[new[donor]] -= 1
                new[donor] = c
                counts[c] = 1
                stolen[donor] = True
        same = bool(np.all(new == labels))
        labels = new
        centers = np.zeros((k, pts.shape[1]))
        np.add.at(centers, labels, pts)
        centers /= counts[:, None]
        if same:
            break
    return labels, centers


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


def delaunay_core(pts):
    """Incremental insertion triangulation of distinct points.

    Returns the (t, 3) index triples of triangles whose circumcircles are
    empty, unsorted.  Points are inserted in index order inside a huge
    enclosing triangle; each insertion retires every triangle whose
    circumcircle strictly contains the point and re-triangulates the cavity
    boundary fan-wise.
    """
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
    tri[0] = (m, m + 1, m + 2)
    ccx[0], ccy[0], cr2[0] = _circumcircle(
        verts[m, 0], verts[m, 1], verts[m + 1, 0], verts[m + 1, 1],
        verts[m + 2, 0], verts[m + 2, 1],
    )
    alive[0] = True

    for p in range(m):
        px = verts[p, 0]
        py = verts[p, 1]
        dx = px - ccx[:ntri]
        dy = py - ccy[:ntri]
        viol = dx * dx + dy * dy - cr2[:ntri]
        bad = np.nonzero(alive[:ntri] & (viol < 0.0))[0]
        if bad.size == 0:
            # point exactly on every nearby circle: force the nearest one
            viol = np.where(alive[:ntri], viol, np.inf)
            bad = np.array([int(np.argmin(viol))], np.int64)
        edge_count: dict = {}
        for t in bad:
            a, b, c = tri[t]
            for u, v in ((a, b), (b, c), (c, a)):
                e = (u, v) if u < v else (v, u)
                edge_count[e] = edge_count.get(e, 0) + 1
            alive[t] = False
            free[nfree] = t
            nfree += 1
        # boundary edges fixed before any freed slot is reused, otherwise a
        # new triangle written into a freed slot would shadow a later cavity
        # triangle still waiting to contribute its edges
        for e, count in edge_count.items():
            if count != 1:
                continue
            if nfree > 0:
                nfree -= 1
                s = free[nfree]
            else:
                s = ntri
                ntri += 1
                if ntri > cap:
                    raise RuntimeError("triangulation slot overflow")
            tri[s] = (e[0], e[1], p)
            ccx[s], ccy[s], cr2[s] = _circumcircle(
                verts[e[0], 0], verts[e[0], 1],
                verts[e[1], 0], verts[e[1], 1], px, py,
            )
            alive[s] = True
    keep = alive[:ntri] & np.all(tri[:ntri] < m, axis=1)
    return tri[:ntri][keep].copy()
