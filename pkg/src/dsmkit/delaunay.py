"""Incremental Delaunay triangulation (Bowyer-Watson) with robust predicates.

Orientation and in-circle tests run as floating-point computations guarded by
forward error bounds; uncertain signs fall back to exact rational arithmetic,
so cocircular and collinear configurations are decided exactly. The hull is
represented by ghost triangles (third vertex GHOST), which makes insertion
outside the current hull the same cavity operation as an interior insertion.

Determinism: points are inserted in input order and every tie is resolved by
that order, so identical input always yields the identical triangulation.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import DataError

GHOST = -1

_EPS = 2.220446049250313e-16
_ORIENT_BOUND = (3.0 + 16.0 * _EPS) * _EPS
_INCIRCLE_BOUND = (10.0 + 96.0 * _EPS) * _EPS


def _orient_exact(ax, ay, bx, by, cx, cy):
    det = (Fraction(ax) - Fraction(cx)) * (Fraction(by) - Fraction(cy)) - (
        Fraction(ay) - Fraction(cy)
    ) * (Fraction(bx) - Fraction(cx))
    if det > 0:
        return 1
    if det < 0:
        return -1
    return 0


def orient2d(ax, ay, bx, by, cx, cy):
    """Sign of the signed area of triangle (a, b, c): +1 CCW, -1 CW, 0 collinear."""
    detleft = (ax - cx) * (by - cy)
    detright = (ay - cy) * (bx - cx)
    det = detleft - detright
    detsum = abs(detleft) + abs(detright)
    if det > _ORIENT_BOUND * detsum:
        return 1
    if -det > _ORIENT_BOUND * detsum:
        return -1
    return _orient_exact(ax, ay, bx, by, cx, cy)


def _incircle_exact(ax, ay, bx, by, cx, cy, dx, dy):
    adx = Fraction(ax) - Fraction(dx)
    ady = Fraction(ay) - Fraction(dy)
    bdx = Fraction(bx) - Fraction(dx)
    bdy = Fraction(by) - Fraction(dy)
    cdx = Fraction(cx) - Fraction(dx)
    cdy = Fraction(cy) - Fraction(dy)
    det = (
        (adx * adx + ady * ady) * (bdx * cdy - cdx * bdy)
        + (bdx * bdx + bdy * bdy) * (cdx * ady - adx * cdy)
        + (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady)
    )
    if det > 0:
        return 1
    if det < 0:
        return -1
    return 0


def incircle(ax, ay, bx, by, cx, cy, dx, dy):
    """+1 iff d lies strictly inside the circumcircle of CCW triangle (a, b, c)."""
    adx = ax - dx
    ady = ay - dy
    bdx = bx - dx
    bdy = by - dy
    cdx = cx - dx
    cdy = cy - dy

    bdxcdy = bdx * cdy
    cdxbdy = cdx * bdy
    alift = adx * adx + ady * ady

    cdxady = cdx * ady
    adxcdy = adx * cdy
    blift = bdx * bdx + bdy * bdy

    adxbdy = adx * bdy
    bdxady = bdx * ady
    clift = cdx * cdx + cdy * cdy

    det = (
        alift * (bdxcdy - cdxbdy)
        + blift * (cdxady - adxcdy)
        + clift * (adxbdy - bdxady)
    )
    permanent = (
        (abs(bdxcdy) + abs(cdxbdy)) * alift
        + (abs(cdxady) + abs(adxcdy)) * blift
        + (abs(adxbdy) + abs(bdxady)) * clift
    )
    errbound = _INCIRCLE_BOUND * permanent
    if det > errbound:
        return 1
    if -det > errbound:
        return -1
    return _incircle_exact(ax, ay, bx, by, cx, cy, dx, dy)


def _within_open_segment(pa, pb, q):
    # assumes q collinear with a-b; True iff q lies strictly between them
    if pa[0] != pb[0]:
        lo, hi = (pa[0], pb[0]) if pa[0] < pb[0] else (pb[0], pa[0])
        return lo < q[0] < hi
    lo, hi = (pa[1], pb[1]) if pa[1] < pb[1] else (pb[1], pa[1])
    return lo < q[1] < hi


class _Triangulation:
    """Mutable triangle soup with neighbor links, ghosts included."""

    def __init__(self, pts):
        self.pts = pts
        self.tris = []  # vertex index triples; ghosts carry GHOST at slot 2
        self.nbrs = []  # nbrs[t][i] = triangle across edge (tris[t][i], tris[t][(i+1)%3])
        self.alive = []
        self.last_real = 0

    def _new_tri(self, a, b, c):
        self.tris.append((a, b, c))
        self.nbrs.append([None, None, None])
        self.alive.append(True)
        return len(self.tris) - 1

    def _wire(self, tri_ids):
        # link mutual neighbors among the given triangles by directed edges
        edge_of = {}
        for t in tri_ids:
            a, b, c = self.tris[t]
            for i, e in enumerate(((a, b), (b, c), (c, a))):
                edge_of[e] = (t, i)
        for (u, v), (t, i) in edge_of.items():
            other = edge_of.get((v, u))
            if other is not None:
                self.nbrs[t][i] = other[0]

    def seed(self, i0, i1, i2):
        if orient2d(*self.pts[i0], *self.pts[i1], *self.pts[i2]) < 0:
            i1, i2 = i2, i1
        t = self._new_tri(i0, i1, i2)
        g0 = self._new_tri(i1, i0, GHOST)
        g1 = self._new_tri(i2, i1, GHOST)
        g2 = self._new_tri(i0, i2, GHOST)
        self._wire([t, g0, g1, g2])
        self.last_real = t

    def _in_disk(self, t, p):
        a, b, c = self.tris[t]
        pa = self.pts[a]
        pb = self.pts[b]
        if c == GHOST:
            # stored (a, b, GHOST) for hull edge (b, a): outside is left of a->b
            o = orient2d(pa[0], pa[1], pb[0], pb[1], p[0], p[1])
            if o > 0:
                return True
            if o < 0:
                return False
            return _within_open_segment(pa, pb, p)
        pc = self.pts[c]
        return (
            incircle(pa[0], pa[1], pb[0], pb[1], pc[0], pc[1], p[0], p[1]) > 0
        )

    def _locate(self, p):
        t = self.last_real
        limit = 4 * len(self.tris) + 64
        for _ in range(limit):
            tri = self.tris[t]
            if tri[2] == GHOST:
                return t
            moved = False
            for i in range(3):
                u = tri[i]
                v = tri[(i + 1) % 3]
                pu = self.pts[u]
                pv = self.pts[v]
                if orient2d(pu[0], pu[1], pv[0], pv[1], p[0], p[1]) < 0:
                    t = self.nbrs[t][i]
                    moved = True
                    break
            if not moved:
                return t
        # walk did not settle (should not happen on a Delaunay mesh): scan
        for t in range(len(self.tris)):
            if self.alive[t] and self._in_disk(t, p):
                return t
        raise DataError("point location failed")

    def insert(self, pid):
        p = self.pts[pid]
        t0 = self._locate(p)
        if not self._in_disk(t0, p):
            raise DataError(
                f"cannot insert point {pid}: coincides with an existing vertex"
            )

        # grow the cavity: every triangle whose circumdisk holds p
        cavity = [t0]
        in_cavity = {t0}
        stack = [t0]
        while stack:
            t = stack.pop()
            for n in self.nbrs[t]:
                if n not in in_cavity and self._in_disk(n, p):
                    in_cavity.add(n)
                    cavity.append(n)
                    stack.append(n)

        boundary = []  # (u, v, outside triangle)
        for t in cavity:
            tri = self.tris[t]
            for i in range(3):
                n = self.nbrs[t][i]
                if n not in in_cavity:
                    boundary.append((tri[i], tri[(i + 1) % 3], n))

        for t in cavity:
            self.alive[t] = False

        new_ids = []
        outside_of = {}
        for u, v, out in boundary:
            if v == GHOST:
                nt = self._new_tri(pid, u, GHOST)  # keeps directed edge (u, GHOST)
            elif u == GHOST:
                nt = self._new_tri(v, pid, GHOST)  # keeps directed edge (GHOST, v)
            else:
                nt = self._new_tri(u, v, pid)
            new_ids.append(nt)
            outside_of[(u, v)] = out

        # wire spokes among the new fan and stitch the fan to the old mesh
        edge_of = {}
        for t in new_ids:
            a, b, c = self.tris[t]
            for i, e in enumerate(((a, b), (b, c), (c, a))):
                edge_of[e] = (t, i)
        for (u, v), (t, i) in edge_of.items():
            internal = edge_of.get((v, u))
            if internal is not None:
                self.nbrs[t][i] = internal[0]
                continue
            out = outside_of[(u, v)]
            self.nbrs[t][i] = out
            out_tri = self.tris[out]
            for j in range(3):
                if out_tri[j] == v and out_tri[(j + 1) % 3] == u:
                    self.nbrs[out][j] = t
                    break

        for t in new_ids:
            if self.tris[t][2] != GHOST:
                self.last_real = t
                break


def triangulate(points):
    """Delaunay-triangulate unique 2D points.

    points: sequence of (x, y) float pairs, all distinct.
    Returns (triangles, hull_mask): CCW vertex-index triples in creation
    order, and a per-vertex boolean list marking convex hull membership.
    """
    n = len(points)
    if n < 3:
        raise DataError(f"triangulation needs at least 3 points, got {n}")

    seed_third = None
    for k in range(2, n):
        if orient2d(*points[0], *points[1], *points[k]) != 0:
            seed_third = k
            break
    if seed_third is None:
        raise DataError("all points are collinear; cannot triangulate")

    tr = _Triangulation(points)
    tr.seed(0, 1, seed_third)
    for pid in range(2, n):
        if pid == seed_third:
            continue
        tr.insert(pid)

    triangles = []
    hull_mask = [False] * n
    for t, tri in enumerate(tr.tris):
        if not tr.alive[t]:
            continue
        if tri[2] == GHOST:
            hull_mask[tri[0]] = True
            hull_mask[tri[1]] = True
        else:
            triangles.append(tri)
    return triangles, hull_mask
