"""Triangle-mesh helpers shared by the rig generator and face/body merging."""

import numpy as np

from .errors import InvalidArgumentError, StitchError


def loop_arclength(points):
    """Normalized cumulative arc length of a closed polyline, starting at 0.

    Returns ``len(points)`` values in ``[0, 1)``.
    """
    p = np.asarray(points, dtype=np.float64)
    seg = np.linalg.norm(np.roll(p, -1, axis=0) - p, axis=1)
    total = seg.sum()
    if total <= 0.0:
        raise StitchError("closed loop has zero length")
    return np.concatenate([[0.0], np.cumsum(seg[:-1])]) / total


def _align_loop(a_pts, b_pts):
    """Cyclic shift and direction of ``b`` that best matches ``a``."""
    n = len(b_pts)
    best = None
    for reverse in (False, True):
        order = np.arange(n)[::-1] if reverse else np.arange(n)
        pts = b_pts[order]
        start = int(np.argmin(np.linalg.norm(pts - a_pts[0], axis=1)))
        order = np.roll(order, -start)
        sa = loop_arclength(a_pts)
        sb = loop_arclength(b_pts[order])
        # mismatch: distance from each a vertex to b at the same arc-length
        idx = np.minimum(np.searchsorted(sb, sa, side="right") - 1, n - 1)
        cost = float(np.sum(np.linalg.norm(a_pts - b_pts[order][idx], axis=1)))
        if best is None or cost < best[0] - 1e-12:
            best = (cost, order)
    return best[1]


def zipper_triangulate(a_ids, b_ids, positions, check=True):
    """Monotone zipper between two closed vertex loops.

    Both loops are parameterized by normalized arc length; ``b`` is cyclically
    shifted (and reversed if that matches better) so its start lies nearest to
    ``a[0]``.  The zipper then advances whichever loop has the smaller next
    parameter, producing ``len(a) + len(b)`` triangles.

    Returns ``(triangles, correspondence)`` where ``correspondence[i]`` is the
    ``b`` vertex whose arc-length parameter is nearest to that of ``a[i]``.
    """
    a_ids = np.asarray(a_ids, dtype=np.int64)
    b_ids = np.asarray(b_ids, dtype=np.int64)
    if len(a_ids) < 3 or len(b_ids) < 3:
        raise InvalidArgumentError("loops need at least 3 vertices")
    positions = np.asarray(positions, dtype=np.float64)
    a_pts = positions[a_ids]
    order = _align_loop(a_pts, positions[b_ids])
    b_ids = b_ids[order]
    b_pts = positions[b_ids]
    sa = np.append(loop_arclength(a_pts), 1.0)
    sb = np.append(loop_arclength(b_pts), 1.0)
    m, n = len(a_ids), len(b_ids)

    tris = []
    i = j = 0
    while i < m or j < n:
        if j == n or (i < m and sa[i + 1] <= sb[j + 1]):
            tris.append((a_ids[i], a_ids[(i + 1) % m], b_ids[j % n]))
            i += 1
        else:
            tris.append((a_ids[i % m], b_ids[(j + 1) % n], b_ids[j]))
            j += 1
    tris = np.asarray(tris, dtype=np.int64)

    if check:
        area = triangle_areas(positions, tris)
        scale = max(np.ptp(np.vstack([a_pts, b_pts]), axis=0).max(), 1e-300)
        bad = np.flatnonzero(area <= 1e-12 * scale**2)
        if bad.size:
            raise StitchError(
                f"zipper produced {bad.size} degenerate triangle(s) (loop sizes {m} and {n}); first: {tris[bad[0]].tolist()}"
            )

    # nearest arc-length partner, cyclic distance
    diff = np.abs(sa[:-1, None] - sb[None, :-1])
    diff = np.minimum(diff, 1.0 - diff)
    corr = b_ids[np.argmin(diff, axis=1)]
    return tris, corr


def triangle_areas(positions, triangles):
    p = np.asarray(positions, dtype=np.float64)
    t = np.asarray(triangles, dtype=np.int64)
    cr = np.cross(p[t[:, 1]] - p[t[:, 0]], p[t[:, 2]] - p[t[:, 0]])
    return 0.5 * np.linalg.norm(cr, axis=1)


def edge_set(triangles):
    t = np.asarray(triangles, dtype=np.int64)
    e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    e.sort(axis=1)
    return {(int(a), int(b)) for a, b in e}


def loop_is_closed_on(loop, triangles):
    """True if every consecutive pair of ``loop`` (wrapping) is a mesh edge."""
    edges = edge_set(triangles)
    loop = [int(x) for x in loop]
    for a, b in zip(loop, loop[1:] + loop[:1]):
        if (min(a, b), max(a, b)) not in edges:
            return False
    return True
