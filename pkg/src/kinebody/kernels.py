"""Hot loops, each in a numba and a numpy flavor.

The public names (``lbs_apply``, ``window_search``, ``bilinear_sample``)
dispatch on :data:`kinebody._jit.USE_NUMBA`; both flavors are importable
directly so tests and the benchmark can compare them.
"""

import numpy as np

from . import _jit
from ._jit import njit

# relative slack for window-mass comparisons (feasibility and ties)
MASS_RTOL = 1e-12


# --------------------------------------------------------------------------
# linear blend skinning


def lbs_apply_numpy(vertices, weights, transforms):
    """``v_i' = sum_j w_ij (A_j[:3,:3] v_i + A_j[:3,3])`` for 4x4 ``A_j``.

    Evaluated as ``v_i + sum_j w_ij ((R_j - I) v_i + t_j)``, equal for unit
    weight rows, so identity transforms return the input bit for bit.
    """
    M = transforms[:, :3, :] - np.eye(3, 4)
    blended = np.einsum("nj,jab->nab", weights, M)
    return vertices + np.einsum("nab,nb->na", blended[:, :, :3], vertices) + blended[:, :, 3]


@njit
def lbs_apply_numba(vertices, weights, transforms):
    n = vertices.shape[0]
    J = weights.shape[1]
    out = np.zeros((n, 3))
    for i in range(n):
        x, y, z = vertices[i, 0], vertices[i, 1], vertices[i, 2]
        for j in range(J):
            w = weights[i, j]
            if w == 0.0:
                continue
            for a in range(3):
                out[i, a] += w * ((transforms[j, a, 0] - (a == 0)) * x + (transforms[j, a, 1] - (a == 1)) * y
                                  + (transforms[j, a, 2] - (a == 2)) * z + transforms[j, a, 3])
        out[i, 0] += x
        out[i, 1] += y
        out[i, 2] += z
    return out


def lbs_apply(vertices, weights, transforms):
    vertices = np.ascontiguousarray(vertices, dtype=np.float64)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    transforms = np.ascontiguousarray(transforms, dtype=np.float64)
    if _jit.USE_NUMBA:
        return lbs_apply_numba(vertices, weights, transforms)
    return lbs_apply_numpy(vertices, weights, transforms)


# --------------------------------------------------------------------------
# sliding-window localization


def _window_sizes(rows, cols, step):
    top = max(rows, cols)
    sizes = list(range(1, top + 1, step))
    if sizes[-1] != top:
        sizes.append(top)
    return sizes


def window_search_numpy(heat, t, step):
    """Smallest square window holding ``t`` of the total mass.

    Returns ``(w, u, v, mass)`` with ``(u, v)`` the top-left (column, row).
    Windows larger than the map are clipped to its bounds.
    """
    rows, cols = heat.shape
    total = heat.sum()
    need = t * total * (1.0 - MASS_RTOL)
    sat = np.zeros((rows + 1, cols + 1))
    sat[1:, 1:] = heat.cumsum(axis=0).cumsum(axis=1)
    for w in _window_sizes(rows, cols, step):
        hr, hc = min(w, rows), min(w, cols)
        s = sat[hr:, hc:] - sat[:-hr, hc:] - sat[hr:, :-hc] + sat[:-hr, :-hc]
        best = s.max()
        if best >= need:
            flat = np.flatnonzero(s.ravel() >= best - MASS_RTOL * abs(total))[0]
            v, u = divmod(int(flat), s.shape[1])
            return w, u, v, float(s[v, u])
    raise AssertionError("full-map window always satisfies t <= 1")


@njit
def window_search_numba(heat, t, step):
    rows, cols = heat.shape
    total = 0.0
    sat = np.zeros((rows + 1, cols + 1))
    for r in range(rows):
        acc = 0.0
        for c in range(cols):
            acc += heat[r, c]
            sat[r + 1, c + 1] = sat[r, c + 1] + acc
    total = sat[rows, cols]
    need = t * total * (1.0 - MASS_RTOL)
    top = max(rows, cols)
    w = 1
    while True:
        hr = min(w, rows)
        hc = min(w, cols)
        best = -np.inf
        for v in range(rows - hr + 1):
            for u in range(cols - hc + 1):
                s = sat[v + hr, u + hc] - sat[v, u + hc] - sat[v + hr, u] + sat[v, u]
                if s > best:
                    best = s
        if best >= need:
            tol = best - MASS_RTOL * abs(total)
            for v in range(rows - hr + 1):
                for u in range(cols - hc + 1):
                    s = sat[v + hr, u + hc] - sat[v, u + hc] - sat[v + hr, u] + sat[v, u]
                    if s >= tol:
                        return w, u, v, s
        if w == top:
            break
        w = min(w + step, top)
    return top, 0, 0, total


def window_search(heat, t, step=1):
    heat = np.ascontiguousarray(heat, dtype=np.float64)
    if _jit.USE_NUMBA:
        w, u, v, m = window_search_numba(heat, float(t), int(step))
        return int(w), int(u), int(v), float(m)
    return window_search_numpy(heat, float(t), int(step))


# --------------------------------------------------------------------------
# bilinear sampling


def bilinear_sample_numpy(features, ys, xs):
    """Sample ``features`` (C x H x W) at pixel-center coordinates.

    ``ys`` has length h', ``xs`` length w'; coordinates are continuous pixel
    positions where integer values hit pixel centers.  Out-of-range samples
    clamp to the edge.
    """
    C, H, W = features.shape
    ys = np.clip(ys, 0.0, H - 1)
    xs = np.clip(xs, 0.0, W - 1)
    y0 = np.floor(ys).astype(np.int64)
    x0 = np.floor(xs).astype(np.int64)
    y1 = np.minimum(y0 + 1, H - 1)
    x1 = np.minimum(x0 + 1, W - 1)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]
    f00 = features[:, y0[:, None], x0[None, :]]
    f01 = features[:, y0[:, None], x1[None, :]]
    f10 = features[:, y1[:, None], x0[None, :]]
    f11 = features[:, y1[:, None], x1[None, :]]
    top = f00 * (1.0 - fx) + f01 * fx
    bot = f10 * (1.0 - fx) + f11 * fx
    return top * (1.0 - fy) + bot * fy


@njit
def bilinear_sample_numba(features, ys, xs):
    C, H, W = features.shape
    h = ys.shape[0]
    w = xs.shape[0]
    out = np.empty((C, h, w))
    for i in range(h):
        y = min(max(ys[i], 0.0), H - 1.0)
        y0 = int(np.floor(y))
        y1 = min(y0 + 1, H - 1)
        fy = y - y0
        for k in range(w):
            x = min(max(xs[k], 0.0), W - 1.0)
            x0 = int(np.floor(x))
            x1 = min(x0 + 1, W - 1)
            fx = x - x0
            for c in range(C):
                top = features[c, y0, x0] * (1.0 - fx) + features[c, y0, x1] * fx
                bot = features[c, y1, x0] * (1.0 - fx) + features[c, y1, x1] * fx
                out[c, i, k] = top * (1.0 - fy) + bot * fy
    return out


def bilinear_sample(features, ys, xs):
    features = np.ascontiguousarray(features, dtype=np.float64)
    ys = np.ascontiguousarray(ys, dtype=np.float64)
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    if _jit.USE_NUMBA:
        return bilinear_sample_numba(features, ys, xs)
    return bilinear_sample_numpy(features, ys, xs)
