"""Morphable face geometry and reflectance, SH shading, and face-body merging.

Spherical harmonics are the real, orthonormal bands 0-2 without the
Condon-Shortley phase, ordered (Y00, Y1-1, Y10, Y11, Y2-2, Y2-1, Y20, Y21, Y22)::

    Y00  = 0.5 sqrt(1/pi)                 Y2-2 = 0.5 sqrt(15/pi) x y
    Y1-1 = sqrt(3/(4 pi)) y               Y2-1 = 0.5 sqrt(15/pi) y z
    Y10  = sqrt(3/(4 pi)) z               Y20  = 0.25 sqrt(5/pi) (3 z^2 - 1)
    Y11  = sqrt(3/(4 pi)) x               Y21  = 0.5 sqrt(15/pi) x z
                                          Y22  = 0.25 sqrt(15/pi) (x^2 - y^2)
"""

import math
from dataclasses import dataclass

import numpy as np

from .assets import NUM_FACE_ALBEDO, NUM_FACE_EXPR, NUM_FACE_SHAPE
from .errors import DegenerateInputError, DimensionMismatchError, InvalidArgumentError
from .meshutil import zipper_triangulate

SH_C0 = 0.5 * math.sqrt(1.0 / math.pi)
SH_C1 = math.sqrt(3.0 / (4.0 * math.pi))
SH_C2 = 0.5 * math.sqrt(15.0 / math.pi)
SH_C20 = 0.25 * math.sqrt(5.0 / math.pi)
SH_C22 = 0.25 * math.sqrt(15.0 / math.pi)
SH_BANDS = (slice(0, 1), slice(1, 4), slice(4, 9))

# directions on which band-limited functions are fitted to build SH rotations
_FIT_DIRS = None


@dataclass(frozen=True, eq=False)
class FaceParams:
    zeta: np.ndarray
    epsilon: np.ndarray
    gamma: np.ndarray
    mu: np.ndarray

    def __post_init__(self):
        expected = {"zeta": (NUM_FACE_SHAPE,), "epsilon": (NUM_FACE_EXPR,), "gamma": (NUM_FACE_ALBEDO,), "mu": (3, 9)}
        for name, shape in expected.items():
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.shape != shape:
                raise DimensionMismatchError(f"{name}: expected {shape}, got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise InvalidArgumentError(f"{name}: non-finite values")
            object.__setattr__(self, name, arr)

    @classmethod
    def zeros(cls):
        return cls(np.zeros(NUM_FACE_SHAPE), np.zeros(NUM_FACE_EXPR), np.zeros(NUM_FACE_ALBEDO), np.zeros((3, 9)))


@dataclass(frozen=True, eq=False)
class ShadedFace:
    vertices: np.ndarray
    reflectance: np.ndarray
    radiosity: np.ndarray
    normals: np.ndarray


def _check_len(v, n, name):
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (n,):
        raise DimensionMismatchError(f"{name}: expected length {n}, got {v.shape}")
    return v


def face_geometry(asset, zeta, epsilon):
    """``V_F = mean + zeta . E_shape + epsilon . E_expr``."""
    zeta = _check_len(zeta, asset.shape_basis.shape[0], "zeta")
    epsilon = _check_len(epsilon, asset.expression_basis.shape[0], "epsilon")
    return (asset.mean_face + np.tensordot(zeta, asset.shape_basis, axes=(0, 0))
            + np.tensordot(epsilon, asset.expression_basis, axes=(0, 0)))


def face_reflectance(asset, gamma, clamp=True):
    """Blended per-vertex reflectance; clamped to [0, 1] unless ``clamp=False``."""
    gamma = _check_len(gamma, asset.reflectance_basis.shape[0], "gamma")
    R = asset.mean_reflectance + np.tensordot(gamma, asset.reflectance_basis, axes=(0, 0))
    return np.clip(R, 0.0, 1.0) if clamp else R


def vertex_normals(vertices, triangles):
    """Area-weighted vertex normals (sum of unnormalized face normals)."""
    v = np.asarray(vertices, dtype=np.float64)
    t = np.asarray(triangles, dtype=np.int64)
    fn = np.cross(v[t[:, 1]] - v[t[:, 0]], v[t[:, 2]] - v[t[:, 0]])
    acc = np.zeros_like(v)
    for k in range(3):
        np.add.at(acc, t[:, k], fn)
    norm = np.linalg.norm(acc, axis=1)
    bad = np.flatnonzero(norm <= 1e-300)
    if bad.size:
        raise DegenerateInputError(f"zero-length normal at vertices {bad.tolist()}")
    return acc / norm[:, None]


def sh_basis(normals):
    """The 9 real SH basis values for each unit direction, shape (N, 9)."""
    n = np.asarray(normals, dtype=np.float64)
    x, y, z = n[..., 0], n[..., 1], n[..., 2]
    return np.stack([
        np.full_like(x, SH_C0),
        SH_C1 * y, SH_C1 * z, SH_C1 * x,
        SH_C2 * x * y, SH_C2 * y * z, SH_C20 * (3.0 * z * z - 1.0), SH_C2 * x * z, SH_C22 * (x * x - y * y),
    ], axis=-1)


def sh_shade(reflectance, normals, mu):
    """``t_i[c] = r_i[c] * sum_b mu[c, b] H_b(n_i)``."""
    R = np.asarray(reflectance, dtype=np.float64)
    n = np.asarray(normals, dtype=np.float64)
    mu = np.asarray(mu, dtype=np.float64)
    if mu.shape != (3, 9):
        raise DimensionMismatchError(f"mu: expected (3, 9), got {mu.shape}")
    if R.shape != n.shape or R.ndim != 2 or R.shape[1] != 3:
        raise DimensionMismatchError(f"reflectance {R.shape} and normals {n.shape} must both be N x 3")
    dev = np.abs(np.linalg.norm(n, axis=1) - 1.0)
    if dev.size and dev.max() > 1e-6:
        raise InvalidArgumentError(f"normals: vertex {int(dev.argmax())} deviates from unit length by {dev.max():.3g}")
    return R * (sh_basis(n) @ mu.T)


def sh_rotation(R):
    """9x9 block-diagonal ``M`` with ``H(R^T n) = M H(n)`` for every unit ``n``.

    Rotating the normals by ``R`` and the coefficients by ``mu @ M`` leaves
    the shading unchanged.  Each band block is fitted on a fixed direction
    set; the fit is exact because the bands are closed under rotation.
    """
    global _FIT_DIRS
    if _FIT_DIRS is None:
        g = np.random.default_rng(12345).standard_normal((64, 3))
        _FIT_DIRS = g / np.linalg.norm(g, axis=1, keepdims=True)
    R = np.asarray(R, dtype=np.float64)
    H = sh_basis(_FIT_DIRS)
    Hr = sh_basis(_FIT_DIRS @ R)  # rows are R^T n
    M = np.zeros((9, 9))
    for band in SH_BANDS:
        sol, *_ = np.linalg.lstsq(H[:, band], Hr[:, band], rcond=None)
        M[band, band] = sol.T
    return M


def shade_face(asset, params):
    V = face_geometry(asset, params.zeta, params.epsilon)
    refl = face_reflectance(asset, params.gamma)
    nrm = vertex_normals(V, asset.triangles)
    return ShadedFace(vertices=V, reflectance=refl, radiosity=sh_shade(refl, nrm, params.mu), normals=nrm)


# --------------------------------------------------------------------------
# merging


@dataclass(frozen=True, eq=False)
class MergedMesh:
    vertices: np.ndarray
    triangles: np.ndarray
    body_ids: np.ndarray  # source body vertex of each of the first len(body_ids) vertices
    face_offset: int  # merged index of face vertex 0
    face_vertices: np.ndarray  # transformed face vertices (also vertices[face_offset:])
    stitch_triangles: np.ndarray
    correspondence: np.ndarray  # (body loop vertex, face loop vertex) pairs, merged indices


def place_face(face_vertices, spec, body, head_rotation=None, parents=None):
    """Map face-local vertices into the posed body frame.

    The face is scaled and rigidly placed in the rest frame by ``spec``, then
    moved rigidly with the neck joint.  ``head_rotation`` (local rotation of
    the neck joint) overrides the pose's own and needs ``parents``.
    """
    fv = np.asarray(face_vertices, dtype=np.float64)
    w = spec.scale * fv @ spec.rotation.T + spec.translation
    j = spec.neck_joint_id
    G = body.per_joint_global_transforms
    if head_rotation is None:
        Rg = G[j, :3, :3]
    else:
        head_rotation = np.asarray(head_rotation, dtype=np.float64)
        if head_rotation.shape != (3, 3):
            raise DimensionMismatchError("head_rotation must be 3 x 3")
        if parents is None:
            raise InvalidArgumentError("head_rotation override needs the joint parents")
        p = parents[j]
        Rg = (G[p, :3, :3] if p >= 0 else np.eye(3)) @ head_rotation
    return w @ Rg.T + (G[j, :3, 3] - Rg @ body.rest_joints[j])


def merge_face_body(body, face_vertices, spec, head_rotation=None, *, rig, face):
    """Replace the body's face region with the (transformed) face mesh.

    Body vertices outside ``spec.face_region_ids`` are copied unchanged; the
    two boundary loops are joined by a zipper triangulation.
    """
    fv = place_face(face_vertices, spec, body, head_rotation, rig.parent_index)
    if fv.shape[0] != face.n_vertices:
        raise DimensionMismatchError(f"face vertices: expected {face.n_vertices}, got {fv.shape[0]}")
    n_b = body.vertices.shape[0]
    keep = np.ones(n_b, dtype=bool)
    keep[spec.face_region_ids] = False
    body_ids = np.flatnonzero(keep)
    remap = np.full(n_b, -1, dtype=np.int64)
    remap[body_ids] = np.arange(len(body_ids))
    tris = rig.triangles
    tris = remap[tris[np.all(keep[tris], axis=1)]]
    offset = len(body_ids)
    verts = np.concatenate([body.vertices[body_ids], fv])
    face_tris = face.triangles + offset
    stitch, corr = zipper_triangulate(remap[spec.body_boundary_loop], face.boundary_loop + offset, verts)
    pairs = np.stack([remap[spec.body_boundary_loop], corr], axis=1)
    return MergedMesh(
        vertices=verts, triangles=np.concatenate([tris, face_tris, stitch]), body_ids=body_ids,
        face_offset=offset, face_vertices=fv, stitch_triangles=stitch, correspondence=pairs,
    )
