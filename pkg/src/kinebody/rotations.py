"""Rotation conversions: axis-angle, 6D (two matrix columns) and matrices.

All functions accept batched input; the rotation axes are the trailing
dimensions (``(..., 3)``, ``(..., 6)``, ``(..., 3, 3)``).
"""

import numpy as np

from .errors import DegenerateInputError, InvalidArgumentError

ROT6D_EPS = 1e-8


def skew(v):
    v = np.asarray(v, dtype=np.float64)
    out = np.zeros(v.shape[:-1] + (3, 3))
    out[..., 0, 1] = -v[..., 2]
    out[..., 0, 2] = v[..., 1]
    out[..., 1, 0] = v[..., 2]
    out[..., 1, 2] = -v[..., 0]
    out[..., 2, 0] = -v[..., 1]
    out[..., 2, 1] = v[..., 0]
    return out


def axis_angle_to_matrix(aa):
    """Rodrigues' formula, with a Taylor branch near zero angle."""
    aa = np.asarray(aa, dtype=np.float64)
    if aa.shape[-1] != 3:
        raise InvalidArgumentError(f"axis-angle must have trailing dim 3, got {aa.shape}")
    theta = np.linalg.norm(aa, axis=-1)[..., None, None]
    k = skew(aa)
    small = theta < 1e-8
    safe = np.where(small, 1.0, theta)
    a = np.where(small, 1.0 - theta**2 / 6.0, np.sin(safe) / safe)
    b = np.where(small, 0.5 - theta**2 / 24.0, (1.0 - np.cos(safe)) / safe**2)
    eye = np.broadcast_to(np.eye(3), k.shape)
    return eye + a * k + b * (k @ k)


def matrix_to_axis_angle(R):
    R = np.asarray(R, dtype=np.float64)
    batch = R.shape[:-2]
    R = R.reshape(-1, 3, 3)
    out = np.zeros((R.shape[0], 3))
    trace = np.trace(R, axis1=1, axis2=2)
    cos = np.clip((trace - 1.0) / 2.0, -1.0, 1.0)
    angle = np.arccos(cos)
    vee = np.stack([R[:, 2, 1] - R[:, 1, 2], R[:, 0, 2] - R[:, 2, 0], R[:, 1, 0] - R[:, 0, 1]], axis=-1)
    for i in range(R.shape[0]):
        th = angle[i]
        if th < 1e-6:
            out[i] = 0.5 * vee[i]
        elif np.pi - th < 1e-4:
            # near pi: axis from the symmetric part
            S = 0.5 * (R[i] + np.eye(3))
            j = int(np.argmax(np.diag(S)))
            axis = S[:, j] / np.sqrt(max(S[j, j], 1e-300))
            axis /= np.linalg.norm(axis)
            if np.dot(axis, vee[i]) < 0:
                axis = -axis
            out[i] = th * axis
        else:
            out[i] = th / (2.0 * np.sin(th)) * vee[i]
    return out.reshape(batch + (3,))


def matrix_to_rot6d(R):
    """First two columns, laid out as ``(a1, a2)``."""
    R = np.asarray(R, dtype=np.float64)
    return np.concatenate([R[..., :, 0], R[..., :, 1]], axis=-1)


def rot6d_to_matrix(r, check=True):
    """Gram-Schmidt on the two 3-vectors; third column is their cross product.

    Raises :class:`DegenerateInputError` when ``a1`` is near zero or ``a2`` is
    (near) parallel to ``a1``.
    """
    R, _ = _rot6d_forward(np.asarray(r, dtype=np.float64), check)
    return R


def _rot6d_forward(r, check=True):
    if r.shape[-1] != 6:
        raise InvalidArgumentError(f"6D rotation must have trailing dim 6, got {r.shape}")
    a1 = r[..., :3]
    a2 = r[..., 3:]
    n1 = np.linalg.norm(a1, axis=-1, keepdims=True)
    if check and np.any(n1 < ROT6D_EPS):
        raise DegenerateInputError("6D rotation with near-zero first vector")
    b1 = a1 / n1
    u2 = a2 - np.sum(b1 * a2, axis=-1, keepdims=True) * b1
    n2 = np.linalg.norm(u2, axis=-1, keepdims=True)
    if check and np.any(n2 < ROT6D_EPS * np.maximum(1.0, np.linalg.norm(a2, axis=-1, keepdims=True))):
        raise DegenerateInputError("6D rotation with parallel vectors")
    b2 = u2 / n2
    b3 = np.cross(b1, b2)
    R = np.stack([b1, b2, b3], axis=-1)
    return R, (a2, b1, b2, n1, n2)


def rot6d_backward(r, dR):
    """Vector-Jacobian product of :func:`rot6d_to_matrix`.

    ``dR`` is the gradient of a scalar w.r.t. the output matrices; returns the
    gradient w.r.t. the 6D input, same shape as ``r``.
    """
    r = np.asarray(r, dtype=np.float64)
    _, (a2, b1, b2, n1, n2) = _rot6d_forward(r, check=False)
    g1 = dR[..., :, 0]
    g2 = dR[..., :, 1]
    g3 = dR[..., :, 2]
    db1 = g1 + np.cross(b2, g3)
    db2 = g2 + np.cross(g3, b1)
    # b2 = u2 / |u2|
    du2 = (db2 - np.sum(b2 * db2, axis=-1, keepdims=True) * b2) / n2
    # u2 = a2 - (b1.a2) b1
    b1a2 = np.sum(b1 * a2, axis=-1, keepdims=True)
    b1du2 = np.sum(b1 * du2, axis=-1, keepdims=True)
    da2 = du2 - b1du2 * b1
    db1 = db1 - b1a2 * du2 - b1du2 * a2
    # b1 = a1 / |a1|
    da1 = (db1 - np.sum(b1 * db1, axis=-1, keepdims=True) * b1) / n1
    return np.concatenate([da1, da2], axis=-1)


def random_rotations(rng, n):
    """Uniformly distributed rotations (normalized Gaussian quaternions)."""
    q = rng.standard_normal((n, 4))
    q /= np.linalg.norm(q, axis=1, keepdims=True)
    return quaternion_to_matrix(q)


def quaternion_to_matrix(q):
    q = np.asarray(q, dtype=np.float64)
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    R = np.empty(q.shape[:-1] + (3, 3))
    R[..., 0, 0] = 1 - 2 * (y * y + z * z)
    R[..., 0, 1] = 2 * (x * y - z * w)
    R[..., 0, 2] = 2 * (x * z + y * w)
    R[..., 1, 0] = 2 * (x * y + z * w)
    R[..., 1, 1] = 1 - 2 * (x * x + z * z)
    R[..., 1, 2] = 2 * (y * z - x * w)
    R[..., 2, 0] = 2 * (x * z - y * w)
    R[..., 2, 1] = 2 * (y * z + x * w)
    R[..., 2, 2] = 1 - 2 * (x * x + y * y)
    return R


def rotation_about(axis, angle):
    axis = np.asarray(axis, dtype=np.float64)
    return axis_angle_to_matrix(axis / np.linalg.norm(axis) * angle)


def rotation_deviation(R):
    """Largest deviation from orthonormality and from det = +1."""
    R = np.asarray(R, dtype=np.float64)
    if R.size == 0:
        return 0.0, 0.0
    ortho = float(np.max(np.abs(np.swapaxes(R, -1, -2) @ R - np.eye(3))))
    det = float(np.max(np.abs(np.linalg.det(R) - 1.0)))
    return ortho, det


def is_rotation(R, atol=1e-8):
    ortho, det = rotation_deviation(R)
    return ortho <= atol and det <= atol
