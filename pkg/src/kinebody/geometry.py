"""Closed-form global translation, similarity alignment and pose metrics.

Keypoints are meters; MPJPE values are reported in millimeters.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateInputError,
    DegenerateRayError,
    DimensionMismatchError,
    InfeasibleBoneError,
    InvalidArgumentError,
)

MM_PER_M = 1000.0


@dataclass(frozen=True, eq=False)
class Camera:
    K: np.ndarray

    def __post_init__(self):
        K = np.asarray(self.K, dtype=np.float64)
        if K.shape != (3, 3):
            raise DimensionMismatchError(f"intrinsics: expected 3 x 3, got {K.shape}")
        if np.any(np.tril(K, -1) != 0) or K[2, 2] != 1.0:
            raise InvalidArgumentError("intrinsics: must be upper-triangular with K[2,2] = 1")
        if K[0, 0] <= 0 or K[1, 1] <= 0:
            raise InvalidArgumentError("intrinsics: fx and fy must be positive")
        object.__setattr__(self, "K", K)

    @classmethod
    def from_params(cls, fx, fy, cx, cy, skew=0.0):
        return cls(np.array([[fx, skew, cx], [0.0, fy, cy], [0.0, 0.0, 1.0]]))

    def project(self, points):
        p = np.asarray(points, dtype=np.float64) @ self.K.T
        return p[..., :2] / p[..., 2:3]

    def ray(self, uv):
        """``C^-1 (u, v, 1)``: the back-projected point at unit depth."""
        uv = np.asarray(uv, dtype=np.float64)
        h = np.concatenate([uv, np.ones(uv.shape[:-1] + (1,))], axis=-1)
        return np.linalg.solve(self.K, h.T).T if h.ndim > 1 else np.linalg.solve(self.K, h)


@dataclass(frozen=True, eq=False)
class TranslationProblem:
    parent_2d: np.ndarray
    child_2d: np.ndarray
    parent_depth: float  # root-relative
    child_depth: float
    bone_length: float
    camera: Camera
    parent_relative: np.ndarray = None  # root-relative 3D position of the parent, optional

    def __post_init__(self):
        if not self.bone_length > 0:
            raise InvalidArgumentError(f"bone_length must be positive, got {self.bone_length}")
        for name in ("parent_2d", "child_2d"):
            v = np.asarray(getattr(self, name), dtype=np.float64)
            if v.shape != (2,):
                raise DimensionMismatchError(f"{name}: expected 2 values, got {v.shape}")
            object.__setattr__(self, name, v)


@dataclass(frozen=True, eq=False)
class TranslationSolution:
    candidates: tuple  # all real roots z_p, ascending
    admissible: tuple  # roots with both keypoints in front of the camera
    z_parent: float  # selected root
    parent_position: np.ndarray  # camera-space parent keypoint
    translation: np.ndarray  # camera-space root position


def _translation_quadratic(p):
    a = p.camera.ray(p.parent_2d)
    b = p.camera.ray(p.child_2d)
    delta = float(p.child_depth - p.parent_depth)
    d = a - b
    A = float(d @ d)
    B = -2.0 * delta * float(d @ b)
    C = delta * delta * float(b @ b) - p.bone_length**2
    return a, b, delta, A, B, C


def solve_global_translation(p):
    """Depth of the parent keypoint from one bone of known length.

    Solves ``|z a - (z + delta) b|^2 = l^2`` with ``a, b`` the back-projected
    parent and child pixels and ``delta`` their root-relative depth
    difference.  Among roots placing both keypoints in front of the camera
    the larger is selected.
    """
    a, b, delta, A, B, C = _translation_quadratic(p)
    scale = max(float(a @ a), float(b @ b))
    if A <= 1e-24 * scale:
        raise DegenerateRayError(
            "parent and child back-project to the same ray; depth is undetermined" if delta == 0.0
            else "parent and child share a ray; bone length cannot fix the depth")
    disc = B * B - 4.0 * A * C
    if disc < 0.0:
        if disc < -1e-12 * B * B:
            raise InfeasibleBoneError(f"no real depth: bone of length {p.bone_length} cannot span the two rays")
        disc = 0.0
    sq = math.sqrt(disc)
    q = -0.5 * (B + math.copysign(sq, B))
    roots = [q / A] if q == 0.0 else [q / A, C / q]
    roots = sorted({_polish(r, A, B, C) for r in roots})
    admissible = tuple(r for r in roots if r > 0.0 and r + delta > 0.0)
    if not admissible:
        raise InfeasibleBoneError(f"depth roots {roots} place a keypoint behind the camera")
    z = max(admissible)
    parent = z * a
    rel = np.zeros(3) if p.parent_relative is None else np.asarray(p.parent_relative, dtype=np.float64)
    return TranslationSolution(tuple(roots), admissible, z, parent, parent - rel)


def _polish(z, A, B, C, iters=2):
    for _ in range(iters):
        f = (A * z + B) * z + C
        df = 2.0 * A * z + B
        if df == 0.0:
            break
        step = f / df
        if not math.isfinite(step) or abs(step) > 1e-6 * max(1.0, abs(z)):
            break
        z -= step
    return z


# --------------------------------------------------------------------------
# alignment and metrics


def _pair(pred, gt):
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape:
        raise DimensionMismatchError(f"joint count mismatch: pred {pred.shape} vs gt {gt.shape}")
    return pred, gt


def procrustes_align(pred, gt):
    """Similarity transform minimizing ``sum |s R pred_i + t - gt_i|^2``.

    Returns ``(R, t, s, aligned)``; ``R`` is always a proper rotation.
    """
    pred, gt = _pair(pred, gt)
    if pred.ndim != 2 or pred.shape[1] != 3 or pred.shape[0] < 3:
        raise InvalidArgumentError(f"need J >= 3 points of dimension 3, got {pred.shape}")
    mu_p, mu_g = pred.mean(axis=0), gt.mean(axis=0)
    X, Y = pred - mu_p, gt - mu_g
    var_p = float(np.sum(X * X)) / len(X)
    var_g = float(np.sum(Y * Y)) / len(Y)
    if var_p <= 1e-300 or var_g <= 1e-300:
        raise DegenerateInputError("all points coincide; alignment undefined")
    cov = Y.T @ X / len(X)
    U, S, Vt = np.linalg.svd(cov)
    d = np.ones(3)
    if np.linalg.det(U @ Vt) < 0:
        d[2] = -1.0
    R = (U * d) @ Vt
    s = float(np.sum(S * d)) / var_p
    t = mu_g - s * R @ mu_p
    return R, t, s, s * pred @ R.T + t


def per_joint_errors(pred, gt, mode="root", root=0):
    """Per-joint Euclidean error in millimeters after the chosen alignment."""
    pred, gt = _pair(pred, gt)
    if mode == "root":
        a, b = pred - pred[root], gt - gt[root]
    elif mode in ("procrustes", "pa"):
        _, _, _, a = procrustes_align(pred, gt)
        b = gt
    else:
        raise InvalidArgumentError(f"unknown mode {mode!r} (use 'root' or 'procrustes')")
    return np.linalg.norm(a - b, axis=-1) * MM_PER_M


def mpjpe(pred, gt, mode="root", root=0):
    return float(np.mean(per_joint_errors(pred, gt, mode, root)))


def landmark_error(pred_2d, gt_2d):
    pred, gt = _pair(pred_2d, gt_2d)
    return float(np.mean(np.linalg.norm(pred - gt, axis=-1)))


def photometric_error(pred_colors, gt_colors):
    """Mean absolute difference per color channel."""
    pred, gt = _pair(pred_colors, gt_colors)
    return np.mean(np.abs(pred - gt), axis=0)


@dataclass
class MetricReport:
    mpjpe: float
    mpjpe_pa: float
    per_joint: list = field(default_factory=list)
    per_joint_pa: list = field(default_factory=list)
    landmark_error: float = None
    photometric_error: list = None

    def as_dict(self):
        return {
            "mpjpe_mm": self.mpjpe,
            "mpjpe_pa_mm": self.mpjpe_pa,
            "per_joint_mm": list(self.per_joint),
            "per_joint_pa_mm": list(self.per_joint_pa),
            "landmark_error_px": self.landmark_error,
            "photometric_error": None if self.photometric_error is None else list(self.photometric_error),
        }


def metric_report(pred, gt, root=0, pred_2d=None, gt_2d=None, pred_colors=None, gt_colors=None):
    pj = per_joint_errors(pred, gt, "root", root)
    pa = per_joint_errors(pred, gt, "procrustes") if len(pred) >= 3 else pj
    return MetricReport(
        mpjpe=float(pj.mean()),
        mpjpe_pa=float(pa.mean()),
        per_joint=[float(x) for x in pj],
        per_joint_pa=[float(x) for x in pa],
        landmark_error=None if pred_2d is None else landmark_error(pred_2d, gt_2d),
        photometric_error=None if pred_colors is None else [float(x) for x in photometric_error(pred_colors, gt_colors)],
    )
