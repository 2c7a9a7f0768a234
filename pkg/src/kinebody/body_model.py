"""Shape blending, forward kinematics and linear blend skinning.

Local joint rotations are relative to the parent frame; the rest pose has
every joint frame aligned with the world axes, so a joint's rest transform is
a pure translation.  Skinning uses rest-relative transforms
``A_j = G_j @ translate(-rest_j)``.  Pose-dependent corrective blendshapes
are not modeled.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .assets import NUM_BETAS, NUM_BODY_JOINTS, NUM_HAND_JOINTS
from .errors import DimensionMismatchError, InvalidArgumentError, InvariantViolationError
from .kernels import lbs_apply
from .rotations import axis_angle_to_matrix, rotation_deviation


@dataclass(frozen=True, eq=False)
class Pose:
    body_rotations: np.ndarray
    hand_rotations: np.ndarray
    root_translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        b = np.asarray(self.body_rotations, dtype=np.float64)
        h = np.asarray(self.hand_rotations, dtype=np.float64)
        t = np.asarray(self.root_translation, dtype=np.float64)
        if b.shape != (NUM_BODY_JOINTS, 3, 3) or h.shape != (NUM_HAND_JOINTS, 3, 3) or t.shape != (3,):
            raise DimensionMismatchError(
                f"pose: expected body (22,3,3), hands (30,3,3), translation (3,); got {b.shape}, {h.shape}, {t.shape}"
            )
        ortho, det = rotation_deviation(np.concatenate([b, h]))
        if ortho > 1e-8 or det > 1e-8:
            raise InvariantViolationError(f"pose: rotation matrices off by {max(ortho, det):.3g} (tolerance 1e-8)")
        object.__setattr__(self, "body_rotations", b)
        object.__setattr__(self, "hand_rotations", h)
        object.__setattr__(self, "root_translation", t)

    @property
    def rotations(self):
        return np.concatenate([self.body_rotations, self.hand_rotations])

    @classmethod
    def identity(cls):
        return cls.from_matrices(np.broadcast_to(np.eye(3), (NUM_BODY_JOINTS + NUM_HAND_JOINTS, 3, 3)))

    @classmethod
    def from_matrices(cls, rotations, root_translation=None):
        rotations = np.asarray(rotations, dtype=np.float64)
        t = np.zeros(3) if root_translation is None else root_translation
        return cls(rotations[:NUM_BODY_JOINTS].copy(), rotations[NUM_BODY_JOINTS:].copy(), t)

    @classmethod
    def from_axis_angle(cls, axis_angles, root_translation=None):
        aa = np.asarray(axis_angles, dtype=np.float64)
        if aa.shape != (NUM_BODY_JOINTS + NUM_HAND_JOINTS, 3):
            raise DimensionMismatchError(f"axis-angle pose must be (52, 3), got {aa.shape}")
        return cls.from_matrices(axis_angle_to_matrix(aa), root_translation)


@dataclass(frozen=True, eq=False)
class PosedBody:
    vertices: np.ndarray
    joint_positions: np.ndarray
    per_joint_global_transforms: np.ndarray  # J x 4 x 4: global rotation, posed joint position
    rest_joints: np.ndarray

    @property
    def skinning_transforms(self):
        return rest_relative(self.per_joint_global_transforms, self.rest_joints)


@dataclass(frozen=True, eq=False)
class KeypointSet:
    coords: np.ndarray  # J x 3, root-relative
    basic_ids: np.ndarray
    extended_ids: np.ndarray

    @property
    def basic(self):
        return self.coords[self.basic_ids]

    @property
    def extended(self):
        return self.coords[self.extended_ids]


def _check_beta(beta):
    beta = np.asarray(beta, dtype=np.float64)
    if beta.shape[-1:] != (NUM_BETAS,):
        raise DimensionMismatchError(f"beta: expected length {NUM_BETAS}, got {beta.shape}")
    if not np.all(np.isfinite(beta)):
        raise InvalidArgumentError("beta: non-finite values")
    if np.any(np.abs(beta) > 10):
        warnings.warn("beta: coefficients beyond +-10", RuntimeWarning, stacklevel=3)
    return beta


def shape_blend(rig, beta):
    """``T_B = mean + sum_k beta_k * shape_basis[k]``."""
    beta = _check_beta(beta)
    if rig.shape_basis.shape[0] != beta.shape[-1] or rig.shape_basis.shape[1:] != rig.mean_vertices.shape:
        raise DimensionMismatchError("shape_basis does not match the rig")
    return rig.mean_vertices + np.tensordot(beta, rig.shape_basis, axes=(-1, 0))


def shaped_rest_joints(rig, beta):
    """Rest joints of the shaped template (``joint_regressor @ T_B``); batched over beta."""
    beta = _check_beta(beta)
    return rig.rest_joint_positions + np.tensordot(beta, rig.joint_shape_basis, axes=(-1, 0))


def forward_kinematics(rig, pose, rest_joints=None):
    """Global transforms and posed joint positions.

    Returns ``(G, joints)``: ``G[j]`` is 4x4 with the global rotation of joint
    ``j`` and its posed position; ``joints[j] = G[j][:3, 3]``.
    """
    if rest_joints is None:
        rest_joints = rig.rest_joint_positions
    rest_joints = np.asarray(rest_joints, dtype=np.float64)
    if rest_joints.shape != (rig.n_joints, 3):
        raise DimensionMismatchError(f"rest_joints: expected {(rig.n_joints, 3)}, got {rest_joints.shape}")
    R, P = fk_batch(rig.parent_index, rig.topo_order, pose.rotations[None], rest_joints[None])
    P = P[0] + pose.root_translation
    G = np.zeros((rig.n_joints, 4, 4))
    G[:, :3, :3] = R[0]
    G[:, :3, 3] = P
    G[:, 3, 3] = 1.0
    return G, P


def fk_batch(parents, order, local_rots, rest_joints):
    """Batched FK without translation.

    ``local_rots`` is (B, J, 3, 3), ``rest_joints`` (B, J, 3) or broadcastable.
    Returns global rotations (B, J, 3, 3) and positions (B, J, 3); the root
    stays at its rest position.
    """
    local_rots = np.asarray(local_rots, dtype=np.float64)
    B, J = local_rots.shape[:2]
    rest = np.broadcast_to(rest_joints, (B, J, 3))
    R = np.empty((B, J, 3, 3))
    P = np.empty((B, J, 3))
    for j in order:
        p = parents[j]
        if p < 0:
            R[:, j] = local_rots[:, j]
            P[:, j] = rest[:, j]
        else:
            R[:, j] = R[:, p] @ local_rots[:, j]
            # rest_j + (P_p - rest_p) + (R_p - I) bone: exact at the rest pose
            bone = rest[:, j] - rest[:, p]
            P[:, j] = rest[:, j] + (P[:, p] - rest[:, p]) + np.einsum("bij,bj->bi", R[:, p] - np.eye(3), bone)
    return R, P


def fk_batch_backward(parents, order, local_rots, rest_joints, R, dP, dR=None):
    """Gradients of a scalar through :func:`fk_batch`.

    ``dP`` (B, J, 3) and optional ``dR`` (B, J, 3, 3) are the gradients with
    respect to the outputs.  Returns ``(d_local_rots, d_rest_joints)``.
    """
    B, J = local_rots.shape[:2]
    rest = np.broadcast_to(rest_joints, (B, J, 3))
    dP = np.array(dP, dtype=np.float64)
    dG = np.zeros((B, J, 3, 3)) if dR is None else np.array(dR, dtype=np.float64)
    d_local = np.zeros((B, J, 3, 3))
    d_rest = np.zeros((B, J, 3))
    for j in order[::-1]:
        p = parents[j]
        if p < 0:
            d_local[:, j] = dG[:, j]
            d_rest[:, j] += dP[:, j]
            continue
        off = rest[:, j] - rest[:, p]
        # P_j = P_p + R_p off
        dP[:, p] += dP[:, j]
        dG[:, p] += dP[:, j][:, :, None] * off[:, None, :]
        d_off = np.einsum("bij,bi->bj", R[:, p], dP[:, j])
        d_rest[:, j] += d_off
        d_rest[:, p] -= d_off
        # R_j = R_p L_j
        dG[:, p] += dG[:, j] @ np.swapaxes(local_rots[:, j], 1, 2)
        d_local[:, j] = np.swapaxes(R[:, p], 1, 2) @ dG[:, j]
    return d_local, d_rest


def rest_relative(G, rest_joints):
    A = np.array(G, dtype=np.float64)
    A[:, :3, 3] -= np.einsum("jab,jb->ja", A[:, :3, :3], rest_joints)
    return A


def lbs(shaped, rig, transforms, rest_joints=None):
    """Skin ``shaped`` vertices with global joint transforms ``G``.

    ``transforms`` are the global transforms from :func:`forward_kinematics`;
    they are made rest-relative against ``rest_joints`` before blending.
    """
    shaped = np.asarray(shaped, dtype=np.float64)
    if shaped.shape != rig.mean_vertices.shape:
        raise DimensionMismatchError(f"shaped vertices: expected {rig.mean_vertices.shape}, got {shaped.shape}")
    transforms = np.asarray(transforms, dtype=np.float64)
    if transforms.shape != (rig.n_joints, 4, 4):
        raise DimensionMismatchError(f"transforms: expected {(rig.n_joints, 4, 4)}, got {transforms.shape}")
    if rest_joints is None:
        rest_joints = rig.joint_regressor @ shaped
    return lbs_apply(shaped, rig.skinning_weights, rest_relative(transforms, rest_joints))


def pose_body(rig, beta, pose):
    shaped = shape_blend(rig, beta)
    rest = rig.joint_regressor @ shaped
    G, joints = forward_kinematics(rig, pose, rest)
    verts = lbs(shaped, rig, G, rest)
    return PosedBody(vertices=verts, joint_positions=joints, per_joint_global_transforms=G, rest_joints=rest)


def regress_keypoints(posed, rig):
    """Root-relative joint positions, tagged with the basic/extended split."""
    coords = posed.joint_positions - posed.joint_positions[rig.root]
    return KeypointSet(coords=coords, basic_ids=rig.basic_keypoint_ids.copy(), extended_ids=rig.extended_keypoint_ids.copy())
