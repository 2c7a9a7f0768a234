"""Keypoint-, delta- and location-maps, their losses, and hand/face localization.

Maps are channel-major float64 arrays.  For a part with ``J`` joints,
``K`` is ``J x H x W`` and ``D``, ``L`` are ``3J x H x W`` with joint ``i``
owning channels ``3i .. 3i+2``.  Pixel ``(x, y)`` has its center at the
integer coordinate ``(x, y)``; 2D keypoints are ``(u, v) = (x, y)`` pixels.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .assets import read_kba, write_kba
from .errors import (
    DimensionMismatchError,
    InvalidArgumentError,
    NoDetectionError,
    SchemaError,
)
from .kernels import bilinear_sample, window_search

DEFAULT_SIGMA = 2.0
DEFAULT_THRESHOLD = 0.95


@dataclass(frozen=True, eq=False)
class MapStack:
    K: np.ndarray
    D: np.ndarray
    L: np.ndarray

    def __post_init__(self):
        K = np.asarray(self.K, dtype=np.float64)
        D = np.asarray(self.D, dtype=np.float64)
        L = np.asarray(self.L, dtype=np.float64)
        if K.ndim != 3:
            raise DimensionMismatchError(f"K: expected J x H x W, got {K.shape}")
        want = (3 * K.shape[0],) + K.shape[1:]
        for name, arr in (("D", D), ("L", L)):
            if arr.shape != want:
                raise DimensionMismatchError(f"{name}: expected {want}, got {arr.shape}")
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "L", L)

    @property
    def n_joints(self):
        return self.K.shape[0]

    @property
    def map_size(self):
        return self.K.shape[1:]

    def arrays(self):
        return {"K": self.K, "D": self.D, "L": self.L}


@dataclass(frozen=True)
class PoseNetLossWeights:
    w_k: float = 1.0
    w_d: float = 1.0
    w_l: float = 1.0

    def __post_init__(self):
        for name in ("w_k", "w_d", "w_l"):
            if not getattr(self, name) >= 0:
                raise InvalidArgumentError(f"{name} must be nonnegative, got {getattr(self, name)}")

    @classmethod
    def without_3d(cls, w_k=1.0):
        """Weights for samples that carry no 3D labels."""
        return cls(w_k, 0.0, 0.0)


@dataclass(frozen=True)
class DetLossWeights:
    lambda_b: float = 1.0
    lambda_h: float = 1.0
    lambda_f: float = 1.0

    def __post_init__(self):
        for name in ("lambda_b", "lambda_h", "lambda_f"):
            if not getattr(self, name) >= 0:
                raise InvalidArgumentError(f"{name} must be nonnegative, got {getattr(self, name)}")


@dataclass(frozen=True)
class LocalizeConfig:
    threshold: float = DEFAULT_THRESHOLD
    step: int = 1

    def __post_init__(self):
        if not 0.0 < self.threshold <= 1.0:
            raise InvalidArgumentError(f"threshold must lie in (0, 1], got {self.threshold}")
        if int(self.step) != self.step or self.step < 1:
            raise InvalidArgumentError(f"step must be a positive integer, got {self.step}")


@dataclass(frozen=True, eq=False)
class HandBranchInput:
    body_feature_crop: np.ndarray
    supp_features: np.ndarray
    attention_map: np.ndarray

    def tensor(self):
        return np.concatenate([self.body_feature_crop, self.supp_features, self.attention_map], axis=0)


class DecodedKeypoints(NamedTuple):
    uv: np.ndarray  # J x 2, (column, row)
    xyz: np.ndarray  # J x 3
    confidence: np.ndarray  # J

    @property
    def missing(self):
        """Joints whose keypoint-map was all zero."""
        return self.confidence <= 0.0


def gaussian_map(u, v, map_size, sigma=DEFAULT_SIGMA):
    H, W = map_size
    x = np.arange(W, dtype=np.float64)
    y = np.arange(H, dtype=np.float64)
    gx = np.exp(-((x - u) ** 2) / (2.0 * sigma * sigma))
    gy = np.exp(-((y - v) ** 2) / (2.0 * sigma * sigma))
    return gy[:, None] * gx[None, :]


def in_bounds(keypoints_2d, map_size):
    H, W = map_size
    k = np.asarray(keypoints_2d, dtype=np.float64)
    return (k[:, 0] >= 0) & (k[:, 0] <= W - 1) & (k[:, 1] >= 0) & (k[:, 1] <= H - 1)


def build_gt_maps(keypoints_2d, keypoints_3d, bone_dirs, map_size, sigma=DEFAULT_SIGMA):
    """Ground-truth maps: unit-peak Gaussians in ``K``, tiled vectors in ``D`` and ``L``.

    Keypoints outside the pixel-center range ``[0, W-1] x [0, H-1]`` get an
    all-zero ``K`` channel.
    """
    if not sigma > 0:
        raise InvalidArgumentError(f"sigma must be positive, got {sigma}")
    k2 = np.asarray(keypoints_2d, dtype=np.float64)
    k3 = np.asarray(keypoints_3d, dtype=np.float64)
    bd = np.asarray(bone_dirs, dtype=np.float64)
    J = k2.shape[0]
    if k2.shape != (J, 2) or k3.shape != (J, 3) or bd.shape != (J, 3):
        raise DimensionMismatchError(
            f"keypoints_2d {k2.shape}, keypoints_3d {k3.shape}, bone_dirs {bd.shape} must be J x 2, J x 3, J x 3")
    H, W = (int(s) for s in map_size)
    if H < 1 or W < 1:
        raise InvalidArgumentError(f"map_size must be positive, got {map_size}")
    inside = in_bounds(k2, (H, W))
    s2 = 2.0 * sigma * sigma
    gx = np.exp(-((np.arange(W, dtype=np.float64) - k2[:, :1]) ** 2) / s2)
    gy = np.exp(-((np.arange(H, dtype=np.float64) - k2[:, 1:]) ** 2) / s2)
    gy[~inside] = 0.0
    K = gy[:, :, None] * gx[:, None, :]
    # constant tiles stay read-only broadcast views; copy before writing into them
    D = np.broadcast_to(bd.reshape(3 * J, 1, 1), (3 * J, H, W))
    L = np.broadcast_to(k3.reshape(3 * J, 1, 1), (3 * J, H, W))
    return MapStack(K, D, L)


def decode_keypoints(maps):
    """Per joint: argmax of ``K_i`` (first hit in row-major order), ``L`` read there."""
    J, H, W = maps.K.shape
    flat = maps.K.reshape(J, -1)
    idx = flat.argmax(axis=1)
    conf = flat[np.arange(J), idx]
    conf = np.where(conf > 0.0, conf, 0.0)
    idx = np.where(conf > 0.0, idx, 0)
    rows, cols = np.divmod(idx, W)
    Lj = maps.L.reshape(J, 3, H, W)
    xyz = Lj[np.arange(J), :, rows, cols]
    uv = np.stack([cols, rows], axis=1).astype(np.float64)
    return DecodedKeypoints(uv, xyz, conf)


def _check_same(pred, gt, what):
    if pred.K.shape != gt.K.shape:
        raise DimensionMismatchError(f"{what}: prediction {pred.K.shape} vs ground truth {gt.K.shape}")


def posenet_loss(pred, gt, weights=PoseNetLossWeights()):
    """``w_k |K_gt - K|^2 + w_d |K_gt * (D_gt - D)|^2 + w_l |K_gt * (L_gt - L)|^2``.

    Returns ``(total, {"kmap", "dmap", "lmap"})`` with unweighted terms in
    the breakdown.
    """
    _check_same(pred, gt, "posenet_loss")
    J, H, W = gt.K.shape
    mask = np.repeat(gt.K, 3, axis=0)
    kmap = float(np.sum((gt.K - pred.K) ** 2))
    dmap = float(np.sum((mask * (gt.D - pred.D)) ** 2))
    lmap = float(np.sum((mask * (gt.L - pred.L)) ** 2))
    total = weights.w_k * kmap + weights.w_d * dmap + weights.w_l * lmap
    return total, {"kmap": kmap, "dmap": dmap, "lmap": lmap}


def heatmap_from_kmaps(K):
    """One-channel part heat-map: channel-wise max of the keypoint-maps."""
    K = np.asarray(K, dtype=np.float64)
    if K.ndim != 3:
        raise DimensionMismatchError(f"K: expected J x H x W, got {K.shape}")
    return K.max(axis=0, keepdims=True)


def _heat_loss(pair, what):
    pred, gt = (np.asarray(a, dtype=np.float64) for a in pair)
    if pred.shape != gt.shape:
        raise DimensionMismatchError(f"{what}: prediction {pred.shape} vs ground truth {gt.shape}")
    return float(np.sum((gt - pred) ** 2))


def full_detnet_loss(body, left_hand, right_hand, hand_heatmaps, face_heatmap,
                     weights=DetLossWeights(), posenet_weights=None):
    """``lambda_b Lp_b + lambda_h (Lp_lh + Lp_rh + L_h) + lambda_f L_f``.

    ``body``, ``left_hand`` and ``right_hand`` are ``(pred, gt)`` map stacks;
    ``hand_heatmaps`` is ``((pred_l, gt_l), (pred_r, gt_r))`` and
    ``face_heatmap`` is ``(pred, gt)``.  A part whose weight is 0 may be
    passed as ``None``.  ``posenet_weights`` maps ``"body"``, ``"left_hand"``,
    ``"right_hand"`` to :class:`PoseNetLossWeights` (default all ones).
    """
    pw = {"body": PoseNetLossWeights(), "left_hand": PoseNetLossWeights(), "right_hand": PoseNetLossWeights()}
    if posenet_weights is not None:
        pw.update(posenet_weights)
    need = {"body": weights.lambda_b, "left_hand": weights.lambda_h, "right_hand": weights.lambda_h,
            "hand_heatmaps": weights.lambda_h, "face_heatmap": weights.lambda_f}
    given = {"body": body, "left_hand": left_hand, "right_hand": right_hand,
             "hand_heatmaps": hand_heatmaps, "face_heatmap": face_heatmap}
    for name, lam in need.items():
        if given[name] is None and lam != 0:
            raise InvalidArgumentError(f"{name} is missing but its weight is {lam}")

    terms = {}
    for name in ("body", "left_hand", "right_hand"):
        terms[name] = 0.0 if given[name] is None else posenet_loss(*given[name], pw[name])[0]
    if hand_heatmaps is None:
        terms["hand_heatmaps"] = 0.0
    else:
        terms["hand_heatmaps"] = _heat_loss(hand_heatmaps[0], "left hand heat-map") + _heat_loss(
            hand_heatmaps[1], "right hand heat-map")
    terms["face_heatmap"] = 0.0 if face_heatmap is None else _heat_loss(face_heatmap, "face heat-map")

    total = 0.0
    if weights.lambda_b:
        total += weights.lambda_b * terms["body"]
    if weights.lambda_h:
        total += weights.lambda_h * (terms["left_hand"] + terms["right_hand"] + terms["hand_heatmaps"])
    if weights.lambda_f:
        total += weights.lambda_f * terms["face_heatmap"]
    return total, terms


def localize_window(heat, cfg=LocalizeConfig()):
    """Smallest square window ``(w, u, v)`` holding ``threshold`` of the heat mass.

    ``(u, v)`` is the top-left (column, row).  For that ``w`` the position
    with the most mass wins, ties going to the first in row-major order.
    Windows wider than the map are clipped to it.
    """
    h = np.asarray(heat, dtype=np.float64)
    if h.ndim == 3:
        if h.shape[0] != 1:
            raise DimensionMismatchError(f"heat-map must have one channel, got {h.shape[0]}")
        h = h[0]
    if h.ndim != 2:
        raise DimensionMismatchError(f"heat-map must be H x W or 1 x H x W, got {h.shape}")
    if np.any(h < 0) or not np.all(np.isfinite(h)):
        raise InvalidArgumentError("heat-map values must be finite and nonnegative")
    if not h.sum() > 0:
        raise NoDetectionError("heat-map has zero total mass; nothing to localize")
    w, u, v, _ = window_search(h, cfg.threshold, cfg.step)
    return w, u, v


def crop_resize_bilinear(features, window, out_size):
    """Resample the square ``window = (w, u, v)`` of ``features`` to ``out_size``.

    Output pixel centers are spread uniformly over the window (half-pixel
    alignment); samples falling outside the map clamp to its edge.
    """
    f = np.asarray(features, dtype=np.float64)
    if f.ndim != 3:
        raise DimensionMismatchError(f"features: expected C x H x W, got {f.shape}")
    w, u, v = window
    oh, ow = (int(s) for s in out_size)
    if w <= 0 or oh < 1 or ow < 1:
        raise InvalidArgumentError(f"window width and out_size must be positive, got {w} and {out_size}")
    _, H, W = f.shape
    if u >= W or v >= H or u + w <= 0 or v + w <= 0:
        raise InvalidArgumentError(f"window {window} does not intersect the {H} x {W} feature map")
    ys = v + (np.arange(oh) + 0.5) * (w / oh) - 0.5
    xs = u + (np.arange(ow) + 0.5) * (w / ow) - 0.5
    return bilinear_sample(f, ys, xs)


def assemble_hand_input(body_crop, supp, attention):
    """Concatenate ``[body_crop; supp; attention]`` along channels."""
    body_crop = np.asarray(body_crop, dtype=np.float64)
    supp = np.asarray(supp, dtype=np.float64)
    if body_crop.ndim != 3 or supp.ndim != 3:
        raise DimensionMismatchError("body_crop and supp must be C x h x w")
    if body_crop.shape[1:] != supp.shape[1:]:
        raise DimensionMismatchError(f"spatial mismatch: body_crop {body_crop.shape[1:]} vs supp {supp.shape[1:]}")
    if attention not in (0, 1):
        raise InvalidArgumentError(f"attention must be 0 or 1, got {attention}")
    att = np.full((1,) + supp.shape[1:], float(attention))
    return HandBranchInput(body_crop, supp, att).tensor()


def save_maps(maps, path):
    write_kba(path, "MapStack", maps.arrays())


def load_maps(path):
    kind, arrays = read_kba(path)
    if kind != "MapStack":
        raise SchemaError(f"{path}: expected a MapStack container, found {kind!r}")
    missing = {"K", "D", "L"} - set(arrays)
    if missing:
        raise SchemaError(f"{path}: missing arrays {sorted(missing)}")
    return MapStack(arrays["K"], arrays["D"], arrays["L"])
