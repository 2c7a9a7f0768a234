"""Rig and face asset types, the KBA1 container, and the synthetic rig generator.

Joint ordering of the synthetic rig (52 joints)::

     0 pelvis        1 l_hip       2 r_hip       3 spine1      4 l_knee
     5 r_knee        6 spine2      7 l_ankle     8 r_ankle     9 spine3
    10 l_foot       11 r_foot     12 neck       13 l_collar   14 r_collar
    15 head         16 l_shoulder 17 r_shoulder 18 l_elbow    19 r_elbow
    20 l_wrist      21 r_wrist
    22-36 left hand, 37-51 right hand; per hand the fingers are
    index, middle, pinky, ring, thumb, three joints each (proximal first).

Coordinates are meters, +y up, +x towards the subject's left, +z forward.

KBA1 container (little-endian)::

    b"KBA1"  u32 version  u16 kind_len  kind(utf-8)  u32 n_arrays
    per array: u16 name_len  name(utf-8)  u8 dtype(0=f64, 1=u32)  u8 ndim
               u64 dims[ndim]  payload (row-major)

Index arrays are stored as u32; the root's parent is stored as 0xFFFFFFFF.
"""

import struct
from dataclasses import dataclass, fields
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatchError,
    InvalidArgumentError,
    InvalidHierarchyError,
    InvariantViolationError,
    SchemaError,
)
from .meshutil import loop_is_closed_on, zipper_triangulate

NUM_BODY_JOINTS = 22
NUM_HAND_JOINTS = 30
NUM_JOINTS = NUM_BODY_JOINTS + NUM_HAND_JOINTS
NUM_BETAS = 16
NUM_FACE_SHAPE = 80
NUM_FACE_EXPR = 64
NUM_FACE_ALBEDO = 80

MAGIC = b"KBA1"
VERSION = 1
ROOT_SENTINEL = 0xFFFFFFFF
_DTYPES = {0: np.dtype("<f8"), 1: np.dtype("<u4")}

BODY_JOINT_NAMES = [
    "pelvis", "l_hip", "r_hip", "spine1", "l_knee", "r_knee", "spine2", "l_ankle",
    "r_ankle", "spine3", "l_foot", "r_foot", "neck", "l_collar", "r_collar", "head",
    "l_shoulder", "r_shoulder", "l_elbow", "r_elbow", "l_wrist", "r_wrist",
]
FINGERS = ["index", "middle", "pinky", "ring", "thumb"]
JOINT_NAMES = BODY_JOINT_NAMES + [
    f"{side}_{finger}{k}" for side in ("l", "r") for finger in FINGERS for k in (1, 2, 3)
]
BODY_PARENTS = [-1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19]
HEAD_JOINT = 15
LEFT_WRIST = 20
RIGHT_WRIST = 21
LEFT_HAND_JOINTS = list(range(22, 37))
RIGHT_HAND_JOINTS = list(range(37, 52))
# dataset-specific body keypoints (feet and collars); the remaining body joints are basic
EXTENDED_BODY_IDS = [10, 11, 13, 14]
BASIC_BODY_IDS = [j for j in range(NUM_BODY_JOINTS) if j not in EXTENDED_BODY_IDS]


def _skeleton():
    parents = list(BODY_PARENTS)
    body = {
        0: (0.0, 0.95, 0.0), 1: (0.09, 0.87, 0.0), 2: (-0.09, 0.87, 0.0), 3: (0.0, 1.05, 0.0),
        4: (0.09, 0.48, 0.0), 5: (-0.09, 0.48, 0.0), 6: (0.0, 1.18, 0.0), 7: (0.09, 0.08, 0.0),
        8: (-0.09, 0.08, 0.0), 9: (0.0, 1.30, 0.0), 10: (0.09, 0.02, 0.12), 11: (-0.09, 0.02, 0.12),
        12: (0.0, 1.50, 0.0), 13: (0.07, 1.43, 0.0), 14: (-0.07, 1.43, 0.0), 15: (0.0, 1.62, 0.02),
        16: (0.18, 1.44, 0.0), 17: (-0.18, 1.44, 0.0), 18: (0.45, 1.44, 0.0), 19: (-0.45, 1.44, 0.0),
        20: (0.70, 1.44, 0.0), 21: (-0.70, 1.44, 0.0),
    }
    pos = [body[j] for j in range(NUM_BODY_JOINTS)]
    # finger base offsets from the wrist (left hand; mirrored in x for the right)
    bases = {"index": (0.09, 0.0, 0.03), "middle": (0.095, 0.0, 0.01), "pinky": (0.08, 0.0, -0.03),
             "ring": (0.09, 0.0, -0.01), "thumb": (0.03, -0.01, 0.035)}
    dirs = {"index": (1.0, 0.0, 0.0), "middle": (1.0, 0.0, 0.0), "pinky": (1.0, 0.0, 0.0),
            "ring": (1.0, 0.0, 0.0), "thumb": (0.7071, 0.0, 0.7071)}
    lengths = (0.035, 0.025, 0.02)
    for wrist, sign in ((LEFT_WRIST, 1.0), (RIGHT_WRIST, -1.0)):
        w = np.array(pos[wrist])
        mirror = np.array([sign, 1.0, 1.0])
        for finger in FINGERS:
            p = w + mirror * np.array(bases[finger])
            d = mirror * np.array(dirs[finger])
            parent = wrist
            for k in range(3):
                parents.append(parent)
                pos.append(tuple(p))
                parent = len(pos) - 1
                p = p + d * lengths[k]
    return np.array(parents, dtype=np.int64), np.array(pos, dtype=np.float64)


# --------------------------------------------------------------------------
# types


@dataclass(frozen=True, eq=False)
class BodyRig:
    """Template mesh, shape basis, skeleton and skinning weights.

    ``joint_regressor`` (J x N_B) maps shaped vertices to rest joints, so
    that ``rest_joint_positions == joint_regressor @ mean_vertices``.
    """

    mean_vertices: np.ndarray
    shape_basis: np.ndarray
    skinning_weights: np.ndarray
    parent_index: np.ndarray
    rest_joint_positions: np.ndarray
    joint_regressor: np.ndarray
    triangles: np.ndarray
    basic_keypoint_ids: np.ndarray
    extended_keypoint_ids: np.ndarray

    @property
    def n_vertices(self):
        return self.mean_vertices.shape[0]

    @property
    def n_joints(self):
        return self.parent_index.shape[0]

    @property
    def root(self):
        return int(np.flatnonzero(self.parent_index < 0)[0])

    @cached_property
    def topo_order(self):
        """Joint indices with every parent before its children."""
        return _topological_order(self.parent_index)

    @cached_property
    def joint_shape_basis(self):
        """Per-beta displacement of the rest joints, 16 x J x 3."""
        return np.einsum("jn,knc->kjc", self.joint_regressor, self.shape_basis)

    @cached_property
    def bone_lengths(self):
        p = self.parent_index
        child = np.flatnonzero(p >= 0)
        return np.linalg.norm(self.rest_joint_positions[child] - self.rest_joint_positions[p[child]], axis=1)

    def equals(self, other):
        return _fields_equal(self, other)


@dataclass(frozen=True, eq=False)
class FaceAsset:
    mean_face: np.ndarray
    shape_basis: np.ndarray
    expression_basis: np.ndarray
    mean_reflectance: np.ndarray
    reflectance_basis: np.ndarray
    triangles: np.ndarray
    boundary_loop: np.ndarray
    landmark_ids: np.ndarray

    @property
    def n_vertices(self):
        return self.mean_face.shape[0]

    def equals(self, other):
        return _fields_equal(self, other)


@dataclass(frozen=True, eq=False)
class MergeSpec:
    """Face placement on the body.

    Face-local vertices map to the rest body frame as ``scale * R @ v + t``;
    ``face_region_ids`` are the body vertices the face replaces.
    """

    body_boundary_loop: np.ndarray
    rotation: np.ndarray
    translation: np.ndarray
    scale: float
    neck_joint_id: int
    face_region_ids: np.ndarray

    def equals(self, other):
        return _fields_equal(self, other)


def _fields_equal(a, b):
    if type(a) is not type(b):
        return False
    for f in fields(a):
        x, y = np.asarray(getattr(a, f.name)), np.asarray(getattr(b, f.name))
        if x.shape != y.shape or not np.array_equal(x, y):
            return False
    return True


# --------------------------------------------------------------------------
# validation


def _topological_order(parents):
    parents = np.asarray(parents)
    children = [[] for _ in parents]
    for j, p in enumerate(parents):
        if p >= 0:
            children[p].append(j)
    roots = [j for j, p in enumerate(parents) if p < 0]
    order = []
    stack = list(reversed(roots))
    while stack:
        j = stack.pop()
        order.append(j)
        stack.extend(reversed(children[j]))
    return np.array(order, dtype=np.int64)


def validate_hierarchy(parents):
    parents = np.asarray(parents, dtype=np.int64)
    n = len(parents)
    roots = np.flatnonzero(parents < 0)
    if len(roots) != 1:
        raise InvalidHierarchyError(f"parent_index: expected exactly one root, found {len(roots)}")
    bad = np.flatnonzero((parents >= n) | (parents == np.arange(n)))
    if bad.size:
        raise InvalidHierarchyError(f"parent_index: invalid parent for joints {bad.tolist()}")
    for j in range(n):
        seen = 0
        k = j
        while parents[k] >= 0:
            k = parents[k]
            seen += 1
            if seen > n:
                raise InvalidHierarchyError(f"parent_index: cycle reachable from joint {j}")


def _require(cond, exc, msg):
    if not cond:
        raise exc(msg)


def validate_body_rig(rig):
    V = rig.mean_vertices
    _require(V.ndim == 2 and V.shape[1] == 3, DimensionMismatchError, f"mean_vertices: expected N x 3, got {V.shape}")
    n = V.shape[0]
    J = rig.parent_index.shape[0]
    _require(rig.shape_basis.shape == (NUM_BETAS, n, 3), DimensionMismatchError,
             f"shape_basis: expected {(NUM_BETAS, n, 3)}, got {rig.shape_basis.shape}")
    _require(rig.skinning_weights.shape == (n, J), DimensionMismatchError,
             f"skinning_weights: expected {(n, J)}, got {rig.skinning_weights.shape}")
    _require(rig.rest_joint_positions.shape == (J, 3), DimensionMismatchError,
             f"rest_joint_positions: expected {(J, 3)}, got {rig.rest_joint_positions.shape}")
    _require(rig.joint_regressor.shape == (J, n), DimensionMismatchError,
             f"joint_regressor: expected {(J, n)}, got {rig.joint_regressor.shape}")
    _require(rig.triangles.ndim == 2 and rig.triangles.shape[1] == 3, DimensionMismatchError,
             f"triangles: expected T x 3, got {rig.triangles.shape}")
    if rig.triangles.size:
        _require(rig.triangles.max() < n, InvariantViolationError, "triangles: vertex index out of range")
    for name in ("mean_vertices", "shape_basis", "skinning_weights", "rest_joint_positions", "joint_regressor"):
        _require(np.all(np.isfinite(getattr(rig, name))), InvariantViolationError, f"{name}: non-finite values")
    W = rig.skinning_weights
    neg = np.argwhere(W < 0)
    _require(neg.size == 0, InvariantViolationError,
             f"skinning_weights: negative weight at (vertex, joint) {tuple(neg[0]) if neg.size else ()}")
    sums = W.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > 1e-6)
    _require(bad.size == 0, InvariantViolationError,
             f"skinning_weights: row {bad[0] if bad.size else -1} sums to {sums[bad[0]] if bad.size else 0:.6g}, expected 1")
    validate_hierarchy(rig.parent_index)
    basic, ext = set(rig.basic_keypoint_ids.tolist()), set(rig.extended_keypoint_ids.tolist())
    _require(not (basic & ext), InvariantViolationError,
             f"basic_keypoint_ids/extended_keypoint_ids: overlap {sorted(basic & ext)}")
    _require(all(0 <= k < J for k in basic | ext), InvariantViolationError, "keypoint ids out of range")
    drift = np.max(np.abs(rig.joint_regressor @ V - rig.rest_joint_positions))
    _require(drift < 1e-9, InvariantViolationError,
             f"rest_joint_positions: differs from joint_regressor @ mean_vertices by {drift:.3g}")


def validate_face_asset(face):
    V = face.mean_face
    _require(V.ndim == 2 and V.shape[1] == 3, DimensionMismatchError, f"mean_face: expected N x 3, got {V.shape}")
    n = V.shape[0]
    for name, k in (("shape_basis", NUM_FACE_SHAPE), ("expression_basis", NUM_FACE_EXPR), ("reflectance_basis", NUM_FACE_ALBEDO)):
        arr = getattr(face, name)
        _require(arr.shape == (k, n, 3), DimensionMismatchError, f"{name}: expected {(k, n, 3)}, got {arr.shape}")
    _require(face.mean_reflectance.shape == (n, 3), DimensionMismatchError,
             f"mean_reflectance: expected {(n, 3)}, got {face.mean_reflectance.shape}")
    for name in ("mean_face", "shape_basis", "expression_basis", "mean_reflectance", "reflectance_basis"):
        _require(np.all(np.isfinite(getattr(face, name))), InvariantViolationError, f"{name}: non-finite values")
    _require(np.all((face.mean_reflectance >= 0) & (face.mean_reflectance <= 1)), InvariantViolationError,
             "mean_reflectance: values outside [0, 1]")
    _require(face.triangles.ndim == 2 and face.triangles.shape[1] == 3, DimensionMismatchError,
             f"triangles: expected T x 3, got {face.triangles.shape}")
    _require(face.triangles.size == 0 or face.triangles.max() < n, InvariantViolationError,
             "triangles: vertex index out of range")
    loop = face.boundary_loop
    _require(len(loop) >= 3 and np.all(loop < n), InvariantViolationError,
             "boundary_loop: needs >= 3 valid vertex indices")
    _require(len(set(loop.tolist())) == len(loop), InvariantViolationError, "boundary_loop: repeated vertex")
    _require(loop_is_closed_on(loop, face.triangles), InvariantViolationError,
             "boundary_loop: consecutive vertices are not joined by mesh edges")
    _require(np.all(face.landmark_ids < n), InvariantViolationError, "landmark_ids: index out of range")


def validate_merge_spec(spec, rig=None):
    R = spec.rotation
    _require(R.shape == (3, 3), DimensionMismatchError, f"rotation: expected 3 x 3, got {R.shape}")
    _require(np.max(np.abs(R.T @ R - np.eye(3))) < 1e-9 and abs(np.linalg.det(R) - 1.0) < 1e-9,
             InvariantViolationError, "rotation: not a proper rotation")
    _require(spec.translation.shape == (3,), DimensionMismatchError, "translation: expected length 3")
    _require(spec.scale > 0, InvariantViolationError, f"scale: must be > 0, got {spec.scale}")
    _require(len(spec.body_boundary_loop) >= 3, InvariantViolationError, "body_boundary_loop: needs >= 3 vertices")
    if rig is not None:
        _require(0 <= spec.neck_joint_id < rig.n_joints, InvariantViolationError, "neck_joint_id: out of range")
        _require(np.all(spec.body_boundary_loop < rig.n_vertices), InvariantViolationError,
                 "body_boundary_loop: index out of range")
        _require(loop_is_closed_on(spec.body_boundary_loop, rig.triangles), InvariantViolationError,
                 "body_boundary_loop: consecutive vertices are not joined by mesh edges")
        _require(not set(spec.face_region_ids.tolist()) & set(spec.body_boundary_loop.tolist()),
                 InvariantViolationError, "face_region_ids: overlaps body_boundary_loop")


# --------------------------------------------------------------------------
# KBA1 container


def write_kba(path, kind, arrays):
    path = Path(path)
    out = bytearray()
    out += MAGIC
    out += struct.pack("<I", VERSION)
    kb = kind.encode("utf-8")
    out += struct.pack("<H", len(kb)) + kb
    out += struct.pack("<I", len(arrays))
    for name, arr in arrays.items():
        arr = np.asarray(arr)
        if arr.dtype.kind == "f":
            code, data = 0, np.array(arr, dtype="<f8", order="C")
        elif arr.dtype.kind in "iub":
            if arr.size and (arr.min() < 0 or arr.max() > ROOT_SENTINEL):
                raise InvalidArgumentError(f"{name}: integer values do not fit u32")
            code, data = 1, np.array(arr, dtype="<u4", order="C")
        else:
            raise InvalidArgumentError(f"{name}: unsupported dtype {arr.dtype}")
        nb = name.encode("utf-8")
        out += struct.pack("<H", len(nb)) + nb
        out += struct.pack("<BB", code, data.ndim)
        out += struct.pack(f"<{data.ndim}Q", *data.shape)
        out += data.tobytes(order="C")
    path.write_bytes(bytes(out))


def read_kba(path):
    """Returns ``(kind, {name: array})``."""
    path = Path(path)
    try:
        buf = path.read_bytes()
    except OSError as e:
        raise SchemaError(f"{path}: cannot read ({e.strerror})") from e
    pos = 0

    def take(n):
        nonlocal pos
        if pos + n > len(buf):
            raise SchemaError(f"{path}: truncated at byte {pos}")
        chunk = buf[pos:pos + n]
        pos += n
        return chunk

    if take(4) != MAGIC:
        raise SchemaError(f"{path}: bad magic, not a KBA1 container")
    (version,) = struct.unpack("<I", take(4))
    if version != VERSION:
        raise SchemaError(f"{path}: unsupported version {version}")
    (klen,) = struct.unpack("<H", take(2))
    kind = take(klen).decode("utf-8")
    (count,) = struct.unpack("<I", take(4))
    arrays = {}
    for _ in range(count):
        (nlen,) = struct.unpack("<H", take(2))
        name = take(nlen).decode("utf-8")
        code, ndim = struct.unpack("<BB", take(2))
        if code not in _DTYPES:
            raise SchemaError(f"{path}: array {name!r} has unknown dtype code {code}")
        dims = struct.unpack(f"<{ndim}Q", take(8 * ndim))
        dt = _DTYPES[code]
        size = int(np.prod(dims, dtype=np.int64)) * dt.itemsize
        arrays[name] = np.frombuffer(take(size), dtype=dt).reshape(dims).copy()
    if pos != len(buf):
        raise SchemaError(f"{path}: {len(buf) - pos} trailing bytes")
    return kind, arrays


def _idx(arr):
    return np.asarray(arr, dtype=np.int64)


def _parents_out(parents):
    return np.where(parents < 0, ROOT_SENTINEL, parents).astype(np.uint32)


def _parents_in(raw):
    raw = raw.astype(np.int64)
    return np.where(raw == ROOT_SENTINEL, -1, raw)


_SCHEMA = {
    "BodyRig": {
        "mean_vertices": 0, "shape_basis": 0, "skinning_weights": 0, "parent_index": 1,
        "rest_joint_positions": 0, "joint_regressor": 0, "triangles": 1,
        "basic_keypoint_ids": 1, "extended_keypoint_ids": 1,
    },
    "FaceAsset": {
        "mean_face": 0, "shape_basis": 0, "expression_basis": 0, "mean_reflectance": 0,
        "reflectance_basis": 0, "triangles": 1, "boundary_loop": 1, "landmark_ids": 1,
    },
    "MergeSpec": {
        "body_boundary_loop": 1, "rotation": 0, "translation": 0, "scale": 0,
        "neck_joint_id": 1, "face_region_ids": 1,
    },
}


def asset_arrays(asset):
    kind = type(asset).__name__
    if kind not in _SCHEMA:
        raise InvalidArgumentError(f"not an asset: {kind}")
    arrays = {}
    for name in _SCHEMA[kind]:
        value = getattr(asset, name)
        if name == "parent_index":
            value = _parents_out(value)
        arrays[name] = np.asarray(value)
    return kind, arrays


def save_asset(asset, path):
    kind, arrays = asset_arrays(asset)
    write_kba(path, kind, arrays)


def load_asset(path, validate=True):
    """Load a :class:`BodyRig`, :class:`FaceAsset` or :class:`MergeSpec`.

    Every invariant is checked; violations raise, nothing is repaired.
    """
    kind, arrays = read_kba(path)
    if kind not in _SCHEMA:
        raise SchemaError(f"{path}: unknown asset kind {kind!r}")
    schema = _SCHEMA[kind]
    missing = sorted(set(schema) - set(arrays))
    if missing:
        raise SchemaError(f"{path}: {kind} missing fields {missing}")
    extra = sorted(set(arrays) - set(schema))
    if extra:
        raise SchemaError(f"{path}: {kind} has unknown fields {extra}")
    for name, code in schema.items():
        if arrays[name].dtype != _DTYPES[code]:
            raise SchemaError(f"{path}: field {name!r} must be {'f64' if code == 0 else 'u32'}")
    if kind == "BodyRig":
        a = arrays
        rig = BodyRig(
            mean_vertices=a["mean_vertices"], shape_basis=a["shape_basis"],
            skinning_weights=a["skinning_weights"], parent_index=_parents_in(a["parent_index"]),
            rest_joint_positions=a["rest_joint_positions"], joint_regressor=a["joint_regressor"],
            triangles=_idx(a["triangles"]), basic_keypoint_ids=_idx(a["basic_keypoint_ids"]),
            extended_keypoint_ids=_idx(a["extended_keypoint_ids"]),
        )
        if validate:
            validate_body_rig(rig)
        return rig
    if kind == "FaceAsset":
        a = arrays
        face = FaceAsset(
            mean_face=a["mean_face"], shape_basis=a["shape_basis"], expression_basis=a["expression_basis"],
            mean_reflectance=a["mean_reflectance"], reflectance_basis=a["reflectance_basis"],
            triangles=_idx(a["triangles"]), boundary_loop=_idx(a["boundary_loop"]), landmark_ids=_idx(a["landmark_ids"]),
        )
        if validate:
            validate_face_asset(face)
        return face
    a = arrays
    if a["scale"].shape != () or a["neck_joint_id"].shape != ():
        raise SchemaError(f"{path}: scale and neck_joint_id must be scalars")
    spec = MergeSpec(
        body_boundary_loop=_idx(a["body_boundary_loop"]), rotation=a["rotation"], translation=a["translation"],
        scale=float(a["scale"]), neck_joint_id=int(a["neck_joint_id"]), face_region_ids=_idx(a["face_region_ids"]),
    )
    if validate:
        validate_merge_spec(spec)
    return spec


def manifest_text(entries):
    """Text manifest listing each container's kind and arrays."""
    lines = ["# KBA1 manifest"]
    for fname, (kind, arrays) in entries.items():
        lines.append(f"file {fname} kind {kind}")
        for name, arr in arrays.items():
            dt = "f64" if np.asarray(arr).dtype.kind == "f" else "u32"
            shape = "x".join(str(d) for d in np.shape(arr)) or "scalar"
            lines.append(f"  {name} {dt} {shape}")
    return "\n".join(lines) + "\n"


def save_bundle(directory, rig, face, spec, extra_lines=()):
    """Write ``body.kba``, ``face.kba``, ``merge.kba`` and ``manifest.txt``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = {}
    for fname, asset in (("body.kba", rig), ("face.kba", face), ("merge.kba", spec)):
        kind, arrays = asset_arrays(asset)
        write_kba(directory / fname, kind, arrays)
        entries[fname] = (kind, arrays)
    text = manifest_text(entries)
    if extra_lines:
        text += "".join(f"{line}\n" for line in extra_lines)
    (directory / "manifest.txt").write_text(text)
    return directory


def load_bundle(directory):
    directory = Path(directory)
    rig = load_asset(directory / "body.kba")
    face = load_asset(directory / "face.kba")
    spec = load_asset(directory / "merge.kba")
    validate_merge_spec(spec, rig)
    return rig, face, spec


# --------------------------------------------------------------------------
# synthetic generator


def _ring_frame(d):
    d = d / np.linalg.norm(d)
    ref = np.array([0.0, 0.0, 1.0]) if abs(d[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    u = np.cross(d, ref)
    u /= np.linalg.norm(u)
    return u, np.cross(d, u)


def _orthogonal_basis(rng, k, n, scales):
    """``k`` random directions in R^{3n}, orthogonal when ``3n >= k``."""
    g = rng.standard_normal((3 * n, k))
    q, _ = np.linalg.qr(g)  # 3n x min(3n, k), orthonormal columns
    if q.shape[1] < k:
        # fewer dimensions than components: keep the rank-3n part, fill with mixes
        extra = q @ rng.standard_normal((q.shape[1], k - q.shape[1]))
        extra /= np.linalg.norm(extra, axis=0, keepdims=True)
        q = np.concatenate([q, extra], axis=1)
    basis = (q * scales[None, :]).T.reshape(k, n, 3)
    return basis


def _largest_remainder(total, shares, minimum):
    shares = np.asarray(shares, dtype=np.float64)
    minimum = np.asarray(minimum, dtype=np.int64)
    rest = total - minimum.sum()
    raw = shares / shares.sum() * rest
    base = np.floor(raw).astype(np.int64)
    left = rest - base.sum()
    order = np.argsort(-(raw - base), kind="stable")
    base[order[:left]] += 1
    return minimum + base


def _body_mesh(parents, joints, n_vertices):
    J = len(parents)
    children = [[] for _ in range(J)]
    for j, p in enumerate(parents):
        if p >= 0:
            children[p].append(j)
    # segments: (owner joint, start, end); leaves get a short tip segment
    segs = []
    for j in range(J):
        for c in children[j]:
            segs.append((j, joints[j], joints[c]))
        if not children[j]:
            if j == HEAD_JOINT:
                tip = np.array([0.0, 0.2, 0.0])
            else:
                d = joints[j] - joints[parents[j]]
                d /= np.linalg.norm(d)
                tip = d * (0.05 if j in (10, 11) else 0.02)
            segs.append((j, joints[j], joints[j] + tip))
    head_seg = next(i for i, s in enumerate(segs) if s[0] == HEAD_JOINT)
    n_seg = len(segs)
    n_rings = max(n_seg + 1, n_vertices // 6)
    lengths = np.array([np.linalg.norm(e - s) for _, s, e in segs])
    mins = np.ones(n_seg, dtype=np.int64)
    mins[head_seg] = 2
    rings_per_seg = _largest_remainder(n_rings, lengths, mins)
    ring_sizes = np.full(n_rings, n_vertices // n_rings, dtype=np.int64)
    ring_sizes[: n_vertices % n_rings] += 1

    verts, owner, ring_ids, tris = [], [], [], []
    r = 0
    seg_rings = []
    for si, ((j, s, e), q) in enumerate(zip(segs, rings_per_seg)):
        d = e - s
        length = np.linalg.norm(d)
        u, v = _ring_frame(d)
        radius = float(np.clip(0.3 * length, 0.007, 0.1))
        this = []
        for i in range(q):
            m = int(ring_sizes[r])
            c = s + d * (i / q)
            phi = 2.0 * np.pi * (np.arange(m) + 0.25 * (i % 2)) / m
            pts = c + radius * (np.cos(phi)[:, None] * u + np.sin(phi)[:, None] * v)
            ids = np.arange(len(verts), len(verts) + m)
            verts.extend(pts)
            owner.extend([si] * m)
            this.append(ids)
            r += 1
        seg_rings.append(this)
    verts = np.array(verts)
    for this in seg_rings:
        for a, b in zip(this, this[1:]):
            t, _ = zipper_triangulate(a, b, verts)
            tris.append(t)
    tris = np.concatenate(tris) if tris else np.zeros((0, 3), dtype=np.int64)
    return verts, np.array(owner), segs, seg_rings, tris, head_seg


def _skinning(verts, segs, parents, n_joints, power=4.0, top_k=4):
    """Inverse-distance weights to each joint's controlled segments."""
    n = len(verts)
    dist = np.full((n, n_joints), np.inf)
    for j, s, e in segs:
        d = e - s
        t = np.clip(((verts - s) @ d) / (d @ d), 0.0, 1.0)
        dd = np.linalg.norm(verts - (s + t[:, None] * d), axis=1)
        dist[:, j] = np.minimum(dist[:, j], dd)
    w = 1.0 / (dist + 1e-3) ** power
    if top_k < n_joints:
        cut = np.sort(w, axis=1)[:, -top_k][:, None]
        w = np.where(w >= cut, w, 0.0)
    return w / w.sum(axis=1, keepdims=True)


def _face_cap(n):
    """Spherical cap (radius 0.1 m, half-angle 70 deg) around +z with ``n`` vertices."""
    n_rings = max(2, int(round(np.sqrt((n - 1) / np.pi))))
    while n_rings > 2 and (n - 1) < 3 * n_rings:
        n_rings -= 1
    polar = np.deg2rad(70.0) * np.arange(1, n_rings + 1) / n_rings
    sizes = _largest_remainder(n - 1, np.sin(polar), np.full(n_rings, 3))
    rad = 0.1
    verts = [np.array([0.0, 0.0, rad])]
    rings = []
    for i, (th, m) in enumerate(zip(polar, sizes)):
        phi = 2.0 * np.pi * (np.arange(m) + 0.5 * (i % 2)) / m
        pts = rad * np.stack([np.sin(th) * np.cos(phi), np.sin(th) * np.sin(phi), np.full(m, np.cos(th))], axis=1)
        rings.append(np.arange(len(verts), len(verts) + m))
        verts.extend(pts)
    verts = np.array(verts)
    r0 = rings[0]
    tris = [np.stack([np.zeros(len(r0), dtype=np.int64), r0, np.roll(r0, -1)], axis=1)]
    for a, b in zip(rings, rings[1:]):
        t, _ = zipper_triangulate(a, b, verts)
        tris.append(t)
    tris = np.concatenate(tris)
    # outward orientation
    cent = verts[tris].mean(axis=1)
    nrm = np.cross(verts[tris[:, 1]] - verts[tris[:, 0]], verts[tris[:, 2]] - verts[tris[:, 0]])
    flip = np.sum(nrm * cent, axis=1) < 0
    tris[flip] = tris[flip][:, [0, 2, 1]]
    return verts, tris, rings[-1]


def generate_synthetic_rig(seed, n_body_vertices=520, n_face_vertices=96):
    """Deterministic desk-scale stand-in for licensed body and face assets."""
    if n_body_vertices < 4 * NUM_JOINTS:
        raise InvalidArgumentError(f"n_body_vertices must be >= {4 * NUM_JOINTS}, got {n_body_vertices}")
    if n_face_vertices < 12:
        raise InvalidArgumentError(f"n_face_vertices must be >= 12, got {n_face_vertices}")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    parents, joints = _skeleton()
    J = len(parents)

    verts, owner, segs, seg_rings, tris, head_seg = _body_mesh(parents, joints, n_body_vertices)
    n_b = len(verts)
    # each joint is the centroid of the first ring of its first segment
    regressor = np.zeros((J, n_b))
    for si, (j, _, _) in enumerate(segs):
        if not regressor[j].any():
            ring = seg_rings[si][0]
            regressor[j, ring] = 1.0 / len(ring)
    rest = regressor @ verts
    weights = _skinning(verts, segs, parents, J)
    shape_scales = 0.02 * np.sqrt(3 * n_b) / (1.0 + np.arange(NUM_BETAS)) ** 0.5
    shape_basis = _orthogonal_basis(rng, NUM_BETAS, n_b, shape_scales)

    rig = BodyRig(
        mean_vertices=verts, shape_basis=shape_basis, skinning_weights=weights,
        parent_index=parents, rest_joint_positions=rest, joint_regressor=regressor,
        triangles=tris, basic_keypoint_ids=np.array(BASIC_BODY_IDS, dtype=np.int64),
        extended_keypoint_ids=np.array(EXTENDED_BODY_IDS, dtype=np.int64),
    )

    fverts, ftris, rim = _face_cap(n_face_vertices)
    n_f = len(fverts)
    k_geo = NUM_FACE_SHAPE + NUM_FACE_EXPR
    geo = _orthogonal_basis(rng, k_geo, n_f, 0.004 * np.sqrt(3 * n_f) / (1.0 + np.arange(k_geo) % 80) ** 0.5)
    albedo = _orthogonal_basis(rng, NUM_FACE_ALBEDO, n_f, 0.03 * np.sqrt(3 * n_f) / (1.0 + np.arange(NUM_FACE_ALBEDO)) ** 0.5)
    base_color = np.array([0.78, 0.57, 0.47])
    mean_refl = np.clip(base_color + 0.03 * rng.standard_normal((n_f, 3)), 0.0, 1.0)
    n_lm = min(68, n_f)
    landmarks = np.unique(np.linspace(0, n_f - 1, n_lm).round().astype(np.int64))
    face = FaceAsset(
        mean_face=fverts, shape_basis=geo[:NUM_FACE_SHAPE], expression_basis=geo[NUM_FACE_SHAPE:],
        mean_reflectance=mean_refl, reflectance_basis=albedo, triangles=ftris,
        boundary_loop=rim.astype(np.int64), landmark_ids=landmarks,
    )

    head_rings = seg_rings[head_seg]
    boundary = head_rings[0]
    face_region = np.concatenate(head_rings[1:])
    ring_pts = verts[boundary]
    ring_radius = float(np.mean(np.linalg.norm(ring_pts - ring_pts.mean(axis=0), axis=1)))
    rim_pts = fverts[rim]
    rim_radius = float(np.mean(np.linalg.norm(rim_pts[:, :2], axis=1)))
    # inset so the stitched annulus never collapses, even at rest
    scale = 0.9 * ring_radius / rim_radius
    rot = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, -1.0, 0.0]])  # face +z -> body +y
    trans = ring_pts.mean(axis=0) - scale * rot @ np.array([0.0, 0.0, rim_pts[:, 2].mean()])
    spec = MergeSpec(
        body_boundary_loop=boundary.astype(np.int64), rotation=rot, translation=trans, scale=scale,
        neck_joint_id=HEAD_JOINT, face_region_ids=face_region.astype(np.int64),
    )
    validate_body_rig(rig)
    validate_face_asset(face)
    validate_merge_spec(spec, rig)
    return rig, face, spec
