"""Synthetic end-to-end run: detect, lift, localize, solve translation, merge.

All randomness descends from one ``numpy.random.SeedSequence(seed)``,
spawned into four independent children in a fixed order::

    0 rig       synthetic body/face assets
    1 poses     poses, shapes, depths, face parameters
    2 ik        IK training set and network initialization
    3 spare     reserved so later stages never shift earlier streams

Coordinates: the rig frame is +y up, +z forward.  The camera sits on the
rig's +z axis looking back at the subject, so world-to-camera is a half
turn about x (image y points down, depth grows away from the camera).
Location-maps hold root-relative coordinates in the rig frame, which is
what the IK network consumes.
"""

import json
from contextlib import contextmanager
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import ik
from .assets import (
    LEFT_HAND_JOINTS,
    LEFT_WRIST,
    NUM_BETAS,
    NUM_BODY_JOINTS,
    NUM_FACE_ALBEDO,
    NUM_FACE_EXPR,
    NUM_FACE_SHAPE,
    RIGHT_HAND_JOINTS,
    RIGHT_WRIST,
    generate_synthetic_rig,
    save_bundle,
)
from .body_model import Pose, pose_body
from .errors import InvalidArgumentError, KinebodyError, ParseError
from .face_model import FaceParams, merge_face_body, sh_rotation, sh_shade, shade_face, vertex_normals
from .geometry import Camera, TranslationProblem, metric_report, mpjpe, photometric_error, solve_global_translation
from .maps import (
    LocalizeConfig,
    assemble_hand_input,
    build_gt_maps,
    crop_resize_bilinear,
    decode_keypoints,
    heatmap_from_kmaps,
    localize_window,
    save_maps,
)
from .rotations import matrix_to_axis_angle
from .textio import read_key_values, write_keypoints, write_obj, write_pose

WORLD_TO_CAMERA = np.diag([1.0, -1.0, -1.0])
HAND_PARTS = {
    "left_hand": [LEFT_WRIST, *LEFT_HAND_JOINTS],
    "right_hand": [RIGHT_WRIST, *RIGHT_HAND_JOINTS],
}


@dataclass
class PipelineConfig:
    seed: int = 0
    n_body_vertices: int = 520
    n_face_vertices: int = 96
    n_poses: int = 3
    map_size: tuple = (64, 64)
    sigma: float = 2.0
    hand_threshold: float = 0.95
    face_threshold: float = 0.95
    focal_scale: float = 1.2  # focal length in units of map width
    depth_range: tuple = (3.0, 4.0)
    ik_samples: int = 2000
    ik_epochs: int = 8
    ik_hidden_layers: int = 2
    ik_hidden_width: int = 64
    ik_learning_rate: float = 3e-3
    ik_batch_size: int = 64
    ik_optimizer: str = "adam"
    body_limit: float = 0.3
    crop_size: int = 16
    out_dir: str = ""

    def __post_init__(self):
        self.map_size = tuple(int(s) for s in self.map_size)
        self.depth_range = tuple(float(s) for s in self.depth_range)
        if len(self.map_size) != 2 or min(self.map_size) < 8:
            raise InvalidArgumentError(f"map_size must be two sizes >= 8, got {self.map_size}")
        if len(self.depth_range) != 2 or not 0 < self.depth_range[0] <= self.depth_range[1]:
            raise InvalidArgumentError(f"depth_range must be 0 < near <= far, got {self.depth_range}")
        for name in ("n_poses", "ik_samples", "crop_size", "ik_hidden_width", "ik_batch_size"):
            if getattr(self, name) < 1:
                raise InvalidArgumentError(f"{name} must be positive, got {getattr(self, name)}")
        if not self.sigma > 0 or not self.focal_scale > 0 or not self.body_limit > 0:
            raise InvalidArgumentError("sigma, focal_scale and body_limit must be positive")
        LocalizeConfig(self.hand_threshold)
        LocalizeConfig(self.face_threshold)
        self.ik_config()

    def ik_config(self, seed=0):
        return ik.IKTrainConfig(
            part="body", epochs=self.ik_epochs, hidden_layers=self.ik_hidden_layers,
            hidden_width=self.ik_hidden_width, learning_rate=self.ik_learning_rate,
            batch_size=self.ik_batch_size, optimizer=self.ik_optimizer, body_limit=self.body_limit,
            lambda_theta=0.01, seed=seed,
        )

    @classmethod
    def from_file(cls, path, **overrides):
        types = {f.name: f.type for f in fields(cls)}
        kw = {}
        for key, (value, no) in read_key_values(path).items():
            if key not in types:
                raise ParseError(f"unknown key {key!r}", path, no)
            try:
                kw[key] = _convert(types[key], value)
            except ValueError as e:
                raise ParseError(f"bad value for {key}: {e}", path, no) from e
        kw.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**kw)


def _convert(kind, text):
    if kind in ("int", int):
        return int(text)
    if kind in ("float", float):
        return float(text)
    if kind in ("tuple", tuple):
        return tuple(float(t) for t in text.split())
    return text


@contextmanager
def _stage(name):
    try:
        yield
    except KinebodyError as e:
        e.args = (f"[{name}] {e.args[0] if e.args else e}",) + e.args[1:]
        raise


def _bone_dirs(rel, parents):
    d = np.zeros_like(rel)
    for j, p in enumerate(parents):
        if p >= 0:
            v = rel[j] - rel[p]
            n = np.linalg.norm(v)
            d[j] = v / n if n > 0 else 0.0
    return d


def _sample_pose(rng, cfg):
    body = ik.joint_limits(ik.PARTS["body"], cfg.body_limit)
    lh = ik.joint_limits(ik.PARTS["left_hand"])
    rh = ik.joint_limits(ik.PARTS["right_hand"])
    lim = np.concatenate([body, lh, rh])
    angles = lim[..., 0] + rng.random(lim.shape[:2]) * (lim[..., 1] - lim[..., 0])
    return ik._euler_xyz(angles)


def _solve_translation(cam, uv, rel_cam, parents, bone_lengths):
    """First bone (in joint order) whose depth root is uniquely admissible."""
    fallback = None
    for c in range(1, NUM_BODY_JOINTS):
        p = int(parents[c])
        prob = TranslationProblem(uv[p], uv[c], rel_cam[p, 2], rel_cam[c, 2], bone_lengths[c], cam, rel_cam[p])
        try:
            sol = solve_global_translation(prob)
        except KinebodyError:
            continue
        if len(sol.admissible) == 1:
            return c, sol
        if fallback is None:
            fallback = (c, sol)
    if fallback is None:
        raise InvalidArgumentError("no body bone yields a feasible depth")
    return fallback


def run_synthetic_pipeline(cfg):
    """Run every stage on synthetic data and return a JSON-ready report."""
    root_ss = np.random.SeedSequence(cfg.seed)
    rig_ss, pose_ss, ik_ss, _ = root_ss.spawn(4)
    out = Path(cfg.out_dir) if cfg.out_dir else None

    with _stage("assets"):
        rig, face, spec = generate_synthetic_rig(int(rig_ss.generate_state(1)[0]), cfg.n_body_vertices,
                                                 cfg.n_face_vertices)
    if out is not None:
        save_bundle(out / "assets", rig, face, spec)

    with _stage("train-ik"):
        ik_seeds = ik_ss.generate_state(2)
        icfg = cfg.ik_config(seed=int(ik_seeds[1]))
        train = ik.generate_ik_training_set(rig, cfg.ik_samples, int(ik_seeds[0]), icfg)
        params, train_log = ik.train_iknet(rig, train, icfg)
    if out is not None:
        ik.save_params(params, out / "iknet.kba")
    part_model = ik.PartModel(rig, ik.PARTS["body"])

    H, W = cfg.map_size
    f = cfg.focal_scale * W
    cam = Camera.from_params(f, f, (W - 1) / 2.0, (H - 1) / 2.0)
    rng = np.random.default_rng(pose_ss)
    parents = rig.parent_index
    samples = []
    all_pred, all_gt, all_uv_pred, all_uv_gt = [], [], [], []
    ik_pred, ik_gt = [], []
    photo = []
    for i in range(cfg.n_poses):
        rots = _sample_pose(rng, cfg)
        beta = 0.5 * rng.standard_normal(NUM_BETAS)
        depth = cfg.depth_range[0] + rng.random() * (cfg.depth_range[1] - cfg.depth_range[0])
        root_cam = np.array([0.0, 0.0, depth])
        with _stage("pose"):
            rest = rig.rest_joint_positions + np.tensordot(beta, rig.joint_shape_basis, axes=(0, 0))
            root_world = WORLD_TO_CAMERA.T @ root_cam
            posed = pose_body(rig, beta, Pose.from_matrices(rots, root_world - rest[rig.root]))
        joints_world = posed.joint_positions
        joints_cam = joints_world @ WORLD_TO_CAMERA.T
        uv = cam.project(joints_cam)
        rel = joints_world - joints_world[rig.root]
        rel_cam = rel @ WORLD_TO_CAMERA.T
        dirs = _bone_dirs(rel, parents)

        with _stage("maps"):
            groups = {"body": list(range(NUM_BODY_JOINTS)), **HAND_PARTS}
            maps = {k: build_gt_maps(uv[ids], rel[ids], dirs[ids], cfg.map_size, cfg.sigma) for k, ids in groups.items()}
            decoded = {k: decode_keypoints(m) for k, m in maps.items()}
        if out is not None and i == 0:
            save_maps(maps["body"], out / "body_maps.kba")

        dec_xyz = np.zeros_like(rel)
        dec_uv = np.zeros_like(uv)
        missing = []
        for k, ids in groups.items():
            dec_xyz[ids] = decoded[k].xyz
            dec_uv[ids] = decoded[k].uv
            missing += [int(j) for j, m in zip(ids, decoded[k].missing) if m]

        with _stage("localize"):
            windows = {}
            hand_input_channels = {}
            for k in HAND_PARTS:
                w, u, v = localize_window(heatmap_from_kmaps(maps[k].K), LocalizeConfig(cfg.hand_threshold))
                windows[k] = [w, u, v]
                crop = crop_resize_bilinear(maps["body"].K, (w, u, v), (cfg.crop_size, cfg.crop_size))
                supp = crop_resize_bilinear(maps[k].K, (w, u, v), (cfg.crop_size, cfg.crop_size))
                hand_input_channels[k] = int(assemble_hand_input(crop, supp, 1).shape[0])
            face_params = FaceParams(
                0.3 * rng.standard_normal(NUM_FACE_SHAPE), 0.3 * rng.standard_normal(NUM_FACE_EXPR),
                0.3 * rng.standard_normal(NUM_FACE_ALBEDO),
                np.concatenate([np.full((3, 1), 2.5), 0.3 * rng.standard_normal((3, 8))], axis=1),
            )
            shaded = shade_face(face, face_params)

        with _stage("merge"):
            merged = merge_face_body(posed, shaded.vertices, spec, rig=rig, face=face)
            # face normals turn with the head; rotating the SH coefficients must reproduce the rest shading
            Rf = posed.per_joint_global_transforms[spec.neck_joint_id, :3, :3] @ spec.rotation
            posed_normals = vertex_normals(merged.face_vertices, face.triangles)
            rotated = sh_shade(shaded.reflectance, posed_normals, face_params.mu @ sh_rotation(Rf))
            photo.append(photometric_error(rotated, shaded.radiosity))
            landmarks_cam = merged.face_vertices[face.landmark_ids] @ WORLD_TO_CAMERA.T
            lm_uv = cam.project(landmarks_cam)
            face_maps = build_gt_maps(lm_uv, np.zeros((len(lm_uv), 3)), np.zeros((len(lm_uv), 3)), cfg.map_size, cfg.sigma)
            w, u, v = localize_window(heatmap_from_kmaps(face_maps.K), LocalizeConfig(cfg.face_threshold))
            windows["face"] = [w, u, v]

        with _stage("ik"):
            R, b_pred, a_pred = ik.iknet_forward(params, dec_xyz[:NUM_BODY_JOINTS])
            chi, _ = part_model.posed_keypoints(R[None], b_pred[None], np.array([a_pred]))
            ik_pred.append(chi[0])
            ik_gt.append(rel[:NUM_BODY_JOINTS])

        with _stage("translation"):
            bone_len = np.linalg.norm(rest - rest[np.maximum(parents, 0)], axis=1)
            bone, sol = _solve_translation(cam, uv, rel_cam, parents, bone_len)
            t_err = float(np.linalg.norm(sol.translation - root_cam))

        if out is not None:
            colors = np.full((len(merged.vertices), 3), 0.7)
            colors[merged.face_offset:] = np.clip(shaded.radiosity, 0.0, 1.0)
            write_obj(out / f"pose{i}_merged.obj", merged.vertices, merged.triangles, colors)
            write_keypoints(out / f"pose{i}_keypoints.txt", dec_xyz)
            write_pose(out / f"pose{i}_pose.txt", matrix_to_axis_angle(rots), root_world - rest[rig.root], beta)

        all_pred.append(dec_xyz)
        all_gt.append(rel)
        all_uv_pred.append(dec_uv)
        all_uv_gt.append(uv)
        samples.append({
            "depth_m": float(depth),
            "decode_mpjpe_mm": mpjpe(dec_xyz, rel),
            "ik_mpjpe_mm": mpjpe(chi[0], rel[:NUM_BODY_JOINTS]),
            "ik_mpjpe_pa_mm": mpjpe(chi[0], rel[:NUM_BODY_JOINTS], "procrustes"),
            "missing_joints": missing,
            "windows": windows,
            "hand_input_channels": hand_input_channels,
            "translation_bone": int(bone),
            "translation_candidates": [float(z) for z in sol.candidates],
            "translation_error_m": t_err,
            "merged_vertices": int(len(merged.vertices)),
            "merged_triangles": int(len(merged.triangles)),
        })

    decode_report = metric_report(
        np.concatenate(all_pred), np.concatenate(all_gt), pred_2d=np.concatenate(all_uv_pred),
        gt_2d=np.concatenate(all_uv_gt),
    )
    ik_errors = [mpjpe(p, g) for p, g in zip(ik_pred, ik_gt)]
    ik_errors_pa = [mpjpe(p, g, "procrustes") for p, g in zip(ik_pred, ik_gt)]
    report = {
        "config": {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(cfg).items() if k != "out_dir"},
        "ik_training": {
            "final_loss": float(train_log.epoch_loss[-1]) if train_log.epoch_loss else None,
            "epoch_loss": [float(x) for x in train_log.epoch_loss],
            "mean_bone_length_m": part_model.mean_bone_length,
        },
        "decode": {
            "mpjpe_mm": float(np.mean([s["decode_mpjpe_mm"] for s in samples])),
            "landmark_error_px": decode_report.landmark_error,
        },
        "ik": {"mpjpe_mm": float(np.mean(ik_errors)), "mpjpe_pa_mm": float(np.mean(ik_errors_pa))},
        "translation": {"max_error_m": max(s["translation_error_m"] for s in samples)},
        "face": {"photometric_error": [float(x) for x in np.max(photo, axis=0)]},
        "samples": samples,
    }
    return report


def report_json(report):
    return json.dumps(report, indent=2, sort_keys=True) + "\n"
