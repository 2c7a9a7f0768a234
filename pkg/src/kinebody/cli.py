"""``kinebody`` command line.

Exit status: 0 on success, 2 for invalid input (bad flags, malformed or
inconsistent files), 3 for numerical failures (degenerate geometry, no
detection, divergence).  ``KINEBODY_THREADS`` caps numba's thread pool and
``KINEBODY_DISABLE_NUMBA=1`` forces the numpy kernels.
"""

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import ik
from .assets import (
    BodyRig,
    FaceAsset,
    NUM_FACE_ALBEDO,
    NUM_FACE_EXPR,
    NUM_FACE_SHAPE,
    generate_synthetic_rig,
    load_asset,
    save_bundle,
)
from .body_model import Pose, pose_body
from .errors import InvalidArgumentError, InvalidInputError, NumericalError, ParseError, SchemaError
from .face_model import FaceParams, shade_face
from .geometry import Camera, TranslationProblem, metric_report, solve_global_translation
from .maps import decode_keypoints, load_maps
from .pipeline import PipelineConfig, report_json, run_synthetic_pipeline
from .rotations import matrix_to_axis_angle
from .textio import (
    format_decoded,
    format_key_values,
    read_key_values,
    read_keypoints,
    read_pose,
    read_vectors,
    write_obj,
    write_pose,
)

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


def _load_kind(path, cls, fname):
    path = Path(path)
    if path.is_dir():
        path = path / fname
    asset = load_asset(path)
    if not isinstance(asset, cls):
        raise SchemaError(f"{path}: expected a {cls.__name__}, found {type(asset).__name__}")
    return asset


def _fmt(x):
    return f"{x:.17g}"


def evaluate_files(pred_path, gt_path, mode="root"):
    """Metric report for two keypoint files; ``mode`` picks the per-joint list."""
    if mode not in ("root", "pa"):
        raise InvalidArgumentError(f"mode must be 'root' or 'pa', got {mode!r}")
    pred = read_keypoints(pred_path)
    gt = read_keypoints(gt_path)
    if pred.shape != gt.shape:
        raise InvalidArgumentError(f"{pred_path} has {len(pred)} joints but {gt_path} has {len(gt)}")
    rep = metric_report(pred, gt)
    if mode == "pa":
        rep.per_joint = rep.per_joint_pa
    return rep


def format_report(rep, mode):
    items = [
        ("mode", mode),
        ("mpjpe_mm", _fmt(rep.mpjpe)),
        ("mpjpe_pa_mm", _fmt(rep.mpjpe_pa)),
        ("per_joint_mm", " ".join(_fmt(x) for x in rep.per_joint)),
    ]
    return format_key_values(items)


# --------------------------------------------------------------------------
# subcommands


def cmd_synth(a):
    rig, face, spec = generate_synthetic_rig(a.seed, a.body_vertices, a.face_vertices)
    save_bundle(a.out, rig, face, spec, [f"# seed {a.seed}"])
    print(f"wrote {a.out}: {rig.n_vertices} body vertices, {rig.n_joints} joints, {face.n_vertices} face vertices")


def cmd_fk(a):
    rig = _load_kind(a.rig, BodyRig, "body.kba")
    aa, translation, beta, _ = read_pose(a.pose)
    beta = np.zeros(rig.shape_basis.shape[0]) if beta is None else beta
    posed = pose_body(rig, beta, Pose.from_axis_angle(aa, translation))
    comments = [f"joint {j} {p[0]:.9g} {p[1]:.9g} {p[2]:.9g}" for j, p in enumerate(posed.joint_positions)]
    write_obj(a.out, posed.vertices, rig.triangles, comments=comments)


def cmd_face(a):
    face = _load_kind(a.asset, FaceAsset, "face.kba")
    names = ("zeta", "epsilon", "gamma", "mu")
    vec = read_vectors(a.params, names, {"zeta": NUM_FACE_SHAPE, "epsilon": NUM_FACE_EXPR,
                                         "gamma": NUM_FACE_ALBEDO, "mu": 27})
    params = FaceParams(vec["zeta"], vec["epsilon"], vec["gamma"], vec["mu"].reshape(3, 9))
    shaded = shade_face(face, params)
    write_obj(a.out, shaded.vertices, face.triangles, np.clip(shaded.radiosity, 0.0, 1.0))


def cmd_decode(a):
    decoded = decode_keypoints(load_maps(a.maps))
    Path(a.out).write_text(format_decoded(decoded))
    if decoded.missing.any():
        logging.warning("all-zero keypoint-maps for joints %s", np.flatnonzero(decoded.missing).tolist())


def _ik_config(a):
    cfg = ik.IKTrainConfig()
    types = {k: type(v) for k, v in vars(cfg).items()}
    kw = {}
    for key, (value, no) in (read_key_values(a.config).items() if a.config else ()):
        if key not in types:
            raise ParseError(f"unknown key {key!r}", a.config, no)
        t = types[key]
        try:
            kw[key] = tuple(float(x) for x in value.split()) if t is tuple else t(value)
        except ValueError as e:
            raise ParseError(f"bad value for {key}: {e}", a.config, no) from e
    for key in ("epochs", "part"):
        if getattr(a, key) is not None:
            kw[key] = getattr(a, key)
    kw["seed"] = a.seed
    return ik.IKTrainConfig(**kw)


def cmd_train_ik(a):
    rig = _load_kind(a.rig, BodyRig, "body.kba")
    cfg = _ik_config(a)
    data = ik.generate_ik_training_set(rig, a.n, a.seed, cfg)
    params, log = ik.train_iknet(rig, data, cfg)
    ik.save_params(params, a.out)
    if a.log:
        Path(a.log).write_text("".join(f"{e} {_fmt(x)}\n" for e, x in enumerate(log.epoch_loss)))
    if log.epoch_loss:
        print(f"final training loss {log.epoch_loss[-1]:.6g}")


def cmd_ik(a):
    params = ik.load_params(a.params)
    kp = read_keypoints(a.keypoints)
    part = ik.PARTS[params.part]
    if len(kp) != len(part.joints):
        raise InvalidArgumentError(f"{a.keypoints}: {params.part} network needs {len(part.joints)} joints, got {len(kp)}")
    R, beta, alpha = ik.iknet_forward(params, kp - kp[0])
    write_pose(a.out, matrix_to_axis_angle(ik.full_rotations(params, R)), None, beta, alpha)


def cmd_solve_translation(a):
    cam = Camera.from_params(a.fx, a.fy, a.cx, a.cy, a.skew)
    prob = TranslationProblem(np.array(a.parent), np.array(a.child), a.parent_depth, a.child_depth, a.bone_length, cam)
    sol = solve_global_translation(prob)
    text = format_key_values([
        ("candidates", " ".join(_fmt(z) for z in sol.candidates)),
        ("admissible", " ".join(_fmt(z) for z in sol.admissible)),
        ("z_parent", _fmt(sol.z_parent)),
        ("translation", " ".join(_fmt(x) for x in sol.translation)),
    ])
    if a.out:
        Path(a.out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_eval(a):
    rep = evaluate_files(a.pred, a.gt, a.mode)
    text = format_report(rep, a.mode)
    if a.report:
        Path(a.report).write_text(text)
    sel = rep.mpjpe_pa if a.mode == "pa" else rep.mpjpe
    print(f"MPJPE ({a.mode}) {sel:.1f} mm")


def cmd_pipeline(a):
    overrides = {"seed": a.seed, "out_dir": a.out}
    cfg = PipelineConfig.from_file(a.config, **overrides) if a.config else PipelineConfig(
        **{k: v for k, v in overrides.items() if v is not None})
    text = report_json(run_synthetic_pipeline(cfg))
    if a.report:
        Path(a.report).write_text(text)
    elif cfg.out_dir:
        (Path(cfg.out_dir) / "report.json").write_text(text)
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# argument parsing


def build_parser():
    p = argparse.ArgumentParser(prog="kinebody", description="Synthetic body, hand and face capture toolkit.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="generate a synthetic asset bundle")
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--body-vertices", type=int, default=520)
    s.add_argument("--face-vertices", type=int, default=96)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("fk", help="pose the body mesh (OBJ output, joints as comments)")
    s.add_argument("--rig", required=True, help="body.kba or a bundle directory")
    s.add_argument("--pose", required=True, help="pose text file")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_fk)

    s = sub.add_parser("face", help="shade the face model (OBJ with vertex colors)")
    s.add_argument("--asset", required=True, help="face.kba or a bundle directory")
    s.add_argument("--params", required=True, help="key-value file with zeta, epsilon, gamma, mu")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_face)

    s = sub.add_parser("decode", help="decode keypoints from a map container")
    s.add_argument("--maps", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_decode)

    s = sub.add_parser("train-ik", help="train an IK network on synthetic poses")
    s.add_argument("--rig", required=True)
    s.add_argument("--n", type=int, default=20000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--epochs", type=int)
    s.add_argument("--part", choices=sorted(ik.PARTS))
    s.add_argument("--config", help="key-value file overriding training settings")
    s.add_argument("--log", help="write per-epoch training loss here")
    s.set_defaults(func=cmd_train_ik)

    s = sub.add_parser("ik", help="run a trained IK network on keypoints")
    s.add_argument("--params", required=True)
    s.add_argument("--keypoints", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_ik)

    s = sub.add_parser("solve-translation", help="parent depth from one bone of known length")
    s.add_argument("--parent", type=float, nargs=2, required=True, metavar=("U", "V"))
    s.add_argument("--child", type=float, nargs=2, required=True, metavar=("U", "V"))
    s.add_argument("--parent-depth", type=float, required=True, help="root-relative, meters")
    s.add_argument("--child-depth", type=float, required=True)
    s.add_argument("--bone-length", type=float, required=True)
    s.add_argument("--fx", type=float, required=True)
    s.add_argument("--fy", type=float, required=True)
    s.add_argument("--cx", type=float, default=0.0)
    s.add_argument("--cy", type=float, default=0.0)
    s.add_argument("--skew", type=float, default=0.0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_solve_translation)

    s = sub.add_parser("eval", help="MPJPE between two keypoint files")
    s.add_argument("--pred", required=True)
    s.add_argument("--gt", required=True)
    s.add_argument("--mode", choices=("root", "pa"), default="root")
    s.add_argument("--report")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("pipeline", help="run the synthetic end-to-end pipeline")
    s.add_argument("--seed", type=int)
    s.add_argument("--config", help="key-value pipeline config")
    s.add_argument("--out", help="directory for meshes, maps and the report")
    s.add_argument("--report", help="report path (default: OUT/report.json or stdout)")
    s.set_defaults(func=cmd_pipeline)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_INPUT if e.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except InvalidInputError as e:
        print(f"kinebody {args.command}: invalid input: {e}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as e:
        print(f"kinebody {args.command}: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as e:
        print(f"kinebody {args.command}: {e}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
