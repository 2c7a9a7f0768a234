"""Synthetic whole-body capture toolkit: skinned body and face models,
heat-map decoding, learned inverse kinematics and camera geometry."""

from .assets import BodyRig, FaceAsset, MergeSpec, generate_synthetic_rig, load_asset, load_bundle, save_bundle
from .body_model import Pose, PosedBody, forward_kinematics, lbs, pose_body, regress_keypoints, shape_blend
from .errors import InvalidInputError, KinebodyError, NumericalError
from .face_model import FaceParams, merge_face_body, sh_rotation, sh_shade, shade_face
from .geometry import Camera, TranslationProblem, mpjpe, procrustes_align, solve_global_translation
from .ik import IKTrainConfig, generate_ik_training_set, iknet_forward, train_iknet
from .maps import MapStack, build_gt_maps, decode_keypoints, localize_window
from .rotations import rot6d_to_matrix

__version__ = "0.1.0"
