"""Numba vs numpy timings for the hot kernels.

    python benchmarks/bench_kernels.py [--repeat N]

Both flavors are called directly, so KINEBODY_DISABLE_NUMBA has no effect
here.  Outputs are checked for agreement before timing.
"""

import argparse
import timeit

import numpy as np

from kinebody import kernels
from kinebody.assets import generate_synthetic_rig
from kinebody.body_model import Pose, forward_kinematics, rest_relative
from kinebody.rotations import random_rotations


def cases(rng):
    rig, _, _ = generate_synthetic_rig(0, n_body_vertices=6890)
    G, _ = forward_kinematics(rig, Pose.from_matrices(random_rotations(rng, rig.n_joints)))
    A = rest_relative(G, rig.rest_joint_positions)
    heat = rng.random((64, 64)) ** 8
    feats = rng.standard_normal((64, 46, 46))
    ys = np.linspace(3.2, 30.7, 32)
    xs = np.linspace(1.1, 40.9, 32)
    return {
        "lbs 6890v x 52j": (kernels.lbs_apply_numpy, kernels.lbs_apply_numba,
                            (rig.mean_vertices, rig.skinning_weights, A)),
        "window 64x64 t=0.9": (kernels.window_search_numpy, kernels.window_search_numba, (heat, 0.9, 1)),
        "bilinear 64ch 32x32": (kernels.bilinear_sample_numpy, kernels.bilinear_sample_numba, (feats, ys, xs)),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'kernel':<22}{'numpy ms':>10}{'numba ms':>10}{'speedup':>9}")
    for name, (f_np, f_nb, call) in cases(rng).items():
        a, b = f_np(*call), f_nb(*call)  # also triggers compilation
        assert np.allclose(np.asarray(a, dtype=float), np.asarray(b, dtype=float), atol=1e-9), name
        t_np = min(timeit.repeat(lambda: f_np(*call), number=1, repeat=args.repeat)) * 1e3
        t_nb = min(timeit.repeat(lambda: f_nb(*call), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<22}{t_np:>10.3f}{t_nb:>10.3f}{t_np / t_nb:>8.1f}x")


if __name__ == "__main__":
    main()
