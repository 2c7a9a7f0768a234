import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kinebody.assets import HEAD_JOINT
from kinebody.body_model import Pose, pose_body
from kinebody.errors import DegenerateInputError, DimensionMismatchError, InvalidArgumentError
from kinebody.face_model import (
    FaceParams,
    face_geometry,
    face_reflectance,
    merge_face_body,
    place_face,
    sh_basis,
    sh_rotation,
    sh_shade,
    shade_face,
    vertex_normals,
)
from kinebody.rotations import random_rotations, rotation_about


def sh_oracle(n):
    """Real SH bands 0-2 written out from the spherical-coordinate definitions."""
    x, y, z = n
    theta = math.acos(max(-1.0, min(1.0, z)))
    phi = math.atan2(y, x)
    st_, ct = math.sin(theta), math.cos(theta)
    k1 = math.sqrt(3 / (4 * math.pi))
    k2 = math.sqrt(15 / (4 * math.pi))
    return np.array([
        1 / (2 * math.sqrt(math.pi)),
        k1 * st_ * math.sin(phi), k1 * ct, k1 * st_ * math.cos(phi),
        k2 * st_ * st_ * math.sin(phi) * math.cos(phi),
        k2 * st_ * ct * math.sin(phi),
        math.sqrt(5 / (16 * math.pi)) * (3 * ct * ct - 1),
        k2 * st_ * ct * math.cos(phi),
        0.5 * k2 * st_ * st_ * math.cos(2 * phi),
    ])


def unit(rng, n):
    v = rng.standard_normal((n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def test_zero_params_give_mean_face(face):
    assert np.array_equal(face_geometry(face, np.zeros(80), np.zeros(64)), face.mean_face)


def test_expression_unit_vector(face):
    eps = np.zeros(64)
    eps[5] = 1.0
    assert np.allclose(face_geometry(face, np.zeros(80), eps) - face.mean_face, face.expression_basis[5], atol=1e-15)


def test_geometry_matches_summation(face, rng):
    z, e = rng.standard_normal(80), rng.standard_normal(64)
    expect = face.mean_face.copy()
    for k in range(80):
        expect += z[k] * face.shape_basis[k]
    for k in range(64):
        expect += e[k] * face.expression_basis[k]
    assert np.allclose(face_geometry(face, z, e), expect, atol=1e-12)


def test_reflectance_clamp_and_raw(face, rng):
    assert np.array_equal(face_reflectance(face, np.zeros(80)), face.mean_reflectance)
    g = rng.standard_normal(80) * 5
    raw = face_reflectance(face, g, clamp=False)
    expect = face.mean_reflectance + np.einsum("k,knc->nc", g, face.reflectance_basis)
    assert np.allclose(raw, expect, atol=1e-12)
    clamped = face_reflectance(face, g)
    assert clamped.min() >= 0 and clamped.max() <= 1
    assert np.array_equal(clamped[raw > 1], np.ones(np.sum(raw > 1)))


def test_quad_normals_point_up():
    v = np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0.0]])
    t = np.array([[0, 1, 2], [0, 2, 3]])
    assert np.allclose(vertex_normals(v, t), [[0, 0, 1]] * 4)


def test_tetrahedron_normals_point_outward():
    v = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1.0]])
    t = np.array([[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]])
    n = vertex_normals(v, t)
    assert np.allclose(n, v / np.linalg.norm(v, axis=1, keepdims=True), atol=1e-15)


def _octasphere(levels):
    v = [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1.0]]
    t = [[0, 2, 4], [2, 1, 4], [1, 3, 4], [3, 0, 4], [2, 0, 5], [1, 2, 5], [3, 1, 5], [0, 3, 5]]
    v = [np.array(p) for p in v]
    for _ in range(levels):
        mid, nt = {}, []

        def m(a, b):
            key = (min(a, b), max(a, b))
            if key not in mid:
                p = v[a] + v[b]
                v.append(p / np.linalg.norm(p))
                mid[key] = len(v) - 1
            return mid[key]

        for a, b, c in t:
            ab, bc, ca = m(a, b), m(b, c), m(c, a)
            nt += [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]
        t = nt
    return np.array(v), np.array(t)


def test_ellipsoid_normals_point_outward():
    v, t = _octasphere(3)
    v = v * np.array([1.0, 0.8, 1.3])
    n = vertex_normals(v, t)
    assert np.all(np.sum(n * v, axis=1) > 0.5 * np.linalg.norm(v, axis=1))


def test_isolated_vertex_reported():
    v = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [5, 5, 5.0]])
    with pytest.raises(DegenerateInputError, match=r"\[3\]"):
        vertex_normals(v, np.array([[0, 1, 2]]))


def test_sh_basis_matches_spherical_definitions(rng):
    n = unit(rng, 50)
    H = sh_basis(n)
    for i in range(50):
        assert np.allclose(H[i], sh_oracle(n[i]), atol=1e-13)


def test_sh_basis_orthonormal_by_quadrature():
    # Gauss-Legendre in cos(theta) times uniform phi integrates degree <= 4 exactly
    xs, ws = np.polynomial.legendre.leggauss(8)
    phis = np.linspace(0, 2 * np.pi, 16, endpoint=False)
    ct, ph = np.meshgrid(xs, phis, indexing="ij")
    st_ = np.sqrt(1 - ct**2)
    n = np.stack([st_ * np.cos(ph), st_ * np.sin(ph), ct], -1).reshape(-1, 3)
    w = (ws[:, None] * np.full(16, 2 * np.pi / 16)).reshape(-1)
    H = sh_basis(n)
    assert np.allclose((H * w[:, None]).T @ H, np.eye(9), atol=1e-13)


def test_zero_mu_gives_black():
    n = np.array([[0, 0, 1.0], [1, 0, 0]])
    assert np.array_equal(sh_shade(np.full((2, 3), 0.5), n, np.zeros((3, 9))), np.zeros((2, 3)))


def test_band_zero_only(rng):
    n = unit(rng, 10)
    r = rng.random((10, 3))
    mu = np.zeros((3, 9))
    mu[:, 0] = [0.7, 1.1, 2.0]
    expected = r * np.array([0.7, 1.1, 2.0]) * sh_oracle(np.array([0, 0, 1.0]))[0]
    assert np.allclose(sh_shade(r, n, mu), expected, atol=1e-15)


def test_non_unit_normals_rejected():
    with pytest.raises(InvalidArgumentError):
        sh_shade(np.ones((1, 3)), np.array([[0, 0, 1.01]]), np.zeros((3, 9)))


def test_shade_shapes():
    with pytest.raises(DimensionMismatchError):
        sh_shade(np.ones((2, 3)), np.array([[0, 0, 1.0]]), np.zeros((3, 9)))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_sh_rotation_equivariance(seed):
    rng = np.random.default_rng(seed)
    R = random_rotations(rng, 1)[0]
    n = unit(rng, 40)
    r = rng.random((40, 3))
    mu = rng.standard_normal((3, 9))
    before = sh_shade(r, n, mu)
    after = sh_shade(r, n @ R.T, mu @ sh_rotation(R))
    assert np.max(np.abs(before - after)) < 1e-12


def test_sh_rotation_is_block_orthogonal(rng):
    M = sh_rotation(random_rotations(rng, 1)[0])
    assert np.allclose(M @ M.T, np.eye(9), atol=1e-12)
    assert M[0, 0] == pytest.approx(1.0, abs=1e-14)
    assert np.all(M[1:4, 4:] == 0) and np.all(M[0, 1:] == 0)


def test_shading_linear_in_mu_and_reflectance(rng):
    n = unit(rng, 20)
    r1, r2 = rng.random((20, 3)), rng.random((20, 3))
    m1, m2 = rng.standard_normal((3, 9)), rng.standard_normal((3, 9))
    a, b = 0.3, -1.7
    assert np.allclose(sh_shade(r1, n, a * m1 + b * m2), a * sh_shade(r1, n, m1) + b * sh_shade(r1, n, m2), atol=1e-14)
    assert np.allclose(sh_shade(a * r1 + b * r2, n, m1), a * sh_shade(r1, n, m1) + b * sh_shade(r2, n, m1), atol=1e-14)


def test_face_params_validate():
    with pytest.raises(DimensionMismatchError):
        FaceParams(np.zeros(79), np.zeros(64), np.zeros(80), np.zeros((3, 9)))
    with pytest.raises(InvalidArgumentError):
        FaceParams(np.full(80, np.nan), np.zeros(64), np.zeros(80), np.zeros((3, 9)))


def test_place_face_identity(rig, merge_spec):
    from dataclasses import replace

    spec = replace(merge_spec, rotation=np.eye(3), translation=np.zeros(3), scale=1.0)
    posed = pose_body(rig, np.zeros(16), Pose.identity())
    v = np.random.default_rng(0).standard_normal((5, 3))
    assert np.allclose(place_face(v, spec, posed), v, atol=1e-15)


def test_neck_quarter_turn_is_rigid(rig, face, merge_spec):
    rest = pose_body(rig, np.zeros(16), Pose.identity())
    R = np.broadcast_to(np.eye(3), (52, 3, 3)).copy()
    Q = rotation_about([0, 0, 1], np.pi / 2)
    R[HEAD_JOINT] = Q
    posed = pose_body(rig, np.zeros(16), Pose.from_matrices(R))
    before = place_face(face.mean_face, merge_spec, rest)
    after = place_face(face.mean_face, merge_spec, posed)
    neck = rig.rest_joint_positions[HEAD_JOINT]
    oracle = (before - neck) @ Q.T + neck
    assert np.max(np.abs(after - oracle)) < 1e-12


def test_head_rotation_override_matches_pose(rig, face, merge_spec, rng):
    R = random_rotations(rng, 52)
    posed = pose_body(rig, np.zeros(16), Pose.from_matrices(R))
    Q = random_rotations(rng, 1)[0]
    R2 = R.copy()
    R2[HEAD_JOINT] = Q
    posed2 = pose_body(rig, np.zeros(16), Pose.from_matrices(R2))
    a = place_face(face.mean_face, merge_spec, posed, head_rotation=Q, parents=rig.parent_index)
    b = place_face(face.mean_face, merge_spec, posed2)
    assert np.allclose(a, b, atol=1e-12)


def test_merge_keeps_outside_vertices_bitwise(rig, face, merge_spec, rng):
    posed = pose_body(rig, rng.standard_normal(16) * 0.5, Pose.from_matrices(random_rotations(rng, 52)))
    merged = merge_face_body(posed, face.mean_face, merge_spec, rig=rig, face=face)
    outside = np.setdiff1d(np.arange(rig.n_vertices), merge_spec.face_region_ids)
    assert np.array_equal(merged.body_ids, outside)
    assert np.array_equal(merged.vertices[: len(outside)], posed.vertices[outside])
    assert merged.vertices.shape[0] - merged.face_offset == face.n_vertices
    assert len(merged.stitch_triangles) == len(face.boundary_loop) + len(merge_spec.body_boundary_loop)
    assert merged.triangles.max() < len(merged.vertices)


def test_merged_mesh_is_watertight_around_seam(rig, face, merge_spec):
    posed = pose_body(rig, np.zeros(16), Pose.identity())
    merged = merge_face_body(posed, face.mean_face, merge_spec, rig=rig, face=face)
    count = {}
    for t in merged.triangles:
        for a, b in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
            key = (min(a, b), max(a, b))
            count[key] = count.get(key, 0) + 1
    face_loop = face.boundary_loop + merged.face_offset
    for a, b in zip(face_loop, np.roll(face_loop, -1)):
        assert count[(min(a, b), max(a, b))] == 2


def test_shade_face_end_to_end(face, rng):
    p = FaceParams(rng.standard_normal(80) * 0.1, rng.standard_normal(64) * 0.1, rng.standard_normal(80) * 0.1,
                   rng.standard_normal((3, 9)))
    out = shade_face(face, p)
    assert out.radiosity.shape == (face.n_vertices, 3)
    assert np.allclose(np.linalg.norm(out.normals, axis=1), 1.0)
