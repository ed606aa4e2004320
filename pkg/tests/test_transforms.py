"""Transform algebra tests.

Oracle: 4x4 homogeneous matrices built with Rodrigues' rotation formula and
combined with numpy matmul. The quaternion path must agree with plain matrix
arithmetic everywhere, to 1e-9.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asmb import transforms as tr
from asmb.transforms import (
    IDENTITY,
    RigidTransform,
    UnitQuat,
    Vec3,
    apply_transform,
    axis_angle_of,
    compose,
    crystal_chain,
    inverse,
    quat_axis_angle,
    quat_canonical,
    quat_from_axis_angle,
    quat_rotate,
    quat_slerp,
    relative_transform,
    transform_from_json,
    transform_from_matrix,
    transform_power,
    transform_to_json,
    transform_to_matrix,
    translation_of,
)
from conftest import random_quat, random_transform

TOL = 1e-9


# -- oracle -------------------------------------------------------------------

def rodrigues_matrix(axis, radians):
    """Independent rotation-matrix construction (no quaternions involved)."""
    u = np.asarray(axis, dtype=float)
    u = u / np.linalg.norm(u)
    k = np.array([
        [0.0, -u[2], u[1]],
        [u[2], 0.0, -u[0]],
        [-u[1], u[0], 0.0],
    ])
    return np.eye(3) + math.sin(radians) * k + (1.0 - math.cos(radians)) * (k @ k)


def homogeneous(rot3, translation):
    m = np.eye(4)
    m[:3, :3] = rot3
    m[:3, 3] = translation
    return m


def as_matrix(t: RigidTransform) -> np.ndarray:
    return np.array(transform_to_matrix(t))


def assert_matrix_close(actual, expected, tol=TOL):
    assert np.max(np.abs(np.asarray(actual) - np.asarray(expected))) <= tol


# -- quaternion basics ----------------------------------------------------------

def test_canonical_sign_flips_negative_w():
    assert quat_canonical(-1.0, 0.0, 0.0, 0.0) == (1.0, 0.0, 0.0, 0.0)


def test_canonical_sign_zero_w_uses_first_nonzero_component():
    q = quat_canonical(0.0, -1.0, 0.0, 0.0)
    assert q == (0.0, 1.0, 0.0, 0.0)
    q = quat_canonical(0.0, 0.0, -0.6, 0.8)
    assert q.y == pytest.approx(0.6)
    assert q.z == pytest.approx(-0.8)


def test_canonical_rejects_zero_quaternion():
    with pytest.raises(ValueError):
        quat_canonical(0.0, 0.0, 0.0, 0.0)


def test_rotation_action_matches_rodrigues(rng):
    for _ in range(100):
        axis = Vec3(rng.gauss(0, 1), rng.gauss(0, 1), rng.gauss(0, 1))
        if tr.vnorm(axis) < 1e-3:
            continue
        angle = rng.uniform(-2.0 * math.pi, 2.0 * math.pi)
        q = quat_from_axis_angle(axis, angle)
        m = rodrigues_matrix(axis, angle)
        v = np.array([rng.uniform(-3, 3) for _ in range(3)])
        expected = m @ v
        actual = quat_rotate(q, Vec3(*v))
        assert np.max(np.abs(np.array(actual) - expected)) <= TOL


def test_axis_angle_round_trip():
    axis = Vec3(0.0, 0.0, 1.0)
    q = quat_from_axis_angle(axis, math.pi / 2)
    got_axis, got_angle = quat_axis_angle(q)
    assert got_angle == pytest.approx(math.pi / 2, abs=TOL)
    assert np.allclose(got_axis, axis, atol=TOL)


def test_axis_angle_reports_shortest_direction(rng):
    # angles beyond pi come back as the equivalent short rotation
    q = quat_from_axis_angle(Vec3(0, 1, 0), 1.5 * math.pi)
    axis, angle = quat_axis_angle(q)
    assert angle == pytest.approx(0.5 * math.pi, abs=TOL)
    assert np.allclose(axis, (0.0, -1.0, 0.0), atol=TOL)


def test_slerp_midpoint_is_half_rotation():
    qa = tr.QUAT_IDENTITY
    qb = quat_from_axis_angle(Vec3(0, 0, 1), math.pi / 2)
    mid = quat_slerp(qa, qb, 0.5)
    expected = quat_from_axis_angle(Vec3(0, 0, 1), math.pi / 4)
    assert np.allclose(mid, expected, atol=TOL)


def test_slerp_endpoints_exact(rng):
    for _ in range(20):
        qa, qb = random_quat(rng), random_quat(rng)
        assert quat_slerp(qa, qb, 0.0) == qa
        assert quat_slerp(qa, qb, 1.0) == qb


def test_slerp_takes_shortest_arc():
    qa = quat_from_axis_angle(Vec3(0, 0, 1), 0.1)
    qb = quat_from_axis_angle(Vec3(0, 0, 1), 0.3)
    # same rotation, opposite sign: slerp must not take the long way around
    qb_flipped = UnitQuat(-qb.w, -qb.x, -qb.y, -qb.z)
    mid = quat_slerp(qa, qb_flipped, 0.5)
    expected = quat_from_axis_angle(Vec3(0, 0, 1), 0.2)
    assert np.allclose(mid, expected, atol=1e-7)


# -- compose / inverse / relative ------------------------------------------------

def test_compose_applies_right_operand_first():
    t = compose(axis_angle_of(Vec3(0, 0, 1), math.pi / 2), translation_of(1, 0, 0))
    # frozen: rotating the translated frame lands the origin's image at (0,1,0)
    assert np.allclose(t.translation, (0.0, 1.0, 0.0), atol=TOL)
    expected_rot = quat_from_axis_angle(Vec3(0, 0, 1), math.pi / 2)
    assert np.allclose(t.rotation, expected_rot, atol=TOL)
    # oracle agrees
    m = homogeneous(rodrigues_matrix((0, 0, 1), math.pi / 2), (0, 0, 0)) @ homogeneous(
        np.eye(3), (1, 0, 0)
    )
    assert_matrix_close(as_matrix(t), m)


def test_compose_matches_matrix_product(rng):
    for _ in range(100):
        a, b = random_transform(rng), random_transform(rng)
        assert_matrix_close(as_matrix(compose(a, b)), as_matrix(a) @ as_matrix(b), 1e-9)


def test_apply_matches_matrix_action(rng):
    for _ in range(50):
        t = random_transform(rng)
        v = np.array([rng.uniform(-4, 4) for _ in range(3)])
        expected = (as_matrix(t) @ np.append(v, 1.0))[:3]
        assert np.max(np.abs(np.array(apply_transform(t, Vec3(*v))) - expected)) <= TOL


def test_inverse_round_trip(rng):
    for _ in range(100):
        t = random_transform(rng)
        assert tr.transforms_close(compose(t, inverse(t)), IDENTITY, TOL)
        assert tr.transforms_close(compose(inverse(t), t), IDENTITY, TOL)


def test_relative_transform_carries_a_onto_b(rng):
    for _ in range(100):
        a, b = random_transform(rng), random_transform(rng)
        rel = relative_transform(a, b)
        assert tr.transforms_close(compose(a, rel), b, TOL)


# -- power / chain ----------------------------------------------------------------

def test_power_zero_is_identity():
    step = compose(translation_of(0, 0, 1.5), axis_angle_of(Vec3(0, 0, 1), math.radians(10)))
    assert transform_power(step, 0) == IDENTITY


def test_power_matches_matrix_power(rng):
    for _ in range(30):
        t = random_transform(rng, span=2.0)
        k = rng.randrange(0, 9)
        assert_matrix_close(
            as_matrix(transform_power(t, k)),
            np.linalg.matrix_power(as_matrix(t), k),
            1e-9,
        )


def test_power_rejects_negative():
    with pytest.raises(ValueError):
        transform_power(IDENTITY, -1)


def test_chain_incremental_equals_power_form(rng):
    for _ in range(50):
        t_a = random_transform(rng)
        t_ab = random_transform(rng, span=1.5)
        n = rng.randrange(1, 20)
        chain = crystal_chain(t_a, t_ab, n)
        assert len(chain) == n
        for i, member in enumerate(chain):
            want = compose(t_a, transform_power(t_ab, i))
            assert tr.transforms_close(member, want, TOL)


def test_quarter_turn_helix_realigns_every_fourth_member():
    step = RigidTransform(
        quat_from_axis_angle(Vec3(0, 0, 1), math.pi / 2), Vec3(0.0, 0.0, 1.0)
    )
    chain = crystal_chain(IDENTITY, step, 9)
    # frozen: member 5 sits at z=4 with identity rotation
    member5 = chain[4]
    assert np.allclose(member5.rotation, (1.0, 0.0, 0.0, 0.0), atol=TOL)
    assert np.allclose(member5.translation, (0.0, 0.0, 4.0), atol=TOL)
    for i in (0, 4, 8):
        assert np.allclose(chain[i].rotation, (1.0, 0.0, 0.0, 0.0), atol=TOL)


def test_chain_rejects_empty():
    with pytest.raises(ValueError):
        crystal_chain(IDENTITY, IDENTITY, 0)


# -- matrices ---------------------------------------------------------------------

def test_matrix_round_trip(rng):
    for _ in range(50):
        t = random_transform(rng)
        back = transform_from_matrix(transform_to_matrix(t))
        assert tr.transforms_close(back, t, 1e-9)


def test_from_matrix_rejects_scaled():
    m = [[2.0, 0, 0, 0], [0, 2.0, 0, 0], [0, 0, 2.0, 0], [0, 0, 0, 1.0]]
    with pytest.raises(ValueError):
        transform_from_matrix(m)


def test_from_matrix_rejects_reflection():
    m = [[-1.0, 0, 0, 0], [0, 1.0, 0, 0], [0, 0, 1.0, 0], [0, 0, 0, 1.0]]
    with pytest.raises(ValueError):
        transform_from_matrix(m)


# -- serialization ------------------------------------------------------------------

def test_json_round_trip_is_exact(rng):
    import json

    for _ in range(50):
        t = random_transform(rng)
        text = json.dumps(transform_to_json(t))
        back = transform_from_json(json.loads(text))
        assert back == t  # bit-exact: repr floats round-trip


def test_json_shape():
    data = transform_to_json(IDENTITY)
    assert data == {"rotation": [1.0, 0.0, 0.0, 0.0], "translation": [0.0, 0.0, 0.0]}


# -- property tests -----------------------------------------------------------------

finite = st.floats(-1.0, 1.0, allow_nan=False)
coord = st.floats(-50.0, 50.0, allow_nan=False, allow_infinity=False)


@st.composite
def quats(draw):
    parts = [draw(finite) for _ in range(4)]
    norm = math.sqrt(sum(p * p for p in parts))
    if norm < 1e-3:
        parts[0] = 1.0
    return quat_canonical(*parts)


@st.composite
def rigid_transforms(draw):
    return RigidTransform(draw(quats()), Vec3(draw(coord), draw(coord), draw(coord)))


@given(rigid_transforms(), rigid_transforms(), rigid_transforms())
@settings(max_examples=200, deadline=None)
def test_property_compose_associative(a, b, c):
    left = compose(compose(a, b), c)
    right = compose(a, compose(b, c))
    assert tr.transforms_close(left, right, 1e-7)


@given(rigid_transforms(), rigid_transforms())
@settings(max_examples=200, deadline=None)
def test_property_rotation_stays_unit_and_canonical(a, b):
    q = compose(a, b).rotation
    assert abs(math.sqrt(sum(c * c for c in q)) - 1.0) <= TOL
    assert q.w >= 0.0
    if q.w == 0.0:
        first = next((c for c in (q.x, q.y, q.z) if c != 0.0), 0.0)
        assert first >= 0.0


@given(rigid_transforms())
@settings(max_examples=200, deadline=None)
def test_property_inverse_cancels(t):
    assert tr.transforms_close(compose(t, inverse(t)), IDENTITY, 1e-7)


@given(rigid_transforms(), st.integers(0, 12))
@settings(max_examples=100, deadline=None)
def test_property_power_is_repeated_compose(t, k):
    want = IDENTITY
    for _ in range(k):
        want = compose(want, t)
    assert tr.transforms_close(transform_power(t, k), want, 1e-9)
