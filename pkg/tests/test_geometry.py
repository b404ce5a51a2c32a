import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ramec.errors import DegenerateGeometry, InvalidArgument
from ramec.geometry import (
    KAPPA_LOS,
    ChannelParams,
    antenna_gain,
    build_array,
    build_channels,
    channel_power,
    channel_vector,
    link_geometry,
    normalized_g0,
    path_loss,
    sample_small_scale,
    user_position,
)

angles = st.floats(0.0, np.pi)
unit_vectors = st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1)).filter(
    lambda v: np.linalg.norm(v) > 1e-3
).map(lambda v: np.asarray(v) / np.linalg.norm(v))


def test_single_element_array_is_origin():
    a = build_array(1, 1, 0.0625, np.pi / 3)
    assert a.positions.shape == (1, 3)
    np.testing.assert_array_equal(a.positions[0], [0, 0, 0])


def test_three_by_three_corners():
    a = build_array(3, 3, 0.0625, np.pi / 3)
    assert a.n_antennas == 9
    assert any(np.allclose(p, 0) for p in a.positions)
    corners = {tuple(np.round(p, 12)) for p in a.positions if abs(p[0]) > 0.06 and abs(p[1]) > 0.06}
    assert corners == {(sx * 0.0625, sy * 0.0625, 0.0) for sx in (-1, 1) for sy in (-1, 1)}


def test_even_axis_centers_at_half_offsets():
    a = build_array(2, 1, 1.0, np.pi / 3)
    np.testing.assert_allclose(sorted(a.positions[:, 0]), [-0.5, 0.5])
    np.testing.assert_array_equal(a.positions[:, 1:], 0)


@given(st.integers(1, 6), st.integers(1, 6), st.floats(0.01, 2.0))
def test_array_centered_and_planar(kx, ky, spacing):
    a = build_array(kx, ky, spacing, np.pi / 4)
    assert len(a.positions) == kx * ky
    assert np.all(a.positions[:, 2] == 0)
    np.testing.assert_allclose(a.positions.mean(axis=0), 0, atol=1e-12)
    # symmetric: the negated set equals the set
    pts = {tuple(np.round(p, 9)) for p in a.positions}
    assert pts == {tuple(np.round(-p, 9) + 0.0) for p in a.positions}


@pytest.mark.parametrize("kx,ky,spacing", [(0, 1, 1.0), (1, 0, 1.0), (2, 2, 0.0), (2, 2, -1.0)])
def test_build_array_rejects_bad_input(kx, ky, spacing):
    with pytest.raises(InvalidArgument):
        build_array(kx, ky, spacing, np.pi / 3)


def test_build_array_rejects_bad_rotation_limit():
    with pytest.raises(InvalidArgument):
        build_array(2, 2, 1.0, np.pi)


@pytest.mark.parametrize(
    "r,zen,az,expected",
    [
        (10, 0, 0, [0, 0, 10]),
        (10, np.pi / 2, 0, [10, 0, 0]),
        (2, np.pi / 4, np.pi / 4, [1, 1, np.sqrt(2)]),
    ],
)
def test_user_position_examples(r, zen, az, expected):
    u = user_position(r, zen, az)
    np.testing.assert_allclose(u.position, expected, atol=1e-12)
    assert u.distance_from_origin == r


@given(st.floats(0.1, 1e3), angles, st.floats(-np.pi, np.pi))
def test_user_position_round_trip(r, zen, az):
    u = user_position(r, zen, az)
    x = [r * np.sin(zen) * np.cos(az), r * np.sin(zen) * np.sin(az), r * np.cos(zen)]
    np.testing.assert_allclose(u.position, x, rtol=1e-12, atol=1e-12 * r)
    assert np.linalg.norm(u.position) == pytest.approx(r, rel=1e-12)


def test_user_position_rejects_bad_values():
    with pytest.raises(InvalidArgument):
        user_position(0.0, 0.1, 0.1)
    with pytest.raises(InvalidArgument):
        user_position(1.0, 4.0, 0.1)
    with pytest.raises(InvalidArgument):
        user_position(1.0, 1.0, 2.0, full_azimuth=False)


@pytest.mark.parametrize(
    "user,ant,direction,dist",
    [
        ([0, 0, 10], [0, 0, 0], [0, 0, 1], 10),
        ([3, 0, 4], [0, 0, 0], [0.6, 0, 0.8], 5),
        ([1, 1, 1], [1, 1, 0], [0, 0, 1], 1),
    ],
)
def test_link_geometry_examples(user, ant, direction, dist):
    link = link_geometry(np.array(user, float), np.array(ant, float))
    np.testing.assert_allclose(link.direction, direction, atol=1e-15)
    assert link.distance == pytest.approx(dist, rel=1e-12)


def test_link_geometry_coincident_points():
    with pytest.raises(DegenerateGeometry):
        link_geometry(np.array([1.0, 2.0, 3.0]), np.array([1.0, 2.0, 3.0]))


@given(
    st.tuples(*[st.floats(-50, 50)] * 3), st.tuples(*[st.floats(-1, 1)] * 2)
)
def test_link_geometry_invariants(u, w):
    u = np.array(u)
    w = np.array([w[0], w[1], 0.0])
    if np.linalg.norm(u - w) < 1e-6:
        return
    link = link_geometry(u, w)
    assert np.linalg.norm(link.direction) == pytest.approx(1.0, abs=1e-12)
    assert link.distance == pytest.approx(np.linalg.norm(u - w), rel=1e-12)


def test_gain_examples():
    q = np.array([0.0, 0.6, 0.8])
    assert antenna_gain(q, q, 18.0, 4) == pytest.approx(18.0)
    assert antenna_gain(np.array([1.0, 0, 0]), np.array([0, 0, 1.0]), 18.0, 4) == 0.0
    f = np.array([0.0, 0.0, 1.0])
    d = np.array([np.sqrt(0.75), 0.0, 0.5])
    assert antenna_gain(f, d, 18.0, 4) == pytest.approx(18.0 / 256)


def test_gain_clamps_back_hemisphere():
    f = np.array([0.0, 0.0, 1.0])
    assert antenna_gain(f, -f, 10.0, 2) == 0.0


def test_gain_rejects_non_unit():
    with pytest.raises(InvalidArgument):
        antenna_gain(np.array([0, 0, 2.0]), np.array([0, 0, 1.0]), 1.0, 1)


@given(unit_vectors, unit_vectors, st.integers(1, 8))
def test_gain_bounded(f, q, p):
    g0 = normalized_g0(p)
    g = antenna_gain(f, q, g0, p)
    assert 0 <= g <= g0 * (1 + 1e-12)


@given(unit_vectors, unit_vectors, unit_vectors, st.floats(0, 2 * np.pi))
def test_gain_rotation_invariant(f, q, axis, angle):
    # Rodrigues rotation applied to both vectors
    k = axis
    kx = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    rot = np.eye(3) + np.sin(angle) * kx + (1 - np.cos(angle)) * kx @ kx
    a = antenna_gain(f, q, 5.0, 3)
    b = antenna_gain(rot @ f, rot @ q, 5.0, 3)
    assert b == pytest.approx(a, rel=1e-9, abs=1e-12)


def test_normalized_g0():
    assert normalized_g0(4) == 18.0
    assert normalized_g0(1) == 6.0


@pytest.mark.parametrize("d,alpha,expected", [(1, 2.8, 1.0), (10, 2, 1e-2), (2, 3, 1 / 8)])
def test_path_loss_examples(d, alpha, expected):
    a0 = 10 ** (-46.4 / 10)
    assert path_loss(d, a0, alpha) == pytest.approx(a0 * expected, rel=1e-14)


@given(st.floats(0.1, 1e3), st.floats(2, 6))
def test_path_loss_doubling(d, alpha):
    assert path_loss(d, 1.0, alpha) / path_loss(2 * d, 1.0, alpha) == pytest.approx(2**alpha, rel=1e-12)


def test_pure_los_coefficient():
    d, lam = 37.3, 0.125
    g = sample_small_scale(KAPPA_LOS, d, lam, np.random.default_rng(0))
    assert abs(g) == pytest.approx(1.0, abs=1e-12)
    assert np.angle(g) == pytest.approx(np.angle(np.exp(-2j * np.pi * d / lam)), abs=1e-9)


@pytest.mark.parametrize("kappa", [0.0, 1.0])
def test_small_scale_unit_power(kappa):
    rng = np.random.default_rng(7)
    d = rng.uniform(20, 60, 100_000)
    g = sample_small_scale(kappa, d, 0.125, rng)
    assert 0.98 <= np.mean(np.abs(g) ** 2) <= 1.02


def _channels(seed=0, p=4, positions=None, kx=3, ky=3):
    array = build_array(kx, ky, 0.0625, np.pi / 3)
    if positions is None:
        positions = np.array([[20.0, 5.0, 15.0], [-30.0, 10.0, 25.0], [3.0, -40.0, 12.0]])
    return array, build_channels(array, positions, ChannelParams(directivity=p), np.random.default_rng(seed))


def test_beta_amplitude_consistency():
    array, ch = _channels()
    prm = ch.params
    loss = path_loss(ch.distances, prm.ref_gain, prm.pathloss_exp)
    np.testing.assert_allclose(np.abs(ch.beta) ** 2, loss * prm.g0 * np.abs(ch.small_scale) ** 2, rtol=1e-10)


def test_channel_vector_aligned_gives_beta_magnitude():
    array, ch = _channels()
    for m in range(ch.n_users):
        h = channel_vector(ch.directions[:, m, :], ch, m)
        np.testing.assert_allclose(np.abs(h), np.abs(ch.beta[:, m]), rtol=1e-12)


def test_channel_vector_single_antenna_half_projection():
    array, ch = _channels(positions=np.array([[np.sqrt(0.75) * 10, 0.0, 5.0]]), kx=1, ky=1)
    h = channel_vector(np.array([[0.0, 0.0, 1.0]]), ch, 0)
    assert abs(h[0]) == pytest.approx(abs(ch.beta[0, 0]) / 16, rel=1e-12)


def test_channel_vector_perpendicular_is_zero():
    array, ch = _channels(positions=np.array([[10.0, 0.0, 0.0]]), kx=1, ky=1)
    h = channel_vector(np.array([[0.0, 0.0, 1.0]]), ch, 0)
    assert h[0] == 0


def test_channel_vector_dimension_mismatch():
    array, ch = _channels()
    with pytest.raises(InvalidArgument):
        channel_vector(np.tile([0.0, 0.0, 1.0], (4, 1)), ch, 0)


@given(st.integers(0, 1000), st.integers(1, 8))
def test_amplitude_consistency_any_pointing(seed, p):
    array, ch = _channels(seed, p)
    rng = np.random.default_rng(seed)
    f = rng.normal(size=(ch.n_antennas, 3))
    f /= np.linalg.norm(f, axis=1, keepdims=True)
    prm = ch.params
    loss = path_loss(ch.distances, prm.ref_gain, prm.pathloss_exp)
    for m in range(ch.n_users):
        h = channel_vector(f, ch, m)
        proj = np.maximum(0, np.sum(f * ch.directions[:, m], axis=1))
        expected = loss[:, m] * prm.g0 * proj ** (2 * p) * np.abs(ch.small_scale[:, m]) ** 2
        np.testing.assert_allclose(np.abs(h) ** 2, expected, rtol=1e-9, atol=1e-300)


@given(st.integers(0, 1000), st.integers(0, 8), st.floats(0.0, 0.99))
def test_power_monotone_in_single_projection(seed, k, shrink):
    array, ch = _channels(seed)
    m = 0
    q = ch.directions[k, m]
    f = ch.directions[:, m, :].copy()
    base = channel_power(f, ch)[m]
    # rotate column k away from q, lowering only its projection
    perp = np.cross(q, [0.0, 0.0, 1.0])
    perp /= np.linalg.norm(perp)
    c = shrink
    f[k] = c * q + np.sqrt(1 - c * c) * perp
    assert channel_power(f, ch)[m] <= base * (1 + 1e-12)


def test_channel_seeded_determinism():
    _, a = _channels(9)
    _, b = _channels(9)
    np.testing.assert_array_equal(a.beta, b.beta)
    np.testing.assert_array_equal(a.directions, b.directions)


def test_channel_records_fields():
    _, ch = _channels()
    rec = ch.to_records()
    assert len(rec) == ch.n_antennas * ch.n_users
    assert set(rec[0]) == {"k", "m", "distance", "direction", "beta_re", "beta_im"}


def test_channel_params_validation():
    with pytest.raises(InvalidArgument):
        ChannelParams(directivity=0)
    with pytest.raises(InvalidArgument):
        ChannelParams(pathloss_exp=1.5)
    with pytest.raises(InvalidArgument):
        ChannelParams(noise_power=0.0)
