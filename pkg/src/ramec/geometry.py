"""Array geometry, user placement and directional Rician channel synthesis.

All quantities are SI.  The amplitude convention is ``h = beta * max(0, f.q)**p``
with ``beta = sqrt(L(d) * G0) * g``, so the power pattern is ``G0 cos^{2p}``.
Links behind a boresight (``f.q <= 0``) carry no gain.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGeometry, InvalidArgument

UNIT_TOL = 1e-9
# Rician factors at or above this are treated as pure line of sight.
KAPPA_LOS = 1e12

E3 = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class ArrayGeometry:
    kx: int
    ky: int
    spacing: float
    positions: np.ndarray  # (K, 3)
    theta_max: float

    @property
    def n_antennas(self) -> int:
        return self.kx * self.ky


@dataclass(frozen=True)
class UserGeometry:
    position: np.ndarray
    distance_from_origin: float
    zenith: float
    azimuth: float


@dataclass(frozen=True)
class LinkGeometry:
    direction: np.ndarray
    distance: float


def normalized_g0(directivity: int) -> float:
    """Peak gain that makes ``G0 cos^{2p}`` radiate unit power over the forward hemisphere."""
    return 2.0 * (2 * directivity + 1)


@dataclass(frozen=True)
class ChannelParams:
    """Channel constants. ``pathloss_exp`` and ``rician_k`` may be per-user arrays."""

    directivity: int = 4
    g0: float | None = None
    ref_gain: float = 10 ** (-46.4 / 10)
    pathloss_exp: float | np.ndarray = 2.8
    rician_k: float | np.ndarray = 1.0
    wavelength: float = 0.125
    noise_power: float = 10 ** ((-100 - 30) / 10)

    def __post_init__(self):
        if int(self.directivity) != self.directivity or self.directivity < 1:
            raise InvalidArgument(f"directivity must be a positive integer, got {self.directivity}")
        if self.g0 is None:
            object.__setattr__(self, "g0", normalized_g0(int(self.directivity)))
        if self.g0 <= 0:
            raise InvalidArgument("g0 must be positive")
        if self.ref_gain <= 0:
            raise InvalidArgument("ref_gain must be positive")
        if np.any(np.asarray(self.pathloss_exp) < 2):
            raise InvalidArgument("pathloss_exp must be >= 2")
        if np.any(np.asarray(self.rician_k) < 0):
            raise InvalidArgument("rician_k must be >= 0")
        if self.wavelength <= 0 or self.noise_power <= 0:
            raise InvalidArgument("wavelength and noise_power must be positive")


@dataclass(frozen=True)
class ChannelSet:
    """Per-(antenna, user) link data; arrays are indexed ``[k, m]``."""

    directions: np.ndarray  # (K, M, 3) unit vectors antenna -> user
    distances: np.ndarray  # (K, M)
    small_scale: np.ndarray  # (K, M) complex
    beta: np.ndarray  # (K, M) complex
    params: ChannelParams = field(repr=False)

    @property
    def n_antennas(self) -> int:
        return self.distances.shape[0]

    @property
    def n_users(self) -> int:
        return self.distances.shape[1]

    def to_records(self) -> list[dict]:
        """Flat per-link records for JSON debug dumps."""
        out = []
        for k in range(self.n_antennas):
            for m in range(self.n_users):
                out.append(
                    {
                        "k": k,
                        "m": m,
                        "distance": float(self.distances[k, m]),
                        "direction": [float(v) for v in self.directions[k, m]],
                        "beta_re": float(self.beta[k, m].real),
                        "beta_im": float(self.beta[k, m].imag),
                    }
                )
        return out


def build_array(kx: int, ky: int, spacing: float, theta_max: float) -> ArrayGeometry:
    """Centered ``kx x ky`` UPA in the z = 0 plane."""
    if kx < 1 or ky < 1:
        raise InvalidArgument(f"array counts must be >= 1, got ({kx}, {ky})")
    if not spacing > 0:
        raise InvalidArgument(f"spacing must be positive, got {spacing}")
    # theta_max = 0 is allowed: it pins every element to broadside.
    if not 0 <= theta_max <= np.pi / 2 + 1e-15:
        raise InvalidArgument(f"theta_max must lie in [0, pi/2], got {theta_max}")
    ix = np.arange(kx) - (kx - 1) / 2
    iy = np.arange(ky) - (ky - 1) / 2
    gx, gy = np.meshgrid(ix, iy, indexing="ij")
    pos = np.stack([gx.ravel() * spacing, gy.ravel() * spacing, np.zeros(kx * ky)], axis=1)
    return ArrayGeometry(int(kx), int(ky), float(spacing), pos, float(theta_max))


def spherical_to_cartesian(r, zenith, azimuth):
    r, zenith, azimuth = np.broadcast_arrays(r, zenith, azimuth)
    return np.stack(
        [
            r * np.sin(zenith) * np.cos(azimuth),
            r * np.sin(zenith) * np.sin(azimuth),
            r * np.cos(zenith),
        ],
        axis=-1,
    )


def user_position(r: float, zenith: float, azimuth: float, *, full_azimuth: bool = True) -> UserGeometry:
    """Place a user from spherical coordinates about the array center.

    The azimuth is accepted over ``(-pi, pi]`` unless ``full_azimuth`` is False,
    in which case it must lie in ``[-pi/2, pi/2]``.
    """
    if not r > 0:
        raise InvalidArgument(f"distance must be positive, got {r}")
    if not 0 <= zenith <= np.pi:
        raise InvalidArgument(f"zenith must lie in [0, pi], got {zenith}")
    lim = np.pi if full_azimuth else np.pi / 2
    if not -lim <= azimuth <= lim:
        raise InvalidArgument(f"azimuth {azimuth} outside [-{lim}, {lim}]")
    pos = spherical_to_cartesian(float(r), float(zenith), float(azimuth))
    return UserGeometry(pos, float(r), float(zenith), float(azimuth))


def user_from_cartesian(position) -> UserGeometry:
    position = np.asarray(position, dtype=float)
    r = float(np.linalg.norm(position))
    if r == 0:
        raise DegenerateGeometry("user placed at the array origin")
    zenith = float(np.arccos(np.clip(position[2] / r, -1.0, 1.0)))
    azimuth = float(np.arctan2(position[1], position[0]))
    return UserGeometry(position, r, zenith, azimuth)


def link_geometry(user: UserGeometry | np.ndarray, antenna_pos) -> LinkGeometry:
    upos = user.position if isinstance(user, UserGeometry) else np.asarray(user, dtype=float)
    diff = upos - np.asarray(antenna_pos, dtype=float)
    d = float(np.linalg.norm(diff))
    if d == 0:
        raise DegenerateGeometry("user and antenna positions coincide")
    return LinkGeometry(diff / d, d)


def _check_unit(v, name):
    n = np.linalg.norm(v, axis=-1)
    if np.any(np.abs(n - 1) > UNIT_TOL):
        raise InvalidArgument(f"{name} must be unit norm (got norm {np.max(np.abs(n - 1)) + 1:.12g})")


def antenna_gain(boresight, direction, g0: float, directivity: int):
    """Power gain ``g0 * max(0, f.q)**(2p)``; broadcasts over leading axes."""
    boresight = np.asarray(boresight, dtype=float)
    direction = np.asarray(direction, dtype=float)
    _check_unit(boresight, "boresight")
    _check_unit(direction, "direction")
    proj = np.maximum(0.0, np.sum(boresight * direction, axis=-1))
    return g0 * np.minimum(proj, 1.0) ** (2 * directivity)


def path_loss(distance, ref_gain: float, pathloss_exp):
    distance = np.asarray(distance, dtype=float)
    if np.any(distance <= 0):
        raise InvalidArgument("distance must be positive")
    return ref_gain * distance ** (-np.asarray(pathloss_exp, dtype=float))


def sample_small_scale(rician_k, distance, wavelength: float, rng: np.random.Generator):
    """Rician coefficient with unit mean power.

    The scattered term is always drawn, so the RNG stream advances identically
    for every ``rician_k``.
    """
    rician_k = np.asarray(rician_k, dtype=float)
    distance = np.asarray(distance, dtype=float)
    shape = np.broadcast_shapes(rician_k.shape, distance.shape)
    scatter = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    los = np.exp(-2j * np.pi * distance / wavelength)
    pure = rician_k >= KAPPA_LOS
    kk = np.where(pure, 1.0, rician_k)
    w_los = np.where(pure, 1.0, np.sqrt(kk / (kk + 1)))
    w_nlos = np.where(pure, 0.0, np.sqrt(1 / (kk + 1)))
    g = w_los * los + w_nlos * scatter
    return g[()] if g.ndim == 0 else g


def build_channels(
    array: ArrayGeometry, user_positions, params: ChannelParams, rng: np.random.Generator
) -> ChannelSet:
    """Directions, distances and fading for every (antenna, user) link."""
    users = np.atleast_2d(np.asarray(user_positions, dtype=float))
    diff = users[None, :, :] - array.positions[:, None, :]
    dist = np.linalg.norm(diff, axis=-1)
    if np.any(dist == 0):
        raise DegenerateGeometry("a user coincides with an antenna element")
    directions = diff / dist[..., None]
    m = users.shape[0]
    kappa = np.broadcast_to(np.asarray(params.rician_k, dtype=float), (m,))
    alpha = np.broadcast_to(np.asarray(params.pathloss_exp, dtype=float), (m,))
    g = sample_small_scale(kappa[None, :], dist, params.wavelength, rng)
    beta = np.sqrt(path_loss(dist, params.ref_gain, alpha[None, :]) * params.g0) * g
    return ChannelSet(directions, dist, g, beta, params)


def _projections(pointing, directions):
    # pointing (..., K, 3), directions (K, 3) -> (..., K), clamped to [0, 1]
    proj = np.sum(pointing * directions, axis=-1)
    return np.clip(proj, 0.0, 1.0)


def channel_vector(pointing, channels: ChannelSet, m: int) -> np.ndarray:
    """Complex channel of user ``m`` for a (K, 3) pointing matrix."""
    pointing = np.asarray(pointing, dtype=float)
    if pointing.shape != (channels.n_antennas, 3):
        raise InvalidArgument(
            f"pointing shape {pointing.shape} does not match {channels.n_antennas} antennas"
        )
    _check_unit(pointing, "pointing")
    proj = _projections(pointing, channels.directions[:, m, :])
    return channels.beta[:, m] * proj ** channels.params.directivity


def channel_power(pointing, channels: ChannelSet) -> np.ndarray:
    """``||h_m||^2`` for every user.

    ``pointing`` is either one (K, 3) matrix shared by all users or an
    (M, K, 3) stack with a matrix per user slot.
    """
    pointing = np.asarray(pointing, dtype=float)
    p = channels.params.directivity
    amp2 = np.abs(channels.beta) ** 2  # (K, M)
    if pointing.ndim == 2:
        proj = np.clip(np.einsum("kc,kmc->km", pointing, channels.directions), 0.0, 1.0)
    else:
        proj = np.clip(np.einsum("mkc,kmc->km", pointing, channels.directions), 0.0, 1.0)
    return np.sum(amp2 * proj ** (2 * p), axis=0)


def snr_gains(pointing, channels: ChannelSet) -> np.ndarray:
    """Per-user ``||h_m||^2 / sigma^2``."""
    return channel_power(pointing, channels) / channels.params.noise_power
