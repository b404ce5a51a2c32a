"""Closed-form boresight steering for per-slot (dynamic) rotation.

Maximizing ``f.q`` over unit vectors within a zenith cone of half-angle
``theta_max`` has a closed-form solution: ``q`` itself when it lies inside the
cone, otherwise the cone-edge vector sharing ``q``'s azimuth.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .geometry import E3, ArrayGeometry, ChannelSet, _check_unit


class RotationAngles(NamedTuple):
    zenith: float | np.ndarray
    azimuth: float | np.ndarray


def _azimuth(v):
    x, y = v[..., 0], v[..., 1]
    pole = (x == 0) & (y == 0)
    # arctan2(0, -0.0) is pi; the pole gets azimuth 0 by convention.
    return np.where(pole, 0.0, np.arctan2(y, x))


def rotation_angles(direction, theta_max: float) -> RotationAngles:
    """Zenith (clamped to ``theta_max``) and azimuth that steer toward ``direction``."""
    q = np.asarray(direction, dtype=float)
    _check_unit(q, "direction")
    zen = np.minimum(np.arccos(np.clip(q[..., 2], -1.0, 1.0)), theta_max)
    az = _azimuth(q)
    if q.ndim == 1:
        return RotationAngles(float(zen), float(az))
    return RotationAngles(zen, az)


def pointing_from_angles(zenith, azimuth) -> np.ndarray:
    zenith, azimuth = np.broadcast_arrays(np.asarray(zenith, float), np.asarray(azimuth, float))
    return np.stack(
        [np.sin(zenith) * np.cos(azimuth), np.sin(zenith) * np.sin(azimuth), np.cos(zenith)],
        axis=-1,
    )


def optimal_pointing(direction, theta_max: float) -> np.ndarray:
    """Feasible unit boresight with the largest projection onto ``direction``.

    Broadcasts over leading axes. Directions exactly on the cone boundary count
    as inside and are returned unchanged.
    """
    q = np.asarray(direction, dtype=float)
    _check_unit(q, "direction")
    inside = np.arccos(np.clip(q[..., 2], -1.0, 1.0)) <= theta_max
    edge = pointing_from_angles(np.full(q.shape[:-1], float(theta_max)), _azimuth(q))
    return np.where(inside[..., None], q, edge)


def fixed_pointing(n_antennas: int) -> np.ndarray:
    """All boresights locked to +z."""
    return np.tile(E3, (n_antennas, 1))


def dynamic_pointing(geometry: ArrayGeometry, channels: ChannelSet, m: int) -> np.ndarray:
    """Optimal (K, 3) pointing matrix for the slot of user ``m``."""
    return optimal_pointing(channels.directions[:, m, :], geometry.theta_max)


def dynamic_pointing_all(geometry: ArrayGeometry, channels: ChannelSet) -> np.ndarray:
    """(M, K, 3) stack: one optimal pointing matrix per user slot."""
    return np.swapaxes(optimal_pointing(channels.directions, geometry.theta_max), 0, 1)


def is_feasible_pointing(pointing, theta_max: float, tol: float = 1e-9) -> bool:
    f = np.asarray(pointing, dtype=float)
    norms = np.linalg.norm(f, axis=-1)
    return bool(
        np.all(np.abs(norms - 1) <= tol)
        and np.all(f[..., 2] >= np.cos(theta_max) - tol)
        and np.all(f[..., 2] <= 1 + tol)
    )
