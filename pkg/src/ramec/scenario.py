from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import (
    ArrayGeometry,
    ChannelParams,
    ChannelSet,
    UserGeometry,
    build_channels,
    user_from_cartesian,
)
from .resource import TaskParams


@dataclass(frozen=True)
class Scenario:
    """Everything a solver needs for one frame: geometry, sampled channels, task constants."""

    array: ArrayGeometry
    users: tuple[UserGeometry, ...]
    channel_params: ChannelParams
    task: TaskParams
    channels: ChannelSet
    seed: int | None = None

    @property
    def n_users(self) -> int:
        return len(self.users)

    @property
    def user_positions(self) -> np.ndarray:
        return np.array([u.position for u in self.users])


def make_scenario(
    array: ArrayGeometry,
    user_positions,
    channel_params: ChannelParams | None = None,
    task: TaskParams | None = None,
    rng: np.random.Generator | int | None = None,
    seed: int | None = None,
) -> Scenario:
    """Assemble a scenario from explicit user positions, sampling fading from ``rng``."""
    channel_params = channel_params or ChannelParams()
    task = task or TaskParams()
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    positions = np.atleast_2d(np.asarray(user_positions, dtype=float))
    users = tuple(user_from_cartesian(p) for p in positions)
    channels = build_channels(array, positions, channel_params, rng)
    return Scenario(array, users, channel_params, task, channels, seed)
