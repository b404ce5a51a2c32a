import numpy as np

from ramec.geometry import ChannelParams, build_array, build_channels, snr_gains, user_position
from ramec.pointing import fixed_pointing
from ramec.resource import TaskParams, solve_resource_allocation
from ramec.scenario import make_scenario


def random_users(rng, m, rho=(20, 50), height=(10, 30)):
    out = []
    for _ in range(m):
        r = rng.uniform(*rho)
        h = rng.uniform(*height)
        out.append(user_position(float(np.hypot(r, h)), float(np.arctan2(r, h)), float(rng.uniform(-np.pi, np.pi))).position)
    return np.array(out)


def small_instance(seed, m=4, kx=3, ky=3, p=4, theta_max=np.pi / 3, task=None):
    """Array, channels, task params and the resource solution at the fixed pointing."""
    rng = np.random.default_rng(seed)
    array = build_array(kx, ky, 0.0625, theta_max)
    ch = build_channels(array, random_users(rng, m), ChannelParams(directivity=p), rng)
    task = task or TaskParams()
    gains = snr_gains(fixed_pointing(array.n_antennas), ch)
    alloc, _ = solve_resource_allocation(gains, task)
    return array, ch, task, alloc


def scenario(seed, m=4, kx=3, ky=3, p=4, theta_max=np.pi / 3, task=None, positions=None):
    rng = np.random.default_rng(seed)
    array = build_array(kx, ky, 0.0625, theta_max)
    if positions is None:
        positions = random_users(rng, m)
    return make_scenario(array, positions, ChannelParams(directivity=p), task or TaskParams(), rng=rng, seed=seed)
