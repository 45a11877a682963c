import numpy as np
import pytest

from poissonmaps.lie import rot


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_rotation(rng, max_angle=np.pi):
    return rot(rng.standard_normal(3), rng.uniform(-max_angle, max_angle))


def random_so3_state(rng, mom=2.0, angle=np.pi / 2):
    mu = rng.uniform(-mom, mom, 6)
    p = random_rotation(rng, angle)
    return np.concatenate([mu, p.reshape(9)])


def random_se3_state(rng, mom=2.0, angle=np.pi / 2, trans=1.5):
    m = rng.uniform(-mom, mom, 12)
    Q = random_rotation(rng, angle)
    v = rng.uniform(-trans, trans, 3)
    return np.concatenate([m, Q.reshape(9), v])


def random_so2_state(rng, mom=2.0):
    return np.array([rng.uniform(-mom, mom), rng.uniform(-mom, mom), rng.uniform(0, 2 * np.pi)])


def random_state(case, rng):
    if case == "so2":
        return random_so2_state(rng)
    if case == "so3":
        return random_so3_state(rng)
    return random_se3_state(rng)


def fd_gradient(f, y, step=1e-6):
    """Central-difference gradient of a scalar function of a flat state."""
    y = np.asarray(y, dtype=float)
    g = np.zeros_like(y)
    for k in range(len(y)):
        h = step * (1.0 + abs(y[k]))
        yp = y.copy()
        ym = y.copy()
        yp[k] += h
        ym[k] -= h
        g[k] = (f(yp) - f(ym)) / (2.0 * h)
    return g
