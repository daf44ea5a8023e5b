"""Shared test helpers: random rigid motions built on scipy as the
independent rotation oracle."""

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from camprobe.geometry import Pose


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    return Rotation.random(random_state=int(rng.integers(2**31))).as_matrix()


def random_pose(rng: np.random.Generator, t_scale: float = 1.0) -> Pose:
    return Pose(random_rotation(rng), rng.uniform(-t_scale, t_scale, size=3))


def small_pose(rng: np.random.Generator, max_angle: float, max_trans: float) -> Pose:
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    rot = Rotation.from_rotvec(axis * rng.uniform(0.0, max_angle)).as_matrix()
    direction = rng.normal(size=3)
    direction /= np.linalg.norm(direction)
    return Pose(rot, direction * rng.uniform(0.0, max_trans))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
