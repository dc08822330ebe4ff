import math
from pathlib import Path

import numpy as np
import pytest

from magzoh import InertiaSpec, OrbitSpec, StateGains

SCENARIO_DIR = Path(__file__).resolve().parents[1] / "scenarios"


@pytest.fixture(scope="session")
def ref_orbit():
    """450 km altitude, 87 deg inclination, phase 0.94 rad."""
    return OrbitSpec(radius_m=6.821e6, incl_rad=math.radians(87.0), phi0_rad=0.94)


@pytest.fixture(scope="session")
def ref_inertia():
    return InertiaSpec.from_diagonal([27.0, 17.0, 25.0])


@pytest.fixture(scope="session")
def ref_gains():
    return StateGains(k1=2.0e11, k2=3.0e11)


def random_unit_quaternion(rng) -> np.ndarray:
    q = rng.normal(size=4)
    return q / np.linalg.norm(q)
