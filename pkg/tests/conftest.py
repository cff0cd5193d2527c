import numpy as np
import pytest

from sonarflow.geometry import DEFAULT_GEOMETRY, SonarGeometry


@pytest.fixture
def geom() -> SonarGeometry:
    return DEFAULT_GEOMETRY


@pytest.fixture
def small_geom() -> SonarGeometry:
    return SonarGeometry(
        beam_count=32,
        beam_fov_rad=0.5,
        range_min_m=1.0,
        range_max_m=9.0,
        range_bin_count=96,
        frame_rate_hz=10.0,
    )


def frame_with_blob(shape, cells, value=0.9, background=0.0):
    frame = np.full(shape, background, dtype=np.float64)
    for b, r in cells:
        frame[b, r] = value
    return frame
