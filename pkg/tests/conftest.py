import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "suite",
    deadline=None,
    max_examples=50,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


def write_trace(path, pid, tid, t, yaw, header=True):
    """Write a canonical trace CSV without going through the package."""
    lines = []
    if header:
        lines.append("participant_id,trial_id,timestamp_s,yaw_deg")
    for ti, yi in zip(t, yaw):
        lines.append(f"{pid},{tid},{ti!r},{yi!r}")
    path.write_text("\n".join(lines) + "\n")
    return path
