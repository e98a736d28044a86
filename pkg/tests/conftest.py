import pytest

from switchmap.config import parse_config


@pytest.fixture
def default_cfg():
    """The shipped reference scenario."""
    return parse_config(None)


def quick_overrides(**extra):
    """A short episode (~11 s simulated) for engine-level tests: faster path
    progress and a coarser step keep the wall time under a second."""
    overrides = {"path.rate": "1.0", "sim.step": "0.002"}
    overrides.update({k: str(v) for k, v in extra.items()})
    return overrides


@pytest.fixture
def quick_cfg():
    return parse_config(None, overrides=quick_overrides())
