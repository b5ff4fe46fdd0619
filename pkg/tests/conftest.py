import pytest

from irs_reconfig.config import ScenarioConfig


@pytest.fixture(scope="session")
def cfg():
    return ScenarioConfig.from_mapping({})


@pytest.fixture(scope="session")
def scenario(cfg):
    return cfg.scenario()
