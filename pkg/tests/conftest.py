import pytest

from outagekit.config import PipelineConfig
from outagekit.gateway import make_gateway
from outagekit.replay_eval import default_topology


@pytest.fixture()
def config():
    return PipelineConfig()


@pytest.fixture()
def gateway(config):
    return make_gateway(config.provider)


@pytest.fixture()
def topology():
    return default_topology()
