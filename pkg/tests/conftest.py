import pytest

from spikeprompt.encoder import init_encoder, pretrain_edgepred
from spikeprompt.graphs import generate_sbm, project_features

TINY_WIDTH = 30


@pytest.fixture(scope="session")
def tiny_graph():
    return project_features(generate_sbm(20, 3, 0.2, 0.02, 1.5, seed=0), TINY_WIDTH)


@pytest.fixture(scope="session")
def tiny_encoder():
    # pretraining corpus held out from the downstream graph
    pre = project_features(generate_sbm(20, 4, 0.3, 0.05, 1.0, seed=99), TINY_WIDTH)
    return pretrain_edgepred(pre, init_encoder(TINY_WIDTH, 16, seed=0), epochs=30, seed=0)
