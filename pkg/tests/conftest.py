"""
Shared fixtures: hand-built toy graphs, a small SBM and a fast training configuration
"""

import numpy as np
import pytest

from gssc.graph import Graph, generate_sbm, save_graph
from gssc.utils.schemas import TrainConfig


def make_graph(edges, labels, n_features=4, seed=0, train=None, val=(), test=(), n_classes=None):
    """Toy graph with random features; every node is a training node unless told otherwise"""
    labels = np.asarray(labels)
    n = len(labels)
    rng = np.random.default_rng(seed)
    features = rng.standard_normal((n, n_features))
    train = np.arange(n) if train is None else np.asarray(train)
    C = int(labels.max()) + 1 if n_classes is None else n_classes
    return Graph(features, np.asarray(edges).reshape(-1, 2), labels, C, train, list(val), list(test))


@pytest.fixture
def path_graph():
    """0 - 1 - 2 - 3 with two classes"""
    return make_graph([(0, 1), (1, 2), (2, 3)], [0, 0, 1, 1])


@pytest.fixture
def ten_node_graph():
    """Ring of ten nodes plus two chords, three classes, mixed splits"""
    edges = [(i, (i + 1) % 10) for i in range(10)] + [(0, 5), (2, 7)]
    labels = [0, 0, 0, 1, 1, 1, 2, 2, 2, 0]
    return make_graph(edges, labels, n_features=5, seed=3, train=[0, 3, 6, 9], val=[1, 4], test=[2, 5, 7, 8])


@pytest.fixture
def small_sbm():
    return generate_sbm(
        120, 4, 0.2, 0.02, 16, 0.5, seed=7, train_per_class=5, n_val=20, n_test=40,
    )


@pytest.fixture
def dataset_dir(tmp_path, small_sbm):
    directory = tmp_path / "data"
    save_graph(small_sbm, directory)
    return directory


@pytest.fixture
def fast_config():
    return TrainConfig(
        epochs=4,
        warmup_epochs=2,
        hidden=16,
        batch_size=64,
        negatives=3,
        dropout=0.0,
        seed=0,
    )
