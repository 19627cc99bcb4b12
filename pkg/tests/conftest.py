import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make oracles/helpers importable

from fcnplan import GenConfig, LayerKind, LayerWeights, NetworkWeights, make_rng


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_network(rng, depth=3, channels=4, seed_scale=0.4, in_channels=3):
    """Small random network ending in a sigmoid head; first layer takes
    ``in_channels`` inputs so it can run on stacked problem maps."""
    layers = []
    cin = in_channels
    for _ in range(depth - 1):
        layers.append(random_layer(rng, LayerKind.CONV_BN_RELU, cin, channels, scale=seed_scale))
        cin = channels
    layers.append(random_layer(rng, LayerKind.DECONV_BN_SIGMOID, cin, 1, scale=seed_scale))
    return NetworkWeights(layers=tuple(layers))


def random_layer(rng, kind, cin, cout, ksize=3, scale=0.4):
    return LayerWeights(
        kind=kind,
        kernel=rng.normal(0.0, scale, size=(cout, cin, ksize, ksize)),
        bias=rng.normal(0.0, scale, size=cout),
        gamma=rng.uniform(0.5, 1.5, size=cout),
        beta=rng.normal(0.0, scale, size=cout),
        mean=rng.normal(0.0, scale, size=cout),
        var=rng.uniform(0.25, 2.0, size=cout),
        eps=1e-5,
    )


def solvable_problem(seed, n=10, p=0.6, min_dist=5.0, sources=1):
    from fcnplan import generate_problem

    cfg = GenConfig(n=n, p_obstacle=p, min_dist=min_dist, sources=sources, seed=seed)
    return generate_problem(cfg, make_rng(seed))
