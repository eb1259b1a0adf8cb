import numpy as np
import pytest

from relucode.network import AffineLayer, ReluNetwork


@pytest.fixture
def e1():
    """Identity 2x2 layer, zero bias: code bits are the coordinate signs."""
    return ReluNetwork(2, (AffineLayer(np.eye(2), np.zeros(2)),))


@pytest.fixture
def e2():
    """e1 plus a second layer [[1, -1]] with zero bias."""
    return ReluNetwork(
        2,
        (
            AffineLayer(np.eye(2), np.zeros(2)),
            AffineLayer(np.array([[1.0, -1.0]]), np.zeros(1)),
        ),
    )
