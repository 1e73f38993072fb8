import numpy as np
import pytest

from tiny_raman_cnn.errors import DimensionError
from tiny_raman_cnn.ndcore import maxpool2_backward, maxpool2_forward
from tiny_raman_cnn.ndcore.pooling import pooled_length
from tests.utils import numeric_gradient, relative_error


def test_maxpool2_odd_length_and_ties() -> None:
    record = maxpool2_forward(np.array([[1.0, 3.0, 2.0, 2.0, 5.0]]))

    np.testing.assert_array_equal(record.output, [[3.0, 2.0, 5.0]])
    np.testing.assert_array_equal(record.argmax, [[1, 2, 4]])
    assert record.input_length == 5


def test_maxpool2_backward_routes_to_winners() -> None:
    record = maxpool2_forward(np.array([[1.0, 3.0, 2.0, 2.0, 5.0]]))

    grad = maxpool2_backward(np.array([[10.0, 20.0, 30.0]]), record)

    np.testing.assert_array_equal(grad, [[0.0, 10.0, 20.0, 0.0, 30.0]])


@pytest.mark.parametrize(
    "length, expected",
    [
        (1451, 726),
        (726, 363),
        (1024, 512),
        (1, 1),
    ]
)
def test_pooled_length(length: int, expected: int) -> None:
    assert pooled_length(length) == expected
    assert maxpool2_forward(np.zeros((1, length))).output.shape == (1, expected)


def test_maxpool2_batch() -> None:
    x = np.random.default_rng(0).normal(size=(4, 3, 9))

    record = maxpool2_forward(x)

    assert record.output.shape == (4, 3, 5)
    np.testing.assert_array_equal(record.output[2], maxpool2_forward(x[2]).output)


def test_maxpool2_backward_shape_mismatch() -> None:
    record = maxpool2_forward(np.zeros((2, 6)))

    with pytest.raises(DimensionError):
        maxpool2_backward(np.zeros((2, 4)), record)


@pytest.mark.parametrize("seed", range(20))
def test_maxpool2_backward_matches_finite_differences(seed: int) -> None:
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(2, 3, 13))
    cotangent = rng.normal(size=(2, 3, 7))

    def objective() -> float:
        return float(np.sum(maxpool2_forward(x).output * cotangent))

    grad = maxpool2_backward(cotangent, maxpool2_forward(x))

    assert relative_error(grad, numeric_gradient(objective, x)) < 1e-5
