import numpy as np
import pytest

from tiny_raman_cnn.errors import DimensionError
from tiny_raman_cnn.ndcore import (
    INFER,
    TRAIN,
    DenseWeights,
    dropout,
    dropout_backward,
    fc_backward,
    fc_forward,
    leaky_relu,
    leaky_relu_backward,
    softmax_cross_entropy,
)
from tests.utils import numeric_gradient, relative_error


def test_leaky_relu_values() -> None:
    x = np.array([-2.0, -0.5, 0.0, 1.5])

    np.testing.assert_allclose(leaky_relu(x), [-0.4, -0.1, 0.0, 1.5])
    np.testing.assert_allclose(leaky_relu(x, alpha=0.0), [0.0, 0.0, 0.0, 1.5])


def test_leaky_relu_backward_slope_at_zero() -> None:
    x = np.array([-1.0, 0.0, 1.0])

    np.testing.assert_allclose(leaky_relu_backward(np.ones(3), x), [0.2, 1.0, 1.0])


@pytest.mark.parametrize("alpha", [-0.1, 1.0, 2.0])
def test_leaky_relu_invalid_alpha(alpha: float) -> None:
    with pytest.raises(ValueError):
        leaky_relu(np.zeros(3), alpha=alpha)


def test_fc_forward() -> None:
    dense = DenseWeights(np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]), np.array([0.5, -0.5]))

    np.testing.assert_allclose(fc_forward(np.array([1.0, 0.0, -1.0]), dense), [-3.5, -4.5])


def test_fc_forward_size_mismatch() -> None:
    dense = DenseWeights(np.ones((3, 2)), np.zeros(2))

    with pytest.raises(DimensionError):
        fc_forward(np.ones(4), dense)


@pytest.mark.parametrize("seed", range(20))
def test_fc_backward_matches_finite_differences(seed: int) -> None:
    rng = np.random.default_rng(seed)
    dense = DenseWeights(rng.normal(size=(6, 4)), rng.normal(size=4))
    x = rng.normal(size=(3, 6))
    cotangent = rng.normal(size=(3, 4))

    def objective() -> float:
        return float(np.sum(fc_forward(x, dense) * cotangent))

    grad_input, grad_weights, grad_bias = fc_backward(cotangent, x, dense)

    assert relative_error(grad_input, numeric_gradient(objective, x)) < 1e-5
    assert relative_error(grad_weights, numeric_gradient(objective, dense.weights)) < 1e-5
    assert relative_error(grad_bias, numeric_gradient(objective, dense.bias)) < 1e-5


def test_dropout_infer_is_identity() -> None:
    x = np.arange(6, dtype=np.float64)

    out, mask = dropout(x, 0.5, INFER)

    np.testing.assert_array_equal(out, x)
    np.testing.assert_array_equal(mask, np.ones(6))


def test_dropout_train_scales_kept_entries() -> None:
    rng = np.random.default_rng(3)
    x = np.ones(10_000)

    out, mask = dropout(x, 0.5, TRAIN, rng)

    assert set(np.unique(mask)) <= {0.0, 2.0}
    np.testing.assert_array_equal(out, x * mask)
    assert abs(float(np.mean(out)) - 1.0) < 0.05


def test_dropout_keep_all() -> None:
    x = np.random.default_rng(0).normal(size=20)

    out, _ = dropout(x, 1.0, TRAIN, np.random.default_rng(1))

    np.testing.assert_array_equal(out, x)


def test_dropout_backward_uses_mask() -> None:
    mask = np.array([0.0, 2.0, 2.0, 0.0])

    np.testing.assert_array_equal(dropout_backward(np.ones(4), mask), mask)


@pytest.mark.parametrize(
    "keep_prob, mode, rng",
    [
        (0.0, TRAIN, np.random.default_rng(0)),
        (1.5, INFER, None),
        (0.5, "test", None),
        (0.5, TRAIN, None),
    ]
)
def test_dropout_invalid_arguments(keep_prob: float, mode: str, rng: np.random.Generator) -> None:
    with pytest.raises(ValueError):
        dropout(np.ones(3), keep_prob, mode, rng)


def test_softmax_cross_entropy_uniform_logits() -> None:
    loss, probs, grad = softmax_cross_entropy(np.zeros(4), np.array([0.0, 1.0, 0.0, 0.0]))

    assert loss == pytest.approx(np.log(4.0))
    np.testing.assert_allclose(probs, np.full(4, 0.25))
    np.testing.assert_allclose(grad, [0.25, -0.75, 0.25, 0.25])


def test_softmax_cross_entropy_is_stable() -> None:
    loss, probs, _ = softmax_cross_entropy(np.array([1000.0, 0.0]), np.array([0.0, 1.0]))

    assert loss == pytest.approx(1000.0)
    assert np.all(np.isfinite(probs))


def test_softmax_cross_entropy_batch() -> None:
    logits = np.array([[2.0, 0.0], [0.0, 2.0]])
    labels = np.eye(2)

    losses, probs, _ = softmax_cross_entropy(logits, labels)

    assert losses.shape == (2,)
    np.testing.assert_allclose(losses[0], losses[1])
    np.testing.assert_allclose(probs.sum(axis=1), [1.0, 1.0])


def test_softmax_cross_entropy_shape_mismatch() -> None:
    with pytest.raises(DimensionError):
        softmax_cross_entropy(np.zeros(3), np.array([1.0, 0.0]))


@pytest.mark.parametrize("seed", range(5))
def test_softmax_cross_entropy_gradient(seed: int) -> None:
    rng = np.random.default_rng(seed)
    logits = rng.normal(size=5)
    labels = np.eye(5)[int(rng.integers(5))]

    def objective() -> float:
        return float(softmax_cross_entropy(logits, labels)[0])

    _, _, grad = softmax_cross_entropy(logits, labels)

    assert relative_error(grad, numeric_gradient(objective, logits)) < 1e-5
