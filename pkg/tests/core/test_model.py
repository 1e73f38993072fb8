import numpy as np
import pytest

from tiny_raman_cnn.core.model import (
    ModelParams,
    backward,
    flatten,
    forward,
    init_model,
    param_names,
    predict,
    unflatten,
)
from tiny_raman_cnn.core.settings import ArchConfig
from tiny_raman_cnn.errors import DimensionError
from tiny_raman_cnn.ndcore import INFER, TRAIN, softmax_cross_entropy
from tiny_raman_cnn.spectra.types import Spectrum
from tests.utils import TINY_LENGTH, numeric_gradient, relative_error, tiny_arch


def test_shape_chain_on_full_architecture() -> None:
    arch = ArchConfig(n_classes=3)
    params = init_model(arch, seed=0)
    spectrum = np.random.default_rng(0).random(1451)

    logits, cache = forward(params, spectrum)

    assert logits.shape == (3,)
    assert cache.pools[0].output.shape == (1, 64, 726)
    assert cache.pools[1].output.shape == (1, 64, 363)
    assert cache.flat.shape == (1, 363 * 64)
    assert cache.fc1_out.shape == (1, 128)


def test_flatten_position_major_index() -> None:
    pooled = np.arange(12, dtype=np.float64).reshape(3, 4)  # 3 channels, 4 positions

    flat = flatten(pooled, "position")

    for x in range(4):
        for k in range(3):
            assert flat[x * 3 + k] == pooled[k, x]


@pytest.mark.parametrize("order", ["position", "channel"])
def test_unflatten_inverts_flatten(order: str) -> None:
    pooled = np.random.default_rng(0).normal(size=(2, 5, 7))

    np.testing.assert_array_equal(unflatten(flatten(pooled, order), 5, 7, order), pooled)


def test_unflatten_size_mismatch() -> None:
    with pytest.raises(DimensionError):
        unflatten(np.zeros(10), 3, 4)


def test_init_model_is_deterministic() -> None:
    arch = tiny_arch()

    first = init_model(arch, seed=7).as_dict()
    second = init_model(arch, seed=7).as_dict()
    other = init_model(arch, seed=8).as_dict()

    for name in param_names(arch):
        np.testing.assert_array_equal(first[name], second[name])
    assert not np.array_equal(first["fc1.weights"], other["fc1.weights"])
    assert np.all(first["conv0.bias"] == 0.0)


def test_param_names_order() -> None:
    assert param_names(tiny_arch()) == [
        "conv0.weights", "conv0.bias", "conv1.weights", "conv1.bias",
        "fc1.weights", "fc1.bias", "fc2.weights", "fc2.bias",
    ]


def test_model_params_round_trip_through_dict() -> None:
    params = init_model(tiny_arch(), seed=1)

    rebuilt = ModelParams.from_dict(params.arch, params.as_dict())

    for name, value in params.as_dict().items():
        np.testing.assert_array_equal(rebuilt.as_dict()[name], value)


def test_model_params_rejects_wrong_shapes() -> None:
    params = init_model(tiny_arch(), seed=1)
    tensors = params.as_dict()
    tensors["fc2.weights"] = np.zeros((3, 3))

    with pytest.raises(DimensionError):
        ModelParams.from_dict(params.arch, tensors)


def test_model_params_rejects_missing_tensors() -> None:
    params = init_model(tiny_arch(), seed=1)
    tensors = params.as_dict()
    del tensors["conv1.bias"]

    with pytest.raises(DimensionError):
        ModelParams.from_dict(params.arch, tensors)


def test_forward_rejects_wrong_length() -> None:
    params = init_model(tiny_arch(), seed=0)

    with pytest.raises(DimensionError):
        forward(params, np.zeros(TINY_LENGTH + 1))


def test_forward_rejects_non_finite_input() -> None:
    params = init_model(tiny_arch(), seed=0)
    spectrum = np.zeros(TINY_LENGTH)
    spectrum[3] = np.nan

    with pytest.raises(DimensionError):
        forward(params, spectrum)


def test_forward_accepts_spectrum_and_batch() -> None:
    params = init_model(tiny_arch(), seed=0)
    batch = np.random.default_rng(0).random((3, TINY_LENGTH))

    logits, cache = forward(params, batch)
    single, _ = forward(params, Spectrum.on_channels(batch[1]))

    assert logits.shape == (3, 2)
    assert cache.batch_size == 3
    np.testing.assert_allclose(single, logits[1], rtol=1e-12)


def test_infer_mode_is_deterministic() -> None:
    params = init_model(tiny_arch(), seed=0)
    spectrum = np.random.default_rng(0).random(TINY_LENGTH)

    first, cache = forward(params, spectrum, INFER)
    second, _ = forward(params, spectrum, INFER)

    np.testing.assert_array_equal(first, second)
    np.testing.assert_array_equal(cache.dropout_mask, np.ones_like(cache.dropout_mask))


def test_predict_single_and_batch() -> None:
    params = init_model(tiny_arch(n_classes=3), seed=2)
    batch = np.random.default_rng(2).random((4, TINY_LENGTH))

    probs, predicted = predict(params, batch)
    single_probs, single_predicted = predict(params, batch[0])

    assert probs.shape == (4, 3)
    np.testing.assert_allclose(probs.sum(axis=1), np.ones(4))
    assert isinstance(single_predicted, int)
    assert single_predicted == predicted[0]
    np.testing.assert_allclose(single_probs, probs[0], rtol=1e-12)


def test_backward_sums_over_batch() -> None:
    params = init_model(tiny_arch(), seed=3)
    batch = np.random.default_rng(3).random((2, TINY_LENGTH))
    grad_logits = np.array([[1.0, -1.0], [0.5, 0.25]])

    _, cache = forward(params, batch)
    total = backward(params, cache, grad_logits).as_dict()
    parts = []
    for index in range(2):
        _, item_cache = forward(params, batch[index])
        parts.append(backward(params, item_cache, grad_logits[index]).as_dict())

    for name, value in total.items():
        np.testing.assert_allclose(value, parts[0][name] + parts[1][name], rtol=1e-10, atol=1e-12)


@pytest.mark.parametrize("order", ["position", "channel"])
@pytest.mark.parametrize("seed", range(20))
def test_backward_matches_finite_differences(seed: int, order: str) -> None:
    rng = np.random.default_rng(seed)
    params = init_model(tiny_arch(flatten_order=order), seed=seed)
    inputs = rng.normal(size=(2, TINY_LENGTH))
    labels = np.eye(2)[rng.integers(2, size=2)]

    def objective() -> float:
        logits, _ = forward(params, inputs, TRAIN, np.random.default_rng(100 + seed))
        return float(np.sum(softmax_cross_entropy(logits, labels)[0]))

    logits, cache = forward(params, inputs, TRAIN, np.random.default_rng(100 + seed))
    _, _, grad_logits = softmax_cross_entropy(logits, labels)
    grads = backward(params, cache, grad_logits).as_dict()

    for name, value in params.as_dict().items():
        assert relative_error(grads[name], numeric_gradient(objective, value)) < 1e-4, name
