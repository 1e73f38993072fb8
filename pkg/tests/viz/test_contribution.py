import numpy as np
import pytest

from tiny_raman_cnn.core.model import flatten, forward, init_model, unflatten
from tiny_raman_cnn.core.settings import ArchConfig
from tiny_raman_cnn.errors import DimensionError
from tiny_raman_cnn.ndcore import fc_forward
from tiny_raman_cnn.spectra.types import Spectrum
from tiny_raman_cnn.viz.contribution import (
    FC_MAP,
    GRADCAM,
    ContributionMap,
    contribution_map,
    fc_beta,
    fc_contribution_map,
    gradcam_alpha,
    gradcam_map,
    importance_weights,
    upsample_linear,
)
from tests.utils import TINY_LENGTH, numeric_gradient, relative_error, tiny_arch


def tiny_setup(seed: int = 0, order: str = "position") -> tuple:
    params = init_model(tiny_arch(n_classes=3, flatten_order=order), seed=seed)
    spectrum = np.random.default_rng(seed).random(TINY_LENGTH)
    return params, spectrum


@pytest.mark.parametrize("order", ["position", "channel"])
@pytest.mark.parametrize("seed", range(5))
def test_beta_closed_form(seed: int, order: str) -> None:
    params, spectrum = tiny_setup(seed, order)
    _, cache = forward(params, spectrum)

    for target in range(3):
        beta = fc_beta(params, cache, target)
        expected = params.fc2.weights[:, target] * np.sum(cache.flat[0])
        np.testing.assert_allclose(beta, expected, rtol=1e-9)


def test_alpha_closed_form() -> None:
    params, spectrum = tiny_setup(1)
    arch = params.arch
    _, cache = forward(params, spectrum)

    alpha = gradcam_alpha(params, cache, 2)

    grad_flat = params.fc1.weights @ params.fc2.weights[:, 2]
    expected = unflatten(grad_flat, arch.pooled_channels, arch.pooled_length, arch.flatten_order).sum(axis=-1)
    np.testing.assert_allclose(alpha, expected, rtol=1e-10)
    assert alpha.shape == (arch.pooled_channels,)


@pytest.mark.parametrize("order", ["position", "channel"])
@pytest.mark.parametrize("seed", range(20))
def test_alpha_matches_finite_differences(seed: int, order: str) -> None:
    params, spectrum = tiny_setup(seed, order)
    _, cache = forward(params, spectrum)
    pooled = cache.pooled[0].copy()
    target = seed % 3

    def class_score() -> float:
        hidden = fc_forward(flatten(pooled, order), params.fc1)
        return float(fc_forward(hidden, params.fc2)[target])

    expected = numeric_gradient(class_score, pooled).sum(axis=-1)

    assert relative_error(gradcam_alpha(params, cache, target), expected) < 1e-6


def test_importance_weights_shapes() -> None:
    params, spectrum = tiny_setup(2)
    _, cache = forward(params, spectrum)

    weights = importance_weights(params, cache, 0)

    assert weights.alpha.shape == (2,)
    assert weights.beta.shape == (4,)


def test_gradcam_map_matches_definition() -> None:
    params, spectrum = tiny_setup(3)
    _, cache = forward(params, spectrum)

    result = gradcam_map(params, spectrum, 1)

    pooled_map = np.maximum(gradcam_alpha(params, cache, 1) @ cache.pooled[0], 0.0)
    np.testing.assert_allclose(result.values, upsample_linear(pooled_map, TINY_LENGTH))
    assert result.kind == GRADCAM
    assert result.target_class == 1
    assert np.all(result.values >= 0.0)


@pytest.mark.parametrize("order", ["position", "channel"])
def test_fc_map_matches_definition(order: str) -> None:
    params, spectrum = tiny_setup(4, order)
    arch = params.arch
    _, cache = forward(params, spectrum)

    result = fc_contribution_map(params, spectrum, 0)

    beta = params.fc2.weights[:, 0] * np.sum(cache.flat[0])
    contribution = cache.flat[0] * (params.fc1.weights @ beta)
    pooled_map = unflatten(contribution, arch.pooled_channels, arch.pooled_length, order).sum(axis=0)
    np.testing.assert_allclose(result.values, upsample_linear(pooled_map, TINY_LENGTH), rtol=1e-9, atol=1e-12)
    assert result.kind == FC_MAP


def test_maps_on_full_architecture() -> None:
    params = init_model(ArchConfig(n_classes=3), seed=0)
    spectrum = Spectrum(grid=np.arange(350.0, 1801.0), intensity=np.random.default_rng(0).random(1451))

    for kind in (GRADCAM, FC_MAP):
        result = contribution_map(params, spectrum, 2, kind)
        assert result.values.shape == (1451,)
        np.testing.assert_array_equal(result.grid, spectrum.grid)


def test_map_rejects_unknown_class() -> None:
    params, spectrum = tiny_setup()

    with pytest.raises(ValueError):
        fc_contribution_map(params, spectrum, 3)
    with pytest.raises(ValueError):
        gradcam_map(params, spectrum, -1)


def test_map_rejects_unknown_kind() -> None:
    params, spectrum = tiny_setup()

    with pytest.raises(ValueError):
        contribution_map(params, spectrum, 0, "saliency")


def test_weights_need_a_single_spectrum() -> None:
    params, _ = tiny_setup()
    _, cache = forward(params, np.random.default_rng(0).random((2, TINY_LENGTH)))

    with pytest.raises(DimensionError):
        fc_beta(params, cache, 0)


def test_upsample_linear_keeps_endpoints_and_range() -> None:
    values = np.random.default_rng(0).normal(size=363)

    upsampled = upsample_linear(values, 1451)

    assert upsampled.shape == (1451,)
    assert upsampled[0] == values[0]
    assert upsampled[-1] == values[-1]
    assert np.min(values) <= np.min(upsampled) <= np.max(upsampled) <= np.max(values)


def test_upsample_linear_is_exact_on_lines() -> None:
    values = np.linspace(-1.0, 3.0, 5)

    np.testing.assert_allclose(upsample_linear(values, 9), np.linspace(-1.0, 3.0, 9))


def test_upsample_linear_needs_two_samples() -> None:
    with pytest.raises(DimensionError):
        upsample_linear(np.ones(1), 10)


def test_contribution_map_validation() -> None:
    with pytest.raises(ValueError):
        ContributionMap(values=np.array([-1.0, 0.0]), kind=GRADCAM, target_class=0, grid=np.arange(2.0))
    with pytest.raises(DimensionError):
        ContributionMap(values=np.zeros(3), kind=FC_MAP, target_class=0, grid=np.arange(2.0))
