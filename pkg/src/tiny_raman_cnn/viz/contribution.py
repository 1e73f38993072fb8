from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from tiny_raman_cnn.core.model import ActivationCache, ModelInputLike, ModelParams, forward, unflatten
from tiny_raman_cnn.errors import DimensionError
from tiny_raman_cnn.ndcore import INFER, dropout_backward, fc_backward
from tiny_raman_cnn.spectra.types import FloatArray, Spectrum

GRADCAM: str = "gradcam"
FC_MAP: str = "fc_map"
MAP_KINDS = (GRADCAM, FC_MAP)


@dataclass
class ContributionMap:
    """
    Per-channel importance aligned with the input grid.

    Attributes:
        values (ndarray): One value per input channel.
        kind (str): ``"gradcam"`` (non-negative) or ``"fc_map"`` (signed).
        target_class (int): Class whose logit was explained.
        grid (ndarray): The input grid (channels or cm^-1).
    """

    values: FloatArray
    kind: str
    target_class: int
    grid: FloatArray

    def __post_init__(self) -> None:
        if self.values.shape != self.grid.shape:
            raise DimensionError(f"Map has {self.values.size} values for {self.grid.size} grid points")
        if self.kind not in MAP_KINDS:
            raise ValueError(f"Unknown map kind: {self.kind}")
        if self.kind == GRADCAM and np.any(self.values < 0):
            raise ValueError("Grad-CAM maps are non-negative")


@dataclass
class ImportanceWeights:
    """
    Attributes:
        alpha (ndarray): One weight per channel of the last pooling layer.
        beta (ndarray): One weight per FC1 feature.
    """

    alpha: FloatArray
    beta: FloatArray


def _check_class(params: ModelParams, target_class: int) -> None:
    if not 0 <= target_class < params.arch.n_classes:
        raise ValueError(f"Class {target_class} outside [0, {params.arch.n_classes})")


def _fc1_cotangent(params: ModelParams, cache: ActivationCache, target_class: int) -> FloatArray:
    """d(logit of ``target_class``)/d(FC1 output), (1, fc1_width)."""
    _check_class(params, target_class)
    if cache.batch_size != 1:
        raise DimensionError(f"Contribution maps explain one spectrum at a time, cache holds {cache.batch_size}")

    grad_logits = np.zeros((1, params.arch.n_classes))
    grad_logits[0, target_class] = 1.0
    grad_dropped, _, _ = fc_backward(grad_logits, cache.dropped, params.fc2)
    return dropout_backward(grad_dropped, cache.dropout_mask)


def gradcam_alpha(params: ModelParams, cache: ActivationCache, target_class: int) -> FloatArray:
    """
    alpha_k = sum_x d y^c / d X[x, k], with X the last pooling output and y^c the pre-softmax logit.
    """
    arch = params.arch
    grad_flat, _, _ = fc_backward(_fc1_cotangent(params, cache, target_class), cache.flat, params.fc1)
    grad_pooled = unflatten(grad_flat, arch.pooled_channels, arch.pooled_length, arch.flatten_order)
    return grad_pooled[0].sum(axis=-1)


def fc_beta(params: ModelParams, cache: ActivationCache, target_class: int) -> FloatArray:
    """
    beta_l = sum over flattened inputs i of d y^c / d Fw1[i, l].
    """
    _, grad_weights, _ = fc_backward(_fc1_cotangent(params, cache, target_class), cache.flat, params.fc1)
    return grad_weights.sum(axis=0)


def importance_weights(params: ModelParams, cache: ActivationCache, target_class: int) -> ImportanceWeights:
    return ImportanceWeights(
        alpha=gradcam_alpha(params, cache, target_class),
        beta=fc_beta(params, cache, target_class),
    )


def upsample_linear(values: FloatArray, target_length: int) -> FloatArray:
    """
    Stretches ``values`` so its first and last samples land on the first and last target
    channels, interpolating linearly in between.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size < 2:
        raise DimensionError("Upsampling needs at least two source samples")
    source = np.linspace(0.0, target_length - 1.0, values.size)
    return np.interp(np.arange(target_length, dtype=np.float64), source, values)


def _forward_single(params: ModelParams, inputs: ModelInputLike) -> Tuple[ActivationCache, FloatArray]:
    if isinstance(inputs, Spectrum):
        grid = inputs.grid
    else:
        grid = np.arange(np.asarray(inputs).shape[-1], dtype=np.float64)
    _, cache = forward(params, inputs, INFER)
    return cache, grid


def gradcam_map(params: ModelParams, inputs: ModelInputLike, target_class: int) -> ContributionMap:
    """
    L_x = ReLU(sum_k alpha_k X[x, k]) on the last pooling layer, upsampled to the input grid.
    """
    cache, grid = _forward_single(params, inputs)
    alpha = gradcam_alpha(params, cache, target_class)
    pooled_map = np.maximum(alpha @ cache.pooled[0], 0.0)
    return ContributionMap(
        values=upsample_linear(pooled_map, grid.size), kind=GRADCAM, target_class=target_class, grid=grid
    )


def fc_contribution_map(params: ModelParams, inputs: ModelInputLike, target_class: int) -> ContributionMap:
    """
    M_x = sum_k A[x, k] * (sum_l beta_l Fw1[(x, k), l]), upsampled to the input grid. Not rectified.
    """
    arch = params.arch
    cache, grid = _forward_single(params, inputs)
    beta = fc_beta(params, cache, target_class)
    contribution = cache.flat[0] * (params.fc1.weights @ beta)
    pooled_map = unflatten(contribution, arch.pooled_channels, arch.pooled_length, arch.flatten_order).sum(axis=0)
    return ContributionMap(
        values=upsample_linear(pooled_map, grid.size), kind=FC_MAP, target_class=target_class, grid=grid
    )


def contribution_map(params: ModelParams, inputs: ModelInputLike, target_class: int, kind: str) -> ContributionMap:
    if kind == GRADCAM:
        return gradcam_map(params, inputs, target_class)
    if kind == FC_MAP:
        return fc_contribution_map(params, inputs, target_class)
    raise ValueError(f"Unknown map kind: {kind}")
