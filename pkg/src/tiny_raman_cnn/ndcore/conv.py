from typing import Tuple

import numpy as np
import numpy.typing as npt

from tiny_raman_cnn.errors import DimensionError
from tiny_raman_cnn.ndcore.types import ChannelMap, ConvFilterBank, as_batch


def same_padding(size: int) -> Tuple[int, int]:
    """Zero padding (left, right) that keeps a stride-1 convolution length-preserving."""
    left = (size - 1) // 2
    return left, size - 1 - left


def _check_channels(x: ChannelMap, filters: ConvFilterBank) -> None:
    if x.shape[-2] != filters.in_channels:
        raise DimensionError(
            f"Input has {x.shape[-2]} channels but filters expect {filters.in_channels}"
        )


def conv1d_forward(x: ChannelMap, filters: ConvFilterBank) -> ChannelMap:
    """
    Same-padded, stride-1 1D convolution (cross-correlation, as deep learning frameworks define it).

    out[k', p] = bias[k'] + sum_k sum_t weights[k', k, t] * x[k, p + t - left]

    Args:
        x (ChannelMap): Input, (channels, length) or (batch, channels, length).
        filters (ConvFilterBank): The filter bank.

    Returns:
        ChannelMap: Output with ``filters.out_channels`` channels and the input length.
    """
    batch, single = as_batch(x)
    _check_channels(batch, filters)

    length = batch.shape[-1]
    left, right = same_padding(filters.size)
    padded = np.pad(batch, ((0, 0), (0, 0), (left, right)))

    out = np.zeros((batch.shape[0], filters.out_channels, length))
    for tap in range(filters.size):
        out += filters.weights[:, :, tap] @ padded[:, :, tap:tap + length]
    out += filters.bias[:, np.newaxis]

    return out[0] if single else out


def conv1d_backward(
    grad_output: ChannelMap, x: ChannelMap, filters: ConvFilterBank
) -> Tuple[ChannelMap, npt.NDArray[np.float64], npt.NDArray[np.float64]]:
    """
    Gradients of :func:`conv1d_forward`.

    Returns:
        tuple: (grad_input, grad_weights, grad_bias); weight and bias gradients are summed over the batch.
    """
    batch, single = as_batch(x)
    grad, _ = as_batch(grad_output)
    _check_channels(batch, filters)

    expected = (batch.shape[0], filters.out_channels, batch.shape[-1])
    if grad.shape != expected:
        raise DimensionError(f"Gradient shape {grad.shape} does not match forward output {expected}")

    length = batch.shape[-1]
    left, right = same_padding(filters.size)
    padded = np.pad(batch, ((0, 0), (0, 0), (left, right)))

    grad_padded = np.zeros_like(padded)
    grad_weights = np.empty_like(filters.weights)
    for tap in range(filters.size):
        window = padded[:, :, tap:tap + length]
        grad_weights[:, :, tap] = np.einsum("bjl,bkl->jk", grad, window)
        grad_padded[:, :, tap:tap + length] += filters.weights[:, :, tap].T @ grad

    grad_bias = grad.sum(axis=(0, 2))
    grad_input = grad_padded[:, :, left:left + length]

    return (grad_input[0] if single else grad_input), grad_weights, grad_bias
