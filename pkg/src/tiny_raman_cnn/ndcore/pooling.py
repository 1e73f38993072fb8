import numpy as np

from tiny_raman_cnn.errors import DimensionError
from tiny_raman_cnn.ndcore.types import ChannelMap, PoolRecord, as_batch

POOL_SIZE: int = 2


def pooled_length(length: int) -> int:
    return -(-length // POOL_SIZE)


def maxpool2_forward(x: ChannelMap) -> PoolRecord:
    """
    Non-overlapping max pooling with window and stride 2.

    Odd lengths are padded on the right with -inf, so the output length is
    ceil(n / 2). Ties go to the leftmost position.

    Args:
        x (ChannelMap): Input, (channels, length) or (batch, channels, length).

    Returns:
        PoolRecord: Pooled output and the absolute input position of every winner.
    """
    batch, single = as_batch(x)
    length = batch.shape[-1]
    if length < 1:
        raise DimensionError("Cannot pool an empty map")

    out_length = pooled_length(length)
    padded = np.pad(
        batch, ((0, 0), (0, 0), (0, out_length * POOL_SIZE - length)), constant_values=-np.inf
    )
    windows = padded.reshape(batch.shape[0], batch.shape[1], out_length, POOL_SIZE)

    offsets = np.argmax(windows, axis=-1)
    output = np.take_along_axis(windows, offsets[..., np.newaxis], axis=-1)[..., 0]
    argmax = offsets + POOL_SIZE * np.arange(out_length)

    if single:
        return PoolRecord(output=output[0], argmax=argmax[0], input_length=length)
    return PoolRecord(output=output, argmax=argmax, input_length=length)


def maxpool2_backward(grad_output: ChannelMap, record: PoolRecord) -> ChannelMap:
    """Routes every pooled gradient back to the position that won its window."""
    grad, single = as_batch(grad_output)
    argmax = record.argmax[np.newaxis] if single else record.argmax

    if grad.shape != argmax.shape:
        raise DimensionError(f"Gradient shape {grad.shape} does not match pooled shape {argmax.shape}")

    grad_input = np.zeros(grad.shape[:-1] + (record.input_length,))
    np.put_along_axis(grad_input, argmax, grad, axis=-1)

    return grad_input[0] if single else grad_input
