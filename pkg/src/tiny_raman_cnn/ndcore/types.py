from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from tiny_raman_cnn.errors import DimensionError

# (channels, positions) for a single spectrum, (batch, channels, positions) for a batch.
ChannelMap = npt.NDArray[np.float64]


def as_batch(x: ChannelMap) -> tuple[ChannelMap, bool]:
    """
    Returns ``x`` as a 3D (batch, channels, positions) array.

    Args:
        x (ChannelMap): A 2D or 3D channel map.

    Returns:
        tuple[ChannelMap, bool]: The batched array and whether the input was unbatched.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2:
        return x[np.newaxis], True
    if x.ndim == 3:
        return x, False
    raise DimensionError(f"Channel map must be 2D or 3D, got {x.ndim}D")


@dataclass
class ConvFilterBank:
    """
    Weights of one same-padded, stride-1 convolution layer.

    Attributes:
        weights (ndarray): Filter taps indexed [out_channel, in_channel, tap].
        bias (ndarray): One bias per output channel.
    """

    weights: npt.NDArray[np.float64]
    bias: npt.NDArray[np.float64]

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)

        if self.weights.ndim != 3:
            raise DimensionError(f"Filter weights must be 3D, got shape {self.weights.shape}")
        if min(self.weights.shape) < 1:
            raise DimensionError(f"Filter bank needs at least one filter and one tap, got {self.weights.shape}")
        if self.bias.shape != (self.weights.shape[0],):
            raise DimensionError(
                f"Bias shape {self.bias.shape} does not match {self.weights.shape[0]} output channels"
            )

    @property
    def out_channels(self) -> int:
        return int(self.weights.shape[0])

    @property
    def in_channels(self) -> int:
        return int(self.weights.shape[1])

    @property
    def size(self) -> int:
        return int(self.weights.shape[2])


@dataclass
class DenseWeights:
    """
    Weights of a fully-connected layer.

    Attributes:
        weights (ndarray): Indexed [input, output]; rows follow the declared flatten order.
        bias (ndarray): One bias per output.
    """

    weights: npt.NDArray[np.float64]
    bias: npt.NDArray[np.float64]

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)

        if self.weights.ndim != 2:
            raise DimensionError(f"Dense weights must be 2D, got shape {self.weights.shape}")
        if self.bias.shape != (self.weights.shape[1],):
            raise DimensionError(
                f"Bias shape {self.bias.shape} does not match {self.weights.shape[1]} outputs"
            )


@dataclass
class PoolRecord:
    """
    Output of a size-2 max pooling layer together with the routing needed for backprop.

    Attributes:
        output (ChannelMap): Pooled map, length ceil(input_length / 2).
        argmax (ndarray): Winning input position for every pooled entry.
        input_length (int): Length of the map that was pooled.
    """

    output: ChannelMap
    argmax: npt.NDArray[np.intp]
    input_length: int
