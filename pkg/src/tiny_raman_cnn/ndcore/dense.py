from typing import Tuple

import numpy as np
import numpy.typing as npt

from tiny_raman_cnn.errors import DimensionError
from tiny_raman_cnn.ndcore.types import DenseWeights

FloatArray = npt.NDArray[np.float64]


def fc_forward(x: FloatArray, dense: DenseWeights) -> FloatArray:
    """y = x @ W + b for a vector (inputs,) or a batch (batch, inputs)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != dense.weights.shape[0]:
        raise DimensionError(
            f"Input has {x.shape[-1]} entries but the layer expects {dense.weights.shape[0]}"
        )
    return x @ dense.weights + dense.bias


def fc_backward(
    grad_output: FloatArray, x: FloatArray, dense: DenseWeights
) -> Tuple[FloatArray, FloatArray, FloatArray]:
    """
    Gradients of :func:`fc_forward`.

    Returns:
        tuple: (grad_input, grad_weights, grad_bias); weight and bias gradients are summed over the batch.
    """
    x = np.asarray(x, dtype=np.float64)
    grad_output = np.asarray(grad_output, dtype=np.float64)

    if grad_output.shape != x.shape[:-1] + (dense.weights.shape[1],):
        raise DimensionError(
            f"Gradient shape {grad_output.shape} does not match layer output for input {x.shape}"
        )

    x2 = np.atleast_2d(x)
    grad2 = np.atleast_2d(grad_output)

    grad_input = grad_output @ dense.weights.T
    grad_weights = x2.T @ grad2
    grad_bias = grad2.sum(axis=0)

    return grad_input, grad_weights, grad_bias
