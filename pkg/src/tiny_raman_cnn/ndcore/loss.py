from typing import Tuple, Union

import numpy as np
import numpy.typing as npt
from scipy.special import log_softmax

from tiny_raman_cnn.errors import DimensionError

FloatArray = npt.NDArray[np.float64]


def softmax_cross_entropy(
    logits: FloatArray, onehot: FloatArray
) -> Tuple[Union[float, FloatArray], FloatArray, FloatArray]:
    """
    Softmax followed by cross entropy against one-hot targets.

    Args:
        logits (ndarray): Pre-softmax scores, (classes,) or (batch, classes).
        onehot (ndarray): Targets of the same shape.

    Returns:
        tuple: (loss, probs, grad_logits). The loss is a float for a single vector and
        one value per row for a batch; grad_logits = probs - onehot.
    """
    logits = np.asarray(logits, dtype=np.float64)
    onehot = np.asarray(onehot, dtype=np.float64)

    if logits.shape != onehot.shape:
        raise DimensionError(f"Logits shape {logits.shape} does not match labels {onehot.shape}")

    log_probs = log_softmax(logits, axis=-1)
    probs = np.exp(log_probs)
    loss = -np.sum(onehot * log_probs, axis=-1)

    if logits.ndim == 1:
        return float(loss), probs, probs - onehot
    return loss, probs, probs - onehot
