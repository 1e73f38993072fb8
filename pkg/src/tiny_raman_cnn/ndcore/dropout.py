from typing import Optional, Tuple

import numpy as np
import numpy.typing as npt

FloatArray = npt.NDArray[np.float64]

TRAIN: str = "train"
INFER: str = "infer"


def dropout(
    x: FloatArray, keep_prob: float, mode: str, rng: Optional[np.random.Generator] = None
) -> Tuple[FloatArray, FloatArray]:
    """
    Inverted dropout: kept entries are scaled by 1 / keep_prob, so inference is the identity.

    Args:
        x (ndarray): Activations.
        keep_prob (float): Probability of keeping an entry, in (0, 1].
        mode (str): ``"train"`` or ``"infer"``.
        rng (Optional[np.random.Generator]): Required in train mode.

    Returns:
        tuple: (output, mask) where output = x * mask.
    """
    if not 0.0 < keep_prob <= 1.0:
        raise ValueError(f"keep_prob must lie in (0, 1], got {keep_prob}")
    if mode not in (TRAIN, INFER):
        raise ValueError(f"Unknown dropout mode: {mode}")

    x = np.asarray(x, dtype=np.float64)
    if mode == INFER:
        return x, np.ones_like(x)

    if rng is None:
        raise ValueError("Train-mode dropout needs a random generator")

    mask = (rng.random(x.shape) < keep_prob) / keep_prob
    return x * mask, mask


def dropout_backward(grad_output: FloatArray, mask: FloatArray) -> FloatArray:
    return np.asarray(grad_output, dtype=np.float64) * mask
