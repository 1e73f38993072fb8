import numpy as np
import numpy.typing as npt

DEFAULT_ALPHA: float = 0.2

FloatArray = npt.NDArray[np.float64]


def leaky_relu(x: FloatArray, alpha: float = DEFAULT_ALPHA) -> FloatArray:
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"alpha must lie in [0, 1), got {alpha}")
    x = np.asarray(x, dtype=np.float64)
    return np.where(x >= 0.0, x, alpha * x)


def leaky_relu_backward(grad_output: FloatArray, x: FloatArray, alpha: float = DEFAULT_ALPHA) -> FloatArray:
    # slope at exactly 0 is taken as 1
    grad_output = np.asarray(grad_output, dtype=np.float64)
    return np.where(np.asarray(x) >= 0.0, grad_output, alpha * grad_output)
