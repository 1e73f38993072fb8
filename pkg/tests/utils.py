from typing import Callable, Sequence

import numpy as np
import numpy.typing as npt

from tiny_raman_cnn.core.settings import ArchConfig
from tiny_raman_cnn.spectra.types import LabeledDataset, Spectrum, one_hot

FloatArray = npt.NDArray[np.float64]

TINY_LENGTH: int = 32


def tiny_arch(n_classes: int = 2, dropout_keep: float = 0.5, flatten_order: str = "position") -> ArchConfig:
    return ArchConfig(
        n_classes=n_classes,
        input_length=TINY_LENGTH,
        conv_blocks=[(2, 3), (2, 3)],
        fc1_width=4,
        dropout_keep=dropout_keep,
        flatten_order=flatten_order,
    )


def numeric_gradient(f: Callable[[], float], x: FloatArray, eps: float = 1e-6) -> FloatArray:
    """Central differences of ``f`` with respect to every entry of ``x``, perturbed in place."""
    grad = np.zeros_like(x)
    for index in np.ndindex(x.shape):
        original = x[index]
        x[index] = original + eps
        plus = f()
        x[index] = original - eps
        minus = f()
        x[index] = original
        grad[index] = (plus - minus) / (2 * eps)
    return grad


def relative_error(actual: FloatArray, expected: FloatArray) -> float:
    scale = max(float(np.linalg.norm(actual)), float(np.linalg.norm(expected)), 1e-12)
    return float(np.linalg.norm(np.asarray(actual) - np.asarray(expected))) / scale


def peak_dataset(positions: Sequence[int], per_class: int, length: int = TINY_LENGTH, seed: int = 0) -> LabeledDataset:
    """Separable toy data: one narrow bump per class plus a little noise."""
    rng = np.random.default_rng(seed)
    grid = np.arange(length, dtype=np.float64)
    spectra = []
    classes = []
    for class_index, position in enumerate(positions):
        for _ in range(per_class):
            intensity = 1.0 / (1.0 + ((grid - position) / 1.5) ** 2) + rng.uniform(-0.02, 0.02, size=length)
            spectra.append(Spectrum(grid=grid, intensity=intensity))
            classes.append(class_index)
    return LabeledDataset(spectra=spectra, labels=one_hot(classes, len(positions)))
