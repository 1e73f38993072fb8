from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
import numpy.typing as npt

from tiny_raman_cnn.errors import DataError, DimensionError

FloatArray = npt.NDArray[np.float64]

MIX_RATIO_RANGE: Tuple[float, float] = (0.1, 0.5)


@dataclass
class Spectrum:
    """
    One intensity trace on an explicit grid.

    Attributes:
        grid (ndarray): Channel indices or wavenumbers (cm^-1), strictly increasing.
        intensity (ndarray): One value per grid point.
    """

    grid: FloatArray
    intensity: FloatArray

    def __post_init__(self) -> None:
        self.grid = np.asarray(self.grid, dtype=np.float64)
        self.intensity = np.asarray(self.intensity, dtype=np.float64)

        if self.grid.ndim != 1 or self.grid.shape != self.intensity.shape:
            raise DimensionError(
                f"Grid shape {self.grid.shape} and intensity shape {self.intensity.shape} differ"
            )
        if self.grid.size > 1 and not np.all(np.diff(self.grid) > 0):
            raise DataError("Spectrum grid must be strictly increasing")
        if not np.all(np.isfinite(self.intensity)):
            raise DataError("Spectrum intensities must be finite")

    def __len__(self) -> int:
        return int(self.grid.size)

    @classmethod
    def on_channels(cls, intensity: FloatArray) -> Spectrum:
        intensity = np.asarray(intensity, dtype=np.float64)
        return cls(grid=np.arange(intensity.size, dtype=np.float64), intensity=intensity)


@dataclass(frozen=True)
class PeakSpec:
    """
    A Lorentzian peak.

    Attributes:
        position (float): Centre, in channels.
        fwhm (float): Full width at half maximum, in channels.
        amplitude (float): Peak height.
    """

    position: float
    fwhm: float
    amplitude: float = 1.0

    def __post_init__(self) -> None:
        if self.fwhm <= 0:
            raise ValueError(f"Peak FWHM must be positive, got {self.fwhm}")
        if self.amplitude <= 0:
            raise ValueError(f"Peak amplitude must be positive, got {self.amplitude}")


@dataclass(frozen=True)
class MixtureRecipe:
    """
    How a mixed spectrum was made: base + ratio * other.

    Attributes:
        base_class (int): Class of the base spectrum, which is also the label.
        other_class (int): Class of the admixed spectrum.
        ratio (float): Admixture ratio in [0.1, 0.5].
    """

    base_class: int
    other_class: int
    ratio: float

    def __post_init__(self) -> None:
        if self.base_class == self.other_class:
            raise ValueError("A mixture needs two different classes")
        low, high = MIX_RATIO_RANGE
        if not low <= self.ratio <= high:
            raise ValueError(f"Mix ratio {self.ratio} outside [{low}, {high}]")


@dataclass
class GenerationRecord:
    """
    How one dataset item was produced.

    Attributes:
        class_index (int): The label.
        peaks (List[PeakSpec]): Peaks that define the class.
        random_peaks (List[PeakSpec]): Extra peaks unrelated to the class.
        mixture (Optional[MixtureRecipe]): Set for numerically mixed spectra.
    """

    class_index: int
    peaks: List[PeakSpec] = field(default_factory=list)
    random_peaks: List[PeakSpec] = field(default_factory=list)
    mixture: Optional[MixtureRecipe] = None


@dataclass
class LabeledDataset:
    """
    Spectra with one-hot labels.

    Attributes:
        spectra (List[Spectrum]): The inputs, all on the same grid.
        labels (ndarray): One-hot rows, (items, n_classes).
        records (List[GenerationRecord]): Per-item provenance; may be empty for ingested data.
        seed (Optional[int]): Seed the dataset was generated with.
    """

    spectra: List[Spectrum]
    labels: FloatArray
    records: List[GenerationRecord] = field(default_factory=list)
    seed: Optional[int] = None

    def __post_init__(self) -> None:
        self.labels = np.asarray(self.labels, dtype=np.float64)

        if self.labels.ndim != 2 or self.labels.shape[0] != len(self.spectra):
            raise DimensionError(
                f"{len(self.spectra)} spectra but labels have shape {self.labels.shape}"
            )
        if self.records and len(self.records) != len(self.spectra):
            raise DimensionError(f"{len(self.spectra)} spectra but {len(self.records)} records")
        if not (np.all((self.labels == 0.0) | (self.labels == 1.0)) and np.all(self.labels.sum(axis=1) == 1.0)):
            raise DataError("Every label must be one-hot")

    def __len__(self) -> int:
        return len(self.spectra)

    @property
    def n_classes(self) -> int:
        return int(self.labels.shape[1])

    @property
    def class_indices(self) -> npt.NDArray[np.intp]:
        return np.argmax(self.labels, axis=1)

    @property
    def inputs(self) -> FloatArray:
        """Intensities stacked into a (items, length) matrix."""
        if not self.spectra:
            return np.zeros((0, 0))
        return np.stack([spectrum.intensity for spectrum in self.spectra])

    @property
    def grid(self) -> FloatArray:
        return self.spectra[0].grid if self.spectra else np.zeros(0)

    def subset(self, indices: npt.NDArray[np.intp]) -> LabeledDataset:
        return LabeledDataset(
            spectra=[self.spectra[i] for i in indices],
            labels=self.labels[indices],
            records=[self.records[i] for i in indices] if self.records else [],
            seed=self.seed,
        )

    @classmethod
    def concatenate(cls, datasets: List[LabeledDataset]) -> LabeledDataset:
        if not datasets:
            raise DataError("Nothing to concatenate")
        n_classes = max(dataset.n_classes for dataset in datasets)
        spectra: List[Spectrum] = []
        labels = []
        records: List[GenerationRecord] = []
        for dataset in datasets:
            spectra += dataset.spectra
            labels.append(one_hot(dataset.class_indices, n_classes))
            records += dataset.records if dataset.records else [
                GenerationRecord(class_index=int(c)) for c in dataset.class_indices
            ]
        return cls(spectra=spectra, labels=np.concatenate(labels), records=records)


def one_hot(class_indices: npt.ArrayLike, n_classes: int) -> FloatArray:
    indices = np.asarray(class_indices, dtype=np.intp)
    if indices.size and (indices.min() < 0 or indices.max() >= n_classes):
        raise DataError(f"Class index outside [0, {n_classes})")
    return np.eye(n_classes)[indices]
