from typing import List, Sequence, Tuple

import numpy as np

from tiny_raman_cnn.errors import DataError, DimensionError
from tiny_raman_cnn.logging import get_logger
from tiny_raman_cnn.spectra.types import (
    FloatArray,
    GenerationRecord,
    LabeledDataset,
    MixtureRecipe,
    MIX_RATIO_RANGE,
    PeakSpec,
    Spectrum,
    one_hot,
)

RANDOM_PEAK_AMPLITUDE: Tuple[float, float] = (0.5, 1.0)
RANDOM_PEAK_EXCLUSION_FWHMS: float = 3.0

LIBRARY_PEAKS_PER_CLASS: Tuple[int, int] = (4, 8)
LIBRARY_AMPLITUDE: Tuple[float, float] = (0.2, 1.0)
LIBRARY_FWHM: Tuple[float, float] = (4.0, 12.0)
LIBRARY_SECONDARY_CEILING: float = 0.8
LIBRARY_MARGIN: int = 20
LIBRARY_MAX_DRAWS: int = 10_000

logger = get_logger()


def lorentzian(peak: PeakSpec, length: int) -> Spectrum:
    """
    A noise-free Lorentzian on the channel grid 0..length-1.

    f(x) = amplitude / (1 + ((x - x0) / (FWHM / 2))^2)
    """
    grid = np.arange(length, dtype=np.float64)
    half_width = peak.fwhm / 2.0
    return Spectrum(grid=grid, intensity=peak.amplitude / (1.0 + ((grid - peak.position) / half_width) ** 2))


def _peaks_sum(peaks: Sequence[PeakSpec], length: int) -> FloatArray:
    total = np.zeros(length)
    for peak in peaks:
        total += lorentzian(peak, length).intensity
    return total


def add_white_noise(spectrum: Spectrum, fraction: float, rng: np.random.Generator) -> Spectrum:
    """
    Adds independent uniform noise within +/- fraction * max(intensity) to every channel.
    """
    if fraction < 0:
        raise ValueError(f"Noise fraction must not be negative, got {fraction}")
    bound = fraction * float(np.max(spectrum.intensity))
    noise = rng.uniform(-1.0, 1.0, size=len(spectrum)) * bound
    return Spectrum(grid=spectrum.grid, intensity=spectrum.intensity + noise)


def _check_positions(positions: Sequence[float], length: int) -> None:
    if len(set(positions)) != len(positions):
        raise DataError(f"Peak positions must be distinct: {list(positions)}")
    for position in positions:
        if not 0 <= position < length:
            raise DataError(f"Peak position {position} lies outside [0, {length})")


def gen_peak_dataset(
    positions: Sequence[float],
    per_class: int,
    length: int,
    fwhm: float,
    noise: float,
    rng: np.random.Generator,
) -> LabeledDataset:
    """
    One noisy single-peak spectrum per item; the class is the index of the peak position.

    Args:
        positions (Sequence[float]): Defined peak position of every class, in channels.
        per_class (int): Spectra per class.
        length (int): Channels per spectrum.
        fwhm (float): Peak width, in channels.
        noise (float): Noise fraction of the spectrum maximum.
        rng (np.random.Generator): Noise generator.

    Returns:
        LabeledDataset: ``len(positions) * per_class`` spectra, grouped by class.
    """
    return gen_common_peak_dataset(positions, per_class, 0, length, fwhm, noise, rng)


def _random_peak_positions(
    positions: Sequence[float], count: int, length: int, exclusion: float, rng: np.random.Generator
) -> FloatArray:
    grid = np.arange(length, dtype=np.float64)
    allowed = np.ones(length, dtype=bool)
    for position in positions:
        allowed &= np.abs(grid - position) > exclusion
    if not np.any(allowed):
        raise DataError("Exclusion zones leave no channel for random peaks")
    return rng.choice(grid[allowed], size=count)


def gen_common_peak_dataset(
    positions: Sequence[float],
    per_class: int,
    n_random_peaks: int,
    length: int,
    fwhm: float,
    noise: float,
    rng: np.random.Generator,
    amplitude_range: Tuple[float, float] = RANDOM_PEAK_AMPLITUDE,
    exclusion_fwhms: float = RANDOM_PEAK_EXCLUSION_FWHMS,
) -> LabeledDataset:
    """
    Spectra holding their class's defined peak plus ``n_random_peaks`` unrelated Lorentzians.

    Random peaks are placed uniformly on the channels farther than ``exclusion_fwhms * fwhm``
    from every defined position, with amplitudes uniform in ``amplitude_range`` and width ``fwhm``.
    With no random peaks the random stream is the same as :func:`gen_peak_dataset`.
    """
    if per_class < 1:
        raise ValueError("\"per_class\" must be at least 1")
    if n_random_peaks < 0:
        raise ValueError("\"n_random_peaks\" must not be negative")
    _check_positions(positions, length)

    n_classes = len(positions)
    spectra: List[Spectrum] = []
    records: List[GenerationRecord] = []
    classes: List[int] = []

    for class_index, position in enumerate(positions):
        defined = PeakSpec(position=float(position), fwhm=fwhm)
        for _ in range(per_class):
            random_peaks: List[PeakSpec] = []
            if n_random_peaks:
                centres = _random_peak_positions(positions, n_random_peaks, length, exclusion_fwhms * fwhm, rng)
                amplitudes = rng.uniform(*amplitude_range, size=n_random_peaks)
                random_peaks = [
                    PeakSpec(position=float(c), fwhm=fwhm, amplitude=float(a))
                    for c, a in zip(centres, amplitudes)
                ]

            clean = Spectrum.on_channels(_peaks_sum([defined] + random_peaks, length))
            spectra.append(add_white_noise(clean, noise, rng))
            records.append(GenerationRecord(class_index=class_index, peaks=[defined], random_peaks=random_peaks))
            classes.append(class_index)

    logger.debug("Generated %d spectra for %d classes", len(spectra), n_classes)
    return LabeledDataset(spectra=spectra, labels=one_hot(classes, n_classes), records=records)


def _library_peaks(
    strongest: float,
    length: int,
    rng: np.random.Generator,
    peaks_per_class: Tuple[int, int],
    amplitude_range: Tuple[float, float],
    fwhm_range: Tuple[float, float],
) -> List[PeakSpec]:
    spacing = 3.0 * fwhm_range[1]
    peaks = [PeakSpec(position=strongest, fwhm=float(rng.uniform(*fwhm_range)), amplitude=amplitude_range[1])]
    ceiling = LIBRARY_SECONDARY_CEILING * amplitude_range[1]

    n_peaks = int(rng.integers(peaks_per_class[0], peaks_per_class[1] + 1))
    draws = 0
    while len(peaks) < n_peaks:
        draws += 1
        if draws > LIBRARY_MAX_DRAWS:
            raise DataError(f"Could not place {n_peaks} separated peaks on a {length}-channel grid")
        position = float(rng.integers(LIBRARY_MARGIN, length - LIBRARY_MARGIN))
        if any(abs(position - peak.position) < spacing for peak in peaks):
            continue
        peaks.append(
            PeakSpec(
                position=position,
                fwhm=float(rng.uniform(*fwhm_range)),
                amplitude=float(rng.uniform(amplitude_range[0], ceiling)),
            )
        )
    return peaks


def gen_pure_library(
    n_classes: int,
    length: int,
    rng: np.random.Generator,
    peaks_per_class: Tuple[int, int] = LIBRARY_PEAKS_PER_CLASS,
    amplitude_range: Tuple[float, float] = LIBRARY_AMPLITUDE,
    fwhm_range: Tuple[float, float] = LIBRARY_FWHM,
) -> List[Spectrum]:
    """
    Synthetic pure-component spectra, one per class, each max-normalized to 1.

    Every class gets a different strongest-peak position, spaced by at least three of the
    widest FWHM, and its secondary peaks are kept apart from each other so the strongest peak
    stays the global maximum.

    Args:
        n_classes (int): Number of pure spectra.
        length (int): Channels per spectrum.
        rng (np.random.Generator): Generator for every random choice.
        peaks_per_class (Tuple[int, int]): Inclusive range of peak counts.
        amplitude_range (Tuple[float, float]): Peak amplitude range; the strongest peak gets the upper end.
        fwhm_range (Tuple[float, float]): Peak width range, in channels.

    Returns:
        List[Spectrum]: The library on the channel grid.
    """
    if n_classes < 2:
        raise ValueError("\"n_classes\" must be at least 2")

    spacing = int(np.ceil(3.0 * fwhm_range[1]))
    candidates = np.arange(LIBRARY_MARGIN, length - LIBRARY_MARGIN, spacing, dtype=np.float64)
    if len(candidates) < n_classes:
        raise DataError(f"A {length}-channel grid cannot hold {n_classes} distinct strongest peaks")

    strongest = rng.choice(candidates, size=n_classes, replace=False)
    library = []
    for position in strongest:
        peaks = _library_peaks(float(position), length, rng, peaks_per_class, amplitude_range, fwhm_range)
        intensity = _peaks_sum(peaks, length)
        library.append(Spectrum.on_channels(intensity / np.max(intensity)))
    return library


def mix_spectra(base: Spectrum, other: Spectrum, ratio: float) -> Spectrum:
    """
    base + ratio * other, max-normalized to 1.

    Raises:
        DimensionError: If the two spectra are on different grids.
    """
    if not np.array_equal(base.grid, other.grid):
        raise DimensionError("Only spectra on the same grid can be mixed")
    if ratio <= 0:
        raise ValueError(f"Mix ratio must be positive, got {ratio}")

    mixed = base.intensity + ratio * other.intensity
    return Spectrum(grid=base.grid, intensity=mixed / np.max(mixed))


def gen_mixture_dataset(library: Sequence[Spectrum], mixes_per_pair: int, rng: np.random.Generator) -> LabeledDataset:
    """
    Mixes every library spectrum with each other one ``mixes_per_pair`` times at ratios drawn
    uniformly from [0.1, 0.5]. Labels are the base class only; the ratio is kept in the records.

    Returns:
        LabeledDataset: ``N * (N - 1) * mixes_per_pair`` spectra.
    """
    n_classes = len(library)
    if n_classes < 2:
        raise ValueError("A mixture dataset needs at least two pure spectra")
    if mixes_per_pair < 1:
        raise ValueError("\"mixes_per_pair\" must be at least 1")

    spectra: List[Spectrum] = []
    records: List[GenerationRecord] = []
    for base_class in range(n_classes):
        for other_class in range(n_classes):
            if other_class == base_class:
                continue
            for _ in range(mixes_per_pair):
                recipe = MixtureRecipe(base_class, other_class, float(rng.uniform(*MIX_RATIO_RANGE)))
                spectra.append(mix_spectra(library[base_class], library[other_class], recipe.ratio))
                records.append(GenerationRecord(class_index=base_class, mixture=recipe))

    classes = [record.class_index for record in records]
    return LabeledDataset(spectra=spectra, labels=one_hot(classes, n_classes), records=records)
