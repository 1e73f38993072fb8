from typing import Sequence

import numpy as np
from scipy.stats import pearsonr

from tiny_raman_cnn.spectra.types import FloatArray

PEAK_TOLERANCE: int = 2


def lobe_width(values: FloatArray, center: int, search: int) -> float:
    """
    Half-maximum width of the lobe holding the largest value within center +/- search.

    Crossings are linearly interpolated between channels. Returns +inf when that largest
    value is not positive.
    """
    values = np.asarray(values, dtype=np.float64)
    low = max(0, center - search)
    high = min(values.size, center + search + 1)
    peak = low + int(np.argmax(values[low:high]))
    top = values[peak]
    if top <= 0:
        return float("inf")
    half = top / 2.0

    left = peak
    while left > 0 and values[left - 1] > half:
        left -= 1
    if left > 0:
        left_edge = left - 1 + (half - values[left - 1]) / (values[left] - values[left - 1])
    else:
        left_edge = 0.0

    right = peak
    while right < values.size - 1 and values[right + 1] > half:
        right += 1
    if right < values.size - 1:
        right_edge = right + (values[right] - half) / (values[right] - values[right + 1])
    else:
        right_edge = float(values.size - 1)

    return float(right_edge - left_edge)


def window_max(values: FloatArray, position: float, tolerance: int = PEAK_TOLERANCE) -> float:
    center = int(round(position))
    return float(np.max(values[max(0, center - tolerance):center + tolerance + 1]))


def peak_localization(
    maps: Sequence[FloatArray],
    defined: Sequence[float],
    random_peaks: Sequence[Sequence[float]],
    tolerance: int = PEAK_TOLERANCE,
) -> float:
    """
    Fraction of (spectrum, random peak) pairs where the map near the defined peak
    (within +/- tolerance channels) exceeds the map at the random peak channel.
    """
    passed = 0
    pairs = 0
    for values, position, extras in zip(maps, defined, random_peaks):
        defined_value = window_max(values, position, tolerance)
        for extra in extras:
            pairs += 1
            passed += int(defined_value > values[int(round(extra))])
    return passed / pairs if pairs else 1.0


def background_level(values: FloatArray, peak_positions: Sequence[float], exclusion: float) -> float:
    """
    Mean |map| over channels farther than ``exclusion`` from every peak, relative to max |map|.
    """
    values = np.asarray(values, dtype=np.float64)
    scale = float(np.max(np.abs(values)))
    if scale == 0.0:
        return 0.0
    channels = np.arange(values.size)
    background = np.ones(values.size, dtype=bool)
    for position in peak_positions:
        background &= np.abs(channels - position) > exclusion
    if not np.any(background):
        return 0.0
    return float(np.mean(np.abs(values[background])) / scale)


def map_correlation(values: FloatArray, reference: FloatArray) -> float:
    """Pearson correlation; 0 when either trace is constant."""
    if np.ptp(values) == 0 or np.ptp(reference) == 0:
        return 0.0
    return float(pearsonr(values, reference)[0])
