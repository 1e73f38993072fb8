from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.interpolate import CubicSpline

from tiny_raman_cnn.errors import DataError, DimensionError
from tiny_raman_cnn.logging import get_logger
from tiny_raman_cnn.spectra.types import FloatArray, Spectrum

GRID_START: float = 350.0
GRID_STOP: float = 1800.0
GRID_STEP: float = 1.0
MODEL_GRID: FloatArray = np.arange(GRID_START, GRID_STOP + GRID_STEP, GRID_STEP)
MODEL_LENGTH: int = MODEL_GRID.size

MIN_SPLINE_POINTS: int = 4

CHORD: str = "chord"
LEAST_SQUARES: str = "lstsq"

logger = get_logger()


@dataclass
class RawSpectrum:
    """
    A measured trace before preprocessing.

    Attributes:
        wavenumber (ndarray): Raman shift in cm^-1, strictly increasing.
        counts (ndarray): Detector counts.
    """

    wavenumber: FloatArray
    counts: FloatArray

    def __post_init__(self) -> None:
        self.wavenumber = np.asarray(self.wavenumber, dtype=np.float64)
        self.counts = np.asarray(self.counts, dtype=np.float64)

        if self.wavenumber.ndim != 1 or self.wavenumber.shape != self.counts.shape:
            raise DimensionError("Wavenumber and counts must be 1D arrays of equal length")
        if self.wavenumber.size < MIN_SPLINE_POINTS:
            raise DataError(f"A raw spectrum needs at least {MIN_SPLINE_POINTS} samples, got {self.wavenumber.size}")
        if not np.all(np.isfinite(self.wavenumber)) or not np.all(np.isfinite(self.counts)):
            raise DataError("Raw spectrum contains non-finite values")
        if not np.all(np.diff(self.wavenumber) > 0):
            raise DataError("Wavenumbers must be strictly increasing")


@dataclass
class ModelInput(Spectrum):
    """
    A preprocessed spectrum on the 350..1800 cm^-1 grid, max-normalized.

    Attributes:
        degenerate (bool): True when the trace had no positive maximum and was left unnormalized.
    """

    grid: FloatArray = field(default_factory=MODEL_GRID.copy)
    intensity: FloatArray = field(default_factory=lambda: np.zeros(MODEL_LENGTH))
    degenerate: bool = False

    def __post_init__(self) -> None:
        super().__post_init__()
        if len(self) != MODEL_LENGTH:
            raise DimensionError(f"Model inputs have {MODEL_LENGTH} channels, got {len(self)}")


def subtract_linear_baseline(
    raw: RawSpectrum, method: str = CHORD, span: Optional[Tuple[float, float]] = None
) -> RawSpectrum:
    """
    Removes a straight-line baseline.

    Args:
        raw (RawSpectrum): The trace.
        method (str): ``"chord"`` uses the line through the trace at the two ends of ``span``, so
            the trace becomes 0 there; ``"lstsq"`` uses the least-squares line through all samples.
        span (Optional[Tuple[float, float]]): Chord anchors in cm^-1, clamped to the sampled range.
            The chord is read off the natural spline through the samples, so a later resampling
            onto a grid spanning the same anchors starts and ends at 0. (Default: first and last sample)

    Returns:
        RawSpectrum: The corrected trace on the same wavenumbers.
    """
    x = raw.wavenumber
    if method == CHORD:
        if span is None:
            lo, hi = x[0], x[-1]
            y_lo, y_hi = raw.counts[0], raw.counts[-1]
        else:
            lo, hi = max(span[0], x[0]), min(span[1], x[-1])
            if hi <= lo:
                raise DataError(f"Spectrum covers {x[0]:.1f}-{x[-1]:.1f} cm^-1, outside {span[0]:.1f}-{span[1]:.1f}")
            y_lo, y_hi = CubicSpline(x, raw.counts, bc_type="natural")([lo, hi])
        slope = (y_hi - y_lo) / (hi - lo)
        baseline = y_lo + slope * (x - lo)
    elif method == LEAST_SQUARES:
        slope, intercept = np.polyfit(x, raw.counts, 1)
        baseline = intercept + slope * x
    else:
        raise ValueError(f"Unknown baseline method: {method}")

    corrected = raw.counts - baseline
    if method == CHORD and span is None:
        corrected[0] = corrected[-1] = 0.0
    return RawSpectrum(wavenumber=x, counts=corrected)


def spline_resample(raw: RawSpectrum, grid: FloatArray = MODEL_GRID) -> FloatArray:
    """
    Natural cubic spline through the samples, evaluated on ``grid``.

    Grid points outside the sampled range take the value of the nearest sample instead of an
    extrapolated cubic.
    """
    spline = CubicSpline(raw.wavenumber, raw.counts, bc_type="natural")
    values = spline(grid)

    below = grid < raw.wavenumber[0]
    above = grid > raw.wavenumber[-1]
    if np.any(below) or np.any(above):
        logger.warning(
            "Spectrum covers %.1f-%.1f cm^-1; clamping %d grid points to the nearest sample",
            raw.wavenumber[0], raw.wavenumber[-1], int(np.sum(below) + np.sum(above)),
        )
        values[below] = raw.counts[0]
        values[above] = raw.counts[-1]
    return np.asarray(values, dtype=np.float64)


def normalize_intensity(values: FloatArray) -> Tuple[FloatArray, bool]:
    """
    Divides by the maximum.

    Returns:
        tuple: (normalized values, degenerate); a trace without a positive maximum is returned
        unchanged with ``degenerate`` set.
    """
    values = np.asarray(values, dtype=np.float64)
    peak = float(np.max(values)) if values.size else 0.0
    if peak <= 0.0:
        logger.warning("Spectrum has no positive maximum; left unnormalized")
        return values.copy(), True
    return values / peak, False


def preprocess_pipeline(raw: RawSpectrum, baseline: str = CHORD) -> ModelInput:
    """Baseline subtraction, spline resampling onto the model grid, then max-normalization."""
    resampled = spline_resample(subtract_linear_baseline(raw, baseline, span=(GRID_START, GRID_STOP)))
    intensity, degenerate = normalize_intensity(resampled)
    return ModelInput(grid=MODEL_GRID.copy(), intensity=intensity, degenerate=degenerate)
