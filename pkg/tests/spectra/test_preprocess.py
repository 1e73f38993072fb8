import logging

import numpy as np
import pytest

from tiny_raman_cnn.errors import DataError, DimensionError
from tiny_raman_cnn.logging import LOGGER_NAME
from tiny_raman_cnn.spectra.preprocess import (
    MODEL_GRID,
    MODEL_LENGTH,
    ModelInput,
    RawSpectrum,
    normalize_intensity,
    preprocess_pipeline,
    spline_resample,
    subtract_linear_baseline,
)


def raw_peak(start: float = 200.0, stop: float = 2000.0, step: float = 2.0) -> RawSpectrum:
    x = np.arange(start, stop + step, step)
    counts = 500.0 + 0.3 * x + 2000.0 / (1.0 + ((x - 1000.0) / 5.0) ** 2)
    return RawSpectrum(wavenumber=x, counts=counts)


def test_model_grid() -> None:
    assert MODEL_LENGTH == 1451
    assert MODEL_GRID[0] == 350.0
    assert MODEL_GRID[-1] == 1800.0


def test_chord_baseline_zeroes_endpoints() -> None:
    corrected = subtract_linear_baseline(raw_peak(), "chord")

    assert corrected.counts[0] == 0.0
    assert corrected.counts[-1] == 0.0
    assert np.argmax(corrected.counts) == np.argmax(raw_peak().counts - 0.3 * raw_peak().wavenumber)


@pytest.mark.parametrize("method", ["chord", "lstsq"])
def test_baseline_removes_a_straight_line(method: str) -> None:
    x = np.linspace(300.0, 1900.0, 50)
    raw = RawSpectrum(wavenumber=x, counts=3.0 - 0.01 * x)

    np.testing.assert_allclose(subtract_linear_baseline(raw, method).counts, 0.0, atol=1e-9)


def test_unknown_baseline_method() -> None:
    with pytest.raises(ValueError):
        subtract_linear_baseline(raw_peak(), "spline")


def test_spline_resample_onto_model_grid() -> None:
    x = np.arange(200.0, 2001.0, 2.0)
    raw = RawSpectrum(wavenumber=x, counts=np.sin(x / 100.0))

    values = spline_resample(raw)

    assert values.shape == (1451,)
    np.testing.assert_allclose(values, np.sin(MODEL_GRID / 100.0), atol=1e-6)


def test_spline_resample_clamps_outside_coverage(caplog) -> None: # type: ignore
    x = np.arange(400.0, 1701.0, 5.0)
    raw = RawSpectrum(wavenumber=x, counts=np.cos(x / 200.0))

    with caplog.at_level(logging.WARNING, logger=LOGGER_NAME):
        values = spline_resample(raw)

    assert "clamping" in caplog.text
    assert np.all(values[MODEL_GRID < 400.0] == raw.counts[0])
    assert np.all(values[MODEL_GRID > 1700.0] == raw.counts[-1])


def test_normalize_intensity() -> None:
    values, degenerate = normalize_intensity(np.array([0.5, 2.0, -1.0]))

    np.testing.assert_allclose(values, [0.25, 1.0, -0.5])
    assert degenerate is False


def test_normalize_intensity_degenerate(caplog) -> None: # type: ignore
    with caplog.at_level(logging.WARNING, logger=LOGGER_NAME):
        values, degenerate = normalize_intensity(np.array([-1.0, -2.0, 0.0]))

    assert degenerate is True
    np.testing.assert_array_equal(values, [-1.0, -2.0, 0.0])
    assert "no positive maximum" in caplog.text


def test_preprocess_pipeline() -> None:
    model_input = preprocess_pipeline(raw_peak())

    assert isinstance(model_input, ModelInput)
    assert len(model_input) == 1451
    np.testing.assert_array_equal(model_input.grid, MODEL_GRID)
    assert np.max(model_input.intensity) == pytest.approx(1.0)
    assert model_input.grid[np.argmax(model_input.intensity)] == 1000.0
    assert model_input.degenerate is False


def test_raw_spectrum_validation() -> None:
    with pytest.raises(DataError):
        RawSpectrum(wavenumber=np.array([1.0, 3.0, 2.0, 4.0]), counts=np.ones(4))
    with pytest.raises(DataError):
        RawSpectrum(wavenumber=np.array([1.0, 2.0, 3.0]), counts=np.ones(3))
    with pytest.raises(DimensionError):
        RawSpectrum(wavenumber=np.arange(5.0), counts=np.ones(4))


def test_model_input_length() -> None:
    with pytest.raises(DimensionError):
        ModelInput(grid=np.arange(10.0), intensity=np.zeros(10))


@pytest.mark.parametrize("start, stop", [(200.0, 2000.0), (350.0, 1800.0), (400.0, 1700.0)])
def test_preprocess_pipeline_is_idempotent(start: float, stop: float) -> None:
    once = preprocess_pipeline(raw_peak(start, stop))

    twice = preprocess_pipeline(RawSpectrum(wavenumber=once.grid, counts=once.intensity))

    np.testing.assert_allclose(twice.intensity, once.intensity, rtol=0, atol=1e-9)


def test_preprocess_pipeline_zero_at_grid_ends() -> None:
    model_input = preprocess_pipeline(raw_peak(200.0, 2000.0))

    assert model_input.intensity[0] == pytest.approx(0.0, abs=1e-12)
    assert model_input.intensity[-1] == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize(
    "method, span",
    [
        ("chord", None),
        ("chord", (350.0, 1800.0)),
        ("lstsq", None),
    ]
)
def test_baseline_commutes_with_adding_a_line(method: str, span: tuple) -> None:
    raw = raw_peak()
    tilted = RawSpectrum(wavenumber=raw.wavenumber, counts=raw.counts + 40.0 - 0.07 * raw.wavenumber)

    expected = subtract_linear_baseline(raw, method, span).counts
    actual = subtract_linear_baseline(tilted, method, span).counts

    np.testing.assert_allclose(actual, expected, rtol=0, atol=1e-8)


def test_chord_span_outside_coverage() -> None:
    with pytest.raises(DataError):
        subtract_linear_baseline(raw_peak(1900.0, 2500.0), "chord", (350.0, 1800.0))
