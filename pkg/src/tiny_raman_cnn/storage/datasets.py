"""
Dataset bundles and spectrum CSV files.

A bundle is a directory holding ``spectra.csv`` (an ``id`` column followed by one column per
grid point, named by its grid value), ``labels.csv`` (``id,class_index``) and ``meta.json``
(class count, seed and per-item generation records).

A spectrum CSV has the header ``wavenumber,intensity[,spectrum_id]`` with one row per sample;
``contribution`` is accepted in place of ``intensity`` so emitted maps can be read back.
"""
from __future__ import annotations

import io
import json
from dataclasses import asdict
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from tiny_raman_cnn.errors import DataError
from tiny_raman_cnn.logging import get_logger
from tiny_raman_cnn.spectra.preprocess import RawSpectrum
from tiny_raman_cnn.spectra.types import (
    GenerationRecord,
    LabeledDataset,
    MixtureRecipe,
    PeakSpec,
    Spectrum,
    one_hot,
)
from tiny_raman_cnn.storage.files import PathLike, atomic_write_text
from tiny_raman_cnn.viz.contribution import ContributionMap

SPECTRA_FILE: str = "spectra.csv"
LABELS_FILE: str = "labels.csv"
META_FILE: str = "meta.json"

WAVENUMBER_COLUMN: str = "wavenumber"
VALUE_COLUMNS: Tuple[str, ...] = ("intensity", "contribution")
ID_COLUMN: str = "spectrum_id"

logger = get_logger()


def _frame_to_csv(frame: pd.DataFrame) -> str:
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, lineterminator="\n")
    return buffer.getvalue()


def _record_from_dict(entry: Dict[str, Any]) -> GenerationRecord:
    mixture = entry.get("mixture")
    return GenerationRecord(
        class_index=int(entry["class_index"]),
        peaks=[PeakSpec(**peak) for peak in entry.get("peaks", [])],
        random_peaks=[PeakSpec(**peak) for peak in entry.get("random_peaks", [])],
        mixture=MixtureRecipe(**mixture) if mixture else None,
    )


def save_dataset(dataset: LabeledDataset, directory: PathLike, meta: Optional[Dict[str, Any]] = None) -> Path:
    """
    Writes ``dataset`` as a bundle into ``directory``.

    Args:
        dataset (LabeledDataset): Spectra on a shared grid.
        directory (PathLike): Output directory, created if needed.
        meta (Optional[Dict[str, Any]]): Extra entries for ``meta.json`` (recipe, flags).

    Returns:
        Path: The bundle directory.
    """
    target = Path(directory)
    ids = np.arange(len(dataset))

    spectra = pd.DataFrame(dataset.inputs, columns=[repr(float(g)) for g in dataset.grid])
    spectra.insert(0, "id", ids)
    labels = pd.DataFrame({"id": ids, "class_index": dataset.class_indices})

    document: Dict[str, Any] = dict(meta or {})
    document.update(
        n_classes=dataset.n_classes,
        n_spectra=len(dataset),
        seed=dataset.seed,
        records=[asdict(record) for record in dataset.records],
    )

    atomic_write_text(target / SPECTRA_FILE, _frame_to_csv(spectra))
    atomic_write_text(target / LABELS_FILE, _frame_to_csv(labels))
    atomic_write_text(target / META_FILE, json.dumps(document, indent=1, sort_keys=True) + "\n")
    logger.debug("Dataset bundle written: %s (%d spectra)", target, len(dataset))
    return target


def load_meta(directory: PathLike) -> Dict[str, Any]:
    path = Path(directory) / META_FILE
    try:
        meta: Dict[str, Any] = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as err:
        raise DataError(f"Cannot read {path}: {err}") from err
    return meta


def load_dataset(directory: PathLike) -> LabeledDataset:
    """
    Reads a bundle written by :func:`save_dataset`.

    Raises:
        DataError: If a file is missing, unreadable or inconsistent.
    """
    source = Path(directory)
    meta = load_meta(source)
    try:
        spectra = pd.read_csv(source / SPECTRA_FILE, float_precision="round_trip")
        labels = pd.read_csv(source / LABELS_FILE)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as err:
        raise DataError(f"Cannot read dataset bundle {source}: {err}") from err

    if "id" not in spectra.columns or list(labels.columns) != ["id", "class_index"]:
        raise DataError(f"Dataset bundle {source} has unexpected columns")
    if not np.array_equal(spectra["id"].to_numpy(), labels["id"].to_numpy()):
        raise DataError(f"Spectrum and label ids differ in {source}")

    try:
        grid = np.array([float(column) for column in spectra.columns[1:]])
        values = spectra.iloc[:, 1:].to_numpy(dtype=np.float64)
    except ValueError as err:
        raise DataError(f"Non-numeric data in {source / SPECTRA_FILE}: {err}") from err

    records = [_record_from_dict(entry) for entry in meta.get("records", [])]
    return LabeledDataset(
        spectra=[Spectrum(grid=grid, intensity=row) for row in values],
        labels=one_hot(labels["class_index"].to_numpy(), int(meta["n_classes"])),
        records=records,
        seed=meta.get("seed"),
    )


def _line_numbers(mask: pd.Series) -> List[int]:
    # header is line 1
    return [int(index) + 2 for index in np.flatnonzero(mask.to_numpy())]


def read_spectrum_csv(path: PathLike) -> List[Tuple[str, RawSpectrum]]:
    """
    Reads one or more raw spectra from a spectrum CSV.

    Returns:
        List[Tuple[str, RawSpectrum]]: (spectrum id, trace) in file order.

    Raises:
        DataError: Listing the line numbers of malformed or non-monotone rows.
    """
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as err:
        raise DataError(f"Cannot read spectrum file {path}: {err}") from err

    value_column = next((column for column in VALUE_COLUMNS if column in frame.columns), None)
    if WAVENUMBER_COLUMN not in frame.columns or value_column is None:
        raise DataError(
            f"{path}: expected header '{WAVENUMBER_COLUMN},intensity[,{ID_COLUMN}]', got {list(frame.columns)}"
        )

    wavenumber = pd.to_numeric(frame[WAVENUMBER_COLUMN], errors="coerce")
    values = pd.to_numeric(frame[value_column], errors="coerce")
    malformed = wavenumber.isna() | values.isna()
    if malformed.any():
        raise DataError(f"{path}: malformed rows at lines {_line_numbers(malformed)}")

    ids = frame[ID_COLUMN] if ID_COLUMN in frame.columns else pd.Series(["0"] * len(frame))
    spectra = []
    for spectrum_id in pd.unique(ids):
        rows = ids == spectrum_id
        x = wavenumber[rows]
        steps = x.diff()
        decreasing = steps.notna() & (steps <= 0)
        if decreasing.any():
            lines = [int(index) + 2 for index in x.index[decreasing.to_numpy()]]
            raise DataError(f"{path}: wavenumbers of spectrum {spectrum_id} not increasing at lines {lines}")
        try:
            spectra.append((str(spectrum_id), RawSpectrum(wavenumber=x.to_numpy(), counts=values[rows].to_numpy())))
        except DataError as err:
            raise DataError(f"{path}: spectrum {spectrum_id}: {err}") from err
    return spectra


def write_map_csv(contribution: ContributionMap, path: PathLike) -> Path:
    """Two-column CSV (wavenumber, contribution) for one contribution map."""
    frame = pd.DataFrame({WAVENUMBER_COLUMN: contribution.grid, "contribution": contribution.values})
    return atomic_write_text(path, _frame_to_csv(frame))
