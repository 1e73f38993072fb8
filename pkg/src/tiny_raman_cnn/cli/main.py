from __future__ import annotations

import json
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import click
import numpy as np
import pandas as pd

from tiny_raman_cnn import __version__
from tiny_raman_cnn.cli.experiments import EXPERIMENTS, REPORT_FILE, ExperimentSettings, emit_map, run_experiment
from tiny_raman_cnn.core.model import predict
from tiny_raman_cnn.core.settings import ArchConfig, TrainConfig
from tiny_raman_cnn.core.trainer import run_kfold, train
from tiny_raman_cnn.errors import DataError, NumericError, RamanCnnError
from tiny_raman_cnn.logging import get_logger, set_verbose
from tiny_raman_cnn.spectra.preprocess import CHORD, LEAST_SQUARES, ModelInput, preprocess_pipeline
from tiny_raman_cnn.spectra.specgen import (
    gen_common_peak_dataset,
    gen_mixture_dataset,
    gen_peak_dataset,
    gen_pure_library,
)
from tiny_raman_cnn.spectra.types import GenerationRecord, LabeledDataset, Spectrum, one_hot
from tiny_raman_cnn.storage.checkpoint import Checkpoint, checkpoint_load, checkpoint_save
from tiny_raman_cnn.storage.datasets import load_dataset, read_spectrum_csv, save_dataset
from tiny_raman_cnn.storage.files import atomic_write_text
from tiny_raman_cnn.viz.contribution import FC_MAP, GRADCAM, contribution_map

EXIT_OK: int = 0
EXIT_USAGE: int = 1
EXIT_DATA: int = 2
EXIT_NUMERIC: int = 3

CHECKPOINT_FILE: str = "checkpoint.json"
HISTORY_FILE: str = "history.json"
LIBRARY_DIR: str = "library"

METHODS = {"gradcam": GRADCAM, "fcmap": FC_MAP}

logger = get_logger()


class RamanCli(click.Group):
    """Command group that maps failures onto the tool's exit codes."""

    def main(self, *args: Any, **kwargs: Any) -> Any:  # type: ignore[override]
        kwargs["standalone_mode"] = False
        try:
            result = super().main(*args, **kwargs)
        except click.UsageError as err:
            err.show()
            sys.exit(EXIT_USAGE)
        except click.ClickException as err:
            err.show()
            sys.exit(EXIT_DATA)
        except click.Abort:
            click.echo("Aborted!", err=True)
            sys.exit(EXIT_USAGE)
        except NumericError as err:
            logger.error("Numeric failure: %s", err)
            sys.exit(EXIT_NUMERIC)
        except (RamanCnnError, OSError) as err:
            logger.error("%s", err)
            sys.exit(EXIT_DATA)
        except ValueError as err:
            logger.error("Invalid settings: %s", err)
            sys.exit(EXIT_USAGE)
        sys.exit(result if isinstance(result, int) else EXIT_OK)


def _number_list(kind: type) -> Any:
    def parse(ctx: click.Context, param: click.Parameter, value: Optional[str]) -> Optional[Tuple[Any, ...]]:
        if value is None:
            return None
        try:
            return tuple(kind(item) for item in value.split(",") if item.strip())
        except ValueError as err:
            raise click.BadParameter(f"expected comma-separated numbers, got {value!r}") from err
    return parse


def _write_json(path: Path, document: Dict[str, Any]) -> Path:
    return atomic_write_text(path, json.dumps(document, indent=1, sort_keys=True) + "\n")


@click.group(cls=RamanCli)
@click.version_option(__version__, prog_name="tiny-raman-cnn")
def cli() -> None:
    """Raman spectrum recognition with a small 1D CNN and contribution maps."""


@cli.command()
@click.option("--kind", required=True, type=click.Choice(["peaks", "common", "library", "mixture"]))
@click.option("--positions", default="100,500,1000", callback=_number_list(float), show_default=True,
              help="Defined peak positions (channels), one class each.")
@click.option("--per-class", default=20, show_default=True, type=click.IntRange(min=1))
@click.option("--length", default=1024, show_default=True, type=click.IntRange(min=2),
              help="Channels per spectrum.")
@click.option("--fwhm", default=4.0, show_default=True, type=click.FloatRange(min=0, min_open=True))
@click.option("--noise", default=0.025, show_default=True, type=click.FloatRange(min=0))
@click.option("--random-peaks", default=3, show_default=True, type=click.IntRange(min=0))
@click.option("--classes", default=8, show_default=True, type=click.IntRange(min=2),
              help="Library size for kinds library and mixture.")
@click.option("--per-pair", default=5, show_default=True, type=click.IntRange(min=1))
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", required=True, type=click.Path(file_okay=False, path_type=Path))
def synth(
    kind: str,
    positions: Tuple[float, ...],
    per_class: int,
    length: int,
    fwhm: float,
    noise: float,
    random_peaks: int,
    classes: int,
    per_pair: int,
    seed: int,
    out: Path,
) -> None:
    """Generate a synthetic dataset bundle."""
    rng = np.random.default_rng(seed)
    recipe: Dict[str, Any] = {"kind": kind, "seed": seed, "length": length}

    if kind in ("peaks", "common"):
        recipe.update(positions=list(positions), per_class=per_class, fwhm=fwhm, noise=noise)
        if kind == "peaks":
            dataset = gen_peak_dataset(positions, per_class, length, fwhm, noise, rng)
        else:
            recipe["random_peaks"] = random_peaks
            dataset = gen_common_peak_dataset(positions, per_class, random_peaks, length, fwhm, noise, rng)
    else:
        library_spectra = gen_pure_library(classes, length, rng)
        library = LabeledDataset(
            spectra=library_spectra,
            labels=one_hot(range(classes), classes),
            records=[GenerationRecord(class_index=c) for c in range(classes)],
            seed=seed,
        )
        recipe["classes"] = classes
        if kind == "library":
            dataset = library
        else:
            recipe["per_pair"] = per_pair
            dataset = gen_mixture_dataset(library_spectra, per_pair, rng)
            save_dataset(library, out / LIBRARY_DIR, {"recipe": {**recipe, "kind": "library"}})

    dataset.seed = seed
    save_dataset(dataset, out, {"recipe": recipe})
    click.echo(f"{len(dataset)} spectra, {dataset.n_classes} classes -> {out}")


def _label_lookup(path: Path) -> Dict[str, int]:
    try:
        frame = pd.read_csv(path, dtype=str)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as err:
        raise DataError(f"Cannot read labels file {path}: {err}") from err
    if list(frame.columns) != ["spectrum_id", "class_index"]:
        raise DataError(f"{path}: expected header 'spectrum_id,class_index', got {list(frame.columns)}")
    try:
        return {row.spectrum_id: int(row.class_index) for row in frame.itertuples()}
    except ValueError as err:
        raise DataError(f"{path}: non-integer class index: {err}") from err


@cli.command()
@click.argument("source", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--label", type=click.IntRange(min=0), help="Class index of every spectrum in SOURCE.")
@click.option("--labels", "labels_path", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              help="CSV mapping spectrum_id to class_index.")
@click.option("--classes", type=click.IntRange(min=2), help="Number of classes (default: highest label + 1).")
@click.option("--baseline", default=CHORD, show_default=True, type=click.Choice([CHORD, LEAST_SQUARES]))
@click.option("--out", required=True, type=click.Path(file_okay=False, path_type=Path))
def ingest(
    source: Path,
    label: Optional[int],
    labels_path: Optional[Path],
    classes: Optional[int],
    baseline: str,
    out: Path,
) -> None:
    """Preprocess a spectrum CSV into a labelled dataset bundle on the 350-1800 cm^-1 grid."""
    if (label is None) == (labels_path is None):
        raise click.UsageError("Give exactly one of --label or --labels")

    raw_spectra = read_spectrum_csv(source)
    lookup = _label_lookup(labels_path) if labels_path else {}
    inputs: List[ModelInput] = []
    class_indices: List[int] = []
    for spectrum_id, raw in raw_spectra:
        if label is not None:
            class_indices.append(label)
        elif spectrum_id in lookup:
            class_indices.append(lookup[spectrum_id])
        else:
            raise DataError(f"No label for spectrum {spectrum_id}")
        inputs.append(preprocess_pipeline(raw, baseline))

    n_classes = classes or max(class_indices) + 1
    if n_classes < 2:
        raise click.UsageError("A dataset needs at least two classes; pass --classes")
    dataset = LabeledDataset(spectra=list(inputs), labels=one_hot(class_indices, n_classes))
    save_dataset(dataset, out, {
        "recipe": {"kind": "ingested", "source": source.name, "baseline": baseline},
        "spectrum_ids": [spectrum_id for spectrum_id, _ in raw_spectra],
        "degenerate": [item.degenerate for item in inputs],
    })
    click.echo(f"{len(dataset)} spectra ingested -> {out}")


@cli.command(name="train")
@click.argument("datasets", nargs=-1, required=True, type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--lr", default=1e-4, show_default=True, type=float, help="Adam learning rate.")
@click.option("--epochs", default=100, show_default=True, type=int)
@click.option("--batch", default=32, show_default=True, type=int)
@click.option("--kfold", default=0, show_default=True, type=int, help="Cross-validation folds, 0 disables.")
@click.option("--filters", default=64, show_default=True, type=int, help="Filters per conv block.")
@click.option("--filter-size", default=8, show_default=True, type=int)
@click.option("--fc-width", default=128, show_default=True, type=int)
@click.option("--classes", type=int, help="Expected class count; must match the labels.")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--workers", default=1, show_default=True, type=int, help="Threads for cross-validation folds.")
@click.option("--verbose", is_flag=True, help="Log every epoch.")
@click.option("--out", required=True, type=click.Path(file_okay=False, path_type=Path))
def train_command(
    datasets: Sequence[Path],
    lr: float,
    epochs: int,
    batch: int,
    kfold: int,
    filters: int,
    filter_size: int,
    fc_width: int,
    classes: Optional[int],
    seed: int,
    workers: int,
    verbose: bool,
    out: Path,
) -> None:
    """Train on one or more dataset bundles and write checkpoint(s) and history."""
    loaded = [load_dataset(path) for path in datasets]
    dataset = loaded[0] if len(loaded) == 1 else LabeledDataset.concatenate(loaded)

    arch = ArchConfig(
        n_classes=classes or dataset.n_classes,
        input_length=dataset.inputs.shape[1],
        conv_blocks=[(filters, filter_size)] * 2,
        fc1_width=fc_width,
    )
    cfg = TrainConfig(
        learning_rate=lr, epochs=epochs, batch_size=batch, seed=seed, kfold=kfold, workers=workers, verbose=verbose
    )

    if kfold:
        report = run_kfold(arch, dataset, cfg)
        folds = []
        for fold in report.folds:
            checkpoint_save(Checkpoint(params=fold.params, train_config=cfg), out / f"fold{fold.index}.json")
            folds.append({
                "index": fold.index,
                "accuracy": fold.accuracy,
                "test_indices": fold.test_indices.tolist(),
                **asdict(fold.history),
            })
        _write_json(out / HISTORY_FILE, {
            "folds": folds,
            "fold_accuracies": report.fold_accuracies,
            "mean_accuracy": report.mean_accuracy,
            "pooled_accuracy": report.pooled_accuracy,
        })
        accuracies = ", ".join(f"{accuracy:.4f}" for accuracy in report.fold_accuracies)
        click.echo(f"fold accuracies: {accuracies}; mean {report.mean_accuracy:.4f}")
        return

    params, history = train(arch, dataset, cfg)
    checkpoint_save(Checkpoint(params=params, train_config=cfg), out / CHECKPOINT_FILE)
    _write_json(out / HISTORY_FILE, asdict(history))
    click.echo(f"final loss {history.losses[-1]:.6f}, accuracy {history.accuracies[-1]:.4f} -> {out}")


def _visualize_inputs(
    dataset_path: Optional[Path], spectrum_path: Optional[Path], baseline: str
) -> List[Tuple[str, Spectrum]]:
    if dataset_path is not None:
        dataset = load_dataset(dataset_path)
        return [(f"item{index}", spectrum) for index, spectrum in enumerate(dataset.spectra)]
    assert spectrum_path is not None
    return [(f"spectrum-{spectrum_id}", preprocess_pipeline(raw, baseline))
            for spectrum_id, raw in read_spectrum_csv(spectrum_path)]


@cli.command()
@click.argument("checkpoint_path", metavar="CHECKPOINT", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--dataset", "dataset_path", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--spectrum", "spectrum_path", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              help="Raw spectrum CSV, preprocessed before explaining.")
@click.option("--class", "target_class", type=int, help="Class to explain (default: the predicted class).")
@click.option("--method", default="fcmap", show_default=True, type=click.Choice(list(METHODS)))
@click.option("--baseline", default=CHORD, show_default=True, type=click.Choice([CHORD, LEAST_SQUARES]))
@click.option("--limit", type=click.IntRange(min=1), help="Explain at most this many spectra.")
@click.option("--out", required=True, type=click.Path(file_okay=False, path_type=Path))
def visualize(
    checkpoint_path: Path,
    dataset_path: Optional[Path],
    spectrum_path: Optional[Path],
    target_class: Optional[int],
    method: str,
    baseline: str,
    limit: Optional[int],
    out: Path,
) -> None:
    """Write a contribution-map CSV and an SVG overlay for every spectrum."""
    if (dataset_path is None) == (spectrum_path is None):
        raise click.UsageError("Give exactly one of --dataset or --spectrum")

    params = checkpoint_load(checkpoint_path).params
    n_classes = params.arch.n_classes
    if target_class is not None and not 0 <= target_class < n_classes:
        raise click.BadParameter(f"class {target_class} outside [0, {n_classes})", param_hint="--class")

    kind = METHODS[method]
    items = _visualize_inputs(dataset_path, spectrum_path, baseline)[:limit]
    for name, spectrum in items:
        _, predicted = predict(params, spectrum)
        explained = int(predicted) if target_class is None else target_class
        contribution = contribution_map(params, spectrum, explained, kind)
        files = emit_map(out, f"{name}-{kind}", spectrum, contribution,
                         f"{name}: class {explained} (predicted {int(predicted)})")
        click.echo(" ".join(str(out / file) for file in files))


@cli.command()
@click.argument("name", type=click.Choice(list(EXPERIMENTS)))
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--workers", default=1, show_default=True, type=click.IntRange(min=1))
@click.option("--epochs", type=click.IntRange(min=1), help="Override the experiment's epoch count.")
@click.option("--lr", type=click.FloatRange(min=0, min_open=True), help="Override the experiment's learning rate.")
@click.option("--batch", default=10, show_default=True, type=click.IntRange(min=1))
@click.option("--per-class", type=click.IntRange(min=1),
              help="Training spectra per class (default: 20 for filter_sweep, 100 for common_peak).")
@click.option("--test-per-class", default=10, show_default=True, type=click.IntRange(min=1))
@click.option("--random-peaks", default=3, show_default=True, type=click.IntRange(min=1))
@click.option("--sizes", default="8,16,32,64,128", show_default=True, callback=_number_list(int))
@click.option("--counts", default="8,16,64,256", show_default=True, callback=_number_list(int))
@click.option("--classes", default=8, show_default=True, type=click.IntRange(min=2))
@click.option("--per-pair", default=5, show_default=True, type=click.IntRange(min=1))
@click.option("--kfold", default=5, show_default=True, type=click.IntRange(min=2))
@click.option("--verbose", is_flag=True)
@click.option("--out", required=True, type=click.Path(file_okay=False, path_type=Path))
def experiment(
    name: str,
    seed: int,
    workers: int,
    epochs: Optional[int],
    lr: Optional[float],
    batch: int,
    per_class: Optional[int],
    test_per_class: int,
    random_peaks: int,
    sizes: Tuple[int, ...],
    counts: Tuple[int, ...],
    classes: int,
    per_pair: int,
    kfold: int,
    verbose: bool,
    out: Path,
) -> None:
    """Run one of the reproduction experiments and write its report."""
    settings = ExperimentSettings(
        seed=seed,
        workers=workers,
        epochs=epochs,
        learning_rate=lr,
        batch_size=batch,
        per_class=per_class,
        test_per_class=test_per_class,
        random_peaks=random_peaks,
        sizes=sizes,
        counts=counts,
        n_classes=classes,
        per_pair=per_pair,
        kfold=kfold,
        verbose=verbose,
    )
    report = run_experiment(name, settings, out)
    click.echo(json.dumps(report.summary, sort_keys=True))
    click.echo(f"report -> {out / REPORT_FILE}")


def main() -> None:
    set_verbose(False)
    cli()  # pylint: disable=no-value-for-parameter


if __name__ == "__main__":
    main()
