"""
Experiment runners: filter-parameter sweep, common-peak extraction and mixed-spectrum
common-component extraction. Each runner writes map CSVs, SVG overlays and a ``report.json``
into its output directory.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from tiny_raman_cnn.core.model import ModelParams, predict
from tiny_raman_cnn.core.settings import ArchConfig, TrainConfig
from tiny_raman_cnn.core.trainer import evaluate, run_kfold, train
from tiny_raman_cnn.logging import get_logger, set_verbose
from tiny_raman_cnn.spectra.preprocess import MODEL_LENGTH
from tiny_raman_cnn.spectra.specgen import (
    gen_common_peak_dataset,
    gen_mixture_dataset,
    gen_peak_dataset,
    gen_pure_library,
    mix_spectra,
)
from tiny_raman_cnn.spectra.types import LabeledDataset, Spectrum
from tiny_raman_cnn.storage.datasets import write_map_csv
from tiny_raman_cnn.storage.files import PathLike, atomic_write_text
from tiny_raman_cnn.viz.contribution import FC_MAP, GRADCAM, ContributionMap, contribution_map
from tiny_raman_cnn.viz.metrics import (
    background_level,
    lobe_width,
    map_correlation,
    peak_localization,
    window_max,
)
from tiny_raman_cnn.viz.svg import render_overlay

FILTER_SWEEP: str = "filter_sweep"
COMMON_PEAK: str = "common_peak"
MIXTURE: str = "mixture"
EXPERIMENTS: Tuple[str, ...] = (FILTER_SWEEP, COMMON_PEAK, MIXTURE)

REPORT_FILE: str = "report.json"

PEAK_POSITIONS: Tuple[float, ...] = (100.0, 500.0, 1000.0)
PEAK_LENGTH: int = 1024
PEAK_FWHM: float = 4.0
PEAK_NOISE: float = 0.025
SWEEP_PER_CLASS: int = 20
COMMON_PER_CLASS: int = 100

SWEEP_SIZES: Tuple[int, ...] = (8, 16, 32, 64, 128)
SWEEP_COUNTS: Tuple[int, ...] = (8, 16, 64, 256)
SWEEP_FIXED_COUNT: int = 64
SWEEP_FIXED_SIZE: int = 8
SWEEP_CLASS: int = 1
SWEEP_SEARCH: int = 50

GRADCAM_RANDOM_PEAK_SHARE: float = 0.25
PEAK_EXCLUSION_FWHMS: float = 3.0

SHOWCASE_RATIO: float = 0.45
SHOWCASE_CONTAMINANT: int = 0
SHOWCASE_BASES: Tuple[int, ...] = (1, 2, 3)

logger = get_logger()


@dataclass
class ExperimentSettings:
    """
    A dataclass to store experiment settings. Unset training knobs fall back to the
    recipe of the chosen experiment.

    Attributes:
        seed (int): Seed for data generation and training. (Default: 0)
        workers (int): Threads for independent runs and folds. (Default: 1)
        epochs (Optional[int]): Training epochs. (Default: 100, mixture 30)
        learning_rate (Optional[float]): Adam step size. (Default: 1e-4, mixture 1e-3)
        batch_size (int): Mini-batch size. (Default: 10)
        per_class (Optional[int]): Training spectra per class for the Lorentzian experiments.
            (Default: 20, common peak 100)
        test_per_class (int): Held-out spectra per class for the Lorentzian experiments. (Default: 10)
        random_peaks (int): Unrelated peaks per common-peak spectrum. (Default: 3)
        sizes (Tuple[int, ...]): Filter sizes swept at 64 filters. (Default: 8, 16, 32, 64, 128)
        counts (Tuple[int, ...]): Filter counts swept at size 8. (Default: 8, 16, 64, 256)
        n_classes (int): Pure spectra in the mixture library. (Default: 8)
        per_pair (int): Mixtures per ordered pair of library spectra. (Default: 5)
        kfold (int): Cross-validation folds of the mixture experiment. (Default: 5)
        verbose (bool): Whether or not to log every epoch. (Default: False)
    """

    seed: int = 0
    workers: int = 1
    epochs: Optional[int] = None
    learning_rate: Optional[float] = None
    batch_size: int = 10
    per_class: Optional[int] = None
    test_per_class: int = 10
    random_peaks: int = 3
    sizes: Tuple[int, ...] = SWEEP_SIZES
    counts: Tuple[int, ...] = SWEEP_COUNTS
    n_classes: int = 8
    per_pair: int = 5
    kfold: int = 5
    verbose: bool = False

    def __post_init__(self) -> None:
        if (self.per_class is not None and self.per_class < 1) or self.test_per_class < 1:
            raise ValueError("\"per_class\" and \"test_per_class\" must be at least 1")
        if self.random_peaks < 1:
            raise ValueError("\"random_peaks\" must be at least 1")
        if not self.sizes or not self.counts:
            raise ValueError("The filter sweep needs at least one size and one count")
        if self.n_classes < 2:
            raise ValueError("\"n_classes\" must be at least 2")
        if self.kfold < 2:
            raise ValueError("\"kfold\" must be at least 2")

    def train_config(self, epochs: int, learning_rate: float, seed: Optional[int] = None, kfold: int = 0) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate or learning_rate,
            epochs=self.epochs or epochs,
            batch_size=self.batch_size,
            seed=self.seed if seed is None else seed,
            kfold=kfold,
            workers=self.workers,
            verbose=self.verbose,
        )


@dataclass
class RunEntry:
    """
    One trained configuration of an experiment.

    Attributes:
        name (str): Run label.
        config (Dict[str, Any]): Architecture and training settings of the run.
        accuracy (Optional[float]): Held-out accuracy.
        metrics (Dict[str, Any]): Run-level measurements.
        files (List[str]): Emitted files, relative to the experiment directory.
    """

    name: str
    config: Dict[str, Any]
    accuracy: Optional[float] = None
    metrics: Dict[str, Any] = field(default_factory=dict)
    files: List[str] = field(default_factory=list)


@dataclass
class ExperimentReport:
    experiment: str
    seed: int
    runs: List[RunEntry] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)
    definitions: Dict[str, str] = field(default_factory=dict)

    @property
    def files(self) -> List[str]:
        return [name for run in self.runs for name in run.files]


def _run_config(arch: ArchConfig, cfg: TrainConfig) -> Dict[str, Any]:
    return {"arch": asdict(arch), "train": asdict(cfg)}


def emit_map(out: Path, stem: str, spectrum: Spectrum, contribution: ContributionMap, title: str) -> List[str]:
    """
    Writes one map as ``<stem>.csv`` and its overlay as ``<stem>.svg``.

    Returns:
        List[str]: The two file names, relative to ``out``.
    """
    csv_path = write_map_csv(contribution, out / f"{stem}.csv")
    svg_path = atomic_write_text(out / f"{stem}.svg", render_overlay(spectrum.intensity, contribution, title))
    return [csv_path.name, svg_path.name]


def write_report(report: ExperimentReport, out: PathLike) -> Path:
    """
    Writes ``report.json``; file references that do not exist are dropped with a warning.
    """
    target = Path(out)
    for run in report.runs:
        missing = [name for name in run.files if not (target / name).is_file()]
        for name in missing:
            logger.warning("Run %s: %s was not written, dropped from the report", run.name, name)
        run.files = [name for name in run.files if name not in missing]
    text = json.dumps(asdict(report), indent=1, sort_keys=True, default=float) + "\n"
    return atomic_write_text(target / REPORT_FILE, text)


def _peak_datasets(
    settings: ExperimentSettings, n_random_peaks: int, per_class: int
) -> Tuple[LabeledDataset, LabeledDataset]:
    rng = np.random.default_rng(settings.seed)
    per_class = settings.per_class or per_class
    if n_random_peaks:
        trainset = gen_common_peak_dataset(
            PEAK_POSITIONS, per_class, n_random_peaks, PEAK_LENGTH, PEAK_FWHM, PEAK_NOISE, rng
        )
        testset = gen_common_peak_dataset(
            PEAK_POSITIONS, settings.test_per_class, n_random_peaks, PEAK_LENGTH, PEAK_FWHM, PEAK_NOISE, rng
        )
    else:
        trainset = gen_peak_dataset(PEAK_POSITIONS, per_class, PEAK_LENGTH, PEAK_FWHM, PEAK_NOISE, rng)
        testset = gen_peak_dataset(PEAK_POSITIONS, settings.test_per_class, PEAK_LENGTH, PEAK_FWHM, PEAK_NOISE, rng)
    return trainset, testset


def sweep_configurations(sizes: Sequence[int], counts: Sequence[int]) -> List[Tuple[int, int]]:
    """(filter_count, filter_size) pairs: the size axis at 64 filters, then the count axis at size 8."""
    configs = [(SWEEP_FIXED_COUNT, size) for size in sizes] + [(count, SWEEP_FIXED_SIZE) for count in counts]
    return list(dict.fromkeys(configs))


def run_filter_sweep(settings: ExperimentSettings, out: PathLike) -> ExperimentReport:
    """
    Trains one model per filter configuration on the three-peak dataset and measures how
    sharply the FC contribution map focuses on the 500-channel peak.
    """
    target = Path(out)
    trainset, testset = _peak_datasets(settings, 0, SWEEP_PER_CLASS)
    class_spectra = [spectrum for spectrum, c in zip(testset.spectra, testset.class_indices) if c == SWEEP_CLASS]
    centre = int(PEAK_POSITIONS[SWEEP_CLASS])

    def run(config: Tuple[int, int]) -> RunEntry:
        count, size = config
        arch = ArchConfig(n_classes=len(PEAK_POSITIONS), input_length=PEAK_LENGTH, conv_blocks=[(count, size)] * 2)
        cfg = settings.train_config(epochs=100, learning_rate=1e-4)
        params, _ = train(arch, trainset, cfg)

        maps = [contribution_map(params, spectrum, SWEEP_CLASS, FC_MAP) for spectrum in class_spectra]
        widths = [lobe_width(m.values, centre, SWEEP_SEARCH) for m in maps]
        name = f"size{size}-count{count}"
        files = emit_map(target, f"{name}-{FC_MAP}", class_spectra[0], maps[0], f"filter size {size} ({count})")

        logger.info("Sweep %s: lobe width %.2f ch", name, float(np.mean(widths)))
        return RunEntry(
            name=name,
            config=_run_config(arch, cfg),
            accuracy=evaluate(params, testset),
            metrics={"filter_size": size, "filter_count": count, "lobe_width": float(np.mean(widths))},
            files=files,
        )

    with ThreadPoolExecutor(max_workers=settings.workers) as executor:
        runs = list(executor.map(run, sweep_configurations(settings.sizes, settings.counts)))

    by_size = {run.metrics["filter_size"]: run.metrics["lobe_width"]
               for run in runs if run.metrics["filter_count"] == SWEEP_FIXED_COUNT}
    summary: Dict[str, Any] = {"lobe_width_by_size": by_size}
    if len(by_size) > 1:
        smallest, largest = min(by_size), max(by_size)
        summary["sharper_with_smaller_filters"] = bool(by_size[smallest] < by_size[largest])

    return ExperimentReport(
        experiment=FILTER_SWEEP,
        seed=settings.seed,
        runs=runs,
        summary=summary,
        definitions={
            "lobe_width": (
                f"half-maximum width in channels of the FC-map lobe holding the map maximum within "
                f"{centre} +/- {SWEEP_SEARCH} ch, linearly interpolated, averaged over the class-{SWEEP_CLASS} "
                "test spectra"
            ),
        },
    )


def _random_peak_share(values: np.ndarray, random_positions: Sequence[float]) -> float:
    top = float(np.max(values))
    if top <= 0:
        return 0.0
    return max(window_max(values, position) for position in random_positions) / top


def run_common_peak(settings: ExperimentSettings, out: PathLike) -> ExperimentReport:
    """
    Trains on spectra carrying one defined peak plus unrelated random peaks and checks that the
    FC map singles out the defined peak where Grad-CAM also lights up the random ones.
    """
    target = Path(out)
    trainset, testset = _peak_datasets(settings, settings.random_peaks, COMMON_PER_CLASS)
    arch = ArchConfig(n_classes=len(PEAK_POSITIONS), input_length=PEAK_LENGTH)
    cfg = settings.train_config(epochs=100, learning_rate=1e-4)
    params, history = train(arch, trainset, cfg, testset)

    fc_maps: List[np.ndarray] = []
    shares: List[float] = []
    backgrounds: List[float] = []
    defined: List[float] = []
    random_positions: List[List[float]] = []
    for spectrum, record in zip(testset.spectra, testset.records):
        position = record.peaks[0].position
        extras = [peak.position for peak in record.random_peaks]
        fc_map = contribution_map(params, spectrum, record.class_index, FC_MAP).values
        gradcam = contribution_map(params, spectrum, record.class_index, GRADCAM).values

        fc_maps.append(fc_map)
        defined.append(position)
        random_positions.append(extras)
        shares.append(_random_peak_share(gradcam, extras))
        backgrounds.append(background_level(fc_map, [position] + extras, PEAK_EXCLUSION_FWHMS * PEAK_FWHM))

    files: List[str] = []
    for class_index in range(arch.n_classes):
        item = int(np.flatnonzero(testset.class_indices == class_index)[0])
        spectrum = testset.spectra[item]
        for kind in (GRADCAM, FC_MAP):
            contribution = contribution_map(params, spectrum, class_index, kind)
            files += emit_map(target, f"class{class_index}-{kind}", spectrum, contribution,
                              f"class {class_index} ({kind})")

    localization = peak_localization(fc_maps, defined, random_positions)
    mean_share = float(np.mean(shares))
    run = RunEntry(
        name="common_peak",
        config=_run_config(arch, cfg),
        accuracy=history.test_accuracy,
        metrics={
            "fc_peak_localization": localization,
            "gradcam_random_peak_share": mean_share,
            "fc_background_level": float(np.mean(backgrounds)),
            "train_spectra": len(trainset),
            "final_loss": history.losses[-1],
        },
        files=files,
    )
    logger.info("Common peak: localization %.3f, Grad-CAM random-peak share %.3f", localization, mean_share)

    return ExperimentReport(
        experiment=COMMON_PEAK,
        seed=settings.seed,
        runs=[run],
        summary={
            "fc_peak_localization": localization,
            "gradcam_highlights_random_peaks": mean_share >= GRADCAM_RANDOM_PEAK_SHARE,
        },
        definitions={
            "fc_peak_localization": (
                "fraction of (test spectrum, random peak) pairs where the FC map within +/- 2 ch of the "
                "defined peak exceeds the FC map at the random peak channel"
            ),
            "gradcam_random_peak_share": (
                "mean over test spectra of max Grad-CAM near any random peak divided by the global max"
            ),
            "fc_background_level": (
                f"mean |FC map| farther than {PEAK_EXCLUSION_FWHMS:g} FWHM from every peak, over max |FC map|"
            ),
        },
    )


def _window_min(values: np.ndarray, position: float) -> float:
    return -window_max(-values, position)


def _mixture_checks(
    params: ModelParams, dataset: LabeledDataset, library: Sequence[Spectrum]
) -> Tuple[int, int, int]:
    """(correlation passes, mixtures checked, mixtures negative at the contaminant's strongest peak)."""
    passes = negatives = 0
    for spectrum, record in zip(dataset.spectra, dataset.records):
        recipe = record.mixture
        if recipe is None:
            continue
        values = contribution_map(params, spectrum, recipe.base_class, FC_MAP).values
        own = map_correlation(values, library[recipe.base_class].intensity)
        other = map_correlation(values, library[recipe.other_class].intensity)
        passes += int(own > other)
        strongest = float(np.argmax(library[recipe.other_class].intensity))
        negatives += int(_window_min(values, strongest) < 0)
    return passes, len(dataset), negatives


def run_mixture(settings: ExperimentSettings, out: PathLike) -> ExperimentReport:
    """
    Cross-validated training on numerically mixed spectra labelled by their base component,
    followed by FC-map checks against the pure library. Every fold model is also scored on a
    second, independently drawn mixture set.
    """
    target = Path(out)
    rng = np.random.default_rng(settings.seed)
    library = gen_pure_library(settings.n_classes, MODEL_LENGTH, rng)
    dataset = gen_mixture_dataset(library, settings.per_pair, rng)
    testset = gen_mixture_dataset(library, settings.per_pair, rng)

    arch = ArchConfig(n_classes=settings.n_classes, input_length=MODEL_LENGTH)
    cfg = settings.train_config(epochs=30, learning_rate=1e-3, kfold=settings.kfold)
    report = run_kfold(arch, dataset, cfg)

    runs: List[RunEntry] = []
    passes = checked = negatives = 0
    test_passes = test_checked = test_negatives = 0
    test_accuracies: List[float] = []
    for fold in report.folds:
        fold_passes, fold_checked, fold_negatives = _mixture_checks(
            fold.params, dataset.subset(fold.test_indices), library
        )
        passes += fold_passes
        checked += fold_checked
        negatives += fold_negatives
        fold_test_passes, fold_test_checked, fold_test_negatives = _mixture_checks(fold.params, testset, library)
        test_passes += fold_test_passes
        test_checked += fold_test_checked
        test_negatives += fold_test_negatives
        test_accuracies.append(evaluate(fold.params, testset))
        runs.append(
            RunEntry(
                name=f"fold{fold.index}",
                config=_run_config(arch, cfg),
                accuracy=fold.accuracy,
                metrics={
                    "correlation_pass_rate": fold_passes / fold_checked,
                    "negative_at_contaminant": fold_negatives,
                    "final_loss": fold.history.losses[-1],
                    "test_accuracy": test_accuracies[-1],
                    "test_correlation_pass_rate": fold_test_passes / fold_test_checked,
                    "test_negative_at_contaminant": fold_test_negatives,
                },
            )
        )

    showcase = runs[0]
    params = report.folds[0].params
    contaminant = library[SHOWCASE_CONTAMINANT]
    for base in (b for b in SHOWCASE_BASES if b < settings.n_classes):
        spectrum = mix_spectra(library[base], contaminant, SHOWCASE_RATIO)
        probs, predicted = predict(params, spectrum)
        contribution = contribution_map(params, spectrum, base, FC_MAP)
        showcase.files += emit_map(
            target, f"showcase-class{base}-with{SHOWCASE_CONTAMINANT}-{FC_MAP}", spectrum, contribution,
            f"class {base} + {SHOWCASE_RATIO:g} x class {SHOWCASE_CONTAMINANT}",
        )
        showcase.metrics[f"showcase_class{base}"] = {
            "predicted": int(predicted),
            "probability": float(probs[base]),
            "correlation_base": map_correlation(contribution.values, library[base].intensity),
            "correlation_contaminant": map_correlation(contribution.values, contaminant.intensity),
        }

    logger.info(
        "Mixture: fold mean %.4f, test mean %.4f, correlation pass rate %.3f (test %.3f)",
        report.mean_accuracy, float(np.mean(test_accuracies)), passes / checked, test_passes / test_checked,
    )
    return ExperimentReport(
        experiment=MIXTURE,
        seed=settings.seed,
        runs=runs,
        summary={
            "fold_accuracies": report.fold_accuracies,
            "mean_accuracy": report.mean_accuracy,
            "pooled_accuracy": report.pooled_accuracy,
            "correlation_pass_rate": passes / checked,
            "negative_at_contaminant": negatives,
            "test_size": len(testset),
            "test_accuracies": test_accuracies,
            "mean_test_accuracy": float(np.mean(test_accuracies)),
            "test_correlation_pass_rate": test_passes / test_checked,
            "test_negative_at_contaminant": test_negatives,
        },
        definitions={
            "correlation_pass_rate": (
                "fraction of held-out mixtures whose base-class FC map correlates (Pearson) more with the "
                "pure base spectrum than with the pure contaminant"
            ),
            "negative_at_contaminant": (
                "held-out mixtures whose FC map goes negative within +/- 2 ch of the contaminant's strongest peak"
            ),
            "test_accuracies": (
                "accuracy of each fold model on an independently generated mixture set of the same recipe"
            ),
            "test_correlation_pass_rate": (
                "correlation_pass_rate over the independent mixture set, pooled across fold models"
            ),
        },
    )


RUNNERS = {
    FILTER_SWEEP: run_filter_sweep,
    COMMON_PEAK: run_common_peak,
    MIXTURE: run_mixture,
}


def run_experiment(name: str, settings: ExperimentSettings, out: PathLike) -> ExperimentReport:
    """
    Runs the named experiment and writes its report.

    Raises:
        ValueError: If ``name`` is not a known experiment.
    """
    if name not in RUNNERS:
        raise ValueError(f"Unknown experiment: {name} (expected one of {', '.join(EXPERIMENTS)})")
    set_verbose(settings.verbose)
    report = RUNNERS[name](settings, out)
    write_report(report, out)
    return report
