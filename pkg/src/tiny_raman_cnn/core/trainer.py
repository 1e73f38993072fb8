from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

import numpy as np
import numpy.typing as npt

from tiny_raman_cnn.core.model import ModelParams, forward, backward, init_model, predict
from tiny_raman_cnn.core.optim import AdamState, adam_step
from tiny_raman_cnn.core.settings import ArchConfig, TrainConfig
from tiny_raman_cnn.errors import DataError, DimensionError, NumericError
from tiny_raman_cnn.logging import get_logger, set_verbose
from tiny_raman_cnn.ndcore import TRAIN, softmax_cross_entropy
from tiny_raman_cnn.spectra.types import LabeledDataset

EVAL_CHUNK: int = 256

logger = get_logger()


@dataclass
class TrainHistory:
    """
    Per-epoch training record.

    Attributes:
        losses (List[float]): Mean cross-entropy loss of every epoch.
        accuracies (List[float]): Training accuracy of every epoch (train-mode predictions).
        test_accuracy (Optional[float]): Accuracy on a held-out set, when one was given.
    """

    losses: List[float] = field(default_factory=list)
    accuracies: List[float] = field(default_factory=list)
    test_accuracy: Optional[float] = None


@dataclass
class FoldResult:
    index: int
    test_indices: npt.NDArray[np.intp]
    params: ModelParams
    history: TrainHistory
    accuracy: float
    correct: int


@dataclass
class KFoldReport:
    """
    Outcome of a cross-validation run.

    Attributes:
        folds (List[FoldResult]): One entry per fold, in fold order.
    """

    folds: List[FoldResult]

    @property
    def fold_accuracies(self) -> List[float]:
        return [fold.accuracy for fold in self.folds]

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.fold_accuracies))

    @property
    def pooled_accuracy(self) -> float:
        total = sum(len(fold.test_indices) for fold in self.folds)
        return sum(fold.correct for fold in self.folds) / total


def _check_dataset(arch: ArchConfig, dataset: LabeledDataset) -> None:
    if len(dataset) == 0:
        raise DataError("Dataset is empty")
    if dataset.inputs.shape[1] != arch.input_length:
        raise DimensionError(
            f"Spectra have length {dataset.inputs.shape[1]} but the model expects {arch.input_length}"
        )
    if dataset.n_classes != arch.n_classes:
        raise DimensionError(
            f"Labels have {dataset.n_classes} classes but the model has {arch.n_classes} outputs"
        )


def train(
    arch: ArchConfig,
    dataset: LabeledDataset,
    cfg: TrainConfig,
    test_dataset: Optional[LabeledDataset] = None,
) -> Tuple[ModelParams, TrainHistory]:
    """
    Mini-batch Adam training on the mean cross-entropy loss.

    One generator seeded with ``cfg.seed`` drives the per-epoch shuffles and the dropout masks,
    and the same seed initializes the weights, so a run is reproducible bit for bit.

    Args:
        arch (ArchConfig): The architecture.
        dataset (LabeledDataset): Training data.
        cfg (TrainConfig): Training settings.
        test_dataset (Optional[LabeledDataset]): Evaluated once after the last epoch.

    Returns:
        tuple: (trained params, history).
    """
    set_verbose(cfg.verbose)
    _check_dataset(arch, dataset)

    rng = np.random.default_rng(cfg.seed)
    params = init_model(arch, cfg.seed)
    state = AdamState()
    history = TrainHistory()

    inputs = dataset.inputs
    labels = dataset.labels
    targets = dataset.class_indices
    n_items = len(dataset)

    for epoch in range(cfg.epochs):
        order = rng.permutation(n_items)
        total_loss = 0.0
        correct = 0

        for start in range(0, n_items, cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            logits, cache = forward(params, inputs[batch], TRAIN, rng)
            losses, probs, grad_logits = softmax_cross_entropy(logits, labels[batch])

            if not np.all(np.isfinite(losses)):
                raise NumericError(f"Non-finite loss in epoch {epoch + 1} (batch starting at {start})")

            grads = backward(params, cache, grad_logits / len(batch))
            params, state = adam_step(params, grads, state, cfg)

            total_loss += float(np.sum(losses))
            correct += int(np.sum(np.argmax(probs, axis=1) == targets[batch]))

        history.losses.append(total_loss / n_items)
        history.accuracies.append(correct / n_items)
        logger.debug(
            "Epoch %d/%d: loss %.6f, accuracy %.4f",
            epoch + 1, cfg.epochs, history.losses[-1], history.accuracies[-1],
        )

    logger.info("Training finished: loss %.6f, accuracy %.4f", history.losses[-1], history.accuracies[-1])

    if test_dataset is not None:
        history.test_accuracy = evaluate(params, test_dataset)
        logger.info("Test accuracy: %.4f", history.test_accuracy)

    return params, history


def _correct_predictions(params: ModelParams, dataset: LabeledDataset) -> int:
    inputs = dataset.inputs
    targets = dataset.class_indices
    correct = 0
    for start in range(0, len(dataset), EVAL_CHUNK):
        _, predicted = predict(params, inputs[start:start + EVAL_CHUNK])
        correct += int(np.sum(predicted == targets[start:start + EVAL_CHUNK]))
    return correct


def evaluate(params: ModelParams, dataset: LabeledDataset) -> float:
    """
    Fraction of spectra whose predicted class equals the labelled class.

    Raises:
        DataError: If the dataset is empty.
    """
    _check_dataset(params.arch, dataset)
    return _correct_predictions(params, dataset) / len(dataset)


def stratified_folds(
    class_indices: npt.NDArray[np.intp], k: int, rng: np.random.Generator
) -> List[npt.NDArray[np.intp]]:
    """
    Splits item indices into ``k`` folds, dealing each shuffled class round-robin.

    Raises:
        DataError: If a class has fewer than ``k`` members.
    """
    if k < 2:
        raise ValueError("Cross-validation needs at least 2 folds")

    folds: List[List[int]] = [[] for _ in range(k)]
    dealt = 0
    for class_index in np.unique(class_indices):
        members = np.flatnonzero(class_indices == class_index)
        if len(members) < k:
            raise DataError(f"Class {class_index} has {len(members)} samples, fewer than {k} folds")
        for item in rng.permutation(members):
            folds[dealt % k].append(int(item))
            dealt += 1

    return [np.sort(np.asarray(fold, dtype=np.intp)) for fold in folds]


def run_kfold(arch: ArchConfig, dataset: LabeledDataset, cfg: TrainConfig) -> KFoldReport:
    """
    Stratified k-fold cross validation; fold ``i`` trains with seed ``cfg.seed + i + 1``.

    Folds run on a thread pool of ``cfg.workers`` threads and are collected in fold order,
    so the report is the same as a serial run.
    """
    _check_dataset(arch, dataset)
    if cfg.kfold < 2:
        raise ValueError("\"kfold\" must be at least 2 for cross validation")
    if len(dataset) < cfg.kfold:
        raise DataError(f"{len(dataset)} spectra cannot be split into {cfg.kfold} folds")

    folds = stratified_folds(dataset.class_indices, cfg.kfold, np.random.default_rng(cfg.seed))

    def run_fold(index: int) -> FoldResult:
        test_indices = folds[index]
        train_indices = np.sort(np.concatenate([fold for i, fold in enumerate(folds) if i != index]))
        fold_cfg = replace(cfg, seed=cfg.seed + index + 1, kfold=0)

        params, history = train(arch, dataset.subset(train_indices), fold_cfg)
        test_set = dataset.subset(test_indices)
        correct = _correct_predictions(params, test_set)
        history.test_accuracy = correct / len(test_set)
        logger.info("Fold %d/%d: accuracy %.4f", index + 1, cfg.kfold, history.test_accuracy)

        return FoldResult(
            index=index,
            test_indices=test_indices,
            params=params,
            history=history,
            accuracy=history.test_accuracy,
            correct=correct,
        )

    with ThreadPoolExecutor(max_workers=cfg.workers) as executor:
        results = list(executor.map(run_fold, range(cfg.kfold)))

    report = KFoldReport(folds=results)
    logger.info(
        "Cross validation: fold mean %.4f, pooled %.4f", report.mean_accuracy, report.pooled_accuracy
    )
    return report


def kfold_cv(arch: ArchConfig, dataset: LabeledDataset, cfg: TrainConfig) -> List[float]:
    """Per-fold accuracies of :func:`run_kfold`."""
    return run_kfold(arch, dataset, cfg).fold_accuracies
