from typing import List, Tuple

from dataclasses import dataclass, field

POSITION_MAJOR: str = "position"
CHANNEL_MAJOR: str = "channel"


def _default_conv_blocks() -> List[Tuple[int, int]]:
    return [(64, 8), (64, 8)]


@dataclass
class ArchConfig:
    """
    A dataclass describing the network: conv -> leaky ReLU -> max pool (per block), flatten,
    a linear fully-connected layer, dropout and the output layer.

    Attributes:
        n_classes (int): Number of output classes. (Default: 3)
        input_length (int): Channels in each input spectrum. (Default: 1451)
        conv_blocks (List[Tuple[int, int]]): (filter_count, filter_size) per block. (Default: two blocks of (64, 8))
        fc1_width (int): Width of the first fully-connected layer. (Default: 128)
        dropout_keep (float): Keep probability of the dropout after FC1. (Default: 0.5)
        leaky_alpha (float): Negative slope of the leaky ReLU. (Default: 0.2)
        flatten_order (str): "position" (index x * channels + k) or "channel". (Default: "position")
    """

    n_classes: int = 3
    input_length: int = 1451
    conv_blocks: List[Tuple[int, int]] = field(default_factory=_default_conv_blocks)
    fc1_width: int = 128
    dropout_keep: float = 0.5
    leaky_alpha: float = 0.2
    flatten_order: str = POSITION_MAJOR

    def __post_init__(self) -> None:
        self.conv_blocks = [(int(count), int(size)) for count, size in self.conv_blocks]

        if self.n_classes < 2:
            raise ValueError("\"n_classes\" must be at least 2")
        if self.input_length < 1:
            raise ValueError("\"input_length\" must be positive")
        if not self.conv_blocks:
            raise ValueError("\"conv_blocks\" needs at least one block")
        for count, size in self.conv_blocks:
            if count < 1 or size < 1:
                raise ValueError(f"Invalid conv block ({count}, {size}): filter count and size must be >= 1")
        if self.fc1_width < 1:
            raise ValueError("\"fc1_width\" must be positive")
        if not 0.0 < self.dropout_keep <= 1.0:
            raise ValueError("\"dropout_keep\" must lie in (0, 1]")
        if not 0.0 <= self.leaky_alpha < 1.0:
            raise ValueError("\"leaky_alpha\" must lie in [0, 1)")
        if self.flatten_order not in (POSITION_MAJOR, CHANNEL_MAJOR):
            raise ValueError(f"Unknown flatten order: {self.flatten_order}")

    @property
    def pooled_length(self) -> int:
        length = self.input_length
        for _ in self.conv_blocks:
            length = -(-length // 2)
        return length

    @property
    def pooled_channels(self) -> int:
        return self.conv_blocks[-1][0]

    @property
    def flat_length(self) -> int:
        return self.pooled_length * self.pooled_channels


@dataclass
class TrainConfig:
    """
    A dataclass to store training settings.

    Attributes:
        learning_rate (float): Adam step size. (Default: 1e-4)
        epochs (int): Passes over the training set. (Default: 100)
        batch_size (int): Mini-batch size. (Default: 32)
        adam_beta1 (float): First-moment decay. (Default: 0.9)
        adam_beta2 (float): Second-moment decay. (Default: 0.999)
        adam_eps (float): Denominator offset. (Default: 1e-8)
        seed (int): Seed for initialization, shuffling and dropout. (Default: 0)
        kfold (int): Number of cross-validation folds, 0 disables. (Default: 0)
        workers (int): Threads used for independent folds. (Default: 1)
        verbose (bool): Whether or not to log every epoch (Default: False)
    """

    learning_rate: float = 1e-4
    epochs: int = 100
    batch_size: int = 32
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    kfold: int = 0
    workers: int = 1
    verbose: bool = False

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError("\"learning_rate\" must be positive")
        if self.epochs < 1:
            raise ValueError("\"epochs\" must be at least 1")
        if self.batch_size < 1:
            raise ValueError("\"batch_size\" must be at least 1")
        if self.kfold == 1 or self.kfold < 0:
            raise ValueError("\"kfold\" must be 0 (off) or at least 2")
        if self.workers < 1:
            raise ValueError("\"workers\" must be at least 1")
        if not (0.0 <= self.adam_beta1 < 1.0 and 0.0 <= self.adam_beta2 < 1.0):
            raise ValueError("Adam decay rates must lie in [0, 1)")
