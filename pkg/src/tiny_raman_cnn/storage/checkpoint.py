from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np

from tiny_raman_cnn import __version__
from tiny_raman_cnn.core.model import ModelParams
from tiny_raman_cnn.core.settings import ArchConfig, TrainConfig
from tiny_raman_cnn.errors import CheckpointError, RamanCnnError
from tiny_raman_cnn.logging import get_logger
from tiny_raman_cnn.storage.files import PathLike, atomic_write_text

FORMAT_VERSION: int = 1
TOOL_NAME: str = "tiny-raman-cnn"

logger = get_logger()


def _default_created() -> Dict[str, Any]:
    return {"tool": TOOL_NAME, "version": __version__}


@dataclass
class Checkpoint:
    """
    A trained model with the settings that produced it.

    Attributes:
        params (ModelParams): Parameters (and architecture).
        train_config (Optional[TrainConfig]): Training settings, including the seed.
        created (Dict[str, Any]): Creation metadata (tool and version, no timestamp), written back unchanged.
        format_version (int): Checkpoint format version.
    """

    params: ModelParams
    train_config: Optional[TrainConfig] = None
    created: Dict[str, Any] = field(default_factory=_default_created)
    format_version: int = FORMAT_VERSION

    @property
    def arch(self) -> ArchConfig:
        return self.params.arch


def _encode_tensor(values: np.ndarray) -> Dict[str, Any]:
    return {
        "shape": list(values.shape),
        "data": " ".join(float.hex(float(v)) for v in values.ravel()),
    }


def _decode_tensor(name: str, entry: Dict[str, Any]) -> np.ndarray:
    shape = tuple(int(n) for n in entry["shape"])
    data = np.array([float.fromhex(token) for token in entry["data"].split()], dtype=np.float64)
    if data.size != int(np.prod(shape)):
        raise CheckpointError(f"Tensor {name} declares shape {shape} but holds {data.size} values")
    return data.reshape(shape)


def dumps_checkpoint(checkpoint: Checkpoint) -> str:
    document = {
        "format_version": checkpoint.format_version,
        "arch": asdict(checkpoint.arch),
        "tensors": {name: _encode_tensor(value) for name, value in checkpoint.params.as_dict().items()},
        "train": asdict(checkpoint.train_config) if checkpoint.train_config else None,
        "created": checkpoint.created,
    }
    return json.dumps(document, indent=1, sort_keys=True) + "\n"


def loads_checkpoint(text: str) -> Checkpoint:
    """
    Parses a checkpoint document.

    Raises:
        CheckpointError: On malformed JSON, a missing field, inconsistent shapes or an unknown version.
    """
    try:
        document = json.loads(text)
    except json.JSONDecodeError as err:
        raise CheckpointError(f"Corrupt checkpoint: {err}") from err

    if not isinstance(document, dict):
        raise CheckpointError("Corrupt checkpoint: top level is not an object")
    version = document.get("format_version")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"Unsupported checkpoint version {version}, expected {FORMAT_VERSION}")

    try:
        arch = ArchConfig(**document["arch"])
        tensors = {name: _decode_tensor(name, entry) for name, entry in document["tensors"].items()}
        params = ModelParams.from_dict(arch, tensors)
        train_config = TrainConfig(**document["train"]) if document["train"] is not None else None
        created = document["created"]
    except CheckpointError:
        raise
    except (KeyError, TypeError, ValueError, AttributeError, RamanCnnError) as err:
        raise CheckpointError(f"Corrupt checkpoint: {err}") from err

    return Checkpoint(params=params, train_config=train_config, created=created, format_version=version)


def checkpoint_save(checkpoint: Checkpoint, path: PathLike) -> Path:
    target = atomic_write_text(path, dumps_checkpoint(checkpoint))
    logger.debug("Checkpoint written: %s", target)
    return target


def checkpoint_load(path: PathLike) -> Checkpoint:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise CheckpointError(f"Cannot read checkpoint {path}: {err}") from err
    return loads_checkpoint(text)
