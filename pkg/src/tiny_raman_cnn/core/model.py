from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import numpy.typing as npt
from scipy.special import softmax

from tiny_raman_cnn.core.settings import ArchConfig, POSITION_MAJOR
from tiny_raman_cnn.errors import DimensionError
from tiny_raman_cnn.ndcore import (
    ConvFilterBank,
    DenseWeights,
    PoolRecord,
    INFER,
    conv1d_forward,
    conv1d_backward,
    leaky_relu,
    leaky_relu_backward,
    maxpool2_forward,
    maxpool2_backward,
    fc_forward,
    fc_backward,
    dropout,
    dropout_backward,
)
from tiny_raman_cnn.spectra.types import Spectrum

FloatArray = npt.NDArray[np.float64]
ModelInputLike = Union[Spectrum, FloatArray]


@dataclass
class ModelParams:
    """
    All trainable tensors of the network.

    Attributes:
        arch (ArchConfig): The architecture the tensors belong to.
        conv (List[ConvFilterBank]): One filter bank per conv block.
        fc1 (DenseWeights): Flattened pooled features -> fc1_width.
        fc2 (DenseWeights): fc1_width -> n_classes.
    """

    arch: ArchConfig
    conv: List[ConvFilterBank]
    fc1: DenseWeights
    fc2: DenseWeights

    def __post_init__(self) -> None:
        if len(self.conv) != len(self.arch.conv_blocks):
            raise DimensionError(
                f"Expected {len(self.arch.conv_blocks)} conv blocks, got {len(self.conv)}"
            )

        in_channels = 1
        for index, (bank, (count, size)) in enumerate(zip(self.conv, self.arch.conv_blocks)):
            if bank.weights.shape != (count, in_channels, size):
                raise DimensionError(
                    f"conv{index} weights have shape {bank.weights.shape}, expected {(count, in_channels, size)}"
                )
            in_channels = count

        if self.fc1.weights.shape != (self.arch.flat_length, self.arch.fc1_width):
            raise DimensionError(f"fc1 weights have shape {self.fc1.weights.shape}")
        if self.fc2.weights.shape != (self.arch.fc1_width, self.arch.n_classes):
            raise DimensionError(f"fc2 weights have shape {self.fc2.weights.shape}")

        for name, value in self.as_dict().items():
            if not np.all(np.isfinite(value)):
                raise DimensionError(f"Parameter {name} contains non-finite values")

    def as_dict(self) -> Dict[str, FloatArray]:
        """Returns the tensors keyed by stable names ("conv0.weights", ..., "fc2.bias")."""
        tensors: Dict[str, FloatArray] = {}
        for index, bank in enumerate(self.conv):
            tensors[f"conv{index}.weights"] = bank.weights
            tensors[f"conv{index}.bias"] = bank.bias
        tensors["fc1.weights"] = self.fc1.weights
        tensors["fc1.bias"] = self.fc1.bias
        tensors["fc2.weights"] = self.fc2.weights
        tensors["fc2.bias"] = self.fc2.bias
        return tensors

    @classmethod
    def from_dict(cls, arch: ArchConfig, tensors: Dict[str, FloatArray]) -> ModelParams:
        missing = [name for name in param_names(arch) if name not in tensors]
        if missing:
            raise DimensionError(f"Missing parameter tensors: {', '.join(missing)}")

        conv = [
            ConvFilterBank(tensors[f"conv{index}.weights"], tensors[f"conv{index}.bias"])
            for index in range(len(arch.conv_blocks))
        ]
        return cls(
            arch=arch,
            conv=conv,
            fc1=DenseWeights(tensors["fc1.weights"], tensors["fc1.bias"]),
            fc2=DenseWeights(tensors["fc2.weights"], tensors["fc2.bias"]),
        )


# Gradients share the parameter layout.
Gradients = ModelParams


def param_names(arch: ArchConfig) -> List[str]:
    names = []
    for index in range(len(arch.conv_blocks)):
        names += [f"conv{index}.weights", f"conv{index}.bias"]
    return names + ["fc1.weights", "fc1.bias", "fc2.weights", "fc2.bias"]


@dataclass
class ActivationCache:
    """
    Everything a forward pass keeps for backprop and visualization. Arrays carry a leading batch axis.

    Attributes:
        conv_inputs (List[ndarray]): Input of every conv block.
        conv_pre (List[ndarray]): Conv outputs before the activation.
        pools (List[PoolRecord]): Pooling output and argmax per block.
        flat (ndarray): Flattened output of the last pooling layer (A).
        fc1_out (ndarray): FC1 output (linear, no activation).
        dropout_mask (ndarray): Mask applied after FC1 (all ones in infer mode).
        dropped (ndarray): FC1 output after dropout.
        logits (ndarray): Pre-softmax outputs.
        single (bool): Whether the forward call received a single spectrum.
    """

    conv_inputs: List[FloatArray] = field(default_factory=list)
    conv_pre: List[FloatArray] = field(default_factory=list)
    pools: List[PoolRecord] = field(default_factory=list)
    flat: FloatArray = field(default_factory=lambda: np.zeros((0, 0)))
    fc1_out: FloatArray = field(default_factory=lambda: np.zeros((0, 0)))
    dropout_mask: FloatArray = field(default_factory=lambda: np.zeros((0, 0)))
    dropped: FloatArray = field(default_factory=lambda: np.zeros((0, 0)))
    logits: FloatArray = field(default_factory=lambda: np.zeros((0, 0)))
    single: bool = True

    @property
    def pooled(self) -> FloatArray:
        """Output of the last pooling layer, (batch, channels, positions)."""
        return self.pools[-1].output

    @property
    def batch_size(self) -> int:
        return int(self.logits.shape[0])


def flatten(pooled: FloatArray, order: str = POSITION_MAJOR) -> FloatArray:
    """
    Flattens (..., channels, positions) into (..., channels * positions).

    Position-major order puts entry (x, k) at index x * channels + k.
    """
    if order == POSITION_MAJOR:
        pooled = np.swapaxes(pooled, -1, -2)
    return np.reshape(pooled, pooled.shape[:-2] + (-1,))


def unflatten(flat: FloatArray, channels: int, length: int, order: str = POSITION_MAJOR) -> FloatArray:
    """Inverse of :func:`flatten`."""
    if flat.shape[-1] != channels * length:
        raise DimensionError(f"Cannot unflatten {flat.shape[-1]} entries into {channels} x {length}")
    if order == POSITION_MAJOR:
        return np.swapaxes(np.reshape(flat, flat.shape[:-1] + (length, channels)), -1, -2)
    return np.reshape(flat, flat.shape[:-1] + (channels, length))


def _glorot_uniform(rng: np.random.Generator, shape: Tuple[int, ...], fan_in: int, fan_out: int) -> FloatArray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def init_model(arch: ArchConfig, seed: int) -> ModelParams:
    """
    Glorot-uniform weights and zero biases, deterministic for a given seed.

    Args:
        arch (ArchConfig): The architecture.
        seed (int): Seed of the initialization generator.

    Returns:
        ModelParams: Fresh parameters.
    """
    rng = np.random.default_rng(seed)

    conv = []
    in_channels = 1
    for count, size in arch.conv_blocks:
        weights = _glorot_uniform(rng, (count, in_channels, size), in_channels * size, count * size)
        conv.append(ConvFilterBank(weights, np.zeros(count)))
        in_channels = count

    fc1 = DenseWeights(
        _glorot_uniform(rng, (arch.flat_length, arch.fc1_width), arch.flat_length, arch.fc1_width),
        np.zeros(arch.fc1_width),
    )
    fc2 = DenseWeights(
        _glorot_uniform(rng, (arch.fc1_width, arch.n_classes), arch.fc1_width, arch.n_classes),
        np.zeros(arch.n_classes),
    )
    return ModelParams(arch=arch, conv=conv, fc1=fc1, fc2=fc2)


def _as_input_batch(inputs: ModelInputLike, arch: ArchConfig) -> Tuple[FloatArray, bool]:
    values = inputs.intensity if isinstance(inputs, Spectrum) else np.asarray(inputs, dtype=np.float64)
    single = values.ndim == 1
    batch = values[np.newaxis] if single else values

    if batch.ndim != 2 or batch.shape[-1] != arch.input_length:
        raise DimensionError(
            f"Expected spectra of length {arch.input_length}, got array of shape {values.shape}"
        )
    if not np.all(np.isfinite(batch)):
        raise DimensionError("Input spectra contain non-finite intensities")
    return batch, single


def forward(
    params: ModelParams,
    inputs: ModelInputLike,
    mode: str = INFER,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[FloatArray, ActivationCache]:
    """
    Runs the network on one spectrum or a batch of spectra.

    Args:
        params (ModelParams): The parameters.
        inputs (Spectrum | ndarray): A spectrum, a (length,) vector or a (batch, length) matrix.
        mode (str): ``"train"`` (dropout active, needs ``rng``) or ``"infer"``.
        rng (Optional[np.random.Generator]): Dropout generator.

    Returns:
        tuple: (logits, cache); logits are (classes,) for a single spectrum, (batch, classes) otherwise.
    """
    arch = params.arch
    batch, single = _as_input_batch(inputs, arch)

    cache = ActivationCache(single=single)
    x = batch[:, np.newaxis, :]
    for bank in params.conv:
        cache.conv_inputs.append(x)
        pre = conv1d_forward(x, bank)
        cache.conv_pre.append(pre)
        record = maxpool2_forward(leaky_relu(pre, arch.leaky_alpha))
        cache.pools.append(record)
        x = record.output

    cache.flat = flatten(x, arch.flatten_order)
    cache.fc1_out = fc_forward(cache.flat, params.fc1)
    cache.dropped, cache.dropout_mask = dropout(cache.fc1_out, arch.dropout_keep, mode, rng)
    cache.logits = fc_forward(cache.dropped, params.fc2)

    return (cache.logits[0] if single else cache.logits), cache


def backward(params: ModelParams, cache: ActivationCache, grad_logits: FloatArray) -> Gradients:
    """
    Backpropagates a logit cotangent through the cached forward pass.

    Args:
        params (ModelParams): The parameters used for the forward pass.
        cache (ActivationCache): Cache of that forward pass.
        grad_logits (ndarray): d(loss)/d(logits), (classes,) or (batch, classes).

    Returns:
        Gradients: Gradients for every parameter tensor, summed over the batch.
    """
    arch = params.arch
    grad = np.asarray(grad_logits, dtype=np.float64).reshape(cache.logits.shape)

    if len(cache.pools) != len(params.conv) or cache.flat.shape[-1] != arch.flat_length:
        raise DimensionError("Activation cache does not belong to these parameters")

    grad_dropped, grad_fc2_weights, grad_fc2_bias = fc_backward(grad, cache.dropped, params.fc2)
    grad_fc1_out = dropout_backward(grad_dropped, cache.dropout_mask)
    grad_flat, grad_fc1_weights, grad_fc1_bias = fc_backward(grad_fc1_out, cache.flat, params.fc1)

    grad_x = unflatten(grad_flat, arch.pooled_channels, arch.pooled_length, arch.flatten_order)
    conv_grads: List[ConvFilterBank] = []
    for index in reversed(range(len(params.conv))):
        grad_act = maxpool2_backward(grad_x, cache.pools[index])
        grad_pre = leaky_relu_backward(grad_act, cache.conv_pre[index], arch.leaky_alpha)
        grad_x, grad_weights, grad_bias = conv1d_backward(
            grad_pre, cache.conv_inputs[index], params.conv[index]
        )
        conv_grads.insert(0, ConvFilterBank(grad_weights, grad_bias))

    return Gradients(
        arch=arch,
        conv=conv_grads,
        fc1=DenseWeights(grad_fc1_weights, grad_fc1_bias),
        fc2=DenseWeights(grad_fc2_weights, grad_fc2_bias),
    )


def predict(params: ModelParams, inputs: ModelInputLike) -> Tuple[FloatArray, Union[int, npt.NDArray[np.intp]]]:
    """
    Infer-mode forward pass followed by softmax.

    Returns:
        tuple: (probs, argmax_class); ties resolve to the lowest class index.
    """
    logits, _ = forward(params, inputs, INFER)
    probs = softmax(logits, axis=-1)
    predicted = np.argmax(probs, axis=-1)
    if probs.ndim == 1:
        return probs, int(predicted)
    return probs, predicted

