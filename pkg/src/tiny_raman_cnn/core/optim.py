from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np
import numpy.typing as npt

from tiny_raman_cnn.core.model import Gradients, ModelParams
from tiny_raman_cnn.core.settings import TrainConfig
from tiny_raman_cnn.errors import DimensionError

FloatArray = npt.NDArray[np.float64]


@dataclass
class AdamState:
    """
    Adam moment accumulators.

    Attributes:
        m (Dict[str, ndarray]): First moments, keyed like ``ModelParams.as_dict``.
        v (Dict[str, ndarray]): Second moments.
        t (int): Number of steps taken.
    """

    m: Dict[str, FloatArray] = field(default_factory=dict)
    v: Dict[str, FloatArray] = field(default_factory=dict)
    t: int = 0

    @classmethod
    def zeros_like(cls, params: ModelParams) -> AdamState:
        tensors = params.as_dict()
        return cls(
            m={name: np.zeros_like(value) for name, value in tensors.items()},
            v={name: np.zeros_like(value) for name, value in tensors.items()},
        )


def adam_step(
    params: ModelParams, grads: Gradients, state: AdamState, cfg: TrainConfig
) -> Tuple[ModelParams, AdamState]:
    """
    One bias-corrected Adam update.

    m <- b1 m + (1 - b1) g;  v <- b2 v + (1 - b2) g^2;  theta <- theta - lr m_hat / (sqrt(v_hat) + eps)

    Args:
        params (ModelParams): Current parameters (left untouched).
        grads (Gradients): Gradients with the same layout.
        state (AdamState): Current moments (left untouched); an empty state starts from zero.
        cfg (TrainConfig): Supplies the learning rate and decay rates.

    Returns:
        tuple: (new params, new state).
    """
    tensors = params.as_dict()
    grad_tensors = grads.as_dict()
    if state.t == 0 and not state.m:
        state = AdamState.zeros_like(params)

    t = state.t + 1
    bias1 = 1.0 - cfg.adam_beta1 ** t
    bias2 = 1.0 - cfg.adam_beta2 ** t

    updated: Dict[str, FloatArray] = {}
    m: Dict[str, FloatArray] = {}
    v: Dict[str, FloatArray] = {}
    for name, value in tensors.items():
        g = grad_tensors.get(name)
        if g is None or g.shape != value.shape or state.m[name].shape != value.shape:
            raise DimensionError(f"Gradient for {name} is missing or has the wrong shape")

        m[name] = cfg.adam_beta1 * state.m[name] + (1.0 - cfg.adam_beta1) * g
        v[name] = cfg.adam_beta2 * state.v[name] + (1.0 - cfg.adam_beta2) * (g * g)
        m_hat = m[name] / bias1
        v_hat = v[name] / bias2
        updated[name] = value - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.adam_eps)

    return ModelParams.from_dict(params.arch, updated), AdamState(m=m, v=v, t=t)
