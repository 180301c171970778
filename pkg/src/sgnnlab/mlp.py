"""
Dense feedforward baselines with ReLU or Sigmoid hidden layers.

Each hidden layer computes ``a = act(a_prev @ W + b)``; the output layer is
linear and produces one value per row.
"""

import enum
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np
from scipy.special import expit

from .errors import ShapeError
from .linalg import Matrix, Rng, Vector
from .networks import (
    BaseNetwork,
    MetaState,
    TensorState,
    column,
    parse_int_list,
    register_network,
)


class Activation(str, enum.Enum):
    RELU = "relu"
    SIGMOID = "sigmoid"

    def apply(self, z: Matrix) -> Matrix:
        if self is Activation.RELU:
            return np.maximum(z, 0.0)
        return expit(z)

    def derivative(self, z: Matrix, a: Matrix) -> Matrix:
        """Derivative at pre-activation ``z`` with output ``a``; ReLU uses 0 at 0."""
        if self is Activation.RELU:
            return (z > 0.0).astype(np.float64)
        return a * (1.0 - a)


def mlp_param_count(dim: int, layers: int, width: int) -> int:
    """
    Trainable parameters of an MLP with ``layers`` hidden layers of ``width``.

    Counts every weight and bias, including the scalar output layer:
    ``(dim + 1) * width + (layers - 1) * (width + 1) * width + width + 1``.
    """
    if dim < 1 or layers < 1 or width < 1:
        raise ValueError(f"need dim, layers, width >= 1, got {dim}, {layers}, {width}")
    return (dim + 1) * width + (layers - 1) * (width + 1) * width + width + 1


@dataclass
class MlpCache:
    inputs: Matrix
    pre_activations: List[Matrix]
    activations: List[Matrix]


@dataclass
class MlpGradients:
    weights: List[Matrix]
    biases: List[Vector]


@register_network("mlp")
class MlpModel(BaseNetwork):
    """
    Fully connected network with a scalar linear output.

    ``weights[l]`` has shape ``fan_in x fan_out``. Flat parameter order is
    ``W_1, b_1, W_2, b_2, ...`` with each matrix row-major.
    """

    def __init__(
        self,
        weights: Sequence[Matrix],
        biases: Sequence[Vector],
        activation: Activation = Activation.RELU,
    ):
        self.weights = [np.array(w, dtype=np.float64) for w in weights]
        self.biases = [np.array(b, dtype=np.float64).reshape(-1) for b in biases]
        self.activation = Activation(activation)
        if len(self.weights) < 2:
            raise ShapeError("an MLP needs at least one hidden layer")
        if len(self.biases) != len(self.weights):
            raise ShapeError("every layer needs one weight matrix and one bias")
        for layer, (w, b) in enumerate(zip(self.weights, self.biases), start=1):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise ShapeError(f"layer {layer}: weight {w.shape} and bias {b.shape}")
        for layer in range(1, len(self.weights)):
            if self.weights[layer].shape[0] != self.weights[layer - 1].shape[1]:
                raise ShapeError(f"layer {layer + 1} does not chain with layer {layer}")
        if self.weights[-1].shape[1] != 1:
            raise ShapeError("the output layer must produce a single value")

    @classmethod
    def initialize(
        cls,
        dim: int,
        hidden: Sequence[int],
        activation: Activation,
        rng: Rng,
    ) -> "MlpModel":
        """
        Random MLP with zero biases.

        ReLU layers use He initialization (normal with std
        ``sqrt(2 / fan_in)``); Sigmoid layers use Glorot uniform on
        ``[-sqrt(6 / (fan_in + fan_out)), sqrt(6 / (fan_in + fan_out))]``.

        Raises:
            ValueError: If ``hidden`` is empty or any size is below one.
        """
        hidden = [int(n) for n in hidden]
        if not hidden or min(hidden) < 1 or dim < 1:
            raise ValueError(f"need dim >= 1 and positive hidden sizes, got {hidden}")
        activation = Activation(activation)
        sizes = [dim, *hidden, 1]
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            if activation is Activation.RELU:
                w = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out))
            else:
                bound = np.sqrt(6.0 / (fan_in + fan_out))
                w = rng.uniform(-bound, bound, size=(fan_in, fan_out))
            weights.append(w)
            biases.append(np.zeros(fan_out))
        return cls(weights, biases, activation)

    @classmethod
    def initialize_grid(
        cls, dim: int, layers: int, width: int, activation: Activation, rng: Rng
    ) -> "MlpModel":
        """Shorthand for ``layers`` hidden layers of ``width`` neurons each."""
        if layers < 1:
            raise ValueError(f"need at least one hidden layer, got {layers}")
        return cls.initialize(dim, [width] * layers, activation, rng)

    @property
    def dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def hidden_sizes(self) -> List[int]:
        return [w.shape[1] for w in self.weights[:-1]]

    def forward(self, batch) -> Tuple[Vector, MlpCache]:
        x = self._check_batch(batch)
        pre, act = [], [x]
        a = x
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            z = a @ w + b
            a = self.activation.apply(z)
            pre.append(z)
            act.append(a)
        outputs = (a @ self.weights[-1] + self.biases[-1]).reshape(-1)
        return outputs, MlpCache(x, pre, act)

    def backward(self, cache: MlpCache, output_grad) -> MlpGradients:
        if len(cache.activations) != len(self.weights) or any(
            a.shape[1] != w.shape[0] for a, w in zip(cache.activations, self.weights)
        ):
            raise ShapeError("forward cache does not match this MLP")
        g = self._check_output_grad(output_grad, cache.inputs.shape[0])

        d_weights: List[Matrix] = [None] * len(self.weights)
        d_biases: List[Vector] = [None] * len(self.weights)
        delta = g[:, None]
        for layer in range(len(self.weights) - 1, -1, -1):
            a_prev = cache.activations[layer]
            d_weights[layer] = a_prev.T @ delta
            d_biases[layer] = delta.sum(axis=0)
            if layer > 0:
                delta = (delta @ self.weights[layer].T) * self.activation.derivative(
                    cache.pre_activations[layer - 1], a_prev
                )
        return MlpGradients(d_weights, d_biases)

    def param_vector(self) -> Vector:
        return self._flatten(self.weights, self.biases)

    def grad_vector(self, grads: MlpGradients) -> Vector:
        return self._flatten(grads.weights, grads.biases)

    @staticmethod
    def _flatten(weights: Sequence[Matrix], biases: Sequence[Vector]) -> Vector:
        blocks = []
        for w, b in zip(weights, biases):
            blocks.append(w.ravel())
            blocks.append(b)
        return np.concatenate(blocks)

    def load_params(self, params) -> None:
        v = self._check_param_length(params)
        start = 0
        for layer, (w, b) in enumerate(zip(self.weights, self.biases)):
            self.weights[layer] = v[start : start + w.size].reshape(w.shape).copy()
            start += w.size
            self.biases[layer] = v[start : start + b.size].copy()
            start += b.size

    def state(self) -> Tuple[MetaState, TensorState]:
        meta = {
            "dim": str(self.dim),
            "hidden": ",".join(str(n) for n in self.hidden_sizes),
            "activation": self.activation.value,
        }
        tensors: TensorState = []
        for layer, (w, b) in enumerate(zip(self.weights, self.biases), start=1):
            tensors.append((f"weights_{layer}", w))
            tensors.append((f"biases_{layer}", b))
        return meta, tensors

    @classmethod
    def from_state(cls, meta: MetaState, tensors: Dict[str, np.ndarray]) -> "MlpModel":
        sizes = [int(meta["dim"]), *parse_int_list(meta["hidden"]), 1]
        weights, biases = [], []
        for layer in range(1, len(sizes)):
            shape = (sizes[layer - 1], sizes[layer])
            weights.append(
                np.asarray(tensors[f"weights_{layer}"], dtype=np.float64).reshape(shape)
            )
            biases.append(column(tensors[f"biases_{layer}"]))
        return cls(weights, biases, Activation(meta["activation"]))

    def __repr__(self) -> str:
        return (
            f"<MlpModel dim={self.dim} hidden={self.hidden_sizes} "
            f"activation={self.activation.value} params={self.n_params}>"
        )
