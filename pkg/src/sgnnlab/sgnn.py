"""
Separable Gaussian Neural Network.

An SGNN for ``d``-dimensional input has exactly ``d`` layers. Layer ``l``
reads only coordinate ``x_l`` through ``N_l`` univariate Gaussian neurons
``phi_i(x_l) = exp(-(x_l - mu_i)^2 / (2 sigma_i^2))`` and multiplies them with
a weighted sum of the previous layer's outputs::

    N^(1)_i = phi^(1)_i(x_1)
    N^(l)_i = phi^(l)_i(x_l) * sum_j W^(l-1)_ij N^(l-1)_j      (l >= 2)
    f(x)    = sum_i N^(d)_i

The output layer has unit weights for ``d >= 2``. A one-layer network
(``d = 1``) has no inter-layer weights, so it gets a trainable output weight
vector instead.

Expanding the recursion shows that an SGNN computes the same sum as a
Gaussian RBF network with ``prod(N_l)`` separable units whose output weights
are products of SGNN weights (see :func:`sgnnlab.grbfnn.sgnn_to_grbfnn`).
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

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

SIGMA_MIN = 1e-3


def gaussian_activation(x, mu, sigma):
    """
    Univariate Gaussian neuron ``exp(-(x - mu)^2 / (2 sigma^2))``.

    Broadcasts over numpy arrays; scalars in give a scalar out in ``(0, 1]``.

    Raises:
        ValueError: If any ``sigma <= 0``.
    """
    sigma = np.asarray(sigma, dtype=np.float64)
    if np.any(sigma <= 0):
        raise ValueError("Gaussian width sigma must be positive")
    z = (np.asarray(x, dtype=np.float64) - mu) / sigma
    return np.exp(-0.5 * z * z)


@dataclass
class ForwardCache:
    """
    Intermediate values recorded by :meth:`SgnnModel.forward`.

    Attributes:
        inputs (Matrix): The ``m x d`` batch.
        phis (List[Matrix]): Per-layer Gaussian activations, ``m x N_l``.
        mixes (List[Optional[Matrix]]): Per-layer weighted sums of the
            previous layer, ``m x N_l`` (``None`` for the first layer).
        layer_outputs (List[Matrix]): Per-layer outputs ``N^(l)``.
        outputs (Vector): Final network outputs.
    """

    inputs: Matrix
    phis: List[Matrix]
    mixes: List[Optional[Matrix]]
    layer_outputs: List[Matrix]
    outputs: Vector


@dataclass
class SgnnGradients:
    """Gradients mirroring the parameter layout of :class:`SgnnModel`."""

    weights: List[Matrix]
    centers: List[Vector]
    sigmas: List[Vector]
    out_weights: Optional[Vector] = None


@register_network("sgnn")
class SgnnModel(BaseNetwork):
    """
    The SGNN with trainable inter-layer weights, centers and widths.

    Flat parameter order (used by the optimizer and the Hessian analysis):
    ``W^(1) .. W^(d-1)`` row-major (or the output weights when ``d = 1``),
    then ``mu^(1) .. mu^(d)``, then ``sigma^(1) .. sigma^(d)``.
    """

    def __init__(
        self,
        centers: Sequence[Vector],
        sigmas: Sequence[Vector],
        weights: Sequence[Matrix],
        out_weights: Optional[Vector] = None,
        sigma_min: float = SIGMA_MIN,
    ):
        """
        Args:
            centers: One vector of ``N_l`` centers per layer.
            sigmas: One vector of ``N_l`` widths per layer, all ``>= sigma_min``.
            weights: ``d - 1`` matrices, ``weights[l]`` of shape
                ``N_{l+2} x N_{l+1}`` in 1-based layer numbering.
            out_weights: Output weights, required exactly when ``d = 1``.
            sigma_min: Lower bound enforced on every width.
        """
        self.centers = [np.array(c, dtype=np.float64).reshape(-1) for c in centers]
        self.sigmas = [np.array(s, dtype=np.float64).reshape(-1) for s in sigmas]
        self.weights = [np.array(w, dtype=np.float64) for w in weights]
        self.out_weights = (
            None
            if out_weights is None
            else np.array(out_weights, dtype=np.float64).reshape(-1)
        )
        self.sigma_min = float(sigma_min)
        self._validate()

    def _validate(self) -> None:
        d = len(self.centers)
        if d < 1:
            raise ShapeError("an SGNN needs at least one layer")
        if len(self.sigmas) != d:
            raise ShapeError(f"{d} center vectors but {len(self.sigmas)} sigma vectors")
        for layer, (mu, sigma) in enumerate(zip(self.centers, self.sigmas), start=1):
            if mu.shape != sigma.shape or mu.shape[0] < 1:
                raise ShapeError(f"layer {layer}: centers and sigmas differ in shape")
            if np.any(sigma < self.sigma_min):
                raise ValueError(
                    f"layer {layer}: sigma below sigma_min={self.sigma_min}"
                )
        if len(self.weights) != d - 1:
            raise ShapeError(
                f"expected {d - 1} weight matrices, got {len(self.weights)}"
            )
        widths = self.widths
        for layer, w in enumerate(self.weights):
            expected = (widths[layer + 1], widths[layer])
            if w.shape != expected:
                raise ShapeError(
                    f"W^({layer + 1}) has shape {w.shape}, expected {expected}"
                )
        out = self.out_weights
        if d == 1 and (out is None or out.shape[0] != widths[0]):
            raise ShapeError("a one-layer SGNN needs one output weight per neuron")
        if d > 1 and out is not None:
            raise ShapeError("output weights are fixed to one when d >= 2")

    @classmethod
    def initialize(
        cls,
        dim: int,
        neurons: Union[int, Sequence[int]],
        lo: float,
        hi: float,
        rng: Rng,
        sigma_min: float = SIGMA_MIN,
    ) -> "SgnnModel":
        """
        Builds an SGNN with evenly spaced centers on ``[lo, hi]``.

        Centers of a layer with ``N`` neurons sit at ``lo + k * delta`` with
        ``delta = (hi - lo) / (N - 1)`` and every width equals ``delta``; a
        single neuron sits at the midpoint with width ``(hi - lo) / 2``.
        Weights are drawn uniformly from ``[-1/sqrt(N), 1/sqrt(N)]`` where
        ``N`` is the fan-in of the weight matrix.

        Args:
            dim (int): Input dimension (number of layers).
            neurons: Neurons per layer, as one int or a list of ``dim`` ints.
            lo, hi (float): Domain bounds of every input coordinate.
            rng: Random generator for the weights.
        """
        if dim < 1:
            raise ValueError(f"dim must be >= 1, got {dim}")
        widths = [int(neurons)] * dim if np.isscalar(neurons) else list(neurons)
        if len(widths) != dim or min(widths) < 1:
            raise ValueError(f"need {dim} positive layer widths, got {widths}")
        if not lo < hi:
            raise ValueError(f"domain needs lo < hi, got [{lo}, {hi}]")

        centers, sigmas = [], []
        for n in widths:
            if n == 1:
                centers.append(np.array([0.5 * (lo + hi)]))
                sigmas.append(np.array([0.5 * (hi - lo)]))
            else:
                delta = (hi - lo) / (n - 1)
                centers.append(lo + delta * np.arange(n))
                sigmas.append(np.full(n, delta))

        weights = []
        for fan_in, fan_out in zip(widths[:-1], widths[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        out_weights = None
        if dim == 1:
            bound = 1.0 / np.sqrt(widths[0])
            out_weights = rng.uniform(-bound, bound, size=widths[0])
        return cls(centers, sigmas, weights, out_weights, sigma_min)

    @property
    def dim(self) -> int:
        return len(self.centers)

    @property
    def widths(self) -> List[int]:
        return [mu.shape[0] for mu in self.centers]

    @property
    def n_weights(self) -> int:
        """Number of trainable weights (excluding centers and widths)."""
        if self.dim == 1:
            return self.widths[0]
        return sum(w.size for w in self.weights)

    def weight_offsets(self) -> List[int]:
        """Start index of each ``W^(l)`` block inside :meth:`param_vector`."""
        offsets, start = [], 0
        for w in self.weights:
            offsets.append(start)
            start += w.size
        return offsets

    def forward(self, batch) -> Tuple[Vector, ForwardCache]:
        x = self._check_batch(batch)
        phis: List[Matrix] = []
        mixes: List[Optional[Matrix]] = []
        layer_outputs: List[Matrix] = []

        for layer in range(self.dim):
            phi = gaussian_activation(
                x[:, layer : layer + 1], self.centers[layer], self.sigmas[layer]
            )
            if layer == 0:
                mix = None
                out = phi
            else:
                mix = layer_outputs[-1] @ self.weights[layer - 1].T
                out = phi * mix
            phis.append(phi)
            mixes.append(mix)
            layer_outputs.append(out)

        if self.dim == 1:
            outputs = layer_outputs[0] @ self.out_weights
        else:
            outputs = layer_outputs[-1].sum(axis=1)
        return outputs, ForwardCache(x, phis, mixes, layer_outputs, outputs)

    def backward(self, cache: ForwardCache, output_grad) -> SgnnGradients:
        """
        Analytic gradients of ``sum_i output_grad[i] * f(x_i)``.

        The pass walks from the last layer to the first. At each layer it
        splits the upstream gradient between the Gaussian factor (giving the
        center and width gradients through ``dphi/dmu = phi (x - mu) / sigma^2``
        and ``dphi/dsigma = phi (x - mu)^2 / sigma^3``) and the weighted sum
        (giving the weight gradient and the gradient for the previous layer).

        Raises:
            ShapeError: If the cache does not match this model or
                ``output_grad`` does not match the cached batch.
        """
        self._check_cache(cache)
        x = cache.inputs
        g = self._check_output_grad(output_grad, x.shape[0])
        d = self.dim

        d_weights: List[Matrix] = [np.zeros_like(w) for w in self.weights]
        d_centers: List[Vector] = [np.zeros_like(mu) for mu in self.centers]
        d_sigmas: List[Vector] = [np.zeros_like(s) for s in self.sigmas]
        d_out = None

        if d == 1:
            d_out = cache.layer_outputs[0].T @ g
            upstream = g[:, None] * self.out_weights[None, :]
        else:
            upstream = np.repeat(g[:, None], self.widths[-1], axis=1)

        for layer in range(d - 1, -1, -1):
            phi = cache.phis[layer]
            if layer == 0:
                d_phi = upstream
            else:
                mix = cache.mixes[layer]
                d_phi = upstream * mix
                d_mix = upstream * phi
                d_weights[layer - 1] = d_mix.T @ cache.layer_outputs[layer - 1]
                upstream = d_mix @ self.weights[layer - 1]

            sigma = self.sigmas[layer]
            diff = x[:, layer : layer + 1] - self.centers[layer]
            scaled = d_phi * phi
            d_centers[layer] = np.sum(scaled * diff, axis=0) / sigma**2
            d_sigmas[layer] = np.sum(scaled * diff * diff, axis=0) / sigma**3

        return SgnnGradients(d_weights, d_centers, d_sigmas, d_out)

    def _check_cache(self, cache: ForwardCache) -> None:
        if (
            cache.inputs.shape[1] != self.dim
            or len(cache.phis) != self.dim
            or any(p.shape[1] != n for p, n in zip(cache.phis, self.widths))
        ):
            raise ShapeError("forward cache does not match this SGNN")

    def param_vector(self) -> Vector:
        if self.dim == 1:
            blocks = [self.out_weights]
        else:
            blocks = [w.ravel() for w in self.weights]
        return np.concatenate(blocks + self.centers + self.sigmas)

    def grad_vector(self, grads: SgnnGradients) -> Vector:
        if self.dim == 1:
            blocks = [grads.out_weights]
        else:
            blocks = [w.ravel() for w in grads.weights]
        return np.concatenate(blocks + list(grads.centers) + list(grads.sigmas))

    def load_params(self, params) -> None:
        v = self._check_param_length(params)
        start = 0
        if self.dim == 1:
            n = self.widths[0]
            self.out_weights = v[start : start + n].copy()
            start += n
        for i, w in enumerate(self.weights):
            self.weights[i] = v[start : start + w.size].reshape(w.shape).copy()
            start += w.size
        for group in (self.centers, self.sigmas):
            for i, arr in enumerate(group):
                group[i] = v[start : start + arr.size].copy()
                start += arr.size

    def project_params(self) -> None:
        for i, sigma in enumerate(self.sigmas):
            self.sigmas[i] = np.maximum(sigma, self.sigma_min)

    def state(self) -> Tuple[MetaState, TensorState]:
        meta = {
            "dim": str(self.dim),
            "widths": ",".join(str(n) for n in self.widths),
            "sigma_min": repr(self.sigma_min),
        }
        tensors: TensorState = []
        for layer, w in enumerate(self.weights, start=1):
            tensors.append((f"weights_{layer}", w))
        if self.out_weights is not None:
            tensors.append(("out_weights", self.out_weights))
        for layer, mu in enumerate(self.centers, start=1):
            tensors.append((f"centers_{layer}", mu))
        for layer, sigma in enumerate(self.sigmas, start=1):
            tensors.append((f"sigmas_{layer}", sigma))
        return meta, tensors

    @classmethod
    def from_state(cls, meta: MetaState, tensors: Dict[str, np.ndarray]) -> "SgnnModel":
        dim = int(meta["dim"])
        widths = parse_int_list(meta["widths"])
        if len(widths) != dim:
            raise ShapeError(f"widths {widths} do not match dim={dim}")
        centers = [column(tensors[f"centers_{layer}"]) for layer in range(1, dim + 1)]
        sigmas = [column(tensors[f"sigmas_{layer}"]) for layer in range(1, dim + 1)]
        weights = [
            np.asarray(tensors[f"weights_{layer}"], dtype=np.float64).reshape(
                widths[layer], widths[layer - 1]
            )
            for layer in range(1, dim)
        ]
        out_weights = None
        if "out_weights" in tensors:
            out_weights = column(tensors["out_weights"])
        return cls(
            centers,
            sigmas,
            weights,
            out_weights,
            float(meta.get("sigma_min", SIGMA_MIN)),
        )
