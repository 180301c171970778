"""
Gaussian radial-basis-function networks and the SGNN conversion.

A GRBFNN with ``K`` units computes ``f(x) = sum_k W_k G_k(x)``. The isotropic
model (:class:`GrbfnnModel`) uses one width per unit,
``G_k(x) = exp(-||x - mu_k||^2 / (2 sigma_k^2))``, and is the baseline the
benchmarks train. The anisotropic model (:class:`AnisotropicGrbfnn`) keeps one
width per unit and dimension; it is the exact image of an SGNN under
:func:`sgnn_to_grbfnn`.
"""

import abc
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .errors import CapacityError, ShapeError
from .linalg import Matrix, Rng, Vector, as_matrix
from .networks import (
    BaseNetwork,
    MetaState,
    TensorState,
    column,
    register_network,
)
from .sgnn import SIGMA_MIN, SgnnModel

logger = logging.getLogger(__name__)

DEFAULT_MAX_UNITS = 100_000

# Upper bound on the number of float64 elements in one m x K x d broadcast.
_ELEMENT_BUDGET = 1 << 22


def unit_tuples(widths: Sequence[int]) -> np.ndarray:
    """
    All neuron index tuples ``(i_1, ..., i_d)`` in flat-index order.

    Row ``j`` holds the tuple whose 0-based mixed-radix index is
    ``j = i_1 + i_2 N_1 + i_3 N_1 N_2 + ...``, so ``i_1`` varies fastest.
    """
    widths = [int(n) for n in widths]
    total = math.prod(widths)
    # unravel_index is row-major (last axis fastest); reversing the shape
    # makes the first layer the fastest digit.
    digits = np.unravel_index(np.arange(total), widths[::-1])
    return np.column_stack(digits[::-1]).astype(np.int64)


def flat_unit_index(indices: Sequence[int], widths: Sequence[int]) -> int:
    """
    0-based mixed-radix index of one unit tuple.

    Raises:
        ShapeError: If the tuple length differs from ``len(widths)``.
        ValueError: If any index is outside ``[0, N_l)``.
    """
    if len(indices) != len(widths):
        raise ShapeError(f"tuple {tuple(indices)} does not match widths {widths}")
    flat, stride = 0, 1
    for i, n in zip(indices, widths):
        if not 0 <= i < n:
            raise ValueError(f"index {i} out of range for a layer of {n} neurons")
        flat += int(i) * stride
        stride *= int(n)
    return flat


@dataclass
class GrbfnnCache:
    inputs: Matrix
    design: Matrix


@dataclass
class GrbfnnGradients:
    """Gradients in the shapes of the model's weights, centers and widths."""

    weights: Vector
    centers: Matrix
    widths: np.ndarray


class _GaussianUnitNetwork(BaseNetwork):
    """
    Shared machinery for the two GRBFNN variants.

    Flat parameter order: the ``K`` output weights, then the ``K x d`` centers
    row-major, then the widths (``K`` or ``K x d`` row-major).
    """

    def __init__(self, centers, widths, weights, sigma_min: float = SIGMA_MIN):
        self.centers = as_matrix(centers, "centers").copy()
        self.weights = np.array(weights, dtype=np.float64).reshape(-1)
        self.widths = np.array(widths, dtype=np.float64)
        self.sigma_min = float(sigma_min)
        k = self.centers.shape[0]
        if k < 1:
            raise ShapeError("a GRBFNN needs at least one unit")
        if self.weights.shape[0] != k:
            raise ShapeError(f"{k} centers but {self.weights.shape[0]} weights")
        if self.widths.shape != self._widths_shape(k, self.centers.shape[1]):
            raise ShapeError(
                f"widths of shape {self.widths.shape} do not fit {k} units"
            )
        if np.any(self.widths < self.sigma_min):
            raise ValueError(f"unit width below sigma_min={self.sigma_min}")

    @staticmethod
    @abc.abstractmethod
    def _widths_shape(units: int, dim: int) -> Tuple[int, ...]:
        raise NotImplementedError

    @abc.abstractmethod
    def _scaled_distances(self, x: Matrix) -> Matrix:
        """Per unit ``sum_l ((x_l - mu_kl) / sigma_kl)^2`` for a row chunk."""
        raise NotImplementedError

    @abc.abstractmethod
    def _center_width_grads(self, x: Matrix, coef: Matrix) -> Tuple[Matrix, np.ndarray]:
        """Center and width gradients for a row chunk given ``coef = g W_k G_k``."""
        raise NotImplementedError

    @classmethod
    def initialize(
        cls,
        dim: int,
        units: int,
        lo: float,
        hi: float,
        rng: Rng,
        sigma_min: float = SIGMA_MIN,
    ):
        """
        Random GRBFNN on ``[lo, hi]^dim``.

        Weights are uniform on ``[-1/sqrt(K), 1/sqrt(K)]``, centers are i.i.d.
        uniform over the domain, and every width is ``(hi - lo) / K^(1/d)``.
        """
        if dim < 1 or units < 1:
            raise ValueError(f"need dim >= 1 and units >= 1, got {dim}, {units}")
        if not lo < hi:
            raise ValueError(f"domain needs lo < hi, got [{lo}, {hi}]")
        bound = 1.0 / np.sqrt(units)
        weights = rng.uniform(-bound, bound, size=units)
        centers = rng.uniform(lo, hi, size=(units, dim))
        width = max((hi - lo) / units ** (1.0 / dim), sigma_min)
        widths = np.full(cls._widths_shape(units, dim), width)
        return cls(centers, widths, weights, sigma_min)

    @property
    def dim(self) -> int:
        return self.centers.shape[1]

    @property
    def n_units(self) -> int:
        return self.centers.shape[0]

    def _chunks(self, rows: int):
        step = max(1, _ELEMENT_BUDGET // (self.n_units * self.dim))
        for start in range(0, rows, step):
            yield slice(start, min(start + step, rows))

    def design_matrix(self, batch) -> Matrix:
        """
        The ``m x K`` matrix of unit activations ``G_k(x_i)``.

        Entries lie in ``[0, 1]`` (exactly 1 at a unit's center), and
        ``design_matrix(x) @ weights`` is the forward pass.
        """
        x = self._check_batch(batch)
        design = np.empty((x.shape[0], self.n_units))
        for rows in self._chunks(x.shape[0]):
            design[rows] = np.exp(-0.5 * self._scaled_distances(x[rows]))
        return design

    def forward(self, batch) -> Tuple[Vector, GrbfnnCache]:
        x = self._check_batch(batch)
        design = self.design_matrix(x)
        return design @ self.weights, GrbfnnCache(x, design)

    def backward(self, cache: GrbfnnCache, output_grad) -> GrbfnnGradients:
        """
        Analytic gradients of ``sum_i output_grad[i] * f(x_i)``.

        Raises:
            ShapeError: If the cache does not match this model or the
                gradient length does not match the cached batch.
        """
        x = cache.inputs
        if x.shape[1] != self.dim or cache.design.shape != (x.shape[0], self.n_units):
            raise ShapeError("forward cache does not match this GRBFNN")
        g = self._check_output_grad(output_grad, x.shape[0])

        d_weights = cache.design.T @ g
        d_centers = np.zeros_like(self.centers)
        d_widths = np.zeros_like(self.widths)
        for rows in self._chunks(x.shape[0]):
            coef = g[rows, None] * cache.design[rows] * self.weights[None, :]
            dc, dw = self._center_width_grads(x[rows], coef)
            d_centers += dc
            d_widths += dw
        return GrbfnnGradients(d_weights, d_centers, d_widths)

    def param_vector(self) -> Vector:
        return np.concatenate(
            [self.weights, self.centers.ravel(), self.widths.ravel()]
        )

    def grad_vector(self, grads: GrbfnnGradients) -> Vector:
        return np.concatenate(
            [grads.weights, grads.centers.ravel(), np.ravel(grads.widths)]
        )

    def load_params(self, params) -> None:
        v = self._check_param_length(params)
        k, c = self.n_units, self.centers.size
        self.weights = v[:k].copy()
        self.centers = v[k : k + c].reshape(self.centers.shape).copy()
        self.widths = v[k + c :].reshape(self.widths.shape).copy()

    def project_params(self) -> None:
        np.maximum(self.widths, self.sigma_min, out=self.widths)

    def state(self) -> Tuple[MetaState, TensorState]:
        meta = {
            "dim": str(self.dim),
            "units": str(self.n_units),
            "sigma_min": repr(self.sigma_min),
        }
        tensors: TensorState = [
            ("weights", self.weights),
            ("centers", self.centers),
            ("widths", self.widths),
        ]
        return meta, tensors

    @classmethod
    def from_state(cls, meta: MetaState, tensors: Dict[str, np.ndarray]):
        dim, units = int(meta["dim"]), int(meta["units"])
        centers = np.asarray(tensors["centers"], dtype=np.float64).reshape(units, dim)
        widths = np.asarray(tensors["widths"], dtype=np.float64).reshape(
            cls._widths_shape(units, dim)
        )
        return cls(
            centers,
            widths,
            column(tensors["weights"]),
            float(meta.get("sigma_min", SIGMA_MIN)),
        )

    def __repr__(self) -> str:
        return f"<{self.__class__.__name__} dim={self.dim} units={self.n_units}>"


@register_network("grbfnn")
class GrbfnnModel(_GaussianUnitNetwork):
    """Isotropic GRBFNN: one trainable width per unit."""

    @staticmethod
    def _widths_shape(units: int, dim: int) -> Tuple[int, ...]:
        return (units,)

    def _squared_distances(self, x: Matrix) -> Matrix:
        diff = x[:, None, :] - self.centers[None, :, :]
        return np.einsum("ikl,ikl->ik", diff, diff)

    def _scaled_distances(self, x: Matrix) -> Matrix:
        return self._squared_distances(x) / self.widths**2

    def _center_width_grads(self, x: Matrix, coef: Matrix) -> Tuple[Matrix, Vector]:
        sigma2 = self.widths**2
        d_centers = (coef.T @ x - coef.sum(axis=0)[:, None] * self.centers) / sigma2[
            :, None
        ]
        d_widths = np.sum(coef * self._squared_distances(x), axis=0) / self.widths**3
        return d_centers, d_widths


@register_network("grbfnn-aniso")
class AnisotropicGrbfnn(_GaussianUnitNetwork):
    """GRBFNN whose units have one width per input dimension."""

    @staticmethod
    def _widths_shape(units: int, dim: int) -> Tuple[int, ...]:
        return (units, dim)

    def _scaled_distances(self, x: Matrix) -> Matrix:
        z = (x[:, None, :] - self.centers[None, :, :]) / self.widths[None, :, :]
        return np.einsum("ikl,ikl->ik", z, z)

    def _center_width_grads(self, x: Matrix, coef: Matrix) -> Tuple[Matrix, Matrix]:
        diff = x[:, None, :] - self.centers[None, :, :]
        d_centers = np.einsum("ik,ikl->kl", coef, diff) / self.widths**2
        d_widths = np.einsum("ik,ikl->kl", coef, diff * diff) / self.widths**3
        return d_centers, d_widths


def sgnn_to_grbfnn(
    model: SgnnModel, max_units: int = DEFAULT_MAX_UNITS
) -> AnisotropicGrbfnn:
    """
    Expands an SGNN into the equivalent anisotropic GRBFNN.

    Each tuple ``(i_1, ..., i_d)`` of one neuron per layer becomes one unit
    with center ``(mu^(1)_{i_1}, ..., mu^(d)_{i_d})``, per-dimension widths
    ``(sigma^(1)_{i_1}, ..., sigma^(d)_{i_d})`` and output weight
    ``W^(d-1)_{i_d i_{d-1}} * ... * W^(1)_{i_2 i_1}``. Units are stored at
    the flat index given by :func:`flat_unit_index`.

    Raises:
        ValueError: If the SGNN has fewer than two layers.
        CapacityError: If ``prod(N_l)`` exceeds ``max_units``.
    """
    if model.dim < 2:
        raise ValueError("the GRBFNN expansion needs an SGNN with d >= 2")
    widths = model.widths
    total = math.prod(widths)
    if total > max_units:
        raise CapacityError(
            f"expansion would create {total} units, above the cap of {max_units}"
        )

    tuples = unit_tuples(widths)
    weights = np.prod(unit_weight_products(model, tuples), axis=0)
    centers = np.column_stack(
        [model.centers[layer][tuples[:, layer]] for layer in range(model.dim)]
    )
    sigmas = np.column_stack(
        [model.sigmas[layer][tuples[:, layer]] for layer in range(model.dim)]
    )
    logger.debug("expanded SGNN %s into %d GRBFNN units", widths, total)
    return AnisotropicGrbfnn(centers, sigmas, weights, model.sigma_min)


def unit_weight_products(model: SgnnModel, tuples: np.ndarray) -> List[Vector]:
    """
    Per-layer weight factors ``W^(l)_{i_{l+1} i_l}`` for each unit tuple.

    Returns one length-``K`` vector per weight matrix; their product is the
    unit's output weight.
    """
    return [
        w[tuples[:, layer + 1], tuples[:, layer]]
        for layer, w in enumerate(model.weights)
    ]
