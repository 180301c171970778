"""
Benchmark functions and dataset sampling.

The ten candidate functions cover sinks, sources, saddles, flat and s-shaped
surfaces, and mixtures of sinks and sources. Each one is defined for any
input dimension ``d >= 2`` and evaluated in a vectorized way over a batch of
points.

Datasets are drawn uniformly from a hypercube ``[lo, hi]^d`` and split into
training and validation indices with a seeded shuffle.
"""

from dataclasses import dataclass
from typing import Callable, Dict, NamedTuple

import numpy as np

from .errors import ShapeError
from .linalg import Matrix, Rng, Vector, as_matrix

CANDIDATE_IDS = range(1, 11)

DEFAULT_LO = -8.0
DEFAULT_HI = 8.0
DEFAULT_SPLIT = 0.8


def _next_coordinate(x: Matrix) -> Matrix:
    # x_{j+1} with the last column wrapping to x_1
    return np.roll(x, -1, axis=1)


def _root_sum_squared(x: Matrix) -> Vector:
    return np.sqrt(np.sum(x * x, axis=1))


def _second_degree_polynomial(x: Matrix) -> Vector:
    return np.sum(x * x * _next_coordinate(x), axis=1) / 50.0


def _exponential_square_sum(x: Matrix) -> Vector:
    return np.sum(np.exp(x * x / 50.0), axis=1) / 5.0


def _exponential_sinusoid_sum(x: Matrix) -> Vector:
    return np.sum(np.exp(x * x / 50.0) * np.sin(_next_coordinate(x)), axis=1) / 5.0


def _polynomial_sinusoid_sum(x: Matrix) -> Vector:
    j = np.arange(1, x.shape[1] + 1, dtype=np.float64)
    return np.sum(x * x * np.cos(j * x), axis=1) / 50.0


def _inverse_exponential_square_sum(x: Matrix) -> Vector:
    return 10.0 / np.sum(np.exp(x * x / 25.0), axis=1)


def _sigmoidal(x: Matrix) -> Vector:
    return 10.0 / (1.0 + np.exp(-np.sum(x, axis=1) / 5.0))


def _gaussian(x: Matrix) -> Vector:
    return 10.0 * np.exp(-np.sum(x * x, axis=1) / 100.0)


def _linear(x: Matrix) -> Vector:
    return np.sum(x, axis=1)


def _constant(x: Matrix) -> Vector:
    return np.ones(x.shape[0])


class _Formula(NamedTuple):
    name: str
    feature: str
    evaluate: Callable[[Matrix], Vector]


_FORMULAS: Dict[int, _Formula] = {
    1: _Formula("Root sum squared", "Sink", _root_sum_squared),
    2: _Formula("Second-degree polynomial", "Saddle", _second_degree_polynomial),
    3: _Formula("Exponential-square sum", "Flatter sink", _exponential_square_sum),
    4: _Formula(
        "Exponential-sinusoid sum", "Sink & Source", _exponential_sinusoid_sum
    ),
    5: _Formula("Polynomial-sinusoid sum", "Sink & Source", _polynomial_sinusoid_sum),
    6: _Formula(
        "Inverse-exponential-square sum", "Source", _inverse_exponential_square_sum
    ),
    7: _Formula("Sigmoidal", "S-shaped surface", _sigmoidal),
    8: _Formula("Gaussian", "Flatter source", _gaussian),
    9: _Formula("Linear", "Flat", _linear),
    10: _Formula("Constant", "Flat", _constant),
}


@dataclass(frozen=True)
class CandidateFunction:
    """
    One benchmark function bound to an input dimension.

    Attributes:
        id (int): Function number, 1 to 10.
        dim (int): Input dimension ``d``.
        name (str): Human-readable name, e.g. "Exponential-square sum".
        feature (str): Geometric feature of the surface, e.g. "Flatter sink".
    """

    id: int
    dim: int
    name: str
    feature: str

    def evaluate(self, inputs) -> Vector:
        """
        Evaluates the function on every row of an ``m x d`` batch.

        Raises:
            ShapeError: If the batch does not have ``dim`` columns.
        """
        x = as_matrix(inputs, "inputs")
        if x.shape[1] != self.dim:
            raise ShapeError(
                f"f{self.id} expects {self.dim} columns, got {x.shape[1]}"
            )
        return _FORMULAS[self.id].evaluate(x)

    def __call__(self, point) -> float:
        """Evaluates the function at a single d-vector."""
        x = np.asarray(point, dtype=np.float64).reshape(1, -1)
        return float(self.evaluate(x)[0])

    def __repr__(self) -> str:
        return f"<CandidateFunction f{self.id} dim={self.dim} name='{self.name}'>"


def make_candidate(fn_id: int, dim: int) -> CandidateFunction:
    """
    Builds candidate ``fn_id`` for inputs of dimension ``dim``.

    Args:
        fn_id (int): Function number between 1 and 10.
        dim (int): Input dimension. Must be at least 2, because several
            formulas couple neighbouring coordinates.

    Raises:
        ValueError: If ``fn_id`` is out of range or ``dim < 2``.
    """
    if fn_id not in _FORMULAS:
        raise ValueError(f"candidate id must be in 1..10, got {fn_id}")
    if dim < 2:
        raise ValueError(f"candidate functions need dim >= 2, got {dim}")
    formula = _FORMULAS[fn_id]
    return CandidateFunction(
        id=fn_id, dim=dim, name=formula.name, feature=formula.feature
    )


@dataclass
class Dataset:
    """
    Sampled inputs and targets with a train/validation split.

    Attributes:
        inputs (Matrix): ``m x d`` sample points.
        targets (Vector): ``m`` function values.
        train_idx (np.ndarray): Row indices of the training set.
        val_idx (np.ndarray): Row indices of the validation set.
    """

    inputs: Matrix
    targets: Vector
    train_idx: np.ndarray
    val_idx: np.ndarray

    @property
    def size(self) -> int:
        return self.inputs.shape[0]

    @property
    def dim(self) -> int:
        return self.inputs.shape[1]

    @property
    def train_inputs(self) -> Matrix:
        return self.inputs[self.train_idx]

    @property
    def train_targets(self) -> Vector:
        return self.targets[self.train_idx]

    @property
    def val_inputs(self) -> Matrix:
        return self.inputs[self.val_idx]

    @property
    def val_targets(self) -> Vector:
        return self.targets[self.val_idx]


def sample_dataset(
    f: CandidateFunction,
    m: int,
    rng: Rng,
    lo: float = DEFAULT_LO,
    hi: float = DEFAULT_HI,
    split: float = DEFAULT_SPLIT,
) -> Dataset:
    """
    Samples ``m`` uniform points on ``[lo, hi]^d`` and splits them.

    The training set receives ``round(split * m)`` rows chosen by a seeded
    permutation; the rest form the validation set.

    Raises:
        ValueError: If ``m < 10``, ``lo >= hi`` or ``split`` is not in (0, 1).
    """
    if m < 10:
        raise ValueError(f"datasets need at least 10 samples, got {m}")
    if not lo < hi:
        raise ValueError(f"sampling domain needs lo < hi, got [{lo}, {hi}]")
    if not 0.0 < split < 1.0:
        raise ValueError(f"split must be in (0, 1), got {split}")

    inputs = rng.uniform(lo, hi, size=(m, f.dim))
    targets = f.evaluate(inputs)
    order = rng.permutation(m)
    n_train = int(np.floor(split * m + 0.5))
    return Dataset(
        inputs=inputs,
        targets=targets,
        train_idx=np.sort(order[:n_train]),
        val_idx=np.sort(order[n_train:]),
    )


def grid_axis(n: int, lo: float, hi: float) -> Vector:
    if n < 2:
        raise ValueError(f"grid needs n >= 2, got {n}")
    if not lo < hi:
        raise ValueError(f"grid needs lo < hi, got [{lo}, {hi}]")
    return np.linspace(lo, hi, n)


def grid_points(dim: int, n: int, lo: float, hi: float) -> Matrix:
    """
    Points of an ``n x n`` grid on the x1-x2 plane, other coordinates zero.

    Rows are ordered with x1 as the slow index and x2 as the fast one, which
    is the row-major order of :func:`grid_slice`.
    """
    if dim < 2:
        raise ValueError(f"grid slices need dim >= 2, got {dim}")
    axis = grid_axis(n, lo, hi)
    x1, x2 = np.meshgrid(axis, axis, indexing="ij")
    points = np.zeros((n * n, dim))
    points[:, 0] = x1.ravel()
    points[:, 1] = x2.ravel()
    return points


def grid_slice(f: CandidateFunction, n: int, lo: float, hi: float) -> Matrix:
    """
    Function values on the x1-x2 plane with the remaining coordinates at zero.

    Returns:
        Matrix: ``n x n`` array whose entry ``(i, j)`` is
        ``f(axis[i], axis[j], 0, ..., 0)`` with ``axis = linspace(lo, hi, n)``.
    """
    return f.evaluate(grid_points(f.dim, n, lo, hi)).reshape(n, n)
