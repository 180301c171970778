"""
Complexity accounting and Hessian analysis.

The first half of this module gives closed-form neuron, parameter and FLOP
counts for the three network families. The second half studies the loss
curvature of an SGNN through its GRBFNN expansion: with centers and widths
held fixed, the expanded network is linear in its unit weights ``W~``, so its
sum-of-squares loss has the exact Hessian ``H~ = 2 D^T D``. The SGNN weights
``theta`` map onto ``W~ = g(theta)`` through products of layer weights, and
the Gauss-Newton form of the SGNN weight Hessian is ``H = J^T H~ J`` with
``J = dg/dtheta``. Rotating into the eigenbasis of ``H~`` splits ``H`` into a
dominant part carried by the top ``k`` eigenpairs and the remainder.
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
import pandas as pd
from scipy import sparse

from .candidates import Dataset
from .errors import CapacityError, ShapeError
from .grbfnn import sgnn_to_grbfnn, unit_tuples, unit_weight_products
from .linalg import Matrix, Vector, frobenius_norm, sym_eigen
from .mlp import mlp_param_count
from .sgnn import SgnnModel

logger = logging.getLogger(__name__)

DEFAULT_HESSIAN_CAP = 2000
_INT64_MAX = 2**63 - 1
_LOG_FLOOR = 1e-30


def sgnn_trainable_count(d: int, n: int) -> int:
    """``3N`` for one layer, ``(d - 1) N^2 + 2 d N`` otherwise."""
    if d < 1 or n < 1:
        raise ValueError(f"need d, N >= 1, got {d}, {n}")
    if d == 1:
        return 3 * n
    return (d - 1) * n * n + 2 * d * n


def grbfnn_counts(d: int, n: int) -> Tuple[int, int]:
    """
    Trainable counts of a GRBFNN with ``N^d`` units.

    Returns:
        Tuple[int, int]: Weights only (``N^d``) and weights plus centers and
        widths (``N^d (d + 2)``).

    Raises:
        OverflowError: If the larger count exceeds a signed 64-bit integer.
    """
    if d < 1 or n < 1:
        raise ValueError(f"need d, N >= 1, got {d}, {n}")
    units = n**d
    with_centers = units * (d + 2)
    if with_centers > _INT64_MAX:
        raise OverflowError(f"N^d (d + 2) for d={d}, N={n} exceeds 64-bit range")
    return units, with_centers


def sgnn_flops(d: int, n: int, m: int) -> Tuple[int, int]:
    """
    Forward and backward FLOP of an SGNN on ``m`` inputs.

    The forward pass costs ``6mN`` in the first layer, ``m(2N^2 + 6N)`` in
    each of the ``d - 1`` mixing layers and ``mN`` for the output sum. The
    backward pass costs ``m(3N^2 + 2N)`` per layer plus ``mN`` at the output.
    """
    if d < 2:
        raise ValueError(f"SGNN FLOP counts need d >= 2, got {d}")
    if n < 1 or m < 0:
        raise ValueError(f"need N >= 1 and m >= 0, got {n}, {m}")
    forward = m * (6 * n + (d - 1) * (2 * n * n + 6 * n) + n)
    backward = m * d * (3 * n * n + 2 * n) + m * n
    return forward, backward


def mlp_flops(d: int, layers: int, width: int, m: int) -> Tuple[int, int]:
    """
    Dense-layer FLOP: a multiply-add per weight and an add per bias forward,
    twice the multiply-adds backward (input and weight gradients).
    """
    sizes = [d] + [width] * layers + [1]
    macs = sum(a * b for a, b in zip(sizes[:-1], sizes[1:]))
    biases = sum(sizes[1:])
    return m * (2 * macs + biases), m * 4 * macs


@dataclass
class ComplexityReport:
    """
    Size and cost of one network configuration.

    Attributes:
        kind (str): ``"sgnn"``, ``"grbfnn"`` or ``"mlp"``.
        dim (int): Input dimension.
        width (int): Neurons per layer (SGNN, MLP) or per dimension (GRBFNN).
        neurons (int): Total neuron count.
        weights_only (int): Trainable weights without centers or widths.
        trainable (int): All trainable variables.
        forward_flops (int): Forward FLOP for ``data_size`` inputs.
        backward_flops (int): Backward FLOP for ``data_size`` inputs.
        data_size (int): Number of inputs ``m``.
        layers (Optional[int]): Hidden layers, MLP only.
    """

    kind: str
    dim: int
    width: int
    neurons: int
    weights_only: int
    trainable: int
    forward_flops: int
    backward_flops: int
    data_size: int
    layers: Optional[int] = None


def complexity_report(
    kind: str, d: int, n: int, m: int, layers: Optional[int] = None
) -> ComplexityReport:
    """
    Builds a :class:`ComplexityReport` for ``kind`` in ``{sgnn, grbfnn, mlp}``.

    GRBFNN FLOP are reported at their leading order ``m N^d`` for both passes.
    MLP reports need ``layers``.
    """
    if kind == "sgnn":
        forward, backward = sgnn_flops(d, n, m)
        trainable = sgnn_trainable_count(d, n)
        return ComplexityReport(
            kind, d, n, d * n, trainable - 2 * d * n, trainable, forward, backward, m
        )
    if kind == "grbfnn":
        units, trainable = grbfnn_counts(d, n)
        return ComplexityReport(
            kind, d, n, units, units, trainable, m * units, m * units, m
        )
    if kind == "mlp":
        if layers is None or layers < 1:
            raise ValueError("MLP complexity needs layers >= 1")
        params = mlp_param_count(d, layers, n)
        forward, backward = mlp_flops(d, layers, n, m)
        weights = params - (layers * n + 1)
        return ComplexityReport(
            kind, d, n, layers * n, weights, params, forward, backward, m, layers
        )
    raise ValueError(f"unknown network kind '{kind}'")


def grbfnn_weight_hessian(
    model, data: Union[Dataset, Matrix], cap: int = DEFAULT_HESSIAN_CAP
) -> Matrix:
    """
    Exact Hessian ``2 D^T D`` of the sum-of-squares loss in the unit weights.

    Centers and widths are held fixed, so the loss is quadratic in the weights
    and the Hessian does not depend on the targets.

    Args:
        model: A GRBFNN (either variant).
        data: A dataset (all rows are used) or an input matrix.
        cap: Largest unit count allowed to densify.

    Raises:
        CapacityError: If the model has more than ``cap`` units.
    """
    if model.n_units > cap:
        raise CapacityError(f"{model.n_units} units exceed the Hessian cap of {cap}")
    inputs = data.inputs if isinstance(data, Dataset) else data
    design = model.design_matrix(inputs)
    h = 2.0 * design.T @ design
    return 0.5 * (h + h.T)


def mapping_jacobian(
    model: SgnnModel, cap: int = DEFAULT_HESSIAN_CAP
) -> sparse.coo_array:
    """
    Sparse Jacobian of the expanded unit weights with respect to SGNN weights.

    Row ``j`` belongs to the unit with tuple ``(i_1, ..., i_d)``; it has one
    nonzero per weight matrix, at ``W^(l)_{i_{l+1} i_l}``, equal to the
    product of the other ``d - 2`` factors of the unit's weight. Columns
    follow the weight block of :meth:`SgnnModel.param_vector`.

    Raises:
        ValueError: If ``d < 2``.
        CapacityError: If ``prod(N_l)`` exceeds ``cap``.
    """
    if model.dim < 2:
        raise ValueError("the mapping Jacobian needs an SGNN with d >= 2")
    widths = model.widths
    units = math.prod(widths)
    if units > cap:
        raise CapacityError(f"{units} units exceed the Hessian cap of {cap}")

    tuples = unit_tuples(widths)
    factors = unit_weight_products(model, tuples)
    prefix = [np.ones(units)]
    for f in factors:
        prefix.append(prefix[-1] * f)
    suffix = [np.ones(units)]
    for f in reversed(factors):
        suffix.append(suffix[-1] * f)
    suffix.reverse()

    rows, cols, values = [], [], []
    for layer, offset in enumerate(model.weight_offsets()):
        rows.append(np.arange(units))
        cols.append(offset + tuples[:, layer + 1] * widths[layer] + tuples[:, layer])
        values.append(prefix[layer] * suffix[layer + 1])
    return sparse.coo_array(
        (np.concatenate(values), (np.concatenate(rows), np.concatenate(cols))),
        shape=(units, model.n_weights),
    )


@dataclass
class HessianBundle:
    """
    The weight Hessians of an SGNN and their eigen-split.

    Attributes:
        h_tilde (Matrix): ``K x K`` Hessian of the expanded network.
        jacobian (sparse.coo_array): ``K x P`` mapping Jacobian.
        hessian (Matrix): ``P x P`` projected Hessian ``J^T H~ J``.
        source_eigenvalues (Vector): Eigenvalues of ``H~``, descending.
        source_eigenvectors (Matrix): Matching eigenvectors as columns.
        projected_eigenvalues (Vector): Eigenvalues of ``H``, descending.
        k (int): Number of dominant eigenpairs.
        q_dominant (Matrix): First ``k`` rows of ``Q = V^T J``.
        q_subdominant (Matrix): Remaining rows of ``Q``.
        dominant_part (Matrix): ``Q_d^T diag(lambda_d) Q_d``.
        subdominant_part (Matrix): ``Q_s^T diag(lambda_s) Q_s``.
    """

    h_tilde: Matrix
    jacobian: sparse.coo_array
    hessian: Matrix
    source_eigenvalues: Vector
    source_eigenvectors: Matrix
    projected_eigenvalues: Vector
    k: int
    q_dominant: Matrix
    q_subdominant: Matrix
    dominant_part: Matrix
    subdominant_part: Matrix

    @property
    def reconstruction_error(self) -> float:
        """``||H_d + H_s - H||_F``, zero up to rounding."""
        return frobenius_norm(self.dominant_part + self.subdominant_part - self.hessian)


def _split(
    q: Matrix, eigenvalues: Vector, k: int
) -> Tuple[Matrix, Matrix, Matrix, Matrix]:
    q_d, q_s = q[:k], q[k:]
    dominant = q_d.T @ (eigenvalues[:k, None] * q_d)
    subdominant = q_s.T @ (eigenvalues[k:, None] * q_s)
    return q_d, q_s, dominant, subdominant


def projected_hessian(h_tilde, jacobian, k: int) -> HessianBundle:
    """
    Projects ``H~`` through ``J`` and splits the result by ``H~``'s spectrum.

    Args:
        h_tilde: Symmetric ``K x K`` matrix.
        jacobian: ``K x P`` matrix, sparse or dense.
        k: Number of dominant eigenpairs, ``1 <= k <= K``.

    Raises:
        ShapeError: If ``J`` does not have ``K`` rows.
        ValueError: If ``k`` is out of range.
    """
    h_tilde = np.asarray(h_tilde, dtype=np.float64)
    units = h_tilde.shape[0]
    if jacobian.shape[0] != units:
        raise ShapeError(f"J has {jacobian.shape[0]} rows, H~ is {units}x{units}")
    if not 1 <= k <= units:
        raise ValueError(f"k must be between 1 and {units}, got {k}")
    j = jacobian.tocsr() if sparse.issparse(jacobian) else np.asarray(jacobian)

    # H~ is symmetric, so (J^T H~)^T = H~ J.
    jt_h = np.asarray(j.T @ h_tilde)
    hessian = np.asarray(j.T @ jt_h.T)
    hessian = 0.5 * (hessian + hessian.T)

    source_values, source_vectors = sym_eigen(h_tilde)
    projected_values, _ = sym_eigen(hessian)
    q = np.asarray((j.T @ source_vectors).T)
    q_d, q_s, dominant, subdominant = _split(q, source_values, k)
    bundle = HessianBundle(
        h_tilde=h_tilde,
        jacobian=jacobian,
        hessian=hessian,
        source_eigenvalues=source_values,
        source_eigenvectors=source_vectors,
        projected_eigenvalues=projected_values,
        k=k,
        q_dominant=q_d,
        q_subdominant=q_s,
        dominant_part=dominant,
        subdominant_part=subdominant,
    )
    logger.debug(
        "projected %dx%d Hessian to %dx%d (split error %.3e)",
        units,
        units,
        hessian.shape[0],
        hessian.shape[0],
        bundle.reconstruction_error,
    )
    return bundle


def hessian_bundle(
    model: SgnnModel,
    data: Union[Dataset, Matrix],
    k: int,
    cap: int = DEFAULT_HESSIAN_CAP,
) -> HessianBundle:
    """Expansion, weight Hessian, mapping Jacobian and projection in one call."""
    expanded = sgnn_to_grbfnn(model, max_units=cap)
    h_tilde = grbfnn_weight_hessian(expanded, data, cap)
    return projected_hessian(h_tilde, mapping_jacobian(model, cap), k)


@dataclass
class DominanceReport:
    """
    How much of ``H`` the top-``k`` eigenpairs of ``H~`` explain.

    The histograms count ``log10 |lambda|`` of ``H~``'s eigenvalues (floored
    at ``1e-30``) over shared bin edges, so the current and initial spectra
    can be compared bin by bin.
    """

    k: int
    fraction: float
    source_eigenvalues: Vector
    projected_eigenvalues: Vector
    bin_edges: Vector
    histogram: np.ndarray
    initial_histogram: Optional[np.ndarray] = None


def _log_magnitudes(values: Vector) -> Vector:
    return np.log10(np.maximum(np.abs(values), _LOG_FLOOR))


def dominance_report(
    bundle: HessianBundle,
    k: Optional[int] = None,
    initial: Optional[HessianBundle] = None,
    bins: int = 20,
) -> DominanceReport:
    """
    Fraction ``||Q_d^T lambda_d Q_d||_F / ||H||_F`` for the top ``k`` pairs.

    Args:
        bundle: Analysis of the current (usually trained) model.
        k: Dominant pair count; defaults to ``bundle.k``.
        initial: Optional analysis of the same model before training, whose
            eigenvalue histogram is reported alongside.
        bins: Histogram bin count.

    Raises:
        ValueError: If ``k`` is outside ``1..K``.
    """
    k = bundle.k if k is None else k
    units = bundle.source_eigenvalues.shape[0]
    if not 1 <= k <= units:
        raise ValueError(f"k must be between 1 and {units}, got {k}")
    if k == bundle.k:
        dominant = bundle.dominant_part
    else:
        q = np.vstack([bundle.q_dominant, bundle.q_subdominant])
        _, _, dominant, _ = _split(q, bundle.source_eigenvalues, k)

    total = frobenius_norm(bundle.hessian)
    fraction = 1.0 if total == 0.0 else frobenius_norm(dominant) / total

    current = _log_magnitudes(bundle.source_eigenvalues)
    everything = current
    if initial is not None:
        everything = np.concatenate(
            [current, _log_magnitudes(initial.source_eigenvalues)]
        )
    edges = np.histogram_bin_edges(everything, bins=bins)
    histogram, _ = np.histogram(current, bins=edges)
    initial_histogram = None
    if initial is not None:
        initial_histogram, _ = np.histogram(
            _log_magnitudes(initial.source_eigenvalues), bins=edges
        )
    return DominanceReport(
        k=k,
        fraction=float(fraction),
        source_eigenvalues=bundle.source_eigenvalues,
        projected_eigenvalues=bundle.projected_eigenvalues,
        bin_edges=edges,
        histogram=histogram,
        initial_histogram=initial_histogram,
    )


def write_spectrum_csv(bundle: HessianBundle, path: Union[str, Path]) -> Path:
    """
    Writes ``rank,eigenvalue_source,eigenvalue_projected``.

    Ranks start at 1; where one spectrum is shorter its cells are left blank.
    """
    path = Path(path)
    source = pd.Series(bundle.source_eigenvalues)
    projected = pd.Series(bundle.projected_eigenvalues)
    rows = max(len(source), len(projected))
    frame = pd.DataFrame(
        {
            "rank": np.arange(1, rows + 1),
            "eigenvalue_source": source.reindex(range(rows)).to_numpy(),
            "eigenvalue_projected": projected.reindex(range(rows)).to_numpy(),
        }
    )
    frame.to_csv(
        path, index=False, float_format="%.17g", na_rep="", lineterminator="\n"
    )
    return path
