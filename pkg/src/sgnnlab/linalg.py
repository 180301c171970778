"""
Dense linear algebra and random-number helpers.

Everything in sgnn-lab works on 64-bit numpy arrays. This module keeps the
few primitives the rest of the package depends on in one place: shape-checked
matrix products, a symmetric eigensolver, and the seeded random generator used
for every experiment.

Random streams come from numpy's PCG64 bit generator. PCG64 is a documented
permuted congruential generator, so a seed reproduces the same stream on any
platform and numpy version that ships it.
"""

import logging
from typing import Sequence, Tuple

import numpy as np

from .errors import ShapeError

logger = logging.getLogger(__name__)

# Type aliases used across the package. Both are float64 numpy arrays; the
# names document the expected rank.
Matrix = np.ndarray
Vector = np.ndarray
Rng = np.random.Generator

# Above this size the cyclic Jacobi sweep becomes slow in pure numpy and the
# LAPACK path takes over (unless a caller forces the method).
JACOBI_MAX_SIZE = 128
_JACOBI_MAX_SWEEPS = 100


def as_matrix(a, name: str = "matrix") -> Matrix:
    """Coerces ``a`` to a finite 2-D float64 array."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def as_vector(v, name: str = "vector") -> Vector:
    """Coerces ``v`` to a finite 1-D float64 array."""
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise ShapeError(f"{name} must be 1-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def matmul(a, b) -> Matrix:
    """
    Multiplies two matrices after checking that they conform.

    Args:
        a: Left operand of shape (n, k).
        b: Right operand of shape (k, p).

    Returns:
        Matrix: The (n, p) product, accumulated in float64.

    Raises:
        ShapeError: If ``a.cols != b.rows``.
    """
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(
            f"cannot multiply {a.shape[0]}x{a.shape[1]} by {b.shape[0]}x{b.shape[1]}"
        )
    return a @ b


def frobenius_norm(a) -> float:
    return float(np.linalg.norm(np.asarray(a, dtype=np.float64), "fro"))


def spectral_norm(a) -> float:
    """Largest singular value of a dense matrix."""
    return float(np.linalg.norm(np.asarray(a, dtype=np.float64), 2))


def _check_symmetric(h: Matrix) -> None:
    if h.shape[0] != h.shape[1]:
        raise ShapeError(f"eigendecomposition needs a square matrix, got {h.shape}")
    scale = float(np.max(np.abs(h))) if h.size else 0.0
    asym = float(np.max(np.abs(h - h.T))) if h.size else 0.0
    if asym > 1e-9 * scale:
        raise ValueError(
            f"matrix is not symmetric (max |h - h^T| = {asym:.3e}, "
            f"max |h| = {scale:.3e})"
        )


def _jacobi_eigen(h: Matrix) -> Tuple[Vector, Matrix]:
    """
    Cyclic Jacobi rotations on a symmetric matrix.

    Each (p, q) rotation zeroes one off-diagonal pair; sweeps repeat until the
    off-diagonal mass is at rounding level. Returns unsorted eigenvalues and
    the accumulated rotation matrix whose columns are the eigenvectors.
    """
    a = 0.5 * (h + h.T)
    n = a.shape[0]
    v = np.eye(n)
    eps = np.finfo(np.float64).eps
    # Entries below skip are rounding noise; all of them together stay under target.
    skip = eps * max(frobenius_norm(a), np.finfo(np.float64).tiny)
    target = n * skip

    for sweep in range(_JACOBI_MAX_SWEEPS):
        # Summed directly: ||a||^2 - ||diag a||^2 cancels once a is nearly diagonal.
        off = np.sqrt(2.0) * frobenius_norm(np.triu(a, 1))
        if off <= target:
            logger.debug("jacobi converged after %d sweeps (n=%d)", sweep, n)
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= skip:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c

                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q

                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q

                vec_p = v[:, p].copy()
                vec_q = v[:, q].copy()
                v[:, p] = c * vec_p - s * vec_q
                v[:, q] = s * vec_p + c * vec_q
    else:
        logger.warning("jacobi hit the sweep limit (n=%d)", n)

    return np.diag(a).copy(), v


def sym_eigen(h, method: str = "auto") -> Tuple[Vector, Matrix]:
    """
    Eigendecomposition of a real symmetric matrix.

    Args:
        h: Square matrix, symmetric within ``1e-9 * max|h|``.
        method: ``"jacobi"`` for cyclic Jacobi rotations, ``"lapack"`` for
            ``numpy.linalg.eigh``, or ``"auto"`` to use Jacobi up to
            ``JACOBI_MAX_SIZE`` rows and LAPACK above.

    Returns:
        Tuple[Vector, Matrix]: Eigenvalues sorted in descending order and
        the matrix whose columns are the matching orthonormal eigenvectors,
        so that ``h ≈ V @ diag(λ) @ V.T``.

    Raises:
        ShapeError: If ``h`` is not square.
        ValueError: If ``h`` is not symmetric or ``method`` is unknown.
    """
    h = as_matrix(h, "h")
    _check_symmetric(h)
    if method not in ("auto", "jacobi", "lapack"):
        raise ValueError(f"unknown eigensolver method '{method}'")

    use_jacobi = method == "jacobi" or (
        method == "auto" and h.shape[0] <= JACOBI_MAX_SIZE
    )
    if use_jacobi:
        values, vectors = _jacobi_eigen(h)
    else:
        values, vectors = np.linalg.eigh(0.5 * (h + h.T))

    order = np.argsort(values)[::-1]
    return values[order], vectors[:, order]


def make_rng(seed) -> Rng:
    """Returns a PCG64-backed generator for ``seed`` (int or SeedSequence)."""
    return np.random.Generator(np.random.PCG64(seed))


def spawn_seeds(seed: int, *keys: int) -> np.random.SeedSequence:
    """
    Derives an independent seed sequence from a base seed and integer keys.

    Runs keyed by (seed, function, dim, repetition, ...) get streams that do
    not overlap, and the same keys always give the same stream.
    """
    return np.random.SeedSequence([int(seed), *[int(k) for k in keys]])


def uniform_sample(rng: Rng, lo: float, hi: float) -> float:
    """
    Draws one value uniformly from ``[lo, hi)``.

    Raises:
        ValueError: If ``lo >= hi``.
    """
    if not lo < hi:
        raise ValueError(f"uniform_sample needs lo < hi, got [{lo}, {hi})")
    return float(rng.uniform(lo, hi))


def uniform_matrix(rng: Rng, lo: float, hi: float, shape: Sequence[int]) -> Matrix:
    """Vectorized ``uniform_sample`` filling an array of ``shape``."""
    if not lo < hi:
        raise ValueError(f"uniform_matrix needs lo < hi, got [{lo}, {hi})")
    return rng.uniform(lo, hi, size=tuple(shape))
