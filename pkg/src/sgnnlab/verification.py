"""
Numerical verification suites for sgnn-lab.

This module checks the analytic machinery of the package against independent
oracles: central finite differences for gradients and Jacobians, a brute-force
enumeration of the SGNN's expanded sum, the GRBFNN conversion, and a dense
recomputation of the projected Hessian.

The workflow is:
1. Build one or more :class:`Check` objects (one oracle comparison each).
2. Group them in a :class:`VerificationSuite`.
3. Run the suites with the :class:`Verifier`.

The factories at the bottom build the seeded suites behind the
``gradcheck``, ``equivalence`` and ``hessian`` commands.
"""

import abc
import itertools
import logging
from typing import Dict, List, NamedTuple, Optional

import numpy as np

from .analysis import hessian_bundle, mapping_jacobian
from .grbfnn import AnisotropicGrbfnn, GrbfnnModel, sgnn_to_grbfnn
from .linalg import Matrix, Vector, frobenius_norm, make_rng, spectral_norm
from .mlp import Activation, MlpModel
from .networks import BaseNetwork
from .sgnn import SgnnModel, gaussian_activation

logger = logging.getLogger(__name__)

FD_STEP = 1e-5
KINK_MARGIN = 1e-3


def relative_error(a, b, floor: float = 1.0) -> float:
    """
    Largest ``|a - b| / max(floor, |a|, |b|)`` over matching entries.

    With the default ``floor=1`` this is a mixed tolerance: entries smaller
    than one in magnitude are judged by absolute error, larger ones by
    relative error. A floor such as ``numpy.finfo(float).tiny`` makes it
    purely relative.

    Raises:
        ValueError: If ``floor`` is not positive.
    """
    if not floor > 0.0:
        raise ValueError(f"floor must be positive, got {floor}")
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size == 0:
        return 0.0
    scale = np.maximum(floor, np.maximum(np.abs(a), np.abs(b)))
    return float(np.max(np.abs(a - b) / scale))


def finite_difference_gradient(
    model: BaseNetwork, inputs, output_grad, h: float = FD_STEP
) -> Vector:
    """
    Central differences of ``sum_i output_grad[i] * f(x_i)`` per parameter.

    The model's parameters are restored before returning.
    """
    base = model.param_vector()
    g = np.asarray(output_grad, dtype=np.float64)
    grad = np.empty_like(base)
    try:
        for i in range(base.shape[0]):
            shifted = base.copy()
            shifted[i] = base[i] + h
            model.load_params(shifted)
            upper = g @ model.predict(inputs)
            shifted[i] = base[i] - h
            model.load_params(shifted)
            lower = g @ model.predict(inputs)
            grad[i] = (upper - lower) / (2.0 * h)
    finally:
        model.load_params(base)
    return grad


class CheckOutcome(NamedTuple):
    """Result of one oracle comparison."""

    name: str
    passed: bool
    max_error: float
    tolerance: float
    detail: str


class Check(abc.ABC):
    """
    Abstract Base Class for all checks.

    A check compares one analytic computation against an independent oracle
    and reports the largest discrepancy.
    """

    def __init__(self, name: str, tolerance: float):
        self.name = name
        self.tolerance = tolerance

    @abc.abstractmethod
    def run(self) -> CheckOutcome:
        """
        Performs the comparison.

        Returns:
            CheckOutcome: Pass flag, the worst error and a short description.
        """
        raise NotImplementedError

    def _outcome(self, error: float, detail: str = "") -> CheckOutcome:
        return CheckOutcome(
            self.name,
            bool(error <= self.tolerance),
            float(error),
            self.tolerance,
            detail,
        )

    def __repr__(self) -> str:
        return f"<{self.__class__.__name__} name='{self.name}'>"


class GradientCheck(Check):
    """Analytic gradients against central finite differences."""

    def __init__(
        self,
        model: BaseNetwork,
        inputs: Matrix,
        output_grad: Vector,
        tolerance: float = 1e-5,
        h: float = FD_STEP,
        name: Optional[str] = None,
    ):
        super().__init__(name or f"gradient {model!r}", tolerance)
        self.model = model
        self.inputs = inputs
        self.output_grad = output_grad
        self.h = h

    def run(self) -> CheckOutcome:
        _, cache = self.model.forward(self.inputs)
        analytic = self.model.grad_vector(self.model.backward(cache, self.output_grad))
        numeric = finite_difference_gradient(
            self.model, self.inputs, self.output_grad, self.h
        )
        error = relative_error(analytic, numeric)
        worst = int(np.argmax(np.abs(analytic - numeric))) if analytic.size else 0
        return self._outcome(
            error,
            f"{analytic.size} parameters, worst index {worst}, "
            "error floored at 1 (absolute below 1)",
        )


def expanded_sum(model: SgnnModel, inputs) -> Vector:
    """
    The SGNN output evaluated as an explicit sum over all neuron tuples.

    Every tuple ``(i_1, ..., i_d)`` contributes the product of its layer
    weights times the product of its Gaussian activations. The cost is
    ``O(prod(N_l))`` per row, so this is an oracle for small models only.
    """
    x = np.asarray(inputs, dtype=np.float64)
    total = np.zeros(x.shape[0])
    if model.dim == 1:
        for i, w in enumerate(model.out_weights):
            total += w * gaussian_activation(
                x[:, 0], model.centers[0][i], model.sigmas[0][i]
            )
        return total
    for tup in itertools.product(*(range(n) for n in model.widths)):
        weight = 1.0
        for layer, w in enumerate(model.weights):
            weight *= w[tup[layer + 1], tup[layer]]
        term = np.full(x.shape[0], weight)
        for layer, i in enumerate(tup):
            term *= gaussian_activation(
                x[:, layer], model.centers[layer][i], model.sigmas[layer][i]
            )
        total += term
    return total


class ExpansionCheck(Check):
    """SGNN forward pass against the brute-force expanded sum."""

    def __init__(
        self,
        model: SgnnModel,
        inputs: Matrix,
        tolerance: float = 1e-10,
        name: Optional[str] = None,
    ):
        super().__init__(name or f"expansion {model!r}", tolerance)
        self.model = model
        self.inputs = inputs

    def run(self) -> CheckOutcome:
        error = relative_error(
            self.model.predict(self.inputs), expanded_sum(self.model, self.inputs)
        )
        return self._outcome(
            error, f"{self.inputs.shape[0]} points, error floored at 1"
        )


class EquivalenceCheck(Check):
    """SGNN against its GRBFNN expansion, error scaled by ``1 + |f|``."""

    def __init__(
        self,
        model: SgnnModel,
        inputs: Matrix,
        tolerance: float = 1e-9,
        name: Optional[str] = None,
    ):
        super().__init__(name or f"equivalence {model!r}", tolerance)
        self.model = model
        self.inputs = inputs

    def run(self) -> CheckOutcome:
        expanded = sgnn_to_grbfnn(self.model)
        sgnn_out = self.model.predict(self.inputs)
        grbfnn_out = expanded.predict(self.inputs)
        error = float(np.max(np.abs(sgnn_out - grbfnn_out) / (1.0 + np.abs(sgnn_out))))
        return self._outcome(
            error, f"{expanded.n_units} units on {self.inputs.shape[0]} points"
        )


class JacobianCheck(Check):
    """Sparse mapping Jacobian against finite differences of the expansion."""

    def __init__(
        self,
        model: SgnnModel,
        tolerance: float = 1e-7,
        h: float = FD_STEP,
        name: Optional[str] = None,
    ):
        super().__init__(name or f"jacobian {model!r}", tolerance)
        self.model = model
        self.h = h

    def run(self) -> CheckOutcome:
        analytic = mapping_jacobian(self.model).toarray()
        base = self.model.param_vector()
        numeric = np.empty_like(analytic)
        try:
            for col in range(self.model.n_weights):
                shifted = base.copy()
                shifted[col] = base[col] + self.h
                self.model.load_params(shifted)
                upper = sgnn_to_grbfnn(self.model).weights
                shifted[col] = base[col] - self.h
                self.model.load_params(shifted)
                lower = sgnn_to_grbfnn(self.model).weights
                numeric[:, col] = (upper - lower) / (2.0 * self.h)
        finally:
            self.model.load_params(base)
        nonzeros = np.count_nonzero(analytic, axis=1)
        return self._outcome(
            relative_error(analytic, numeric),
            f"{analytic.shape[0]}x{analytic.shape[1]}, "
            f"{int(nonzeros.max())} nonzeros per row",
        )


class HessianIdentityCheck(Check):
    """
    Projected Hessian against an independent dense triple product.

    The identity is held to ``identity_tolerance`` relative to
    ``||J^T H~ J||_F``. ``tolerance`` covers the other properties: the
    dominant/subdominant split reconstructs ``H``, both Hessians are positive
    semidefinite, and ``lambda_max(H) <= lambda_max(H~) sigma_max(J)^2``.
    """

    def __init__(
        self,
        model: SgnnModel,
        inputs: Matrix,
        k: int,
        tolerance: float = 1e-8,
        identity_tolerance: float = 1e-10,
        name: Optional[str] = None,
    ):
        super().__init__(name or f"hessian {model!r} k={k}", tolerance)
        self.model = model
        self.inputs = inputs
        self.k = k
        self.identity_tolerance = identity_tolerance

    def run(self) -> CheckOutcome:
        bundle = hessian_bundle(self.model, self.inputs, self.k)
        j = bundle.jacobian.toarray()
        dense = j.T @ bundle.h_tilde @ j
        scale = max(frobenius_norm(dense), np.finfo(np.float64).tiny)
        identity_error = frobenius_norm(bundle.hessian - dense) / scale
        split_error = bundle.reconstruction_error / max(1.0, scale)

        top_source = max(1.0, float(bundle.source_eigenvalues[0]))
        top_projected = max(1.0, float(bundle.projected_eigenvalues[0]))
        psd_error = max(
            0.0,
            -float(bundle.source_eigenvalues[-1]) / top_source,
            -float(bundle.projected_eigenvalues[-1]) / top_projected,
        )
        bound = float(bundle.source_eigenvalues[0]) * spectral_norm(j) ** 2
        bound_error = max(0.0, float(bundle.projected_eigenvalues[0]) - bound) / max(
            1.0, bound
        )
        parts = [
            (identity_error, self.identity_tolerance),
            (split_error, self.tolerance),
            (psd_error, self.tolerance),
            (bound_error, self.tolerance),
        ]
        # Report the part closest to (or furthest past) its own tolerance.
        error, tolerance = max(parts, key=lambda part: part[0] / part[1])
        return CheckOutcome(
            self.name,
            all(e <= t for e, t in parts),
            float(error),
            tolerance,
            f"identity {identity_error:.2e} (tol {self.identity_tolerance:.0e}), "
            f"split {split_error:.2e}, psd {psd_error:.2e}, bound {bound_error:.2e}",
        )


class VerificationSuite:
    """A named group of checks that pass or fail together."""

    def __init__(self, name: str, checks: List[Check]):
        """
        Args:
            name (str): A descriptive name for the suite.
            checks (List[Check]): The checks to run, in order.
        """
        self.name = name
        self.checks = checks


class VerificationResult(NamedTuple):
    """Outcome of one suite."""

    suite_name: str
    passed: bool
    check_results: Dict[str, CheckOutcome]
    failures: List[str]


class Verifier:
    """Runs suites and collects their outcomes."""

    def run(self, suites: List[VerificationSuite]) -> List[VerificationResult]:
        """
        Executes every check of every suite.

        Returns:
            List[VerificationResult]: One result per suite; a suite passes
            only if all of its checks pass.
        """
        results = []
        for suite in suites:
            outcomes: Dict[str, CheckOutcome] = {}
            for check in suite.checks:
                outcome = check.run()
                outcomes[outcome.name] = outcome
                logger.debug(
                    "%s: %s (error %.3e, tolerance %.1e)",
                    outcome.name,
                    "pass" if outcome.passed else "FAIL",
                    outcome.max_error,
                    outcome.tolerance,
                )
            failures = [name for name, o in outcomes.items() if not o.passed]
            results.append(
                VerificationResult(
                    suite_name=suite.name,
                    passed=not failures,
                    check_results=outcomes,
                    failures=failures,
                )
            )
            logger.info(
                "suite %s: %d/%d checks passed",
                suite.name,
                len(outcomes) - len(failures),
                len(outcomes),
            )
        return results


def _jitter_sgnn(model: SgnnModel, rng) -> SgnnModel:
    # Move centers and widths off the regular grid so no symmetry hides errors.
    for layer in range(model.dim):
        spacing = model.sigmas[layer]
        model.centers[layer] = model.centers[layer] + rng.uniform(-0.2, 0.2) * spacing
        model.sigmas[layer] = spacing * rng.uniform(0.8, 1.25, size=spacing.shape)
    return model


def random_sgnn(
    rng, dim: int, neurons: int, lo: float = -2.0, hi: float = 2.0
) -> SgnnModel:
    """A seeded SGNN with jittered centers and widths."""
    return _jitter_sgnn(SgnnModel.initialize(dim, neurons, lo, hi, rng), rng)


def _kink_free_rows(model: MlpModel, candidates: Matrix, rows: int) -> Matrix:
    # Central differences are only valid where no ReLU sits near its kink.
    _, cache = model.forward(candidates)
    keep = np.ones(candidates.shape[0], dtype=bool)
    for z in cache.pre_activations:
        keep &= np.min(np.abs(z), axis=1) > KINK_MARGIN
    return candidates[keep][:rows]


def gradcheck_suite(
    seed: int = 0, models: int = 20, rows: int = 8
) -> VerificationSuite:
    """
    Finite-difference checks on ``models`` random networks of each family.

    The families are SGNNs, isotropic and anisotropic GRBFNNs, and Sigmoid
    and ReLU MLPs. ReLU batches keep only rows whose hidden pre-activations
    are at least ``KINK_MARGIN`` away from zero.
    """
    rng = make_rng(seed)
    checks: List[Check] = []
    for index in range(models):
        dim = int(rng.integers(1, 4))
        neurons = int(rng.integers(1, 5))
        model = random_sgnn(rng, dim, neurons)
        inputs = rng.uniform(-2.0, 2.0, size=(rows, dim))
        checks.append(
            GradientCheck(
                model,
                inputs,
                rng.normal(size=rows),
                name=f"sgnn #{index} d={dim} N={neurons}",
            )
        )
    for index in range(models):
        for cls in (GrbfnnModel, AnisotropicGrbfnn):
            dim = int(rng.integers(1, 4))
            units = int(rng.integers(2, 7))
            model = cls.initialize(dim, units, -2.0, 2.0, rng)
            inputs = rng.uniform(-2.0, 2.0, size=(rows, dim))
            checks.append(
                GradientCheck(
                    model,
                    inputs,
                    rng.normal(size=rows),
                    name=f"{model.kind} #{index} d={dim} K={units}",
                )
            )
    for index in range(models):
        for activation in (Activation.SIGMOID, Activation.RELU):
            dim = int(rng.integers(1, 4))
            depth = int(rng.integers(1, 3))
            hidden = [int(n) for n in rng.integers(2, 6, size=depth)]
            model = MlpModel.initialize(dim, hidden, activation, rng)
            inputs = rng.uniform(-2.0, 2.0, size=(4 * rows, dim))
            if activation is Activation.RELU:
                inputs = _kink_free_rows(model, inputs, rows)
            else:
                inputs = inputs[:rows]
            shape = "x".join(str(n) for n in hidden)
            checks.append(
                GradientCheck(
                    model,
                    inputs,
                    rng.normal(size=inputs.shape[0]),
                    name=f"mlp {activation.value} #{index} d={dim} {shape}",
                )
            )
    return VerificationSuite("gradcheck", checks)


def equivalence_suite(
    seed: int = 0,
    points: int = 1000,
    lo: float = -8.0,
    hi: float = 8.0,
    models: int = 50,
) -> VerificationSuite:
    """
    Conversion checks on ``models`` random SGNNs.

    ``d`` cycles through 2, 3 and 4 and ``N`` is drawn from 2..5. The
    brute-force expansion oracle also runs whenever ``N <= 4``.
    """
    rng = make_rng(seed)
    checks: List[Check] = []
    for index in range(models):
        dim = (2, 3, 4)[index % 3]
        neurons = int(rng.integers(2, 6))
        model = random_sgnn(rng, dim, neurons, lo, hi)
        inputs = rng.uniform(lo, hi, size=(points, dim))
        label = f"#{index} d={dim} N={neurons}"
        checks.append(EquivalenceCheck(model, inputs, name=f"equivalence {label}"))
        if neurons <= 4:
            checks.append(ExpansionCheck(model, inputs, name=f"expansion {label}"))
    return VerificationSuite("equivalence", checks)


def hessian_suite(seed: int = 0, points: int = 200, k: int = 3) -> VerificationSuite:
    """Jacobian and Hessian-identity checks on small SGNNs."""
    rng = make_rng(seed)
    checks: List[Check] = []
    for dim, neurons in ((2, 3), (3, 2), (3, 3)):
        model = random_sgnn(rng, dim, neurons)
        inputs = rng.uniform(-2.0, 2.0, size=(points, dim))
        label = f"d={dim} N={neurons}"
        checks.append(JacobianCheck(model, name=f"jacobian {label}"))
        checks.append(
            HessianIdentityCheck(
                model, inputs, min(k, neurons**dim), name=f"hessian {label}"
            )
        )
    return VerificationSuite("hessian", checks)
