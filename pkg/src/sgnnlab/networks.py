"""
Network abstraction module for sgnn-lab.

The trainer, the verification suites and the benchmark harness never touch a
concrete model type. They work against :class:`BaseNetwork`, the contract
that the SGNN, the two GRBFNN variants and the MLP baselines all implement:
a batched forward pass that records what the backward pass needs, analytic
gradients contracted with an output gradient, and a flat parameter vector
for the optimizer.

This module also implements the plain-text model format shared by all
network types::

    # sgnn-lab network
    kind=sgnn
    dim=2
    widths=5,5
    @tensor centers_1 5 1
    -8
    -4
    ...

Metadata is one ``key=value`` per line; each tensor block starts with
``@tensor <name> <rows> <cols>`` followed by ``rows`` comma-separated lines.
Floats are written with 17 significant digits, so a save/load round trip
reproduces every parameter bit for bit.
"""

import abc
import logging
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple, Type, Union

import numpy as np

from .errors import ConfigError, ShapeError
from .linalg import Matrix, Vector, as_matrix, as_vector

logger = logging.getLogger(__name__)

FORMAT_HEADER = "# sgnn-lab network"

# Tensor state is kept as an ordered list so that files list parameters in
# the same order as the flat parameter vector.
TensorState = List[Tuple[str, np.ndarray]]
MetaState = Dict[str, str]


class BaseNetwork(abc.ABC):
    """
    Abstract Base Class for every trainable network in sgnn-lab.

    Subclasses own their parameter arrays and expose them in two ways: as
    named tensors (for serialization) and as a single flat vector (for the
    optimizer, finite-difference checks and Hessian analysis). The order of
    the flat vector is part of each subclass's documented contract.
    """

    #: Short identifier written to model files, e.g. ``"sgnn"``.
    kind: str = ""

    @property
    @abc.abstractmethod
    def dim(self) -> int:
        """Input dimension ``d``."""
        raise NotImplementedError

    @abc.abstractmethod
    def forward(self, batch) -> Tuple[Vector, Any]:
        """
        Evaluates the network on an ``m x d`` batch.

        Returns:
            Tuple[Vector, Any]: The ``m`` outputs and a cache object holding
            the intermediate values the backward pass needs.
        """
        raise NotImplementedError

    @abc.abstractmethod
    def backward(self, cache: Any, output_grad) -> Any:
        """
        Gradients of ``sum_i output_grad[i] * output[i]`` w.r.t. parameters.

        Args:
            cache: The cache returned by :meth:`forward` on this model.
            output_grad: Length-``m`` vector, typically ``dLoss/dOutput``.
        """
        raise NotImplementedError

    @abc.abstractmethod
    def param_vector(self) -> Vector:
        """Returns a copy of all trainable parameters as one flat vector."""
        raise NotImplementedError

    @abc.abstractmethod
    def load_params(self, params) -> None:
        """Overwrites all trainable parameters from a flat vector."""
        raise NotImplementedError

    @abc.abstractmethod
    def grad_vector(self, grads: Any) -> Vector:
        """Flattens a gradient object in :meth:`param_vector` order."""
        raise NotImplementedError

    @abc.abstractmethod
    def state(self) -> Tuple[MetaState, TensorState]:
        """Metadata and named tensors that fully describe the network."""
        raise NotImplementedError

    @classmethod
    @abc.abstractmethod
    def from_state(cls, meta: MetaState, tensors: Dict[str, np.ndarray]):
        """Rebuilds a network from :meth:`state` output."""
        raise NotImplementedError

    def predict(self, batch) -> Vector:
        """Forward pass without keeping the cache."""
        outputs, _ = self.forward(batch)
        return outputs

    def project_params(self) -> None:
        """
        Restores parameter constraints after an optimizer step.

        The default implementation does nothing; Gaussian networks clamp their
        widths here.
        """

    @property
    def n_params(self) -> int:
        return int(self.param_vector().shape[0])

    def _check_batch(self, batch) -> Matrix:
        x = as_matrix(batch, "batch")
        if x.shape[1] != self.dim:
            raise ShapeError(
                f"{self.kind} network expects {self.dim} input columns, "
                f"got {x.shape[1]}"
            )
        return x

    def _check_output_grad(self, output_grad, rows: int) -> Vector:
        g = as_vector(output_grad, "output_grad")
        if g.shape[0] != rows:
            raise ShapeError(
                f"output_grad has length {g.shape[0]} but the cached batch has "
                f"{rows} rows"
            )
        return g

    def _check_param_length(self, params) -> Vector:
        v = np.asarray(params, dtype=np.float64)
        expected = self.n_params
        if v.ndim != 1 or v.shape[0] != expected:
            raise ShapeError(
                f"{self.kind} network has {expected} parameters, got vector of "
                f"shape {v.shape}"
            )
        return v

    def __repr__(self) -> str:
        return f"<{self.__class__.__name__} dim={self.dim} params={self.n_params}>"


_REGISTRY: Dict[str, Type[BaseNetwork]] = {}


def register_network(kind: str) -> Callable[[Type[BaseNetwork]], Type[BaseNetwork]]:
    """Class decorator that makes a network type loadable by ``kind``."""

    def decorator(cls: Type[BaseNetwork]) -> Type[BaseNetwork]:
        cls.kind = kind
        _REGISTRY[kind] = cls
        return cls

    return decorator


def _format_row(row: np.ndarray) -> str:
    return ",".join(f"{value:.17g}" for value in row)


def save_network(
    network: BaseNetwork,
    path: Union[str, Path],
    extra: Optional[Dict[str, Any]] = None,
) -> Path:
    """
    Writes a network to the sgnn-lab text format.

    Args:
        network: Any registered network.
        path: Destination file.
        extra: Additional metadata (e.g. the candidate id it was trained on).
            Keys must not contain ``=`` or newlines.

    Returns:
        Path: The path written.
    """
    path = Path(path)
    meta, tensors = network.state()
    lines = [FORMAT_HEADER, f"kind={network.kind}"]
    metadata = {**meta, **{k: str(v) for k, v in (extra or {}).items()}}
    lines.extend(f"{key}={value}" for key, value in metadata.items())
    for name, tensor in tensors:
        block = np.atleast_2d(np.asarray(tensor, dtype=np.float64))
        if np.asarray(tensor).ndim == 1:
            block = block.T
        rows, cols = block.shape
        lines.append(f"@tensor {name} {rows} {cols}")
        lines.extend(_format_row(row) for row in block)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.debug("saved %s network to %s", network.kind, path)
    return path


def read_network_file(
    path: Union[str, Path],
) -> Tuple[MetaState, Dict[str, np.ndarray]]:
    """
    Parses a model file into metadata and named 2-D tensors.

    Raises:
        FileNotFoundError: If ``path`` does not exist.
        ConfigError: If the file is not in the sgnn-lab format.
    """
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != FORMAT_HEADER:
        raise ConfigError(f"{path} is not an sgnn-lab network file")

    meta: MetaState = {}
    tensors: Dict[str, np.ndarray] = {}
    i = 1
    while i < len(lines):
        line = lines[i].strip()
        i += 1
        if not line:
            continue
        if line.startswith("@tensor"):
            try:
                _, name, rows, cols = line.split()
                rows, cols = int(rows), int(cols)
                block = [
                    [float(v) for v in lines[i + r].split(",")] for r in range(rows)
                ]
            except (ValueError, IndexError) as exc:
                raise ConfigError(f"malformed tensor block '{line}' in {path}") from exc
            i += rows
            tensors[name] = np.array(block, dtype=np.float64).reshape(rows, cols)
        elif "=" in line:
            key, value = line.split("=", 1)
            meta[key.strip()] = value.strip()
        else:
            raise ConfigError(f"unexpected line '{line}' in {path}")
    return meta, tensors


def load_network(path: Union[str, Path]) -> Tuple[BaseNetwork, MetaState]:
    """
    Loads a network saved by :func:`save_network`.

    Returns:
        Tuple[BaseNetwork, MetaState]: The network and the full metadata,
        including any extra keys written at save time.
    """
    meta, tensors = read_network_file(path)
    kind = meta.get("kind")
    if kind not in _REGISTRY:
        raise ConfigError(f"unknown network kind '{kind}' in {path}")
    return _REGISTRY[kind].from_state(meta, tensors), meta


def parse_int_list(text: str) -> List[int]:
    return [int(part) for part in text.split(",") if part.strip()]


def column(tensor: np.ndarray) -> Vector:
    """Flattens an ``n x 1`` tensor block back into a vector."""
    return np.asarray(tensor, dtype=np.float64).reshape(-1)
