"""Classical label-propagation solvers on similarity graphs.

Implements the damped source-driven iteration used by the main pipeline
(`improved_poisson_learning`), the harmonic/Laplacian solver, plain
source-driven diffusion, and the clamped propagation/spreading baselines.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse
import scipy.sparse.csgraph
import scipy.sparse.linalg

from .graph import Dataset, SimilarityGraph

logger = logging.getLogger(__name__)

__all__ = [
    "DivergenceError",
    "LabelMatrix",
    "PropagationParams",
    "SourceMatrix",
    "assign_labels",
    "build_source_matrix",
    "improved_poisson_learning",
    "label_propagation_baseline",
    "label_spreading_baseline",
    "laplacian_learning",
    "poisson_learning",
]

# the iteration matrix may touch 1 exactly (neutral modes oscillate but stay
# bounded); anything measurably above 1 is refused outright
_RADIUS_SLACK = 1e-9


class DivergenceError(RuntimeError):
    """Raised when an iteration cannot contract (spectral radius >= 1)."""


@dataclass(frozen=True)
class LabelMatrix:
    """n x k matrix of per-node class scores."""

    U: np.ndarray

    def __post_init__(self):
        U = np.asarray(self.U, dtype=float)
        if U.ndim != 2:
            raise ValueError("U must be a 2-d matrix")
        if not np.isfinite(U).all():
            raise ValueError("U must be finite")
        object.__setattr__(self, "U", U)


@dataclass(frozen=True)
class PropagationParams:
    """Coefficients and stopping rule for the damped source-driven update."""

    alpha1: float = 1.0
    alpha2: float = -0.30
    alpha3: float = 1.0
    epsilon: float = 1e-6
    max_iter: int = 2000

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.max_iter < 0:
            raise ValueError("max_iter must be nonnegative")


@dataclass(frozen=True)
class SourceMatrix:
    """Mean-centered label sources: B is k x n, b the labeled-class prior."""

    B: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        if self.B.ndim != 2 or self.b.shape != (self.B.shape[0],):
            raise ValueError("B must be k x n with a length-k prior")
        if abs(self.b.sum() - 1) > 1e-12:
            raise ValueError("class prior must sum to one")


def _one_hot(dataset: Dataset) -> np.ndarray:
    Y = np.zeros((dataset.node_count, dataset.class_count))
    idx = np.flatnonzero(dataset.labeled_mask)
    Y[idx, dataset.labels[idx]] = 1.0
    return Y


def build_source_matrix(dataset: Dataset) -> SourceMatrix:
    """Per-node label sources, centered by the labeled-class prior.

    b_j is the fraction of labeled nodes carrying class j; a labeled node's
    column is its one-hot vector minus b, an unlabeled node's column is zero.
    Centering makes every row of B sum to zero, which keeps the update's
    fixed point orthogonal to the degree distribution.
    """
    labeled = np.flatnonzero(dataset.labeled_mask)
    k = dataset.class_count
    counts = np.bincount(dataset.labels[labeled], minlength=k).astype(float)
    if (counts == 0).any():
        missing = np.flatnonzero(counts == 0).tolist()
        raise ValueError(f"no labeled nodes for class(es) {missing}")
    b = counts / counts.sum()
    B = np.zeros((k, dataset.node_count))
    B[dataset.labels[labeled], labeled] = 1.0
    B[:, labeled] -= b[:, None]
    return SourceMatrix(B=B, b=b)


def improved_poisson_learning(
    graph: SimilarityGraph,
    dataset: Dataset,
    params: PropagationParams,
    *,
    observer=None,
):
    """Damped source-driven propagation to its fixed point.

    Iterates U <- (P - alpha1*Q + alpha2*I) U + alpha3 * D^-1 B^T from
    U0 = D^-1 Y until the Frobenius change drops below epsilon or max_iter
    is hit.  Returns (LabelMatrix, iterations, residual_history); a run that
    exhausts max_iter is logged as non-converged and its final residual
    stays >= epsilon.

    The iteration radius is checked exactly before iterating (the rank-one
    Q term shifts only the constant mode of P); a radius measurably above 1
    raises DivergenceError instead of looping on a divergent map.

    ``observer(m, U)``, when given, is called with every iterate including
    the initial one.
    """
    radius = graph.iteration_radius(params.alpha1, params.alpha2)
    if params.max_iter > 0 and radius >= 1.0 + _RADIUS_SLACK:
        raise DivergenceError(
            f"iteration radius {radius:.6g} >= 1; "
            "the update cannot contract with these coefficients"
        )
    src = build_source_matrix(dataset)
    c = params.alpha3 * (src.B.T / graph.D[:, None])
    U = _one_hot(dataset) / graph.D[:, None]
    if observer is not None:
        observer(0, U)
    history: list[float] = []
    iterations = 0
    a2 = params.alpha2
    for m in range(1, params.max_iter + 1):
        PU = graph.P @ U
        QU = np.outer(np.ones(graph.node_count), graph.pi @ U)
        new_U = PU - params.alpha1 * QU + a2 * U + c
        residual = float(np.linalg.norm(new_U - U))
        if not np.isfinite(residual):
            raise DivergenceError(
                f"non-finite residual at iteration {m} "
                f"(iteration radius {radius:.6g})"
            )
        U = new_U
        history.append(residual)
        iterations = m
        if observer is not None:
            observer(m, U)
        if residual < params.epsilon:
            break
    if history and history[-1] >= params.epsilon:
        logger.warning(
            "no convergence after %d iterations (last residual %.3g, epsilon %.3g)",
            iterations,
            history[-1],
            params.epsilon,
        )
    return LabelMatrix(U=U), iterations, history


def laplacian_learning(graph: SimilarityGraph, dataset: Dataset) -> LabelMatrix:
    """Harmonic extension of the labeled one-hot rows.

    Unlabeled rows solve L_uu F_u = -L_ul F_l by conjugate gradients with a
    Jacobi preconditioner (relative residual 1e-8).  Every unlabeled node
    must be connected to some labeled node or the block is singular.
    """
    mask = dataset.labeled_mask
    Y = _one_hot(dataset)
    if mask.all():
        return LabelMatrix(U=Y)

    adjacency = scipy.sparse.csr_matrix(graph.W > 0)
    _, component = scipy.sparse.csgraph.connected_components(adjacency, directed=False)
    for comp_id in np.unique(component):
        members = np.flatnonzero(component == comp_id)
        if not mask[members].any():
            raise ValueError(
                f"unlabeled component {members.tolist()} is disconnected "
                "from every labeled node"
            )

    u = ~mask
    L_uu = graph.L[np.ix_(u, u)]
    rhs = -graph.L[np.ix_(u, mask)] @ Y[mask]
    precond = scipy.sparse.diags(1.0 / np.diag(L_uu))
    F_u = np.empty_like(rhs)
    for j in range(rhs.shape[1]):
        F_u[:, j], info = scipy.sparse.linalg.cg(
            L_uu, rhs[:, j], rtol=1e-8, atol=0.0, M=precond
        )
        if info != 0:
            raise RuntimeError(f"harmonic solve failed for class {j} (info={info})")
    F = Y.copy()
    F[u] = F_u
    return LabelMatrix(U=F)


def poisson_learning(
    graph: SimilarityGraph,
    dataset: Dataset,
    iterations: int,
    *,
    source: SourceMatrix | None = None,
) -> LabelMatrix:
    """Plain source-driven diffusion: U <- P U + D^-1 B^T from U0 = 0."""
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    src = build_source_matrix(dataset) if source is None else source
    c = src.B.T / graph.D[:, None]
    U = np.zeros((dataset.node_count, dataset.class_count))
    for _ in range(iterations):
        U = graph.P @ U + c
    return LabelMatrix(U=U)


def label_propagation_baseline(
    graph: SimilarityGraph,
    dataset: Dataset,
    tol: float = 1e-6,
    max_iter: int = 2000,
) -> LabelMatrix:
    """Iterated U <- P U with labeled rows clamped back to one-hot."""
    Y = _one_hot(dataset)
    mask = dataset.labeled_mask
    U = Y.copy()
    for m in range(1, max_iter + 1):
        new_U = graph.P @ U
        new_U[mask] = Y[mask]
        residual = np.linalg.norm(new_U - U)
        U = new_U
        if residual < tol:
            break
    else:
        logger.warning("label propagation hit max_iter=%d without converging", max_iter)
    return LabelMatrix(U=U)


def label_spreading_baseline(
    graph: SimilarityGraph,
    dataset: Dataset,
    clamp: float = 0.2,
    tol: float = 1e-6,
    max_iter: int = 2000,
) -> LabelMatrix:
    """Normalized spreading U <- clamp * S U + (1 - clamp) * Y."""
    if not 0 < clamp < 1:
        raise ValueError("clamp must lie strictly between 0 and 1")
    rootd = np.sqrt(graph.D)
    S = graph.W / np.outer(rootd, rootd)
    Y = _one_hot(dataset)
    U = Y.copy()
    for m in range(1, max_iter + 1):
        new_U = clamp * (S @ U) + (1 - clamp) * Y
        residual = np.linalg.norm(new_U - U)
        U = new_U
        if residual < tol:
            break
    else:
        logger.warning("label spreading hit max_iter=%d without converging", max_iter)
    return LabelMatrix(U=U)


def assign_labels(U: LabelMatrix) -> np.ndarray:
    """Per-row argmax with ties resolved to the lowest class index."""
    return np.argmax(U.U, axis=1)
