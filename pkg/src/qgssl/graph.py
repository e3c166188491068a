"""Dataset loading and similarity-graph construction.

Builds the weighted k-nearest-neighbour graphs that the propagation
solvers run on: locally scaled Gaussian kernel weights, symmetrized by
elementwise max, together with the degree/transition/Laplacian operators
derived from them.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

__all__ = [
    "Dataset",
    "SimilarityGraph",
    "SpectralEstimate",
    "build_knn_graph",
    "load_dataset",
    "mask_labels",
    "spectral_radius",
    "standardize_features",
]


@dataclass(frozen=True)
class Dataset:
    """A fixed feature matrix with ground-truth labels and a visibility mask.

    ``labels`` holds class ids for every node (used for evaluation);
    ``labeled_mask`` marks the subset whose labels the solvers may see.
    """

    features: np.ndarray
    labels: np.ndarray
    labeled_mask: np.ndarray
    class_count: int
    name: str = ""

    def __post_init__(self):
        features = np.asarray(self.features, dtype=float)
        labels = np.asarray(self.labels)
        mask = np.asarray(self.labeled_mask, dtype=bool)
        if features.ndim != 2:
            raise ValueError("features must be a 2-d array")
        n = features.shape[0]
        if labels.shape != (n,) or mask.shape != (n,):
            raise ValueError("labels and labeled_mask must have one entry per row")
        if not np.isfinite(features).all():
            raise ValueError("features must be finite")
        if self.class_count < 1:
            raise ValueError("class_count must be positive")
        if labels.min(initial=0) < 0 or labels.max(initial=0) >= self.class_count:
            raise ValueError("labels must lie in [0, class_count)")
        visible = labels[mask]
        for c in range(self.class_count):
            if not (visible == c).any():
                raise ValueError(f"class {c} has no labeled node")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels.astype(int))
        object.__setattr__(self, "labeled_mask", mask)

    @property
    def node_count(self) -> int:
        return self.features.shape[0]


@dataclass(frozen=True)
class SimilarityGraph:
    """Symmetric weighted graph plus the operators derived from it.

    W is the symmetric nonnegative weight matrix with zero diagonal,
    D the per-node degree vector, P = D^-1 W the random-walk transition
    matrix, pi the degree distribution, Qmat the rank-one projector with
    every row equal to pi, and L = diag(D) - W the combinatorial Laplacian.
    """

    W: np.ndarray
    D: np.ndarray
    P: np.ndarray
    pi: np.ndarray
    Qmat: np.ndarray
    L: np.ndarray
    _spectrum: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        W = self.W
        n = W.shape[0]
        if W.shape != (n, n):
            raise ValueError("W must be square")
        if (W < 0).any() or not np.isfinite(W).all():
            raise ValueError("weights must be finite and nonnegative")
        if np.abs(np.diag(W)).max(initial=0) != 0:
            raise ValueError("W must have a zero diagonal")
        if np.abs(W - W.T).max(initial=0) > 1e-10:
            raise ValueError("W must be symmetric")
        if (self.D <= 0).any():
            raise ValueError("every node needs positive degree")
        if np.abs(self.P.sum(axis=1) - 1).max() > 1e-10:
            raise ValueError("P must be row stochastic")
        if abs(self.pi.sum() - 1) > 1e-10:
            raise ValueError("pi must sum to one")
        if np.abs(self.L.sum(axis=1)).max() > 1e-8:
            raise ValueError("Laplacian rows must sum to zero")

    @classmethod
    def from_weights(cls, W: np.ndarray) -> "SimilarityGraph":
        """Derive all operators from a symmetric weight matrix."""
        W = np.asarray(W, dtype=float)
        D = W.sum(axis=1)
        if (D <= 0).any():
            isolated = np.flatnonzero(D <= 0)
            raise ValueError(f"isolated nodes with zero degree: {isolated.tolist()}")
        P = W / D[:, None]
        pi = D / D.sum()
        Qmat = np.tile(pi, (len(D), 1))
        L = np.diag(D) - W
        return cls(W=W, D=D, P=P, pi=pi, Qmat=Qmat, L=L)

    @property
    def node_count(self) -> int:
        return self.W.shape[0]

    def transition_spectrum(self) -> np.ndarray:
        """Eigenvalues of P in ascending order.

        P is similar to the symmetric matrix D^-1/2 W D^-1/2, so its
        spectrum is real and can be computed with a symmetric solver.
        Cached after the first call.
        """
        if self._spectrum is None:
            rootd = np.sqrt(self.D)
            S = self.W / np.outer(rootd, rootd)
            spectrum = np.linalg.eigvalsh(S)
            object.__setattr__(self, "_spectrum", spectrum)
        return self._spectrum

    def iteration_radius(self, alpha1: float, alpha2: float) -> float:
        """Spectral radius of P - alpha1 * Qmat + alpha2 * I.

        Subtracting alpha1 * Qmat shifts only the constant eigenvector of P
        (Qmat projects onto it along pi, and every other eigenvector of P is
        pi-orthogonal), so the radius is the larger of the shifted constant
        mode |1 - alpha1 + alpha2| and max |lambda_i + alpha2| over the
        remaining eigenvalues of P.
        """
        spectrum = self.transition_spectrum()
        shifted_constant = abs(1.0 - alpha1 + alpha2)
        rest = spectrum[:-1]  # drop one unit eigenvalue (the constant mode)
        if rest.size == 0:
            return shifted_constant
        return max(shifted_constant, float(np.abs(rest + alpha2).max()))


@dataclass(frozen=True)
class SpectralEstimate:
    """Largest-singular-value estimate from power iteration."""

    value: float
    converged: bool

    def __float__(self) -> float:
        return self.value


def standardize_features(raw: np.ndarray) -> np.ndarray:
    """Center each column and scale to unit sample variance (ddof=1).

    Zero-variance columns carry no distance information and are dropped
    with a warning; if every column is constant there is nothing left to
    build a graph from and a ValueError is raised.
    """
    X = np.asarray(raw, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("need a 2-d matrix with at least two rows")
    sd = X.std(axis=0, ddof=1)
    keep = sd > 0
    if not keep.any():
        raise ValueError("all feature columns are constant")
    if not keep.all():
        dropped = int((~keep).sum())
        logger.warning("dropping %d constant feature column(s)", dropped)
    X = X[:, keep]
    return (X - X.mean(axis=0)) / sd[keep]


def mask_labels(dataset: Dataset, label_rate: float, seed: int) -> Dataset:
    """Return a copy of ``dataset`` with a stratified random labeled mask.

    Each class keeps floor(label_rate * n_c + 0.5) of its nodes, sampled
    without replacement; classes are processed in ascending id order so a
    given seed always produces the same mask.
    """
    if not 0 < label_rate <= 1:
        raise ValueError("label_rate must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    mask = np.zeros(dataset.node_count, dtype=bool)
    for c in range(dataset.class_count):
        idx = np.flatnonzero(dataset.labels == c)
        cnt = int(math.floor(label_rate * len(idx) + 0.5))
        if cnt < 1:
            raise ValueError(
                f"label_rate {label_rate} leaves class {c} with no labeled node"
            )
        mask[rng.choice(idx, cnt, replace=False)] = True
    return replace(dataset, labeled_mask=mask)


def build_knn_graph(
    dataset: Dataset, k_neighbors: int, scaling: str = "self_tuning"
) -> SimilarityGraph:
    """Build the locally scaled Gaussian kNN graph for a dataset.

    Each node links to its k nearest neighbours (self excluded) with weight
    exp(-|xi - xj|^2 / (sigma_i sigma_j)), where sigma_i is the distance to
    the ceil(k/2)-th nearest neighbour.  The directed kNN weights are
    symmetrized with an elementwise max.
    """
    if scaling != "self_tuning":
        raise ValueError(f"unknown kernel scaling policy: {scaling!r}")
    X = dataset.features
    n = X.shape[0]
    if not 1 <= k_neighbors <= n - 1:
        raise ValueError(f"k_neighbors must lie in [1, {n - 1}] for {n} nodes")

    sq = (X * X).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.maximum(d2, 0.0, out=d2)
    dist = np.sqrt(d2)
    masked = dist.copy()
    np.fill_diagonal(masked, np.inf)

    order = np.argsort(masked, axis=1, kind="stable")
    nbrs = order[:, :k_neighbors]
    r = int(np.ceil(k_neighbors / 2))
    sigma = np.empty(n)
    for i in range(n):
        s = masked[i, nbrs[i, r - 1]]
        if s <= 0:
            # duplicate points: fall back to the nearest strictly positive gap
            row = masked[i]
            positive = row[np.isfinite(row) & (row > 0)]
            if positive.size == 0:
                raise ValueError("all points are identical; no usable kernel width")
            s = positive.min()
        sigma[i] = s

    W = np.zeros((n, n))
    for i in range(n):
        js = nbrs[i]
        W[i, js] = np.exp(-d2[i, js] / (sigma[i] * sigma[js]))
    np.fill_diagonal(W, 0.0)
    W = np.maximum(W, W.T)
    return SimilarityGraph.from_weights(W)


def spectral_radius(
    M: np.ndarray, tol: float = 1e-10, max_iter: int = 5000
) -> SpectralEstimate:
    """Largest singular value of M by power iteration on M^T M.

    The result upper-bounds the spectral radius of M, so it is a safe
    (if sometimes loose) convergence screen for nonsymmetric iterations.
    Starts from the deterministic all-ones vector.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("M must be a square matrix")
    n = M.shape[0]
    v = np.ones(n) / math.sqrt(n)
    sigma = 0.0
    converged = False
    for _ in range(max_iter):
        w = M.T @ (M @ v)
        norm = np.linalg.norm(w)
        if norm == 0:
            return SpectralEstimate(0.0, True)
        v = w / norm
        new_sigma = math.sqrt(norm)
        if abs(new_sigma - sigma) <= tol * max(1.0, new_sigma):
            sigma = new_sigma
            converged = True
            break
        sigma = new_sigma
    return SpectralEstimate(float(sigma), converged)


def _read_schema(schema) -> dict:
    if isinstance(schema, (str, Path)):
        with open(schema, encoding="utf-8") as fh:
            schema = json.load(fh)
    if not isinstance(schema, dict) or "label" not in schema:
        raise ValueError("schema must be a mapping with a 'label' key")
    return schema


def load_dataset(path, schema) -> Dataset:
    """Load a CSV file into a Dataset using a column-description schema.

    ``schema`` is a mapping (or path to a JSON file) with keys: ``label``
    (column holding the class), ``categorical`` (columns to one-hot encode),
    optional ``drop`` (columns to ignore), ``na_values`` (tokens that mark a
    missing value; rows containing one are removed) and ``classes`` (the
    allowed label values, in the id order to assign).
    """
    path = Path(path)
    schema = _read_schema(schema)
    label_col = schema["label"]
    categorical = list(schema.get("categorical", []))
    dropped_cols = set(schema.get("drop", []))
    na_values = set(schema.get("na_values", ["?"]))

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty file")
        rows = [row for row in reader if row]

    if label_col not in header:
        raise ValueError(f"{path}: label column {label_col!r} not found")
    used = [c for c in header if c not in dropped_cols]
    col_index = {c: header.index(c) for c in header}

    kept = []
    for row in rows:
        if any(row[col_index[c]].strip() in na_values for c in used):
            continue
        kept.append(row)
    if len(kept) < len(rows):
        logger.info(
            "%s: dropped %d row(s) with missing values", path.name, len(rows) - len(kept)
        )
    if not kept:
        raise ValueError(f"{path}: no usable rows")

    raw_labels = [row[col_index[label_col]].strip() for row in kept]
    if "classes" in schema:
        classes = list(schema["classes"])
        unknown = sorted(set(raw_labels) - set(classes))
        if unknown:
            raise ValueError(f"{path}: unknown label value(s) {unknown}")
    else:
        classes = sorted(set(raw_labels))
    class_id = {c: i for i, c in enumerate(classes)}
    labels = np.array([class_id[v] for v in raw_labels])

    columns = []
    for c in used:
        if c == label_col:
            continue
        values = [row[col_index[c]].strip() for row in kept]
        if c in categorical:
            levels = sorted(set(values))
            for level in levels:
                columns.append([1.0 if v == level else 0.0 for v in values])
        else:
            numeric = []
            for i, v in enumerate(values):
                try:
                    numeric.append(float(v))
                except ValueError:
                    raise ValueError(
                        f"{path}: non-numeric value {v!r} in column {c!r}, row {i + 2}"
                    ) from None
            columns.append(numeric)
    if not columns:
        raise ValueError(f"{path}: no feature columns")
    features = np.array(columns).T

    present = np.unique(labels)
    keep_classes = present.tolist() == list(range(len(classes)))
    if not keep_classes:
        # some declared classes are absent from the file; compact the ids
        remap = {old: new for new, old in enumerate(present)}
        labels = np.array([remap[v] for v in labels])

    return Dataset(
        features=features,
        labels=labels,
        labeled_mask=np.ones(len(kept), dtype=bool),
        class_count=len(present),
        name=path.stem,
    )
