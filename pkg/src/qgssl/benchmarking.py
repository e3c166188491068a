"""Randomized benchmarking and layer/qubit sweep experiments.

Random Clifford sequences closed by their exact inverse are simulated on
statevectors; gate noise is unraveled stochastically as uniform Pauli
insertions, whose expectation is a depolarizing channel.  Mean survival
per sequence length is fitted to the exponential decay A*p**m + B, and p
is converted to the usual average-fidelity and error-per-gate scores.
The sweep runner pairs pipeline accuracy with circuit entanglement and a
benchmarking score while one knob (circuit depth or width) varies.
"""

from __future__ import annotations

import csv
import itertools
import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from .graph import Dataset
from .qelp import PipelineConfig, ipqssl_pipeline
from .qsim import build_pqc, entanglement_entropy, run_circuit

logger = logging.getLogger(__name__)

__all__ = [
    "DEFAULT_RB_LENGTHS",
    "RBResult",
    "SweepRow",
    "average_fidelity",
    "clifford_group_1q",
    "error_per_clifford",
    "fit_decay",
    "rb_experiment",
    "rb_score",
    "sweep",
    "write_sweep_csv",
]

DEFAULT_RB_LENGTHS = (1, 5, 10, 25, 50, 100, 200)

_HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
_PHASE = np.array([[1, 0], [0, 1j]], dtype=complex)
_PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
_PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_PAULIS_1Q = (_PAULI_X, _PAULI_Y, _PAULI_Z)

_SWEEP_KNOBS = {"layers": "layer_count", "qubits": "qubit_count"}


@dataclass(frozen=True)
class RBResult:
    """Survival data and decay fit for one benchmarking run."""

    lengths: tuple
    survival: tuple
    fit_A: float
    fit_p: float
    fit_B: float
    fidelity: float
    error_per_clifford: float
    shots: int
    repetitions: int
    fit_converged: bool = True

    def __post_init__(self):
        lengths = tuple(int(m) for m in self.lengths)
        survival = tuple(float(s) for s in self.survival)
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "survival", survival)
        if not lengths:
            raise ValueError("lengths must be nonempty")
        if any(m < 1 for m in lengths):
            raise ValueError("sequence lengths must be >= 1")
        if any(b <= a for a, b in zip(lengths, lengths[1:])):
            raise ValueError("sequence lengths must be strictly increasing")
        if len(survival) != len(lengths):
            raise ValueError("one survival value per length is required")
        if any(not (0.0 <= s <= 1.0) for s in survival):
            raise ValueError("survival probabilities must lie in [0, 1]")
        if not 0.0 < self.fit_p <= 1.0:
            raise ValueError(f"fit_p must lie in (0, 1], got {self.fit_p}")
        if not 0.0 <= self.fidelity <= 1.0:
            raise ValueError(f"fidelity must lie in [0, 1], got {self.fidelity}")
        if not (math.isfinite(self.fit_A) and math.isfinite(self.fit_B)):
            raise ValueError("fit parameters must be finite")
        if not (math.isfinite(self.error_per_clifford) and self.error_per_clifford >= 0):
            raise ValueError("error_per_clifford must be finite and nonnegative")
        if self.shots < 1 or self.repetitions < 1:
            raise ValueError("shots and repetitions must be positive")


@dataclass(frozen=True)
class SweepRow:
    """One row of a knob sweep: accuracy, entanglement, benchmarking score."""

    knob: str
    value: int
    entanglement: float
    accuracy: float
    rb_score: float

    def __post_init__(self):
        if self.knob not in _SWEEP_KNOBS:
            raise ValueError(
                f"knob must be one of {sorted(_SWEEP_KNOBS)}, got {self.knob!r}"
            )
        if self.value < 1:
            raise ValueError("knob value must be positive")
        if not (math.isfinite(self.entanglement) and self.entanglement >= 0):
            raise ValueError("entanglement must be finite and nonnegative")
        if not 0.0 <= self.accuracy <= 1.0:
            raise ValueError(f"accuracy must lie in [0, 1], got {self.accuracy}")
        if not 0.0 <= self.rb_score <= 1.0:
            raise ValueError(f"rb_score must lie in [0, 1], got {self.rb_score}")


def _phase_key(matrix):
    """Hashable canonical form of a unitary modulo global phase."""
    flat = matrix.reshape(-1)
    significant = np.flatnonzero(np.abs(flat) > 1e-9)
    pivot = flat[significant[0]]
    normalized = matrix * (abs(pivot) / pivot)
    # +0j folds any negative zeros into positive zeros so keys are stable
    return (np.round(normalized, 12) + (0.0 + 0.0j)).tobytes()


def clifford_group_1q():
    """All 24 single-qubit Clifford operations modulo global phase.

    Built as the multiplicative closure of the Hadamard and phase gates,
    deduplicated up to global phase, in deterministic discovery order.
    """
    seen = set()
    group = []
    stack = [np.eye(2, dtype=complex)]
    while stack:
        g = stack.pop()
        key = _phase_key(g)
        if key in seen:
            continue
        seen.add(key)
        group.append(g)
        for generator in (_HADAMARD, _PHASE):
            stack.append(generator @ g)
    if len(group) != 24:  # pragma: no cover - closure is fixed
        raise RuntimeError(f"Clifford closure produced {len(group)} elements")
    return group


def _two_qubit_generators():
    identity = np.eye(2, dtype=complex)
    cnot = np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
    )
    return [
        np.kron(_HADAMARD, identity),
        np.kron(identity, _HADAMARD),
        np.kron(_PHASE, identity),
        np.kron(identity, _PHASE),
        cnot,
    ]


def _two_qubit_paulis():
    identity = np.eye(2, dtype=complex)
    singles = (identity, _PAULI_X, _PAULI_Y, _PAULI_Z)
    return [
        np.kron(a, b)
        for a, b in itertools.product(singles, repeat=2)
        if not (a is singles[0] and b is singles[0])
    ]


def _inject_pauli_noise(states, paulis, noise_p, rng):
    """Apply a uniformly chosen Pauli to each shot with probability noise_p."""
    hit = rng.random(states.shape[0]) < noise_p
    choice = rng.integers(0, len(paulis), size=states.shape[0])
    for k, pauli in enumerate(paulis):
        selected = hit & (choice == k)
        if selected.any():
            states[selected] = states[selected] @ pauli.T


def _sequence_survival(gates, paulis, length, shots, noise_p, rng, dim):
    """Mean |0...0> survival over shots for one random sequence.

    Pauli insertions map computational-frame states to computational-frame
    states, so each trajectory's survival is exactly 0 or 1 and thresholding
    the amplitude reproduces the measurement frequency.
    """
    picks = rng.integers(0, len(gates), size=length)
    states = np.zeros((shots, dim), dtype=complex)
    states[:, 0] = 1.0
    accumulated = np.eye(dim, dtype=complex)
    for pick in picks:
        gate = gates[pick]
        states = states @ gate.T
        accumulated = gate @ accumulated
        _inject_pauli_noise(states, paulis, noise_p, rng)
    # exact inverse of the accumulated unitary: right-multiplying the row
    # states by conj(M) applies M's adjoint
    states = states @ accumulated.conj()
    _inject_pauli_noise(states, paulis, noise_p, rng)
    survived = np.abs(states[:, 0]) ** 2 > 0.5
    return float(survived.mean())


def rb_experiment(
    lengths=None,
    repetitions=100,
    shots=500,
    noise_p=0.0,
    seed=0,
    *,
    qubits=1,
):
    """Randomized benchmarking: random Clifford sequences plus exact inverse.

    For each sequence length, ``repetitions`` random sequences are simulated
    with ``shots`` noise trajectories each; survival is the frequency of
    returning to the all-zeros state.  Single-qubit sequences draw uniformly
    from the 24-element Clifford group; the two-qubit mode samples group
    generators and inverts via the adjoint of the accumulated product.
    """
    if lengths is None:
        lengths = DEFAULT_RB_LENGTHS
    lengths = [int(m) for m in lengths]
    if not lengths:
        raise ValueError("lengths must be nonempty")
    if any(m < 1 for m in lengths):
        raise ValueError("sequence lengths must be >= 1")
    if any(b <= a for a, b in zip(lengths, lengths[1:])):
        raise ValueError("sequence lengths must be strictly increasing")
    if not 0.0 <= noise_p < 1.0:
        raise ValueError(f"noise_p must lie in [0, 1), got {noise_p}")
    if repetitions < 1:
        raise ValueError("repetitions must be positive")
    if shots < 1:
        raise ValueError("shots must be positive")
    if seed < 0:
        raise ValueError("seed must be nonnegative")
    if qubits == 1:
        gates = clifford_group_1q()
        paulis = _PAULIS_1Q
    elif qubits == 2:
        gates = _two_qubit_generators()
        paulis = _two_qubit_paulis()
    else:
        raise ValueError(f"qubits must be 1 or 2, got {qubits}")
    dim = 2**qubits

    survival = []
    for length_index, length in enumerate(lengths):
        total = 0.0
        for rep in range(repetitions):
            rng = np.random.default_rng([seed, length_index, rep])
            total += _sequence_survival(
                gates, paulis, length, shots, noise_p, rng, dim
            )
        survival.append(total / repetitions)

    try:
        fit_A, fit_p, fit_B = fit_decay(
            lengths, survival, asymptote_floor=1.0 / dim
        )
        fit_converged = True
    except ValueError as exc:
        logger.warning("decay fit unavailable (%s); raw survival kept", exc)
        fit_A, fit_p, fit_B = 0.0, 1.0, float(np.mean(survival))
        fit_converged = False

    return RBResult(
        lengths=tuple(lengths),
        survival=tuple(survival),
        fit_A=fit_A,
        fit_p=fit_p,
        fit_B=fit_B,
        fidelity=average_fidelity(fit_p, dim),
        error_per_clifford=error_per_clifford(fit_p),
        shots=shots,
        repetitions=repetitions,
        fit_converged=fit_converged,
    )


def _decay_sse(theta, m, y):
    A, p, B = theta
    return float(np.sum((A * p**m + B - y) ** 2))


def fit_decay(lengths, survival, *, asymptote_floor=0.5):
    """Least-squares fit of survival data to A*p**m + B.

    Initialization uses the minimum survival (floored at ``asymptote_floor``,
    the fully mixed value 1/d) for B, the first-length excess for A, and a
    log-linear regression of the positive residuals for p; the estimate is
    refined by damped Gauss-Newton steps until the relative parameter change
    drops below 1e-9.  p is clamped to (0, 1].
    """
    m = np.asarray(lengths, dtype=float)
    y = np.asarray(survival, dtype=float)
    if m.ndim != 1 or y.shape != m.shape:
        raise ValueError("lengths and survival must be matching 1-d sequences")
    if not (np.isfinite(m).all() and np.isfinite(y).all()):
        raise ValueError("lengths and survival must be finite")
    if np.unique(m).size < 3:
        raise ValueError("decay fitting needs at least three distinct lengths")

    order = np.argsort(m)
    if float(np.ptp(y)) < 1e-12:
        return 0.0, 1.0, float(y.mean())
    if np.all(np.diff(y[order]) >= 0):
        logger.warning(
            "survival data are non-decreasing in sequence length; "
            "returning a best-effort decay fit"
        )

    B0 = max(float(y.min()), float(asymptote_floor))
    A0 = float(y[order[0]] - B0)
    if abs(A0) < 1e-6:
        A0 = float(np.ptp(y))
    residual = y - B0
    positive = residual > 1e-12
    if positive.sum() >= 2:
        slope = np.polyfit(m[positive], np.log(residual[positive]), 1)[0]
        p0 = float(np.clip(np.exp(slope), 1e-6, 1.0))
    else:
        p0 = 0.9

    theta = np.array([A0, p0, B0], dtype=float)
    sse = _decay_sse(theta, m, y)
    damping = 1e-3
    for _ in range(500):
        A, p, B = theta
        pm = p**m
        resid = A * pm + B - y
        jac = np.column_stack([pm, A * m * p ** (m - 1), np.ones_like(m)])
        gradient = jac.T @ resid
        hessian = jac.T @ jac
        delta = None
        for _ in range(50):
            try:
                step = np.linalg.solve(
                    hessian + damping * np.eye(3), -gradient
                )
            except np.linalg.LinAlgError:
                damping *= 10.0
                continue
            candidate = theta + step
            candidate[1] = float(np.clip(candidate[1], 1e-12, 1.0))
            candidate_sse = _decay_sse(candidate, m, y)
            if candidate_sse <= sse + 1e-18:
                delta = candidate - theta
                theta = candidate
                sse = candidate_sse
                damping = max(damping / 10.0, 1e-12)
                break
            damping *= 10.0
        if delta is None:
            break
        if np.linalg.norm(delta) < 1e-9 * max(1.0, np.linalg.norm(theta)):
            break

    A, p, B = (float(v) for v in theta)
    if not all(math.isfinite(v) for v in (A, p, B)):  # pragma: no cover
        logger.warning("decay refinement diverged; returning the initial guess")
        A, p, B = A0, p0, B0
    return A, float(np.clip(p, 1e-12, 1.0)), B


def average_fidelity(p, hilbert_dim):
    """Average gate fidelity ((d - 1) * p + 1) / d for a d-level system."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    d = int(hilbert_dim)
    if d < 2 or d & (d - 1):
        raise ValueError(f"hilbert_dim must be a power of two >= 2, got {hilbert_dim}")
    return ((d - 1) * p + 1) / d


def error_per_clifford(p):
    """Error rate (1 - p) / 2 of a two-level depolarizing decay."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    return (1.0 - p) / 2.0


def rb_score(result: RBResult) -> float:
    """Mean survival probability over the configured length grid."""
    return float(np.mean(result.survival))


def sweep(
    dataset: Dataset,
    config: PipelineConfig,
    knob,
    values,
    noise_p=0.02,
    seeds=None,
    *,
    rb_lengths=None,
    rb_repetitions=100,
    rb_shots=500,
):
    """Vary one circuit knob and report accuracy/entanglement/score rows.

    Per value: pipeline accuracy is averaged over ``seeds`` (the knob never
    enters the classical propagation, so accuracy columns stay constant),
    entanglement is the mean half-cut entropy of the parameterized circuit
    over the same seeds, and rb_score is the mean survival of one
    benchmarking run under ``noise_p``, shared across rows.
    """
    if knob not in _SWEEP_KNOBS:
        raise ValueError(f"knob must be one of {sorted(_SWEEP_KNOBS)}, got {knob!r}")
    values = [int(v) for v in values]
    if not values:
        raise ValueError("values must be nonempty")
    if seeds is None:
        seeds = tuple(range(10))
    seeds = [int(s) for s in seeds]
    if not seeds:
        raise ValueError("seeds must be nonempty")

    benchmark = rb_experiment(
        lengths=rb_lengths,
        repetitions=rb_repetitions,
        shots=rb_shots,
        noise_p=noise_p,
        seed=config.seed,
    )
    score = rb_score(benchmark)

    rows = []
    for value in values:
        varied = replace(config, **{_SWEEP_KNOBS[knob]: value})
        accuracies = []
        entropies = []
        for seed in seeds:
            result = ipqssl_pipeline(dataset, replace(varied, seed=seed))
            accuracies.append(result.aggregate_mean["accuracy"])
            state = run_circuit(
                build_pqc(varied.qubit_count, varied.layer_count, seed)
            )
            entropies.append(
                entanglement_entropy(state, varied.qubit_count // 2)
            )
        rows.append(
            SweepRow(
                knob=knob,
                value=value,
                entanglement=float(np.mean(entropies)),
                accuracy=float(np.mean(accuracies)),
                rb_score=score,
            )
        )
    return rows


def write_sweep_csv(rows, path):
    """Write sweep rows as CSV with a knob,value,entanglement,accuracy,rb_score header."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["knob", "value", "entanglement", "accuracy", "rb_score"])
        for row in rows:
            writer.writerow(
                [row.knob, row.value, row.entanglement, row.accuracy, row.rb_score]
            )
