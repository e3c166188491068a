"""Dense statevector simulation utilities.

Provides amplitude encoding of classical vectors, a deterministic QR
factorization used to embed graph matrices as orthogonal operators,
parameterized entangling-layer circuits, partial traces, and entanglement
entropy. Qubit 0 is the most significant bit of the computational-basis
index, so ``amplitudes.reshape((2,) * q)`` puts qubit j on axis j.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)

__all__ = [
    "QUBIT_CAP",
    "CircuitSpec",
    "DensityMatrix",
    "StateVector",
    "amplitude_encode",
    "apply_embedded_unitary",
    "build_pqc",
    "entanglement_entropy",
    "prepare_node_state",
    "qr_embed",
    "reduced_density_matrix",
    "run_circuit",
    "state_fidelity",
]

QUBIT_CAP = 14

_NORM_TOL = 1e-10


@dataclass
class StateVector:
    """Unit-norm complex amplitude vector over ``2**qubit_count`` basis states."""

    amplitudes: np.ndarray
    qubit_count: int

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if not 1 <= self.qubit_count <= QUBIT_CAP:
            raise ValueError(f"qubit_count must be in [1, {QUBIT_CAP}], got {self.qubit_count}")
        if self.amplitudes.shape != (2 ** self.qubit_count,):
            raise ValueError(
                f"expected {2 ** self.qubit_count} amplitudes, got {self.amplitudes.shape}"
            )
        norm = np.linalg.norm(self.amplitudes)
        if abs(norm - 1.0) > _NORM_TOL:
            raise ValueError(f"state norm {norm!r} is not 1")


@dataclass
class CircuitSpec:
    """Layered rotation + CNOT-ring circuit description."""

    qubit_count: int
    layer_count: int
    thetas: np.ndarray          # (layers, qubits, 3) in radians
    entangler: tuple            # ((control, target), ...) pairs
    seed: int

    def __post_init__(self):
        self.thetas = np.asarray(self.thetas, dtype=float)
        if self.thetas.shape != (self.layer_count, self.qubit_count, 3):
            raise ValueError("thetas shape inconsistent with layer/qubit counts")
        if not np.isfinite(self.thetas).all():
            raise ValueError("thetas must be finite")


@dataclass
class DensityMatrix:
    """Hermitian, unit-trace, PSD matrix for a subsystem."""

    entries: np.ndarray

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=complex)
        m = self.entries
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("density matrix must be square")
        if np.linalg.norm(m - m.conj().T) > 1e-10:
            raise ValueError("density matrix must be Hermitian")
        if abs(np.trace(m).real - 1.0) > 1e-10:
            raise ValueError("density matrix trace must be 1")
        if np.linalg.eigvalsh(m).min() < -1e-10:
            raise ValueError("density matrix must be positive semidefinite")


def amplitude_encode(v) -> StateVector:
    """Encode a classical vector as state amplitudes, zero-padded to 2**q."""
    v = np.asarray(v, dtype=complex).ravel()
    if v.size < 1:
        raise ValueError("cannot encode an empty vector")
    norm = np.linalg.norm(v)
    if norm == 0:
        raise ValueError("cannot encode the zero vector")
    q = max(1, int(np.ceil(np.log2(v.size))))
    padded = np.zeros(2 ** q, dtype=complex)
    padded[: v.size] = v / norm
    return StateVector(padded, q)


def qr_embed(A):
    """Householder QR with the diagonal of R forced nonnegative.

    The sign convention makes the factorization deterministic: repeated
    calls on equal inputs return bit-identical factors.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("expected a square matrix")
    if not np.isfinite(A).all():
        raise ValueError("matrix must be finite")
    Q, R = np.linalg.qr(A)
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    Q = Q * signs[np.newaxis, :]
    R = R * signs[:, np.newaxis]
    diag = np.abs(np.diag(R))
    tol = max(A.shape) * np.finfo(float).eps * (diag.max() if diag.size else 0.0)
    rank = int((diag > tol).sum())
    if rank < A.shape[0]:
        logger.info("qr_embed input is rank deficient: effective rank %d of %d", rank, A.shape[0])
    return Q, R


def prepare_node_state(Qfactor) -> StateVector:
    """State given by the first column of an orthogonal factor."""
    Qfactor = np.asarray(Qfactor, dtype=float)
    m = Qfactor.shape[0]
    if np.linalg.norm(Qfactor.T @ Qfactor - np.eye(m)) > 1e-8:
        raise ValueError("factor is not orthogonal")
    return amplitude_encode(Qfactor[:, 0])


def apply_embedded_unitary(state: StateVector, Qfactor) -> StateVector:
    """Apply ``Qfactor ⊕ I`` to the amplitude vector (identity on the padded tail)."""
    Qfactor = np.asarray(Qfactor, dtype=float)
    m = Qfactor.shape[0]
    dim = 2 ** state.qubit_count
    if m > dim:
        raise ValueError(f"embedded operator of size {m} exceeds state dimension {dim}")
    out = state.amplitudes.copy()
    out[:m] = Qfactor @ out[:m]
    return StateVector(out, state.qubit_count)


def build_pqc(qubit_count: int, layer_count: int, seed: int) -> CircuitSpec:
    """Sample a layered circuit: three Euler angles per qubit per layer, CNOT ring."""
    if not 1 <= qubit_count <= QUBIT_CAP:
        raise ValueError(f"qubit_count must be in [1, {QUBIT_CAP}]")
    if layer_count < 1:
        raise ValueError("layer_count must be >= 1")
    rng = np.random.default_rng(seed)
    thetas = rng.uniform(0.0, 2 * np.pi, size=(layer_count, qubit_count, 3))
    if qubit_count == 1:
        entangler = ()
    else:
        entangler = tuple((i, (i + 1) % qubit_count) for i in range(qubit_count))
    return CircuitSpec(qubit_count, layer_count, thetas, entangler, seed)


def _rz(theta):
    return np.array([[np.exp(-0.5j * theta), 0], [0, np.exp(0.5j * theta)]])


def _ry(theta):
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _apply_single(tensor, target, U):
    """Apply a 2x2 gate on the given axis of the (2,)*q amplitude tensor."""
    moved = np.moveaxis(tensor, target, 0)
    shape = moved.shape
    out = (U @ moved.reshape(2, -1)).reshape(shape)
    return np.moveaxis(out, 0, target)


def _apply_cnot(tensor, control, target):
    out = tensor.copy()
    ctrl_one = [slice(None)] * tensor.ndim
    ctrl_one[control] = 1
    block = out[tuple(ctrl_one)]
    out[tuple(ctrl_one)] = np.flip(block, axis=target - (1 if target > control else 0))
    return out


def run_circuit(spec: CircuitSpec, initial: StateVector | None = None) -> StateVector:
    """Run the layered circuit on ``initial`` (default all-zeros state)."""
    q = spec.qubit_count
    if initial is None:
        amps = np.zeros(2 ** q, dtype=complex)
        amps[0] = 1.0
    else:
        if initial.qubit_count != q:
            raise ValueError("initial state qubit count does not match circuit")
        amps = initial.amplitudes.copy()
    tensor = amps.reshape((2,) * q)
    for layer in range(spec.layer_count):
        for j in range(q):
            t1, t2, t3 = spec.thetas[layer, j]
            tensor = _apply_single(tensor, j, _rz(t1) @ _ry(t2) @ _rz(t3))
        for control, target in spec.entangler:
            tensor = _apply_cnot(tensor, control, target)
    out = tensor.reshape(-1)
    norm = np.linalg.norm(out)
    if abs(norm - 1.0) > 1e-9:
        raise RuntimeError(f"norm drifted to {norm!r} during circuit execution")
    return StateVector(out / norm, q)


def _keep_indices(state: StateVector, keep):
    if isinstance(keep, (int, np.integer)):
        keep = list(range(int(keep)))
    keep = sorted(int(k) for k in keep)
    q = state.qubit_count
    if any(k < 0 or k >= q for k in keep):
        raise ValueError("keep indices out of range")
    if len(set(keep)) != len(keep):
        raise ValueError("keep indices must be distinct")
    if len(keep) == 0 or len(keep) == q:
        raise ValueError("keep must be a nonempty proper subset of the qubits")
    return keep


def reduced_density_matrix(state: StateVector, keep) -> DensityMatrix:
    """Partial trace over the complement of ``keep``."""
    keep = _keep_indices(state, keep)
    q = state.qubit_count
    drop = [j for j in range(q) if j not in keep]
    tensor = state.amplitudes.reshape((2,) * q)
    ordered = np.transpose(tensor, axes=keep + drop)
    mat = ordered.reshape(2 ** len(keep), 2 ** len(drop))
    return DensityMatrix(mat @ mat.conj().T)


def entanglement_entropy(state: StateVector, cut) -> float:
    """Von Neumann entropy (in bits) of the reduced state on one side of the cut.

    ``cut`` is either an integer (the first ``cut`` qubits form side A) or an
    iterable of qubit indices.
    """
    rho = reduced_density_matrix(state, cut).entries
    lam = np.linalg.eigvalsh(rho)
    lam = np.clip(lam.real, 0.0, 1.0)
    nz = lam[lam > 0]
    return float(-(nz * np.log2(nz)).sum())


def state_fidelity(a: StateVector, b: StateVector) -> float:
    """Squared overlap |<a|b>|^2."""
    if a.qubit_count != b.qubit_count:
        raise ValueError("states have different qubit counts")
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)
