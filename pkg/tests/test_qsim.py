import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qgssl.qsim import (
    QUBIT_CAP,
    CircuitSpec,
    DensityMatrix,
    StateVector,
    amplitude_encode,
    apply_embedded_unitary,
    build_pqc,
    entanglement_entropy,
    prepare_node_state,
    qr_embed,
    reduced_density_matrix,
    run_circuit,
    state_fidelity,
)


# ---------------------------------------------------------------- oracles

def gram_schmidt_qr(A):
    """Modified Gram-Schmidt with a nonnegative-R-diagonal convention."""
    A = np.array(A, dtype=float)
    m = A.shape[0]
    Q = np.zeros_like(A)
    R = np.zeros_like(A)
    V = A.copy()
    for j in range(m):
        R[j, j] = np.linalg.norm(V[:, j])
        if R[j, j] > 1e-300:
            Q[:, j] = V[:, j] / R[j, j]
        else:
            # degenerate column: extend with an arbitrary orthonormal direction
            w = np.random.default_rng(j).normal(size=m)
            for i in range(j):
                w -= (Q[:, i] @ w) * Q[:, i]
            Q[:, j] = w / np.linalg.norm(w)
        for k in range(j + 1, m):
            R[j, k] = Q[:, j] @ V[:, k]
            V[:, k] -= R[j, k] * Q[:, j]
    return Q, R


def rz(theta):
    return np.array([[np.exp(-0.5j * theta), 0], [0, np.exp(0.5j * theta)]])


def ry(theta):
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def dense_single(q, target, U):
    """Embed a 1-qubit gate at `target` (qubit 0 = most significant bit)."""
    out = np.array([[1.0 + 0j]])
    for j in range(q):
        out = np.kron(out, U if j == target else np.eye(2))
    return out


def dense_cnot(q, control, target):
    dim = 2 ** q
    M = np.zeros((dim, dim), dtype=complex)
    for b in range(dim):
        cbit = (b >> (q - 1 - control)) & 1
        if cbit:
            M[b ^ (1 << (q - 1 - target)), b] = 1.0
        else:
            M[b, b] = 1.0
    return M


def dense_circuit_unitary(spec):
    q = spec.qubit_count
    U = np.eye(2 ** q, dtype=complex)
    for layer in range(spec.layer_count):
        for j in range(q):
            t1, t2, t3 = spec.thetas[layer, j]
            U = dense_single(q, j, rz(t1) @ ry(t2) @ rz(t3)) @ U
        for control, target in spec.entangler:
            U = dense_cnot(q, control, target) @ U
    return U


def brute_force_rdm2(amps, q, keep):
    """Partial trace via reshape-free index iteration (independent check)."""
    keep = sorted(keep)
    drop = [j for j in range(q) if j not in keep]
    a, b = len(keep), len(drop)
    rho = np.zeros((2 ** a, 2 ** a), dtype=complex)
    for bi in range(2 ** q):
        for bj in range(2 ** q):
            same = all(((bi >> (q - 1 - d)) & 1) == ((bj >> (q - 1 - d)) & 1) for d in drop)
            if not same:
                continue
            i = j = 0
            for pos, qu in enumerate(keep):
                i = (i << 1) | ((bi >> (q - 1 - qu)) & 1)
                j = (j << 1) | ((bj >> (q - 1 - qu)) & 1)
            rho[i, j] += amps[bi] * np.conj(amps[bj])
    return rho


def random_state(q, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=2 ** q) + 1j * rng.normal(size=2 ** q)
    return StateVector(v / np.linalg.norm(v), q)


# ---------------------------------------------------------------- StateVector

def test_statevector_validates_norm():
    with pytest.raises(ValueError):
        StateVector(np.array([1.0, 1.0]), 1)


def test_statevector_validates_length():
    with pytest.raises(ValueError):
        StateVector(np.array([1.0, 0.0, 0.0]), 2)


def test_statevector_cap():
    with pytest.raises(ValueError):
        StateVector(np.zeros(2 ** (QUBIT_CAP + 1)), QUBIT_CAP + 1)


# ---------------------------------------------------------------- amplitude_encode

def test_encode_basis_state():
    s = amplitude_encode([1, 0, 0, 0])
    assert s.qubit_count == 2
    np.testing.assert_allclose(s.amplitudes, [1, 0, 0, 0], atol=0)


def test_encode_normalizes():
    s = amplitude_encode([1, 1])
    np.testing.assert_allclose(s.amplitudes, [1 / np.sqrt(2)] * 2, rtol=1e-15)


def test_encode_pads_345():
    s = amplitude_encode([3, 0, 4])
    assert s.qubit_count == 2
    np.testing.assert_allclose(s.amplitudes, [0.6, 0, 0.8, 0], rtol=1e-15)


def test_encode_scalar_vector_pads_to_one_qubit():
    s = amplitude_encode([5.0])
    assert s.qubit_count == 1
    np.testing.assert_allclose(s.amplitudes, [1, 0], atol=0)


def test_encode_zero_raises():
    with pytest.raises(ValueError):
        amplitude_encode([0.0, 0.0])


@given(st.integers(2, 40), st.integers(0, 10 ** 6))
@settings(max_examples=30, deadline=None)
def test_encode_unit_norm(n, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=n)
    if np.linalg.norm(v) == 0:
        return
    s = amplitude_encode(v)
    assert abs(np.linalg.norm(s.amplitudes) - 1) < 1e-12
    assert len(s.amplitudes) == 2 ** s.qubit_count


# ---------------------------------------------------------------- qr_embed

def test_qr_identity():
    Q, R = qr_embed(np.eye(4))
    np.testing.assert_allclose(Q, np.eye(4), atol=1e-12)
    np.testing.assert_allclose(R, np.eye(4), atol=1e-12)


def test_qr_sign_convention_forced():
    Q, R = qr_embed(np.diag([-2.0, 3.0]))
    np.testing.assert_allclose(Q, np.diag([-1.0, 1.0]), atol=1e-14)
    np.testing.assert_allclose(R, np.diag([2.0, 3.0]), atol=1e-14)


def test_qr_diag_nonnegative_and_reconstructs():
    rng = np.random.default_rng(7)
    for m in (1, 2, 3, 5, 8, 13, 32):
        A = rng.normal(size=(m, m))
        Q, R = qr_embed(A)
        assert np.diag(R).min() >= 0
        assert np.linalg.norm(Q.T @ Q - np.eye(m)) < 1e-10
        assert np.linalg.norm(Q @ R - A) < 1e-8 * np.linalg.norm(A)
        assert np.allclose(np.triu(R), R)


def test_qr_matches_gram_schmidt_oracle():
    rng = np.random.default_rng(11)
    for m in (2, 3, 4, 6, 8):
        A = rng.normal(size=(m, m)) + 0.5 * np.eye(m)
        Q, R = qr_embed(A)
        Qo, Ro = gram_schmidt_qr(A)
        np.testing.assert_allclose(Q, Qo, atol=1e-8)
        np.testing.assert_allclose(R, Ro, atol=1e-8)


def test_qr_bit_identical_repeats():
    rng = np.random.default_rng(3)
    A = rng.normal(size=(16, 16))
    Q1, R1 = qr_embed(A)
    Q2, R2 = qr_embed(A.copy())
    assert Q1.tobytes() == Q2.tobytes()
    assert R1.tobytes() == R2.tobytes()


def test_qr_rank_deficient_still_orthogonal():
    A = np.ones((5, 5))
    Q, R = qr_embed(A)
    assert np.linalg.norm(Q.T @ Q - np.eye(5)) < 1e-10
    assert np.linalg.norm(Q @ R - A) < 1e-8 * np.linalg.norm(A)


# ---------------------------------------------------------------- prepare/apply

def test_prepare_node_state_identity():
    s = prepare_node_state(np.eye(4))
    np.testing.assert_allclose(s.amplitudes, [1, 0, 0, 0], atol=0)


def test_prepare_node_state_rotation():
    th = np.pi / 4
    Q = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    s = prepare_node_state(Q)
    np.testing.assert_allclose(s.amplitudes, [np.cos(th), np.sin(th)], rtol=1e-15)


def test_prepare_node_state_qr_column():
    rng = np.random.default_rng(5)
    Q, _ = qr_embed(rng.normal(size=(8, 8)))
    s = prepare_node_state(Q)
    assert s.qubit_count == 3
    assert abs(np.linalg.norm(s.amplitudes) - 1) < 1e-12
    np.testing.assert_allclose(s.amplitudes, Q[:, 0], atol=1e-12)


def test_apply_embedded_identity():
    s = random_state(2, 1)
    out = apply_embedded_unitary(s, np.eye(3))
    np.testing.assert_allclose(out.amplitudes, s.amplitudes, atol=0)


def test_apply_embedded_reflection():
    s = StateVector(np.array([1, 0, 0, 0], dtype=complex), 2)
    refl = np.array([[0.0, 1.0], [1.0, 0.0]])
    out = apply_embedded_unitary(s, refl)
    np.testing.assert_allclose(out.amplitudes, [0, 1, 0, 0], atol=0)


def test_apply_embedded_norm_preserved():
    rng = np.random.default_rng(9)
    Q, _ = qr_embed(rng.normal(size=(8, 8)))
    s = random_state(3, 2)
    out = apply_embedded_unitary(s, Q)
    assert abs(np.linalg.norm(out.amplitudes) - 1) < 1e-12


def test_apply_embedded_too_large_raises():
    s = random_state(1, 3)
    with pytest.raises(ValueError):
        apply_embedded_unitary(s, np.eye(3))


# ---------------------------------------------------------------- build_pqc / run_circuit

def test_pqc_deterministic():
    a = build_pqc(4, 3, seed=42)
    b = build_pqc(4, 3, seed=42)
    assert a.thetas.tobytes() == b.thetas.tobytes()
    assert a.entangler == b.entangler


def test_pqc_single_qubit_no_entanglers():
    spec = build_pqc(1, 5, seed=0)
    assert spec.entangler == ()


def test_pqc_angle_count():
    spec = build_pqc(4, 10, seed=1)
    assert spec.thetas.shape == (10, 4, 3)
    assert spec.thetas.size == 120
    assert ((spec.thetas >= 0) & (spec.thetas < 2 * np.pi)).all()


def test_pqc_ring_topology():
    spec = build_pqc(4, 1, seed=0)
    assert spec.entangler == ((0, 1), (1, 2), (2, 3), (3, 0))


def test_run_circuit_zero_thetas_fixed_point():
    spec = build_pqc(2, 3, seed=0)
    spec = CircuitSpec(2, 3, np.zeros((3, 2, 3)), spec.entangler, 0)
    out = run_circuit(spec)
    np.testing.assert_allclose(out.amplitudes, [1, 0, 0, 0], atol=1e-12)


def test_run_circuit_ry_pi_flip():
    spec = CircuitSpec(1, 1, np.array([[[0.0, np.pi, 0.0]]]), (), 0)
    out = run_circuit(spec)
    np.testing.assert_allclose(np.abs(out.amplitudes), [0, 1], atol=1e-12)


def test_run_circuit_matches_dense_oracle():
    for q, L, seed in [(1, 3, 0), (2, 2, 1), (3, 2, 7), (4, 3, 11)]:
        spec = build_pqc(q, L, seed=seed)
        psi = run_circuit(spec)
        U = dense_circuit_unitary(spec)
        expected = U[:, 0]
        np.testing.assert_allclose(psi.amplitudes, expected, atol=1e-10)


def test_run_circuit_custom_initial():
    spec = build_pqc(2, 2, seed=5)
    init = random_state(2, 8)
    psi = run_circuit(spec, init)
    U = dense_circuit_unitary(spec)
    np.testing.assert_allclose(psi.amplitudes, U @ init.amplitudes, atol=1e-10)


def test_run_circuit_norm_drift_deep():
    spec = build_pqc(12, 50, seed=2)
    psi = run_circuit(spec)
    assert abs(np.linalg.norm(psi.amplitudes) - 1) < 1e-8


def test_run_circuit_qubit_mismatch_raises():
    spec = build_pqc(2, 1, seed=0)
    with pytest.raises(ValueError):
        run_circuit(spec, random_state(3, 1))


# ---------------------------------------------------------------- partial trace / entropy

def test_rdm_product_state():
    plus = np.array([1, 1]) / np.sqrt(2)
    amps = np.kron([1, 0], plus).astype(complex)
    rho = reduced_density_matrix(StateVector(amps, 2), keep=[1])
    np.testing.assert_allclose(rho.entries, np.outer(plus, plus), atol=1e-12)


def test_rdm_bell_maximally_mixed():
    bell = np.array([1, 0, 0, 1]) / np.sqrt(2)
    rho = reduced_density_matrix(StateVector(bell.astype(complex), 2), keep=[0])
    np.testing.assert_allclose(rho.entries, np.eye(2) / 2, atol=1e-12)


def test_rdm_matches_brute_force():
    s = random_state(3, 13)
    for keep in ([0], [1], [2], [0, 2], [1, 2], [0, 1]):
        rho = reduced_density_matrix(s, keep=keep)
        oracle = brute_force_rdm2(s.amplitudes, 3, keep)
        np.testing.assert_allclose(rho.entries, oracle, atol=1e-12)


def test_rdm_invariants():
    s = random_state(4, 17)
    rho = reduced_density_matrix(s, keep=[0, 3]).entries
    assert np.linalg.norm(rho - rho.conj().T) < 1e-10
    assert abs(np.trace(rho).real - 1) < 1e-10
    assert np.linalg.eigvalsh(rho).min() > -1e-10


def test_rdm_empty_or_full_keep_raises():
    s = random_state(2, 1)
    with pytest.raises(ValueError):
        reduced_density_matrix(s, keep=[])
    with pytest.raises(ValueError):
        reduced_density_matrix(s, keep=[0, 1])


def test_entropy_product_state_zero():
    amps = np.kron([1, 0], [1 / np.sqrt(2), 1j / np.sqrt(2)])
    s = StateVector(amps, 2)
    assert abs(entanglement_entropy(s, 1)) < 1e-10


def test_entropy_bell_one_bit():
    bell = StateVector(np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2), 2)
    assert abs(entanglement_entropy(bell, 1) - 1.0) < 1e-9


def test_entropy_ghz4_two_two_cut():
    amps = np.zeros(16, dtype=complex)
    amps[0] = amps[15] = 1 / np.sqrt(2)
    ghz = StateVector(amps, 4)
    assert abs(entanglement_entropy(ghz, 2) - 1.0) < 1e-9


def test_entropy_symmetric_under_side_swap():
    for q, seed in [(3, 1), (4, 2), (5, 3)]:
        s = random_state(q, seed)
        for a in range(1, q):
            sa = entanglement_entropy(s, list(range(a)))
            sb = entanglement_entropy(s, list(range(a, q)))
            assert abs(sa - sb) < 1e-10


def test_entropy_int_cut_equals_prefix_set():
    s = random_state(4, 23)
    assert entanglement_entropy(s, 2) == entanglement_entropy(s, [0, 1])


def test_entropy_bounds_random_pqc():
    for q in (2, 3, 4, 5):
        spec = build_pqc(q, 4, seed=q)
        psi = run_circuit(spec)
        a = q // 2
        S = entanglement_entropy(psi, a)
        assert -1e-12 <= S <= min(a, q - a) + 1e-9


# ---------------------------------------------------------------- fidelity

def test_fidelity_self():
    s = random_state(3, 1)
    assert abs(state_fidelity(s, s) - 1.0) < 1e-12


def test_fidelity_orthogonal():
    a = StateVector(np.array([1, 0], dtype=complex), 1)
    b = StateVector(np.array([0, 1], dtype=complex), 1)
    assert state_fidelity(a, b) == 0.0


def test_fidelity_half():
    a = StateVector(np.array([1, 0], dtype=complex), 1)
    b = StateVector(np.array([1, 1], dtype=complex) / np.sqrt(2), 1)
    assert abs(state_fidelity(a, b) - 0.5) < 1e-12


def test_fidelity_mismatch_raises():
    with pytest.raises(ValueError):
        state_fidelity(random_state(1, 1), random_state(2, 1))


@given(st.integers(1, 4), st.integers(0, 10 ** 6), st.integers(0, 10 ** 6))
@settings(max_examples=25, deadline=None)
def test_fidelity_symmetric_bounded(q, s1, s2):
    a, b = random_state(q, s1), random_state(q, s2)
    f_ab = state_fidelity(a, b)
    f_ba = state_fidelity(b, a)
    assert abs(f_ab - f_ba) < 1e-12
    assert -1e-12 <= f_ab <= 1 + 1e-12
