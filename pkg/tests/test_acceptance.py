"""Acceptance gate: one test per shipped guarantee, one PASS/FAIL line each.

Every test prints ``[acceptance] <criterion>: PASS|FAIL`` (visible with
``pytest -s``, and in the failure report otherwise) and then asserts, so
``pytest -v tests/test_acceptance.py`` yields exactly one line per criterion.
"""

import json
import time
from pathlib import Path

import numpy as np
import pytest

from qgssl.benchmarking import average_fidelity, error_per_clifford, rb_experiment
from qgssl.cli import main
from qgssl.graph import Dataset, SimilarityGraph
from qgssl.harness import ExperimentConfig, run_experiment
from qgssl.metrics import ks_statistic, roc_auc_ovr, roc_curve_points
from qgssl.propagation import PropagationParams, build_source_matrix, improved_poisson_learning
from qgssl.qsim import StateVector, build_pqc, entanglement_entropy, qr_embed, run_circuit


def _verdict(criterion, ok, detail=""):
    line = f"[acceptance] {criterion}: {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f" — {detail}"
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def default_runs():
    """Share default-config experiment runs between criteria."""
    cache = {}

    def get(dataset, method="IPQSSL", **overrides):
        key = (dataset, method, tuple(sorted(overrides.items())))
        if key not in cache:
            cache[key] = run_experiment(
                ExperimentConfig(dataset=dataset, method=method, **overrides)
            )
        return cache[key]

    return get


# -------------------------------------------------------------- criterion 1

def test_criterion_01_fidelity_and_error_formulas():
    start = time.perf_counter()
    fidelity = average_fidelity(0.98, 2)
    error = error_per_clifford(0.98)
    elapsed = time.perf_counter() - start
    ok = (
        abs(fidelity - 0.99) <= 1e-15
        and abs(error - 0.01) <= 1e-15
        and elapsed < 1e-3
    )
    _verdict(
        "criterion 1 fidelity/error formulas",
        ok,
        f"average_fidelity(0.98,2)={fidelity!r}, error_per_clifford(0.98)={error!r}, "
        f"{elapsed * 1e6:.0f}us",
    )


# -------------------------------------------------------------- criterion 2

def test_criterion_02_benchmarking_decay_recovery():
    start = time.perf_counter()
    noiseless = rb_experiment(noise_p=0.0, seed=0, repetitions=20, shots=50)
    noiseless_exact = all(s == 1.0 for s in noiseless.survival)
    p_true = 1.0 - 4.0 * 0.01 / 3.0  # uniform Pauli insertions at q=0.01
    deviations = [
        abs(rb_experiment(noise_p=0.01, seed=seed).fit_p - p_true)
        for seed in range(5)
    ]
    elapsed = time.perf_counter() - start
    ok = noiseless_exact and max(deviations) <= 0.005 and elapsed < 30.0
    _verdict(
        "criterion 2 decay-parameter recovery",
        ok,
        f"max |fit_p - {p_true:.6f}| = {max(deviations):.5f} (tol 0.005, 5 seeds), "
        f"noiseless survival exact = {noiseless_exact}, {elapsed:.1f}s",
    )


# -------------------------------------------------------------- criterion 3

def test_criterion_03_entropy_anchors():
    bell = StateVector(np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2), 2)
    bell_err = abs(entanglement_entropy(bell, 1) - 1.0)

    rng = np.random.default_rng(5)
    product_errs = []
    for _ in range(5):
        parts = [rng.normal(size=2) + 1j * rng.normal(size=2) for _ in range(3)]
        amps = parts[0]
        for part in parts[1:]:
            amps = np.kron(amps, part)
        state = StateVector(amps / np.linalg.norm(amps), 3)
        product_errs.extend(
            abs(entanglement_entropy(state, cut)) for cut in (1, 2)
        )

    ghz = np.zeros(16, dtype=complex)
    ghz[0] = ghz[-1] = 1 / np.sqrt(2)
    ghz_err = abs(entanglement_entropy(StateVector(ghz, 4), 2) - 1.0)

    bounded = True
    for qubits in (2, 4, 6):
        for seed in range(3):
            state = run_circuit(build_pqc(qubits, 10, seed))
            for cut in range(1, qubits):
                entropy = entanglement_entropy(state, cut)
                bounded &= -1e-12 <= entropy <= min(cut, qubits - cut) + 1e-9

    ok = (
        bell_err < 1e-9
        and max(product_errs) < 1e-10
        and ghz_err < 1e-9
        and bounded
    )
    _verdict(
        "criterion 3 entropy anchors",
        ok,
        f"|bell-1|={bell_err:.1e}, max|product|={max(product_errs):.1e}, "
        f"|ghz-1|={ghz_err:.1e}, circuit entropies within cut bounds = {bounded}",
    )


# -------------------------------------------------------------- criterion 4

def test_criterion_04_qr_embedding():
    rng = np.random.default_rng(42)
    worst_orth = 0.0
    worst_reconstruction = 0.0
    deterministic = True
    nonnegative = True
    for _ in range(50):
        n = int(rng.integers(2, 33))
        A = rng.normal(size=(n, n)) * rng.uniform(0.1, 10.0)
        Q, R = qr_embed(A)
        worst_orth = max(worst_orth, np.linalg.norm(Q.T @ Q - np.eye(n)))
        worst_reconstruction = max(
            worst_reconstruction,
            np.linalg.norm(Q @ R - A) / np.linalg.norm(A),
        )
        nonnegative &= bool((np.diag(R) >= 0).all())
        Q2, R2 = qr_embed(A.copy())
        deterministic &= bool((Q2 == Q).all() and (R2 == R).all())
    ok = (
        worst_orth < 1e-10
        and worst_reconstruction < 1e-8
        and deterministic
        and nonnegative
    )
    _verdict(
        "criterion 4 deterministic QR embedding",
        ok,
        f"50 matrices <=32x32: worst ||QtQ-I||={worst_orth:.1e} (tol 1e-10), "
        f"worst rel ||QR-A||={worst_reconstruction:.1e} (tol 1e-8), "
        f"bit-identical repeats={deterministic}, nonneg diag={nonnegative}",
    )


# -------------------------------------------------------------- criterion 5

def _random_propagation_problem(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(4, 11))
    W = rng.uniform(0.1, 1.0, size=(n, n))
    W = (W + W.T) / 2
    np.fill_diagonal(W, 0.0)
    k = int(rng.integers(2, min(4, n)))
    labels = rng.integers(0, k, size=n)
    labels[:k] = np.arange(k)  # every class appears
    mask = rng.random(n) < 0.6
    mask[:k] = True
    dataset = Dataset(
        features=np.arange(n, dtype=float)[:, None],
        labels=labels,
        labeled_mask=mask,
        class_count=k,
    )
    return SimilarityGraph.from_weights(W), dataset


def test_criterion_05_iteration_matches_direct_solve():
    params = PropagationParams()
    checked = 0
    seed = 0
    worst = 0.0
    while checked < 20:
        seed += 1
        graph, dataset = _random_propagation_problem(seed)
        n = graph.node_count
        M = (
            graph.P
            - params.alpha1 * graph.Qmat
            + params.alpha2 * np.eye(n)
        )
        if max(abs(np.linalg.eigvals(M))) >= 1.0 - 1e-9:
            continue
        U, _, _ = improved_poisson_learning(graph, dataset, params)
        src = build_source_matrix(dataset)
        direct = np.linalg.solve(
            np.eye(n) - M, params.alpha3 * (src.B.T / graph.D[:, None])
        )
        worst = max(worst, float(np.linalg.norm(U.U - direct)))
        checked += 1
    ok = worst < 1e-6
    _verdict(
        "criterion 5 fixed-point equivalence",
        ok,
        f"20 random graphs n<=10 with contraction radius < 1: "
        f"worst Frobenius gap {worst:.2e} (tol 1e-6)",
    )


# -------------------------------------------------------------- criterion 6

BANDS = {"iris": 0.90, "wine": 0.85, "heart": 0.70, "german": 0.65}


def test_criterion_06_dataset_accuracy_bands(default_runs):
    start = time.perf_counter()
    achieved = {
        name: default_runs(name).aggregate_mean["accuracy"] for name in BANDS
    }
    elapsed = time.perf_counter() - start
    ok = all(achieved[name] >= BANDS[name] for name in BANDS) and elapsed < 300
    detail = ", ".join(
        f"{name} {achieved[name]:.4f} (band >= {BANDS[name]:.2f})" for name in BANDS
    )
    _verdict(
        "criterion 6 dataset accuracy bands",
        ok,
        detail + f"; 30% labels, 10 seeds, defaults; {elapsed:.1f}s",
    )


# -------------------------------------------------------------- criterion 7

def test_criterion_07_beats_classical_propagation(default_runs):
    ok = True
    details = []
    for name in ("iris", "wine"):
        quantum = default_runs(name).aggregate_mean["accuracy"]
        classical = default_runs(name, "label_propagation").aggregate_mean["accuracy"]
        ok &= quantum >= classical
        details.append(f"{name}: {quantum:.4f} vs baseline {classical:.4f}")
    _verdict(
        "criterion 7 classical comparison direction",
        ok,
        "; ".join(details) + " (same 10 seeds)",
    )


# -------------------------------------------------------------- criterion 8

def test_criterion_08_sweep_shapes(default_runs):
    base = default_runs("iris")  # layer_count = 10
    layer_invariant = True
    for layers in (20, 30, 40, 50):
        varied = default_runs("iris", layer_count=layers)
        for seed in base.seeds:
            layer_invariant &= (
                varied.per_seed_metrics[seed].accuracy
                == base.per_seed_metrics[seed].accuracy
            )

    means = []
    for qubits in (4, 6, 8, 10, 12):
        entropies = [
            entanglement_entropy(run_circuit(build_pqc(qubits, 10, seed)), qubits // 2)
            for seed in range(10)
        ]
        means.append(float(np.mean(entropies)))
    steps_up = sum(
        1 for a, b in zip(means, means[1:]) if b >= a - 1e-12
    )
    ok = layer_invariant and steps_up >= 3
    _verdict(
        "criterion 8 sweep shapes",
        ok,
        f"accuracy exactly layer-invariant over {{10..50}} = {layer_invariant}; "
        f"mean half-cut entanglement over 4->12 qubits = "
        f"{[round(m, 3) for m in means]}, non-decreasing steps {steps_up}/4 (need >=3)",
    )


# -------------------------------------------------------------- criterion 9

def _pairwise_auc(scores, positives):
    pos = scores[positives]
    neg = scores[~positives]
    wins = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                wins += 1.0
            elif p == q:
                wins += 0.5
    return wins / (len(pos) * len(neg))


def _threshold_ks(scores, positives):
    pos = scores[positives]
    neg = scores[~positives]
    best = 0.0
    for t in np.unique(scores):
        gap = abs((pos <= t).mean() - (neg <= t).mean())
        best = max(best, gap)
    return best


def test_criterion_09a_metric_oracles():
    rng = np.random.default_rng(7)
    auc_exact = ks_exact = True
    trapezoid_worst = 0.0
    for _ in range(100):
        n = int(rng.integers(4, 21))
        k = int(rng.integers(2, 5))
        labels = rng.integers(0, k, size=n)
        labels[:k] = np.arange(k)  # every class occupied
        rng.shuffle(labels)
        scores = rng.integers(0, 6, size=(n, k)).astype(float)  # heavy ties
        scores += rng.random((n, k)) * rng.integers(0, 2)
        per_class, overall = roc_auc_ovr(scores, labels)
        for cls in range(k):
            positives = labels == cls
            if positives.all() or not positives.any():
                continue
            auc_exact &= per_class[cls] == _pairwise_auc(scores[:, cls], positives)
            ks_exact &= ks_statistic(scores[:, cls], positives) == _threshold_ks(
                scores[:, cls], positives
            )
            curve = np.asarray(roc_curve_points(scores[:, cls], positives))
            area = float(np.trapezoid(curve[:, 1], curve[:, 0]))
            trapezoid_worst = max(
                trapezoid_worst, abs(area - per_class[cls])
            )
        auc_exact &= overall == pytest.approx(np.nanmean(per_class), abs=0)
    ok = auc_exact and ks_exact and trapezoid_worst < 1e-12
    _verdict(
        "criterion 9a metric oracles",
        ok,
        f"100 instances <=20 samples: pairwise AUC exact={auc_exact}, "
        f"threshold KS exact={ks_exact}, worst |trapezoid-AUC|={trapezoid_worst:.1e} "
        f"(tol 1e-12)",
    )


IRIS_SEPARATION_TARGETS = {
    "auc_overall": 0.8548,
    "ks_class_0": 0.800,
    "ks_class_1": 0.690,
    "ks_class_2": 0.846,
}


def test_criterion_09b_reference_separation_targets(default_runs):
    result = default_runs("iris")
    seeds = result.seeds
    achieved = {
        "auc_overall": float(
            np.mean([result.per_seed_metrics[s].auc_overall for s in seeds])
        )
    }
    ks_means = np.mean(
        [result.per_seed_metrics[s].ks_per_class for s in seeds], axis=0
    )
    for cls in range(3):
        achieved[f"ks_class_{cls}"] = float(ks_means[cls])
    deviations = {
        key: abs(achieved[key] - IRIS_SEPARATION_TARGETS[key])
        for key in IRIS_SEPARATION_TARGETS
    }
    ok = all(dev <= 0.08 for dev in deviations.values())
    detail = "; ".join(
        f"{key}: achieved {achieved[key]:.4f}, target "
        f"{IRIS_SEPARATION_TARGETS[key]:.3f}+-0.08, |d|={deviations[key]:.4f}"
        for key in IRIS_SEPARATION_TARGETS
    )
    if not ok:
        detail += (
            ". Analysis: with this graph construction and these splits the iris "
            "classes separate almost perfectly, so overall AUC and the KS values "
            "for classes 0 and 1 sit well above the reference band; the reference "
            "values come from an unspecified split and scoring pipeline that this "
            "implementation does not have access to. The measured values are "
            "reported as-is rather than degraded to match."
        )
    _verdict("criterion 9b reference separation targets", ok, detail)


# -------------------------------------------------------------- criterion 10

def _stable_lines(path):
    return [
        line
        for line in Path(path).read_text().splitlines()
        if "created_at" not in line and "wall_clock_seconds" not in line
    ]


def test_criterion_10_run_determinism(tmp_path, capsys):
    config_path = tmp_path / "iris_default.json"
    config_path.write_text(json.dumps({"dataset": "iris"}) + "\n")
    result_paths = []
    for out_name in ("first", "second"):
        rc = main(
            ["run", "--config", str(config_path), "--out", str(tmp_path / out_name)]
        )
        assert rc == 0
        result_paths.append(Path(capsys.readouterr().out.strip().splitlines()[-1]))
    lines_a = _stable_lines(result_paths[0])
    lines_b = _stable_lines(result_paths[1])
    ok = bool(lines_a) and lines_a == lines_b
    _verdict(
        "criterion 10 run determinism",
        ok,
        f"two identical runs: {len(lines_a)} result lines byte-identical "
        f"after dropping timestamp fields = {lines_a == lines_b}",
    )
