"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the criterion lines.
"""

import json

import numpy as np

from scalednmf.cli import main as cli_main
from scalednmf.cluster_eval import assign_clusters
from scalednmf.corpus import Vocabulary, common_token_split, remove_rare_tokens
from scalednmf.harness import ExperimentConfig, run_experiment
from scalednmf.nmf import (
    FROBENIUS,
    ITAKURA_SAITO,
    KULLBACK_LEIBLER,
    InitKind,
    NmfConfig,
    component_loss,
    factorize,
)
from scalednmf.rank import singular_values, zg_elbow
from scalednmf.scaling import DocTermMatrix, ScalingKind, apply_scaling, marginals
from scalednmf.synth import SyntheticSpec

from oracles import changepoint_split, pair_count_indices, zg_split


def _criterion(name: str, checks: dict[str, bool]) -> None:
    ok = all(checks.values())
    print(f"[{'PASS' if ok else 'FAIL'}] {name}")
    failed = [label for label, good in checks.items() if not good]
    assert ok, f"{name}: failed checks: {failed}"


def random_counts(rng, n, m, density=0.35):
    dense = rng.random((n, m)) * (rng.random((n, m)) < density)
    dense[np.arange(n), rng.integers(0, m, n)] += rng.random(n) + 0.1
    dense[rng.integers(0, n, m), np.arange(m)] += rng.random(m) + 0.1
    return DocTermMatrix.from_array(dense)


def test_criterion_1_scaling_identities():
    rng = np.random.default_rng(101)
    row_ok = col_ok = nl_ok = pwmi_ok = True
    for _ in range(100):
        n, m = int(rng.integers(2, 51)), int(rng.integers(2, 81))
        mat = random_counts(rng, n, m)
        rows, cols = marginals(mat)
        rs = apply_scaling(mat, ScalingKind.ROW).toarray()
        cs = apply_scaling(mat, ScalingKind.COLUMN).toarray()
        nl = apply_scaling(mat, ScalingKind.NORMALIZED_LAPLACIAN).toarray()
        pwmi = apply_scaling(mat, ScalingKind.PWMI).toarray()
        row_ok &= bool(np.all(np.abs(rs.sum(axis=1) - 1.0) <= 1e-12))
        col_ok &= bool(np.all(np.abs(cs.sum(axis=0) - 1.0) <= 1e-12))
        nl_ok &= bool(nl.min() >= 0.0 and nl.max() <= 1.0)
        expected = nl / np.sqrt(np.outer(rows, cols))
        mask = expected != 0
        rel = np.abs(pwmi[mask] - expected[mask]) / np.abs(expected[mask])
        pwmi_ok &= bool(np.all(rel <= 1e-12) and np.all(pwmi[~mask] == 0))
    _criterion(
        "criterion 1: scaling identities on 100 random sparse matrices",
        {"rs_row_sums": row_ok, "cs_col_sums": col_ok, "nl_unit_interval": nl_ok,
         "pwmi_geometric_mean_identity": pwmi_ok},
    )


def test_criterion_2_nl_spectral_bound():
    rng = np.random.default_rng(202)
    ok = True
    for _ in range(50):
        n, m = int(rng.integers(2, 61)), int(rng.integers(2, 61))
        counts = rng.integers(0, 8, size=(n, m)).astype(float)
        counts[np.arange(n), rng.integers(0, m, n)] += 1 + rng.integers(0, 4, n)
        counts[rng.integers(0, n, m), np.arange(m)] += 1 + rng.integers(0, 4, m)
        mat = DocTermMatrix.from_array(counts)
        scaled = apply_scaling(mat, ScalingKind.NORMALIZED_LAPLACIAN)
        top = singular_values(scaled.matrix, 1).values[0]
        ok &= bool(top <= 1.0 + 1e-8)
    _criterion(
        "criterion 2: sigma_max(nl) <= 1 + 1e-8 on 50 random count matrices",
        {"spectral_bound": ok},
    )


def test_criterion_3_loss_homogeneity():
    rng = np.random.default_rng(303)
    frob_ok = kl_ok = is_ok = True
    for _ in range(100):
        x, y = rng.random(2) * 10.0 + 1e-3
        alpha = rng.random() * 10.0 + 1e-3
        frob_ok &= bool(
            abs(component_loss(alpha * x, alpha * y, FROBENIUS) - alpha**2 * component_loss(x, y, FROBENIUS))
            <= 1e-12 * abs(alpha**2 * component_loss(x, y, FROBENIUS))
        )
        kl_ref = alpha * component_loss(x, y, KULLBACK_LEIBLER)
        kl_ok &= bool(
            abs(component_loss(alpha * x, alpha * y, KULLBACK_LEIBLER) - kl_ref)
            <= 1e-12 * max(abs(kl_ref), 1e-300)
        )
        is_ref = component_loss(x, y, ITAKURA_SAITO)
        is_ok &= bool(
            abs(component_loss(alpha * x, alpha * y, ITAKURA_SAITO) - is_ref)
            <= 1e-12 * max(abs(is_ref), 1e-300)
        )
    _criterion(
        "criterion 3: loss homogeneity (alpha^2, alpha, 1) on 100 random triples",
        {"frobenius": frob_ok, "kullback_leibler": kl_ok, "itakura_saito": is_ok},
    )


def test_criterion_4_nmf_correctness():
    rng = np.random.default_rng(404)
    monotone_ok = True
    for loss in (KULLBACK_LEIBLER, FROBENIUS):
        for t in range(20):
            M = rng.random((20, 15)) + 0.05
            model = factorize(M, NmfConfig(rank=4, loss=loss, seed=t, max_iter=60, tol=1e-15))
            monotone_ok &= bool(np.all(np.diff(model.objective_history) <= 1e-10))

    # planted rank-3 instance: rows/columns load mostly on one component
    gen = np.random.default_rng(405)
    W_star = 0.01 * gen.random((40, 3))
    W_star[np.arange(40), gen.integers(0, 3, 40)] += 1.0 + gen.random(40)
    H_star = 0.01 * gen.random((3, 60))
    H_star[gen.integers(0, 3, 60), np.arange(60)] += 1.0 + gen.random(60)
    M_planted = W_star @ H_star
    model = factorize(
        M_planted,
        NmfConfig(rank=3, seed=0, init=InitKind.NNDSVDA, max_iter=500, tol=1e-15),
    )
    recovery_ok = model.residual_norm / np.linalg.norm(M_planted) < 1e-3

    nonneg_ok = True
    M = np.random.default_rng(406).random((15, 12)) + 0.02
    for loss in (FROBENIUS, KULLBACK_LEIBLER):
        for iters in (1, 2, 3, 5, 8, 13, 21, 34):
            # same seed: each shorter run is a prefix of the longer trajectory
            partial = factorize(M, NmfConfig(rank=4, loss=loss, seed=1, max_iter=iters, tol=1e-15))
            nonneg_ok &= bool(partial.W.min() >= 0.0 and partial.H.min() >= 0.0)

    _criterion(
        "criterion 4: NMF monotonicity, planted rank-3 recovery, non-negativity",
        {"monotone_beta_1_2": monotone_ok, "planted_recovery": recovery_ok,
         "nonneg_every_iteration": nonneg_ok},
    )


def test_criterion_5_oracle_equivalence():
    rng = np.random.default_rng(505)
    zg_ok = True
    for _ in range(100):
        p = int(rng.integers(2, 201))
        values = np.sort(rng.random(p) * float(rng.integers(1, 100)))[::-1]
        zg_ok &= zg_elbow(values) == zg_split(values)

    ari_ok = True
    for _ in range(100):
        m = int(rng.integers(2, 51))
        ids = [f"d{i}" for i in range(m)]
        from scalednmf.cluster_eval import Partition, adjusted_rand_index, rand_index

        p1 = Partition({i: int(rng.integers(0, 6)) for i in ids})
        p2 = Partition({i: int(rng.integers(0, 6)) for i in ids})
        rand_bf, ari_bf = pair_count_indices(p1.assignments, p2.assignments)
        ari_ok &= abs(rand_index(p1, p2) - rand_bf) <= 1e-12
        ari_ok &= abs(adjusted_rand_index(p1, p2) - ari_bf) <= 1e-12

    svd_ok = True
    for _ in range(10):
        n, m = int(rng.integers(8, 65)), int(rng.integers(8, 65))
        M = rng.random((n, m))
        count = max(1, min(n, m) // 2)
        dense_ref = np.linalg.svd(M, compute_uv=False)[:count]
        via_dense = singular_values(M, count).values
        via_lanczos = singular_values(M, count, dense_cutoff=0).values
        svd_ok &= bool(np.all(np.abs(via_dense - dense_ref) <= 1e-8 * dense_ref))
        svd_ok &= bool(np.all(np.abs(via_lanczos - dense_ref) <= 1e-8 * dense_ref))

    split_ok = True
    for _ in range(50):
        m = int(rng.integers(4, 80))
        counts = rng.integers(1, 10_000, size=m)
        split_ok &= common_token_split(counts) == changepoint_split(counts)

    _criterion(
        "criterion 5: elbow, ARI/Rand, singular values, change point match oracles",
        {"zg_elbow": zg_ok, "ari_rand": ari_ok, "singular_values": svd_ok,
         "common_token_split": split_ok},
    )


def test_criterion_6_argmax_invariance():
    rng = np.random.default_rng(606)
    ok = True
    for _ in range(50):
        n, k = int(rng.integers(2, 40)), int(rng.integers(2, 10))
        W = rng.random((n, k))
        d = rng.random(n) * 100 + 1e-6
        ids = [f"d{i}" for i in range(n)]
        ok &= assign_clusters(W, ids).assignments == assign_clusters(d[:, None] * W, ids).assignments
    _criterion(
        "criterion 6: positive diagonal rescaling never changes the partition",
        {"argmax_invariance": ok},
    )


def test_criterion_7_qualitative_two_truths_replica():
    spec = SyntheticSpec(
        k_topics=5,
        n_docs=200,
        vocab_size=500,
        doc_length=(120.0, 0.3),
        topic_concentration=0.05,
        zipf_exponent=1.1,
        length_skew=10.0,
        seed=20240817,
    )
    config = ExperimentConfig(synthetic=spec, seed=20240817)
    report = run_experiment(config)
    best = report.best_ari()
    second = report.elbows["counts"]["second"]
    _criterion(
        "criterion 7: synthetic 5-topic corpus, nl >= 0.8, nl >= counts, elbow near 5",
        {
            "nl_at_least_0.8": best["nl"] >= 0.8,
            "nl_at_least_counts": best["nl"] >= best["counts"],
            "second_elbow_within_3_of_5": abs(second - 5) <= 3,
        },
    )


def test_criterion_8_pipeline_determinism(tmp_path):
    config = {
        "synthetic": {
            "k_topics": 3,
            "n_docs": 60,
            "vocab_size": 100,
            "doc_length": [40.0, 0.2],
            "topic_concentration": 0.05,
            "zipf_exponent": 1.0,
            "length_skew": 4.0,
            "seed": 11,
        },
        "seed": 11,
    }
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps(config))
    outputs = []
    for name in ("run1", "run2"):
        out = tmp_path / name
        code = cli_main(["sweep", "--config", str(config_path), "--out", str(out)])
        assert code == 0
        outputs.append(
            ((out / "results.csv").read_bytes(), (out / "report.json").read_bytes())
        )
    _criterion(
        "criterion 8: two sweep invocations produce byte-identical outputs",
        {"results_csv": outputs[0][0] == outputs[1][0],
         "report_json": outputs[0][1] == outputs[1][1]},
    )


def test_criterion_9_rare_token_mass_guarantee():
    rng = np.random.default_rng(909)
    ok = True
    for _ in range(20):
        m = int(rng.integers(1, 200))
        counts = {f"t{i}": int(c) for i, c in enumerate(rng.integers(1, 1000, size=m))}
        total = sum(counts.values())
        pruned, report = remove_rare_tokens(Vocabulary.from_counts(counts))
        kept = sum(pruned.frequency.values())
        ok &= kept / total >= 0.99 and report.rare_mass_kept >= 0.99
    _criterion(
        "criterion 9: rare-token pruning keeps at least 99% of count mass",
        {"mass_kept": ok},
    )
