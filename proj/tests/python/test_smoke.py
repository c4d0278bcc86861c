import json
import math

import pytest

import forestdsh as fd


def test_solver_on_the_2x2_example():
    jd = fd.JointDistribution.from_matrix([[0.4, 0.3], [0.1, 0.2]])
    hp = fd.solve_params(jd, n=4)
    assert abs(hp["lambda"] - 1.7203) < 0.005
    assert abs(hp["residual"]) < 1e-6
    assert abs(sum(map(sum, hp["r_star"])) - 1) < 1e-6


def test_bad_matrix_raises():
    with pytest.raises(fd.ForestDSHError):
        fd.JointDistribution.from_matrix([[0.5, 0.6], [0.1, 0.2]])


def test_closed_forms():
    p1 = fd.JointDistribution.named("p1")
    assert abs(fd.minhash_exponent(p1) - 0.5207) < 5e-4
    assert abs(fd.lsh_hamming_exponent(p1) - 0.4672) < 5e-4


def test_index_finds_planted_partners():
    jd = fd.experiment_p(0.25)
    tree = fd.build_tree(jd, n=300, seq_len=300, c=[0.45])
    stats = tree.family_stats(0.99)
    assert 0 < stats["alpha"] <= 1
    data = fd.generate_pairs(jd, n=300, seq_len=300, seed=5)
    index = fd.Index(tree, data["x"], seed=1)
    assert index.n_bands == stats["n_bands"]
    results = index.search(data["y"])
    assert len(results) == 300
    found = sum(any(h["id"] == q for h in r["hits"]) for q, r in enumerate(results))
    assert found / 300 > 0.9
    top = index.top1(data["y"][0])
    assert top is not None and top[0] == fd.brute_force_top1(data["x"], data["y"][0], jd)


def test_mips_identity():
    jd = fd.JointDistribution.named("example1")
    data = fd.generate_pairs(jd, n=3, seq_len=200, seed=2)
    x, y = data["x"][0], data["y"][1]
    assert math.isclose(fd.mips_dot(jd, x, y), fd.log_likelihood_ratio(jd, x, y), rel_tol=1e-9)


def test_tree_round_trip(tmp_path):
    tree = fd.build_tree(fd.JointDistribution.named("example1"), n=100, seq_len=50, c=[0.5])
    tree.save(tmp_path / "t.bin")
    back = fd.DecisionTree.load(tmp_path / "t.bin")
    assert back.size == tree.size and back.n_buckets == tree.n_buckets


def test_experiment_runner(tmp_path):
    config = {"kind": "pipeline", "model": {"interpolate": 0.25}, "n": 200, "seq_len": 200,
              "thresholds": [0.45, 0.45, 0.45], "methods": ["forestdsh", "brute"], "seed": 3}
    records = fd.run_experiment(config, tmp_path)
    assert [r["method"] for r in records] == ["forestdsh", "brute"]
    lines = (tmp_path / "metrics.jsonl").read_text().splitlines()
    assert [json.loads(l)["method"] for l in lines] == ["forestdsh", "brute"]
    assert fd.run_experiment({"kind": "pipeline", "model": "example1", "methods": []}, tmp_path / "e") == []


def test_budget_raises(tmp_path):
    config = {"kind": "pipeline", "model": {"interpolate": 0.25}, "n": 300, "seq_len": 300,
              "thresholds": [0.45, 0.45, 0.45], "methods": ["forestdsh"], "budget_seconds": 1e-6}
    with pytest.raises(fd.BudgetExceeded):
        fd.run_experiment(config, tmp_path)
