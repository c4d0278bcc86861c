"""Forest distribution sensitive hashing."""

import json as _json

from ._core import (
    BudgetExceeded,
    DecisionTree,
    ForestDSHError,
    Index,
    JointDistribution,
    brute_force_top1,
    build_tree,
    dubiner_estimate,
    experiment_p,
    generate_pairs,
    hamming_distribution,
    log_likelihood_ratio,
    lsh_hamming_exponent,
    minhash_exponent,
    mips_dot,
    perturb,
    solve_params,
)
from ._core import run_experiment as _run_experiment


def run_experiment(config, out_dir):
    """Run an experiment config (dict or JSON string); returns the metrics records."""
    if not isinstance(config, str):
        config = _json.dumps(config)
    return _run_experiment(config, str(out_dir))


__all__ = [
    "BudgetExceeded",
    "DecisionTree",
    "ForestDSHError",
    "Index",
    "JointDistribution",
    "brute_force_top1",
    "build_tree",
    "dubiner_estimate",
    "experiment_p",
    "generate_pairs",
    "hamming_distribution",
    "log_likelihood_ratio",
    "lsh_hamming_exponent",
    "minhash_exponent",
    "mips_dot",
    "perturb",
    "run_experiment",
    "solve_params",
]
