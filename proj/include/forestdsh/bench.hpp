#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "forestdsh/baselines.hpp"
#include "forestdsh/data.hpp"
#include "forestdsh/query.hpp"
#include "forestdsh/solver.hpp"
#include "forestdsh/tree.hpp"

namespace forestdsh {

/// Work counters of one method run plus accuracy; recall fields are fractions in [0, 1].
struct MetricsRecord {
    std::string method;
    double wall_ms = 0.0;
    std::size_t n = 0, m = 0, seq_len = 0;
    std::size_t n_bands = 0;
    std::size_t n_rows = 0;  // signature methods only
    std::uint64_t tree_nodes = 0;
    WorkStats work;
    double work_total = 0.0;
    double candidates_per_query = 0.0;
    double planted_recall = 0.0;
    /// Fraction of oracle queries whose brute-force best class is among the candidates; -1 if
    /// no oracle queries were evaluated.
    double oracle_recall = -1.0;
    std::size_t oracle_queries = 0;
    double lambda = 0.0;
    FamilyStats predicted;
    FamilyEstimate measured;
    bool has_stats = false;
};

nlohmann::json to_json(const MetricsRecord& r);

struct SweepRow {
    Thresholds thresholds;
    bool ok = false;
    std::string error;
    std::size_t tree_nodes = 0;
    std::size_t buckets = 0;
    FamilyStats stats;
    double predicted_cost = 0.0;
    double measured_work = -1.0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::size_t best = 0;
    const SweepRow& best_row() const { return rows.at(best); }
};

/// C1 = C2 = C3 = c for each c in values.
std::vector<Thresholds> uniform_threshold_grid(const std::vector<double>& values);
/// Log-spaced values lo * ratio^i up to hi.
std::vector<double> log_grid(double lo, double hi, double ratio);

struct SweepOptions {
    double tp_target = 0.99;
    CostModel cost;
    TreeLimits limits;
    /// When set, each grid point is also run end to end on this data and ranked by measured work.
    const PairedDataset* validation = nullptr;
    std::uint64_t seed = 0;
};

/// Builds a tree per grid point and returns the cheapest (ties toward larger C1).
/// Throws AllBuildsFailed when every grid point fails.
SweepResult threshold_sweep(const JointDistribution& jd, const HashParams& params, const ProblemDims& dims,
                            const std::vector<Thresholds>& grid, const SweepOptions& options);

/// Best uniform C over `values`, then repeated one-coordinate sweeps of C1, C2, C3 over the same
/// values until no coordinate improves (at most `rounds` passes). Rows of every pass are kept.
SweepResult coordinate_threshold_sweep(const JointDistribution& jd, const HashParams& params, const ProblemDims& dims,
                                       const std::vector<double>& values, const SweepOptions& options, int rounds = 3);

/// Default grid of threshold constants for the automatic sweep.
std::vector<double> default_threshold_values();

struct ForestRunOptions {
    double tp_target = 0.99;
    /// Overrides the computed band count when non-zero.
    std::size_t n_bands = 0;
    /// Multiplies the computed band count (noise margin).
    double band_inflation = 1.0;
    std::uint64_t seed = 0;
    std::size_t oracle_queries = 0;
    std::size_t mc_samples = 0;  // family-stat Monte-Carlo check, 0 to skip
    CostModel cost;
    unsigned threads = 1;
};

/// Indexes data.x with the tree, runs every query, and fills the metrics record.
MetricsRecord run_forest(const DecisionTree& tree, const PairedDataset& data, const ForestRunOptions& options);

struct SignatureRunOptions {
    double tp_target = 0.99;
    std::uint64_t seed = 0;
    std::size_t oracle_queries = 0;
    TuningLimits limits;
};

MetricsRecord run_signature(SchemeKind kind, const JointDistribution& jd, const PairedDataset& data,
                            const SignatureRunOptions& options);

MetricsRecord run_brute_force(const JointDistribution& jd, const PairedDataset& data, std::size_t oracle_queries);

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Endpoints of the 2x2 interpolation family.
JointDistribution experiment_p1();
JointDistribution experiment_p2();
/// P(t) = P1 (1 - t) + P2 t.
JointDistribution experiment_p(double t);

/// Named fixture distributions: "example1", "p1", "p2", "massspec4", "massspec8".
JointDistribution named_distribution(const std::string& name);

/// Raised on experiments whose configured budget (seconds) runs out.
class BudgetExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Seed from FORESTDSH_SEED, or 0 when unset. Throws InvalidArgument on a malformed value.
std::uint64_t default_seed();

/// Model description: a fixture name, {"file": path}, {"interpolate": t}, {"hamming": p}, or an inline
/// model object with "p". Relative file paths resolve against base_dir.
JointDistribution resolve_model(const nlohmann::json& desc, const std::filesystem::path& base_dir = {});

/// Runs a JSON experiment config (see README) and writes its outputs under out_dir.
/// Returns the metrics records produced; experiment kinds also write CSV tables.
std::vector<MetricsRecord> run_experiment(const nlohmann::json& config, const std::filesystem::path& out_dir);

}  // namespace forestdsh
