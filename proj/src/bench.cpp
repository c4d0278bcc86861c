#include "forestdsh/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>

#include "forestdsh/band_index.hpp"
#include "forestdsh/rng.hpp"

namespace forestdsh {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

bool contains_sorted(const std::vector<PointId>& v, PointId id) {
    return std::binary_search(v.begin(), v.end(), id);
}

const std::vector<std::vector<double>> kMassSpec4 = {
    {0.000125, 5.008081e-5, 9.689274e-8, 0.000404},
    {5.008082e-5, 0.000209, 6.205379e-6, 0.001921},
    {9.689274e-8, 6.205379e-6, 2.688879e-5, 0.000355},
    {0.000404, 0.001921, 0.000355, 0.994165},
};

const std::vector<std::vector<double>> kMassSpec8Left = {
    {3.458e-5, 1.442e-5, 5.434e-6, 1.723e-6}, {1.442e-5, 3.708e-5, 2.550e-5, 8.706e-6},
    {5.434e-6, 2.550e-5, 3.907e-5, 2.948e-5}, {1.723e-6, 8.706e-6, 2.948e-5, 4.867e-5},
    {2.921e-7, 1.561e-6, 6.442e-6, 1.813e-5}, {7.496e-8, 4.809e-7, 2.008e-6, 6.098e-6},
    {6.718e-8, 2.680e-7, 1.251e-6, 4.531e-6}, {5.023e-5, 1.574e-4, 3.671e-4, 5.539e-4},
};

const std::vector<std::vector<double>> kMassSpec8Right = {
    {2.920e-7, 7.496e-8, 6.718e-8, 5.023e-5}, {1.561e-6, 4.809e-7, 2.680e-7, 1.575e-4},
    {6.442e-6, 2.008e-6, 1.251e-6, 3.672e-4}, {1.813e-5, 6.098e-6, 4.532e-6, 5.539e-4},
    {2.887e-5, 6.892e-6, 5.309e-6, 4.138e-4}, {6.892e-6, 2.123e-5, 5.826e-6, 3.246e-4},
    {5.309e-6, 5.826e-6, 6.411e-5, 8.364e-4}, {4.138e-4, 3.246e-4, 8.364e-4, 0.994},
};

}  // namespace

nlohmann::json to_json(const MetricsRecord& r) {
    nlohmann::json j;
    j["method"] = r.method;
    j["wall_ms"] = r.wall_ms;
    j["n"] = r.n;
    j["m"] = r.m;
    j["seq_len"] = r.seq_len;
    j["n_bands"] = r.n_bands;
    j["n_rows"] = r.n_rows;
    j["tree_nodes"] = r.tree_nodes;
    j["hash_evaluations"] = r.work.hash_evaluations;
    j["insertions"] = r.work.insertions;
    j["raw_positives"] = r.work.raw_positives;
    j["distinct_candidates"] = r.work.distinct_candidates;
    j["work_total"] = r.work_total;
    j["candidates_per_query"] = r.candidates_per_query;
    j["planted_recall"] = r.planted_recall;
    if (r.oracle_queries > 0) {
        j["oracle_recall"] = r.oracle_recall;
        j["oracle_queries"] = r.oracle_queries;
    }
    if (r.has_stats) {
        j["lambda"] = r.lambda;
        j["predicted"] = {{"alpha", r.predicted.alpha},
                          {"beta", r.predicted.beta},
                          {"gamma_a", r.predicted.gamma_a},
                          {"gamma_b", r.predicted.gamma_b},
                          {"tp", r.predicted.predicted_tp}};
        if (r.measured.alpha > 0.0) {
            j["measured"] = {{"alpha", r.measured.alpha},     {"beta", r.measured.beta},
                             {"gamma_a", r.measured.gamma_a}, {"gamma_b", r.measured.gamma_b},
                             {"se_alpha", r.measured.se_alpha}, {"se_beta", r.measured.se_beta},
                             {"se_gamma_a", r.measured.se_gamma_a}, {"se_gamma_b", r.measured.se_gamma_b}};
        }
    }
    return j;
}

std::vector<Thresholds> uniform_threshold_grid(const std::vector<double>& values) {
    std::vector<Thresholds> grid;
    for (double c : values) grid.push_back(Thresholds::linear(c, c, c));
    return grid;
}

std::vector<double> log_grid(double lo, double hi, double ratio) {
    if (!(lo > 0.0) || !(hi >= lo) || !(ratio > 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "log grid needs 0 < lo <= hi and ratio > 1");
    }
    std::vector<double> out;
    for (double v = lo; v <= hi * (1.0 + 1e-9); v *= ratio) out.push_back(v);
    return out;
}

SweepResult threshold_sweep(const JointDistribution& jd, const HashParams& params, const ProblemDims& dims,
                            const std::vector<Thresholds>& grid, const SweepOptions& options) {
    if (grid.empty()) {
        throw Error(ErrorCode::InvalidArgument, "threshold grid is empty");
    }
    SweepResult result;
    bool any = false;
    for (const auto& th : grid) {
        SweepRow row;
        row.thresholds = th;
        try {
            const DecisionTree tree = build_tree(jd, params, dims, th, options.limits);
            row.stats = family_stats(tree, options.tp_target);
            row.tree_nodes = tree.size();
            row.buckets = tree.buckets().size();
            row.predicted_cost = complexity_report(tree, row.stats, options.cost).total;
            if (options.validation != nullptr) {
                ForestRunOptions ro;
                ro.tp_target = options.tp_target;
                ro.seed = options.seed;
                ro.cost = options.cost;
                row.measured_work = run_forest(tree, *options.validation, ro).work_total;
            }
            row.ok = true;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NodeBudgetExceeded && e.code() != ErrorCode::EmptyBucketSet) throw;
            row.error = e.what();
        }
        result.rows.push_back(row);
    }
    auto score = [&](const SweepRow& r) { return options.validation != nullptr ? r.measured_work : r.predicted_cost; };
    for (std::size_t i = 0; i < result.rows.size(); ++i) {
        const auto& r = result.rows[i];
        if (!r.ok) continue;
        if (!any) {
            result.best = i;
            any = true;
            continue;
        }
        const auto& b = result.rows[result.best];
        const double sr = score(r), sb = score(b);
        const bool tie = std::abs(sr - sb) <= 1e-12 * std::max(std::abs(sr), std::abs(sb));
        if ((!tie && sr < sb) || (tie && r.thresholds.log_c1 > b.thresholds.log_c1)) result.best = i;
    }
    if (!any) {
        throw Error(ErrorCode::AllBuildsFailed, "every threshold grid point failed to build a usable tree");
    }
    return result;
}

SweepResult coordinate_threshold_sweep(const JointDistribution& jd, const HashParams& params, const ProblemDims& dims,
                                       const std::vector<double>& values, const SweepOptions& options, int rounds) {
    SweepResult all = threshold_sweep(jd, params, dims, uniform_threshold_grid(values), options);
    Thresholds best = all.best_row().thresholds;
    auto score = [&](const SweepRow& r) { return options.validation != nullptr ? r.measured_work : r.predicted_cost; };
    double best_score = score(all.best_row());
    for (int round = 0; round < rounds; ++round) {
        bool improved = false;
        for (int coord = 0; coord < 3; ++coord) {
            std::vector<Thresholds> grid;
            for (double v : values) {
                Thresholds t = best;
                (coord == 0 ? t.log_c1 : coord == 1 ? t.log_c2 : t.log_c3) = std::log(v);
                grid.push_back(t);
            }
            SweepResult pass = threshold_sweep(jd, params, dims, grid, options);
            const double s = score(pass.best_row());
            if (s < best_score * (1.0 - 1e-12)) {
                best_score = s;
                best = pass.best_row().thresholds;
                improved = true;
                all.best = all.rows.size() + pass.best;
            }
            all.rows.insert(all.rows.end(), pass.rows.begin(), pass.rows.end());
        }
        if (!improved) break;
    }
    return all;
}

std::vector<double> default_threshold_values() { return log_grid(0.01, 10.0, 1.1); }

MetricsRecord run_forest(const DecisionTree& tree, const PairedDataset& data, const ForestRunOptions& options) {
    const auto start = Clock::now();
    MetricsRecord rec;
    rec.method = "forestdsh";
    rec.n = data.x.size();
    rec.m = data.y.size();
    rec.seq_len = data.x.empty() ? 0 : data.x[0].size();
    rec.tree_nodes = tree.size();
    rec.lambda = tree.params().lambda;
    rec.predicted = family_stats(tree, options.tp_target);
    rec.has_stats = true;
    std::size_t n_bands = options.n_bands != 0 ? options.n_bands : rec.predicted.n_bands;
    if (options.band_inflation != 1.0) {
        n_bands = static_cast<std::size_t>(std::ceil(static_cast<double>(n_bands) * options.band_inflation - 1e-9));
    }
    rec.n_bands = n_bands;
    const BandSet bands(n_bands, rec.seq_len, options.seed);
    const BandIndex index = BandIndex::build(tree, bands, data.x, options.threads);

    SearchOptions so;
    so.keep_candidates = true;
    so.score = false;
    std::vector<std::vector<std::uint32_t>> planted_for(rec.m);
    for (auto [xi, yj] : data.planted) planted_for[yj].push_back(xi);
    const std::size_t n_oracle = std::min(options.oracle_queries, rec.m);
    std::size_t planted_hit = 0, oracle_hit = 0;
    QueryEngine engine(tree, index);
    rec.work.insertions = index.total_insertions();
    for (std::size_t q = 0; q < rec.m; ++q) {
        const SearchResult r = engine.search(data.y[q], so);
        rec.work.insertions += r.query_insertions;
        rec.work.raw_positives += r.raw_positives;
        rec.work.distinct_candidates += r.candidates_checked;
        for (auto xi : planted_for[q]) planted_hit += contains_sorted(r.candidates, xi);
        if (q < n_oracle) {
            oracle_hit += contains_sorted(r.candidates, brute_force_top1(data.x, data.y[q], tree.model()));
        }
    }
    rec.work.hash_evaluations = static_cast<std::uint64_t>(n_bands) * (rec.n + rec.m);
    rec.work_total = options.cost.c_tree * static_cast<double>(tree.size()) +
                     rec.work.total(options.cost.c_hash, options.cost.c_insertion, options.cost.c_pos);
    rec.candidates_per_query = rec.m ? static_cast<double>(rec.work.distinct_candidates) / static_cast<double>(rec.m) : 0;
    rec.planted_recall =
        data.planted.empty() ? 0.0 : static_cast<double>(planted_hit) / static_cast<double>(data.planted.size());
    rec.oracle_queries = n_oracle;
    rec.oracle_recall = n_oracle ? static_cast<double>(oracle_hit) / static_cast<double>(n_oracle) : -1.0;
    if (options.mc_samples > 0) {
        rec.measured = estimate_family_stats(tree, options.mc_samples, options.seed);
    }
    rec.wall_ms = elapsed_ms(start);
    return rec;
}

MetricsRecord run_signature(SchemeKind kind, const JointDistribution& jd, const PairedDataset& data,
                            const SignatureRunOptions& options) {
    const auto start = Clock::now();
    MetricsRecord rec;
    rec.method = kind == SchemeKind::MinHash ? "minhash" : "lsh-hamming";
    rec.n = data.x.size();
    rec.m = data.y.size();
    rec.seq_len = data.x.empty() ? 0 : data.x[0].size();
    const auto tuned =
        tune_signature_scheme(kind, jd, rec.n, rec.m, rec.seq_len, options.tp_target, options.seed, options.limits);
    const bool oracle = options.oracle_queries > 0;
    const BandedRunStats run = banded_signature_search(tuned.scheme, data, oracle);
    rec.n_bands = tuned.scheme.n_bands;
    rec.n_rows = tuned.scheme.n_rows;
    rec.work = run.work;
    rec.work_total = run.work.total(options.limits.c_hash, options.limits.c_insertion, options.limits.c_pos);
    rec.candidates_per_query =
        rec.m ? static_cast<double>(run.work.distinct_candidates) / static_cast<double>(rec.m) : 0.0;
    rec.planted_recall = run.planted_recall;
    const std::size_t n_oracle = std::min(options.oracle_queries, rec.m);
    std::size_t hit = 0;
    for (std::size_t q = 0; q < n_oracle; ++q) {
        hit += contains_sorted(run.candidates[q], brute_force_top1(data.x, data.y[q], jd));
    }
    rec.oracle_queries = n_oracle;
    rec.oracle_recall = n_oracle ? static_cast<double>(hit) / static_cast<double>(n_oracle) : -1.0;
    rec.wall_ms = elapsed_ms(start);
    return rec;
}

MetricsRecord run_brute_force(const JointDistribution& jd, const PairedDataset& data, std::size_t oracle_queries) {
    const auto start = Clock::now();
    MetricsRecord rec;
    rec.method = "brute";
    rec.n = data.x.size();
    rec.m = data.y.size();
    rec.seq_len = data.x.empty() ? 0 : data.x[0].size();
    const std::size_t scanned = std::min(oracle_queries == 0 ? rec.m : oracle_queries, rec.m);
    for (std::size_t q = 0; q < scanned; ++q) (void)brute_force_top1(data.x, data.y[q], jd);
    // a full scan checks every class for every query
    rec.work.raw_positives = static_cast<std::uint64_t>(rec.n) * rec.m;
    rec.work.distinct_candidates = rec.work.raw_positives;
    rec.work_total = static_cast<double>(rec.work.raw_positives);
    rec.candidates_per_query = static_cast<double>(rec.n);
    rec.planted_recall = data.planted.empty() ? 0.0 : 1.0;
    rec.oracle_recall = 1.0;
    rec.oracle_queries = scanned;
    rec.wall_ms = elapsed_ms(start);
    return rec;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw Error(ErrorCode::InvalidArgument, "slope fit needs at least two matched points");
    }
    double mx = 0.0, my = 0.0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

JointDistribution experiment_p1() {
    return JointDistribution::from_matrix(Matrix::from_rows({{0.345, 0.0}, {0.31, 0.345}}));
}

JointDistribution experiment_p2() {
    return JointDistribution::from_matrix(Matrix::from_rows({{0.019625, 0.0}, {0.036875, 0.9435}}));
}

JointDistribution experiment_p(double t) { return interpolate(experiment_p1(), experiment_p2(), t); }

JointDistribution named_distribution(const std::string& name) {
    if (name == "example1") return JointDistribution::from_matrix(Matrix::from_rows({{0.4, 0.3}, {0.1, 0.2}}));
    if (name == "p1") return experiment_p1();
    if (name == "p2") return experiment_p2();
    if (name == "massspec4") return JointDistribution::from_weights(Matrix::from_rows(kMassSpec4));
    if (name == "massspec8") {
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < kMassSpec8Left.size(); ++i) {
            auto r = kMassSpec8Left[i];
            r.insert(r.end(), kMassSpec8Right[i].begin(), kMassSpec8Right[i].end());
            rows.push_back(std::move(r));
        }
        return JointDistribution::from_weights(Matrix::from_rows(rows));
    }
    throw Error(ErrorCode::InvalidArgument, "unknown distribution '" + name + "'");
}

}  // namespace forestdsh
