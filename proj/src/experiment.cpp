#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>

#include "forestdsh/bench.hpp"
#include "forestdsh/rng.hpp"

namespace forestdsh {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

class Budget {
public:
    explicit Budget(double seconds) : seconds_(seconds), start_(std::chrono::steady_clock::now()) {}

    void check(const std::string& where) const {
        if (seconds_ <= 0.0) return;
        const double used = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        if (used > seconds_) {
            std::ostringstream os;
            os << "budget of " << seconds_ << " s exceeded after " << used << " s (" << where << ")";
            throw BudgetExceeded(os.str());
        }
    }

private:
    double seconds_;
    std::chrono::steady_clock::time_point start_;
};

// appends one JSON line per record and flushes, so partial results survive a failure
class MetricsWriter {
public:
    explicit MetricsWriter(const fs::path& path) : out_(path) {
        if (!out_) throw Error(ErrorCode::Io, "cannot write " + path.string());
    }
    void add(std::vector<MetricsRecord>& all, MetricsRecord rec, const json& extra = {}) {
        json j = to_json(rec);
        for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
        out_ << j.dump() << '\n';
        out_.flush();
        all.push_back(std::move(rec));
    }

private:
    std::ofstream out_;
};

class Csv {
public:
    Csv(const fs::path& path, const std::vector<std::string>& header) : out_(path) {
        if (!out_) throw Error(ErrorCode::Io, "cannot write " + path.string());
        out_.precision(10);
        row_strings(header);
    }
    template <class... T>
    void row(const T&... v) {
        bool first = true;
        ((out_ << (first ? "" : ",") << v, first = false), ...);
        out_ << '\n';
        out_.flush();
    }

private:
    void row_strings(const std::vector<std::string>& v) {
        for (std::size_t i = 0; i < v.size(); ++i) out_ << (i ? "," : "") << v[i];
        out_ << '\n';
    }
    std::ofstream out_;
};

struct Common {
    JointDistribution model = named_distribution("example1");
    json model_spec;
    std::size_t n = 1000, m = 1000, seq_len = 1000;
    double tp_target = 0.99;
    std::uint64_t seed = 0;
    std::vector<std::string> methods;
    CostModel cost;
    TreeLimits limits;
    std::size_t oracle_queries = 0;
    std::size_t mc_samples = 0;
    unsigned threads = 1;
    json thresholds = "default";
    std::vector<double> threshold_values;
};

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

Common parse_common(const json& cfg, const fs::path& base_dir) {
    Common c;
    if (cfg.contains("model")) {
        c.model_spec = cfg.at("model");
        c.model = resolve_model(c.model_spec, base_dir);
    }
    c.n = get_or<std::size_t>(cfg, "n", c.n);
    c.m = get_or<std::size_t>(cfg, "m", c.n);
    c.seq_len = get_or<std::size_t>(cfg, "seq_len", c.seq_len);
    c.tp_target = get_or<double>(cfg, "tp_target", c.tp_target);
    c.seed = cfg.contains("seed") ? cfg.at("seed").get<std::uint64_t>() : default_seed();
    c.methods = get_or<std::vector<std::string>>(cfg, "methods", {});
    if (cfg.contains("cost")) {
        const auto& k = cfg.at("cost");
        c.cost.c_tree = get_or<double>(k, "c_tree", 1.0);
        c.cost.c_hash = get_or<double>(k, "c_hash", 1.0);
        c.cost.c_insertion = get_or<double>(k, "c_insertion", 1.0);
        c.cost.c_pos = get_or<double>(k, "c_pos", 1.0);
    }
    c.limits.max_depth = get_or<std::uint32_t>(cfg, "max_depth", 0);
    c.limits.max_nodes = get_or<std::size_t>(cfg, "max_nodes", c.limits.max_nodes);
    c.oracle_queries = get_or<std::size_t>(cfg, "oracle_queries", 0);
    c.mc_samples = get_or<std::size_t>(cfg, "mc_samples", 0);
    c.threads = get_or<unsigned>(cfg, "threads", 1);
    if (cfg.contains("thresholds")) c.thresholds = cfg.at("thresholds");
    c.threshold_values = get_or<std::vector<double>>(cfg, "threshold_values", default_threshold_values());
    if (!(c.tp_target > 0.0 && c.tp_target < 1.0)) throw Error(ErrorCode::InvalidArgument, "tp_target must lie in (0, 1)");
    if (c.n < 2 || c.m < 1 || c.seq_len < 1) throw Error(ErrorCode::InvalidArgument, "n >= 2, m >= 1, seq_len >= 1 required");
    for (const auto& name : c.methods) {
        if (name != "forestdsh" && name != "minhash" && name != "lsh-hamming" && name != "brute") {
            throw Error(ErrorCode::InvalidArgument, "unknown method '" + name + "'");
        }
    }
    return c;
}

Thresholds resolve_thresholds(const Common& c, const JointDistribution& jd, const HashParams& params,
                              const ProblemDims& dims, const fs::path& out_dir, const std::string& tag) {
    const json& t = c.thresholds;
    if (t.is_array()) {
        if (t.size() != 3) throw Error(ErrorCode::InvalidArgument, "thresholds must be [c1, c2, c3]");
        for (const auto& v : t) {
            if (!(v.get<double>() > 0.0)) throw Error(ErrorCode::InvalidArgument, "threshold constants must be positive");
        }
        return Thresholds::linear(t[0].get<double>(), t[1].get<double>(), t[2].get<double>());
    }
    const std::string mode = t.get<std::string>();
    if (mode == "default") return Thresholds::from_params(params);
    if (mode != "auto-sweep") throw Error(ErrorCode::InvalidArgument, "thresholds must be default, auto-sweep or [c1, c2, c3]");
    SweepOptions so;
    so.tp_target = c.tp_target;
    so.cost = c.cost;
    so.limits = c.limits;
    so.seed = c.seed;
    const SweepResult sweep = coordinate_threshold_sweep(jd, params, dims, c.threshold_values, so);
    Csv csv(out_dir / ("sweep" + tag + ".csv"),
            {"log_c1", "log_c2", "log_c3", "ok", "tree_nodes", "buckets", "alpha", "beta", "gamma_a", "gamma_b",
             "n_bands", "predicted_cost", "best"});
    for (std::size_t i = 0; i < sweep.rows.size(); ++i) {
        const auto& r = sweep.rows[i];
        csv.row(r.thresholds.log_c1, r.thresholds.log_c2, r.thresholds.log_c3, r.ok ? 1 : 0, r.tree_nodes, r.buckets,
                r.stats.alpha, r.stats.beta, r.stats.gamma_a, r.stats.gamma_b, r.stats.n_bands, r.predicted_cost,
                i == sweep.best ? 1 : 0);
    }
    return sweep.best_row().thresholds;
}

void cross_validate(const MetricsRecord& rec) {
    const auto& p = rec.predicted;
    const auto& e = rec.measured;
    auto check = [](const char* name, double analytic, double est, double se) {
        if (std::abs(analytic - est) > 3.0 * se + 1e-12) {
            std::ostringstream os;
            os << name << " analytic " << analytic << " vs Monte-Carlo " << est << " (se " << se << ")";
            throw Error(ErrorCode::CrossValidationFailed, os.str());
        }
    };
    check("alpha", p.alpha, e.alpha, e.se_alpha);
    check("beta", p.beta, e.beta, e.se_beta);
    check("gamma_a", p.gamma_a, e.gamma_a, e.se_gamma_a);
    check("gamma_b", p.gamma_b, e.gamma_b, e.se_gamma_b);
}

ForestRunOptions forest_options(const Common& c) {
    ForestRunOptions fo;
    fo.tp_target = c.tp_target;
    fo.seed = mix_seed(c.seed, 0xf0);
    fo.oracle_queries = c.oracle_queries;
    fo.mc_samples = c.mc_samples;
    fo.cost = c.cost;
    fo.threads = c.threads;
    return fo;
}

SignatureRunOptions signature_options(const Common& c) {
    SignatureRunOptions so;
    so.tp_target = c.tp_target;
    so.seed = mix_seed(c.seed, 0x51);
    so.oracle_queries = c.oracle_queries;
    so.limits.c_hash = c.cost.c_hash;
    so.limits.c_insertion = c.cost.c_insertion;
    so.limits.c_pos = c.cost.c_pos;
    return so;
}

MetricsRecord run_method(const std::string& method, const Common& c, const JointDistribution& jd,
                         const PairedDataset& data, const DecisionTree* tree) {
    if (method == "forestdsh") {
        MetricsRecord rec = run_forest(*tree, data, forest_options(c));
        if (c.mc_samples > 0) cross_validate(rec);
        return rec;
    }
    if (method == "minhash") return run_signature(SchemeKind::MinHash, jd, data, signature_options(c));
    if (method == "lsh-hamming") return run_signature(SchemeKind::LshHamming, jd, data, signature_options(c));
    return run_brute_force(jd, data, c.oracle_queries);
}

bool wants(const Common& c, const std::string& method) {
    return std::find(c.methods.begin(), c.methods.end(), method) != c.methods.end();
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << j.dump(2) << '\n';
}

// ---- experiment kinds ----

void run_pipeline(const Common& c, const fs::path& out, const Budget& budget, MetricsWriter& w,
                  std::vector<MetricsRecord>& all) {
    if (c.methods.empty()) return;
    const ProblemDims dims{c.n, c.m, c.seq_len};
    const PairedDataset data = generate_pairs(c.model, c.n, c.m, c.seq_len, c.seed);
    budget.check("data generation");
    std::optional<DecisionTree> tree;
    if (wants(c, "forestdsh")) {
        const HashParams params = solve_params(c.model, dims);
        tree = build_tree(c.model, params, dims, resolve_thresholds(c, c.model, params, dims, out, ""), c.limits);
        budget.check("tree build");
    }
    for (const auto& method : c.methods) {
        w.add(all, run_method(method, c, c.model, data, tree ? &*tree : nullptr));
        budget.check(method);
    }
}

void run_scaling(const json& cfg, const Common& c, const fs::path& out, const Budget& budget, MetricsWriter& w,
                 std::vector<MetricsRecord>& all) {
    const auto n_values = get_or<std::vector<std::size_t>>(cfg, "n_values", {128, 256, 512, 1024, 2048, 4096});
    if (n_values.size() < 2) throw Error(ErrorCode::InvalidArgument, "scaling needs at least two n_values");
    const std::size_t ref_n = get_or<std::size_t>(cfg, "reference_n", n_values[n_values.size() / 2]);
    const ProblemDims ref_dims{ref_n, ref_n, c.seq_len};
    const HashParams ref_params = solve_params(c.model, ref_dims);
    const Thresholds th = resolve_thresholds(c, c.model, ref_params, ref_dims, out, "");
    const bool measure = get_or<bool>(cfg, "measure", false);

    Csv csv(out / "scaling.csv", {"n", "tree_nodes", "alpha_over_beta", "alpha_over_gamma_a", "alpha_over_gamma_b",
                                  "alpha", "beta", "gamma_a", "gamma_b", "n_bands", "predicted_cost", "measured_work"});
    std::vector<double> ns, nodes, ab, aga, agb, cost, work;
    for (std::size_t n : n_values) {
        const ProblemDims dims{n, n, c.seq_len};
        const HashParams params = solve_params(c.model, dims);
        const DecisionTree tree = build_tree(c.model, params, dims, th, c.limits);
        const FamilyStats st = family_stats(tree, c.tp_target);
        const double pc = complexity_report(tree, st, c.cost).total;
        double measured = -1.0;
        if (measure) {
            const PairedDataset data = generate_pairs(c.model, n, n, c.seq_len, mix_seed(c.seed, n));
            MetricsRecord rec = run_forest(tree, data, forest_options(c));
            if (c.mc_samples > 0) cross_validate(rec);
            measured = rec.work_total;
            w.add(all, rec);
            work.push_back(measured);
        }
        ns.push_back(static_cast<double>(n));
        nodes.push_back(static_cast<double>(tree.size()));
        ab.push_back(st.alpha / st.beta);
        aga.push_back(st.alpha / st.gamma_a);
        agb.push_back(st.alpha / st.gamma_b);
        cost.push_back(pc);
        csv.row(n, tree.size(), ab.back(), aga.back(), agb.back(), st.alpha, st.beta, st.gamma_a, st.gamma_b, st.n_bands,
                pc, measured);
        budget.check("scaling n=" + std::to_string(n));
    }
    const double lambda = ref_params.lambda, delta = ref_params.delta;
    json summary = {
        {"lambda", lambda},
        {"thresholds", {th.log_c1, th.log_c2, th.log_c3}},
        {"slopes",
         {{"tree_nodes", loglog_slope(ns, nodes)},
          {"alpha_over_beta", loglog_slope(ns, ab)},
          {"alpha_over_gamma_a", loglog_slope(ns, aga)},
          {"alpha_over_gamma_b", loglog_slope(ns, agb)},
          {"predicted_cost", loglog_slope(ns, cost)}}},
        {"expected", {{"tree_nodes", lambda}, {"alpha_over_beta", 1.0 + delta - lambda},
                      {"alpha_over_gamma_a", 1.0 - lambda}, {"alpha_over_gamma_b", delta - lambda}}},
    };
    if (measure) summary["slopes"]["measured_work"] = loglog_slope(ns, work);
    write_json(out / "scaling_summary.json", summary);
}

void run_bands(const json& cfg, const Common& c, const fs::path& out, const Budget& budget, MetricsWriter& w,
               std::vector<MetricsRecord>& all) {
    const ProblemDims dims{c.n, c.m, c.seq_len};
    const HashParams params = solve_params(c.model, dims);
    const DecisionTree tree = build_tree(c.model, params, dims, resolve_thresholds(c, c.model, params, dims, out, ""), c.limits);
    const FamilyStats st = family_stats(tree, c.tp_target);
    std::vector<std::size_t> band_values = get_or<std::vector<std::size_t>>(cfg, "band_values", {});
    if (band_values.empty()) {
        for (std::size_t b = 1; b <= st.n_bands; b = std::max(b + 1, b * 2)) band_values.push_back(b);
        if (band_values.back() != st.n_bands) band_values.push_back(st.n_bands);
    }
    const PairedDataset data = generate_pairs(c.model, c.n, c.m, c.seq_len, c.seed);
    Csv csv(out / "bands.csv", {"n_bands", "predicted_tp", "planted_recall", "work_total", "candidates_per_query"});
    for (std::size_t b : band_values) {
        if (b == 0) throw Error(ErrorCode::InvalidArgument, "band counts must be positive");
        ForestRunOptions fo = forest_options(c);
        fo.n_bands = b;
        MetricsRecord rec = run_forest(tree, data, fo);
        const double predicted = 1.0 - std::pow(1.0 - st.alpha, static_cast<double>(b));
        csv.row(b, predicted, rec.planted_recall, rec.work_total, rec.candidates_per_query);
        w.add(all, rec, {{"predicted_tp_at_bands", predicted}});
        budget.check("bands=" + std::to_string(b));
    }
}

void run_methods(const json& cfg, const Common& c, const fs::path& out, const Budget& budget, MetricsWriter& w,
                 std::vector<MetricsRecord>& all) {
    if (c.methods.empty()) return;
    const auto t_values = get_or<std::vector<double>>(cfg, "t_values", {0.0, 0.2, 0.4, 0.6, 0.8, 1.0});
    const ProblemDims dims{c.n, c.m, c.seq_len};
    Csv csv(out / "methods.csv", {"t", "method", "work_total", "candidates_per_query", "planted_recall", "n_bands", "n_rows"});
    for (double t : t_values) {
        const JointDistribution jd = experiment_p(t);
        const PairedDataset data = generate_pairs(jd, c.n, c.m, c.seq_len, mix_seed(c.seed, static_cast<std::uint64_t>(t * 1e6)));
        std::optional<DecisionTree> tree;
        if (wants(c, "forestdsh")) {
            const HashParams params = solve_params(jd, dims);
            const std::string tag = "_t" + std::to_string(t);
            tree = build_tree(jd, params, dims, resolve_thresholds(c, jd, params, dims, out, tag), c.limits);
        }
        for (const auto& method : c.methods) {
            MetricsRecord rec = run_method(method, c, jd, data, tree ? &*tree : nullptr);
            csv.row(t, method, rec.work_total, rec.candidates_per_query, rec.planted_recall, rec.n_bands, rec.n_rows);
            w.add(all, rec, {{"t", t}});
            budget.check("t=" + std::to_string(t) + " " + method);
        }
    }
}

void run_noise(const json& cfg, const Common& c, const fs::path& out, const Budget& budget, MetricsWriter& w,
               std::vector<MetricsRecord>& all) {
    const auto eps_values = get_or<std::vector<double>>(cfg, "epsilon_values", {0.0, 0.01, 0.03});
    const auto n_values = get_or<std::vector<std::size_t>>(cfg, "n_values", {c.n});
    const ProblemDims ref_dims{n_values.back(), n_values.back(), c.seq_len};
    const HashParams ref_params = solve_params(c.model, ref_dims);
    const Thresholds th = resolve_thresholds(c, c.model, ref_params, ref_dims, out, "");
    Csv csv(out / "noise.csv", {"epsilon", "n", "n_bands", "planted_recall", "work_total"});
    json summary = json::array();
    for (double eps : eps_values) {
        const JointDistribution actual = eps > 0.0 ? perturb(c.model, eps, mix_seed(c.seed, 0xe95)) : c.model;
        std::vector<double> ns, works;
        double min_recall = 1.0;
        for (std::size_t n : n_values) {
            const ProblemDims dims{n, n, c.seq_len};
            const HashParams params = solve_params(c.model, dims);
            const DecisionTree tree = build_tree(c.model, params, dims, th, c.limits);
            const PairedDataset data = generate_pairs(actual, n, n, c.seq_len, mix_seed(c.seed, n));
            ForestRunOptions fo = forest_options(c);
            fo.band_inflation = std::pow(1.0 + eps, static_cast<double>(tree.max_bucket_depth()));
            MetricsRecord rec = run_forest(tree, data, fo);
            csv.row(eps, n, rec.n_bands, rec.planted_recall, rec.work_total);
            ns.push_back(static_cast<double>(n));
            works.push_back(rec.work_total);
            min_recall = std::min(min_recall, rec.planted_recall);
            w.add(all, rec, {{"epsilon", eps}});
            budget.check("epsilon=" + std::to_string(eps));
        }
        json row = {{"epsilon", eps},
                    {"min_recall", min_recall},
                    {"bound", noise_complexity_bound(ref_params, c.model, eps)}};
        if (ns.size() >= 2) row["work_exponent"] = loglog_slope(ns, works);
        summary.push_back(row);
    }
    write_json(out / "noise_summary.json", summary);
}

void run_dubiner(const json& cfg, const Common& c, const fs::path& out, const Budget& budget) {
    const auto p_values = get_or<std::vector<double>>(cfg, "p_values", {0.55, 0.7, 0.85, 0.95});
    const std::size_t trials = get_or<std::size_t>(cfg, "trials", 100000);
    Csv csv(out / "dubiner.csv", {"p", "lambda", "dubiner", "standard_error", "d0"});
    for (double p : p_values) {
        const JointDistribution jd = hamming_distribution(p);
        const HashParams params = solve_params(jd, ProblemDims{c.n, c.n, c.seq_len});
        const DubinerEstimate est = dubiner_hamming_estimate(p, c.n, c.seq_len, trials, mix_seed(c.seed, static_cast<std::uint64_t>(p * 1e6)));
        csv.row(p, params.lambda, est.exponent, est.standard_error, est.d0);
        budget.check("p=" + std::to_string(p));
    }
}

void run_sweep(const Common& c, const fs::path& out) {
    const ProblemDims dims{c.n, c.m, c.seq_len};
    const HashParams params = solve_params(c.model, dims);
    Common sweep = c;
    sweep.thresholds = "auto-sweep";
    const Thresholds best = resolve_thresholds(sweep, c.model, params, dims, out, "");
    write_json(out / "sweep_best.json", {{"log_c1", best.log_c1}, {"log_c2", best.log_c2}, {"log_c3", best.log_c3}});
}

}  // namespace

std::uint64_t default_seed() {
    const char* env = std::getenv("FORESTDSH_SEED");
    if (env == nullptr || *env == '\0') return 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (*end != '\0' || env[0] == '-') throw Error(ErrorCode::InvalidArgument, "FORESTDSH_SEED must be a non-negative integer");
    return v;
}

JointDistribution resolve_model(const json& desc, const fs::path& base_dir) {
    if (desc.is_string()) return named_distribution(desc.get<std::string>());
    if (!desc.is_object()) throw Error(ErrorCode::InvalidArgument, "model must be a name or an object");
    if (desc.contains("file")) {
        fs::path p = desc.at("file").get<std::string>();
        if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
        return load_model(p);
    }
    if (desc.contains("interpolate")) return experiment_p(desc.at("interpolate").get<double>());
    if (desc.contains("hamming")) return hamming_distribution(desc.at("hamming").get<double>());
    if (desc.contains("p")) return model_from_json_text(desc.dump());
    throw Error(ErrorCode::InvalidArgument, "model object needs file, interpolate, hamming or p");
}

std::vector<MetricsRecord> run_experiment(const json& config, const fs::path& out_dir) {
    if (!config.is_object()) throw Error(ErrorCode::InvalidArgument, "experiment config must be a JSON object");
    std::vector<MetricsRecord> all;
    try {
        const fs::path base_dir = config.contains("base_dir") ? fs::path(config.at("base_dir").get<std::string>()) : fs::path{};
        const Common c = parse_common(config, base_dir);
        const std::string kind = get_or<std::string>(config, "kind", "pipeline");
        const Budget budget(get_or<double>(config, "budget_seconds", 0.0));
        fs::create_directories(out_dir);
        MetricsWriter writer(out_dir / "metrics.jsonl");
        if (kind == "pipeline") run_pipeline(c, out_dir, budget, writer, all);
        else if (kind == "scaling") run_scaling(config, c, out_dir, budget, writer, all);
        else if (kind == "bands") run_bands(config, c, out_dir, budget, writer, all);
        else if (kind == "methods") run_methods(config, c, out_dir, budget, writer, all);
        else if (kind == "noise") run_noise(config, c, out_dir, budget, writer, all);
        else if (kind == "dubiner") run_dubiner(config, c, out_dir, budget);
        else if (kind == "sweep") run_sweep(c, out_dir);
        else throw Error(ErrorCode::InvalidArgument, "unknown experiment kind '" + kind + "'");
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("config: ") + e.what());
    }
    return all;
}

}  // namespace forestdsh
