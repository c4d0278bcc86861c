#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "forestdsh/baselines.hpp"
#include "forestdsh/bench.hpp"
#include "forestdsh/rng.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace forestdsh;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitBudget = 3;

json params_json(const HashParams& p) {
    json r = json::array();
    for (std::size_t i = 0; i < p.r_star.rows(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < p.r_star.cols(); ++j) row.push_back(p.r_star(i, j));
        r.push_back(row);
    }
    return {{"mu", p.mu},     {"nu", p.nu},         {"eta", p.eta},       {"lambda", p.lambda},
            {"delta", p.delta}, {"p0", p.p0},         {"q0", p.q0},         {"log_p0", p.log_p0},
            {"log_q0", p.log_q0}, {"r_star", r},      {"n_star", p.n_star}, {"residual", p.residual}};
}

// writes to the file when given, stdout otherwise
void emit(const std::string& out, const std::string& text) {
    if (out.empty()) {
        std::cout << text << '\n';
        return;
    }
    std::ofstream f(out);
    if (!f) throw Error(ErrorCode::Io, "cannot write " + out);
    f << text << '\n';
}

JointDistribution model_arg(const std::string& name) {
    if (fs::exists(name)) return load_model(name);
    return named_distribution(name);
}

struct Seed {
    std::optional<std::uint64_t> value;
    std::uint64_t get() const { return value ? *value : default_seed(); }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Forest distribution sensitive hashing: parameter solving, trees, indexing, search and benchmarks"};
    app.require_subcommand(1);

    // solve-params
    std::string sp_model;
    std::uint64_t sp_n = 0, sp_m = 0;
    double sp_grid_max = 20.0, sp_grid_step = 0.1, sp_eta_step = 0.05, sp_tol = 0.01;
    std::string sp_out;
    auto* sp = app.add_subcommand("solve-params", "Solve for (mu, nu, eta) and lambda");
    sp->add_option("--model", sp_model, "model file or fixture name")->required();
    sp->add_option("--n", sp_n, "number of classes N")->required();
    sp->add_option("--m", sp_m, "number of queries M (defaults to N)");
    sp->add_option("--grid-max", sp_grid_max);
    sp->add_option("--grid-step", sp_grid_step);
    sp->add_option("--eta-step", sp_eta_step);
    sp->add_option("--tol", sp_tol);
    sp->add_option("--out", sp_out);

    // build-tree
    std::string bt_model, bt_out, bt_summary;
    std::uint64_t bt_n = 0, bt_m = 0, bt_s = 0;
    std::vector<double> bt_c;
    bool bt_sweep = false;
    double bt_tp = 0.99;
    std::size_t bt_max_nodes = TreeLimits{}.max_nodes;
    std::uint32_t bt_max_depth = 0;
    auto* bt = app.add_subcommand("build-tree", "Build the decision tree and print its summary");
    bt->add_option("--model", bt_model)->required();
    bt->add_option("--n", bt_n)->required();
    bt->add_option("--m", bt_m);
    bt->add_option("--seq-len", bt_s)->required();
    bt->add_option("--c", bt_c, "threshold constants: one value or three (c1 c2 c3)")->expected(1, 3);
    bt->add_flag("--auto-sweep", bt_sweep, "pick thresholds by the predicted-cost sweep");
    bt->add_option("--tp", bt_tp);
    bt->add_option("--max-nodes", bt_max_nodes);
    bt->add_option("--max-depth", bt_max_depth);
    bt->add_option("--out", bt_out, "binary tree file")->required();
    bt->add_option("--summary", bt_summary, "summary JSON path (stdout if omitted)");

    // index
    std::string ix_tree, ix_data, ix_out;
    std::size_t ix_bands = 0;
    double ix_tp = 0.99;
    Seed ix_seed;
    unsigned ix_threads = 1;
    auto* ix = app.add_subcommand("index", "Index database sequences");
    ix->add_option("--tree", ix_tree)->required();
    ix->add_option("--data", ix_data)->required();
    ix->add_option("--bands", ix_bands, "band count (0: from the tree's alpha and --tp)");
    ix->add_option("--tp", ix_tp);
    ix->add_option("--seed", ix_seed.value);
    ix->add_option("--threads", ix_threads);
    ix->add_option("--out", ix_out)->required();

    // query
    std::string q_index, q_tree, q_queries, q_out;
    double q_delta = 0.0;
    unsigned q_threads = 1;
    auto* qc = app.add_subcommand("query", "Search queries against an index");
    qc->add_option("--index", q_index)->required();
    qc->add_option("--tree", q_tree)->required();
    qc->add_option("--queries", q_queries)->required();
    qc->add_option("--delta", q_delta, "report x with P(y|x) > delta");
    qc->add_option("--threads", q_threads);
    qc->add_option("--out", q_out, "JSONL results (stdout if omitted)");

    // baseline
    std::string b_method, b_model, b_data, b_queries, b_out;
    double b_delta = 0.0, b_tp = 0.99, b_p = 0.7;
    std::uint64_t b_n = 1000, b_m = 0, b_s = 1000;
    std::size_t b_trials = 100000, b_pairs = 100, b_oracle = 0;
    Seed b_seed;
    auto* bl = app.add_subcommand("baseline", "Run a baseline method");
    bl->add_option("--method", b_method)
        ->required()
        ->check(CLI::IsMember({"brute", "minhash", "lsh-hamming", "dubiner", "mips-check"}));
    bl->add_option("--model", b_model);
    bl->add_option("--data", b_data, "brute: database sequences");
    bl->add_option("--queries", b_queries, "brute: query sequences");
    bl->add_option("--delta", b_delta);
    bl->add_option("--tp", b_tp);
    bl->add_option("--p", b_p, "dubiner: agreement probability");
    bl->add_option("--n", b_n);
    bl->add_option("--m", b_m);
    bl->add_option("--seq-len", b_s);
    bl->add_option("--trials", b_trials);
    bl->add_option("--pairs", b_pairs, "mips-check: random pairs");
    bl->add_option("--oracle-queries", b_oracle);
    bl->add_option("--seed", b_seed.value);
    bl->add_option("--out", b_out);

    // gen
    std::string g_model, g_out_x, g_out_y, g_planted;
    std::uint64_t g_n = 0, g_m = 0, g_s = 0;
    double g_eps = 0.0;
    Seed g_seed;
    auto* gn = app.add_subcommand("gen", "Generate paired synthetic data");
    gn->add_option("--model", g_model)->required();
    gn->add_option("--n", g_n)->required();
    gn->add_option("--m", g_m);
    gn->add_option("--seq-len", g_s)->required();
    gn->add_option("--epsilon", g_eps, "draw from a perturbed model");
    gn->add_option("--seed", g_seed.value);
    gn->add_option("--out-x", g_out_x)->required();
    gn->add_option("--out-y", g_out_y)->required();
    gn->add_option("--out-planted", g_planted);

    // ingest
    std::string in_ranks, in_out;
    std::uint32_t in_base = 4, in_levels = 4;
    auto* ig = app.add_subcommand("ingest", "Convert rank lists to log-rank sequences");
    ig->add_option("--ranks", in_ranks)->required();
    ig->add_option("--base", in_base);
    ig->add_option("--levels", in_levels);
    ig->add_option("--out", in_out)->required();

    // bench
    std::string bc_config, bc_out = "bench_out";
    double bc_budget = -1.0;
    auto* bc = app.add_subcommand("bench", "Run an experiment config");
    bc->add_option("--config", bc_config)->required();
    bc->add_option("--out", bc_out);
    bc->add_option("--budget-seconds", bc_budget, "overrides the config's budget_seconds");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        if (*sp) {
            const auto jd = model_arg(sp_model);
            SolverOptions so = SolverOptions::uniform(sp_grid_max, sp_grid_step, sp_eta_step);
            so.tolerance = sp_tol;
            const HashParams p = solve_params(jd, ProblemDims{sp_n, sp_m ? sp_m : sp_n, 1}, so);
            emit(sp_out, params_json(p).dump(2));
        } else if (*bt) {
            const auto jd = model_arg(bt_model);
            const ProblemDims dims{bt_n, bt_m ? bt_m : bt_n, bt_s};
            const HashParams params = solve_params(jd, dims);
            TreeLimits limits;
            limits.max_nodes = bt_max_nodes;
            limits.max_depth = bt_max_depth;
            Thresholds th = Thresholds::from_params(params);
            if (bt_sweep) {
                SweepOptions so;
                so.tp_target = bt_tp;
                so.limits = limits;
                th = coordinate_threshold_sweep(jd, params, dims, default_threshold_values(), so).best_row().thresholds;
            } else if (bt_c.size() == 1) {
                th = Thresholds::linear(bt_c[0], bt_c[0], bt_c[0]);
            } else if (bt_c.size() == 3) {
                th = Thresholds::linear(bt_c[0], bt_c[1], bt_c[2]);
            } else if (!bt_c.empty()) {
                throw Error(ErrorCode::InvalidArgument, "--c takes one or three values");
            }
            const DecisionTree tree = build_tree(jd, params, dims, th, limits);
            tree.save(bt_out);
            emit(bt_summary, tree_summary_json(tree, family_stats(tree, bt_tp)));
        } else if (*ix) {
            const DecisionTree tree = DecisionTree::load(ix_tree);
            auto points = read_sequences(ix_data, tree.model().alphabet_a());
            if (points.empty()) throw Error(ErrorCode::InvalidArgument, "data file has no sequences");
            const std::size_t n_bands = ix_bands ? ix_bands : family_stats(tree, ix_tp).n_bands;
            const BandSet bands(n_bands, points[0].size(), ix_seed.get());
            BandIndex::build(tree, bands, std::move(points), ix_threads).save(ix_out);
        } else if (*qc) {
            const DecisionTree tree = DecisionTree::load(q_tree);
            const BandIndex index = BandIndex::load(q_index);
            const auto queries = read_sequences(q_queries, tree.model().alphabet_b());
            SearchOptions so;
            so.delta = q_delta;
            const auto results = search_batch(tree, index, queries, so, q_threads);
            std::string text;
            for (const auto& r : results) text += to_json_line(r) + '\n';
            if (!text.empty()) text.pop_back();
            emit(q_out, text);
        } else if (*bl) {
            const std::uint64_t seed = b_seed.get();
            if (b_method == "dubiner") {
                const auto est = dubiner_hamming_estimate(b_p, b_n, b_s, b_trials, seed);
                const auto params = solve_params(hamming_distribution(b_p), ProblemDims{b_n, b_n, b_s});
                emit(b_out, json{{"p", b_p}, {"exponent", est.exponent}, {"standard_error", est.standard_error},
                                 {"d0", est.d0}, {"p1", est.p1}, {"p2", est.p2}, {"lambda", params.lambda}}
                                .dump(2));
                return 0;
            }
            if (b_model.empty()) throw Error(ErrorCode::InvalidArgument, "--model is required for " + b_method);
            const auto jd = model_arg(b_model);
            if (b_method == "mips-check") {
                const MipsEmbedding emb(jd);
                const auto data = generate_pairs(jd, b_pairs, b_pairs, b_s, seed);
                double worst = 0.0;
                for (std::size_t i = 0; i < b_pairs; ++i) {
                    const double want = log_likelihood_ratio(jd, data.x[i], data.y[i]);
                    const double got = sparse_dot(emb.embed_a(data.x[i]), emb.embed_b(data.y[i]));
                    worst = std::max(worst, std::abs(got - want) / std::max(1.0, std::abs(want)));
                }
                emit(b_out, json{{"pairs", b_pairs}, {"max_relative_error", worst}}.dump(2));
            } else if (b_method == "brute" && !b_data.empty()) {
                if (b_queries.empty()) throw Error(ErrorCode::InvalidArgument, "--queries is required with --data");
                const auto x = read_sequences(b_data, jd.alphabet_a());
                const auto y = read_sequences(b_queries, jd.alphabet_b());
                std::string text;
                for (std::size_t q = 0; q < y.size(); ++q) {
                    auto r = brute_force(x, y[q], jd, b_delta);
                    r.query_id = q;
                    text += to_json_line(r) + '\n';
                }
                if (!text.empty()) text.pop_back();
                emit(b_out, text);
            } else {
                const auto data = generate_pairs(jd, b_n, b_m ? b_m : b_n, b_s, seed);
                MetricsRecord rec;
                if (b_method == "brute") {
                    rec = run_brute_force(jd, data, b_oracle);
                } else {
                    SignatureRunOptions so;
                    so.tp_target = b_tp;
                    so.seed = mix_seed(seed, 0x51);
                    so.oracle_queries = b_oracle;
                    rec = run_signature(b_method == "minhash" ? SchemeKind::MinHash : SchemeKind::LshHamming, jd, data, so);
                }
                emit(b_out, to_json(rec).dump(2));
            }
        } else if (*gn) {
            const auto jd = model_arg(g_model);
            const std::uint64_t seed = g_seed.get();
            const auto actual = g_eps != 0.0 ? perturb(jd, g_eps, mix_seed(seed, 0xe95)) : jd;
            const auto data = generate_pairs(actual, g_n, g_m ? g_m : g_n, g_s, seed);
            write_sequences(g_out_x, data.x, jd.alphabet_a());
            write_sequences(g_out_y, data.y, jd.alphabet_b());
            if (!g_planted.empty()) {
                std::ofstream f(g_planted);
                if (!f) throw Error(ErrorCode::Io, "cannot write " + g_planted);
                for (auto [a, b] : data.planted) f << a << ',' << b << '\n';
            }
        } else if (*ig) {
            const auto lists = read_rank_lists(in_ranks);
            std::vector<Sequence> seqs;
            for (const auto& l : lists) seqs.push_back(logrank_transform(l, in_base, in_levels));
            write_sequences(in_out, seqs, logrank_alphabet(in_levels));
        } else if (*bc) {
            std::ifstream f(bc_config);
            if (!f) throw Error(ErrorCode::Io, "cannot read " + bc_config);
            json cfg;
            try {
                cfg = json::parse(f);
            } catch (const json::exception& e) {
                throw Error(ErrorCode::InvalidArgument, std::string("config is not valid JSON: ") + e.what());
            }
            if (!cfg.contains("base_dir")) cfg["base_dir"] = fs::absolute(bc_config).parent_path().string();
            if (bc_budget >= 0.0) cfg["budget_seconds"] = bc_budget;
            const auto records = run_experiment(cfg, bc_out);
            std::cout << json{{"records", records.size()}, {"out", bc_out}}.dump() << '\n';
        }
    } catch (const BudgetExceeded& e) {
        std::cerr << "forest-dsh: " << e.what() << '\n';
        return kExitBudget;
    } catch (const Error& e) {
        std::cerr << "forest-dsh: " << e.what() << '\n';
        return e.code() == ErrorCode::NodeBudgetExceeded ? kExitBudget : kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "forest-dsh: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
