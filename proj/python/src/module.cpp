#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <memory>

#include "forestdsh/bench.hpp"

namespace py = pybind11;
using namespace forestdsh;

namespace {

py::dict params_dict(const HashParams& hp) {
    py::dict d;
    d["mu"] = hp.mu;
    d["nu"] = hp.nu;
    d["eta"] = hp.eta;
    d["lambda"] = hp.lambda;
    d["delta"] = hp.delta;
    d["log_p0"] = hp.log_p0;
    d["log_q0"] = hp.log_q0;
    d["n_star"] = hp.n_star;
    d["residual"] = hp.residual;
    d["r_star"] = hp.r_star.to_rows();
    return d;
}

py::dict stats_dict(const FamilyStats& st) {
    py::dict d;
    d["alpha"] = st.alpha;
    d["beta"] = st.beta;
    d["gamma_a"] = st.gamma_a;
    d["gamma_b"] = st.gamma_b;
    d["n_bands"] = st.n_bands;
    d["predicted_tp"] = st.predicted_tp;
    return d;
}

py::object json_to_py(const nlohmann::json& j) {
    return py::module_::import("json").attr("loads")(j.dump());
}

// keeps the tree alive for as long as the index that was built from it
struct Searcher {
    std::shared_ptr<const DecisionTree> tree;
    std::shared_ptr<const BandIndex> index;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Forest distribution sensitive hashing";

    py::register_exception<Error>(m, "ForestDSHError", PyExc_ValueError);
    py::register_exception<BudgetExceeded>(m, "BudgetExceeded", PyExc_TimeoutError);

    py::class_<JointDistribution>(m, "JointDistribution")
        .def_static("from_matrix", [](const std::vector<std::vector<double>>& p) {
            return JointDistribution::from_matrix(Matrix::from_rows(p));
        })
        .def_static("from_weights", [](const std::vector<std::vector<double>>& w) {
            return JointDistribution::from_weights(Matrix::from_rows(w));
        })
        .def_static("named", &named_distribution)
        .def_static("load", &load_model)
        .def("save", [](const JointDistribution& jd, const std::filesystem::path& path) { save_model(jd, path); })
        .def_property_readonly("k", &JointDistribution::k)
        .def_property_readonly("l", &JointDistribution::l)
        .def_property_readonly("p", [](const JointDistribution& jd) { return jd.p_matrix().to_rows(); })
        .def_property_readonly("pa", &JointDistribution::pa_vector)
        .def_property_readonly("pb", &JointDistribution::pb_vector);

    m.def("experiment_p", &experiment_p, py::arg("t"));
    m.def("hamming_distribution", &hamming_distribution, py::arg("p"));
    m.def("perturb", &perturb, py::arg("jd"), py::arg("epsilon"), py::arg("seed") = 0, py::arg("max_attempts") = 100);

    m.def(
        "solve_params",
        [](const JointDistribution& jd, std::uint64_t n, std::uint64_t mq, std::uint64_t seq_len) {
            return params_dict(solve_params(jd, ProblemDims{n, mq ? mq : n, seq_len}));
        },
        py::arg("jd"), py::arg("n"), py::arg("m") = 0, py::arg("seq_len") = 1);

    py::class_<DecisionTree, std::shared_ptr<DecisionTree>>(m, "DecisionTree")
        .def_property_readonly("size", &DecisionTree::size)
        .def_property_readonly("n_buckets", [](const DecisionTree& t) { return t.buckets().size(); })
        .def_property_readonly("max_bucket_depth", &DecisionTree::max_bucket_depth)
        .def_property_readonly("lambda_", [](const DecisionTree& t) { return t.params().lambda; })
        .def("family_stats", [](const DecisionTree& t, double tp) { return stats_dict(family_stats(t, tp)); },
             py::arg("tp_target") = 0.99)
        .def("summary", [](const DecisionTree& t, double tp) {
            return json_to_py(nlohmann::json::parse(tree_summary_json(t, family_stats(t, tp))));
        }, py::arg("tp_target") = 0.99)
        .def("save", &DecisionTree::save)
        .def_static("load", [](const std::filesystem::path& p) {
            return std::make_shared<DecisionTree>(DecisionTree::load(p));
        });

    m.def(
        "build_tree",
        [](const JointDistribution& jd, std::uint64_t n, std::uint64_t mq, std::uint64_t seq_len,
           std::vector<double> c, std::size_t max_nodes) {
            const ProblemDims dims{n, mq ? mq : n, seq_len};
            const HashParams hp = solve_params(jd, dims);
            if (c.size() == 1) c = {c[0], c[0], c[0]};
            if (!c.empty() && c.size() != 3) throw Error(ErrorCode::InvalidArgument, "c takes 1 or 3 values");
            const Thresholds th = c.empty() ? Thresholds::from_params(hp) : Thresholds::linear(c[0], c[1], c[2]);
            TreeLimits lim;
            lim.max_nodes = max_nodes;
            return std::make_shared<DecisionTree>(build_tree(jd, hp, dims, th, lim));
        },
        py::arg("jd"), py::arg("n"), py::arg("m") = 0, py::arg("seq_len") = 1000,
        py::arg("c") = std::vector<double>{}, py::arg("max_nodes") = TreeLimits{}.max_nodes);

    m.def(
        "generate_pairs",
        [](const JointDistribution& jd, std::size_t n, std::size_t mq, std::size_t seq_len, std::uint64_t seed) {
            PairedDataset ds = generate_pairs(jd, n, mq ? mq : n, seq_len, seed);
            py::dict d;
            d["x"] = ds.x;
            d["y"] = ds.y;
            d["planted"] = ds.planted;
            return d;
        },
        py::arg("jd"), py::arg("n"), py::arg("m") = 0, py::arg("seq_len") = 1000, py::arg("seed") = 0);

    py::class_<Searcher>(m, "Index")
        .def(py::init([](std::shared_ptr<DecisionTree> tree, std::vector<Sequence> points, std::size_t n_bands,
                         double tp_target, std::uint64_t seed) {
                 const std::size_t s = points.empty() ? tree->dims().seq_len : points.front().size();
                 if (n_bands == 0) n_bands = family_stats(*tree, tp_target).n_bands;
                 auto index = std::make_shared<BandIndex>(
                     BandIndex::build(*tree, BandSet(n_bands, s, seed), std::move(points)));
                 return Searcher{tree, index};
             }),
             py::arg("tree"), py::arg("points"), py::arg("n_bands") = 0, py::arg("tp_target") = 0.99,
             py::arg("seed") = 0)
        .def_property_readonly("n_bands", [](const Searcher& s) { return s.index->bands().n_bands(); })
        .def_property_readonly("total_insertions", [](const Searcher& s) { return s.index->total_insertions(); })
        .def(
            "search",
            [](const Searcher& s, const std::vector<Sequence>& queries, double delta) {
                SearchOptions opt;
                opt.delta = delta;
                py::list out;
                for (const auto& r : search_batch(*s.tree, *s.index, queries, opt)) {
                    out.append(json_to_py(nlohmann::json::parse(to_json_line(r))));
                }
                return out;
            },
            py::arg("queries"), py::arg("delta") = 0.0)
        .def("top1", [](const Searcher& s, const Sequence& y) -> py::object {
            QueryEngine engine(*s.tree, *s.index);
            const auto hit = engine.search_top1(y);
            if (!hit) return py::none();
            return py::make_tuple(hit->id, hit->log_likelihood);
        });

    m.def("brute_force_top1", [](const std::vector<Sequence>& x, const Sequence& y, const JointDistribution& jd) {
        return brute_force_top1(x, y, jd);
    });
    m.def("minhash_exponent", &minhash_exponent);
    m.def("lsh_hamming_exponent", &lsh_hamming_exponent);
    m.def(
        "dubiner_estimate",
        [](double p, std::uint64_t n, std::size_t seq_len, std::size_t trials, std::uint64_t seed) {
            const DubinerEstimate e = dubiner_hamming_estimate(p, n, seq_len, trials, seed);
            py::dict d;
            d["exponent"] = e.exponent;
            d["standard_error"] = e.standard_error;
            d["d0"] = e.d0;
            d["p1"] = e.p1;
            d["p2"] = e.p2;
            return d;
        },
        py::arg("p"), py::arg("n"), py::arg("seq_len"), py::arg("trials") = 10000, py::arg("seed") = 0);
    m.def("mips_dot", [](const JointDistribution& jd, const Sequence& x, const Sequence& y) {
        const MipsEmbedding emb(jd);
        return sparse_dot(emb.embed_a(x), emb.embed_b(y));
    });
    m.def("log_likelihood_ratio", [](const JointDistribution& jd, const Sequence& x, const Sequence& y) {
        return log_likelihood_ratio(jd, x, y);
    });

    m.def(
        "run_experiment",
        [](const std::string& config_json, const std::filesystem::path& out_dir) {
            const auto cfg = nlohmann::json::parse(config_json);
            py::list out;
            for (const auto& r : run_experiment(cfg, out_dir)) out.append(json_to_py(to_json(r)));
            return out;
        },
        py::arg("config_json"), py::arg("out_dir"));
}
