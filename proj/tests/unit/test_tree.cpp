#include <doctest.h>

#include <filesystem>

#include "helpers.hpp"

using namespace forestdsh;

namespace {

struct Built {
    JointDistribution jd;
    HashParams hp;
    ProblemDims dims;
    DecisionTree tree;
};

Built make(const JointDistribution& jd, ProblemDims dims, double c, TreeLimits limits = {}) {
    auto hp = solve_params(jd, dims);
    auto tree = build_tree(jd, hp, dims, Thresholds::linear(c, c, c), limits);
    return {jd, hp, dims, std::move(tree)};
}

std::vector<Built> sample_trees() {
    std::vector<Built> out;
    out.push_back(make(th::example1(), {5, 5, 20}, 0.8));
    out.push_back(make(th::example1(), {1000, 1000, 60}, 0.5));
    out.push_back(make(experiment_p(0.25), {1024, 1024, 1000}, 0.45));
    out.push_back(make(experiment_p(0.25), {500, 100, 1000}, 0.3));
    out.push_back(make(named_distribution("massspec4"), {2000, 2000, 400}, 0.3));
    out.push_back(make(named_distribution("massspec8"), {300, 300, 200}, 0.5));
    return out;
}

}  // namespace

TEST_CASE("accept rule on the 2x2 example with N = 5") {
    const auto b = make(th::example1(), {5, 5, 20}, 0.8);
    CHECK(b.hp.lambda == doctest::Approx(1.72).epsilon(0.003));
    const double rhs = 0.8 * std::pow(5.0, 2.0 - b.hp.lambda);
    CHECK(rhs == doctest::Approx(1.26).epsilon(0.01));
    // path (a1,b1),(a1,b1): phi/psi = (0.4 / 0.35)^2
    const double ratio = std::pow(0.4 / 0.35, 2);
    CHECK(ratio == doctest::Approx(1.31).epsilon(0.003));
    NodeId v = 0;
    for (int d = 0; d < 2; ++d) {
        const auto& n = b.tree.node(v);
        REQUIRE(n.status == NodeStatus::Internal);
        v = n.first_child + static_cast<NodeId>(b.tree.offset_for_cell(0, 0));
    }
    CHECK(b.tree.node(v).status == NodeStatus::Bucket);
    CHECK(std::exp(b.tree.node(v).log_phi - b.tree.node(v).log_psi()) == doctest::Approx(ratio));
}

TEST_CASE("single-symbol chain") {
    const auto jd = JointDistribution::from_matrix(Matrix::from_rows({{1.0}}));
    HashParams hp;
    hp.lambda = 1.5;
    hp.delta = 1.0;
    const auto tree = build_tree(jd, hp, {10, 10, 5}, Thresholds::linear(1e-3, 1e-3, 1e-3));
    REQUIRE(tree.buckets().size() == 1);
    CHECK(tree.node(tree.buckets()[0]).depth == 1);
    CHECK(family_stats(tree, 0.99).alpha == doctest::Approx(1.0));
}

TEST_CASE("construction errors") {
    const auto jd = th::example1();
    const auto hp = solve_params(jd, {5, 5, 3});
    TreeLimits lim;
    lim.max_depth = 3;
    CHECK_CODE(build_tree(jd, hp, {5, 5, 3}, Thresholds::linear(1e6, 1e-9, 1e-9), lim), ErrorCode::EmptyBucketSet);
    TreeLimits tiny;
    tiny.max_nodes = 20;
    CHECK_CODE(build_tree(jd, solve_params(jd, {10000, 10000, 100}), {10000, 10000, 100}, Thresholds::linear(1, 1e-9, 1e-9), tiny),
               ErrorCode::NodeBudgetExceeded);
}

TEST_CASE("band count formula") {
    CHECK(bands_for_target(0.5, 0.99) == 10);
    CHECK(bands_for_target(1.0, 1.0 - std::exp(-1.0)) == 1);
    CHECK(bands_for_target(1.0, 0.99) == 1);
    CHECK(bands_for_target(0.25, 0.99) == 19);
    const auto jd = th::example1();
    const auto root = make_root_bucket_tree(jd, solve_params(jd, {5, 5, 4}), {5, 5, 4});
    const auto st = family_stats(root, 0.99);
    CHECK(st.alpha == doctest::Approx(1.0));
    CHECK(st.n_bands == 1);
}

TEST_CASE("node recursion matches direct products") {
    const auto b = make(th::example1(), {1000, 1000, 60}, 0.5);
    const auto& jd = b.jd;
    for (NodeId v = 1; v < b.tree.size(); ++v) {
        const auto& n = b.tree.node(v);
        if (n.depth > 40) continue;
        const auto sa = b.tree.seq_a(v), sb = b.tree.seq_b(v);
        REQUIRE(sa.size() == n.depth);
        REQUIRE(sb.size() == n.depth);
        double phi = 1, pa = 1, pb = 1;
        for (std::size_t d = 0; d < sa.size(); ++d) {
            phi *= jd.p(sa[d], sb[d]);
            pa *= jd.pa(sa[d]);
            pb *= jd.pb(sb[d]);
        }
        CHECK(std::exp(n.log_phi) == doctest::Approx(phi).epsilon(1e-9));
        CHECK(std::exp(n.log_psi_a) == doctest::Approx(pa).epsilon(1e-9));
        CHECK(std::exp(n.log_psi_b) == doctest::Approx(pb).epsilon(1e-9));
    }
}

TEST_CASE("structural invariants on a range of trees") {
    for (const auto& b : sample_trees()) {
        const auto& t = b.tree;
        const double log_n = std::log(static_cast<double>(b.dims.n_classes));
        const double lam = b.hp.lambda, del = b.dims.delta();
        const auto& th = t.thresholds();
        double leaf_mass = 0.0;
        std::size_t leaves = 0;
        for (NodeId v = 0; v < t.size(); ++v) {
            const auto& n = t.node(v);
            if (n.status == NodeStatus::Internal) {
                CHECK(n.child_count >= 1);
                continue;
            }
            ++leaves;
            leaf_mass += std::exp(n.log_phi);
            const bool accept = n.log_phi - n.log_psi() >= th.log_c1 + (1 + del - lam) * log_n;
            const bool prune = n.log_phi - n.log_psi_a <= th.log_c2 + (1 - lam) * log_n ||
                               n.log_phi - n.log_psi_b <= th.log_c3 + (del - lam) * log_n;
            if (n.status == NodeStatus::Bucket) {
                CHECK(accept);
            } else if (n.depth < t.effective_max_depth()) {
                CHECK(!accept);
                CHECK(prune);
            }
        }
        CHECK(t.size() <= 2 * leaves);
        bool zero_cells = t.model().support().size() < t.model().k() * t.model().l();
        if (!zero_cells) CHECK(leaf_mass == doctest::Approx(1.0).epsilon(1e-6));
        // no bucket is an ancestor of another: walk each bucket's ancestors
        std::vector<char> is_bucket(t.size(), 0);
        for (NodeId v : t.buckets()) is_bucket[v] = 1;
        for (NodeId v : t.buckets()) {
            for (NodeId u = t.node(v).parent; u != kNoNode; u = t.node(u).parent) CHECK(!is_bucket[u]);
        }
        const auto st = family_stats(t, 0.99);
        CHECK(st.alpha <= std::min(st.gamma_a, st.gamma_b) + 1e-12);
        CHECK(st.predicted_tp >= 0.99);
        CHECK(lower_bound_log_quantity(st, b.hp) <= std::log1p(1e-6));
    }
}

TEST_CASE("family sums match the bucket lists") {
    const auto b = make(experiment_p(0.25), {1024, 1024, 1000}, 0.45);
    double a = 0, be = 0, ga = 0, gb = 0;
    for (NodeId v : b.tree.buckets()) {
        const auto& n = b.tree.node(v);
        a += std::exp(n.log_phi);
        be += std::exp(n.log_psi());
        ga += std::exp(n.log_psi_a);
        gb += std::exp(n.log_psi_b);
    }
    const auto st = family_stats(b.tree, 0.99);
    CHECK(st.alpha == doctest::Approx(a).epsilon(1e-9));
    CHECK(st.beta == doctest::Approx(be).epsilon(1e-9));
    CHECK(st.gamma_a == doctest::Approx(ga).epsilon(1e-9));
    CHECK(st.gamma_b == doctest::Approx(gb).epsilon(1e-9));
    CHECK(st.n_bands == static_cast<std::uint64_t>(std::ceil(std::log(100.0) / a)));
}

TEST_CASE("Monte-Carlo family estimates") {
    const auto jd = th::example1();
    const auto root = make_root_bucket_tree(jd, solve_params(jd, {5, 5, 4}), {5, 5, 4});
    const auto r = estimate_family_stats(root, 1000, 1);
    CHECK(r.alpha == 1.0);
    CHECK(r.beta == 1.0);
    CHECK(r.gamma_a == 1.0);
    CHECK(r.gamma_b == 1.0);
    for (const auto& b : {make(th::example1(), {1000, 1000, 60}, 0.5), make(experiment_p(0.25), {1024, 1024, 1000}, 0.45)}) {
        const auto st = family_stats(b.tree, 0.99);
        const auto e = estimate_family_stats(b.tree, 100000, 9);
        CHECK(std::abs(e.alpha - st.alpha) <= 3 * e.se_alpha);
        CHECK(std::abs(e.beta - st.beta) <= 3 * e.se_beta);
        CHECK(std::abs(e.gamma_a - st.gamma_a) <= 3 * e.se_gamma_a);
        CHECK(std::abs(e.gamma_b - st.gamma_b) <= 3 * e.se_gamma_b);
    }
}

TEST_CASE("occupancy estimators") {
    const std::vector<Occupancy> occ{{2, 2}, {1, 2}, {2, 1}, {1, 1}, {1, 1}, {1, 1}};
    const auto e = occupancy_estimates(occ, 6, 7);
    CHECK(e.beta == doctest::Approx(11.0 / 42.0));
    CHECK(e.gamma_a == doctest::Approx(8.0 / 6.0));
    CHECK(e.gamma_b == doctest::Approx(8.0 / 7.0));
}

TEST_CASE("cost model") {
    FamilyStats st;
    st.alpha = st.beta = st.gamma_a = st.gamma_b = 1.0;
    st.tp_target = 1.0 - std::exp(-1.0);
    st.n_bands = 1;
    const ProblemDims d{10, 10, 1};
    const auto r = complexity_report(1, st, d);
    CHECK(r.total == doctest::Approx(141.0));
    CostModel c2;
    c2.c_pos = 2.0;
    const auto r2 = complexity_report(1, st, d, c2);
    CHECK(r2.positive_term == doctest::Approx(2 * r.positive_term));
    CHECK(r2.hash_term == doctest::Approx(r.hash_term));
    CHECK(r2.insertion_term == doctest::Approx(r.insertion_term));
    CHECK(r2.total - r.total == doctest::Approx(100.0));
}

TEST_CASE("tree save and load") {
    const auto b = make(experiment_p(0.25), {256, 256, 300}, 0.45);
    const auto path = std::filesystem::temp_directory_path() / "forestdsh_tree_test.bin";
    b.tree.save(path);
    const auto back = DecisionTree::load(path);
    CHECK(back.fingerprint() == b.tree.fingerprint());
    CHECK(back.size() == b.tree.size());
    CHECK(back.buckets() == b.tree.buckets());
    CHECK(back.params().lambda == b.hp.lambda);
    std::filesystem::remove(path);
}

TEST_CASE("explicit bucket paths") {
    const auto jd = th::example1();
    const auto hp = solve_params(jd, {5, 5, 3});
    using Path = std::vector<std::pair<Symbol, Symbol>>;
    const std::vector<Path> nested{{{0, 0}}, {{0, 0}, {1, 1}}};
    CHECK_CODE(make_tree_from_paths(jd, hp, {5, 5, 3}, nested), ErrorCode::InvalidArgument);
    const auto p1 = th::p1();
    const std::vector<Path> zero{{{0, 1}}};
    CHECK_CODE(make_tree_from_paths(p1, hp, {5, 5, 3}, zero), ErrorCode::InvalidArgument);
}
