#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iterator>

#include "helpers.hpp"

using namespace forestdsh;

namespace {

using Path = std::vector<std::pair<Symbol, Symbol>>;

const std::vector<Path> kThreePaths = {
    {{0, 0}, {0, 1}},          // v1
    {{0, 1}, {0, 0}, {1, 1}},  // v2
    {{0, 1}, {0, 0}, {0, 0}},  // v3
    {{1, 0}},                  // v4
    {{1, 1}, {0, 0}},          // v5
    {{0, 0}, {1, 1}},          // v6
};

DecisionTree three_path_tree() {
    const auto jd = th::example1();
    return make_tree_from_paths(jd, solve_params(jd, {5, 5, 3}), {5, 5, 3}, kThreePaths);
}

// bucket id of the i-th path
NodeId bucket_of(const DecisionTree& t, std::size_t i) {
    for (NodeId v : t.buckets()) {
        const auto a = t.seq_a(v), b = t.seq_b(v);
        if (a.size() != kThreePaths[i].size()) continue;
        bool same = true;
        for (std::size_t d = 0; d < a.size(); ++d) same &= a[d] == kThreePaths[i][d].first && b[d] == kThreePaths[i][d].second;
        if (same) return v;
    }
    return kNoNode;
}

std::vector<NodeId> sorted(std::vector<NodeId> v) {
    std::sort(v.begin(), v.end());
    return v;
}

std::string file_bytes(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), {}};
}

}  // namespace

TEST_CASE("three-path point mapping") {
    const auto t = three_path_tree();
    REQUIRE(t.buckets().size() == 6);
    const auto bands = BandSet::identity(1, 3);
    const Sequence x000{0, 0, 0}, x001{0, 0, 1};
    CHECK(assign_a(t, bands, x000)[0] == sorted({bucket_of(t, 0), bucket_of(t, 2)}));
    CHECK(assign_a(t, bands, x001)[0] == sorted({bucket_of(t, 0), bucket_of(t, 1)}));
}

TEST_CASE("three-path index") {
    const auto t = three_path_tree();
    const auto idx = BandIndex::build(t, BandSet::identity(1, 3), {Sequence{0, 0, 0}, Sequence{0, 0, 1}});
    auto ids = [&](std::size_t i) {
        const auto s = idx.lookup(bucket_of(t, i), 0);
        return std::vector<PointId>(s.begin(), s.end());
    };
    CHECK(ids(0) == std::vector<PointId>{0, 1});
    CHECK(ids(1) == std::vector<PointId>{1});
    CHECK(ids(2) == std::vector<PointId>{0});
    CHECK(ids(3).empty());
    CHECK(idx.total_insertions() == 4);
    const auto empty = BandIndex::build(t, BandSet::identity(2, 3), {});
    CHECK(empty.n_points() == 0);
    CHECK(empty.total_insertions() == 0);
}

TEST_CASE("root bucket matches everything") {
    const auto jd = th::example1();
    const auto t = make_root_bucket_tree(jd, solve_params(jd, {5, 5, 4}), {5, 5, 4});
    const BandSet bands(3, 4, 1);
    auto rng = make_rng(2);
    for (int i = 0; i < 10; ++i) {
        const auto x = th::random_seq(rng, 4, 2);
        for (const auto& per_band : assign_a(t, bands, x)) CHECK(per_band == std::vector<NodeId>{0});
        for (const auto& per_band : assign_b(t, bands, x)) CHECK(per_band == std::vector<NodeId>{0});
    }
    const auto idx = BandIndex::build(t, bands, {Sequence{0, 1, 0, 1}, Sequence{1, 1, 1, 1}});
    for (std::size_t z = 0; z < 3; ++z) CHECK(idx.lookup(0, z).size() == 2);
}

TEST_CASE("forced path on a single-symbol alphabet") {
    const auto jd = JointDistribution::from_matrix(Matrix::from_rows({{1.0}}));
    HashParams hp;
    const std::vector<Path> paths{{{0, 0}, {0, 0}}};
    const auto t = make_tree_from_paths(jd, hp, {5, 5, 3}, paths);
    const auto got = assign_b(t, BandSet(2, 3, 4), Sequence{0, 0, 0});
    REQUIRE(t.buckets().size() == 1);
    for (const auto& g : got) CHECK(g == t.buckets());
}

TEST_CASE("length mismatch") {
    const auto t = three_path_tree();
    CHECK_CODE(assign_a(t, BandSet(1, 3, 0), Sequence{0, 0}), ErrorCode::LengthMismatch);
    CHECK_CODE(BandIndex::build(t, BandSet(1, 3, 0), {Sequence{0, 0, 0}, Sequence{0}}), ErrorCode::LengthMismatch);
    // sequences shorter than the deepest bucket
    CHECK_CODE(assign_a(t, BandSet(1, 2, 0), Sequence{0, 0}), ErrorCode::LengthMismatch);
}

TEST_CASE("band permutations") {
    const BandSet a(5, 50, 17), b(5, 50, 17), c(5, 50, 18);
    for (std::size_t z = 0; z < 5; ++z) {
        auto p = a.permutation(z);
        CHECK(p == b.permutation(z));
        std::sort(p.begin(), p.end());
        for (std::uint32_t i = 0; i < 50; ++i) CHECK(p[i] == i);
    }
    CHECK(a.permutation(0) != c.permutation(0));
    CHECK(a.prefix(2).permutation(1) == a.permutation(1));
    CHECK_CODE(BandSet::from_permutations({{0, 0, 1}}, 0), ErrorCode::InvalidArgument);
}

TEST_CASE("prefix traversal equals brute-force prefix testing") {
    auto rng = make_rng(21);
    for (int trial = 0; trial < 15; ++trial) {
        const std::size_t seq_len = 80;
        const auto t = th::random_tree(rng, seq_len, 1000);
        if (t.max_bucket_depth() > seq_len) continue;
        const BandSet bands(2, seq_len, trial);
        for (int i = 0; i < 60; ++i) {
            const auto x = th::random_seq(rng, seq_len, t.model().k());
            const auto y = th::random_seq(rng, seq_len, t.model().l());
            for (std::size_t z = 0; z < 2; ++z) {
                const auto ha = assign_side(t, bands, z, Side::A, x);
                const auto hb = assign_side(t, bands, z, Side::B, y);
                CHECK(ha == assign_brute_force(t, bands, z, Side::A, x));
                CHECK(hb == assign_brute_force(t, bands, z, Side::B, y));
                std::vector<NodeId> both;
                std::set_intersection(ha.begin(), ha.end(), hb.begin(), hb.end(), std::back_inserter(both));
                CHECK(both.size() <= 1);
            }
        }
    }
}

TEST_CASE("membership frequency matches psi") {
    const auto jd = experiment_p(0.25);
    const ProblemDims dims{1024, 1024, 200};
    const auto t = build_tree(jd, solve_params(jd, dims), dims, Thresholds::linear(0.45, 0.45, 0.45));
    std::vector<NodeId> top(t.buckets());
    std::sort(top.begin(), top.end(), [&](NodeId a, NodeId b) { return t.node(a).log_psi_b > t.node(b).log_psi_b; });
    top.resize(std::min<std::size_t>(top.size(), 5));
    const auto bands = BandSet::identity(1, dims.seq_len);
    auto rng = make_rng(8);
    const Categorical cat_b(jd.pb_vector()), cat_a(jd.pa_vector());
    const std::size_t n = 40000;
    std::vector<std::size_t> hits_b(top.size()), hits_a(top.size());
    Sequence s(dims.seq_len);
    for (std::size_t i = 0; i < n; ++i) {
        for (auto& v : s) v = static_cast<Symbol>(cat_b(rng));
        const auto hb = assign_side(t, bands, 0, Side::B, s);
        for (auto& v : s) v = static_cast<Symbol>(cat_a(rng));
        const auto ha = assign_side(t, bands, 0, Side::A, s);
        for (std::size_t k = 0; k < top.size(); ++k) {
            hits_b[k] += std::binary_search(hb.begin(), hb.end(), top[k]);
            hits_a[k] += std::binary_search(ha.begin(), ha.end(), top[k]);
        }
    }
    for (std::size_t k = 0; k < top.size(); ++k) {
        const double pb = std::exp(t.node(top[k]).log_psi_b), pa = std::exp(t.node(top[k]).log_psi_a);
        CHECK(std::abs(hits_b[k] / double(n) - pb) <= 3 * th::binomial_se(pb, n));
        CHECK(std::abs(hits_a[k] / double(n) - pa) <= 3 * th::binomial_se(pa, n));
    }
}

TEST_CASE("index bytes are deterministic and independent of threads") {
    const auto jd = experiment_p(0.25);
    const ProblemDims dims{512, 512, 300};
    const auto t = build_tree(jd, solve_params(jd, dims), dims, Thresholds::linear(0.45, 0.45, 0.45));
    const auto data = generate_pairs(jd, 300, 10, dims.seq_len, 4);
    const BandSet bands(7, dims.seq_len, 99);
    const auto dir = std::filesystem::temp_directory_path();
    BandIndex::build(t, bands, data.x, 1).save(dir / "fdsh_idx_a.bin");
    BandIndex::build(t, bands, data.x, 1).save(dir / "fdsh_idx_b.bin");
    BandIndex::build(t, bands, data.x, 3).save(dir / "fdsh_idx_c.bin");
    const auto a = file_bytes(dir / "fdsh_idx_a.bin");
    CHECK(!a.empty());
    CHECK(a == file_bytes(dir / "fdsh_idx_b.bin"));
    CHECK(a == file_bytes(dir / "fdsh_idx_c.bin"));
    const auto back = BandIndex::load(dir / "fdsh_idx_a.bin");
    CHECK(back.total_insertions() == BandIndex::build(t, bands, data.x).total_insertions());
    back.check_tree(t);
    const auto other = build_tree(jd, solve_params(jd, dims), dims, Thresholds::linear(0.3, 0.3, 0.3));
    CHECK_CODE(back.check_tree(other), ErrorCode::InvalidArgument);
    for (const char* f : {"fdsh_idx_a.bin", "fdsh_idx_b.bin", "fdsh_idx_c.bin"}) std::filesystem::remove(dir / f);
}

TEST_CASE("index lookups agree with per-point assignment") {
    const auto jd = th::example1();
    const ProblemDims dims{200, 200, 40};
    const auto t = build_tree(jd, solve_params(jd, dims), dims, Thresholds::linear(0.5, 0.5, 0.5));
    const auto data = generate_pairs(jd, 200, 1, dims.seq_len, 6);
    const BandSet bands(4, dims.seq_len, 3);
    const auto idx = BandIndex::build(t, bands, data.x);
    for (std::size_t z = 0; z < 4; ++z) {
        std::vector<std::vector<PointId>> expect(t.size());
        for (PointId i = 0; i < data.x.size(); ++i)
            for (NodeId v : assign_side(t, bands, z, Side::A, data.x[i])) expect[v].push_back(i);
        for (NodeId v : t.buckets()) {
            const auto s = idx.lookup(v, z);
            CHECK(std::vector<PointId>(s.begin(), s.end()) == expect[v]);
        }
    }
}
