#include <doctest.h>

#include "helpers.hpp"

using namespace forestdsh;

namespace {

std::vector<PointId> hit_ids(const SearchResult& r) {
    std::vector<PointId> out;
    for (const auto& h : r.hits) out.push_back(h.id);
    return out;
}

}  // namespace

TEST_CASE("root bucket search is a full scan") {
    const auto jd = th::example1();
    const ProblemDims dims{50, 20, 12};
    const auto t = make_root_bucket_tree(jd, solve_params(jd, dims), dims);
    const auto data = generate_pairs(jd, 50, 20, 12, 1);
    const auto idx = BandIndex::build(t, BandSet(3, 12, 2), data.x);
    QueryEngine engine(t, idx);
    for (const double delta : {0.0, 1e-4, 1e-3}) {
        for (const auto& y : data.y) {
            const auto r = engine.search(y, {delta});
            const auto b = brute_force(data.x, y, jd, delta);
            CHECK(r.hits == b.hits);
            CHECK(r.candidates_checked == 50);
            CHECK(r.raw_positives == 150);
        }
    }
    for (const auto& y : data.y) {
        const auto top = engine.search_top1(y);
        REQUIRE(top);
        CHECK(top->id == brute_force_top1(data.x, y, jd));
    }
}

TEST_CASE("threshold one reports nothing") {
    const auto jd = th::example1();
    const ProblemDims dims{50, 5, 12};
    const auto t = make_root_bucket_tree(jd, solve_params(jd, dims), dims);
    const auto data = generate_pairs(jd, 50, 5, 12, 1);
    const auto idx = BandIndex::build(t, BandSet(1, 12, 2), data.x);
    QueryEngine engine(t, idx);
    for (const auto& y : data.y) {
        const auto r = engine.search(y, {1.0});
        CHECK(r.hits.empty());
        CHECK(r.candidates_checked == 50);
    }
    CHECK_CODE(engine.search(data.y[0], {1.5}), ErrorCode::InvalidArgument);
    CHECK_CODE(engine.search(Sequence{0, 1}), ErrorCode::LengthMismatch);
    CHECK_CODE(engine.search(Sequence(12, 7)), ErrorCode::SymbolOutOfAlphabet);
}

TEST_CASE("single class database and missing collisions") {
    const auto jd = th::example1();
    using Path = std::vector<std::pair<Symbol, Symbol>>;
    const std::vector<Path> paths{{{0, 0}, {0, 1}}, {{0, 1}, {0, 0}, {1, 1}}, {{0, 1}, {0, 0}, {0, 0}},
                                  {{1, 0}},         {{1, 1}, {0, 0}},         {{0, 0}, {1, 1}}};
    const auto t = make_tree_from_paths(jd, solve_params(jd, {5, 5, 3}), {5, 5, 3}, paths);
    const auto idx = BandIndex::build(t, BandSet::identity(1, 3), {Sequence{1, 0, 0}});
    QueryEngine engine(t, idx);
    const auto hit = engine.search_top1(Sequence{0, 0, 0});
    REQUIRE(hit);
    CHECK(hit->id == 0);
    CHECK(!engine.search_top1(Sequence{1, 1, 1}));
    CHECK_CODE(search_top1_or_throw(engine, Sequence{1, 1, 1}), ErrorCode::NoCandidate);
}

TEST_CASE("hits are sound and a subset of brute force") {
    const auto jd = experiment_p(0.25);
    const ProblemDims dims{400, 60, 300};
    const auto t = build_tree(jd, solve_params(jd, dims), dims, Thresholds::linear(0.45, 0.45, 0.45));
    const auto data = generate_pairs(jd, 400, 60, 300, 3);
    const auto idx = BandIndex::build(t, BandSet(family_stats(t, 0.99).n_bands, 300, 5), data.x);
    QueryEngine engine(t, idx);
    const double delta = std::exp(-180.0);
    for (const auto& y : data.y) {
        const auto r = engine.search(y, {delta});
        const auto b = brute_force(data.x, y, jd, delta);
        for (const auto& h : r.hits) {
            CHECK(h.log_likelihood > std::log(delta));
            CHECK(log_likelihood(jd, data.x[h.id], y) == h.log_likelihood);
        }
        const auto got = hit_ids(r), all = hit_ids(b);
        CHECK(std::includes(all.begin(), all.end(), got.begin(), got.end()));
        CHECK(r.candidates_checked >= r.hits.size());
        CHECK(r.raw_positives >= r.candidates_checked);
    }
}

TEST_CASE("planted partners are found at the target recall") {
    const auto jd = th::p1();
    const ProblemDims dims{2000, 2000, 400};
    const auto hp = solve_params(jd, dims);
    const auto t = build_tree(jd, hp, dims, Thresholds::linear(0.45, 0.45, 0.45));
    const auto data = generate_pairs(jd, 2000, 2000, 400, 12);
    const auto idx = BandIndex::build(t, BandSet(family_stats(t, 0.99).n_bands, 400, 13), data.x);
    SearchOptions so;
    so.delta = 0.0;
    const auto results = search_batch(t, idx, data.y, so);
    std::size_t found = 0, top_agree = 0;
    QueryEngine engine(t, idx);
    for (std::size_t q = 0; q < results.size(); ++q) {
        const auto ids = hit_ids(results[q]);
        found += std::binary_search(ids.begin(), ids.end(), static_cast<PointId>(q));
        if (q < 100) {
            const auto top = engine.search_top1(data.y[q]);
            top_agree += top && top->id == brute_force_top1(data.x, data.y[q], jd);
        }
    }
    CHECK(found >= 0.98 * 2000);
    CHECK(top_agree >= 95);
}

TEST_CASE("recall and positives follow the family statistics") {
    const auto jd = experiment_p(0.25);
    const ProblemDims dims{1000, 1000, 500};
    const auto t = build_tree(jd, solve_params(jd, dims), dims, Thresholds::linear(0.45, 0.45, 0.45));
    const auto st = family_stats(t, 0.99);
    const auto data = generate_pairs(jd, 1000, 1000, 500, 30);
    const auto idx = BandIndex::build(t, BandSet(16, 500, 31), data.x);
    QueryEngine engine(t, idx);
    for (std::size_t bands : {1, 2, 4, 8, 16}) {
        SearchOptions so;
        so.keep_candidates = true;
        so.score = false;
        so.band_limit = bands;
        std::size_t found = 0;
        std::vector<double> raw;
        for (std::size_t q = 0; q < data.y.size(); ++q) {
            const auto r = engine.search(data.y[q], so);
            found += std::binary_search(r.candidates.begin(), r.candidates.end(), static_cast<PointId>(q));
            // the planted partner is not independent of y; count independent positives only
            std::uint64_t own = 0;
            for (std::size_t z = 0; z < bands; ++z) {
                for (NodeId v : assign_side(t, idx.bands(), z, Side::A, data.x[q])) {
                    const auto hb = assign_side(t, idx.bands(), z, Side::B, data.y[q]);
                    own += std::binary_search(hb.begin(), hb.end(), v);
                }
            }
            raw.push_back(static_cast<double>(r.raw_positives - own));
        }
        const double predicted = 1.0 - std::pow(1.0 - st.alpha, static_cast<double>(bands));
        const double recall = found / 1000.0;
        CAPTURE(bands);
        CHECK(std::abs(recall - predicted) <= 3 * th::binomial_se(predicted, 1000));
        double mean = 0, var = 0;
        for (double v : raw) mean += v;
        mean /= raw.size();
        for (double v : raw) var += (v - mean) * (v - mean);
        var /= raw.size() - 1;
        const double expect = bands * 999.0 * st.beta;
        CHECK(std::abs(mean - expect) <= 3 * std::sqrt(var / raw.size()));
    }
}

TEST_CASE("batch search matches sequential search on several threads") {
    const auto jd = experiment_p(0.25);
    const ProblemDims dims{300, 40, 200};
    const auto t = build_tree(jd, solve_params(jd, dims), dims, Thresholds::linear(0.45, 0.45, 0.45));
    const auto data = generate_pairs(jd, 300, 40, 200, 3);
    const auto idx = BandIndex::build(t, BandSet(10, 200, 5), data.x);
    const auto one = search_batch(t, idx, data.y, {}, 1);
    const auto many = search_batch(t, idx, data.y, {}, 4);
    REQUIRE(one.size() == many.size());
    for (std::size_t q = 0; q < one.size(); ++q) {
        CHECK(one[q].hits == many[q].hits);
        CHECK(one[q].raw_positives == many[q].raw_positives);
        CHECK(one[q].query_id == q);
    }
    CHECK(to_json_line(one[0]).find("\"hits\"") != std::string::npos);
}
