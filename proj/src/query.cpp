#include "forestdsh/query.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include <json.hpp>

namespace forestdsh {

QueryEngine::QueryEngine(const DecisionTree& tree, const BandIndex& index) : tree_(tree), index_(index) {
    index.check_tree(tree);
    stamp_.assign(index.n_points(), 0);
}

template <class OnCandidate>
void QueryEngine::collide(std::span<const Symbol> y, std::size_t band_limit, SearchResult& r,
                         OnCandidate&& on_candidate) {
    const BandSet& bands = index_.bands();
    if (y.size() != bands.seq_len()) {
        throw Error(ErrorCode::LengthMismatch, "query length " + std::to_string(y.size()) +
                                                   " does not match indexed length " +
                                                   std::to_string(bands.seq_len()));
    }
    const std::size_t l = tree_.model().l();
    for (Symbol s : y) {
        if (s >= l) throw Error(ErrorCode::SymbolOutOfAlphabet, "query symbol outside the B alphabet");
    }
    if (++epoch_ == 0) {
        std::fill(stamp_.begin(), stamp_.end(), 0);
        epoch_ = 1;
    }
    const std::size_t n_bands = band_limit == 0 ? bands.n_bands() : std::min(band_limit, bands.n_bands());
    r.per_band_collisions.assign(n_bands, 0);
    for (std::size_t z = 0; z < n_bands; ++z) {
        const auto& perm = bands.permutation(z);
        scratch_.clear();
        tree_.visit_buckets(Side::B, y.size(), [&](std::size_t d) { return y[perm[d]]; },
                            [&](NodeId v) { scratch_.push_back(v); });
        r.query_insertions += scratch_.size();
        for (NodeId v : scratch_) {
            const auto ids = index_.lookup(v, z);
            r.per_band_collisions[z] += ids.size();
            for (PointId id : ids) {
                if (stamp_[id] != epoch_) {
                    stamp_[id] = epoch_;
                    ++r.candidates_checked;
                    on_candidate(id);
                }
            }
        }
        r.raw_positives += r.per_band_collisions[z];
    }
}

SearchResult QueryEngine::search(std::span<const Symbol> y, const SearchOptions& options) {
    if (!(options.delta >= 0.0 && options.delta <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "delta must lie in [0, 1]");
    }
    const double log_delta = options.delta == 0.0 ? -std::numeric_limits<double>::infinity() : std::log(options.delta);
    SearchResult r;
    const auto& jd = tree_.model();
    const auto& points = index_.points();
    collide(y, options.band_limit, r, [&](PointId id) {
        if (options.keep_candidates) r.candidates.push_back(id);
        if (!options.score) return;
        const double ll = log_likelihood(jd, points[id], y);
        if (ll > log_delta) r.hits.push_back({id, ll});
    });
    std::sort(r.hits.begin(), r.hits.end(), [](const Hit& a, const Hit& b) { return a.id < b.id; });
    std::sort(r.candidates.begin(), r.candidates.end());
    return r;
}

std::optional<Hit> QueryEngine::search_top1(std::span<const Symbol> y) {
    SearchResult r;
    std::optional<Hit> best;
    const auto& jd = tree_.model();
    const auto& points = index_.points();
    collide(y, 0, r, [&](PointId id) {
        const double ll = log_likelihood(jd, points[id], y);
        if (!best || ll > best->log_likelihood || (ll == best->log_likelihood && id < best->id)) {
            best = Hit{id, ll};
        }
    });
    return best;
}

Hit search_top1_or_throw(QueryEngine& engine, std::span<const Symbol> y) {
    auto hit = engine.search_top1(y);
    if (!hit) {
        throw Error(ErrorCode::NoCandidate, "query collided with no indexed point");
    }
    return *hit;
}

std::vector<SearchResult> search_batch(const DecisionTree& tree, const BandIndex& index,
                                       std::span<const Sequence> queries, const SearchOptions& options,
                                       unsigned n_threads) {
    std::vector<SearchResult> out(queries.size());
    const unsigned workers = std::max(1u, std::min<unsigned>(n_threads, static_cast<unsigned>(queries.size())));
    auto run = [&](unsigned w) {
        QueryEngine engine(tree, index);
        for (std::size_t q = w; q < queries.size(); q += workers) {
            out[q] = engine.search(queries[q], options);
            out[q].query_id = q;
        }
    };
    if (workers == 1) {
        run(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run, w);
        for (auto& th : pool) th.join();
    }
    return out;
}

std::string to_json_line(const SearchResult& r) {
    nlohmann::json j;
    j["query"] = r.query_id;
    auto hits = nlohmann::json::array();
    for (const auto& h : r.hits) hits.push_back({{"id", h.id}, {"log_likelihood", h.log_likelihood}});
    j["hits"] = std::move(hits);
    j["raw_positives"] = r.raw_positives;
    j["candidates_checked"] = r.candidates_checked;
    j["query_insertions"] = r.query_insertions;
    j["per_band_collisions"] = r.per_band_collisions;
    return j.dump();
}

}  // namespace forestdsh
