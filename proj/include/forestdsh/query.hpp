#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "forestdsh/band_index.hpp"

namespace forestdsh {

struct Hit {
    PointId id = 0;
    double log_likelihood = 0.0;

    bool operator==(const Hit&) const = default;
};

struct SearchResult {
    std::size_t query_id = 0;
    std::vector<Hit> hits;  // ascending id
    /// Positives counted with multiplicity over bands and buckets.
    std::uint64_t raw_positives = 0;
    /// Distinct (x, y) pairs scored.
    std::uint64_t candidates_checked = 0;
    /// Bucket memberships of the query over all bands.
    std::uint64_t query_insertions = 0;
    std::vector<std::uint64_t> per_band_collisions;
    /// Distinct candidate ids, ascending; filled only when requested.
    std::vector<PointId> candidates;
};

std::string to_json_line(const SearchResult& r);

struct SearchOptions {
    /// Probability threshold; hits satisfy P(y|x) > delta. 0 reports every positive.
    double delta = 0.0;
    bool keep_candidates = false;
    /// Score candidates with log P(y|x); off leaves hits empty (collision counting only).
    bool score = true;
    /// Use only the first band_limit bands; 0 means all.
    std::size_t band_limit = 0;
};

/// Per-query executor over a shared immutable (tree, index). One engine per thread.
class QueryEngine {
public:
    QueryEngine(const DecisionTree& tree, const BandIndex& index);

    SearchResult search(std::span<const Symbol> y, const SearchOptions& options = {});
    /// Best-scoring positive (smallest id on ties); nullopt when nothing collided.
    std::optional<Hit> search_top1(std::span<const Symbol> y);

private:
    template <class OnCandidate>
    void collide(std::span<const Symbol> y, std::size_t band_limit, SearchResult& r, OnCandidate&& on_candidate);

    const DecisionTree& tree_;
    const BandIndex& index_;
    std::vector<std::uint32_t> stamp_;
    std::uint32_t epoch_ = 0;
    std::vector<NodeId> scratch_;
};

/// search_top1 that reports NoCandidate instead of an empty optional.
Hit search_top1_or_throw(QueryEngine& engine, std::span<const Symbol> y);

/// Runs search over many queries on n_threads workers; results are in query order.
std::vector<SearchResult> search_batch(const DecisionTree& tree, const BandIndex& index,
                                       std::span<const Sequence> queries, const SearchOptions& options,
                                       unsigned n_threads = 1);

}  // namespace forestdsh
