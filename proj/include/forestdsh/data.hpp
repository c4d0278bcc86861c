#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "forestdsh/distribution.hpp"

namespace forestdsh {

struct PairedDataset {
    std::vector<Sequence> x;  // N database points (A side)
    std::vector<Sequence> y;  // M queries (B side)
    /// (x index, y index) of jointly drawn pairs; the first min(N, M) indices are paired.
    std::vector<std::pair<std::uint32_t, std::uint32_t>> planted;
    std::uint64_t seed = 0;
};

/// Planted pairs drawn position-wise from p; the rest from the marginals. Each item has its own
/// derived generator, so items are reproducible independently of N and M.
PairedDataset generate_pairs(const JointDistribution& jd, std::size_t n, std::size_t m, std::size_t seq_len,
                             std::uint64_t seed);

/// p1 (1 - t) + p2 t.
JointDistribution interpolate(const JointDistribution& p1, const JointDistribution& p2, double t);

/// Multiplies each nonzero cell by a factor uniform in [1/(1+eps), 1+eps], renormalizes and
/// retries until every cell stays inside that band.
JointDistribution perturb(const JointDistribution& jd, double epsilon, std::uint64_t seed, int max_attempts = 100);

/// floor(log_base(rank)) + 1, clamped to n_levels.
std::uint32_t logrank_level(std::uint64_t rank, std::uint32_t base, std::uint32_t n_levels);

/// One optional rank per position. Symbol index level-1 for peaks, n_levels for an absent peak
/// (alphabet size n_levels + 1).
Sequence logrank_transform(std::span<const std::optional<std::uint64_t>> ranks, std::uint32_t base,
                           std::uint32_t n_levels);

/// Alphabet {"1", ..., "n_levels", "absent"} matching logrank_transform's symbol indices.
Alphabet logrank_alphabet(std::uint32_t n_levels);

/// Rank-list file: one item per line, comma-separated ranks; "-" or an empty field marks no peak.
std::vector<std::vector<std::optional<std::uint64_t>>> read_rank_lists(const std::filesystem::path& path);

/// Sequence file: one sequence per line, tokens separated by whitespace or commas, each token a
/// symbol of the alphabet. Blank lines are skipped.
std::vector<Sequence> read_sequences(const std::filesystem::path& path, const Alphabet& alphabet);
void write_sequences(const std::filesystem::path& path, std::span<const Sequence> seqs, const Alphabet& alphabet);

}  // namespace forestdsh
