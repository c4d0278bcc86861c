#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "forestdsh/tree.hpp"

namespace forestdsh {

using PointId = std::uint32_t;

/// One seeded position permutation per band; the same permutation is applied to x and y.
class BandSet {
public:
    BandSet() = default;
    BandSet(std::size_t n_bands, std::size_t seq_len, std::uint64_t seed);
    /// Every band uses the identity permutation.
    static BandSet identity(std::size_t n_bands, std::size_t seq_len);
    static BandSet from_permutations(std::vector<std::vector<std::uint32_t>> perms, std::uint64_t seed);

    std::size_t n_bands() const noexcept { return perms_.size(); }
    std::size_t seq_len() const noexcept { return seq_len_; }
    std::uint64_t seed() const noexcept { return seed_; }
    /// perm[s] is the source position read at permuted position s.
    const std::vector<std::uint32_t>& permutation(std::size_t band) const { return perms_.at(band); }

    /// Returns the bands truncated to the first n (same permutations, same seed).
    BandSet prefix(std::size_t n) const;

private:
    std::size_t seq_len_ = 0;
    std::uint64_t seed_ = 0;
    std::vector<std::vector<std::uint32_t>> perms_;
};

/// Buckets whose Seq^A (resp. Seq^B) is a prefix of perm_z(seq), sorted ascending.
std::vector<NodeId> assign_side(const DecisionTree& tree, const BandSet& bands, std::size_t band, Side side,
                                std::span<const Symbol> seq);
std::vector<std::vector<NodeId>> assign_a(const DecisionTree& tree, const BandSet& bands, std::span<const Symbol> x);
std::vector<std::vector<NodeId>> assign_b(const DecisionTree& tree, const BandSet& bands, std::span<const Symbol> y);

/// Reference implementation: tests every bucket's prefix against perm_z(seq).
std::vector<NodeId> assign_brute_force(const DecisionTree& tree, const BandSet& bands, std::size_t band, Side side,
                                       std::span<const Symbol> seq);

/// Inverted index bucket -> point ids, one CSR table per band. Owns the indexed sequences so
/// that queries can be scored without the original data file.
class BandIndex {
public:
    static BandIndex build(const DecisionTree& tree, const BandSet& bands, std::vector<Sequence> points,
                           unsigned n_threads = 1);

    std::size_t n_points() const noexcept { return points_.size(); }
    const std::vector<Sequence>& points() const noexcept { return points_; }
    const BandSet& bands() const noexcept { return bands_; }
    std::uint64_t tree_fingerprint() const noexcept { return tree_fingerprint_; }

    /// Points x with v in H_z^A(x), in input order. Empty for non-bucket nodes.
    std::span<const PointId> lookup(NodeId v, std::size_t band) const;
    /// Bucket memberships inserted for band z (sum over points of |H_z^A(x)|).
    std::uint64_t insertions(std::size_t band) const { return tables_.at(band).offsets.back(); }
    std::uint64_t total_insertions() const;

    /// Throws InvalidArgument when the tree is not the one the index was built from.
    void check_tree(const DecisionTree& tree) const;

    void save(const std::filesystem::path& path) const;
    static BandIndex load(const std::filesystem::path& path);

private:
    struct Table {
        std::vector<std::uint64_t> offsets;  // size = number of buckets + 1
        std::vector<PointId> ids;
    };

    std::vector<Sequence> points_;
    BandSet bands_;
    std::uint64_t tree_fingerprint_ = 0;
    std::vector<std::uint32_t> bucket_rank_;  // node id -> dense bucket rank, or kNoNode
    std::vector<Table> tables_;
};

}  // namespace forestdsh
