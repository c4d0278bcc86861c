#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "forestdsh/data.hpp"
#include "forestdsh/query.hpp"

namespace forestdsh {

/// Exact scan of X; hits satisfy P(y|x) > delta.
SearchResult brute_force(std::span<const Sequence> x, std::span<const Symbol> y, const JointDistribution& jd,
                         double delta);

/// Index of the brute-force maximum of log P(y|x), smallest id on ties.
PointId brute_force_top1(std::span<const Sequence> x, std::span<const Symbol> y, const JointDistribution& jd);

/// The four MinHash set-choice exponents for a 2x2 distribution (present symbols (0,0), (0,1),
/// (1,0), (1,1) in that order).
std::array<double, 4> minhash_exponent_terms(const JointDistribution& jd);
double minhash_exponent(const JointDistribution& jd);
double lsh_hamming_exponent(const JointDistribution& jd);

/// Symmetric binary distribution with agreement probability p: [[p/2, (1-p)/2], [(1-p)/2, p/2]].
JointDistribution hamming_distribution(double p);

enum class SchemeKind { MinHash, LshHamming };

struct SignatureScheme {
    SchemeKind kind = SchemeKind::MinHash;
    std::size_t n_rows = 1;
    std::size_t n_bands = 1;
    std::uint64_t seed = 0;
    /// MinHash works on the set of positions carrying these symbols.
    Symbol present_a = 1;
    Symbol present_b = 1;
};

struct TuningLimits {
    std::size_t max_rows = 64;
    std::size_t max_bands = 100000;
    std::size_t validation_pairs = 2000;
    double c_hash = 1.0;
    double c_insertion = 1.0;
    double c_pos = 1.0;
};

struct TuningResult {
    SignatureScheme scheme;
    double predicted_recall = 0.0;
    double predicted_work = 0.0;
};

/// Picks (rows, bands) with the least predicted work among those whose predicted recall on a
/// planted validation split reaches tp_target. For MinHash the present symbols are taken from
/// the best of the four exponent terms. Throws TuningFailed when nothing within limits qualifies.
TuningResult tune_signature_scheme(SchemeKind kind, const JointDistribution& jd, std::size_t n, std::size_t m,
                                   std::size_t seq_len, double tp_target, std::uint64_t seed,
                                   const TuningLimits& limits = {});

/// Work counters shared by all banded methods.
struct WorkStats {
    std::uint64_t hash_evaluations = 0;
    std::uint64_t insertions = 0;
    std::uint64_t raw_positives = 0;
    std::uint64_t distinct_candidates = 0;

    double total(double c_hash = 1.0, double c_insertion = 1.0, double c_pos = 1.0) const {
        return c_hash * static_cast<double>(hash_evaluations) + c_insertion * static_cast<double>(insertions) +
               c_pos * static_cast<double>(raw_positives);
    }
};

struct BandedRunStats {
    SignatureScheme scheme;
    WorkStats work;
    /// Fraction of planted pairs whose x is among the candidates of y.
    double planted_recall = 0.0;
    /// Per query: distinct candidate ids, ascending.
    std::vector<std::vector<PointId>> candidates;
};

BandedRunStats banded_signature_search(const SignatureScheme& scheme, const PairedDataset& data,
                                       bool keep_candidates = false);

struct DubinerEstimate {
    double exponent = 0.0;  // log P2(d0) / log P1(d0)
    double standard_error = 0.0;
    std::size_t d0 = 0;
    double p1 = 0.0;
    double p2 = 0.0;
};

/// Ball-carving complexity for the hamming distribution P(p). P1(d) (x within distance d of a
/// random center) is the Binomial(S, 1/2) CDF; P2(d) (both x and its partner y within d) is
/// estimated by Monte-Carlo stratified over d(x, b): flips toward the center are sampled, flips away
/// from it are summed exactly. d0 is the smallest d with P1 >= 1/N and must
/// satisfy P1 <= 2/N.
DubinerEstimate dubiner_hamming_estimate(double p, std::uint64_t n, std::size_t seq_len, std::size_t n_trials,
                                         std::uint64_t seed);

/// Sparse vector: (coordinate, value), coordinate = (s * k + i) * l + j.
using SparseVector = std::vector<std::pair<std::uint64_t, double>>;

class MipsEmbedding {
public:
    explicit MipsEmbedding(const JointDistribution& jd);

    double omega(std::size_t i, std::size_t j) const { return omega_(i, j); }
    SparseVector embed_a(std::span<const Symbol> x) const;
    SparseVector embed_b(std::span<const Symbol> y) const;
    std::uint64_t dimension(std::size_t seq_len) const { return static_cast<std::uint64_t>(seq_len) * k_ * l_; }

private:
    std::size_t k_ = 0, l_ = 0;
    Matrix omega_;
    Matrix a_value_;  // log(p/q) / omega, zero where p = q
};

/// Dot product of two coordinate-sorted sparse vectors (compensated summation).
double sparse_dot(const SparseVector& a, const SparseVector& b);

}  // namespace forestdsh
