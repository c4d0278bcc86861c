#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "forestdsh/error.hpp"

namespace forestdsh {

/// Symbols are stored as indices into their side's alphabet.
using Symbol = std::uint16_t;
using Sequence = std::vector<Symbol>;

/// Dense row-major k x l matrix of reals.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    static Matrix from_rows(const std::vector<std::vector<double>>& rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    std::span<const double> values() const noexcept { return data_; }
    std::vector<std::vector<double>> to_rows() const;

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

class Alphabet {
public:
    Alphabet() = default;
    explicit Alphabet(std::vector<std::string> symbols);
    /// Symbols "0", "1", ..., "size-1".
    static Alphabet numbered(std::size_t size);

    std::size_t size() const noexcept { return symbols_.size(); }
    const std::string& symbol(Symbol index) const { return symbols_.at(index); }
    const std::vector<std::string>& symbols() const noexcept { return symbols_; }
    /// Throws SymbolOutOfAlphabet for unknown tokens.
    Symbol index_of(const std::string& token) const;
    bool contains(const std::string& token) const { return lookup_.count(token) != 0; }

    bool operator==(const Alphabet& other) const { return symbols_ == other.symbols_; }

private:
    std::vector<std::string> symbols_;
    std::unordered_map<std::string, Symbol> lookup_;
};

/// Joint distribution p over A x B with its marginals and product distribution q.
/// Immutable after construction.
class JointDistribution {
public:
    static constexpr double kInputTolerance = 1e-6;
    static constexpr double kDerivedTolerance = 1e-9;

    /// Validates p; renormalizes when the sum is within kInputTolerance of one.
    static JointDistribution from_matrix(const Matrix& p, Alphabet alphabet_a, Alphabet alphabet_b);
    static JointDistribution from_matrix(const Matrix& p);
    /// Normalizes arbitrary non-negative weights (counts, rounded tables).
    static JointDistribution from_weights(const Matrix& weights, Alphabet alphabet_a, Alphabet alphabet_b);
    static JointDistribution from_weights(const Matrix& weights);

    std::size_t k() const noexcept { return p_.rows(); }
    std::size_t l() const noexcept { return p_.cols(); }
    double p(std::size_t i, std::size_t j) const { return p_(i, j); }
    double q(std::size_t i, std::size_t j) const { return q_(i, j); }
    double pa(std::size_t i) const { return pa_[i]; }
    double pb(std::size_t j) const { return pb_[j]; }
    double log_p(std::size_t i, std::size_t j) const { return log_p_(i, j); }
    double log_pa(std::size_t i) const { return log_pa_[i]; }
    double log_pb(std::size_t j) const { return log_pb_[j]; }

    const Matrix& p_matrix() const noexcept { return p_; }
    const Matrix& q_matrix() const noexcept { return q_; }
    const std::vector<double>& pa_vector() const noexcept { return pa_; }
    const std::vector<double>& pb_vector() const noexcept { return pb_; }
    const Alphabet& alphabet_a() const noexcept { return alphabet_a_; }
    const Alphabet& alphabet_b() const noexcept { return alphabet_b_; }

    /// Cells with p_ij > 0, in row-major order.
    const std::vector<std::pair<Symbol, Symbol>>& support() const noexcept { return support_; }

    /// Same distribution with rows / columns reordered (new index r takes old row_order[r]).
    JointDistribution permuted(std::span<const std::size_t> row_order, std::span<const std::size_t> col_order) const;

private:
    JointDistribution() = default;

    Matrix p_;
    Matrix q_;
    Matrix log_p_;
    std::vector<double> pa_;
    std::vector<double> pb_;
    std::vector<double> log_pa_;
    std::vector<double> log_pb_;
    Alphabet alphabet_a_;
    Alphabet alphabet_b_;
    std::vector<std::pair<Symbol, Symbol>> support_;
};

struct ProblemDims {
    std::uint64_t n_classes = 2;   // N
    std::uint64_t n_queries = 1;   // M
    std::uint64_t seq_len = 1;     // S

    /// log M / log N, always recomputed.
    double delta() const;
    void validate() const;
};

/// log P(y | x) = sum_s log(p(x_s, y_s) / pA(x_s)); -inf when any factor is zero.
double log_likelihood(const JointDistribution& jd, std::span<const Symbol> x, std::span<const Symbol> y);

/// log(P(x,y) / Q(x,y)) accumulated per position; -inf when a joint cell is zero.
double log_likelihood_ratio(const JointDistribution& jd, std::span<const Symbol> x, std::span<const Symbol> y);

using SequencePair = std::pair<Sequence, Sequence>;

/// Cell-count estimate with additive smoothing per cell.
JointDistribution estimate_from_pairs(std::span<const SequencePair> pairs, const Alphabet& alphabet_a,
                                      const Alphabet& alphabet_b, double smoothing);

/// Model file: {"alphabet_a": [...], "alphabet_b": [...], "p": [[...]]}.
JointDistribution load_model(const std::filesystem::path& path);
void save_model(const JointDistribution& jd, const std::filesystem::path& path);
JointDistribution model_from_json_text(const std::string& text);
std::string model_to_json_text(const JointDistribution& jd);

}  // namespace forestdsh
