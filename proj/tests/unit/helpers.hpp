#pragma once

#include <cmath>
#include <vector>

#include "forestdsh/bench.hpp"
#include "forestdsh/rng.hpp"

namespace th {

using namespace forestdsh;

inline JointDistribution example1() { return JointDistribution::from_matrix(Matrix::from_rows({{0.4, 0.3}, {0.1, 0.2}})); }
inline JointDistribution uniform2() {
    return JointDistribution::from_matrix(Matrix::from_rows({{0.25, 0.25}, {0.25, 0.25}}));
}
inline JointDistribution p1() { return JointDistribution::from_matrix(Matrix::from_rows({{0.345, 0.0}, {0.31, 0.345}})); }

inline Sequence random_seq(Rng& rng, std::size_t len, std::size_t alphabet) {
    Sequence s(len);
    for (auto& v : s) v = static_cast<Symbol>(uniform_below(rng, alphabet));
    return s;
}

// plain-product oracle for sum_ij p^(1+mu+nu-eta) pA^-mu pB^-nu
inline double constraint_oracle(const JointDistribution& jd, double mu, double nu, double eta) {
    double s = 0.0;
    for (std::size_t i = 0; i < jd.k(); ++i) {
        for (std::size_t j = 0; j < jd.l(); ++j) {
            const double p = jd.p(i, j);
            if (p > 0) s += std::pow(p, 1 + mu + nu - eta) * std::pow(jd.pa(i), -mu) * std::pow(jd.pb(j), -nu);
        }
    }
    return s;
}

// random distribution and thresholds; retries until the tree has 1..max_buckets buckets
inline DecisionTree random_tree(Rng& rng, std::size_t seq_len, std::size_t max_buckets) {
    for (;;) {
        const std::size_t k = 2 + uniform_below(rng, 2), l = 2 + uniform_below(rng, 2);
        Matrix w(k, l);
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < l; ++j) w(i, j) = uniform01(rng) < 0.15 ? 0.0 : 0.05 + uniform01(rng);
        if (w(0, 0) == 0.0) w(0, 0) = 1.0;
        const auto jd = JointDistribution::from_weights(w);
        const std::uint64_t n = 10 + uniform_below(rng, 2000);
        const ProblemDims dims{n, n, seq_len};
        HashParams hp;
        try {
            hp = solve_params(jd, dims, SolverOptions::uniform(6.0, 0.25, 0.25));
        } catch (const Error&) {
            continue;
        }
        const double c = std::exp(std::log(0.05) + uniform01(rng) * std::log(40.0));
        TreeLimits lim;
        lim.max_nodes = 50000;
        try {
            auto tree = build_tree(jd, hp, dims, Thresholds::linear(c, c, c), lim);
            if (!tree.buckets().empty() && tree.buckets().size() <= max_buckets) return tree;
        } catch (const Error&) {
        }
    }
}

inline double binomial_se(double p, double n) { return std::sqrt(std::max(p * (1 - p), 1e-12) / n); }

}  // namespace th

#define CHECK_CODE(expr, expected)                                     \
    do {                                                               \
        bool thrown_ = false;                                          \
        try {                                                          \
            (void)(expr);                                              \
        } catch (const ::forestdsh::Error& e_) {                       \
            thrown_ = true;                                            \
            CHECK_MESSAGE(e_.code() == (expected), e_.what());         \
        }                                                              \
        CHECK_MESSAGE(thrown_, "expected an error from " #expr);       \
    } while (0)
