#include "forestdsh/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "forestdsh/rng.hpp"

namespace forestdsh {

namespace {

void require_2x2(const JointDistribution& jd) {
    if (jd.k() != 2 || jd.l() != 2) {
        throw Error(ErrorCode::UndefinedRatio, "closed-form exponents are defined for 2x2 distributions only");
    }
}

// A zero numerator means the set choice never collides: the term is +inf and drops out of the min.
double log_ratio(double num_arg, double den_arg) {
    if (!(den_arg > 0.0 && den_arg < 1.0) || !(num_arg >= 0.0 && num_arg <= 1.0)) {
        throw Error(ErrorCode::UndefinedRatio, "logarithm argument outside (0, 1)");
    }
    if (num_arg == 0.0) return std::numeric_limits<double>::infinity();
    return std::log(num_arg) / std::log(den_arg);
}

// a/(1-b) for the joint (num) and the product (den) distribution
double mh_term(const JointDistribution& jd, int ai, int aj, int bi, int bj) {
    return log_ratio(jd.p(ai, aj) / (1.0 - jd.p(bi, bj)), jd.q(ai, aj) / (1.0 - jd.q(bi, bj)));
}

std::uint64_t combine(std::uint64_t h, std::uint64_t v) {
    return mix_seed(h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)), 0);
}

/// Per-row collision probability of a pair under the scheme.
double row_collision(const SignatureScheme& s, const Sequence& x, const Sequence& y) {
    std::size_t both = 0, either = 0, agree = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const bool in_x = x[i] == s.present_a;
        const bool in_y = y[i] == s.present_b;
        both += in_x && in_y;
        either += in_x || in_y;
        agree += x[i] == y[i];
    }
    if (s.kind == SchemeKind::LshHamming) {
        return x.empty() ? 1.0 : static_cast<double>(agree) / static_cast<double>(x.size());
    }
    return either == 0 ? 1.0 : static_cast<double>(both) / static_cast<double>(either);
}

std::uint64_t band_rng_stream(std::size_t band, std::size_t row, std::size_t n_rows) {
    return static_cast<std::uint64_t>(band) * n_rows + row;
}

/// Band keys of every sequence for one band.
std::vector<std::uint64_t> band_keys(const SignatureScheme& s, std::size_t band, std::span<const Sequence> seqs,
                                     Symbol present, std::size_t seq_len) {
    std::vector<std::uint64_t> keys(seqs.size(), 0x51ed270b27a5c3d1ULL);
    std::vector<std::uint32_t> perm(seq_len);
    for (std::size_t r = 0; r < s.n_rows; ++r) {
        Rng rng = make_rng(s.seed, band_rng_stream(band, r, s.n_rows));
        if (s.kind == SchemeKind::LshHamming) {
            const auto pos = seq_len == 0 ? 0 : uniform_below(rng, seq_len);
            for (std::size_t i = 0; i < seqs.size(); ++i) keys[i] = combine(keys[i], seqs[i][pos]);
        } else {
            std::iota(perm.begin(), perm.end(), 0u);
            shuffle(perm, rng);
            for (std::size_t i = 0; i < seqs.size(); ++i) {
                std::uint64_t v = seq_len;  // empty-set sentinel
                for (std::size_t t = 0; t < seq_len; ++t) {
                    if (seqs[i][perm[t]] == present) {
                        v = t;
                        break;
                    }
                }
                keys[i] = combine(keys[i], v);
            }
        }
    }
    return keys;
}

}  // namespace

SearchResult brute_force(std::span<const Sequence> x, std::span<const Symbol> y, const JointDistribution& jd,
                         double delta) {
    if (!(delta >= 0.0 && delta <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "delta must lie in [0, 1]");
    }
    const double log_delta = delta == 0.0 ? -std::numeric_limits<double>::infinity() : std::log(delta);
    SearchResult r;
    for (PointId id = 0; id < x.size(); ++id) {
        const double ll = log_likelihood(jd, x[id], y);
        ++r.candidates_checked;
        if (ll > log_delta) r.hits.push_back({id, ll});
    }
    r.raw_positives = r.candidates_checked;
    return r;
}

PointId brute_force_top1(std::span<const Sequence> x, std::span<const Symbol> y, const JointDistribution& jd) {
    if (x.empty()) {
        throw Error(ErrorCode::NoCandidate, "empty database");
    }
    PointId best = 0;
    double best_ll = -std::numeric_limits<double>::infinity();
    for (PointId id = 0; id < x.size(); ++id) {
        const double ll = log_likelihood(jd, x[id], y);
        if (ll > best_ll) {
            best_ll = ll;
            best = id;
        }
    }
    return best;
}

std::array<double, 4> minhash_exponent_terms(const JointDistribution& jd) {
    require_2x2(jd);
    return {mh_term(jd, 0, 0, 1, 1), mh_term(jd, 0, 1, 1, 0), mh_term(jd, 1, 0, 0, 1), mh_term(jd, 1, 1, 0, 0)};
}

double minhash_exponent(const JointDistribution& jd) {
    const auto t = minhash_exponent_terms(jd);
    return *std::min_element(t.begin(), t.end());
}

double lsh_hamming_exponent(const JointDistribution& jd) {
    require_2x2(jd);
    const double same = log_ratio(jd.p(0, 0) + jd.p(1, 1), jd.q(0, 0) + jd.q(1, 1));
    const double diff = log_ratio(jd.p(0, 1) + jd.p(1, 0), jd.q(0, 1) + jd.q(1, 0));
    return std::min(same, diff);
}

JointDistribution hamming_distribution(double p) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "p must lie in [0, 1]");
    }
    return JointDistribution::from_matrix(Matrix::from_rows({{p / 2, (1 - p) / 2}, {(1 - p) / 2, p / 2}}));
}

TuningResult tune_signature_scheme(SchemeKind kind, const JointDistribution& jd, std::size_t n, std::size_t m,
                                   std::size_t seq_len, double tp_target, std::uint64_t seed,
                                   const TuningLimits& limits) {
    if (!(tp_target > 0.0 && tp_target < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "tp_target must lie in (0, 1)");
    }
    if (kind == SchemeKind::LshHamming && (jd.k() != 2 || jd.l() != 2)) {
        throw Error(ErrorCode::InvalidArgument, "LSH-Hamming needs binary alphabets");
    }
    const std::size_t v = std::max<std::size_t>(2, limits.validation_pairs);
    const PairedDataset val = generate_pairs(jd, v, v, seq_len, mix_seed(seed, 0x7a11));

    std::vector<std::pair<Symbol, Symbol>> present_choices;
    if (kind == SchemeKind::LshHamming) {
        present_choices.emplace_back(1, 1);
    } else if (jd.k() * jd.l() <= 16) {
        for (Symbol a = 0; a < jd.k(); ++a)
            for (Symbol b = 0; b < jd.l(); ++b) present_choices.emplace_back(a, b);
    } else {
        present_choices.emplace_back(1, 1);
    }

    const double nm = static_cast<double>(n) * static_cast<double>(m);
    const double per_point = static_cast<double>(n + m);
    bool found = false;
    TuningResult best;
    best.predicted_work = std::numeric_limits<double>::infinity();
    for (auto [pa, pb] : present_choices) {
        SignatureScheme s{kind, 1, 1, seed, pa, pb};
        std::vector<double> planted(v), random(v);
        for (std::size_t i = 0; i < v; ++i) {
            planted[i] = row_collision(s, val.x[i], val.y[i]);
            random[i] = row_collision(s, val.x[i], val.y[(i + 1) % v]);
        }
        std::vector<double> planted_pow(v, 1.0), random_pow(v, 1.0);
        for (std::size_t rows = 1; rows <= limits.max_rows; ++rows) {
            for (std::size_t i = 0; i < v; ++i) {
                planted_pow[i] *= planted[i];
                random_pow[i] *= random[i];
            }
            auto recall = [&](double bands) {
                double acc = 0.0;
                for (double c : planted_pow) acc += 1.0 - std::pow(1.0 - c, bands);
                return acc / static_cast<double>(v);
            };
            if (recall(static_cast<double>(limits.max_bands)) < tp_target) continue;
            std::size_t lo = 1, hi = limits.max_bands;
            while (lo < hi) {
                const std::size_t mid = lo + (hi - lo) / 2;
                if (recall(static_cast<double>(mid)) >= tp_target) {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            const double rand_rate = std::accumulate(random_pow.begin(), random_pow.end(), 0.0) / static_cast<double>(v);
            const double per_band = limits.c_hash * static_cast<double>(rows) * per_point +
                                    limits.c_insertion * per_point + limits.c_pos * nm * rand_rate;
            const double work = static_cast<double>(lo) * per_band;
            if (work < best.predicted_work) {
                found = true;
                best.scheme = SignatureScheme{kind, rows, lo, seed, pa, pb};
                best.predicted_work = work;
                best.predicted_recall = recall(static_cast<double>(lo));
            }
        }
    }
    if (!found) {
        throw Error(ErrorCode::TuningFailed, "no (rows, bands) within limits reaches the recall target");
    }
    return best;
}

BandedRunStats banded_signature_search(const SignatureScheme& scheme, const PairedDataset& data, bool keep_candidates) {
    if (scheme.n_rows == 0 || scheme.n_bands == 0) {
        throw Error(ErrorCode::InvalidArgument, "rows and bands must be >= 1");
    }
    const std::size_t seq_len = data.x.empty() ? (data.y.empty() ? 0 : data.y[0].size()) : data.x[0].size();
    for (const auto& s : data.x)
        if (s.size() != seq_len) throw Error(ErrorCode::LengthMismatch, "ragged database sequences");
    for (const auto& s : data.y)
        if (s.size() != seq_len) throw Error(ErrorCode::LengthMismatch, "ragged query sequences");

    const std::size_t n = data.x.size(), m = data.y.size();
    std::vector<std::vector<std::pair<std::uint64_t, PointId>>> x_tables(scheme.n_bands);
    std::vector<std::vector<std::uint64_t>> y_keys(scheme.n_bands);
    for (std::size_t z = 0; z < scheme.n_bands; ++z) {
        const auto xk = band_keys(scheme, z, data.x, scheme.present_a, seq_len);
        auto& table = x_tables[z];
        table.reserve(n);
        for (PointId i = 0; i < n; ++i) table.emplace_back(xk[i], i);
        std::sort(table.begin(), table.end());
        y_keys[z] = band_keys(scheme, z, data.y, scheme.present_b, seq_len);
    }

    BandedRunStats out;
    out.scheme = scheme;
    out.work.hash_evaluations = static_cast<std::uint64_t>(scheme.n_bands) * scheme.n_rows * (n + m);
    out.work.insertions = static_cast<std::uint64_t>(scheme.n_bands) * (n + m);
    std::vector<std::vector<std::uint32_t>> planted_for(m);
    for (auto [xi, yj] : data.planted) planted_for[yj].push_back(xi);
    std::vector<std::uint32_t> stamp(n, 0);
    std::size_t planted_hit = 0;
    if (keep_candidates) out.candidates.resize(m);
    for (std::size_t q = 0; q < m; ++q) {
        const auto epoch = static_cast<std::uint32_t>(q + 1);
        for (std::size_t z = 0; z < scheme.n_bands; ++z) {
            const auto& table = x_tables[z];
            const std::uint64_t key = y_keys[z][q];
            auto it = std::lower_bound(table.begin(), table.end(), std::make_pair(key, PointId{0}));
            for (; it != table.end() && it->first == key; ++it) {
                ++out.work.raw_positives;
                if (stamp[it->second] != epoch) {
                    stamp[it->second] = epoch;
                    ++out.work.distinct_candidates;
                    if (keep_candidates) out.candidates[q].push_back(it->second);
                }
            }
        }
        for (auto xi : planted_for[q]) planted_hit += stamp[xi] == epoch;
        if (keep_candidates) std::sort(out.candidates[q].begin(), out.candidates[q].end());
    }
    out.planted_recall =
        data.planted.empty() ? 0.0 : static_cast<double>(planted_hit) / static_cast<double>(data.planted.size());
    return out;
}

DubinerEstimate dubiner_hamming_estimate(double p, std::uint64_t n, std::size_t seq_len, std::size_t n_trials,
                                         std::uint64_t seed) {
    if (!(p >= 0.5 && p <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "p must lie in [0.5, 1]");
    }
    if (n < 2 || seq_len == 0 || n_trials == 0) {
        throw Error(ErrorCode::InvalidArgument, "need N >= 2, S >= 1 and at least one trial");
    }
    const double big_s = static_cast<double>(seq_len);
    // Binomial(S, 1/2) pmf and cdf of d(x, b)
    std::vector<double> pmf(seq_len + 1), cdf(seq_len + 1);
    double acc = 0.0;
    for (std::size_t d = 0; d <= seq_len; ++d) {
        const double dd = static_cast<double>(d);
        pmf[d] = std::exp(std::lgamma(big_s + 1) - std::lgamma(dd + 1) - std::lgamma(big_s - dd + 1) - big_s * std::log(2.0));
        acc += pmf[d];
        cdf[d] = std::min(1.0, acc);
    }
    const double target = 1.0 / static_cast<double>(n);
    std::size_t d0 = 0;
    while (d0 <= seq_len && cdf[d0] < target) ++d0;
    if (d0 > seq_len || cdf[d0] > 2.0 * target) {
        throw Error(ErrorCode::NoFeasibleRadius, "no radius with P1 within [1/N, 2/N]; increase S");
    }

    // P2(d0) = sum_{D <= d0} Pr[D] Pr[d(y, b) <= d0 | d(x, b) = D]; y flips each bit of x w.p. 1-p.
    // Given D, d(y, b) = D - F1 + F2 with F1 ~ Bin(D, q) sampled and F2 ~ Bin(S - D, q) summed exactly.
    const double flip = 1.0 - p;
    const double mass = cdf[d0];
    DubinerEstimate est;
    est.d0 = d0;
    est.p1 = cdf[d0];
    auto binom_cdf = [&](std::size_t trials_n) {
        std::vector<double> c(trials_n + 1);
        double run = 0.0;
        const double tn = static_cast<double>(trials_n);
        for (std::size_t f = 0; f <= trials_n; ++f) {
            const double ff = static_cast<double>(f);
            double pm;
            if (flip == 0.0) pm = f == 0 ? 1.0 : 0.0;
            else pm = std::exp(std::lgamma(tn + 1) - std::lgamma(ff + 1) - std::lgamma(tn - ff + 1) + ff * std::log(flip) +
                               (tn - ff) * std::log1p(-flip));
            run += pm;
            c[f] = std::min(1.0, run);
        }
        return c;
    };
    double p2 = 0.0, var = 0.0;
    for (std::size_t big_d = 0; big_d <= d0; ++big_d) {
        const double weight = pmf[big_d];
        const auto trials = std::max<std::size_t>(
            2, static_cast<std::size_t>(std::llround(static_cast<double>(n_trials) * weight / mass)));
        const auto f2_cdf = binom_cdf(seq_len - big_d);
        const std::size_t slack = d0 - big_d;
        Rng rng = make_rng(seed, big_d);
        double sum = 0.0, sum_sq = 0.0;
        for (std::size_t t = 0; t < trials; ++t) {
            std::size_t f1 = 0;
            for (std::size_t s = 0; s < big_d; ++s) f1 += uniform01(rng) < flip;
            const std::size_t room = std::min(slack + f1, seq_len - big_d);
            const double c = f2_cdf[room];
            sum += c;
            sum_sq += c * c;
        }
        const double tn = static_cast<double>(trials);
        const double mean = sum / tn;
        const double sample_var = std::max(0.0, (sum_sq - tn * mean * mean) / (tn - 1.0));
        p2 += weight * mean;
        var += weight * weight * sample_var / tn;
    }
    if (!(p2 > 0.0)) {
        throw Error(ErrorCode::NoFeasibleRadius, "paired points never fall inside the radius");
    }
    est.p2 = p2;
    est.exponent = std::log(p2) / std::log(est.p1);
    est.standard_error = std::sqrt(var) / (p2 * std::abs(std::log(est.p1)));
    return est;
}

MipsEmbedding::MipsEmbedding(const JointDistribution& jd) : k_(jd.k()), l_(jd.l()), omega_(k_, l_), a_value_(k_, l_) {
    for (std::size_t i = 0; i < k_; ++i) {
        for (std::size_t j = 0; j < l_; ++j) {
            const double p = jd.p(i, j), q = jd.q(i, j);
            if (!(p > 0.0)) {
                throw Error(ErrorCode::UndefinedRatio, "embedding weights need p_ij > 0 in every cell");
            }
            const double lr = std::log(p) - std::log(q);
            if (lr == 0.0) continue;
            const double w = std::pow(jd.pa(i) / jd.pb(j), 0.25) * std::sqrt(std::abs(lr));
            omega_(i, j) = w;
            a_value_(i, j) = lr / w;
        }
    }
}

SparseVector MipsEmbedding::embed_a(std::span<const Symbol> x) const {
    SparseVector out;
    for (std::size_t s = 0; s < x.size(); ++s) {
        if (x[s] >= k_) throw Error(ErrorCode::SymbolOutOfAlphabet, "A symbol outside the alphabet");
        for (std::size_t j = 0; j < l_; ++j) {
            const double v = a_value_(x[s], j);
            if (v != 0.0) out.emplace_back((s * k_ + x[s]) * l_ + j, v);
        }
    }
    return out;
}

SparseVector MipsEmbedding::embed_b(std::span<const Symbol> y) const {
    SparseVector out;
    for (std::size_t s = 0; s < y.size(); ++s) {
        if (y[s] >= l_) throw Error(ErrorCode::SymbolOutOfAlphabet, "B symbol outside the alphabet");
        for (std::size_t i = 0; i < k_; ++i) {
            const double v = omega_(i, y[s]);
            if (v != 0.0) out.emplace_back((s * k_ + i) * l_ + y[s], v);
        }
    }
    return out;
}

double sparse_dot(const SparseVector& a, const SparseVector& b) {
    double sum = 0.0, comp = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i].first < b[j].first) {
            ++i;
        } else if (b[j].first < a[i].first) {
            ++j;
        } else {
            const double term = a[i].second * b[j].second - comp;
            const double t = sum + term;
            comp = (t - sum) - term;
            sum = t;
            ++i;
            ++j;
        }
    }
    return sum;
}

}  // namespace forestdsh
