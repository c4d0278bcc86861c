#include "forestdsh/distribution.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace forestdsh {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::NotADistribution: return "NotADistribution";
        case ErrorCode::EmptyAlphabet: return "EmptyAlphabet";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::SymbolOutOfAlphabet: return "SymbolOutOfAlphabet";
        case ErrorCode::EmptyTrainingSet: return "EmptyTrainingSet";
        case ErrorCode::NoFeasiblePoint: return "NoFeasiblePoint";
        case ErrorCode::DegenerateRatio: return "DegenerateRatio";
        case ErrorCode::NodeBudgetExceeded: return "NodeBudgetExceeded";
        case ErrorCode::EmptyBucketSet: return "EmptyBucketSet";
        case ErrorCode::NoCandidate: return "NoCandidate";
        case ErrorCode::UndefinedRatio: return "UndefinedRatio";
        case ErrorCode::TuningFailed: return "TuningFailed";
        case ErrorCode::NoFeasibleRadius: return "NoFeasibleRadius";
        case ErrorCode::PerturbationInfeasible: return "PerturbationInfeasible";
        case ErrorCode::InvalidRank: return "InvalidRank";
        case ErrorCode::AllBuildsFailed: return "AllBuildsFailed";
        case ErrorCode::CrossValidationFailed: return "CrossValidationFailed";
        case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty() || rows.front().empty()) {
        return {};
    }
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != m.cols()) {
            throw Error(ErrorCode::InvalidArgument, "ragged matrix rows");
        }
        for (std::size_t j = 0; j < m.cols(); ++j) {
            m(i, j) = rows[i][j];
        }
    }
    return m;
}

std::vector<std::vector<double>> Matrix::to_rows() const {
    std::vector<std::vector<double>> out(rows_, std::vector<double>(cols_));
    for (std::size_t i = 0; i < rows_; ++i) {
        for (std::size_t j = 0; j < cols_; ++j) {
            out[i][j] = (*this)(i, j);
        }
    }
    return out;
}

Alphabet::Alphabet(std::vector<std::string> symbols) : symbols_(std::move(symbols)) {
    if (symbols_.size() > std::numeric_limits<Symbol>::max()) {
        throw Error(ErrorCode::InvalidArgument, "alphabet too large");
    }
    for (std::size_t i = 0; i < symbols_.size(); ++i) {
        if (!lookup_.emplace(symbols_[i], static_cast<Symbol>(i)).second) {
            throw Error(ErrorCode::InvalidArgument, "duplicate alphabet symbol '" + symbols_[i] + "'");
        }
    }
}

Alphabet Alphabet::numbered(std::size_t size) {
    std::vector<std::string> symbols;
    symbols.reserve(size);
    for (std::size_t i = 0; i < size; ++i) {
        symbols.push_back(std::to_string(i));
    }
    return Alphabet(std::move(symbols));
}

Symbol Alphabet::index_of(const std::string& token) const {
    auto it = lookup_.find(token);
    if (it == lookup_.end()) {
        throw Error(ErrorCode::SymbolOutOfAlphabet, "unknown symbol '" + token + "'");
    }
    return it->second;
}

namespace {

void check_shape(const Matrix& p, const Alphabet& a, const Alphabet& b) {
    if (p.rows() == 0 || p.cols() == 0 || a.size() == 0 || b.size() == 0) {
        throw Error(ErrorCode::EmptyAlphabet, "distribution needs at least one symbol per side");
    }
    if (p.rows() != a.size() || p.cols() != b.size()) {
        throw Error(ErrorCode::InvalidArgument, "matrix shape does not match alphabet sizes");
    }
    for (double v : p.values()) {
        if (!std::isfinite(v) || v < 0.0) {
            throw Error(ErrorCode::NotADistribution, "entries must be finite and non-negative");
        }
    }
}

}  // namespace

JointDistribution JointDistribution::from_matrix(const Matrix& p, Alphabet alphabet_a, Alphabet alphabet_b) {
    check_shape(p, alphabet_a, alphabet_b);
    const double total = std::accumulate(p.values().begin(), p.values().end(), 0.0);
    if (std::abs(total - 1.0) >= kInputTolerance) {
        throw Error(ErrorCode::NotADistribution,
                    "entries sum to " + std::to_string(total) + ", expected 1 within 1e-6");
    }
    return from_weights(p, std::move(alphabet_a), std::move(alphabet_b));
}

JointDistribution JointDistribution::from_matrix(const Matrix& p) {
    return from_matrix(p, Alphabet::numbered(p.rows()), Alphabet::numbered(p.cols()));
}

JointDistribution JointDistribution::from_weights(const Matrix& weights) {
    return from_weights(weights, Alphabet::numbered(weights.rows()), Alphabet::numbered(weights.cols()));
}

JointDistribution JointDistribution::from_weights(const Matrix& weights, Alphabet alphabet_a, Alphabet alphabet_b) {
    check_shape(weights, alphabet_a, alphabet_b);
    const double total = std::accumulate(weights.values().begin(), weights.values().end(), 0.0);
    if (!(total > 0.0)) {
        throw Error(ErrorCode::NotADistribution, "weights sum to zero");
    }

    JointDistribution jd;
    const std::size_t k = weights.rows();
    const std::size_t l = weights.cols();
    jd.p_ = Matrix(k, l);
    jd.q_ = Matrix(k, l);
    jd.log_p_ = Matrix(k, l);
    jd.pa_.assign(k, 0.0);
    jd.pb_.assign(l, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < l; ++j) {
            const double v = weights(i, j) / total;
            jd.p_(i, j) = v;
            jd.pa_[i] += v;
            jd.pb_[j] += v;
        }
    }
    jd.log_pa_.resize(k);
    jd.log_pb_.resize(l);
    for (std::size_t i = 0; i < k; ++i) jd.log_pa_[i] = std::log(jd.pa_[i]);
    for (std::size_t j = 0; j < l; ++j) jd.log_pb_[j] = std::log(jd.pb_[j]);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < l; ++j) {
            jd.q_(i, j) = jd.pa_[i] * jd.pb_[j];
            jd.log_p_(i, j) = std::log(jd.p_(i, j));
            if (jd.p_(i, j) > 0.0) {
                jd.support_.emplace_back(static_cast<Symbol>(i), static_cast<Symbol>(j));
            }
        }
    }
    jd.alphabet_a_ = std::move(alphabet_a);
    jd.alphabet_b_ = std::move(alphabet_b);
    return jd;
}

JointDistribution JointDistribution::permuted(std::span<const std::size_t> row_order,
                                              std::span<const std::size_t> col_order) const {
    if (row_order.size() != k() || col_order.size() != l()) {
        throw Error(ErrorCode::InvalidArgument, "permutation size mismatch");
    }
    Matrix m(k(), l());
    std::vector<std::string> sa, sb;
    for (std::size_t r = 0; r < k(); ++r) {
        sa.push_back(alphabet_a_.symbol(static_cast<Symbol>(row_order[r])));
        for (std::size_t c = 0; c < l(); ++c) {
            m(r, c) = p_(row_order[r], col_order[c]);
        }
    }
    for (std::size_t c = 0; c < l(); ++c) {
        sb.push_back(alphabet_b_.symbol(static_cast<Symbol>(col_order[c])));
    }
    return from_weights(m, Alphabet(std::move(sa)), Alphabet(std::move(sb)));
}

double ProblemDims::delta() const {
    return std::log(static_cast<double>(n_queries)) / std::log(static_cast<double>(n_classes));
}

void ProblemDims::validate() const {
    if (n_classes < 2 || n_queries < 1 || seq_len < 1) {
        throw Error(ErrorCode::InvalidArgument, "need N >= 2, M >= 1, S >= 1");
    }
}

namespace {

void check_pair(const JointDistribution& jd, std::span<const Symbol> x, std::span<const Symbol> y) {
    if (x.size() != y.size()) {
        throw Error(ErrorCode::LengthMismatch,
                    "sequence lengths " + std::to_string(x.size()) + " and " + std::to_string(y.size()));
    }
    for (std::size_t s = 0; s < x.size(); ++s) {
        if (x[s] >= jd.k() || y[s] >= jd.l()) {
            throw Error(ErrorCode::SymbolOutOfAlphabet, "symbol index out of range at position " + std::to_string(s));
        }
    }
}

}  // namespace

double log_likelihood(const JointDistribution& jd, std::span<const Symbol> x, std::span<const Symbol> y) {
    check_pair(jd, x, y);
    double total = 0.0;
    for (std::size_t s = 0; s < x.size(); ++s) {
        const double lp = jd.log_p(x[s], y[s]);
        if (lp == -std::numeric_limits<double>::infinity()) {
            return lp;
        }
        total += lp - jd.log_pa(x[s]);
    }
    return total;
}

double log_likelihood_ratio(const JointDistribution& jd, std::span<const Symbol> x, std::span<const Symbol> y) {
    check_pair(jd, x, y);
    double total = 0.0;
    for (std::size_t s = 0; s < x.size(); ++s) {
        const double lp = jd.log_p(x[s], y[s]);
        if (lp == -std::numeric_limits<double>::infinity()) {
            return lp;
        }
        total += lp - jd.log_pa(x[s]) - jd.log_pb(y[s]);
    }
    return total;
}

JointDistribution estimate_from_pairs(std::span<const SequencePair> pairs, const Alphabet& alphabet_a,
                                      const Alphabet& alphabet_b, double smoothing) {
    if (smoothing < 0.0 || !std::isfinite(smoothing)) {
        throw Error(ErrorCode::InvalidArgument, "smoothing must be a finite non-negative pseudo-count");
    }
    Matrix counts(alphabet_a.size(), alphabet_b.size(), smoothing);
    std::size_t positions = 0;
    for (const auto& [x, y] : pairs) {
        if (x.size() != y.size()) {
            throw Error(ErrorCode::LengthMismatch, "training pair lengths differ");
        }
        for (std::size_t s = 0; s < x.size(); ++s) {
            if (x[s] >= alphabet_a.size() || y[s] >= alphabet_b.size()) {
                throw Error(ErrorCode::SymbolOutOfAlphabet, "training symbol out of range");
            }
            counts(x[s], y[s]) += 1.0;
        }
        positions += x.size();
    }
    if (positions == 0) {
        throw Error(ErrorCode::EmptyTrainingSet, "no training positions");
    }
    return JointDistribution::from_weights(counts, alphabet_a, alphabet_b);
}

JointDistribution model_from_json_text(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("model json: ") + e.what());
    }
    if (!doc.contains("p")) {
        throw Error(ErrorCode::InvalidArgument, "model json needs a \"p\" matrix");
    }
    Matrix p;
    std::vector<std::string> sa, sb;
    try {
        p = Matrix::from_rows(doc.at("p").get<std::vector<std::vector<double>>>());
        if (doc.contains("alphabet_a")) sa = doc.at("alphabet_a").get<std::vector<std::string>>();
        if (doc.contains("alphabet_b")) sb = doc.at("alphabet_b").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("model json: ") + e.what());
    }
    Alphabet a = doc.contains("alphabet_a") ? Alphabet(std::move(sa)) : Alphabet::numbered(p.rows());
    Alphabet b = doc.contains("alphabet_b") ? Alphabet(std::move(sb)) : Alphabet::numbered(p.cols());
    return JointDistribution::from_matrix(p, std::move(a), std::move(b));
}

std::string model_to_json_text(const JointDistribution& jd) {
    nlohmann::json doc;
    doc["alphabet_a"] = jd.alphabet_a().symbols();
    doc["alphabet_b"] = jd.alphabet_b().symbols();
    doc["p"] = jd.p_matrix().to_rows();
    return doc.dump(2);
}

JointDistribution load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::Io, "cannot open model file " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return model_from_json_text(ss.str());
}

void save_model(const JointDistribution& jd, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw Error(ErrorCode::Io, "cannot write model file " + path.string());
    }
    out << model_to_json_text(jd) << '\n';
}

}  // namespace forestdsh
