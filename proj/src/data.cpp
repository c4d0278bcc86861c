#include "forestdsh/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "forestdsh/rng.hpp"

namespace forestdsh {

namespace {

constexpr std::uint64_t kPlantedStream = 0x1000000000ULL;
constexpr std::uint64_t kLoneXStream = 0x2000000000ULL;
constexpr std::uint64_t kLoneYStream = 0x3000000000ULL;

Sequence draw_marginal(const Categorical& dist, std::size_t len, Rng& rng) {
    Sequence s(len);
    for (auto& v : s) v = static_cast<Symbol>(dist(rng));
    return s;
}

std::vector<std::string> split_tokens(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

}  // namespace

PairedDataset generate_pairs(const JointDistribution& jd, std::size_t n, std::size_t m, std::size_t seq_len,
                             std::uint64_t seed) {
    const std::size_t l = jd.l();
    const Categorical joint(jd.p_matrix().values());
    const Categorical marg_a(jd.pa_vector());
    const Categorical marg_b(jd.pb_vector());
    PairedDataset ds;
    ds.seed = seed;
    ds.x.resize(n);
    ds.y.resize(m);
    const std::size_t paired = std::min(n, m);
    for (std::size_t i = 0; i < paired; ++i) {
        Rng rng = make_rng(seed, kPlantedStream + i);
        Sequence x(seq_len), y(seq_len);
        for (std::size_t s = 0; s < seq_len; ++s) {
            const std::size_t cell = joint(rng);
            x[s] = static_cast<Symbol>(cell / l);
            y[s] = static_cast<Symbol>(cell % l);
        }
        ds.x[i] = std::move(x);
        ds.y[i] = std::move(y);
        ds.planted.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i));
    }
    for (std::size_t i = paired; i < n; ++i) {
        Rng rng = make_rng(seed, kLoneXStream + i);
        ds.x[i] = draw_marginal(marg_a, seq_len, rng);
    }
    for (std::size_t j = paired; j < m; ++j) {
        Rng rng = make_rng(seed, kLoneYStream + j);
        ds.y[j] = draw_marginal(marg_b, seq_len, rng);
    }
    return ds;
}

JointDistribution interpolate(const JointDistribution& p1, const JointDistribution& p2, double t) {
    if (p1.k() != p2.k() || p1.l() != p2.l()) {
        throw Error(ErrorCode::InvalidArgument, "interpolated distributions must have the same shape");
    }
    if (!(t >= 0.0 && t <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "t must lie in [0, 1]");
    }
    Matrix m(p1.k(), p1.l());
    for (std::size_t i = 0; i < p1.k(); ++i) {
        for (std::size_t j = 0; j < p1.l(); ++j) m(i, j) = p1.p(i, j) * (1.0 - t) + p2.p(i, j) * t;
    }
    return JointDistribution::from_matrix(m, p1.alphabet_a(), p1.alphabet_b());
}

JointDistribution perturb(const JointDistribution& jd, double epsilon, std::uint64_t seed, int max_attempts) {
    if (!(epsilon > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");
    }
    const double hi = 1.0 + epsilon;
    const double lo = 1.0 / hi;
    // slack for the division by the normalizer
    constexpr double rel = 1e-12;
    Rng rng = make_rng(seed, 0);
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        Matrix m(jd.k(), jd.l());
        double total = 0.0;
        for (auto [i, j] : jd.support()) {
            const double f = lo + (hi - lo) * uniform01(rng);
            m(i, j) = jd.p(i, j) * f;
            total += m(i, j);
        }
        bool inside = true;
        for (auto [i, j] : jd.support()) {
            m(i, j) /= total;
            const double ratio = m(i, j) / jd.p(i, j);
            inside = inside && ratio >= lo * (1.0 - rel) && ratio <= hi * (1.0 + rel);
        }
        if (inside) {
            return JointDistribution::from_matrix(m, jd.alphabet_a(), jd.alphabet_b());
        }
    }
    throw Error(ErrorCode::PerturbationInfeasible,
                "no perturbation inside the band after " + std::to_string(max_attempts) + " attempts");
}

std::uint32_t logrank_level(std::uint64_t rank, std::uint32_t base, std::uint32_t n_levels) {
    if (rank < 1) {
        throw Error(ErrorCode::InvalidRank, "ranks start at 1");
    }
    if (base < 2 || n_levels < 1) {
        throw Error(ErrorCode::InvalidArgument, "base must be >= 2 and n_levels >= 1");
    }
    std::uint32_t level = 1;
    for (std::uint64_t r = rank; r >= base && level < n_levels; r /= base) ++level;
    return level;
}

Sequence logrank_transform(std::span<const std::optional<std::uint64_t>> ranks, std::uint32_t base,
                           std::uint32_t n_levels) {
    Sequence out;
    out.reserve(ranks.size());
    for (const auto& r : ranks) {
        out.push_back(r ? static_cast<Symbol>(logrank_level(*r, base, n_levels) - 1) : static_cast<Symbol>(n_levels));
    }
    return out;
}

Alphabet logrank_alphabet(std::uint32_t n_levels) {
    std::vector<std::string> syms;
    for (std::uint32_t i = 1; i <= n_levels; ++i) syms.push_back(std::to_string(i));
    syms.emplace_back("absent");
    return Alphabet(std::move(syms));
}

std::vector<std::vector<std::optional<std::uint64_t>>> read_rank_lists(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open rank file " + path.string());
    std::vector<std::vector<std::optional<std::uint64_t>>> items;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::vector<std::optional<std::uint64_t>> ranks;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) {
            const auto b = field.find_first_not_of(" \t\r");
            const auto e = field.find_last_not_of(" \t\r");
            const std::string f = b == std::string::npos ? "" : field.substr(b, e - b + 1);
            if (f.empty() || f == "-") {
                ranks.emplace_back(std::nullopt);
                continue;
            }
            long long v = 0;
            try {
                std::size_t used = 0;
                v = std::stoll(f, &used);
                if (used != f.size()) throw std::invalid_argument(f);
            } catch (const std::exception&) {
                throw Error(ErrorCode::InvalidRank, "line " + std::to_string(line_no) + ": bad rank '" + f + "'");
            }
            if (v < 1) {
                throw Error(ErrorCode::InvalidRank, "line " + std::to_string(line_no) + ": rank must be >= 1");
            }
            ranks.emplace_back(static_cast<std::uint64_t>(v));
        }
        items.push_back(std::move(ranks));
    }
    return items;
}

std::vector<Sequence> read_sequences(const std::filesystem::path& path, const Alphabet& alphabet) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open sequence file " + path.string());
    std::vector<Sequence> out;
    std::string line;
    while (std::getline(in, line)) {
        const auto tokens = split_tokens(line);
        if (tokens.empty()) continue;
        Sequence s;
        s.reserve(tokens.size());
        for (const auto& t : tokens) s.push_back(alphabet.index_of(t));
        out.push_back(std::move(s));
    }
    return out;
}

void write_sequences(const std::filesystem::path& path, std::span<const Sequence> seqs, const Alphabet& alphabet) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::Io, "cannot write sequence file " + path.string());
    for (const auto& s : seqs) {
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (i) out << ' ';
            out << alphabet.symbol(s[i]);
        }
        out << '\n';
    }
}

}  // namespace forestdsh
