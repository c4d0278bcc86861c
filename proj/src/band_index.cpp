#include "forestdsh/band_index.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <numeric>
#include <thread>

#include "forestdsh/rng.hpp"

namespace forestdsh {

namespace {

constexpr char kIndexMagic[8] = {'F', 'D', 'S', 'H', 'I', 'D', 'X', '1'};

template <class T>
void put(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
void put_vec(std::ostream& out, const std::vector<T>& v) {
    put<std::uint64_t>(out, v.size());
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(T)));
}

template <class T>
T get(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw Error(ErrorCode::Io, "truncated index file");
    return v;
}

template <class T>
std::vector<T> get_vec(std::istream& in) {
    const auto n = get<std::uint64_t>(in);
    std::vector<T> v(n);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
    if (!in) throw Error(ErrorCode::Io, "truncated index file");
    return v;
}

void check_length(const DecisionTree& tree, const BandSet& bands, std::span<const Symbol> seq) {
    if (seq.size() != bands.seq_len()) {
        throw Error(ErrorCode::LengthMismatch, "sequence length " + std::to_string(seq.size()) +
                                                   " does not match band length " + std::to_string(bands.seq_len()));
    }
    if (bands.seq_len() < tree.max_bucket_depth()) {
        throw Error(ErrorCode::LengthMismatch, "sequences are shorter than the deepest bucket");
    }
}

}  // namespace

BandSet::BandSet(std::size_t n_bands, std::size_t seq_len, std::uint64_t seed) : seq_len_(seq_len), seed_(seed) {
    perms_.reserve(n_bands);
    for (std::size_t z = 0; z < n_bands; ++z) {
        std::vector<std::uint32_t> perm(seq_len);
        std::iota(perm.begin(), perm.end(), 0u);
        Rng rng = make_rng(seed, z);
        shuffle(perm, rng);
        perms_.push_back(std::move(perm));
    }
}

BandSet BandSet::identity(std::size_t n_bands, std::size_t seq_len) {
    std::vector<std::uint32_t> perm(seq_len);
    std::iota(perm.begin(), perm.end(), 0u);
    return from_permutations(std::vector<std::vector<std::uint32_t>>(n_bands, perm), 0);
}

BandSet BandSet::from_permutations(std::vector<std::vector<std::uint32_t>> perms, std::uint64_t seed) {
    BandSet b;
    b.seed_ = seed;
    b.seq_len_ = perms.empty() ? 0 : perms.front().size();
    for (const auto& p : perms) {
        std::vector<char> seen(p.size(), 0);
        if (p.size() != b.seq_len_) {
            throw Error(ErrorCode::InvalidArgument, "permutations differ in length");
        }
        for (auto s : p) {
            if (s >= p.size() || seen[s]) {
                throw Error(ErrorCode::InvalidArgument, "band permutation is not a bijection");
            }
            seen[s] = 1;
        }
    }
    b.perms_ = std::move(perms);
    return b;
}

BandSet BandSet::prefix(std::size_t n) const {
    BandSet b;
    b.seq_len_ = seq_len_;
    b.seed_ = seed_;
    b.perms_.assign(perms_.begin(), perms_.begin() + static_cast<std::ptrdiff_t>(std::min(n, perms_.size())));
    return b;
}

std::vector<NodeId> assign_side(const DecisionTree& tree, const BandSet& bands, std::size_t band, Side side,
                                std::span<const Symbol> seq) {
    check_length(tree, bands, seq);
    const auto& perm = bands.permutation(band);
    std::vector<NodeId> out;
    tree.visit_buckets(side, seq.size(), [&](std::size_t d) { return seq[perm[d]]; },
                       [&](NodeId v) { out.push_back(v); });
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::vector<NodeId>> assign_a(const DecisionTree& tree, const BandSet& bands, std::span<const Symbol> x) {
    std::vector<std::vector<NodeId>> out;
    for (std::size_t z = 0; z < bands.n_bands(); ++z) out.push_back(assign_side(tree, bands, z, Side::A, x));
    return out;
}

std::vector<std::vector<NodeId>> assign_b(const DecisionTree& tree, const BandSet& bands, std::span<const Symbol> y) {
    std::vector<std::vector<NodeId>> out;
    for (std::size_t z = 0; z < bands.n_bands(); ++z) out.push_back(assign_side(tree, bands, z, Side::B, y));
    return out;
}

std::vector<NodeId> assign_brute_force(const DecisionTree& tree, const BandSet& bands, std::size_t band, Side side,
                                       std::span<const Symbol> seq) {
    check_length(tree, bands, seq);
    const auto& perm = bands.permutation(band);
    std::vector<NodeId> out;
    for (NodeId v : tree.buckets()) {
        const Sequence prefix = side == Side::A ? tree.seq_a(v) : tree.seq_b(v);
        bool match = prefix.size() <= seq.size();
        for (std::size_t d = 0; match && d < prefix.size(); ++d) {
            match = seq[perm[d]] == prefix[d];
        }
        if (match) out.push_back(v);
    }
    std::sort(out.begin(), out.end());
    return out;
}

BandIndex BandIndex::build(const DecisionTree& tree, const BandSet& bands, std::vector<Sequence> points,
                           unsigned n_threads) {
    for (const auto& x : points) check_length(tree, bands, x);
    if (points.size() > 0xfffffffeu) {
        throw Error(ErrorCode::InvalidArgument, "too many points for 32-bit ids");
    }
    BandIndex index;
    index.points_ = std::move(points);
    index.bands_ = bands;
    index.tree_fingerprint_ = tree.fingerprint();
    index.bucket_rank_.assign(tree.size(), kNoNode);
    const auto& buckets = tree.buckets();
    for (std::uint32_t r = 0; r < buckets.size(); ++r) index.bucket_rank_[buckets[r]] = r;
    index.tables_.resize(bands.n_bands());

    auto build_band = [&](std::size_t z) {
        const auto& perm = bands.permutation(z);
        std::vector<std::uint32_t> ranks;
        std::vector<std::uint64_t> counts(buckets.size() + 1, 0);
        std::vector<std::pair<std::uint32_t, PointId>> entries;
        for (PointId id = 0; id < index.points_.size(); ++id) {
            const auto& x = index.points_[id];
            tree.visit_buckets(Side::A, x.size(), [&](std::size_t d) { return x[perm[d]]; }, [&](NodeId v) {
                const std::uint32_t r = index.bucket_rank_[v];
                entries.emplace_back(r, id);
                ++counts[r + 1];
            });
        }
        Table& t = index.tables_[z];
        t.offsets.assign(counts.size(), 0);
        std::partial_sum(counts.begin(), counts.end(), t.offsets.begin());
        t.ids.resize(entries.size());
        std::vector<std::uint64_t> cursor(t.offsets.begin(), t.offsets.end() - 1);
        // entries are in point order, so each bucket list stays in input order
        for (const auto& [r, id] : entries) t.ids[cursor[r]++] = id;
    };

    const unsigned workers = std::max(1u, std::min<unsigned>(n_threads, static_cast<unsigned>(bands.n_bands())));
    if (workers == 1) {
        for (std::size_t z = 0; z < bands.n_bands(); ++z) build_band(z);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t z = w; z < bands.n_bands(); z += workers) build_band(z);
            });
        }
        for (auto& th : pool) th.join();
    }
    return index;
}

std::span<const PointId> BandIndex::lookup(NodeId v, std::size_t band) const {
    const Table& t = tables_.at(band);
    if (v >= bucket_rank_.size() || bucket_rank_[v] == kNoNode) {
        return {};
    }
    const std::uint32_t r = bucket_rank_[v];
    return std::span<const PointId>(t.ids.data() + t.offsets[r], t.offsets[r + 1] - t.offsets[r]);
}

std::uint64_t BandIndex::total_insertions() const {
    std::uint64_t total = 0;
    for (std::size_t z = 0; z < tables_.size(); ++z) total += insertions(z);
    return total;
}

void BandIndex::check_tree(const DecisionTree& tree) const {
    if (tree.fingerprint() != tree_fingerprint_) {
        throw Error(ErrorCode::InvalidArgument, "index was built from a different tree");
    }
}

void BandIndex::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write index file " + path.string());
    out.write(kIndexMagic, sizeof kIndexMagic);
    put(out, tree_fingerprint_);
    put<std::uint64_t>(out, bands_.seed());
    put<std::uint64_t>(out, bands_.n_bands());
    for (std::size_t z = 0; z < bands_.n_bands(); ++z) put_vec(out, bands_.permutation(z));
    put<std::uint64_t>(out, points_.size());
    for (const auto& x : points_) put_vec(out, x);
    put_vec(out, bucket_rank_);
    for (const auto& t : tables_) {
        put_vec(out, t.offsets);
        put_vec(out, t.ids);
    }
    if (!out) throw Error(ErrorCode::Io, "failed writing index file " + path.string());
}

BandIndex BandIndex::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open index file " + path.string());
    char magic[sizeof kIndexMagic];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kIndexMagic, sizeof magic) != 0) {
        throw Error(ErrorCode::Io, path.string() + " is not an index file");
    }
    BandIndex index;
    index.tree_fingerprint_ = get<std::uint64_t>(in);
    const auto seed = get<std::uint64_t>(in);
    const auto n_bands = get<std::uint64_t>(in);
    std::vector<std::vector<std::uint32_t>> perms;
    for (std::uint64_t z = 0; z < n_bands; ++z) perms.push_back(get_vec<std::uint32_t>(in));
    index.bands_ = BandSet::from_permutations(std::move(perms), seed);
    const auto n_points = get<std::uint64_t>(in);
    index.points_.reserve(n_points);
    for (std::uint64_t i = 0; i < n_points; ++i) index.points_.push_back(get_vec<Symbol>(in));
    index.bucket_rank_ = get_vec<std::uint32_t>(in);
    for (std::uint64_t z = 0; z < n_bands; ++z) {
        Table t;
        t.offsets = get_vec<std::uint64_t>(in);
        t.ids = get_vec<PointId>(in);
        index.tables_.push_back(std::move(t));
    }
    return index;
}

}  // namespace forestdsh
