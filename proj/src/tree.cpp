#include "forestdsh/tree.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "forestdsh/rng.hpp"

namespace forestdsh {

namespace {

double log_sum_exp(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    const double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

constexpr char kTreeMagic[8] = {'F', 'D', 'S', 'H', 'T', 'R', 'E', '1'};

template <class T>
void put(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) {
        throw Error(ErrorCode::Io, "truncated tree file");
    }
    return v;
}

void put_string(std::ostream& out, const std::string& s) {
    put<std::uint64_t>(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
    const auto n = get<std::uint64_t>(in);
    std::string s(n, '\0');
    in.read(s.data(), static_cast<std::streamsize>(n));
    if (!in) {
        throw Error(ErrorCode::Io, "truncated tree file");
    }
    return s;
}

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

Thresholds Thresholds::linear(double c1, double c2, double c3) {
    if (!(c1 > 0.0) || !(c2 > 0.0) || !(c3 > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "thresholds must be positive");
    }
    return {std::log(c1), std::log(c2), std::log(c3)};
}

Thresholds Thresholds::from_params(const HashParams& params) {
    const double c = params.log_p0 + params.log_q0;
    return {c, c, c};
}

Thresholds Thresholds::scaled(const HashParams& params, double scale) {
    if (!(scale > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "threshold scale must be positive");
    }
    const double c = params.log_p0 + params.log_q0 + std::log(scale);
    return {c, c, c};
}

DecisionTree::DecisionTree(JointDistribution model, HashParams params, ProblemDims dims, Thresholds thresholds)
    : model_(std::move(model)), params_(std::move(params)), dims_(dims), thresholds_(thresholds) {
    index_support();
}

void DecisionTree::index_support() {
    offsets_a_.assign(model_.k(), {});
    offsets_b_.assign(model_.l(), {});
    cell_offset_.assign(model_.k() * model_.l(), -1);
    const auto& support = model_.support();
    for (std::uint32_t off = 0; off < support.size(); ++off) {
        const auto [a, b] = support[off];
        offsets_a_[a].push_back(off);
        offsets_b_[b].push_back(off);
        cell_offset_[static_cast<std::size_t>(a) * model_.l() + b] = off;
    }
}

std::int64_t DecisionTree::offset_for_cell(Symbol a, Symbol b) const {
    if (a >= model_.k() || b >= model_.l()) {
        return -1;
    }
    return cell_offset_[static_cast<std::size_t>(a) * model_.l() + b];
}

std::size_t DecisionTree::leaf_count() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.status != NodeStatus::Internal; }));
}

Sequence DecisionTree::seq_a(NodeId id) const {
    Sequence out(nodes_.at(id).depth);
    for (NodeId v = id; v != 0; v = nodes_[v].parent) {
        out[nodes_[v].depth - 1] = nodes_[v].sym_a;
    }
    return out;
}

Sequence DecisionTree::seq_b(NodeId id) const {
    Sequence out(nodes_.at(id).depth);
    for (NodeId v = id; v != 0; v = nodes_[v].parent) {
        out[nodes_[v].depth - 1] = nodes_[v].sym_b;
    }
    return out;
}

bool DecisionTree::is_ancestor(NodeId ancestor, NodeId id) const {
    for (NodeId v = nodes_.at(id).parent; v != kNoNode; v = nodes_[v].parent) {
        if (v == ancestor) {
            return true;
        }
    }
    return false;
}

DecisionTree build_tree(const JointDistribution& jd, const HashParams& params, const ProblemDims& dims,
                        const Thresholds& thresholds, const TreeLimits& limits) {
    dims.validate();
    DecisionTree tree(jd, params, dims, thresholds);
    const double log_n = std::log(static_cast<double>(dims.n_classes));
    const double delta = dims.delta();
    const double lambda = params.lambda;
    const double accept_at = thresholds.log_c1 + (1.0 + delta - lambda) * log_n;
    const double prune_a_at = thresholds.log_c2 + (1.0 - lambda) * log_n;
    const double prune_b_at = thresholds.log_c3 + (delta - lambda) * log_n;
    const std::uint64_t depth_cap64 =
        limits.max_depth == 0 ? dims.seq_len : std::min<std::uint64_t>(limits.max_depth, dims.seq_len);
    const auto depth_cap = static_cast<std::uint32_t>(std::min<std::uint64_t>(depth_cap64, 0xfffffffeu));
    tree.max_depth_ = depth_cap;

    struct Cell {
        Symbol a, b;
        double log_p, log_pa, log_pb;
    };
    std::vector<Cell> cells;
    for (auto [a, b] : jd.support()) {
        cells.push_back({a, b, jd.log_p(a, b), jd.log_pa(a), jd.log_pb(b)});
    }

    auto& nodes = tree.nodes_;
    nodes.push_back(TreeNode{});
    double capped_log_mass = -std::numeric_limits<double>::infinity();
    std::vector<NodeId> stack{0};
    std::vector<NodeId> branching;
    while (!stack.empty()) {
        const NodeId v = stack.back();
        stack.pop_back();
        if (nodes.size() + cells.size() > limits.max_nodes) {
            throw Error(ErrorCode::NodeBudgetExceeded,
                        "tree exceeds " + std::to_string(limits.max_nodes) + " nodes; thresholds too permissive");
        }
        const TreeNode parent = nodes[v];
        const auto first = static_cast<NodeId>(nodes.size());
        nodes[v].first_child = first;
        nodes[v].child_count = static_cast<std::uint32_t>(cells.size());
        branching.clear();
        for (const auto& c : cells) {
            TreeNode w;
            w.parent = v;
            w.depth = parent.depth + 1;
            w.sym_a = c.a;
            w.sym_b = c.b;
            w.log_phi = parent.log_phi + c.log_p;
            w.log_psi_a = parent.log_psi_a + c.log_pa;
            w.log_psi_b = parent.log_psi_b + c.log_pb;
            const auto id = static_cast<NodeId>(nodes.size());
            if (w.log_phi - w.log_psi() >= accept_at) {
                w.status = NodeStatus::Bucket;
                tree.buckets_.push_back(id);
                tree.max_bucket_depth_ = std::max(tree.max_bucket_depth_, w.depth);
            } else if (w.log_phi - w.log_psi_a <= prune_a_at || w.log_phi - w.log_psi_b <= prune_b_at) {
                w.status = NodeStatus::Pruned;
            } else if (w.depth >= depth_cap) {
                w.status = NodeStatus::Pruned;
                ++tree.depth_capped_nodes_;
                capped_log_mass = log_sum_exp(capped_log_mass, w.log_phi);
            } else {
                w.status = NodeStatus::Internal;
                branching.push_back(id);
            }
            nodes.push_back(w);
        }
        // reverse so the first branching child is expanded next (pre-order)
        stack.insert(stack.end(), branching.rbegin(), branching.rend());
    }
    tree.depth_capped_mass_ = std::exp(capped_log_mass);
    if (tree.buckets_.empty()) {
        throw Error(ErrorCode::EmptyBucketSet, "no node was accepted as a bucket (C1 too large or depth cap too small)");
    }
    return tree;
}

DecisionTree make_root_bucket_tree(const JointDistribution& jd, const HashParams& params, const ProblemDims& dims) {
    dims.validate();
    DecisionTree tree(jd, params, dims, Thresholds{});
    TreeNode root;
    root.status = NodeStatus::Bucket;
    tree.nodes_.push_back(root);
    tree.buckets_.push_back(0);
    tree.max_depth_ = 0;
    return tree;
}

DecisionTree make_tree_from_paths(const JointDistribution& jd, const HashParams& params, const ProblemDims& dims,
                                  std::span<const std::vector<std::pair<Symbol, Symbol>>> bucket_paths) {
    if (bucket_paths.empty()) {
        throw Error(ErrorCode::EmptyBucketSet, "no bucket paths given");
    }
    for (const auto& path : bucket_paths) {
        if (path.empty()) {
            if (bucket_paths.size() != 1) {
                throw Error(ErrorCode::InvalidArgument, "root bucket cannot coexist with other buckets");
            }
            return make_root_bucket_tree(jd, params, dims);
        }
    }
    dims.validate();
    DecisionTree tree(jd, params, dims, Thresholds{});
    auto& nodes = tree.nodes_;
    const auto& support = jd.support();
    nodes.push_back(TreeNode{});
    struct Work {
        NodeId id;
        std::vector<std::size_t> paths;
    };
    std::vector<Work> stack;
    stack.push_back({0, {}});
    for (std::size_t i = 0; i < bucket_paths.size(); ++i) stack.back().paths.push_back(i);
    while (!stack.empty()) {
        Work w = std::move(stack.back());
        stack.pop_back();
        const TreeNode parent = nodes[w.id];
        const std::size_t d = parent.depth;
        const auto first = static_cast<NodeId>(nodes.size());
        nodes[w.id].first_child = first;
        nodes[w.id].child_count = static_cast<std::uint32_t>(support.size());
        std::vector<std::vector<std::size_t>> routed(support.size());
        for (std::size_t pi : w.paths) {
            const auto [a, b] = bucket_paths[pi][d];
            const std::int64_t off = tree.offset_for_cell(a, b);
            if (off < 0) {
                throw Error(ErrorCode::InvalidArgument, "bucket path uses a zero-probability cell");
            }
            routed[static_cast<std::size_t>(off)].push_back(pi);
        }
        std::vector<Work> next;
        for (std::size_t off = 0; off < support.size(); ++off) {
            const auto [a, b] = support[off];
            TreeNode c;
            c.parent = w.id;
            c.depth = parent.depth + 1;
            c.sym_a = a;
            c.sym_b = b;
            c.log_phi = parent.log_phi + jd.log_p(a, b);
            c.log_psi_a = parent.log_psi_a + jd.log_pa(a);
            c.log_psi_b = parent.log_psi_b + jd.log_pb(b);
            c.status = NodeStatus::Pruned;
            const auto id = static_cast<NodeId>(nodes.size());
            const auto& here = routed[off];
            const bool ends = std::any_of(here.begin(), here.end(),
                                          [&](std::size_t pi) { return bucket_paths[pi].size() == c.depth; });
            if (ends) {
                if (here.size() != 1) {
                    throw Error(ErrorCode::InvalidArgument, "bucket paths must not be prefixes of each other");
                }
                c.status = NodeStatus::Bucket;
                tree.buckets_.push_back(id);
                tree.max_bucket_depth_ = std::max(tree.max_bucket_depth_, c.depth);
            } else if (!here.empty()) {
                c.status = NodeStatus::Internal;
                next.push_back({id, here});
            }
            nodes.push_back(c);
        }
        for (auto it = next.rbegin(); it != next.rend(); ++it) stack.push_back(std::move(*it));
    }
    tree.max_depth_ = tree.max_bucket_depth_;
    return tree;
}

std::uint64_t DecisionTree::fingerprint() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& n : nodes_) {
        h = fnv1a(h, &n.parent, sizeof n.parent);
        h = fnv1a(h, &n.status, sizeof n.status);
        h = fnv1a(h, &n.sym_a, sizeof n.sym_a);
        h = fnv1a(h, &n.sym_b, sizeof n.sym_b);
    }
    h = fnv1a(h, &thresholds_, sizeof thresholds_);
    for (double v : model_.p_matrix().values()) {
        h = fnv1a(h, &v, sizeof v);
    }
    return h;
}

void DecisionTree::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorCode::Io, "cannot write tree file " + path.string());
    }
    out.write(kTreeMagic, sizeof kTreeMagic);
    put_string(out, model_to_json_text(model_));
    put(out, params_.mu);
    put(out, params_.nu);
    put(out, params_.eta);
    put(out, params_.lambda);
    put(out, params_.delta);
    put(out, params_.log_p0);
    put(out, params_.log_q0);
    put(out, params_.n_star);
    put(out, params_.residual);
    for (double v : params_.r_star.values()) put(out, v);
    put(out, dims_.n_classes);
    put(out, dims_.n_queries);
    put(out, dims_.seq_len);
    put(out, thresholds_);
    put(out, max_depth_);
    put<std::uint64_t>(out, depth_capped_nodes_);
    put(out, depth_capped_mass_);
    put<std::uint64_t>(out, nodes_.size());
    for (const auto& n : nodes_) {
        put(out, n.parent);
        put(out, n.first_child);
        put(out, n.child_count);
        put(out, n.depth);
        put(out, n.sym_a);
        put(out, n.sym_b);
        put(out, n.status);
        put(out, n.log_phi);
        put(out, n.log_psi_a);
        put(out, n.log_psi_b);
    }
    if (!out) {
        throw Error(ErrorCode::Io, "failed writing tree file " + path.string());
    }
}

DecisionTree DecisionTree::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::Io, "cannot open tree file " + path.string());
    }
    char magic[sizeof kTreeMagic];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kTreeMagic, sizeof magic) != 0) {
        throw Error(ErrorCode::Io, path.string() + " is not a tree file");
    }
    JointDistribution model = model_from_json_text(get_string(in));
    HashParams hp;
    hp.mu = get<double>(in);
    hp.nu = get<double>(in);
    hp.eta = get<double>(in);
    hp.lambda = get<double>(in);
    hp.delta = get<double>(in);
    hp.log_p0 = get<double>(in);
    hp.log_q0 = get<double>(in);
    hp.p0 = std::exp(hp.log_p0);
    hp.q0 = std::exp(hp.log_q0);
    hp.n_star = get<double>(in);
    hp.residual = get<double>(in);
    hp.r_star = Matrix(model.k(), model.l());
    for (std::size_t i = 0; i < model.k(); ++i) {
        for (std::size_t j = 0; j < model.l(); ++j) {
            hp.r_star(i, j) = get<double>(in);
        }
    }
    ProblemDims dims;
    dims.n_classes = get<std::uint64_t>(in);
    dims.n_queries = get<std::uint64_t>(in);
    dims.seq_len = get<std::uint64_t>(in);
    const auto thresholds = get<Thresholds>(in);
    DecisionTree tree(std::move(model), std::move(hp), dims, thresholds);
    tree.max_depth_ = get<std::uint32_t>(in);
    tree.depth_capped_nodes_ = get<std::uint64_t>(in);
    tree.depth_capped_mass_ = get<double>(in);
    const auto n = get<std::uint64_t>(in);
    tree.nodes_.resize(n);
    for (std::uint64_t id = 0; id < n; ++id) {
        auto& node = tree.nodes_[id];
        node.parent = get<NodeId>(in);
        node.first_child = get<NodeId>(in);
        node.child_count = get<std::uint32_t>(in);
        node.depth = get<std::uint32_t>(in);
        node.sym_a = get<Symbol>(in);
        node.sym_b = get<Symbol>(in);
        node.status = get<NodeStatus>(in);
        node.log_phi = get<double>(in);
        node.log_psi_a = get<double>(in);
        node.log_psi_b = get<double>(in);
        if (node.status == NodeStatus::Bucket) {
            tree.buckets_.push_back(static_cast<NodeId>(id));
            tree.max_bucket_depth_ = std::max(tree.max_bucket_depth_, node.depth);
        }
    }
    return tree;
}

std::uint64_t bands_for_target(double alpha, double tp_target) {
    if (!(alpha > 0.0) || alpha > 1.0 + 1e-12) {
        throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 1]");
    }
    if (!(tp_target > 0.0 && tp_target < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "tp_target must lie in (0, 1)");
    }
    // a family that always collides needs one band whatever the target
    if (alpha >= 1.0 - 1e-12) return 1;
    const double raw = -std::log1p(-tp_target) / alpha;
    // absorb rounding noise so that exact integers are not bumped up by one
    const double bands = std::ceil(raw * (1.0 - 1e-12));
    return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(bands));
}

FamilyStats family_stats(const DecisionTree& tree, double tp_target) {
    if (tree.buckets().empty()) {
        throw Error(ErrorCode::EmptyBucketSet, "tree has no buckets");
    }
    constexpr double ninf = -std::numeric_limits<double>::infinity();
    double la = ninf, lb = ninf, lga = ninf, lgb = ninf;
    for (NodeId id : tree.buckets()) {
        const auto& n = tree.node(id);
        la = log_sum_exp(la, n.log_phi);
        lb = log_sum_exp(lb, n.log_psi());
        lga = log_sum_exp(lga, n.log_psi_a);
        lgb = log_sum_exp(lgb, n.log_psi_b);
    }
    FamilyStats s;
    s.alpha = std::min(1.0, std::exp(la));
    s.beta = std::exp(lb);
    s.gamma_a = std::exp(lga);
    s.gamma_b = std::exp(lgb);
    s.tp_target = tp_target;
    s.n_bands = bands_for_target(s.alpha, tp_target);
    s.predicted_tp = 1.0 - std::pow(1.0 - s.alpha, static_cast<double>(s.n_bands));
    return s;
}

FamilyEstimate occupancy_estimates(std::span<const Occupancy> per_bucket, std::size_t n_a, std::size_t n_b) {
    if (n_a == 0 || n_b == 0) {
        throw Error(ErrorCode::InvalidArgument, "occupancy needs non-empty sample sets");
    }
    double pairs = 0.0, sa = 0.0, sb = 0.0;
    for (const auto& o : per_bucket) {
        pairs += static_cast<double>(o.from_a) * static_cast<double>(o.from_b);
        sa += static_cast<double>(o.from_a);
        sb += static_cast<double>(o.from_b);
    }
    FamilyEstimate e;
    e.beta = pairs / (static_cast<double>(n_a) * static_cast<double>(n_b));
    e.gamma_a = sa / static_cast<double>(n_a);
    e.gamma_b = sb / static_cast<double>(n_b);
    return e;
}

FamilyEstimate estimate_family_stats(const DecisionTree& tree, std::size_t n_samples, std::uint64_t seed) {
    if (n_samples == 0) {
        throw Error(ErrorCode::InvalidArgument, "n_samples must be >= 1");
    }
    const auto& jd = tree.model();
    const auto& nodes = tree.nodes();
    const std::size_t depth = tree.max_bucket_depth();
    const double n = static_cast<double>(n_samples);

    // alpha: walk the single path of a jointly drawn pair
    std::vector<double> cell_weights;
    for (auto [a, b] : jd.support()) cell_weights.push_back(jd.p(a, b));
    const Categorical joint(cell_weights);
    Rng rng = make_rng(seed, 1);
    std::size_t hits = 0;
    for (std::size_t t = 0; t < n_samples; ++t) {
        NodeId v = 0;
        while (nodes[v].status == NodeStatus::Internal) {
            v = nodes[v].first_child + static_cast<NodeId>(joint(rng));
        }
        hits += nodes[v].status == NodeStatus::Bucket ? 1 : 0;
    }

    // gamma / beta: independent marginal samples, per-bucket occupancy
    const Categorical marg_a(jd.pa_vector());
    const Categorical marg_b(jd.pb_vector());
    Rng rng_a = make_rng(seed, 2);
    Rng rng_b = make_rng(seed, 3);
    std::vector<std::uint32_t> count_a(nodes.size(), 0), count_b(nodes.size(), 0);
    std::vector<std::vector<NodeId>> member_a(n_samples), member_b(n_samples);
    Sequence buf(depth);
    for (std::size_t t = 0; t < n_samples; ++t) {
        for (auto& s : buf) s = static_cast<Symbol>(marg_a(rng_a));
        tree.visit_buckets(Side::A, depth, [&](std::size_t d) { return buf[d]; }, [&](NodeId v) {
            ++count_a[v];
            member_a[t].push_back(v);
        });
        for (auto& s : buf) s = static_cast<Symbol>(marg_b(rng_b));
        tree.visit_buckets(Side::B, depth, [&](std::size_t d) { return buf[d]; }, [&](NodeId v) {
            ++count_b[v];
            member_b[t].push_back(v);
        });
    }

    std::vector<Occupancy> occ;
    occ.reserve(tree.buckets().size());
    for (NodeId v : tree.buckets()) occ.push_back({count_a[v], count_b[v]});
    FamilyEstimate e = occupancy_estimates(occ, n_samples, n_samples);
    e.alpha = static_cast<double>(hits) / n;
    e.se_alpha = std::sqrt(std::max(e.alpha * (1.0 - e.alpha), 1.0 / n) / n);

    // per-sample projections for the standard errors
    auto mean_var = [&](auto&& value_of) {
        double s = 0.0, s2 = 0.0;
        for (std::size_t t = 0; t < n_samples; ++t) {
            const double x = value_of(t);
            s += x;
            s2 += x * x;
        }
        const double m = s / n;
        return std::max(0.0, s2 / n - m * m) * n / std::max(1.0, n - 1.0);
    };
    const double var_ga = mean_var([&](std::size_t t) { return static_cast<double>(member_a[t].size()); });
    const double var_gb = mean_var([&](std::size_t t) { return static_cast<double>(member_b[t].size()); });
    const double var_h1 = mean_var([&](std::size_t t) {
        double acc = 0.0;
        for (NodeId v : member_a[t]) acc += count_b[v];
        return acc / n;
    });
    const double var_h2 = mean_var([&](std::size_t t) {
        double acc = 0.0;
        for (NodeId v : member_b[t]) acc += count_a[v];
        return acc / n;
    });
    e.se_gamma_a = std::sqrt(var_ga / n);
    e.se_gamma_b = std::sqrt(var_gb / n);
    e.se_beta = std::sqrt(var_h1 / n + var_h2 / n);
    return e;
}

CostReport complexity_report(std::size_t tree_nodes, const FamilyStats& stats, const ProblemDims& dims,
                             const CostModel& cost) {
    if (!(cost.c_tree > 0 && cost.c_hash > 0 && cost.c_insertion > 0 && cost.c_pos > 0)) {
        throw Error(ErrorCode::InvalidArgument, "cost constants must be positive");
    }
    const double n = static_cast<double>(dims.n_classes);
    const double m = static_cast<double>(dims.n_queries);
    CostReport r;
    r.tree_term = cost.c_tree * static_cast<double>(tree_nodes);
    r.hash_term = cost.c_hash * (n + m);
    r.insertion_term = cost.c_insertion * (n * stats.gamma_a + m * stats.gamma_b);
    r.positive_term = cost.c_pos * m * n * stats.beta;
    const double per_band = r.hash_term + r.insertion_term + r.positive_term;
    const double band_factor = -std::log1p(-stats.tp_target) / stats.alpha;
    r.total = r.tree_term + per_band * band_factor;
    r.total_integer_bands = r.tree_term + per_band * static_cast<double>(stats.n_bands);
    return r;
}

CostReport complexity_report(const DecisionTree& tree, const FamilyStats& stats, const CostModel& cost) {
    return complexity_report(tree.size(), stats, tree.dims(), cost);
}

double lower_bound_log_quantity(const FamilyStats& stats, const HashParams& params) {
    const double mu = params.mu, nu = params.nu, eta = params.eta;
    return (1.0 + mu + nu - eta) * std::log(stats.alpha) + (eta - mu) * std::log(stats.gamma_a) +
           (eta - nu) * std::log(stats.gamma_b) - eta * std::log(stats.beta);
}

std::string tree_summary_json(const DecisionTree& tree, const FamilyStats& stats) {
    nlohmann::json j;
    j["nodes"] = tree.size();
    j["leaves"] = tree.leaf_count();
    j["buckets"] = tree.buckets().size();
    j["max_bucket_depth"] = tree.max_bucket_depth();
    j["depth_capped_nodes"] = tree.depth_capped_nodes();
    j["depth_capped_mass"] = tree.depth_capped_mass();
    j["alpha"] = stats.alpha;
    j["beta"] = stats.beta;
    j["gamma_a"] = stats.gamma_a;
    j["gamma_b"] = stats.gamma_b;
    j["n_bands"] = stats.n_bands;
    j["tp_target"] = stats.tp_target;
    j["predicted_tp"] = stats.predicted_tp;
    j["lambda"] = tree.params().lambda;
    j["fingerprint"] = tree.fingerprint();
    return j.dump(2);
}

}  // namespace forestdsh
