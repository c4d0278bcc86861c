#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "forestdsh/distribution.hpp"
#include "forestdsh/solver.hpp"

namespace forestdsh {

using NodeId = std::uint32_t;
inline constexpr NodeId kNoNode = 0xffffffffu;

enum class NodeStatus : std::uint8_t { Internal = 0, Bucket = 1, Pruned = 2 };

enum class Side : std::uint8_t { A = 0, B = 1 };

/// One node of the decision tree. Children of an internal node occupy the id range
/// [first_child, first_child + child_count) in support order of the distribution, so the
/// child reached by cell (a_i, b_j) sits at a fixed offset for every internal node.
struct TreeNode {
    NodeId parent = kNoNode;
    NodeId first_child = kNoNode;
    std::uint32_t child_count = 0;
    std::uint32_t depth = 0;
    Symbol sym_a = 0;  // edge label from the parent
    Symbol sym_b = 0;
    NodeStatus status = NodeStatus::Internal;
    double log_phi = 0.0;
    double log_psi_a = 0.0;
    double log_psi_b = 0.0;

    double log_psi() const noexcept { return log_psi_a + log_psi_b; }
};

/// Accept / prune constants, kept in log domain (p0*q0 underflows for larger alphabets).
struct Thresholds {
    double log_c1 = 0.0;
    double log_c2 = 0.0;
    double log_c3 = 0.0;

    static Thresholds linear(double c1, double c2, double c3);
    /// C1 = C2 = C3 = p0 * q0.
    static Thresholds from_params(const HashParams& params);
    /// All three equal to `scale * p0 * q0`.
    static Thresholds scaled(const HashParams& params, double scale);
};

struct TreeLimits {
    std::uint32_t max_depth = 0;  // 0 means "use S"
    std::size_t max_nodes = 20'000'000;
};

class DecisionTree {
public:
    const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
    const TreeNode& node(NodeId id) const { return nodes_.at(id); }
    static constexpr NodeId root() noexcept { return 0; }
    const std::vector<NodeId>& buckets() const noexcept { return buckets_; }
    const Thresholds& thresholds() const noexcept { return thresholds_; }
    const HashParams& params() const noexcept { return params_; }
    const ProblemDims& dims() const noexcept { return dims_; }
    const JointDistribution& model() const noexcept { return model_; }

    std::size_t size() const noexcept { return nodes_.size(); }
    std::size_t leaf_count() const noexcept;
    std::uint32_t max_bucket_depth() const noexcept { return max_bucket_depth_; }
    std::uint32_t effective_max_depth() const noexcept { return max_depth_; }
    /// Nodes cut at the depth cap and their total true-pair mass.
    std::size_t depth_capped_nodes() const noexcept { return depth_capped_nodes_; }
    double depth_capped_mass() const noexcept { return depth_capped_mass_; }

    Sequence seq_a(NodeId id) const;
    Sequence seq_b(NodeId id) const;
    bool is_ancestor(NodeId ancestor, NodeId id) const;

    /// Offsets (within a child block) of children whose A-symbol / B-symbol is the given one.
    std::span<const std::uint32_t> offsets_for_a(Symbol a) const { return offsets_a_.at(a); }
    std::span<const std::uint32_t> offsets_for_b(Symbol b) const { return offsets_b_.at(b); }
    /// Offset of the child for cell (a, b) or -1 when p_ab = 0.
    std::int64_t offset_for_cell(Symbol a, Symbol b) const;

    /// Calls on_bucket(id) for every bucket whose Seq^A (or Seq^B) is a prefix of the sequence
    /// given by symbol_at(0..length-1). A symbol can match several children, so several buckets
    /// may be reported; each at most once.
    template <class SymbolAt, class OnBucket>
    void visit_buckets(Side side, std::size_t length, SymbolAt&& symbol_at, OnBucket&& on_bucket) const {
        const TreeNode& root_node = nodes_[0];
        if (root_node.status == NodeStatus::Bucket) {
            on_bucket(NodeId{0});
            return;
        }
        if (root_node.status != NodeStatus::Internal) {
            return;
        }
        const auto& offsets = side == Side::A ? offsets_a_ : offsets_b_;
        thread_local std::vector<NodeId> stack;
        stack.clear();
        stack.push_back(0);
        while (!stack.empty()) {
            const TreeNode& v = nodes_[stack.back()];
            stack.pop_back();
            if (v.depth >= length) {
                continue;
            }
            const Symbol s = symbol_at(static_cast<std::size_t>(v.depth));
            if (s >= offsets.size()) {
                continue;
            }
            for (std::uint32_t off : offsets[s]) {
                const NodeId child = v.first_child + off;
                switch (nodes_[child].status) {
                    case NodeStatus::Bucket: on_bucket(child); break;
                    case NodeStatus::Internal: stack.push_back(child); break;
                    case NodeStatus::Pruned: break;
                }
            }
        }
    }

    /// Content digest used to check that an index was built from this tree.
    std::uint64_t fingerprint() const;

    void save(const std::filesystem::path& path) const;
    static DecisionTree load(const std::filesystem::path& path);

private:
    friend DecisionTree build_tree(const JointDistribution&, const HashParams&, const ProblemDims&,
                                   const Thresholds&, const TreeLimits&);
    friend DecisionTree make_root_bucket_tree(const JointDistribution&, const HashParams&, const ProblemDims&);
    friend DecisionTree make_tree_from_paths(const JointDistribution&, const HashParams&, const ProblemDims&,
                                             std::span<const std::vector<std::pair<Symbol, Symbol>>>);

    DecisionTree(JointDistribution model, HashParams params, ProblemDims dims, Thresholds thresholds);
    void index_support();

    JointDistribution model_;
    HashParams params_;
    ProblemDims dims_;
    Thresholds thresholds_;
    std::vector<TreeNode> nodes_;
    std::vector<NodeId> buckets_;
    std::vector<std::vector<std::uint32_t>> offsets_a_;
    std::vector<std::vector<std::uint32_t>> offsets_b_;
    std::vector<std::int64_t> cell_offset_;
    std::uint32_t max_bucket_depth_ = 0;
    std::uint32_t max_depth_ = 0;
    std::size_t depth_capped_nodes_ = 0;
    double depth_capped_mass_ = 0.0;
};

/// Depth-first construction with the accept / prune / branch rule. Accept wins ties.
DecisionTree build_tree(const JointDistribution& jd, const HashParams& params, const ProblemDims& dims,
                        const Thresholds& thresholds, const TreeLimits& limits = {});

/// Degenerate tree whose only bucket is the root: every point lands in it (full scan).
DecisionTree make_root_bucket_tree(const JointDistribution& jd, const HashParams& params, const ProblemDims& dims);

/// Tree whose buckets are exactly the given root paths of (a, b) edges. Every node on a path is
/// expanded into all support children; children not on any path become Pruned. Throws
/// InvalidArgument when a path uses a zero cell or when one path is a prefix of another.
DecisionTree make_tree_from_paths(const JointDistribution& jd, const HashParams& params, const ProblemDims& dims,
                                  std::span<const std::vector<std::pair<Symbol, Symbol>>> bucket_paths);

struct FamilyStats {
    double alpha = 0.0;
    double beta = 0.0;
    double gamma_a = 0.0;
    double gamma_b = 0.0;
    std::uint64_t n_bands = 1;
    double tp_target = 0.99;
    /// 1 - (1 - alpha)^n_bands
    double predicted_tp = 0.0;
};

/// ceil(ln(1/(1-tp)) / alpha), at least 1.
std::uint64_t bands_for_target(double alpha, double tp_target);

FamilyStats family_stats(const DecisionTree& tree, double tp_target);

struct FamilyEstimate {
    double alpha = 0.0, beta = 0.0, gamma_a = 0.0, gamma_b = 0.0;
    double se_alpha = 0.0, se_beta = 0.0, se_gamma_a = 0.0, se_gamma_b = 0.0;
};

/// Monte-Carlo estimate: alpha from joint pairs, gamma / beta from independent marginal samples
/// through per-bucket occupancy counts.
FamilyEstimate estimate_family_stats(const DecisionTree& tree, std::size_t n_samples, std::uint64_t seed);

struct Occupancy {
    std::size_t from_a = 0;  // |X_v|
    std::size_t from_b = 0;  // |Y_v|
};

/// Occupancy estimators over a dataset: beta = sum |X_v||Y_v| / (|X||Y|), gamma_a = sum |X_v| / |X|, ...
FamilyEstimate occupancy_estimates(std::span<const Occupancy> per_bucket, std::size_t n_a, std::size_t n_b);

struct CostModel {
    double c_tree = 1.0;
    double c_hash = 1.0;
    double c_insertion = 1.0;
    double c_pos = 1.0;
};

struct CostReport {
    double total = 0.0;                // with ln(1/(1-TP)) / alpha bands
    double total_integer_bands = 0.0;  // with ceil'd band count
    double tree_term = 0.0;
    double hash_term = 0.0;
    double insertion_term = 0.0;
    double positive_term = 0.0;  // per unit band factor
};

CostReport complexity_report(std::size_t tree_nodes, const FamilyStats& stats, const ProblemDims& dims,
                             const CostModel& cost = {});
CostReport complexity_report(const DecisionTree& tree, const FamilyStats& stats, const CostModel& cost = {});

/// log of alpha^(1+mu+nu-eta) gammaA^(eta-mu) gammaB^(eta-nu) beta^(-eta); never positive for a valid tree.
double lower_bound_log_quantity(const FamilyStats& stats, const HashParams& params);

std::string tree_summary_json(const DecisionTree& tree, const FamilyStats& stats);

}  // namespace forestdsh
