#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "probsub/losses.hpp"
#include "probsub/model.hpp"

namespace probsub {

struct InferenceReport {
    Labeling labeling;
    /// Score of `labeling` (plus the loss term for loss-augmented calls)
    /// under the original, untruncated potentials.
    double objective = 0.0;
    std::size_t truncated_edge_count = 0;
    double truncated_fraction = 0.0;
    bool exact = false;
};

/// Score-form tables of one instance: unary(k, a) and pair(e, a, b) with
/// the edge oriented (k, l), k < l. Inference maximizes their sum.
class ScoreTables {
public:
    ScoreTables(const WeightVector& w, const GraphInstance& x);

    int label_count() const { return label_count_; }
    int vertex_count() const { return vertex_count_; }
    int edge_count() const { return int(edge_ends_.size()); }
    std::pair<int, int> edge_ends(int e) const { return edge_ends_[std::size_t(e)]; }

    double unary(int k, Label a) const { return unary_[std::size_t(k) * label_count_ + a]; }
    double& unary(int k, Label a) { return unary_[std::size_t(k) * label_count_ + a]; }
    double pair(int e, Label a, Label b) const {
        return pair_[(std::size_t(e) * label_count_ + a) * label_count_ + b];
    }

    /// Adds `weights[k]` to unary(k, a) for every a != y_true[k].
    void add_loss(const Labeling& y_true, const std::vector<double>& weights);

    double objective(const Labeling& y) const;
    /// (a, b) pairs with a < b whose margin pair(a,a)+pair(b,b)-pair(a,b)-pair(b,a)
    /// is negative, summed over edges.
    std::size_t non_submodular_count() const;

private:
    int label_count_;
    int vertex_count_;
    std::vector<std::pair<int, int>> edge_ends_;
    std::vector<double> unary_;
    std::vector<double> pair_;
};

struct TruncationResult {
    std::vector<EdgePotentialTable> tables;  // energies, one per edge
    std::size_t modified = 0;  // (edge, label pair) items with a deficit beyond rounding
};

/// Raises both cross-label energies of every non-submodular (edge, a<b) item
/// by half the deficit so that the item becomes exactly modular.
TruncationResult truncate_edges(const WeightVector& w, const GraphInstance& x);

/// Exact graph-cut MAP for |L| = 2 (after truncation of non-submodular edges).
InferenceReport map_binary(const WeightVector& w, const GraphInstance& x);

/// Alpha-beta swap starting from the unary argmax.
InferenceReport map_multiclass(const WeightVector& w, const GraphInstance& x, int sweeps = 20);

/// map_binary for two labels, map_multiclass otherwise.
InferenceReport map_inference(const WeightVector& w, const GraphInstance& x);

/// argmax_y w^T psi(x, y) + loss(y_true, y).
InferenceReport loss_augmented_map(const WeightVector& w, const GraphInstance& x,
                                   const Labeling& y_true, LossKind loss);

struct LossTerm {
    Labeling y_true;
    LossKind kind = LossKind::Hamming;
};

/// Exhaustive search; ties go to the lexicographically smallest labeling.
InferenceReport brute_force_map(const WeightVector& w, const GraphInstance& x,
                                const std::optional<LossTerm>& loss = std::nullopt);

// Table-level solvers, shared by the entry points above.
InferenceReport solve_binary(const ScoreTables& tables);
InferenceReport solve_swap(const ScoreTables& tables, int sweeps);
InferenceReport solve_brute_force(const ScoreTables& tables);

}  // namespace probsub
