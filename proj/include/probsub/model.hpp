#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace probsub {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when weight/feature/label dimensions disagree.
class DimensionError : public Error {
public:
    using Error::Error;
};

using Label = int;
using Labeling = std::vector<Label>;

/// Dimensions shared by a weight vector and the instances it scores.
struct ModelShape {
    int label_count = 2;
    int unary_dim = 0;
    int pairwise_dim = 0;

    std::size_t unary_size() const { return std::size_t(label_count) * unary_dim; }
    std::size_t pairwise_size() const {
        return std::size_t(label_count) * label_count * pairwise_dim;
    }
    std::size_t size() const { return unary_size() + pairwise_size(); }
    /// Offset of block (a, b) inside the pairwise part.
    std::size_t pair_offset(Label a, Label b) const {
        return (std::size_t(a) * label_count + b) * pairwise_dim;
    }

    bool operator==(const ModelShape&) const = default;
};

struct Edge {
    int k = 0;
    int l = 0;
    std::vector<double> feature;

    bool operator==(const Edge&) const = default;
};

enum class PairwiseCheck { RequireNonnegative, AllowSigned };

/// One example: vertices with unary features, undirected edges with pairwise
/// features and an optional ground-truth labeling. Edges are stored with
/// k < l; the constructor swaps endpoints given in the other order.
class GraphInstance {
public:
    GraphInstance() = default;
    GraphInstance(std::string id, int label_count, int unary_dim, int pairwise_dim,
                  std::vector<std::vector<double>> unary, std::vector<Edge> edges,
                  std::optional<Labeling> ground_truth = std::nullopt,
                  PairwiseCheck check = PairwiseCheck::RequireNonnegative);

    const std::string& id() const { return id_; }
    ModelShape shape() const { return shape_; }
    int label_count() const { return shape_.label_count; }
    int unary_dim() const { return shape_.unary_dim; }
    int pairwise_dim() const { return shape_.pairwise_dim; }

    int vertex_count() const { return int(unary_.size()); }
    int edge_count() const { return int(edges_.size()); }
    std::span<const double> unary(int k) const { return unary_.at(std::size_t(k)); }
    const std::vector<Edge>& edges() const { return edges_; }
    const Edge& edge(int e) const { return edges_.at(std::size_t(e)); }

    const std::optional<Labeling>& ground_truth() const { return ground_truth_; }
    bool has_ground_truth() const { return ground_truth_.has_value(); }

    GraphInstance with_ground_truth(std::optional<Labeling> y) const;

    bool operator==(const GraphInstance&) const = default;

private:
    std::string id_;
    ModelShape shape_;
    std::vector<std::vector<double>> unary_;
    std::vector<Edge> edges_;
    std::optional<Labeling> ground_truth_;
};

/// Throws DimensionError unless y has one label in [0, label_count) per vertex.
void check_labeling(const Labeling& y, int vertex_count, int label_count);

/// Model parameters: |L| unary blocks of length d_u, then |L|^2 pairwise
/// blocks of length d_p in row-major (a, b) order.
class WeightVector {
public:
    WeightVector() = default;
    explicit WeightVector(ModelShape shape);
    WeightVector(ModelShape shape, std::vector<double> flat);

    const ModelShape& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }

    std::span<const double> flat() const { return data_; }
    std::span<double> flat() { return data_; }
    const std::vector<double>& values() const { return data_; }

    std::span<const double> unary_block(Label a) const;
    std::span<double> unary_block(Label a);
    std::span<const double> pairwise_block(Label a, Label b) const;
    std::span<double> pairwise_block(Label a, Label b);
    /// The whole pairwise sub-vector (all |L|^2 blocks).
    std::span<const double> pairwise() const;
    std::span<double> pairwise();

    bool operator==(const WeightVector&) const = default;

private:
    ModelShape shape_;
    std::vector<double> data_;
};

/// |L| x |L| pairwise energies of one edge; entry (a, b) is -<w_ab, phi_p>.
struct EdgePotentialTable {
    int label_count = 0;
    std::vector<double> values;

    double& operator()(Label a, Label b) { return values[std::size_t(a) * label_count + b]; }
    double operator()(Label a, Label b) const {
        return values[std::size_t(a) * label_count + b];
    }
};

double dot(std::span<const double> a, std::span<const double> b);

/// Throws DimensionError naming the first block whose size disagrees.
void check_compatible(const ModelShape& weights, const ModelShape& instance);

/// w^T psi(x, y), summed over vertices in index order then edges in list order.
double joint_score(const WeightVector& w, const GraphInstance& x, const Labeling& y);

/// The joint feature map psi(x, y) laid out like WeightVector.
std::vector<double> joint_feature(const GraphInstance& x, const Labeling& y);

/// <w_aa + w_bb - w_ab - w_ba, phi_p>; nonnegative means submodular for (a, b).
double submodularity_margin(const WeightVector& w, std::span<const double> phi_p, Label a,
                            Label b);

EdgePotentialTable edge_potentials(const WeightVector& w, std::span<const double> phi_p);

}  // namespace probsub
