#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "probsub/generators.hpp"
#include "probsub/model.hpp"

namespace probsub {

using Matrix = std::vector<std::vector<double>>;  // row per sample

struct PcaBasis {
    std::vector<double> mean;
    Matrix components;  // orthonormal rows, decreasing variance
    std::vector<double> variances;
    /// Set when the data had lower rank than requested and components were dropped.
    std::optional<std::string> warning;

    int dim() const { return int(components.size()); }
};

/// Principal directions of the centered rows. Each direction's
/// largest-magnitude coordinate (first on ties) is made positive.
PcaBasis fit_pca(const Matrix& attributes, int pca_dim);

std::vector<double> project(const PcaBasis& basis, const std::vector<double>& x);

/// (max(v, 0), max(-v, 0)) concatenated.
std::vector<double> positive_negative_split(const std::vector<double>& v);

struct MultiLabelTask {
    int attribute_dim = 0;
    int class_count = 0;
    PcaBasis pca;

    int edge_count() const { return class_count * (class_count - 1) / 2; }
    int edge_feature_dim() const { return 2 * pca.dim(); }
};

MultiLabelTask make_task(const Matrix& train_attributes, int class_count, int pca_dim);

/// Fully connected binary CRF over the classes. Vertex k's unary feature is
/// x in slot k of a |C| d vector; edge {k, l} (lexicographic index e) carries
/// the split projection in slot e of an |E| e vector. Label 1 = class present.
GraphInstance reduce(const MultiLabelTask& task, const std::string& id, const std::vector<double>& x,
                     const std::optional<std::vector<int>>& y = std::nullopt);

struct MultiLabelConfig {
    int classes = 6;
    int attribute_dim = 8;
    int pca_dim = 2;
    int train_count = 20;
    int test_count = 100;
    double flip_probability = 0.1;       // training-label noise on top of the planted MAP
    double test_flip_probability = 0.0;  // test labels are clean by default
    double coupling = 2.0;               // scale of the planted pairwise weights
    std::uint64_t seed = 1;
};

struct MultiLabelData {
    MultiLabelTask task;
    Matrix train_attributes, test_attributes;
    std::vector<std::vector<int>> train_labels, test_labels;
    Dataset reduced;
};

/// Attributes with decaying per-axis scales; labels are the exact MAP of a
/// planted model whose pairwise part has the same-label >= 0, cross <= 0 sign
/// pattern (hence submodular everywhere), followed by independent flips.
MultiLabelData gen_multilabel(const MultiLabelConfig& config);

}  // namespace probsub
