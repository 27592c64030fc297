#pragma once

#include <string_view>
#include <vector>

#include "probsub/model.hpp"

namespace probsub {

enum class LossKind { Hamming, PerClassAverage };

LossKind parse_loss_kind(std::string_view name);
std::string_view to_string(LossKind kind);

/// Per-vertex cost of predicting a wrong label: 1 for Hamming, and
/// 1 / (present classes * size of the vertex's true class) for the per-class
/// average. Summing these over the mispredicted vertices gives loss().
std::vector<double> vertex_loss_weights(LossKind kind, const Labeling& y_true);

/// Decomposable loss. Hamming counts disagreements (divided by |V| when
/// `normalized`); PerClassAverage averages per-class error rates over the
/// classes present in y_true.
double loss(LossKind kind, const Labeling& y_true, const Labeling& y_pred,
            bool normalized = false);

/// TP / (TP + FP + FN) for one class against the rest; 1 when the class is
/// absent from both labelings.
double iou(const Labeling& y_true, const Labeling& y_pred, Label foreground);

/// Mean of the background and foreground IoU of a binary labeling.
double voc_score(const Labeling& y_true, const Labeling& y_pred, int label_count = 2);

}  // namespace probsub
