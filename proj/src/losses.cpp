#include "probsub/losses.hpp"

#include <map>
#include <string>

namespace probsub {

namespace {

void check_lengths(const Labeling& a, const Labeling& b) {
    if (a.size() != b.size())
        throw DimensionError("labelings differ in length: " + std::to_string(a.size()) +
                             " vs " + std::to_string(b.size()));
}

}  // namespace

LossKind parse_loss_kind(std::string_view name) {
    if (name == "hamming") return LossKind::Hamming;
    if (name == "classavg") return LossKind::PerClassAverage;
    throw Error("unknown loss '" + std::string(name) + "' (expected hamming or classavg)");
}

std::string_view to_string(LossKind kind) {
    return kind == LossKind::Hamming ? "hamming" : "classavg";
}

std::vector<double> vertex_loss_weights(LossKind kind, const Labeling& y_true) {
    std::vector<double> weights(y_true.size(), 1.0);
    if (kind == LossKind::Hamming) return weights;

    std::map<Label, std::size_t> class_size;
    for (Label c : y_true) ++class_size[c];
    const double present = double(class_size.size());
    for (std::size_t k = 0; k < y_true.size(); ++k)
        weights[k] = 1.0 / (present * double(class_size[y_true[k]]));
    return weights;
}

double loss(LossKind kind, const Labeling& y_true, const Labeling& y_pred, bool normalized) {
    check_lengths(y_true, y_pred);
    if (kind == LossKind::Hamming) {
        std::size_t wrong = 0;
        for (std::size_t k = 0; k < y_true.size(); ++k) wrong += y_true[k] != y_pred[k];
        if (normalized && !y_true.empty()) return double(wrong) / double(y_true.size());
        return double(wrong);
    }

    std::map<Label, std::pair<std::size_t, std::size_t>> per_class;  // errors, count
    for (std::size_t k = 0; k < y_true.size(); ++k) {
        auto& [errors, count] = per_class[y_true[k]];
        ++count;
        errors += y_true[k] != y_pred[k];
    }
    if (per_class.empty()) return 0.0;
    double total = 0.0;
    for (const auto& [c, ec] : per_class) total += double(ec.first) / double(ec.second);
    return total / double(per_class.size());
}

double iou(const Labeling& y_true, const Labeling& y_pred, Label foreground) {
    check_lengths(y_true, y_pred);
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t k = 0; k < y_true.size(); ++k) {
        const bool t = y_true[k] == foreground;
        const bool p = y_pred[k] == foreground;
        tp += t && p;
        fp += !t && p;
        fn += t && !p;
    }
    if (tp + fp + fn == 0) return 1.0;
    return double(tp) / double(tp + fp + fn);
}

double voc_score(const Labeling& y_true, const Labeling& y_pred, int label_count) {
    if (label_count != 2) throw Error("VOC score is defined for binary labelings only");
    return 0.5 * (iou(y_true, y_pred, 0) + iou(y_true, y_pred, 1));
}

}  // namespace probsub
