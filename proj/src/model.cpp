#include "probsub/model.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <utility>

namespace probsub {

namespace {

std::string describe_edge(int e, const Edge& edge) {
    std::ostringstream os;
    os << "edge " << e << " (" << edge.k << ", " << edge.l << ")";
    return os.str();
}

}  // namespace

GraphInstance::GraphInstance(std::string id, int label_count, int unary_dim, int pairwise_dim,
                             std::vector<std::vector<double>> unary, std::vector<Edge> edges,
                             std::optional<Labeling> ground_truth, PairwiseCheck check)
    : id_(std::move(id)),
      shape_{label_count, unary_dim, pairwise_dim},
      unary_(std::move(unary)),
      edges_(std::move(edges)),
      ground_truth_(std::move(ground_truth)) {
    if (label_count < 2) throw DimensionError("label count must be at least 2");
    if (unary_dim < 0 || pairwise_dim < 0) throw DimensionError("negative feature dimension");

    for (std::size_t k = 0; k < unary_.size(); ++k) {
        if (unary_[k].size() != std::size_t(unary_dim)) {
            std::ostringstream os;
            os << "vertex " << k << " has " << unary_[k].size() << " unary features, expected "
               << unary_dim;
            throw DimensionError(os.str());
        }
    }

    const int n = vertex_count();
    std::set<std::pair<int, int>> seen;
    for (std::size_t e = 0; e < edges_.size(); ++e) {
        Edge& edge = edges_[e];
        if (edge.k == edge.l) throw DimensionError(describe_edge(int(e), edge) + " is a self loop");
        if (edge.k < 0 || edge.l < 0 || edge.k >= n || edge.l >= n)
            throw DimensionError(describe_edge(int(e), edge) + " references a missing vertex");
        if (edge.k > edge.l) std::swap(edge.k, edge.l);
        if (!seen.emplace(edge.k, edge.l).second)
            throw DimensionError(describe_edge(int(e), edge) + " duplicates an earlier edge");
        if (edge.feature.size() != std::size_t(pairwise_dim)) {
            std::ostringstream os;
            os << describe_edge(int(e), edge) << " has " << edge.feature.size()
               << " pairwise features, expected " << pairwise_dim;
            throw DimensionError(os.str());
        }
        if (check == PairwiseCheck::RequireNonnegative) {
            for (double v : edge.feature) {
                if (!(v >= 0.0))
                    throw DimensionError(describe_edge(int(e), edge) +
                                         " has a negative pairwise feature");
            }
        }
    }

    if (ground_truth_) check_labeling(*ground_truth_, n, label_count);
}

GraphInstance GraphInstance::with_ground_truth(std::optional<Labeling> y) const {
    if (y) check_labeling(*y, vertex_count(), label_count());
    GraphInstance copy = *this;
    copy.ground_truth_ = std::move(y);
    return copy;
}

void check_labeling(const Labeling& y, int vertex_count, int label_count) {
    if (y.size() != std::size_t(vertex_count)) {
        std::ostringstream os;
        os << "labeling has " << y.size() << " entries for " << vertex_count << " vertices";
        throw DimensionError(os.str());
    }
    for (std::size_t k = 0; k < y.size(); ++k) {
        if (y[k] < 0 || y[k] >= label_count) {
            std::ostringstream os;
            os << "label " << y[k] << " at vertex " << k << " outside [0, " << label_count << ")";
            throw DimensionError(os.str());
        }
    }
}

WeightVector::WeightVector(ModelShape shape) : shape_(shape), data_(shape.size(), 0.0) {}

WeightVector::WeightVector(ModelShape shape, std::vector<double> flat)
    : shape_(shape), data_(std::move(flat)) {
    if (data_.size() != shape_.size()) {
        std::ostringstream os;
        os << "weight vector has " << data_.size() << " coordinates, shape needs "
           << shape_.size();
        throw DimensionError(os.str());
    }
}

std::span<const double> WeightVector::unary_block(Label a) const {
    return std::span<const double>(data_).subspan(std::size_t(a) * shape_.unary_dim,
                                                  shape_.unary_dim);
}
std::span<double> WeightVector::unary_block(Label a) {
    return std::span<double>(data_).subspan(std::size_t(a) * shape_.unary_dim, shape_.unary_dim);
}
std::span<const double> WeightVector::pairwise_block(Label a, Label b) const {
    return std::span<const double>(data_).subspan(shape_.unary_size() + shape_.pair_offset(a, b),
                                                  shape_.pairwise_dim);
}
std::span<double> WeightVector::pairwise_block(Label a, Label b) {
    return std::span<double>(data_).subspan(shape_.unary_size() + shape_.pair_offset(a, b),
                                            shape_.pairwise_dim);
}
std::span<const double> WeightVector::pairwise() const {
    return std::span<const double>(data_).subspan(shape_.unary_size());
}
std::span<double> WeightVector::pairwise() {
    return std::span<double>(data_).subspan(shape_.unary_size());
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void check_compatible(const ModelShape& weights, const ModelShape& instance) {
    auto fail = [](const char* block, int have, int want) {
        std::ostringstream os;
        os << block << ": weights have " << have << ", instance has " << want;
        throw DimensionError(os.str());
    };
    if (weights.label_count != instance.label_count)
        fail("label count", weights.label_count, instance.label_count);
    if (weights.unary_dim != instance.unary_dim)
        fail("unary block w_a length", weights.unary_dim, instance.unary_dim);
    if (weights.pairwise_dim != instance.pairwise_dim)
        fail("pairwise block w_ab length", weights.pairwise_dim, instance.pairwise_dim);
}

double joint_score(const WeightVector& w, const GraphInstance& x, const Labeling& y) {
    check_compatible(w.shape(), x.shape());
    check_labeling(y, x.vertex_count(), x.label_count());
    double score = 0.0;
    for (int k = 0; k < x.vertex_count(); ++k) score += dot(w.unary_block(y[k]), x.unary(k));
    for (const Edge& e : x.edges()) score += dot(w.pairwise_block(y[e.k], y[e.l]), e.feature);
    return score;
}

std::vector<double> joint_feature(const GraphInstance& x, const Labeling& y) {
    const ModelShape shape = x.shape();
    check_labeling(y, x.vertex_count(), x.label_count());
    std::vector<double> psi(shape.size(), 0.0);
    for (int k = 0; k < x.vertex_count(); ++k) {
        const auto phi = x.unary(k);
        double* dst = psi.data() + std::size_t(y[k]) * shape.unary_dim;
        for (std::size_t i = 0; i < phi.size(); ++i) dst[i] += phi[i];
    }
    for (const Edge& e : x.edges()) {
        double* dst = psi.data() + shape.unary_size() + shape.pair_offset(y[e.k], y[e.l]);
        for (std::size_t i = 0; i < e.feature.size(); ++i) dst[i] += e.feature[i];
    }
    return psi;
}

double submodularity_margin(const WeightVector& w, std::span<const double> phi_p, Label a,
                            Label b) {
    if (a == b) throw Error("submodularity margin needs two distinct labels");
    const int L = w.shape().label_count;
    if (a < 0 || b < 0 || a >= L || b >= L) throw DimensionError("label outside the label set");
    if (phi_p.size() != std::size_t(w.shape().pairwise_dim))
        throw DimensionError("pairwise feature length does not match w_ab blocks");
    const double same = dot(w.pairwise_block(a, a), phi_p) + dot(w.pairwise_block(b, b), phi_p);
    const double cross = dot(w.pairwise_block(a, b), phi_p) + dot(w.pairwise_block(b, a), phi_p);
    return same - cross;
}

EdgePotentialTable edge_potentials(const WeightVector& w, std::span<const double> phi_p) {
    const ModelShape& s = w.shape();
    if (phi_p.size() != std::size_t(s.pairwise_dim))
        throw DimensionError("pairwise feature length does not match w_ab blocks");
    EdgePotentialTable table{s.label_count,
                             std::vector<double>(std::size_t(s.label_count) * s.label_count)};
    for (Label a = 0; a < s.label_count; ++a)
        for (Label b = 0; b < s.label_count; ++b) table(a, b) = -dot(w.pairwise_block(a, b), phi_p);
    return table;
}

}  // namespace probsub
