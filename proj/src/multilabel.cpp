#include "probsub/multilabel.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>

#include "probsub/inference.hpp"

namespace probsub {

PcaBasis fit_pca(const Matrix& attributes, int pca_dim) {
    if (pca_dim < 1) throw Error("PCA dimension must be positive");
    if (attributes.size() < std::size_t(pca_dim))
        throw Error("PCA needs at least " + std::to_string(pca_dim) + " samples, got " +
                    std::to_string(attributes.size()));
    const std::size_t n = attributes.size();
    const std::size_t d = attributes.front().size();
    Eigen::MatrixXd X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < n; ++i) {
        if (attributes[i].size() != d)
            throw DimensionError("attribute row " + std::to_string(i) + " has length " +
                                 std::to_string(attributes[i].size()) + ", expected " + std::to_string(d));
        for (std::size_t j = 0; j < d; ++j) X(Eigen::Index(i), Eigen::Index(j)) = attributes[i][j];
    }
    const Eigen::VectorXd mu = X.colwise().mean();
    X.rowwise() -= mu.transpose();
    const Eigen::MatrixXd cov = (X.transpose() * X) / double(n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    const Eigen::VectorXd& values = eig.eigenvalues();  // ascending
    const double top = values.size() ? values(values.size() - 1) : 0.0;
    if (!(top > 0.0)) throw Error("attributes have zero variance; PCA is undefined");

    PcaBasis basis;
    basis.mean.assign(mu.data(), mu.data() + mu.size());
    for (Eigen::Index c = values.size() - 1; c >= 0 && basis.dim() < pca_dim; --c) {
        if (values(c) <= 1e-12 * top) break;
        Eigen::VectorXd v = eig.eigenvectors().col(c);
        Eigen::Index lead = 0;
        for (Eigen::Index k = 1; k < v.size(); ++k)
            if (std::abs(v(k)) > std::abs(v(lead))) lead = k;
        if (v(lead) < 0) v = -v;
        basis.components.emplace_back(v.data(), v.data() + v.size());
        basis.variances.push_back(values(c));
    }
    if (basis.dim() < pca_dim)
        basis.warning = "attributes have rank " + std::to_string(basis.dim()) + "; PCA dimension reduced from " +
                        std::to_string(pca_dim);
    return basis;
}

std::vector<double> project(const PcaBasis& basis, const std::vector<double>& x) {
    if (x.size() != basis.mean.size())
        throw DimensionError("attribute row has length " + std::to_string(x.size()) + ", PCA expects " +
                             std::to_string(basis.mean.size()));
    std::vector<double> out;
    for (const auto& c : basis.components) {
        double s = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) s += c[j] * (x[j] - basis.mean[j]);
        out.push_back(s);
    }
    return out;
}

std::vector<double> positive_negative_split(const std::vector<double>& v) {
    std::vector<double> out(2 * v.size());
    for (std::size_t k = 0; k < v.size(); ++k) {
        out[k] = std::max(v[k], 0.0);
        out[v.size() + k] = std::max(-v[k], 0.0);
    }
    return out;
}

MultiLabelTask make_task(const Matrix& train_attributes, int class_count, int pca_dim) {
    if (class_count < 2) throw Error("multi-label reduction needs at least 2 classes");
    MultiLabelTask task;
    task.class_count = class_count;
    task.pca = fit_pca(train_attributes, pca_dim);
    task.attribute_dim = int(task.pca.mean.size());
    return task;
}

GraphInstance reduce(const MultiLabelTask& task, const std::string& id, const std::vector<double>& x,
                     const std::optional<std::vector<int>>& y) {
    if (int(x.size()) != task.attribute_dim)
        throw DimensionError("sample '" + id + "' has " + std::to_string(x.size()) + " attributes, expected " +
                             std::to_string(task.attribute_dim));
    const int C = task.class_count, d = task.attribute_dim;
    const int e = task.edge_feature_dim(), E = task.edge_count();
    std::vector<std::vector<double>> unary(std::size_t(C), std::vector<double>(std::size_t(C * d), 0.0));
    for (int k = 0; k < C; ++k) std::copy(x.begin(), x.end(), unary[std::size_t(k)].begin() + k * d);

    const auto r = positive_negative_split(project(task.pca, x));
    std::vector<Edge> edges;
    int index = 0;
    for (int k = 0; k < C; ++k)
        for (int l = k + 1; l < C; ++l, ++index) {
            std::vector<double> f(std::size_t(E * e), 0.0);
            std::copy(r.begin(), r.end(), f.begin() + index * e);
            edges.push_back({k, l, std::move(f)});
        }
    std::optional<Labeling> truth;
    if (y) {
        if (int(y->size()) != C)
            throw DimensionError("sample '" + id + "' has " + std::to_string(y->size()) + " labels, expected " +
                                 std::to_string(C));
        truth = Labeling(y->begin(), y->end());
    }
    return GraphInstance(id, 2, C * d, E * e, std::move(unary), std::move(edges), std::move(truth));
}

MultiLabelData gen_multilabel(const MultiLabelConfig& cfg) {
    if (cfg.classes < 2 || cfg.attribute_dim < 1 || cfg.pca_dim < 1 || cfg.train_count < 1)
        throw Error("invalid multi-label generator configuration");
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    auto draw = [&](int count) {
        Matrix rows(std::size_t(count), std::vector<double>(std::size_t(cfg.attribute_dim)));
        for (auto& row : rows)
            for (int j = 0; j < cfg.attribute_dim; ++j) row[std::size_t(j)] = normal(rng) / (1.0 + 0.3 * j);
        return rows;
    };
    MultiLabelData data;
    data.train_attributes = draw(cfg.train_count);
    data.test_attributes = draw(cfg.test_count);
    data.task = make_task(data.train_attributes, cfg.classes, cfg.pca_dim);

    const GraphInstance probe = reduce(data.task, "probe", data.train_attributes.front());
    WeightVector planted(probe.shape());
    for (Label a = 0; a < 2; ++a)
        for (double& v : planted.unary_block(a)) v = normal(rng);
    for (Label a = 0; a < 2; ++a)
        for (Label b = 0; b < 2; ++b)
            for (double& v : planted.pairwise_block(a, b)) v = (a == b ? 1.0 : -1.0) * cfg.coupling * unit(rng);

    auto label = [&](const Matrix& rows, const char* prefix, double flip, std::vector<std::vector<int>>& labels,
                     std::vector<GraphInstance>& out) {
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const std::string id = prefix + std::to_string(i);
            const Labeling y = map_binary(planted, reduce(data.task, id, rows[i])).labeling;
            std::vector<int> noisy(y.begin(), y.end());
            for (int& v : noisy)
                if (unit(rng) < flip) v = 1 - v;
            labels.push_back(noisy);
            out.push_back(reduce(data.task, id, rows[i], noisy));
        }
    };
    label(data.train_attributes, "ml-train-", cfg.flip_probability, data.train_labels, data.reduced.train);
    label(data.test_attributes, "ml-test-", cfg.test_flip_probability, data.test_labels, data.reduced.test);
    return data;
}

}  // namespace probsub
