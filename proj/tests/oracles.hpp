#pragma once
// Test-only generators and independent oracles.

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "probsub/model.hpp"
#include "probsub/qp.hpp"

namespace probsub::testing {

inline GraphInstance random_instance(std::mt19937_64& rng, int vertices, int labels, int d_u,
                                     int d_p, double edge_prob = 0.5, bool with_truth = true) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<std::vector<double>> unary(static_cast<std::size_t>(vertices),
                                          std::vector<double>(static_cast<std::size_t>(d_u)));
    for (auto& row : unary)
        for (double& v : row) v = normal(rng);
    std::vector<Edge> edges;
    for (int k = 0; k < vertices; ++k)
        for (int l = k + 1; l < vertices; ++l) {
            if (l != k + 1 && unit(rng) > edge_prob) continue;
            Edge e{k, l, std::vector<double>(std::size_t(d_p))};
            for (double& v : e.feature) v = unit(rng);
            edges.push_back(std::move(e));
        }
    std::optional<Labeling> y;
    if (with_truth) {
        std::uniform_int_distribution<int> label(0, labels - 1);
        y = Labeling(std::size_t(vertices));
        for (auto& a : *y) a = label(rng);
    }
    return GraphInstance("rand", labels, d_u, d_p, std::move(unary), std::move(edges), y);
}

/// Random weights whose pairwise part satisfies the per-coordinate
/// same-label >= 0, cross-label <= 0 sign pattern.
inline WeightVector random_sign_feasible_weights(std::mt19937_64& rng, ModelShape shape,
                                                 double pair_scale = 1.0) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    WeightVector w(shape);
    for (Label a = 0; a < shape.label_count; ++a)
        for (double& v : w.unary_block(a)) v = normal(rng);
    for (Label a = 0; a < shape.label_count; ++a)
        for (Label b = 0; b < shape.label_count; ++b)
            for (double& v : w.pairwise_block(a, b)) v = (a == b ? 1.0 : -1.0) * pair_scale * unit(rng);
    return w;
}

inline WeightVector random_weights(std::mt19937_64& rng, ModelShape shape) {
    std::normal_distribution<double> normal(0.0, 1.0);
    WeightVector w(shape);
    for (double& v : w.flat()) v = normal(rng);
    return w;
}

/// Naive (B (x) P) w_p with B given as rows over the |L|^2 blocks and P as
/// feature rows; entry j * rows(P) + i.
inline std::vector<double> kronecker_margins(const std::vector<std::vector<double>>& B,
                                             const std::vector<std::vector<double>>& P,
                                             std::span<const double> w_p) {
    const std::size_t R = P.size();
    const std::size_t dp = R ? P[0].size() : 0;
    const std::size_t Q = B.empty() ? 0 : B[0].size();
    Eigen::MatrixXd K(Eigen::Index(B.size() * R), Eigen::Index(Q * dp));
    for (std::size_t j = 0; j < B.size(); ++j)
        for (std::size_t i = 0; i < R; ++i)
            for (std::size_t q = 0; q < Q; ++q)
                for (std::size_t k = 0; k < dp; ++k)
                    K(Eigen::Index(j * R + i), Eigen::Index(q * dp + k)) = B[j][q] * P[i][k];
    Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(w_p.data(), Eigen::Index(w_p.size()));
    Eigen::VectorXd v = K * w;
    return std::vector<double>(v.data(), v.data() + v.size());
}

/// Enumerates active sets (up to `max_active` inequalities) of a QPProblem,
/// solving each equality-constrained KKT system in the full (w, xi, mu)
/// space; returns the best objective among KKT-valid points.
inline double brute_force_qp_objective(const QPProblem& p, std::size_t max_active = 10) {
    const std::size_t d = p.dimension;
    const std::size_t nx = d + 1;
    struct Row {
        Eigen::VectorXd a;
        double c;
    };
    std::vector<Row> ineq, eq;
    Eigen::VectorXd slack = Eigen::VectorXd::Zero(Eigen::Index(nx));
    slack(Eigen::Index(d)) = 1.0;
    ineq.push_back({slack, 0.0});
    for (const auto& m : p.margin_constraints) {
        Eigen::VectorXd a(static_cast<Eigen::Index>(nx));
        for (std::size_t k = 0; k < d; ++k) a(Eigen::Index(k)) = m.direction[k];
        a(Eigen::Index(d)) = 1.0;
        ineq.push_back({a, m.offset});
    }
    for (const auto& h : p.hard_constraints) {
        Eigen::VectorXd a = Eigen::VectorXd::Zero(Eigen::Index(nx));
        for (std::size_t k = 0; k < d; ++k) a(Eigen::Index(k)) = h[k];
        ineq.push_back({a, 0.0});
    }
    for (const auto& s : p.sign_constraints) {
        Eigen::VectorXd a = Eigen::VectorXd::Zero(Eigen::Index(nx));
        a(Eigen::Index(s.index)) = s.sign == Sign::NonPositive ? -1.0 : 1.0;
        (s.sign == Sign::Zero ? eq : ineq).push_back({a, 0.0});
    }

    double best = std::numeric_limits<double>::infinity();
    const std::size_t m = ineq.size();
    for (std::size_t mask = 0; mask < (std::size_t(1) << m); ++mask) {
        std::vector<std::size_t> active;
        for (std::size_t r = 0; r < m; ++r)
            if (mask >> r & 1) active.push_back(r);
        if (active.size() > max_active) continue;
        const std::size_t na = active.size() + eq.size();
        const Eigen::Index n = Eigen::Index(nx + na);
        Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
        for (std::size_t k = 0; k < d; ++k) K(Eigen::Index(k), Eigen::Index(k)) = 1.0;
        rhs(Eigen::Index(d)) = -p.C;
        for (std::size_t i = 0; i < na; ++i) {
            const Row& row = i < active.size() ? ineq[active[i]] : eq[i - active.size()];
            const Eigen::Index c = Eigen::Index(nx + i);
            K.block(c, 0, 1, Eigen::Index(nx)) = row.a.transpose();
            K.block(0, c, Eigen::Index(nx), 1) = -row.a;
            rhs(c) = row.c;
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
        if (!lu.isInvertible()) continue;
        Eigen::VectorXd sol = lu.solve(rhs);
        if ((K * sol - rhs).norm() > 1e-9 * (1.0 + rhs.norm())) continue;
        bool ok = true;
        for (std::size_t i = 0; i < active.size(); ++i)
            if (sol(Eigen::Index(nx + i)) < -1e-9) ok = false;
        Eigen::VectorXd x = sol.head(Eigen::Index(nx));
        for (const Row& row : ineq)
            if (row.a.dot(x) < row.c - 1e-9) ok = false;
        if (!ok) continue;
        const double obj = 0.5 * x.head(Eigen::Index(d)).squaredNorm() + p.C * x(Eigen::Index(d));
        best = std::min(best, obj);
    }
    return best;
}

inline QPProblem random_qp(std::mt19937_64& rng, std::size_t dim, std::size_t margins,
                           std::size_t hards, std::size_t signs) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    QPProblem p;
    p.dimension = dim;
    p.C = std::exp(normal(rng));
    for (std::size_t i = 0; i < margins; ++i) {
        MarginConstraint m;
        m.direction.resize(dim);
        for (double& v : m.direction) v = normal(rng);
        m.offset = 2.0 * unit(rng);
        p.margin_constraints.push_back(std::move(m));
    }
    for (std::size_t i = 0; i < hards; ++i) {
        std::vector<double> h(dim);
        for (double& v : h) v = normal(rng);
        p.hard_constraints.push_back(std::move(h));
    }
    std::uniform_int_distribution<std::size_t> coord(0, dim - 1);
    std::uniform_int_distribution<int> sign(0, 2);
    for (std::size_t i = 0; i < signs; ++i)
        p.sign_constraints.push_back({coord(rng), Sign(sign(rng))});
    return p;
}

}  // namespace probsub::testing
