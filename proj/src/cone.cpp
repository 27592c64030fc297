#include "probsub/cone.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>

#include "probsub/parallel.hpp"

namespace probsub {

std::vector<double> nnls(const std::vector<std::vector<double>>& columns, const std::vector<double>& b) {
    const Eigen::Index m = Eigen::Index(b.size()), n = Eigen::Index(columns.size());
    Eigen::MatrixXd A(m, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        if (Eigen::Index(columns[std::size_t(j)].size()) != m)
            throw DimensionError("NNLS column " + std::to_string(j) + " has the wrong length");
        for (Eigen::Index i = 0; i < m; ++i) A(i, j) = columns[std::size_t(j)][std::size_t(i)];
    }
    const Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(b.data(), m);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    std::vector<char> passive(std::size_t(n), 0);
    const double tol = 1e-12 * std::max(1.0, A.cwiseAbs().maxCoeff()) * std::max(1.0, rhs.norm()) * double(m + n);

    for (Eigen::Index outer = 0; outer < 3 * n + 3; ++outer) {
        const Eigen::VectorXd w = A.transpose() * (rhs - A * x);
        Eigen::Index best = -1;
        for (Eigen::Index j = 0; j < n; ++j)
            if (!passive[std::size_t(j)] && w(j) > tol && (best < 0 || w(j) > w(best))) best = j;
        if (best < 0) break;
        passive[std::size_t(best)] = 1;

        for (Eigen::Index inner = 0; inner <= n; ++inner) {
            std::vector<Eigen::Index> P;
            for (Eigen::Index j = 0; j < n; ++j)
                if (passive[std::size_t(j)]) P.push_back(j);
            Eigen::MatrixXd AP(m, Eigen::Index(P.size()));
            for (std::size_t c = 0; c < P.size(); ++c) AP.col(Eigen::Index(c)) = A.col(P[c]);
            const Eigen::VectorXd sP = AP.colPivHouseholderQr().solve(rhs);
            bool positive = true;
            for (Eigen::Index c = 0; c < sP.size(); ++c) positive = positive && sP(c) > 0.0;
            if (positive) {
                x.setZero();
                for (std::size_t c = 0; c < P.size(); ++c) x(P[c]) = sP(Eigen::Index(c));
                break;
            }
            double alpha = 1.0;
            for (std::size_t c = 0; c < P.size(); ++c) {
                const double s = sP(Eigen::Index(c)), xc = x(P[c]);
                if (s <= 0.0) alpha = std::min(alpha, xc / (xc - s));
            }
            for (std::size_t c = 0; c < P.size(); ++c) {
                const Eigen::Index j = P[c];
                x(j) += alpha * (sP(Eigen::Index(c)) - x(j));
                if (x(j) <= 1e-15) {
                    x(j) = 0.0;
                    passive[std::size_t(j)] = 0;
                }
            }
        }
    }
    return {x.data(), x.data() + x.size()};
}

bool in_cone(const std::vector<std::vector<double>>& generators, const std::vector<double>& x, double tol) {
    double xn = 0.0;
    for (double v : x) xn += v * v;
    xn = std::sqrt(xn);
    if (xn == 0.0) return true;
    if (generators.empty()) return false;
    const auto lambda = nnls(generators, x);
    double r2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double v = -x[i];
        for (std::size_t j = 0; j < generators.size(); ++j) v += lambda[j] * generators[j][i];
        r2 += v * v;
    }
    return std::sqrt(r2) <= tol * xn;
}

double analytic_outside_2d(int n) { return 2.0 / (double(n) + 1.0); }

namespace {

double sign_test_p(std::size_t successes, std::size_t trials) {
    if (trials == 0) return 1.0;
    double p = 0.0;
    for (std::size_t k = successes; k <= trials; ++k)
        p += std::exp(std::lgamma(double(trials) + 1) - std::lgamma(double(k) + 1) -
                      std::lgamma(double(trials - k) + 1) - double(trials) * std::log(2.0));
    return std::min(1.0, p);
}

}  // namespace

ConeResult cone_experiment(const ConeConfig& cfg) {
    if (cfg.dim < 2) throw Error("cone experiment needs dimension at least 2");
    if (cfg.ns.empty()) throw Error("cone experiment needs at least one training size");
    for (int n : cfg.ns)
        if (n < 1) throw Error("training sizes must be positive");
    if (cfg.n_test < 1 || cfg.trials < 1) throw Error("test count and trial count must be positive");
    const int n_max = *std::max_element(cfg.ns.begin(), cfg.ns.end());
    const std::size_t T = std::size_t(cfg.trials);

    std::vector<std::vector<double>> outside(cfg.ns.size(), std::vector<double>(T));
    parallel_for(T, [&](std::size_t t) {
        std::seed_seq seq{std::uint64_t(cfg.seed), std::uint64_t(t)};
        std::mt19937_64 rng(seq);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        auto draw = [&] {
            std::vector<double> p(std::size_t(cfg.dim));
            if (cfg.distribution == ConeDistribution::Ray) {
                std::fill(p.begin(), p.end(), 0.1 + unit(rng));
            } else {
                for (double& v : p) v = unit(rng);
            }
            return p;
        };
        std::vector<std::vector<double>> train(static_cast<std::size_t>(n_max));
        std::vector<std::vector<double>> test(static_cast<std::size_t>(cfg.n_test));
        for (auto& p : train) p = draw();
        for (auto& p : test) p = draw();
        for (std::size_t g = 0; g < cfg.ns.size(); ++g) {
            const std::vector<std::vector<double>> gens(train.begin(), train.begin() + cfg.ns[g]);
            std::size_t out = 0;
            for (const auto& x : test) out += !in_cone(gens, x);
            outside[g][t] = double(out) / double(cfg.n_test);
        }
    });

    ConeResult result;
    for (std::size_t g = 0; g < cfg.ns.size(); ++g) {
        ConeRow row;
        row.n = cfg.ns[g];
        row.per_trial = outside[g];
        double mean = 0.0;
        for (double v : row.per_trial) mean += v;
        mean /= double(T);
        double var = 0.0;
        for (double v : row.per_trial) var += (v - mean) * (v - mean);
        var = T > 1 ? var / double(T - 1) : 0.0;
        row.mean_outside = mean;
        row.standard_error = std::sqrt(var / double(T));
        result.rows.push_back(std::move(row));
    }
    std::vector<std::size_t> order(cfg.ns.size());
    for (std::size_t g = 0; g < order.size(); ++g) order[g] = g;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return cfg.ns[a] < cfg.ns[b]; });
    for (std::size_t k = 1; k < order.size(); ++k) {
        const auto& small = result.rows[order[k - 1]];
        const auto& large = result.rows[order[k]];
        SignTest s;
        s.n_small = small.n;
        s.n_large = large.n;
        for (std::size_t t = 0; t < T; ++t) {
            if (large.per_trial[t] < small.per_trial[t]) ++s.decreases;
            else if (large.per_trial[t] > small.per_trial[t]) ++s.increases;
            else ++s.ties;
        }
        s.p_value = sign_test_p(s.decreases, s.decreases + s.increases);
        result.monotone.push_back(s);
    }
    return result;
}

Table cone_table(const ConeResult& result, int dim) {
    Table t;
    t.header = {"n", "mean_outside", "standard_error", "analytic_2d"};
    for (const auto& row : result.rows)
        t.add({std::to_string(row.n), format_double(row.mean_outside), format_double(row.standard_error),
               dim == 2 ? format_double(analytic_outside_2d(row.n)) : "nan"});
    return t;
}

}  // namespace probsub
