#include "probsub/qp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace probsub {

namespace {

double norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace

QpSolver::QpSolver(std::size_t dimension, double C, const std::vector<SignConstraint>& signs)
    : dimension_(dimension), C_(C), fixed_zero_(dimension, false) {
    if (!(C > 0.0) || !std::isfinite(C)) throw Error("QP regularization constant C must be positive");
    std::vector<unsigned char> seen(dimension, 0);  // bit 0: >= 0, bit 1: <= 0
    for (const SignConstraint& s : signs) {
        if (s.index >= dimension) throw DimensionError("sign constraint index out of range");
        if (s.sign == Sign::Zero) fixed_zero_[s.index] = true;
        if (s.sign == Sign::NonNegative) seen[s.index] |= 1;
        if (s.sign == Sign::NonPositive) seen[s.index] |= 2;
    }
    for (std::size_t k = 0; k < dimension; ++k)
        if (seen[k] == 3) fixed_zero_[k] = true;
    add_row(std::vector<double>(dimension, 0.0), 1.0, 0.0, {ConstraintKind::SlackNonnegative, 0});
    std::fill(seen.begin(), seen.end(), 0);
    for (const SignConstraint& s : signs) {
        const std::size_t ref = sign_count_++;
        if (s.sign == Sign::Zero || fixed_zero_[s.index]) continue;
        const unsigned char bit = s.sign == Sign::NonNegative ? 1 : 2;
        if (seen[s.index] & bit) continue;
        seen[s.index] |= bit;
        bounds_.push_back({s.index, bit == 1 ? 1.0 : -1.0, {ConstraintKind::Sign, ref}});
    }
}

std::size_t QpSolver::add_row(std::vector<double> a, double t, double c, ConstraintRef ref) {
    for (std::size_t k = 0; k < dimension_; ++k) {
        if (!std::isfinite(a[k])) throw Error("QP constraint direction is not finite");
        if (fixed_zero_[k]) a[k] = 0.0;
    }
    if (!std::isfinite(c)) throw Error("QP constraint offset is not finite");
    std::vector<double> row_gram(rows_.size() + 1);
    for (std::size_t s = 0; s < rows_.size(); ++s) row_gram[s] = dot(a, rows_[s].a);
    row_gram.back() = dot(a, a);
    gram_.push_back(std::move(row_gram));
    rows_.push_back({std::move(a), t, c, ref});
    return rows_.size() - 1;
}

std::size_t QpSolver::add_margin(std::span<const double> g, double b) {
    if (g.size() != dimension_) throw DimensionError("margin constraint has the wrong dimension");
    add_row(std::vector<double>(g.begin(), g.end()), 1.0, b, {ConstraintKind::Margin, margin_count_});
    return margin_count_++;
}

std::size_t QpSolver::add_hard(std::span<const double> h) {
    if (h.size() != dimension_) throw DimensionError("hard constraint has the wrong dimension");
    add_row(std::vector<double>(h.begin(), h.end()), 0.0, 0.0, {ConstraintKind::Hard, hard_count_});
    return hard_count_++;
}

std::optional<std::size_t> QpSolver::row_of(const ConstraintRef& ref) const {
    for (std::size_t r = 0; r < rows_.size(); ++r)
        if (rows_[r].ref == ref) return r;
    return std::nullopt;
}

QPSolution QpSolver::solve(const QPOptions& options) {
    if (last_) return solve_from(*last_, options);
    return solve_cold(options);
}

QPSolution QpSolver::solve_cold(const QPOptions& options) {
    return run(std::vector<double>(dimension_, 0.0), {}, {}, options);
}

QPSolution QpSolver::solve_from(const QPSolution& warm, const QPOptions& options) {
    if (warm.w.size() != dimension_) return solve_cold(options);
    std::vector<double> w = warm.w;
    for (std::size_t k = 0; k < dimension_; ++k)
        if (fixed_zero_[k]) w[k] = 0.0;
    // Only a feasible point can seed the primal method; xi absorbs the
    // margin rows, hard rows and bounds must already hold.
    for (const Row& row : rows_) {
        if (row.t != 0.0) continue;
        if (dot(row.a, w) < -1e-12 * (1.0 + norm(row.a) * norm(w))) return solve_cold(options);
    }
    for (const Bound& b : bounds_)
        if (b.sigma * w[b.index] < 0.0) return solve_cold(options);
    std::vector<std::size_t> working, active_bounds;
    for (const ConstraintRef& ref : warm.active_set) {
        if (ref.kind == ConstraintKind::Sign) {
            for (std::size_t b = 0; b < bounds_.size(); ++b)
                if (bounds_[b].ref == ref) active_bounds.push_back(b);
        } else if (auto r = row_of(ref)) {
            working.push_back(*r);
        }
    }
    return run(std::move(w), std::move(working), std::move(active_bounds), options);
}

QPSolution QpSolver::run(std::vector<double> w, std::vector<std::size_t> working,
                         std::vector<std::size_t> active_bounds, const QPOptions& options) {
    const std::size_t m = rows_.size();
    const std::size_t nb = bounds_.size();
    const std::size_t d = dimension_;

    double scale = std::max(1.0, C_);
    for (const Row& row : rows_) scale = std::max(scale, std::abs(row.c));

    std::vector<double> s(m);  // a_r^T w
    for (std::size_t r = 0; r < m; ++r) s[r] = dot(rows_[r].a, w);
    double xi = 0.0;
    for (std::size_t r = 0; r < m; ++r)
        if (rows_[r].t != 0.0) xi = std::max(xi, rows_[r].c - s[r]);

    // Keep only constraints that are tight at the starting point.
    const double tight_tol = 1e-9 * scale;
    std::vector<std::size_t> W, B;
    for (std::size_t r : working) {
        const double resid = s[r] + rows_[r].t * xi - rows_[r].c;
        if (std::abs(resid) <= tight_tol && std::find(W.begin(), W.end(), r) == W.end())
            W.push_back(r);
    }
    std::vector<char> masked(d, 0);
    for (std::size_t b : active_bounds) {
        const std::size_t k = bounds_[b].index;
        if (w[k] == 0.0 && !masked[k]) {
            masked[k] = 1;
            B.push_back(b);
        }
    }
    auto slack_rows_in = [&](const std::vector<std::size_t>& set) {
        return std::count_if(set.begin(), set.end(),
                             [&](std::size_t r) { return rows_[r].t != 0.0; });
    };
    if (slack_rows_in(W) == 0) {
        std::size_t best = 0;
        double best_value = -std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < m; ++r) {
            if (rows_[r].t == 0.0) continue;
            const double v = rows_[r].c - s[r];
            if (v > best_value) {
                best_value = v;
                best = r;
            }
        }
        W.push_back(best);
    }

    std::vector<char> in_w(m, 0);
    std::vector<double> lambda, mu;
    std::vector<double> combo(d), w_hat(d), p(d);
    double xi_hat = 0.0;
    const double mult_tol = 1e-11 * std::max(1.0, C_);

    QPSolution out;
    std::size_t iter = 0;
    bool converged = false;

    // Schur system over (lambda, xi_hat): [P-masked Gram, t; t^T, 0]. The
    // masked Gram is formed over the free coordinates rather than by
    // subtraction from the cache, which would cancel badly.
    auto schur = [&](const std::vector<std::size_t>& rows, const std::vector<std::size_t>& bset) {
        const std::size_t n = rows.size();
        Eigen::MatrixXd M = Eigen::MatrixXd::Zero(Eigen::Index(n + 1), Eigen::Index(n + 1));
        if (bset.empty()) {
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) M(Eigen::Index(i), Eigen::Index(j)) = gram(rows[i], rows[j]);
        } else {
            std::vector<char> off(d, 0);
            for (std::size_t b : bset) off[bounds_[b].index] = 1;
            std::vector<std::size_t> free;
            for (std::size_t k = 0; k < d; ++k)
                if (!off[k] && !fixed_zero_[k]) free.push_back(k);
            Eigen::MatrixXd A(Eigen::Index(n), Eigen::Index(free.size()));
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t c = 0; c < free.size(); ++c)
                    A(Eigen::Index(i), Eigen::Index(c)) = rows_[rows[i]].a[free[c]];
            M.topLeftCorner(Eigen::Index(n), Eigen::Index(n)) = A * A.transpose();
        }
        for (std::size_t i = 0; i < n; ++i) {
            M(Eigen::Index(i), Eigen::Index(n)) = rows_[rows[i]].t;
            M(Eigen::Index(n), Eigen::Index(i)) = rows_[rows[i]].t;
        }
        return M;
    };
    auto invertible = [&](const std::vector<std::size_t>& rows, const std::vector<std::size_t>& bset) {
        return Eigen::FullPivLU<Eigen::MatrixXd>(schur(rows, bset)).isInvertible();
    };
    // Constraints that proved dependent on the current working set; their
    // exact slope is zero, so they cannot block. Cleared whenever the
    // working set changes.
    std::vector<char> dependent_row(m, 0), dependent_bound(nb, 0);
    auto working_set_changed = [&] {
        std::fill(dependent_row.begin(), dependent_row.end(), 0);
        std::fill(dependent_bound.begin(), dependent_bound.end(), 0);
    };

    for (; iter < options.max_iterations; ++iter) {
        const std::size_t n = W.size();
        Eigen::VectorXd rhs(Eigen::Index(n + 1));
        for (std::size_t i = 0; i < n; ++i) rhs(Eigen::Index(i)) = rows_[W[i]].c;
        rhs(Eigen::Index(n)) = C_;
        Eigen::FullPivLU<Eigen::MatrixXd> lu(schur(W, B));
        if (!lu.isInvertible()) {
            out.w = w;
            out.xi = xi;
            throw QpError("QP working set became linearly dependent", out);
        }
        const Eigen::VectorXd sol = lu.solve(rhs);
        lambda.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) lambda[i] = sol(Eigen::Index(i));
        xi_hat = sol(Eigen::Index(n));

        std::fill(combo.begin(), combo.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& a = rows_[W[i]].a;
            for (std::size_t k = 0; k < d; ++k) combo[k] += lambda[i] * a[k];
        }
        mu.assign(B.size(), 0.0);
        for (std::size_t i = 0; i < B.size(); ++i) mu[i] = -bounds_[B[i]].sigma * combo[bounds_[B[i]].index];
        double pw2 = 0.0, wn2 = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            w_hat[k] = masked[k] ? 0.0 : combo[k];
            p[k] = w_hat[k] - w[k];
            pw2 += p[k] * p[k];
            wn2 += w[k] * w[k];
        }
        const double p_norm = std::sqrt(pw2);
        const double p_xi = xi_hat - xi;

        const bool at_eqp_optimum = p_norm + std::abs(p_xi) <= 1e-14 * (1.0 + std::sqrt(wn2) + std::abs(xi));
        if (!at_eqp_optimum) {
            std::fill(in_w.begin(), in_w.end(), 0);
            for (std::size_t r : W) in_w[r] = 1;
            std::vector<double> slope(m, 0.0);
            for (std::size_t r = 0; r < m; ++r)
                if (!in_w[r]) slope[r] = dot(rows_[r].a, p) + rows_[r].t * p_xi;
            double alpha = 1.0;
            std::ptrdiff_t block_row = -1, block_bound = -1;
            while (true) {
                alpha = 1.0;
                block_row = block_bound = -1;
                for (std::size_t r = 0; r < m; ++r) {
                    if (in_w[r] || dependent_row[r]) continue;
                    const Row& row = rows_[r];
                    const double slope_scale = std::sqrt(gram(r, r)) * p_norm + row.t * std::abs(p_xi);
                    if (!(slope[r] < -1e-12 * slope_scale)) continue;
                    const double resid = std::max(0.0, s[r] + row.t * xi - row.c);
                    const double ratio = resid / -slope[r];
                    if (ratio < alpha) {
                        alpha = ratio;
                        block_row = std::ptrdiff_t(r);
                    }
                }
                for (std::size_t b = 0; b < nb; ++b) {
                    const Bound& bound = bounds_[b];
                    if (masked[bound.index] || dependent_bound[b]) continue;
                    const double sl = bound.sigma * p[bound.index];
                    if (!(sl < -1e-12 * p_norm)) continue;
                    const double ratio = std::max(0.0, bound.sigma * w[bound.index]) / -sl;
                    if (ratio < alpha) {
                        alpha = ratio;
                        block_bound = std::ptrdiff_t(b);
                        block_row = -1;
                    }
                }
                if (block_row >= 0) {
                    std::vector<std::size_t> grown = W;
                    grown.push_back(std::size_t(block_row));
                    if (invertible(grown, B)) break;
                    dependent_row[std::size_t(block_row)] = 1;
                } else if (block_bound >= 0) {
                    std::vector<std::size_t> grown = B;
                    grown.push_back(std::size_t(block_bound));
                    if (invertible(W, grown)) break;
                    dependent_bound[std::size_t(block_bound)] = 1;
                } else {
                    break;
                }
            }
            for (std::size_t k = 0; k < d; ++k) w[k] += alpha * p[k];
            xi += alpha * p_xi;
            for (std::size_t r = 0; r < m; ++r) s[r] = dot(rows_[r].a, w);
            if (block_row >= 0) {
                W.push_back(std::size_t(block_row));
                working_set_changed();
                continue;
            }
            if (block_bound >= 0) {
                const std::size_t k = bounds_[std::size_t(block_bound)].index;
                w[k] = 0.0;
                masked[k] = 1;
                B.push_back(std::size_t(block_bound));
                for (std::size_t r = 0; r < m; ++r) s[r] = dot(rows_[r].a, w);
                working_set_changed();
                continue;
            }
        }

        // At the minimizer over the working set: check the multipliers.
        std::ptrdiff_t drop_row = -1, drop_bound = -1;
        double most_negative = -mult_tol;
        const auto slack_count = slack_rows_in(W);
        for (std::size_t i = 0; i < n; ++i) {
            if (rows_[W[i]].t != 0.0 && slack_count == 1) continue;
            if (lambda[i] < most_negative) {
                most_negative = lambda[i];
                drop_row = std::ptrdiff_t(i);
            }
        }
        for (std::size_t i = 0; i < B.size(); ++i) {
            if (mu[i] < most_negative) {
                most_negative = mu[i];
                drop_bound = std::ptrdiff_t(i);
                drop_row = -1;
            }
        }
        if (drop_row >= 0) {
            W.erase(W.begin() + drop_row);
        } else if (drop_bound >= 0) {
            masked[bounds_[B[std::size_t(drop_bound)]].index] = 0;
            B.erase(B.begin() + drop_bound);
        } else {
            converged = true;
            break;
        }
        working_set_changed();
    }

    // Final point from the working-set multipliers; bounds not in the
    // working set are enforced exactly (any rounding there is far below the
    // tolerances).
    out.w = w_hat;
    for (const Bound& b : bounds_)
        if (b.sigma * out.w[b.index] < 0.0) out.w[b.index] = 0.0;
    out.iterations = iter;
    std::vector<double> resid(m);
    double xi_final = 0.0;
    for (std::size_t r = 0; r < m; ++r) {
        s[r] = dot(rows_[r].a, out.w);
        if (rows_[r].t != 0.0) xi_final = std::max(xi_final, rows_[r].c - s[r]);
    }
    out.xi = xi_final;
    double violation = 0.0;
    for (std::size_t r = 0; r < m; ++r) {
        resid[r] = s[r] + rows_[r].t * out.xi - rows_[r].c;
        violation = std::max(violation, -resid[r]);
    }
    out.max_violation = violation;

    double kkt = std::max(violation, std::abs(out.xi - xi_hat));
    double dual = -0.5 * dot(out.w, out.w);
    for (std::size_t i = 0; i < W.size(); ++i) {
        kkt = std::max(kkt, -lambda[i]);
        kkt = std::max(kkt, std::abs(lambda[i] * resid[W[i]]));
        dual += lambda[i] * rows_[W[i]].c;
        out.active_set.push_back(rows_[W[i]].ref);
        out.multipliers.push_back(lambda[i]);
    }
    for (std::size_t i = 0; i < B.size(); ++i) {
        kkt = std::max(kkt, -mu[i]);
        out.active_set.push_back(bounds_[B[i]].ref);
        out.multipliers.push_back(mu[i]);
    }
    out.kkt_residual = kkt;
    out.objective = 0.5 * dot(out.w, out.w) + C_ * out.xi;
    out.dual_objective = dual;

    if (!converged) {
        std::ostringstream os;
        os << "QP did not converge within " << options.max_iterations << " iterations";
        throw QpError(os.str(), out);
    }
    if (out.kkt_residual > std::max(options.eps_kkt, options.eps_feas) * scale) {
        std::ostringstream os;
        os << "QP KKT residual " << out.kkt_residual << " above tolerance";
        throw QpError(os.str(), out);
    }
    last_ = out;
    return out;
}

QPSolution solve(const QPProblem& problem, const QPSolution* warm_start, const QPOptions& options) {
    QpSolver solver(problem.dimension, problem.C, problem.sign_constraints);
    for (const MarginConstraint& m : problem.margin_constraints) solver.add_margin(m.direction, m.offset);
    for (const auto& h : problem.hard_constraints) solver.add_hard(h);
    if (warm_start) return solver.solve_from(*warm_start, options);
    return solver.solve_cold(options);
}

}  // namespace probsub
