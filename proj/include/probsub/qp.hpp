#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "probsub/model.hpp"

namespace probsub {

// Quadratic subproblem of the 1-slack SSVM:
//
//   min  1/2 |w|^2 + C xi
//   s.t. g_i^T w >= b_i - xi     (margin constraints, cutting planes)
//        h_j^T w >= 0            (hard constraints)
//        w_k >= 0 / <= 0 / = 0   (sign constraints)
//        xi >= 0
//
// Solved with a primal active-set method whose equality subproblems are
// reduced to the Gram matrix of the working set. Sign constraints act as
// coordinate bounds: an active bound masks its coordinate, so
// w = P sum_r lambda_r a_r with P the mask. Coordinates fixed to zero are
// removed from every direction up front.

enum class Sign { NonNegative, NonPositive, Zero };

struct MarginConstraint {
    std::vector<double> direction;
    double offset = 0.0;
};

struct SignConstraint {
    std::size_t index = 0;
    Sign sign = Sign::NonNegative;
};

struct QPProblem {
    std::size_t dimension = 0;
    double C = 1.0;
    std::vector<MarginConstraint> margin_constraints;
    std::vector<std::vector<double>> hard_constraints;
    std::vector<SignConstraint> sign_constraints;
};

enum class ConstraintKind { SlackNonnegative, Margin, Hard, Sign };

struct ConstraintRef {
    ConstraintKind kind;
    std::size_t index;  // position within its kind
    bool operator==(const ConstraintRef&) const = default;
};

struct QPSolution {
    std::vector<double> w;
    double xi = 0.0;
    double objective = 0.0;       // 1/2 |w|^2 + C xi
    double dual_objective = 0.0;  // Lagrangian lower bound from the multipliers
    double kkt_residual = 0.0;
    double max_violation = 0.0;  // worst primal infeasibility
    std::vector<ConstraintRef> active_set;
    std::vector<double> multipliers;  // aligned with active_set
    std::size_t iterations = 0;
};

struct QPOptions {
    double eps_feas = 1e-7;
    double eps_kkt = 1e-7;
    std::size_t max_iterations = 100000;
};

/// Non-convergence; carries the last iterate.
class QpError : public Error {
public:
    QpError(const std::string& what, QPSolution best) : Error(what), best_(std::move(best)) {}
    const QPSolution& best() const { return best_; }

private:
    QPSolution best_;
};

/// Incremental solver: constraints are appended, Gram entries cached, and
/// each solve warm-starts from the previous optimum when that point is
/// still feasible. Not thread-safe.
class QpSolver {
public:
    QpSolver(std::size_t dimension, double C, const std::vector<SignConstraint>& signs = {});

    std::size_t dimension() const { return dimension_; }
    double C() const { return C_; }

    std::size_t add_margin(std::span<const double> g, double b);
    std::size_t add_hard(std::span<const double> h);

    std::size_t margin_count() const { return margin_count_; }
    std::size_t hard_count() const { return hard_count_; }

    QPSolution solve(const QPOptions& options = {});
    /// Start from an explicit previous solution (ignores the cached one).
    QPSolution solve_from(const QPSolution& warm, const QPOptions& options = {});
    QPSolution solve_cold(const QPOptions& options = {});

    const std::optional<QPSolution>& last() const { return last_; }

private:
    struct Row {
        std::vector<double> a;  // masked direction
        double t;               // coefficient of xi (0 or 1)
        double c;               // right-hand side
        ConstraintRef ref;
    };

    struct Bound {
        std::size_t index;  // coordinate
        double sigma;       // +1 for w_k >= 0, -1 for w_k <= 0
        ConstraintRef ref;
    };

    std::size_t add_row(std::vector<double> a, double t, double c, ConstraintRef ref);
    QPSolution run(std::vector<double> w, std::vector<std::size_t> working, std::vector<std::size_t> bounds,
                   const QPOptions& options);
    std::optional<std::size_t> row_of(const ConstraintRef& ref) const;

    std::size_t dimension_;
    double C_;
    std::vector<bool> fixed_zero_;
    std::vector<Row> rows_;
    std::vector<Bound> bounds_;
    std::vector<std::vector<double>> gram_;  // lower triangle, gram_[r][s] for s <= r
    std::size_t margin_count_ = 0;
    std::size_t hard_count_ = 0;
    std::size_t sign_count_ = 0;
    std::optional<QPSolution> last_;

    double gram(std::size_t r, std::size_t s) const { return r >= s ? gram_[r][s] : gram_[s][r]; }
};

/// One-shot solve of a QPProblem.
QPSolution solve(const QPProblem& problem, const QPSolution* warm_start = nullptr,
                 const QPOptions& options = {});

}  // namespace probsub
