#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "probsub/model.hpp"
#include "probsub/qp.hpp"

namespace probsub {

/// Unconstrained is the baseline without any pairwise restriction; its
/// inference falls back to truncated graph cuts.
enum class ConstraintRegime { C0, C1, C2, C3, C4, C4Transductive, Unconstrained };

ConstraintRegime parse_regime(std::string_view name);  // "c0".."c4", "c4t", "none"
std::string to_string(ConstraintRegime regime);

/// Which combination rows a bank holds.
///  Submodular: one row per unordered pair a<b, +1 at (a,a),(b,b), -1 at (a,b),(b,a).
///  SignPattern: +1 at (a,a) for every a, then -1 at (a,b) for every ordered a != b.
enum class BankFamily { Submodular, SignPattern };

/// Lazily generated constraints need a bank; C0-C2 are pure sign constraints.
std::optional<BankFamily> bank_family(ConstraintRegime regime);

struct RowSource {
    std::size_t instance = 0;  // position in the list given to build_bank
    std::string instance_id;
    int edge = 0;
};

/// Pairwise feature rows P, combination rows B, lower bounds on the margins
/// of every (row, combination) pair and the norms N[i,j] = |b_j| |p_i|.
/// Storage is dense and row-major.
class ConstraintBank {
public:
    ConstraintBank(BankFamily family, int label_count, int pairwise_dim);

    BankFamily family() const { return family_; }
    int label_count() const { return label_count_; }
    int pairwise_dim() const { return pairwise_dim_; }
    std::size_t rows() const { return sources_.size(); }
    std::size_t pairs() const { return combos_.size(); }
    std::size_t pairwise_size() const {
        return std::size_t(label_count_) * std::size_t(label_count_) * std::size_t(pairwise_dim_);
    }

    void add_row(std::span<const double> feature, RowSource source);

    std::span<const double> feature(std::size_t i) const {
        return {features_.data() + i * std::size_t(pairwise_dim_), std::size_t(pairwise_dim_)};
    }
    /// Combination row j over the |L|^2 blocks, row-major (a,b) order.
    const std::vector<double>& combination(std::size_t j) const { return combos_[j]; }
    const RowSource& source(std::size_t i) const { return sources_[i]; }

    double norm(std::size_t i, std::size_t j) const { return feature_norm_[i] * combo_norm_[j]; }
    double bound(std::size_t i, std::size_t j) const { return bounds_[i * pairs() + j]; }
    double& bound(std::size_t i, std::size_t j) { return bounds_[i * pairs() + j]; }
    /// Resets every bound to -infinity.
    void reset_bounds();

    /// Entries already handed to the QP are excluded from violation searches.
    bool is_added(std::size_t i, std::size_t j) const { return added_[i * pairs() + j] != 0; }
    void mark_added(std::size_t i, std::size_t j) { added_[i * pairs() + j] = 1; }
    std::size_t added_count() const;

    /// Exact margin <b_j (x) p_i, w_p>.
    double margin(std::size_t i, std::size_t j, std::span<const double> w_p) const;
    /// Hard-constraint direction b_j (x) p_i in pairwise-block layout.
    std::vector<double> direction(std::size_t i, std::size_t j) const;

private:
    friend std::vector<double> compute_margins(const ConstraintBank&, std::span<const double>);

    BankFamily family_;
    int label_count_;
    int pairwise_dim_;
    std::vector<std::vector<double>> combos_;
    std::vector<std::vector<std::size_t>> combo_support_;  // nonzero blocks per combination
    std::vector<double> combo_norm_;
    std::vector<double> features_;
    std::vector<double> feature_norm_;
    std::vector<RowSource> sources_;
    std::vector<double> bounds_;
    std::vector<char> added_;
};

/// Stacks every edge feature of every instance.
ConstraintBank build_bank(const std::vector<GraphInstance>& instances, int label_count,
                          BankFamily family = BankFamily::Submodular);

/// Dense margins V[i * pairs + j] = (p_i^T W) b_j, where column q of W is
/// the pairwise block q. The block products of a row are shared by all of
/// its combinations. Entries are bit-identical to ConstraintBank::margin.
std::vector<double> compute_margins(const ConstraintBank& bank, std::span<const double> w_p);

struct Violation {
    std::size_t row = 0;
    std::size_t pair = 0;
    double margin = 0.0;
    std::vector<double> direction;  // pairwise-block layout
};

/// Up to `count` entries with margin < threshold, most negative first; ties by
/// smallest row, then smallest pair. Entries marked added are skipped.
std::vector<Violation> most_violated(const ConstraintBank& bank, std::span<const double> w_p,
                                     std::size_t count, double threshold = 0.0);
std::optional<Violation> most_violated(const ConstraintBank& bank, std::span<const double> w_p);

/// Lowers every bound by |w_new - w_old| N[i,j]; both arguments are pairwise sub-vectors.
void delayed_update(ConstraintBank& bank, std::span<const double> w_old, std::span<const double> w_new);

struct DelayedResult {
    std::vector<Violation> violations;
    std::size_t refreshed = 0;  // exact margins computed
};

/// Refreshes entries whose bound is <= 0 to their exact margin, then selects
/// as most_violated does over the bounds.
DelayedResult most_violated_delayed(ConstraintBank& bank, std::span<const double> w_p,
                                    std::size_t count = 1, double threshold = 0.0);

/// Sign constraints (on the full weight vector) for C0-C2; empty otherwise.
std::vector<SignConstraint> regime_sign_constraints(ConstraintRegime regime, ModelShape shape);

/// Membership test. C3 and C4 are judged on the rows of `bank` (any family);
/// C0-C2 only look at w. Tolerance applies to every inequality.
bool regime_feasible(ConstraintRegime regime, const WeightVector& w, const ConstraintBank& bank,
                     double tol = 0.0);

/// Smallest regime among C0..C4 containing w, or nothing.
std::optional<ConstraintRegime> classify_regime(const WeightVector& w, const ConstraintBank& bank,
                                                double tol = 0.0);

/// True iff every bound is <= the exact margin (up to a relative slack).
bool bounds_safe(const ConstraintBank& bank, std::span<const double> w_p);

/// One record per outer training iteration.
struct EfficiencyRecord {
    std::size_t outer_iteration = 0;
    std::size_t margins_refreshed = 0;
    std::size_t constraints_added = 0;
    double delta_w_norm = 0.0;
};

}  // namespace probsub
