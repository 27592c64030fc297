#include "probsub/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

namespace probsub {

ConstraintRegime parse_regime(std::string_view name) {
    if (name == "c0") return ConstraintRegime::C0;
    if (name == "c1") return ConstraintRegime::C1;
    if (name == "c2") return ConstraintRegime::C2;
    if (name == "c3") return ConstraintRegime::C3;
    if (name == "c4") return ConstraintRegime::C4;
    if (name == "c4t") return ConstraintRegime::C4Transductive;
    if (name == "none") return ConstraintRegime::Unconstrained;
    throw Error("unknown constraint regime '" + std::string(name) + "' (expected c0, c1, c2, c3, c4, c4t or none)");
}

std::string to_string(ConstraintRegime regime) {
    switch (regime) {
        case ConstraintRegime::C0: return "c0";
        case ConstraintRegime::C1: return "c1";
        case ConstraintRegime::C2: return "c2";
        case ConstraintRegime::C3: return "c3";
        case ConstraintRegime::C4: return "c4";
        case ConstraintRegime::C4Transductive: return "c4t";
        case ConstraintRegime::Unconstrained: return "none";
    }
    return "?";
}

std::optional<BankFamily> bank_family(ConstraintRegime regime) {
    switch (regime) {
        case ConstraintRegime::C3: return BankFamily::SignPattern;
        case ConstraintRegime::C4:
        case ConstraintRegime::C4Transductive: return BankFamily::Submodular;
        default: return std::nullopt;
    }
}

ConstraintBank::ConstraintBank(BankFamily family, int label_count, int pairwise_dim)
    : family_(family), label_count_(label_count), pairwise_dim_(pairwise_dim) {
    if (label_count < 2) throw DimensionError("constraint bank needs at least 2 labels");
    if (pairwise_dim < 1) throw DimensionError("constraint bank needs a positive pairwise dimension");
    const int L = label_count;
    const auto block = [L](int a, int b) { return std::size_t(a * L + b); };
    auto push = [&](std::vector<std::pair<std::size_t, double>> entries) {
        std::vector<double> row(std::size_t(L * L), 0.0);
        for (auto [q, v] : entries) row[q] = v;
        combos_.push_back(std::move(row));
    };
    if (family == BankFamily::Submodular) {
        for (int a = 0; a < L; ++a)
            for (int b = a + 1; b < L; ++b)
                push({{block(a, a), 1.0}, {block(a, b), -1.0}, {block(b, a), -1.0}, {block(b, b), 1.0}});
    } else {
        for (int a = 0; a < L; ++a) push({{block(a, a), 1.0}});
        for (int a = 0; a < L; ++a)
            for (int b = 0; b < L; ++b)
                if (a != b) push({{block(a, b), -1.0}});
    }
    for (const auto& row : combos_) {
        std::vector<std::size_t> support;
        double sq = 0.0;
        for (std::size_t q = 0; q < row.size(); ++q)
            if (row[q] != 0.0) {
                support.push_back(q);
                sq += row[q] * row[q];
            }
        combo_support_.push_back(std::move(support));
        combo_norm_.push_back(std::sqrt(sq));
    }
}

void ConstraintBank::add_row(std::span<const double> feature, RowSource source) {
    if (feature.size() != std::size_t(pairwise_dim_))
        throw DimensionError("bank row from '" + source.instance_id + "' edge " + std::to_string(source.edge) +
                             " has length " + std::to_string(feature.size()) + ", expected " +
                             std::to_string(pairwise_dim_));
    double sq = 0.0;
    for (double v : feature) {
        if (!(v >= 0.0) || !std::isfinite(v))
            throw DimensionError("bank row from '" + source.instance_id + "' has a negative or non-finite entry");
        sq += v * v;
    }
    features_.insert(features_.end(), feature.begin(), feature.end());
    feature_norm_.push_back(std::sqrt(sq));
    sources_.push_back(std::move(source));
    bounds_.resize(bounds_.size() + pairs(), -std::numeric_limits<double>::infinity());
    added_.resize(added_.size() + pairs(), 0);
}

void ConstraintBank::reset_bounds() {
    std::fill(bounds_.begin(), bounds_.end(), -std::numeric_limits<double>::infinity());
}

std::size_t ConstraintBank::added_count() const {
    return std::size_t(std::count(added_.begin(), added_.end(), char(1)));
}

namespace {

double block_product(std::span<const double> p, std::span<const double> w_p, std::size_t q) {
    const std::size_t d = p.size();
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) s += p[k] * w_p[q * d + k];
    return s;
}

void check_pairwise(const ConstraintBank& bank, std::span<const double> w_p) {
    if (w_p.size() != bank.pairwise_size())
        throw DimensionError("pairwise weights have length " + std::to_string(w_p.size()) + ", bank expects " +
                             std::to_string(bank.pairwise_size()));
}

}  // namespace

double ConstraintBank::margin(std::size_t i, std::size_t j, std::span<const double> w_p) const {
    const auto p = feature(i);
    double m = 0.0;
    for (std::size_t q : combo_support_[j]) m += combos_[j][q] * block_product(p, w_p, q);
    return m;
}

std::vector<double> ConstraintBank::direction(std::size_t i, std::size_t j) const {
    const auto p = feature(i);
    const std::size_t d = p.size();
    std::vector<double> dir(pairwise_size(), 0.0);
    for (std::size_t q : combo_support_[j])
        for (std::size_t k = 0; k < d; ++k) dir[q * d + k] = combos_[j][q] * p[k];
    return dir;
}

ConstraintBank build_bank(const std::vector<GraphInstance>& instances, int label_count, BankFamily family) {
    if (instances.empty()) throw Error("cannot build a constraint bank from an empty instance list");
    const int dp = instances.front().shape().pairwise_dim;
    ConstraintBank bank(family, label_count, dp);
    for (std::size_t n = 0; n < instances.size(); ++n) {
        const GraphInstance& x = instances[n];
        if (x.shape().pairwise_dim != dp || x.shape().label_count != label_count)
            throw DimensionError("instance '" + x.id() + "' does not match the bank's shape");
        for (int e = 0; e < x.edge_count(); ++e) bank.add_row(x.edge(e).feature, {n, x.id(), e});
    }
    return bank;
}

std::vector<double> compute_margins(const ConstraintBank& bank, std::span<const double> w_p) {
    check_pairwise(bank, w_p);
    const std::size_t Q = std::size_t(bank.label_count()) * std::size_t(bank.label_count());
    const std::size_t J = bank.pairs();
    std::vector<double> V(bank.rows() * J);
    std::vector<double> u(Q);
    for (std::size_t i = 0; i < bank.rows(); ++i) {
        const auto p = bank.feature(i);
        for (std::size_t q = 0; q < Q; ++q) u[q] = block_product(p, w_p, q);
        for (std::size_t j = 0; j < J; ++j) {
            double m = 0.0;
            for (std::size_t q : bank.combo_support_[j]) m += bank.combos_[j][q] * u[q];
            V[i * J + j] = m;
        }
    }
    return V;
}

namespace {

using Candidate = std::tuple<double, std::size_t, std::size_t>;

std::vector<Violation> select(const ConstraintBank& bank, std::vector<Candidate> candidates, std::size_t count) {
    count = std::min(count, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + std::ptrdiff_t(count), candidates.end());
    std::vector<Violation> out;
    for (std::size_t c = 0; c < count; ++c) {
        const auto [m, i, j] = candidates[c];
        out.push_back({i, j, m, bank.direction(i, j)});
    }
    return out;
}

}  // namespace

std::vector<Violation> most_violated(const ConstraintBank& bank, std::span<const double> w_p, std::size_t count,
                                     double threshold) {
    const auto V = compute_margins(bank, w_p);
    const std::size_t J = bank.pairs();
    std::vector<Candidate> candidates;
    for (std::size_t i = 0; i < bank.rows(); ++i)
        for (std::size_t j = 0; j < J; ++j)
            if (!bank.is_added(i, j) && V[i * J + j] < threshold) candidates.emplace_back(V[i * J + j], i, j);
    return select(bank, std::move(candidates), count);
}

std::optional<Violation> most_violated(const ConstraintBank& bank, std::span<const double> w_p) {
    auto v = most_violated(bank, w_p, 1, 0.0);
    if (v.empty()) return std::nullopt;
    return std::move(v.front());
}

void delayed_update(ConstraintBank& bank, std::span<const double> w_old, std::span<const double> w_new) {
    check_pairwise(bank, w_old);
    check_pairwise(bank, w_new);
    double sq = 0.0;
    for (std::size_t k = 0; k < w_old.size(); ++k) sq += (w_new[k] - w_old[k]) * (w_new[k] - w_old[k]);
    const double step = std::sqrt(sq);
    if (step == 0.0) return;
    for (std::size_t i = 0; i < bank.rows(); ++i)
        for (std::size_t j = 0; j < bank.pairs(); ++j) bank.bound(i, j) -= step * bank.norm(i, j);
}

DelayedResult most_violated_delayed(ConstraintBank& bank, std::span<const double> w_p, std::size_t count,
                                    double threshold) {
    check_pairwise(bank, w_p);
    DelayedResult result;
    std::vector<Candidate> candidates;
    for (std::size_t i = 0; i < bank.rows(); ++i)
        for (std::size_t j = 0; j < bank.pairs(); ++j) {
            if (bank.is_added(i, j)) continue;
            double& b = bank.bound(i, j);
            if (b <= 0.0) {
                b = bank.margin(i, j, w_p);
                ++result.refreshed;
            }
            if (b < threshold) candidates.emplace_back(b, i, j);
        }
    result.violations = select(bank, std::move(candidates), count);
    return result;
}

std::vector<SignConstraint> regime_sign_constraints(ConstraintRegime regime, ModelShape shape) {
    std::vector<SignConstraint> out;
    const std::size_t dp = std::size_t(shape.pairwise_dim);
    for (Label a = 0; a < shape.label_count; ++a)
        for (Label b = 0; b < shape.label_count; ++b) {
            std::optional<Sign> sign;
            switch (regime) {
                case ConstraintRegime::C0: sign = Sign::Zero; break;
                case ConstraintRegime::C1: sign = a == b ? Sign::Zero : Sign::NonPositive; break;
                case ConstraintRegime::C2: sign = a == b ? Sign::NonNegative : Sign::NonPositive; break;
                default: break;
            }
            if (!sign) continue;
            const std::size_t offset = shape.unary_size() + shape.pair_offset(a, b);
            for (std::size_t k = 0; k < dp; ++k) out.push_back({offset + k, *sign});
        }
    return out;
}

bool regime_feasible(ConstraintRegime regime, const WeightVector& w, const ConstraintBank& bank, double tol) {
    const ModelShape shape = w.shape();
    const int L = shape.label_count;
    switch (regime) {
        case ConstraintRegime::C0:
        case ConstraintRegime::C1:
        case ConstraintRegime::C2:
            for (Label a = 0; a < L; ++a)
                for (Label b = 0; b < L; ++b)
                    for (double v : w.pairwise_block(a, b)) {
                        const bool zero = regime == ConstraintRegime::C0 || (regime == ConstraintRegime::C1 && a == b);
                        if (zero && std::abs(v) > tol) return false;
                        if (a != b && v > tol) return false;
                        if (a == b && v < -tol) return false;
                    }
            return true;
        case ConstraintRegime::C3:
            for (std::size_t i = 0; i < bank.rows(); ++i) {
                const auto p = bank.feature(i);
                for (Label a = 0; a < L; ++a)
                    for (Label b = 0; b < L; ++b) {
                        const double s = dot(w.pairwise_block(a, b), p);
                        if (a == b ? s < -tol : s > tol) return false;
                    }
            }
            return true;
        case ConstraintRegime::C4:
        case ConstraintRegime::C4Transductive:
            for (std::size_t i = 0; i < bank.rows(); ++i)
                for (Label a = 0; a < L; ++a)
                    for (Label b = a + 1; b < L; ++b)
                        if (submodularity_margin(w, bank.feature(i), a, b) < -tol) return false;
            return true;
        case ConstraintRegime::Unconstrained: return true;
    }
    return false;
}

std::optional<ConstraintRegime> classify_regime(const WeightVector& w, const ConstraintBank& bank, double tol) {
    for (ConstraintRegime r : {ConstraintRegime::C0, ConstraintRegime::C1, ConstraintRegime::C2, ConstraintRegime::C3,
                               ConstraintRegime::C4})
        if (regime_feasible(r, w, bank, tol)) return r;
    return std::nullopt;
}

bool bounds_safe(const ConstraintBank& bank, std::span<const double> w_p) {
    const auto V = compute_margins(bank, w_p);
    const std::size_t J = bank.pairs();
    for (std::size_t i = 0; i < bank.rows(); ++i)
        for (std::size_t j = 0; j < J; ++j) {
            const double m = V[i * J + j];
            if (bank.bound(i, j) > m + 1e-10 * (1.0 + std::abs(m))) return false;
        }
    return true;
}

}  // namespace probsub
