#include "probsub/inference.hpp"

#include <array>
#include <cmath>
#include <sstream>

#include "probsub/maxflow.hpp"

namespace probsub {

namespace {

constexpr double kBruteForceLimit = 1e6;

// Deficits this small relative to the potentials are rounding in the dot
// products, not structure: they are still truncated (the cut needs a
// nonnegative capacity) but not reported.
bool significant_deficit(double margin, double a, double b, double c, double d) {
    return margin < -1e-9 * (std::abs(a) + std::abs(b) + std::abs(c) + std::abs(d));
}

struct BinaryPair {
    int k, l;
    double e00, e01, e10, e11;  // energies
};

/// Minimizes sum_k unary[k][y_k] + sum pair energies over y in {0,1}^n.
/// Non-submodular pairs are truncated first; returns the minimizer and the
/// number of truncated pairs.
std::pair<Labeling, std::size_t> minimize_binary_energy(
    const std::vector<std::array<double, 2>>& unary, std::vector<BinaryPair> pairs) {
    const int n = int(unary.size());
    std::size_t truncated = 0;
    std::vector<double> linear(std::size_t(n), 0.0);  // coefficient of y_k
    for (int k = 0; k < n; ++k) linear[std::size_t(k)] = unary[std::size_t(k)][1] - unary[std::size_t(k)][0];

    MaxFlowGraph graph(n);
    for (BinaryPair& p : pairs) {
        double lambda = p.e01 + p.e10 - p.e00 - p.e11;
        if (lambda < 0.0) {
            if (significant_deficit(lambda, p.e00, p.e01, p.e10, p.e11)) ++truncated;
            p.e01 -= 0.5 * lambda;
            p.e10 -= 0.5 * lambda;
            lambda = 0.0;
        }
        // E = e00 + (e10 - e00) y_k + (e11 - e10) y_l + lambda (1 - y_k) y_l
        linear[std::size_t(p.k)] += p.e10 - p.e00;
        linear[std::size_t(p.l)] += p.e11 - p.e10;
        if (lambda > 0.0) graph.add_edge(p.k, p.l, lambda, 0.0);
    }
    for (int k = 0; k < n; ++k) {
        const double c = linear[std::size_t(k)];
        // label 1 = sink side: pays the source arc
        if (c > 0.0) graph.add_terminal(k, c, 0.0);
        else if (c < 0.0) graph.add_terminal(k, 0.0, -c);
    }
    graph.solve();
    Labeling y(std::size_t(n), 0);
    for (int k = 0; k < n; ++k) y[std::size_t(k)] = graph.on_sink_side(k) ? 1 : 0;
    return {std::move(y), truncated};
}

std::size_t label_pairs(int L) { return std::size_t(L) * (L - 1) / 2; }

void fill_fraction(InferenceReport& r, const ScoreTables& t) {
    const std::size_t denom = std::size_t(t.edge_count()) * label_pairs(t.label_count());
    r.truncated_fraction = denom ? double(r.truncated_edge_count) / double(denom) : 0.0;
}

Labeling unary_argmax(const ScoreTables& t) {
    Labeling y(std::size_t(t.vertex_count()), 0);
    for (int k = 0; k < t.vertex_count(); ++k) {
        Label best = 0;
        for (Label a = 1; a < t.label_count(); ++a)
            if (t.unary(k, a) > t.unary(k, best)) best = a;
        y[std::size_t(k)] = best;
    }
    return y;
}

}  // namespace

ScoreTables::ScoreTables(const WeightVector& w, const GraphInstance& x)
    : label_count_(x.label_count()), vertex_count_(x.vertex_count()) {
    check_compatible(w.shape(), x.shape());
    const int L = label_count_;
    unary_.resize(std::size_t(vertex_count_) * L);
    for (int k = 0; k < vertex_count_; ++k)
        for (Label a = 0; a < L; ++a) unary(k, a) = dot(w.unary_block(a), x.unary(k));
    edge_ends_.reserve(x.edges().size());
    pair_.resize(x.edges().size() * L * L);
    std::size_t i = 0;
    for (const Edge& e : x.edges()) {
        edge_ends_.emplace_back(e.k, e.l);
        for (Label a = 0; a < L; ++a)
            for (Label b = 0; b < L; ++b) pair_[i++] = dot(w.pairwise_block(a, b), e.feature);
    }
}

void ScoreTables::add_loss(const Labeling& y_true, const std::vector<double>& weights) {
    check_labeling(y_true, vertex_count_, label_count_);
    for (int k = 0; k < vertex_count_; ++k)
        for (Label a = 0; a < label_count_; ++a)
            if (a != y_true[std::size_t(k)]) unary(k, a) += weights[std::size_t(k)];
}

double ScoreTables::objective(const Labeling& y) const {
    double s = 0.0;
    for (int k = 0; k < vertex_count_; ++k) s += unary(k, y[std::size_t(k)]);
    for (int e = 0; e < edge_count(); ++e) {
        const auto [k, l] = edge_ends_[std::size_t(e)];
        s += pair(e, y[std::size_t(k)], y[std::size_t(l)]);
    }
    return s;
}

std::size_t ScoreTables::non_submodular_count() const {
    std::size_t count = 0;
    for (int e = 0; e < edge_count(); ++e)
        for (Label a = 0; a < label_count_; ++a)
            for (Label b = a + 1; b < label_count_; ++b) {
                const double margin =
                    (pair(e, a, a) + pair(e, b, b)) - (pair(e, a, b) + pair(e, b, a));
                count += significant_deficit(margin, pair(e, a, a), pair(e, b, b), pair(e, a, b), pair(e, b, a));
            }
    return count;
}

TruncationResult truncate_edges(const WeightVector& w, const GraphInstance& x) {
    check_compatible(w.shape(), x.shape());
    TruncationResult result;
    const int L = x.label_count();
    for (const Edge& e : x.edges()) {
        EdgePotentialTable t = edge_potentials(w, e.feature);
        for (Label a = 0; a < L; ++a)
            for (Label b = a + 1; b < L; ++b) {
                const double margin = (t(a, b) + t(b, a)) - (t(a, a) + t(b, b));
                if (margin < 0.0) {
                    if (significant_deficit(margin, t(a, a), t(b, b), t(a, b), t(b, a))) ++result.modified;
                    t(a, b) -= 0.5 * margin;
                    t(b, a) -= 0.5 * margin;
                }
            }
        result.tables.push_back(std::move(t));
    }
    return result;
}

InferenceReport solve_binary(const ScoreTables& t) {
    if (t.label_count() != 2)
        throw Error("binary graph cut needs exactly 2 labels; use map_multiclass");
    std::vector<std::array<double, 2>> unary(std::size_t(t.vertex_count()));
    for (int k = 0; k < t.vertex_count(); ++k) unary[std::size_t(k)] = {-t.unary(k, 0), -t.unary(k, 1)};
    std::vector<BinaryPair> pairs;
    pairs.reserve(std::size_t(t.edge_count()));
    for (int e = 0; e < t.edge_count(); ++e) {
        const auto [k, l] = t.edge_ends(e);
        pairs.push_back({k, l, -t.pair(e, 0, 0), -t.pair(e, 0, 1), -t.pair(e, 1, 0), -t.pair(e, 1, 1)});
    }
    auto [y, truncated] = minimize_binary_energy(unary, std::move(pairs));
    InferenceReport r;
    r.objective = t.objective(y);
    r.labeling = std::move(y);
    r.truncated_edge_count = truncated;
    r.exact = truncated == 0;
    fill_fraction(r, t);
    return r;
}

InferenceReport solve_swap(const ScoreTables& t, int sweeps) {
    if (sweeps < 1) throw Error("alpha-beta swap needs at least one sweep");
    const int L = t.label_count();
    const int n = t.vertex_count();
    Labeling y = unary_argmax(t);
    double current = t.objective(y);

    // incident edges per vertex
    std::vector<std::vector<int>> incident(static_cast<std::size_t>(n));
    for (int e = 0; e < t.edge_count(); ++e) {
        const auto [k, l] = t.edge_ends(e);
        incident[std::size_t(k)].push_back(e);
        incident[std::size_t(l)].push_back(e);
    }

    for (int sweep = 0; sweep < sweeps; ++sweep) {
        bool improved = false;
        for (Label alpha = 0; alpha < L; ++alpha) {
            for (Label beta = alpha + 1; beta < L; ++beta) {
                std::vector<int> index(std::size_t(n), -1);
                std::vector<int> free;
                for (int k = 0; k < n; ++k)
                    if (y[std::size_t(k)] == alpha || y[std::size_t(k)] == beta) {
                        index[std::size_t(k)] = int(free.size());
                        free.push_back(k);
                    }
                if (free.empty()) continue;
                const Label choice[2] = {alpha, beta};

                std::vector<std::array<double, 2>> unary(free.size());
                std::vector<BinaryPair> pairs;
                for (std::size_t i = 0; i < free.size(); ++i) {
                    const int k = free[i];
                    for (int c = 0; c < 2; ++c) {
                        double score = t.unary(k, choice[c]);
                        for (int e : incident[std::size_t(k)]) {
                            const auto [u, v] = t.edge_ends(e);
                            const int other = u == k ? v : u;
                            if (index[std::size_t(other)] >= 0) continue;
                            const Label fixed = y[std::size_t(other)];
                            score += u == k ? t.pair(e, choice[c], fixed) : t.pair(e, fixed, choice[c]);
                        }
                        unary[i][std::size_t(c)] = -score;
                    }
                }
                for (int e = 0; e < t.edge_count(); ++e) {
                    const auto [u, v] = t.edge_ends(e);
                    const int iu = index[std::size_t(u)], iv = index[std::size_t(v)];
                    if (iu < 0 || iv < 0) continue;
                    pairs.push_back({iu, iv, -t.pair(e, alpha, alpha), -t.pair(e, alpha, beta),
                                     -t.pair(e, beta, alpha), -t.pair(e, beta, beta)});
                }
                const auto moved = minimize_binary_energy(unary, std::move(pairs)).first;
                Labeling candidate = y;
                for (std::size_t i = 0; i < free.size(); ++i)
                    candidate[std::size_t(free[i])] = choice[moved[i]];
                const double value = t.objective(candidate);
                if (value >= current) {
                    if (value > current) improved = true;
                    current = value;
                    y = std::move(candidate);
                }
            }
        }
        if (!improved) break;
    }

    InferenceReport r;
    r.labeling = std::move(y);
    r.objective = current;
    r.truncated_edge_count = t.non_submodular_count();
    r.exact = L == 2 && r.truncated_edge_count == 0;
    fill_fraction(r, t);
    return r;
}

InferenceReport solve_brute_force(const ScoreTables& t) {
    const int n = t.vertex_count();
    const int L = t.label_count();
    if (std::pow(double(L), double(n)) > kBruteForceLimit) {
        std::ostringstream os;
        os << "brute force over " << L << "^" << n << " labelings exceeds the 1e6 limit";
        throw Error(os.str());
    }
    Labeling y(std::size_t(n), 0);
    InferenceReport best;
    best.labeling = y;
    best.objective = t.objective(y);
    // odometer with the last vertex fastest: lexicographic order
    while (true) {
        int k = n - 1;
        while (k >= 0 && y[std::size_t(k)] == L - 1) y[std::size_t(k--)] = 0;
        if (k < 0) break;
        ++y[std::size_t(k)];
        const double value = t.objective(y);
        if (value > best.objective) {
            best.objective = value;
            best.labeling = y;
        }
    }
    best.truncated_edge_count = t.non_submodular_count();
    best.exact = true;
    fill_fraction(best, t);
    return best;
}

InferenceReport map_binary(const WeightVector& w, const GraphInstance& x) {
    if (x.label_count() != 2)
        throw Error("map_binary needs exactly 2 labels; use map_multiclass");
    return solve_binary(ScoreTables(w, x));
}

InferenceReport map_multiclass(const WeightVector& w, const GraphInstance& x, int sweeps) {
    return solve_swap(ScoreTables(w, x), sweeps);
}

InferenceReport map_inference(const WeightVector& w, const GraphInstance& x) {
    return x.label_count() == 2 ? map_binary(w, x) : map_multiclass(w, x);
}

InferenceReport loss_augmented_map(const WeightVector& w, const GraphInstance& x,
                                   const Labeling& y_true, LossKind loss) {
    ScoreTables tables(w, x);
    tables.add_loss(y_true, vertex_loss_weights(loss, y_true));
    return tables.label_count() == 2 ? solve_binary(tables) : solve_swap(tables, 20);
}

InferenceReport brute_force_map(const WeightVector& w, const GraphInstance& x,
                                const std::optional<LossTerm>& loss) {
    ScoreTables tables(w, x);
    if (loss) tables.add_loss(loss->y_true, vertex_loss_weights(loss->kind, loss->y_true));
    return solve_brute_force(tables);
}

}  // namespace probsub
