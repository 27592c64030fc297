// Runs every acceptance criterion and prints one PASS/FAIL line for each.
// The exit status is nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "probsub/cone.hpp"
#include "probsub/constraints.hpp"
#include "probsub/generators.hpp"
#include "probsub/multilabel.hpp"
#include "probsub/trainer.hpp"

using namespace probsub;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

const std::vector<ConstraintRegime> kChain{ConstraintRegime::C0, ConstraintRegime::C1, ConstraintRegime::C2,
                                           ConstraintRegime::C3, ConstraintRegime::C4};

TrainConfig config_for(ConstraintRegime regime, double C, double tol) {
    TrainConfig c;
    c.regime = regime;
    c.C = C;
    c.relative_gap_tol = tol;
    return c;
}

Dataset grid(std::uint64_t seed, int side, int train_count, int test_count = 2) {
    GridConfig g;
    g.seed = seed;
    g.side = side;
    g.train_count = train_count;
    g.test_count = test_count;
    return gen_grid_segmentation(g);
}

double hamming_accuracy(const WeightVector& w, const std::vector<GraphInstance>& data) {
    return evaluate(w, data, {Metric::Hamming}).mean[0];
}

// Exhaustive maximum of the joint score, written against psi directly.
double enumerate_best_score(const WeightVector& w, const GraphInstance& x) {
    const int n = x.vertex_count();
    double best = -std::numeric_limits<double>::infinity();
    Labeling y(static_cast<std::size_t>(n));
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        for (int k = 0; k < n; ++k) y[std::size_t(k)] = int(mask >> k & 1u);
        const auto psi = joint_feature(x, y);
        double s = 0.0;
        for (std::size_t q = 0; q < psi.size(); ++q) s += psi[q] * w.values()[q];
        best = std::max(best, s);
    }
    return best;
}

Outcome inference_exactness() {
    std::mt19937_64 rng(101);
    std::size_t mismatches = 0, oracle_gaps = 0;
    const int instances = 1000;
    for (int t = 0; t < instances; ++t) {
        const int n = 1 + int(rng() % 10);
        const auto x = testing::random_instance(rng, n, 2, 1 + int(rng() % 3), 1 + int(rng() % 3), 0.4, false);
        const auto w = testing::random_sign_feasible_weights(rng, x.shape(), 0.5 + double(rng() % 4));
        const auto fast = map_binary(w, x);
        const auto slow = brute_force_map(w, x);
        if (fast.objective != slow.objective || fast.truncated_edge_count != 0) ++mismatches;
        const double oracle = enumerate_best_score(w, x);
        if (std::abs(slow.objective - oracle) > 1e-9 * (1.0 + std::abs(oracle))) ++oracle_gaps;
    }
    std::ostringstream d;
    d << instances << " instances, " << mismatches << " graph-cut mismatches, " << oracle_gaps
      << " disagreements with the psi enumeration";
    return {mismatches == 0 && oracle_gaps == 0, d.str()};
}

Outcome prop1_reproduction() {
    const auto data = gen_prop1();
    std::ostringstream d;
    bool ok = true;
    for (auto regime : {ConstraintRegime::C0, ConstraintRegime::C1, ConstraintRegime::C2}) {
        const auto r = train(data, config_for(regime, 10.0, 1e-8));
        const double error = 1.0 - hamming_accuracy(r.w, data);
        d << to_string(regime) << " error " << format_double(error) << "; ";
        ok = ok && (regime == ConstraintRegime::C2 ? error == 0.0 : error > 0.0);
    }
    std::string text = d.str();
    return {ok, text.substr(0, text.size() - 2)};
}

Outcome nesting() {
    std::size_t objective_breaks = 0, accuracy_breaks = 0;
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto data = grid(200 + seed, 6, 5).train;
        std::vector<double> objective, accuracy;
        for (auto regime : kChain) {
            const auto r = train(data, config_for(regime, 10.0, 1e-8));
            objective.push_back(r.trace.primal_objective);
            accuracy.push_back(hamming_accuracy(r.w, data));
        }
        for (std::size_t k = 1; k < kChain.size(); ++k) {
            const double excess = (objective[k] - objective[k - 1]) / std::max(1.0, objective[k - 1]);
            worst = std::max(worst, excess);
            if (excess > 1e-6) ++objective_breaks;
            if (accuracy[k] < accuracy[k - 1] - 1e-12) ++accuracy_breaks;
        }
    }
    std::ostringstream d;
    d << "10 grids, " << objective_breaks << " objective inversions (largest relative step up "
      << format_double(worst) << "), " << accuracy_breaks << " accuracy inversions";
    return {objective_breaks == 0 && accuracy_breaks == 0, d.str()};
}

double min_edge_margin(const WeightVector& w, const std::vector<GraphInstance>& data) {
    double lowest = std::numeric_limits<double>::infinity();
    const int L = w.shape().label_count;
    for (const auto& x : data)
        for (const Edge& e : x.edges())
            for (Label a = 0; a < L; ++a)
                for (Label b = a + 1; b < L; ++b) lowest = std::min(lowest, submodularity_margin(w, e.feature, a, b));
    return lowest;
}

Outcome training_submodularity() {
    double lowest = std::numeric_limits<double>::infinity();
    int runs = 0;
    std::vector<std::vector<GraphInstance>> sets{gen_prop1()};
    for (std::uint64_t seed = 1; seed <= 4; ++seed) sets.push_back(grid(300 + seed, 6, 5).train);
    {
        GridConfig g;
        g.seed = 305;
        g.side = 5;
        g.classes = 3;
        g.train_count = 4;
        sets.push_back(gen_grid_segmentation(g).train);
    }
    for (const auto& data : sets)
        for (auto regime : {ConstraintRegime::C1, ConstraintRegime::C2, ConstraintRegime::C3, ConstraintRegime::C4}) {
            const auto r = train(data, config_for(regime, 10.0, 1e-3));
            lowest = std::min(lowest, min_edge_margin(r.w, data));
            ++runs;
        }
    std::ostringstream d;
    d << runs << " runs, lowest training-edge margin " << format_double(lowest);
    return {lowest >= -1e-7, d.str()};
}

Outcome heldout_truncation() {
    double sum = 0.0, worst = 0.0;
    for (std::uint64_t seed = 100; seed < 120; ++seed) {
        GridConfig g;
        g.seed = seed;
        const auto d = gen_grid_segmentation(g);
        const auto r = train(d.train, config_for(ConstraintRegime::C4, 10.0, 1e-3));
        const double f = evaluate(r.w, d.test, {Metric::Hamming}).mean_truncated_fraction;
        sum += f;
        worst = std::max(worst, f);
    }
    const double mean = sum / 20.0;
    std::ostringstream d;
    d << "20 held-out splits, worst " << format_double(worst) << ", mean " << format_double(mean);
    return {worst <= 0.1 && mean <= 0.02, d.str()};
}

Outcome delayed_equals_full() {
    const auto data = grid(400, 8, 10).train;
    auto delayed = config_for(ConstraintRegime::C4, 10.0, 1e-6);
    auto full = delayed;
    full.schedule.delayed = false;
    const auto a = train(data, delayed);
    const auto b = train(data, full);
    double diff = 0.0;
    for (std::size_t k = 0; k < a.w.size(); ++k) diff = std::max(diff, std::abs(a.w.values()[k] - b.w.values()[k]));
    const double ratio = double(b.trace.margins_refreshed) / double(std::max<std::size_t>(1, a.trace.margins_refreshed));
    std::ostringstream d;
    d << "max weight difference " << format_double(diff) << ", margins delayed " << a.trace.margins_refreshed
      << " full " << b.trace.margins_refreshed << " (ratio " << format_double(ratio) << ")";
    return {diff <= 1e-6 && ratio >= 1.2, d.str()};
}

// Combination rows written out independently of the library.
std::vector<std::vector<double>> combinations(BankFamily family, int L) {
    const auto Q = static_cast<std::size_t>(L * L);
    std::vector<std::vector<double>> B;
    auto at = [L](int a, int b) { return std::size_t(a * L + b); };
    if (family == BankFamily::Submodular) {
        for (int a = 0; a < L; ++a)
            for (int b = a + 1; b < L; ++b) {
                std::vector<double> row(Q, 0.0);
                row[at(a, a)] = row[at(b, b)] = 1.0;
                row[at(a, b)] = row[at(b, a)] = -1.0;
                B.push_back(row);
            }
    } else {
        for (int a = 0; a < L; ++a) {
            std::vector<double> row(Q, 0.0);
            row[at(a, a)] = 1.0;
            B.push_back(row);
        }
        for (int a = 0; a < L; ++a)
            for (int b = 0; b < L; ++b)
                if (a != b) {
                    std::vector<double> row(Q, 0.0);
                    row[at(a, b)] = -1.0;
                    B.push_back(row);
                }
    }
    return B;
}

Outcome tensor_factorization() {
    std::mt19937_64 rng(707);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst = 0.0;
    std::size_t entries = 0;
    bool shapes_ok = true;
    for (int trial = 0; trial < 40; ++trial) {
        const int L = 2 + trial % 3;
        const int dp = 1 + int(rng() % 5);
        const std::size_t rows = trial % 4 == 0 ? 200 : 1 + rng() % 200;
        const auto family = trial % 2 == 0 ? BankFamily::Submodular : BankFamily::SignPattern;
        ConstraintBank bank(family, L, dp);
        std::vector<std::vector<double>> P;
        for (std::size_t i = 0; i < rows; ++i) {
            std::vector<double> p(static_cast<std::size_t>(dp));
            for (double& v : p) v = unit(rng);
            bank.add_row(p, {0, "k", int(i)});
            P.push_back(p);
        }
        std::vector<double> wp(bank.pairwise_size());
        for (double& v : wp) v = normal(rng);
        const auto B = combinations(family, L);
        if (bank.pairs() != B.size()) {
            shapes_ok = false;
            continue;
        }
        const auto V = compute_margins(bank, wp);
        const auto naive = testing::kronecker_margins(B, P, wp);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < B.size(); ++j) {
                worst = std::max(worst, std::abs(V[i * B.size() + j] - naive[j * rows + i]));
                ++entries;
            }
    }
    std::ostringstream d;
    d << entries << " entries over 40 banks (|L| 2..4, up to 200 rows), largest difference " << format_double(worst);
    return {shapes_ok && worst <= 1e-12, d.str()};
}

Outcome bound_safety() {
    std::size_t checks = 0, failures = 0;
    int runs = 0;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        for (auto regime : {ConstraintRegime::C3, ConstraintRegime::C4}) {
            auto c = config_for(regime, 10.0, 1e-6);
            c.audit_samples = 100;
            c.seed = seed;
            const auto r = train(grid(500 + seed, 7, 6).train, c);
            checks += r.trace.audit_checks;
            failures += r.trace.audit_failures;
            ++runs;
        }
    }
    std::ostringstream d;
    d << runs << " training runs, " << checks << " audited entries, " << failures << " bounds above the exact margin";
    return {checks > 0 && failures == 0, d.str()};
}

Outcome cone() {
    ConeConfig c;
    c.dim = 2;
    c.ns = {2, 5, 10};
    c.n_test = 100;
    c.trials = 200;
    c.seed = 9;
    const auto r = cone_experiment(c);
    bool ok = true;
    std::ostringstream d;
    for (const auto& row : r.rows) {
        const double z = std::abs(row.mean_outside - analytic_outside_2d(row.n)) / row.standard_error;
        d << "n=" << row.n << " z " << format_double(std::round(z * 100) / 100) << "; ";
        ok = ok && z <= 3.0;
    }
    for (const auto& s : r.monotone) {
        d << s.n_small << "->" << s.n_large << " " << s.increases << " increases p " << format_double(s.p_value) << "; ";
        ok = ok && s.p_value < 0.01;
    }
    std::string text = d.str();
    return {ok, text.substr(0, text.size() - 2)};
}

Outcome qp() {
    std::mt19937_64 rng(1010);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const std::size_t dim = 2 + rng() % 4;
        const auto p = testing::random_qp(rng, dim, 1 + rng() % 4, rng() % 3, rng() % 4);
        const auto s = solve(p);
        const double oracle = testing::brute_force_qp_objective(p, 10);
        worst = std::max(worst, std::abs(s.objective - oracle) / std::max(1.0, std::abs(oracle)));
    }
    std::ostringstream d;
    d << "100 problems, largest relative gap to the enumeration oracle " << format_double(worst);
    return {worst <= 1e-6, d.str()};
}

Outcome multilabel() {
    bool dims = true;
    std::mt19937_64 rng(1111);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int C : {2, 3, 6}) {
        const int d = 4, pca = 3;
        Matrix rows(10, std::vector<double>(static_cast<std::size_t>(d)));
        for (auto& r : rows)
            for (double& v : r) v = normal(rng);
        const auto task = make_task(rows, C, pca);
        const auto x = reduce(task, "s", rows.front());
        const int e = 2 * pca;
        dims = dims && x.shape().unary_size() == std::size_t(2 * C * d) &&
               x.shape().pairwise_size() == std::size_t(2 * C * (C - 1) * e);
    }

    int wins_c2 = 0, wins_c4 = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        MultiLabelConfig m;
        m.seed = seed;
        const auto data = gen_multilabel(m);
        double acc[3];
        int k = 0;
        for (auto regime : {ConstraintRegime::Unconstrained, ConstraintRegime::C2, ConstraintRegime::C4}) {
            const auto r = train(data.reduced.train, config_for(regime, 1.0, 1e-3));
            acc[k++] = hamming_accuracy(r.w, data.reduced.test);
        }
        wins_c2 += acc[1] > acc[0];
        wins_c4 += acc[2] > acc[0];
    }
    std::ostringstream d;
    d << "dimension formulas " << (dims ? "hold" : "violated") << "; seeds where test Hamming accuracy beats the "
      << "unconstrained baseline: c2 " << wins_c2 << "/10, c4 " << wins_c4 << "/10";
    return {dims && wins_c2 >= 8 && wins_c4 >= 8, d.str()};
}

Outcome pretraining() {
    double worst = 0.0;
    std::vector<std::vector<GraphInstance>> suite{gen_prop1()};
    for (std::uint64_t seed = 1; seed <= 3; ++seed) suite.push_back(grid(600 + seed, 6, 5).train);
    for (const auto& data : suite) {
        auto single = config_for(ConstraintRegime::C4, 10.0, 1e-8);
        auto two = single;
        two.schedule.pretrain = true;
        const auto a = train(data, single);
        const auto b = train(data, two);
        double n2 = 0.0;
        for (std::size_t k = 0; k < a.w.size(); ++k) n2 += std::pow(a.w.values()[k] - b.w.values()[k], 2);
        worst = std::max(worst, std::sqrt(n2));
    }
    std::ostringstream d;
    d << suite.size() << " datasets, largest weight distance " << format_double(worst);
    return {worst <= 1e-4, d.str()};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"inference exactness", inference_exactness},
        {"two-sample construction", prop1_reproduction},
        {"constraint-set nesting", nesting},
        {"training-set submodularity", training_submodularity},
        {"held-out truncation", heldout_truncation},
        {"delayed equals full", delayed_equals_full},
        {"tensor factorization", tensor_factorization},
        {"bound safety", bound_safety},
        {"cone experiment", cone},
        {"QP correctness", qp},
        {"multi-label reduction", multilabel},
        {"pretraining invariance", pretraining},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s %2zu %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    o.detail.c_str(), secs);
        std::fflush(stdout);
        failed += !o.pass;
    }
    std::printf("%d of %zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
