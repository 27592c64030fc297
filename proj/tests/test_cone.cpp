#include "doctest.h"

#include <cmath>
#include <random>

#include "probsub/cone.hpp"

using namespace probsub;

namespace {

// Exact 2D membership from angles, independent of the NNLS path.
bool in_cone_2d(const std::vector<std::vector<double>>& gens, const std::vector<double>& x) {
    double lo = 10.0, hi = -10.0;
    for (const auto& g : gens) {
        const double a = std::atan2(g[1], g[0]);
        lo = std::min(lo, a);
        hi = std::max(hi, a);
    }
    const double t = std::atan2(x[1], x[0]);
    return t >= lo && t <= hi;
}

}  // namespace

TEST_CASE("NNLS recovers a nonnegative combination") {
    const std::vector<std::vector<double>> cols{{1, 0, 0}, {0, 1, 0}, {1, 1, 1}};
    const auto x = nnls(cols, {2, 3, 1});
    CHECK(x[0] == doctest::Approx(1.0));
    CHECK(x[1] == doctest::Approx(2.0));
    CHECK(x[2] == doctest::Approx(1.0));
}

TEST_CASE("NNLS clips to the nonnegative orthant") {
    const auto x = nnls({{1, 0}, {0, 1}}, {-1, 2});
    CHECK(x[0] == 0.0);
    CHECK(x[1] == doctest::Approx(2.0));
}

TEST_CASE("cone membership basics") {
    const std::vector<std::vector<double>> gens{{1, 0.2}, {0.3, 1}};
    CHECK(in_cone(gens, gens[0]));
    CHECK(in_cone(gens, {1.3, 1.2}));
    CHECK(in_cone(gens, {0, 0}));
    CHECK_FALSE(in_cone(gens, {1, 0}));
    CHECK_FALSE(in_cone(gens, {0, 1}));
    CHECK_FALSE(in_cone({}, {1, 1}));
}

TEST_CASE("cone membership agrees with the angular test in 2D") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<std::vector<double>> gens(1 + rng() % 6);
        for (auto& g : gens) g = {u(rng), u(rng)};
        const std::vector<double> x{u(rng), u(rng)};
        CHECK(in_cone(gens, x) == in_cone_2d(gens, x));
    }
}

TEST_CASE("cone membership in higher dimension matches a known cone") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    // generators: the coordinate axes of the first three dimensions in R^4
    const std::vector<std::vector<double>> gens{{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}};
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> x{u(rng), u(rng), u(rng), 0.0};
        CHECK(in_cone(gens, x));
        x[3] = 0.01 + u(rng);
        CHECK_FALSE(in_cone(gens, x));
    }
}

TEST_CASE("2D outside fraction matches the order-statistics value") {
    ConeConfig c;
    c.dim = 2;
    c.ns = {2, 5, 10};
    c.n_test = 100;
    c.trials = 400;
    c.seed = 7;
    const auto r = cone_experiment(c);
    for (const auto& row : r.rows) {
        CHECK(std::abs(row.mean_outside - analytic_outside_2d(row.n)) <= 3.0 * row.standard_error);
    }
    for (const auto& s : r.monotone) {
        CHECK(s.increases == 0);
        CHECK(s.p_value < 0.01);
    }
}

TEST_CASE("cone experiment is reproducible and degenerate rays stay inside") {
    ConeConfig c;
    c.dim = 3;
    c.ns = {3, 6};
    c.n_test = 20;
    c.trials = 10;
    const auto a = cone_experiment(c);
    const auto b = cone_experiment(c);
    CHECK(a.rows[0].per_trial == b.rows[0].per_trial);
    CHECK(a.rows[1].per_trial == b.rows[1].per_trial);
    c.distribution = ConeDistribution::Ray;
    for (const auto& row : cone_experiment(c).rows) CHECK(row.mean_outside == 0.0);
    c.dim = 1;
    CHECK_THROWS_AS(cone_experiment(c), Error);
}

TEST_CASE("analytic 2D values") {
    CHECK(analytic_outside_2d(1) == 1.0);
    CHECK(analytic_outside_2d(2) == doctest::Approx(2.0 / 3.0));
    CHECK(analytic_outside_2d(9) == doctest::Approx(0.2));
}
