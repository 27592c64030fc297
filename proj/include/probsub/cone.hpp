#pragma once

#include <cstdint>
#include <vector>

#include "probsub/io.hpp"

namespace probsub {

/// Nonnegative least squares min |A x - b| s.t. x >= 0 (Lawson-Hanson).
/// `columns` holds the columns of A.
std::vector<double> nnls(const std::vector<std::vector<double>>& columns, const std::vector<double>& b);

/// True when x is a nonnegative combination of the generators, up to a
/// residual of tol |x|.
bool in_cone(const std::vector<std::vector<double>>& generators, const std::vector<double>& x, double tol = 1e-9);

enum class ConeDistribution {
    UniformCube,  // uniform on [0, 1]^d
    Ray,          // every point a positive multiple of (1, ..., 1)
};

struct ConeConfig {
    int dim = 2;
    std::vector<int> ns{10, 30, 100, 300};
    int n_test = 100;
    int trials = 200;
    std::uint64_t seed = 1;
    ConeDistribution distribution = ConeDistribution::UniformCube;
};

struct ConeRow {
    int n = 0;
    double mean_outside = 0.0;
    double standard_error = 0.0;
    std::vector<double> per_trial;
};

/// Paired comparison of consecutive n: a trial counts as a decrease when the
/// larger training set leaves fewer test points outside.
struct SignTest {
    int n_small = 0, n_large = 0;
    std::size_t decreases = 0, increases = 0, ties = 0;
    double p_value = 1.0;  // one-sided, P(at least `decreases` of the untied trials | fair coin)
};

struct ConeResult {
    std::vector<ConeRow> rows;
    std::vector<SignTest> monotone;
};

/// Each trial draws max(ns) training points and n_test test points; the
/// training set for n is the first n draws, so the comparison across n is
/// paired. Trials are independent and seeded from (seed, trial index).
ConeResult cone_experiment(const ConeConfig& config);

/// Outside probability for uniform points in the unit square: the cone is
/// the angular interval between the extreme training angles, and by order
/// statistics a fresh angle falls outside it with probability 2 / (n + 1).
double analytic_outside_2d(int n);

Table cone_table(const ConeResult& result, int dim);

}  // namespace probsub
