#include "probsub/generators.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace probsub {

std::vector<GraphInstance> gen_prop1() {
    auto sample = [](std::string id, double s, Label truth) {
        Edge e{0, 1, {std::max(s, 0.0), std::max(-s, 0.0)}};
        return GraphInstance(std::move(id), 2, 1, 2, {{1.0}, {1.0}}, {std::move(e)}, Labeling{truth, truth});
    };
    return {sample("prop1-0", -1.0, 0), sample("prop1-1", 1.0, 1)};
}

namespace {

Labeling smooth_labels(std::mt19937_64& rng, int side, int classes) {
    std::uniform_real_distribution<double> pos(0.0, double(side));
    std::uniform_real_distribution<double> amp(0.5, 1.5);
    const double width = std::max(1.0, side / 3.0);
    const std::size_t n = std::size_t(side) * std::size_t(side);
    for (int attempt = 0;; ++attempt) {
        std::vector<double> field(n * std::size_t(classes), 0.0);
        for (int c = 0; c < classes; ++c)
            for (int bump = 0; bump < 3; ++bump) {
                const double cx = pos(rng), cy = pos(rng), a = amp(rng);
                for (int r = 0; r < side; ++r)
                    for (int q = 0; q < side; ++q) {
                        const double d2 = (r - cy) * (r - cy) + (q - cx) * (q - cx);
                        field[std::size_t(r * side + q) * std::size_t(classes) + std::size_t(c)] +=
                            a * std::exp(-d2 / (2.0 * width * width));
                    }
            }
        Labeling y(n);
        std::vector<int> present(std::size_t(classes), 0);
        for (std::size_t k = 0; k < n; ++k) {
            const auto first = field.begin() + std::ptrdiff_t(k * std::size_t(classes));
            y[k] = int(std::max_element(first, first + classes) - first);
            present[std::size_t(y[k])] = 1;
        }
        // a single-class mask says nothing about boundaries; redraw a few times
        if (std::count(present.begin(), present.end(), 1) > 1 || attempt >= 20) return y;
    }
}

GraphInstance grid_instance(std::mt19937_64& rng, const GridConfig& cfg, std::string id) {
    const int side = cfg.side, L = cfg.classes;
    std::normal_distribution<double> normal(0.0, 1.0);
    const Labeling y = smooth_labels(rng, side, L);
    const std::size_t n = y.size();

    std::vector<std::vector<double>> unary(n, std::vector<double>(std::size_t(L) + 1));
    for (std::size_t k = 0; k < n; ++k) {
        for (int c = 0; c < L; ++c)
            unary[k][std::size_t(c)] = std::max(0.0, (y[k] == c ? 1.0 : 0.0) + cfg.noise * normal(rng));
        unary[k][std::size_t(L)] = 1.0;
    }

    std::vector<Edge> edges;
    auto connect = [&](int k, int l) {
        const auto& a = unary[std::size_t(k)];
        const auto& b = unary[std::size_t(l)];
        std::vector<double> f;
        for (int c = 0; c < L; ++c) f.push_back(std::abs(a[std::size_t(c)] - b[std::size_t(c)]));
        for (int c = 0; c < L; ++c) f.push_back(std::min(a[std::size_t(c)], b[std::size_t(c)]));
        const double same = y[std::size_t(k)] == y[std::size_t(l)] ? 1.0 : 0.0;
        f.push_back(std::max(0.0, same + cfg.noise * normal(rng)));
        f.push_back(1.0);
        edges.push_back({k, l, std::move(f)});
    };
    for (int r = 0; r < side; ++r)
        for (int q = 0; q < side; ++q) {
            const int k = r * side + q;
            if (q + 1 < side) connect(k, k + 1);
            if (r + 1 < side) connect(k, k + side);
        }
    return GraphInstance(std::move(id), L, L + 1, 2 * L + 2, std::move(unary), std::move(edges), y);
}

std::string numbered(const char* prefix, int i) {
    std::string digits = std::to_string(i);
    return prefix + std::string(digits.size() < 3 ? 3 - digits.size() : 0, '0') + digits;
}

}  // namespace

Dataset gen_grid_segmentation(const GridConfig& config) {
    if (config.side < 2) throw Error("grid side must be at least 2");
    if (config.classes < 2) throw Error("grid needs at least 2 classes");
    if (config.noise < 0.0) throw Error("grid noise must be nonnegative");
    std::mt19937_64 rng(config.seed);
    Dataset d;
    for (int i = 0; i < config.train_count; ++i) d.train.push_back(grid_instance(rng, config, numbered("grid-train-", i)));
    for (int i = 0; i < config.test_count; ++i) d.test.push_back(grid_instance(rng, config, numbered("grid-test-", i)));
    return d;
}

}  // namespace probsub
