#pragma once

#include <cstdint>
#include <vector>

#include "probsub/model.hpp"

namespace probsub {

struct Dataset {
    std::vector<GraphInstance> train;
    std::vector<GraphInstance> test;
};

/// The two-sample construction on which only a same-label-aware model is
/// error free. A signed scalar edge feature s is encoded as
/// (max(s, 0), max(-s, 0)); every vertex carries a constant unary feature 1.
/// Sample 0: s = -1, truth (0, 0). Sample 1: s = +1, truth (1, 1).
std::vector<GraphInstance> gen_prop1();

struct GridConfig {
    int side = 8;
    int classes = 2;
    double noise = 0.5;
    std::uint64_t seed = 1;
    int train_count = 10;
    int test_count = 10;
};

/// 4-connected side x side grids. Truth is the argmax of smoothed random
/// fields (a smooth mask for two classes). Unary features: one-hot class
/// prototype plus Gaussian noise, clipped at 0, then a bias 1, so
/// d_u = classes + 1. Pairwise features, all nonnegative:
///   |u_k - u_l| per class channel          (classes entries)
///   min(u_k[c], u_l[c]) per class          (classes entries)
///   a region channel, about 1 inside regions and 0 across boundaries
///   a constant 1
/// so d_p = 2 classes + 2.
Dataset gen_grid_segmentation(const GridConfig& config);

}  // namespace probsub
