#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "probsub/constraints.hpp"
#include "probsub/inference.hpp"
#include "probsub/losses.hpp"
#include "probsub/model.hpp"
#include "probsub/qp.hpp"

namespace probsub {

struct ScheduleConfig {
    bool pretrain = false;
    std::size_t minibatch_size = 1;  // hard constraints admitted per QP re-solve
    bool delayed = true;
};

struct TrainConfig {
    ConstraintRegime regime = ConstraintRegime::C4;
    double C = 1.0;
    double relative_gap_tol = 1e-3;
    std::size_t max_outer_iterations = 5000;
    LossKind loss = LossKind::Hamming;
    ScheduleConfig schedule;
    std::uint64_t seed = 0;
    QPOptions qp;
    /// A bank entry counts as violated when its margin is below -hard_tolerance.
    double hard_tolerance = 1e-9;
    /// Random bound audits per constraint search (delayed schedule only).
    std::size_t audit_samples = 0;
};

struct TraceRow {
    std::size_t iteration = 0;
    double objective = 0.0;  // 1/2 |w|^2 + C xi of the working-set QP
    double xi = 0.0;
    double violation = 0.0;  // b - g^T w of the most violating labelings
    std::size_t hard_added = 0;
    std::size_t margins_refreshed = 0;
    double seconds = 0.0;  // since the start of training
};

enum class TrainStatus { Converged, IterationCapped };

struct TrainTrace {
    std::vector<TraceRow> rows;
    std::vector<EfficiencyRecord> efficiency;
    TrainStatus status = TrainStatus::IterationCapped;
    std::size_t iterations = 0;  // planes added
    /// 1/2 |w|^2 + C max(0, violation) at the returned w.
    double primal_objective = 0.0;
    double final_violation = 0.0;
    double final_xi = 0.0;
    std::size_t hard_constraints = 0;
    /// Hard constraints whose margin is within 10 eps_feas of zero at the end.
    std::size_t active_hard_constraints = 0;
    std::size_t margins_refreshed = 0;
    std::size_t audit_checks = 0;
    std::size_t audit_failures = 0;
    double seconds = 0.0;
};

struct TrainResult {
    WeightVector w;
    TrainTrace trace;
};

using ProgressCallback = std::function<void(const TraceRow&)>;

/// 1-slack cutting-plane SSVM. `transductive_extra` contributes edge features
/// to the constraint bank and is only accepted by the transductive regime.
TrainResult train(const std::vector<GraphInstance>& data, const TrainConfig& config,
                  const std::vector<GraphInstance>& transductive_extra = {},
                  const ProgressCallback& progress = {});

InferenceReport predict(const WeightVector& w, const GraphInstance& x);

enum class Metric { Hamming, ClassAverage, IoU, Voc };

Metric parse_metric(std::string_view name);  // hamming, classavg, iou, voc
std::vector<Metric> parse_metrics(std::string_view comma_separated);
std::string to_string(Metric metric);

struct EvaluationReport {
    std::vector<Metric> metrics;
    std::vector<std::string> ids;
    std::vector<std::vector<double>> values;  // [instance][metric]
    std::vector<double> truncated_fraction;   // per instance
    std::vector<double> mean;                 // per metric
    double mean_truncated_fraction = 0.0;
};

/// Accuracies are 1 - loss: hamming uses the normalized Hamming loss and
/// classavg the per-class average loss; iou scores label 1.
EvaluationReport evaluate(const WeightVector& w, const std::vector<GraphInstance>& instances,
                          const std::vector<Metric>& metrics);

}  // namespace probsub
