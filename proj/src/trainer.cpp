#include "probsub/trainer.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <tuple>

#include "probsub/parallel.hpp"

namespace probsub {

namespace {

using Clock = std::chrono::steady_clock;

std::vector<double> pairwise_copy(const std::vector<double>& w, const ModelShape& shape) {
    return {w.begin() + std::ptrdiff_t(shape.unary_size()), w.end()};
}

double norm_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    return std::sqrt(s);
}

struct Plane {
    std::vector<double> g;
    double b = 0.0;
};

// Averaged 1-slack plane from the loss-augmented labelings of every example.
Plane separation_plane(const std::vector<GraphInstance>& data, const WeightVector& w, LossKind kind) {
    const std::size_t n = data.size();
    std::vector<Labeling> found(n);
    parallel_for(n, [&](std::size_t i) {
        found[i] = loss_augmented_map(w, data[i], *data[i].ground_truth(), kind).labeling;
    });
    Plane plane{std::vector<double>(w.size(), 0.0), 0.0};
    for (std::size_t i = 0; i < n; ++i) {
        const Labeling& y = *data[i].ground_truth();
        const auto truth = joint_feature(data[i], y);
        const auto other = joint_feature(data[i], found[i]);
        for (std::size_t k = 0; k < plane.g.size(); ++k) plane.g[k] += truth[k] - other[k];
        plane.b += loss(kind, y, found[i]);
    }
    for (double& v : plane.g) v /= double(n);
    plane.b /= double(n);
    return plane;
}

void validate(const std::vector<GraphInstance>& data, const TrainConfig& config,
              const std::vector<GraphInstance>& extra) {
    if (data.empty()) throw Error("training needs at least one instance");
    if (!(config.C > 0.0)) throw Error("C must be positive");
    if (!(config.relative_gap_tol > 0.0 && config.relative_gap_tol < 1.0))
        throw Error("relative gap tolerance must lie in (0, 1)");
    if (config.max_outer_iterations < 1) throw Error("iteration cap must be positive");
    if (config.schedule.minibatch_size < 1) throw Error("minibatch size must be at least 1");
    if (!extra.empty() && config.regime != ConstraintRegime::C4Transductive)
        throw Error("extra transductive instances are only accepted by regime c4t");
    const ModelShape shape = data.front().shape();
    for (const auto& x : data) {
        if (!(x.shape() == shape))
            throw DimensionError("training instance '" + x.id() + "' differs in shape from '" + data.front().id() + "'");
        if (!x.has_ground_truth()) throw Error("training instance '" + x.id() + "' has no ground truth");
    }
    for (const auto& x : extra)
        if (!(x.shape() == shape))
            throw DimensionError("transductive instance '" + x.id() + "' differs in shape from the training data");
}

class Trainer {
public:
    Trainer(const std::vector<GraphInstance>& data, const TrainConfig& config,
            const std::vector<GraphInstance>& extra)
        : data_(data),
          config_(config),
          shape_(data.front().shape()),
          qp_(shape_.size(), config.C, regime_sign_constraints(config.regime, shape_)),
          w_(shape_.size(), 0.0),
          audit_rng_(config.seed) {
        if (auto family = bank_family(config.regime)) {
            std::vector<GraphInstance> scope = data;
            scope.insert(scope.end(), extra.begin(), extra.end());
            bank_.emplace(build_bank(scope, shape_.label_count, *family));
        }
    }

    TrainResult run(const ProgressCallback& progress) {
        const auto start = Clock::now();
        bool hard_enabled = !(config_.schedule.pretrain && bank_);
        std::size_t added_this_round = 0, refreshed_this_round = 0;

        for (std::size_t iteration = 0;; ++iteration) {
            const WeightVector w(shape_, w_);
            const Plane plane = separation_plane(data_, w, config_.loss);
            const double violation = plane.b - dot(plane.g, w_);
            const double objective = 0.5 * dot(w_, w_) + config_.C * xi_;

            TraceRow row{iteration, objective, xi_, violation, added_this_round, refreshed_this_round,
                         std::chrono::duration<double>(Clock::now() - start).count()};
            trace_.rows.push_back(row);
            if (progress) progress(row);
            trace_.final_violation = violation;

            if (violation <= xi_ + config_.relative_gap_tol * objective) {
                if (hard_enabled) {
                    trace_.status = TrainStatus::Converged;
                    break;
                }
                // second stage: enforce the bank, then keep cutting
                hard_enabled = true;
                std::tie(added_this_round, refreshed_this_round) = update(iteration, true);
                continue;
            }
            if (trace_.iterations >= config_.max_outer_iterations) {
                trace_.status = TrainStatus::IterationCapped;
                break;
            }
            qp_.add_margin(plane.g, plane.b);
            ++trace_.iterations;
            std::tie(added_this_round, refreshed_this_round) = update(iteration, hard_enabled);
        }

        trace_.final_xi = xi_;
        trace_.primal_objective = 0.5 * dot(w_, w_) + config_.C * std::max(0.0, trace_.final_violation);
        trace_.hard_constraints = qp_.hard_count();
        if (bank_) {
            const auto wp = pairwise_copy(w_, shape_);
            const double tight = 10.0 * config_.qp.eps_feas;
            for (std::size_t i = 0; i < bank_->rows(); ++i)
                for (std::size_t j = 0; j < bank_->pairs(); ++j)
                    if (bank_->is_added(i, j) && std::abs(bank_->margin(i, j, wp)) <= tight)
                        ++trace_.active_hard_constraints;
        }
        trace_.seconds = std::chrono::duration<double>(Clock::now() - start).count();
        return {WeightVector(shape_, w_), std::move(trace_)};
    }

private:
    // QP re-solves interleaved with hard-constraint generation; returns
    // (constraints added, exact margins computed).
    std::pair<std::size_t, std::size_t> update(std::size_t iteration, bool hard_enabled) {
        const std::vector<double> before = w_;
        std::size_t added = 0, refreshed = 0;
        const bool delayed = config_.schedule.delayed;
        while (true) {
            const std::vector<double> previous = w_;
            QPSolution sol;
            try {
                sol = qp_.solve(config_.qp);
            } catch (const QpError& e) {
                throw QpError("outer iteration " + std::to_string(iteration) + ": " + e.what(), e.best());
            }
            w_ = std::move(sol.w);
            xi_ = sol.xi;
            if (!bank_ || !hard_enabled) break;

            const auto wp = pairwise_copy(w_, shape_);
            std::vector<Violation> found;
            if (delayed) {
                delayed_update(*bank_, pairwise_copy(previous, shape_), wp);
                audit(wp);
                auto r = most_violated_delayed(*bank_, wp, config_.schedule.minibatch_size, -config_.hard_tolerance);
                refreshed += r.refreshed;
                found = std::move(r.violations);
                audit(wp);
            } else {
                found = most_violated(*bank_, wp, config_.schedule.minibatch_size, -config_.hard_tolerance);
                refreshed += bank_->rows() * bank_->pairs();
            }
            if (found.empty()) break;
            for (const Violation& v : found) {
                std::vector<double> h(shape_.size(), 0.0);
                std::copy(v.direction.begin(), v.direction.end(), h.begin() + std::ptrdiff_t(shape_.unary_size()));
                qp_.add_hard(h);
                bank_->mark_added(v.row, v.pair);
                ++added;
            }
        }
        trace_.margins_refreshed += refreshed;
        trace_.efficiency.push_back({iteration, refreshed, added, norm_diff(before, w_)});
        return {added, refreshed};
    }

    void audit(const std::vector<double>& wp) {
        if (config_.audit_samples == 0 || bank_->rows() == 0) return;
        std::uniform_int_distribution<std::size_t> row(0, bank_->rows() - 1), pair(0, bank_->pairs() - 1);
        for (std::size_t s = 0; s < config_.audit_samples; ++s) {
            const std::size_t i = row(audit_rng_), j = pair(audit_rng_);
            const double m = bank_->margin(i, j, wp);
            ++trace_.audit_checks;
            if (bank_->bound(i, j) > m + 1e-12 * (1.0 + std::abs(m))) ++trace_.audit_failures;
        }
    }

    const std::vector<GraphInstance>& data_;
    const TrainConfig& config_;
    ModelShape shape_;
    QpSolver qp_;
    std::optional<ConstraintBank> bank_;
    std::vector<double> w_;
    double xi_ = 0.0;
    TrainTrace trace_;
    std::mt19937_64 audit_rng_;
};

}  // namespace

TrainResult train(const std::vector<GraphInstance>& data, const TrainConfig& config,
                  const std::vector<GraphInstance>& transductive_extra, const ProgressCallback& progress) {
    validate(data, config, transductive_extra);
    Trainer trainer(data, config, transductive_extra);
    return trainer.run(progress);
}

InferenceReport predict(const WeightVector& w, const GraphInstance& x) { return map_inference(w, x); }

Metric parse_metric(std::string_view name) {
    if (name == "hamming") return Metric::Hamming;
    if (name == "classavg") return Metric::ClassAverage;
    if (name == "iou") return Metric::IoU;
    if (name == "voc") return Metric::Voc;
    throw Error("unknown metric '" + std::string(name) + "' (expected hamming, classavg, iou or voc)");
}

std::vector<Metric> parse_metrics(std::string_view list) {
    std::vector<Metric> out;
    std::size_t start = 0;
    while (start <= list.size()) {
        const std::size_t comma = std::min(list.find(',', start), list.size());
        out.push_back(parse_metric(list.substr(start, comma - start)));
        start = comma + 1;
    }
    return out;
}

std::string to_string(Metric metric) {
    switch (metric) {
        case Metric::Hamming: return "hamming";
        case Metric::ClassAverage: return "classavg";
        case Metric::IoU: return "iou";
        case Metric::Voc: return "voc";
    }
    return "?";
}

EvaluationReport evaluate(const WeightVector& w, const std::vector<GraphInstance>& instances,
                          const std::vector<Metric>& metrics) {
    EvaluationReport report;
    report.metrics = metrics;
    report.mean.assign(metrics.size(), 0.0);
    std::vector<InferenceReport> predictions(instances.size());
    parallel_for(instances.size(), [&](std::size_t i) { predictions[i] = predict(w, instances[i]); });
    for (std::size_t i = 0; i < instances.size(); ++i) {
        const GraphInstance& x = instances[i];
        if (!x.has_ground_truth()) throw Error("cannot evaluate instance '" + x.id() + "' without ground truth");
        const Labeling& truth = *x.ground_truth();
        const Labeling& y = predictions[i].labeling;
        std::vector<double> row;
        for (Metric m : metrics) {
            switch (m) {
                case Metric::Hamming: row.push_back(1.0 - loss(LossKind::Hamming, truth, y, true)); break;
                case Metric::ClassAverage: row.push_back(1.0 - loss(LossKind::PerClassAverage, truth, y)); break;
                case Metric::IoU: row.push_back(iou(truth, y, 1)); break;
                case Metric::Voc: row.push_back(voc_score(truth, y, x.shape().label_count)); break;
            }
        }
        for (std::size_t k = 0; k < row.size(); ++k) report.mean[k] += row[k];
        report.ids.push_back(x.id());
        report.values.push_back(std::move(row));
        report.truncated_fraction.push_back(predictions[i].truncated_fraction);
        report.mean_truncated_fraction += predictions[i].truncated_fraction;
    }
    if (!instances.empty()) {
        for (double& v : report.mean) v /= double(instances.size());
        report.mean_truncated_fraction /= double(instances.size());
    }
    return report;
}

}  // namespace probsub
