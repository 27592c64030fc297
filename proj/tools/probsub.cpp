#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>

#include "probsub/cone.hpp"
#include "probsub/generators.hpp"
#include "probsub/io.hpp"
#include "probsub/multilabel.hpp"
#include "probsub/trainer.hpp"

using namespace probsub;
namespace fs = std::filesystem;

namespace {

struct GenOptions {
    std::string kind;
    std::string out;
    int side = 8;
    double noise = 0.5;
    std::uint64_t seed = 1;
};

struct TrainOptions {
    std::string data, regime, loss = "hamming", model, trace, transductive;
    double C = 1.0, tol = 1e-3;
    std::size_t max_iter = 5000, minibatch = 1;
    bool delayed = false, full = false, pretrain = false;
};

struct PredictOptions {
    std::string model, data, out;
};

struct EvalOptions {
    std::string model, data, metrics, report;
};

struct ConeOptions {
    int dim = 2, ntest = 100, trials = 200;
    std::string ns = "10,30,100,300";
    std::uint64_t seed = 1;
    std::string report;
};

struct BenchOptions {
    std::string data, regime = "c4";
    double C = 1.0, tol = 1e-3;
};

std::string fmt(double v) { return format_double(v); }

void print_table(const Table& t) { std::cout << t.str(); }

int run_gen(const GenOptions& o, const CLI::App& cmd) {
    const fs::path out(o.out);
    if (o.kind == "prop1") {
        write_dataset(out, gen_prop1());
        std::cout << "wrote 2 instances to " << out.string() << "\n";
        return 0;
    }
    if (o.kind == "grid") {
        GridConfig g;
        g.side = o.side;
        g.noise = o.noise;
        g.seed = o.seed;
        const Dataset d = gen_grid_segmentation(g);
        write_dataset(out / "train", d.train);
        write_dataset(out / "test", d.test);
        std::cout << "wrote " << d.train.size() << " training and " << d.test.size() << " test grids to "
                  << out.string() << "\n";
        return 0;
    }
    MultiLabelConfig m;
    m.seed = o.seed;
    if (cmd.count("--noise")) m.flip_probability = o.noise;
    if (cmd.count("--side")) std::cerr << "note: --side does not apply to multilabel data\n";
    const MultiLabelData d = gen_multilabel(m);
    if (d.task.pca.warning) std::cerr << "warning: " << *d.task.pca.warning << "\n";
    write_dataset(out / "train", d.reduced.train);
    write_dataset(out / "test", d.reduced.test);
    std::cout << "wrote " << d.reduced.train.size() << " training and " << d.reduced.test.size()
              << " test samples to " << out.string() << "\n";
    return 0;
}

Table trace_table(const TrainTrace& trace) {
    Table t;
    t.header = {"iteration", "objective", "xi", "violation", "hard_added", "margins_refreshed", "seconds"};
    for (const TraceRow& r : trace.rows)
        t.add({std::to_string(r.iteration), fmt(r.objective), fmt(r.xi), fmt(r.violation),
               std::to_string(r.hard_added), std::to_string(r.margins_refreshed), fmt(r.seconds)});
    return t;
}

int run_train(const TrainOptions& o) {
    const auto data = read_dataset(dataset_part(o.data, "train"));
    std::vector<GraphInstance> extra;
    if (!o.transductive.empty()) extra = read_dataset(o.transductive);

    TrainConfig c;
    c.regime = parse_regime(o.regime);
    c.C = o.C;
    c.loss = parse_loss_kind(o.loss);
    c.relative_gap_tol = o.tol;
    c.max_outer_iterations = o.max_iter;
    c.schedule.delayed = !o.full;
    c.schedule.pretrain = o.pretrain;
    c.schedule.minibatch_size = o.minibatch;

    const TrainResult r = train(data, c, extra);
    write_model(o.model, {r.w, c.regime});
    if (!o.trace.empty()) write_file_atomic(o.trace, trace_table(r.trace).str());

    std::cout << "status " << (r.trace.status == TrainStatus::Converged ? "converged" : "iteration-capped")
              << "\niterations " << r.trace.iterations << "\nprimal_objective " << fmt(r.trace.primal_objective)
              << "\nhard_constraints " << r.trace.hard_constraints << "\nactive_hard_constraints "
              << r.trace.active_hard_constraints << "\nmargins_refreshed " << r.trace.margins_refreshed
              << "\nseconds " << fmt(r.trace.seconds) << "\n";
    if (r.trace.status != TrainStatus::Converged)
        std::cerr << "warning: stopped at the iteration cap before reaching the tolerance\n";
    return 0;
}

int run_predict(const PredictOptions& o) {
    const ModelFile model = read_model(o.model);
    const auto data = read_dataset(dataset_part(o.data, "test"));
    Table summary;
    summary.header = {"id", "objective", "truncated_edges", "truncated_fraction", "exact"};
    std::vector<GraphInstance> labeled;
    for (const auto& x : data) {
        const InferenceReport r = predict(model.w, x);
        labeled.push_back(x.with_ground_truth(r.labeling));
        summary.add({x.id(), fmt(r.objective), std::to_string(r.truncated_edge_count), fmt(r.truncated_fraction),
                     r.exact ? "1" : "0"});
    }
    write_dataset(o.out, labeled);
    write_file_atomic(fs::path(o.out) / "predictions.tsv", summary.str());
    std::cout << "wrote " << labeled.size() << " predictions to " << o.out << "\n";
    return 0;
}

int run_eval(const EvalOptions& o) {
    const ModelFile model = read_model(o.model);
    const auto data = read_dataset(dataset_part(o.data, "test"));
    const auto metrics = parse_metrics(o.metrics);
    const EvaluationReport report = evaluate(model.w, data, metrics);

    Table t;
    t.header = {"id"};
    for (Metric m : metrics) t.header.push_back(to_string(m));
    t.header.push_back("truncated_fraction");
    for (std::size_t i = 0; i < report.ids.size(); ++i) {
        std::vector<std::string> row{report.ids[i]};
        for (double v : report.values[i]) row.push_back(fmt(v));
        row.push_back(fmt(report.truncated_fraction[i]));
        t.add(std::move(row));
    }
    std::vector<std::string> mean{"mean"};
    for (double v : report.mean) mean.push_back(fmt(v));
    mean.push_back(fmt(report.mean_truncated_fraction));
    t.add(mean);
    if (!o.report.empty()) write_file_atomic(o.report, t.str());

    Table summary;
    summary.header = t.header;
    summary.add(mean);
    print_table(summary);
    return 0;
}

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t comma = std::min(text.find(',', start), text.size());
        const std::string item = text.substr(start, comma - start);
        std::size_t used = 0;
        int v = 0;
        try {
            v = std::stoi(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (item.empty() || used != item.size()) throw Error("'" + item + "' in '" + text + "' is not an integer");
        out.push_back(v);
        start = comma + 1;
    }
    return out;
}

int run_cone(const ConeOptions& o) {
    ConeConfig c;
    c.dim = o.dim;
    c.ns = parse_int_list(o.ns);
    c.n_test = o.ntest;
    c.trials = o.trials;
    c.seed = o.seed;
    const ConeResult r = cone_experiment(c);
    const Table t = cone_table(r, c.dim);
    print_table(t);
    for (const SignTest& s : r.monotone)
        std::cout << "sign test n=" << s.n_small << " vs n=" << s.n_large << ": " << s.decreases << " decreases, "
                  << s.increases << " increases, " << s.ties << " ties, p=" << fmt(s.p_value) << "\n";
    if (!o.report.empty()) write_file_atomic(o.report, t.str());
    return 0;
}

int run_bench(const BenchOptions& o) {
    const auto data = read_dataset(dataset_part(o.data, "train"));
    TrainConfig c;
    c.regime = parse_regime(o.regime);
    c.C = o.C;
    c.relative_gap_tol = o.tol;
    if (!bank_family(c.regime)) throw Error("regime " + o.regime + " generates no hard constraints to compare");

    Table t;
    t.header = {"mode", "margins_computed", "constraints_added", "outer_iterations", "seconds"};
    std::vector<TrainResult> results;
    for (bool delayed : {true, false}) {
        c.schedule.delayed = delayed;
        results.push_back(train(data, c));
        const TrainTrace& tr = results.back().trace;
        t.add({delayed ? "delayed" : "full", std::to_string(tr.margins_refreshed), std::to_string(tr.hard_constraints),
               std::to_string(tr.iterations), fmt(tr.seconds)});
    }
    print_table(t);
    double diff = 0.0;
    for (std::size_t k = 0; k < results[0].w.size(); ++k)
        diff = std::max(diff, std::abs(results[0].w.values()[k] - results[1].w.values()[k]));
    const double ratio = double(results[1].trace.margins_refreshed) /
                         double(std::max<std::size_t>(1, results[0].trace.margins_refreshed));
    std::cout << "full/delayed margin ratio " << fmt(ratio) << "\nmax weight difference " << fmt(diff) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pairwise CRF training with submodularity constraints"};
    app.require_subcommand(1);

    GenOptions gen;
    auto* g = app.add_subcommand("gen", "write a synthetic dataset");
    g->add_option("kind", gen.kind, "prop1, grid or multilabel")
        ->required()
        ->check(CLI::IsMember({"prop1", "grid", "multilabel"}));
    g->add_option("--out", gen.out, "output directory")->required();
    g->add_option("--side", gen.side, "grid side length")->check(CLI::Range(2, 1 << 12));
    g->add_option("--noise", gen.noise, "feature noise (grid) or training label flip rate (multilabel)")
        ->check(CLI::NonNegativeNumber);
    g->add_option("--seed", gen.seed, "random seed");

    TrainOptions tr;
    auto* t = app.add_subcommand("train", "train a model");
    t->add_option("--data", tr.data, "dataset directory (its train/ part when present)")->required();
    t->add_option("--regime", tr.regime, "constraint regime")
        ->required()
        ->check(CLI::IsMember({"c0", "c1", "c2", "c3", "c4", "c4t", "none"}));
    t->add_option("--C", tr.C, "regularization constant")->required();
    t->add_option("--loss", tr.loss, "training loss")->required()->check(CLI::IsMember({"hamming", "classavg"}));
    t->add_option("--tol", tr.tol, "relative gap tolerance")->default_val(1e-3);
    t->add_option("--max-iter", tr.max_iter, "outer iteration cap")->default_val(5000);
    auto* delayed = t->add_flag("--delayed", tr.delayed, "delayed constraint generation (default)");
    auto* full = t->add_flag("--full", tr.full, "recompute every margin each round");
    delayed->excludes(full);
    t->add_flag("--pretrain", tr.pretrain, "train without hard constraints first");
    t->add_option("--minibatch", tr.minibatch, "hard constraints admitted per QP solve")->default_val(1);
    t->add_option("--model", tr.model, "output model file")->required();
    t->add_option("--trace", tr.trace, "convergence trace output (tab separated)");
    t->add_option("--transductive", tr.transductive, "unlabeled graphs whose edges join the constraint bank (c4t)");

    PredictOptions pr;
    auto* p = app.add_subcommand("predict", "label every graph in a dataset");
    p->add_option("--model", pr.model, "model file")->required();
    p->add_option("--data", pr.data, "dataset directory (its test/ part when present)")->required();
    p->add_option("--out", pr.out, "output directory")->required();

    EvalOptions ev;
    auto* e = app.add_subcommand("eval", "score a model against ground truth");
    e->add_option("--model", ev.model, "model file")->required();
    e->add_option("--data", ev.data, "dataset directory (its test/ part when present)")->required();
    e->add_option("--metrics", ev.metrics, "comma-separated: hamming, classavg, iou, voc")->required();
    e->add_option("--report", ev.report, "per-instance report output (tab separated)");

    ConeOptions co;
    auto* c = app.add_subcommand("cone", "Monte-Carlo conic hull coverage");
    c->add_option("--dim", co.dim, "dimension")->required();
    c->add_option("--ns", co.ns, "comma-separated training sizes")->required();
    c->add_option("--ntest", co.ntest, "test points per trial")->required();
    c->add_option("--trials", co.trials, "repetitions")->required();
    c->add_option("--seed", co.seed, "random seed")->required();
    c->add_option("--report", co.report, "table output (tab separated)");

    BenchOptions be;
    auto* b = app.add_subcommand("bench-constraints", "compare delayed and full constraint generation");
    b->add_option("--data", be.data, "dataset directory (its train/ part when present)")->required();
    b->add_option("--C", be.C, "regularization constant")->required();
    b->add_option("--regime", be.regime, "c3, c4 or c4t")->check(CLI::IsMember({"c3", "c4", "c4t"}));
    b->add_option("--tol", be.tol, "relative gap tolerance");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*g) return run_gen(gen, *g);
        if (*t) return run_train(tr);
        if (*p) return run_predict(pr);
        if (*e) return run_eval(ev);
        if (*c) return run_cone(co);
        if (*b) return run_bench(be);
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 1;
}
