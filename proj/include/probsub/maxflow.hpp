#pragma once

#include <cstddef>
#include <vector>

namespace probsub {

/// s-t max-flow / min-cut on a directed graph with real capacities (Dinic).
/// Node indices are 0..n-1; the terminals are separate.
class MaxFlowGraph {
public:
    explicit MaxFlowGraph(int node_count);

    int node_count() const { return node_count_; }

    /// Arc u -> v with capacity `cap` and reverse arc v -> u with `rev_cap`.
    void add_edge(int u, int v, double cap, double rev_cap = 0.0);
    /// Capacities of source -> v and v -> sink.
    void add_terminal(int v, double source_cap, double sink_cap);

    double solve();

    /// After solve(): true when v lies on the sink side of the minimum cut.
    /// Nodes that could sit on either side of some minimum cut are put on
    /// the source side.
    bool on_sink_side(int v) const { return sink_side_.at(std::size_t(v)); }

private:
    struct Arc {
        int to;
        std::size_t rev;
        double residual;
    };

    bool build_levels();
    double push(int v, double limit);
    void add_arc(int u, int v, double cap, double rev_cap);

    int node_count_;
    int source_;
    int sink_;
    double eps_ = 0.0;
    double max_cap_ = 0.0;
    std::vector<std::vector<Arc>> adj_;
    std::vector<int> level_;
    std::vector<std::size_t> next_arc_;
    std::vector<bool> sink_side_;
};

}  // namespace probsub
