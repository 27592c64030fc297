#include "probsub/maxflow.hpp"

#include <algorithm>
#include <limits>
#include <queue>
#include <stdexcept>

namespace probsub {

MaxFlowGraph::MaxFlowGraph(int node_count)
    : node_count_(node_count),
      source_(node_count),
      sink_(node_count + 1),
      adj_(std::size_t(node_count) + 2) {}

void MaxFlowGraph::add_arc(int u, int v, double cap, double rev_cap) {
    if (cap < 0.0 || rev_cap < 0.0) throw std::invalid_argument("negative arc capacity");
    max_cap_ = std::max({max_cap_, cap, rev_cap});
    const std::size_t iu = adj_[std::size_t(u)].size();
    const std::size_t iv = adj_[std::size_t(v)].size();
    adj_[std::size_t(u)].push_back({v, iv, cap});
    adj_[std::size_t(v)].push_back({u, iu, rev_cap});
}

void MaxFlowGraph::add_edge(int u, int v, double cap, double rev_cap) {
    if (u < 0 || v < 0 || u >= node_count_ || v >= node_count_ || u == v)
        throw std::invalid_argument("bad max-flow arc");
    if (cap == 0.0 && rev_cap == 0.0) return;
    add_arc(u, v, cap, rev_cap);
}

void MaxFlowGraph::add_terminal(int v, double source_cap, double sink_cap) {
    if (v < 0 || v >= node_count_) throw std::invalid_argument("bad max-flow node");
    if (source_cap > 0.0) add_arc(source_, v, source_cap, 0.0);
    if (sink_cap > 0.0) add_arc(v, sink_, sink_cap, 0.0);
}

bool MaxFlowGraph::build_levels() {
    level_.assign(adj_.size(), -1);
    std::queue<int> queue;
    level_[std::size_t(source_)] = 0;
    queue.push(source_);
    while (!queue.empty()) {
        const int u = queue.front();
        queue.pop();
        for (const Arc& a : adj_[std::size_t(u)]) {
            if (a.residual > eps_ && level_[std::size_t(a.to)] < 0) {
                level_[std::size_t(a.to)] = level_[std::size_t(u)] + 1;
                queue.push(a.to);
            }
        }
    }
    return level_[std::size_t(sink_)] >= 0;
}

double MaxFlowGraph::push(int v, double limit) {
    if (v == sink_) return limit;
    auto& arcs = adj_[std::size_t(v)];
    for (std::size_t& i = next_arc_[std::size_t(v)]; i < arcs.size(); ++i) {
        Arc& a = arcs[i];
        if (a.residual <= eps_ || level_[std::size_t(a.to)] != level_[std::size_t(v)] + 1) continue;
        const double pushed = push(a.to, std::min(limit, a.residual));
        if (pushed > 0.0) {
            a.residual -= pushed;
            adj_[std::size_t(a.to)][a.rev].residual += pushed;
            return pushed;
        }
    }
    return 0.0;
}

double MaxFlowGraph::solve() {
    // Residuals below this are rounding noise from earlier augmentations.
    eps_ = max_cap_ * 1e-13;
    double flow = 0.0;
    while (build_levels()) {
        next_arc_.assign(adj_.size(), 0);
        while (true) {
            const double pushed = push(source_, std::numeric_limits<double>::infinity());
            if (pushed <= 0.0) break;
            flow += pushed;
        }
    }

    // Nodes that still reach the sink through residual arcs must be on the
    // sink side; every other node goes to the source side.
    sink_side_.assign(adj_.size(), false);
    std::queue<int> queue;
    sink_side_[std::size_t(sink_)] = true;
    queue.push(sink_);
    while (!queue.empty()) {
        const int v = queue.front();
        queue.pop();
        for (const Arc& a : adj_[std::size_t(v)]) {
            // a.rev is the arc a.to -> v; it carries residual into v.
            const Arc& back = adj_[std::size_t(a.to)][a.rev];
            if (back.residual > eps_ && !sink_side_[std::size_t(a.to)]) {
                sink_side_[std::size_t(a.to)] = true;
                queue.push(a.to);
            }
        }
    }
    return flow;
}

}  // namespace probsub
