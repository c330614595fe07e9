#include "lucid/stage_solver.hpp"

#include <algorithm>
#include <limits>

namespace lucid {

namespace {
constexpr int64_t kNegInf = std::numeric_limits<int64_t>::min() / 4;
}

std::variant<StageSolution, StageContradiction> StageGraph::solve() const {
    const int n = n_vars_;
    // Longest path from ZERO; every variable is a natural, so it starts at 0
    // (an implicit ZERO -> x edge of weight 0).
    std::vector<int64_t> dist(n, 0);
    std::vector<int> pred(n, -1); // index into constraints_

    for (int round = 0; round < n; round++) {
        bool changed = false;
        for (size_t ci = 0; ci < constraints_.size(); ci++) {
            const auto &c = constraints_[ci];
            int64_t cand = dist[c.from] + c.weight;
            if (cand > dist[c.to]) {
                dist[c.to] = cand;
                pred[c.to] = (int)ci;
                changed = true;
            }
        }
        if (!changed) break;
    }
    // An edge that still relaxes after n rounds lies on (or hangs off) a
    // positive-weight cycle: walk predecessors n hops to land on the cycle,
    // then collect it as the witness chain.
    int start = -1;
    for (size_t ci = 0; ci < constraints_.size() && start < 0; ci++) {
        const auto &c = constraints_[ci];
        if (dist[c.from] + c.weight > dist[c.to]) {
            dist[c.to] = dist[c.from] + c.weight;
            pred[c.to] = (int)ci;
            start = c.to;
        }
    }
    if (start < 0) return StageSolution{std::move(dist)};
    int v = start;
    for (int i = 0; i < n && pred[v] >= 0; i++) v = constraints_[pred[v]].from;
    StageContradiction out;
    int u = v;
    do {
        if (pred[u] < 0) break;
        const auto &c = constraints_[pred[u]];
        out.cycle.push_back(c);
        u = c.from;
    } while (u != v && (int)out.cycle.size() <= n + 1);
    if (out.cycle.empty()) out.cycle.push_back(constraints_[pred[start]]);
    std::reverse(out.cycle.begin(), out.cycle.end());
    return out;
}

std::vector<StageConstraint> StageGraph::project(const std::vector<int> &keep) const {
    const int n = n_vars_;
    // Floyd-Warshall over max-plus: d[u][v] = tightest implied offset
    // value(v) >= value(u) + d[u][v].
    std::vector<std::vector<int64_t>> d(n, std::vector<int64_t>(n, kNegInf));
    for (int i = 0; i < n; i++) d[i][i] = 0;
    for (const auto &c : constraints_)
        d[c.from][c.to] = std::max(d[c.from][c.to], c.weight);
    // naturals: ZERO -> x with weight 0
    for (int i = 0; i < n; i++) d[kZero][i] = std::max<int64_t>(d[kZero][i], 0);
    for (int k = 0; k < n; k++)
        for (int i = 0; i < n; i++) {
            if (d[i][k] == kNegInf) continue;
            for (int j = 0; j < n; j++) {
                if (d[k][j] == kNegInf) continue;
                d[i][j] = std::max(d[i][j], d[i][k] + d[k][j]);
            }
        }

    std::vector<int> vars = keep;
    if (std::find(vars.begin(), vars.end(), kZero) == vars.end()) vars.push_back(kZero);
    std::vector<StageConstraint> out;
    for (int u : vars)
        for (int v : vars) {
            if (u == v || d[u][v] == kNegInf) continue;
            if (u == kZero && d[u][v] <= 0) continue; // implied by naturals
            out.push_back(StageConstraint{u, v, d[u][v], "", {}, -1});
        }
    return out;
}

} // namespace lucid
