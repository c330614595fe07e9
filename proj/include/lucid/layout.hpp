#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "lucid/atomic.hpp"
#include "lucid/diag.hpp"
#include "lucid/guard.hpp"

namespace lucid {

// Tofino-like engineering defaults; all configurable.
struct PipelineConfig {
    int stages = 12;
    int tables_per_stage = 16;
    int salus_per_stage = 4;
    int max_actions_per_table = 32;
    int max_key_bits = 64;
    int max_entries_per_table = 256;
};

// A non-branch atomic table annotated with its execution guard.
struct GuardedNode {
    int id = -1;      // position in GuardedGraph::nodes
    int atom_id = -1; // originating AtomicTableGraph node
    AtomicStmt stmt;
    std::string name;
    std::string handler;
    int event_id = -1;
    Guard guard;
    int seq = 0; // program order
    std::vector<std::string> reads, writes; // sorted variable sets
};

struct GuardedGraph {
    std::vector<GuardedNode> nodes;
    // data dependence edges (read-after-write, write-after-write and
    // write-after-read hazards, program order) as node index pairs
    std::vector<std::pair<int, int>> edges;
    std::vector<int> level; // filled by reorder_by_dataflow
    int n_handlers = 0;
    std::vector<std::string> notes;

    std::vector<int> preds(int v) const {
        std::vector<int> out;
        for (auto [a, b] : edges)
            if (b == v) out.push_back(a);
        return out;
    }
    // Longest dependence chain, counted in nodes.
    int longest_chain() const;
};

// Deletes branch tables: every remaining table's guard becomes the
// disjunction of its path conditions, and control edges are replaced by
// dataflow hazards. Reports GuardExplosion when a canonical guard needs more
// rules than one table may hold.
std::optional<GuardedGraph> eliminate_branches(const AtomicTableGraph &g,
                                               const PipelineConfig &config, Diagnostics &diags);

// Levels nodes by longest dependence path (level 0 = no predecessors).
void reorder_by_dataflow(GuardedGraph &g);

// One rule of a merged table: pattern (a canonical conjunct, including the
// event-id column for multi-handler programs) and the members it fires.
struct MergedRule {
    Conjunct pattern;
    std::vector<int> fire; // GuardedGraph node indexes, program order
};

struct MergedTable {
    std::string name;
    std::vector<int> members; // GuardedGraph node indexes, placement order
    std::vector<MergedRule> rules;
    std::vector<std::pair<std::string, uint32_t>> keys;
    int key_bits = 0;
    int actions = 1;
    std::vector<std::string> arrays; // distinct arrays touched (0 or 1)
};

struct PipelineLayout {
    PipelineConfig config;
    GuardedGraph graph;
    std::vector<std::vector<MergedTable>> stages; // trailing empty stages trimmed
    std::map<int, std::pair<int, int>> placement; // node index -> (stage, table)
    int unoptimized_longest = 0;                  // control-path tables
    int stages_used = 0;

    const GuardedNode &member(int idx) const { return graph.nodes[idx]; }
};

struct PlacementError {
    std::string table;  // the unplaceable atomic table
    std::string reason; // the binding constraint
};

// Greedy placement: walks the leveled DAG topologically (ties by program
// order) and merges each table into the earliest feasible (stage, table)
// slot subject to dependence, array affinity and resource constraints.
std::variant<PipelineLayout, PlacementError> greedy_merge(GuardedGraph graph,
                                                          const PipelineConfig &config,
                                                          int unoptimized_longest);

struct LayoutReport {
    int stages_used = 0;
    int tables_total = 0;
    int longest_before = 0;
    int longest_after = 0;
    double compression_ratio = 0.0;
    struct StageStats {
        int tables = 0;
        int statements = 0;
        int ops = 0;
        int memops = 0;
        int generates = 0;
        int salus = 0;
    };
    std::vector<StageStats> per_stage;
    std::vector<std::string> notes;
};

LayoutReport layout_report(const PipelineLayout &layout);
std::string report_to_json(const LayoutReport &r);
std::string layout_to_json(const PipelineLayout &layout);

// PipelineConfig JSON I/O (--config).
std::optional<PipelineConfig> config_from_json(const std::string &text, std::string &error);
std::string config_to_json(const PipelineConfig &c);

} // namespace lucid
