#include "lucid/layout.hpp"

#include <algorithm>
#include <set>

#include "lucid/check.hpp"

#include <nlohmann/json.hpp>

namespace lucid {

namespace {

constexpr const char *kEventVar = "%ev";
constexpr uint32_t kEventWidth = 16;

std::vector<std::string> node_reads(const AtomicStmt &s) {
    std::set<std::string> out;
    auto add = [&](const Operand &o) {
        if (o.is_local()) out.insert(o.name);
    };
    std::visit(
        [&](const auto &a) {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, AtomicOp>) {
                if (a.detail == AtomicOp::Detail::Hash) {
                    for (const auto &x : a.hash_args) add(x);
                } else {
                    add(a.a);
                    if (a.detail == AtomicOp::Detail::Bin) add(a.b);
                }
            } else if constexpr (std::is_same_v<T, AtomicMemOp>) {
                add(a.index);
                add(a.get_arg);
                add(a.set_arg);
                if (a.set_value) add(*a.set_value);
            } else if constexpr (std::is_same_v<T, AtomicBranch>) {
                add(a.value);
            } else if constexpr (std::is_same_v<T, AtomicGenerate>) {
                for (const auto &x : a.args) add(x);
                add(a.delay);
                add(a.dest_switch);
            }
        },
        s.v);
    return {out.begin(), out.end()};
}

std::vector<std::string> node_writes(const AtomicStmt &s) {
    std::set<std::string> out;
    std::visit(
        [&](const auto &a) {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, AtomicOp>) {
                if (!a.dst.empty()) out.insert(a.dst);
            } else if constexpr (std::is_same_v<T, AtomicMemOp>) {
                if (a.result) out.insert(*a.result);
            }
        },
        s.v);
    return {out.begin(), out.end()};
}

bool intersects(const std::vector<std::string> &a, const std::vector<std::string> &b) {
    // both sorted
    size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] == b[j]) return true;
        if (a[i] < b[j])
            i++;
        else
            j++;
    }
    return false;
}

uint32_t branch_width(const AtomicBranch &b) { return b.value.width; }

} // namespace

std::optional<GuardedGraph> eliminate_branches(const AtomicTableGraph &g,
                                               const PipelineConfig &config, Diagnostics &diags) {
    GuardedGraph out;
    std::set<std::string> handlers;

    // Guard propagation per handler, in node-id (program) order. Node ids are
    // assigned in pre-order, so every control predecessor precedes its
    // successors and a single forward sweep suffices.
    std::vector<Guard> guard(g.nodes.size(), Guard::falsity());
    for (const auto &[event, entry] : g.handler_entry) {
        (void)event;
        if (entry >= 0) guard[entry] = guard_or(guard[entry], Guard::truth());
    }
    for (const auto &n : g.nodes) {
        if (std::holds_alternative<AtomicDispatch>(n.stmt.v)) continue;
        const Guard &cur = guard[n.id];
        if (const auto *br = std::get_if<AtomicBranch>(&n.stmt.v)) {
            if (br->value.is_local()) {
                uint32_t w = branch_width(*br);
                uint64_t c = br->constant & (w >= 64 ? ~0ull : ((1ull << w) - 1));
                GuardLit lit{br->value.name, w, br->cmp, c};
                GuardLit neg{br->value.name, w, cmp_negate(br->cmp), c};
                if (n.next_true >= 0)
                    guard[n.next_true] = guard_or(guard[n.next_true], guard_and_lit(cur, lit));
                if (n.next_false >= 0)
                    guard[n.next_false] = guard_or(guard[n.next_false], guard_and_lit(cur, neg));
            } else {
                // constant condition, folded during normalization
                bool truth = cmp_eval(br->cmp, br->value.value, br->constant);
                int live = truth ? n.next_true : n.next_false;
                int dead = truth ? n.next_false : n.next_true;
                if (live >= 0) guard[live] = guard_or(guard[live], cur);
                if (dead >= 0) guard[dead] = guard_or(guard[dead], Guard::falsity());
            }
            continue;
        }
        if (n.next_true >= 0) guard[n.next_true] = guard_or(guard[n.next_true], cur);
    }

    for (const auto &n : g.nodes) {
        if (std::holds_alternative<AtomicBranch>(n.stmt.v) ||
            std::holds_alternative<AtomicDispatch>(n.stmt.v) ||
            std::holds_alternative<AtomicNoop>(n.stmt.v))
            continue;
        if (guard[n.id].is_false()) {
            out.notes.push_back("dead table eliminated: " + n.name);
            continue;
        }
        if ((int)guard[n.id].disjuncts.size() + 1 > config.max_entries_per_table) {
            diags.add(DiagKind::GuardExplosion, n.stmt.span,
                      "guard for table '" + n.name + "' needs " +
                          std::to_string(guard[n.id].disjuncts.size() + 1) +
                          " rules, budget is " +
                          std::to_string(config.max_entries_per_table));
            return std::nullopt;
        }
        GuardedNode gn;
        gn.id = (int)out.nodes.size();
        gn.atom_id = n.id;
        gn.stmt = n.stmt;
        gn.name = n.name;
        gn.handler = n.handler;
        gn.event_id = n.event_id;
        gn.guard = guard[n.id];
        gn.seq = n.id;
        gn.reads = node_reads(n.stmt);
        for (const auto &[var, w] : guard_keys(gn.guard)) {
            (void)w;
            if (std::find(gn.reads.begin(), gn.reads.end(), var) == gn.reads.end())
                gn.reads.push_back(var);
        }
        std::sort(gn.reads.begin(), gn.reads.end());
        gn.writes = node_writes(n.stmt);
        handlers.insert(n.handler);
        out.nodes.push_back(std::move(gn));
    }
    out.n_handlers = (int)handlers.size();

    // Hazard edges within each handler, program order: RAW, WAW and WAR all
    // order strictly (each table reads its stage-input values and commits at
    // stage output, so no two hazarding tables may share a stage).
    for (size_t i = 0; i < out.nodes.size(); i++) {
        for (size_t j = i + 1; j < out.nodes.size(); j++) {
            const GuardedNode &u = out.nodes[i], &v = out.nodes[j];
            if (u.handler != v.handler) continue;
            bool raw = intersects(u.writes, v.reads);
            bool waw = intersects(u.writes, v.writes);
            bool war = intersects(u.reads, v.writes);
            if (raw || waw || war) out.edges.emplace_back((int)i, (int)j);
        }
    }
    return out;
}

void reorder_by_dataflow(GuardedGraph &g) {
    g.level.assign(g.nodes.size(), 0);
    // edges always point from lower seq to higher seq, so one sweep suffices
    for (auto [a, b] : g.edges) g.level[b] = std::max(g.level[b], g.level[a] + 1);
}

int GuardedGraph::longest_chain() const {
    int best = nodes.empty() ? 0 : 1;
    for (size_t i = 0; i < level.size(); i++) best = std::max(best, level[i] + 1);
    return nodes.empty() ? 0 : best;
}

// ---------------------------------------------------------------------------
// greedy merging
// ---------------------------------------------------------------------------

namespace {

// Per-member rule rows: the firing rows (one per guard disjunct, with the
// event-id column) followed by a catch-all noop row.
struct MemberRows {
    std::vector<std::optional<Conjunct>> rows; // nullopt = catch-all noop
    std::vector<bool> fires;
};

MemberRows member_rows(const GuardedNode &n, bool with_event_col) {
    MemberRows mr;
    Guard g = n.guard;
    if (with_event_col) {
        GuardLit ev{kEventVar, kEventWidth, CmpKind::Eq, (uint64_t)n.event_id};
        g = guard_and_lit(g, ev);
    }
    for (const auto &c : g.disjuncts) {
        mr.rows.push_back(c);
        mr.fires.push_back(true);
    }
    if (!g.is_true() || with_event_col) {
        mr.rows.push_back(std::nullopt);
        mr.fires.push_back(false);
    }
    return mr;
}

struct BuildResult {
    std::vector<MergedRule> rules;
    std::vector<std::pair<std::string, uint32_t>> keys;
    int key_bits = 0;
    int actions = 1;
    bool memop_conflict = false;
};

// Cross product of the members' rows, contradictions pruned, in
// first-match-wins order.
std::optional<BuildResult> build_rules(const std::vector<const GuardedNode *> &members,
                                       bool with_event_col, const PipelineConfig &config) {
    std::vector<MemberRows> rows;
    rows.reserve(members.size());
    for (const auto *m : members) rows.push_back(member_rows(*m, with_event_col));

    std::vector<MergedRule> rules;
    rules.push_back(MergedRule{Conjunct{}, {}});
    for (size_t mi = 0; mi < members.size(); mi++) {
        std::vector<MergedRule> next;
        for (const auto &r : rules) {
            for (size_t k = 0; k < rows[mi].rows.size(); k++) {
                MergedRule nr = r;
                if (rows[mi].rows[k]) {
                    std::vector<GuardLit> lits = nr.pattern.lits;
                    lits.insert(lits.end(), rows[mi].rows[k]->lits.begin(),
                                rows[mi].rows[k]->lits.end());
                    auto canon = canonicalize_conjunct(lits);
                    if (!canon) continue; // contradictory combination
                    nr.pattern = std::move(*canon);
                }
                if (rows[mi].fires[k]) nr.fire.push_back(members[mi]->id);
                next.push_back(std::move(nr));
                if ((int)next.size() > config.max_entries_per_table) return std::nullopt;
            }
        }
        rules = std::move(next);
    }

    BuildResult out;
    // drop duplicate patterns (first match wins, later ones are shadowed)
    std::set<std::vector<GuardLit>> seen;
    for (auto &r : rules) {
        if (!seen.insert(r.pattern.lits).second) continue;
        out.rules.push_back(std::move(r));
    }

    std::map<std::string, uint32_t> keys;
    int64_t actions = 1;
    for (const auto *m : members) {
        for (const auto &[var, w] : guard_keys(m->guard)) keys.emplace(var, w);
        actions *= m->guard.is_true() && !with_event_col ? 1 : 2;
    }
    if (with_event_col && !members.empty()) keys.emplace(kEventVar, kEventWidth);
    out.keys.assign(keys.begin(), keys.end());
    for (const auto &[var, w] : out.keys) out.key_bits += (int)w;
    out.actions = (int)std::min<int64_t>(actions, INT32_MAX);

    // one stateful ALU fires per table execution: no rule may trigger two
    // memops, and all memop members must target the same array
    std::set<std::string> arrays;
    for (const auto *m : members)
        if (const auto *mem = std::get_if<AtomicMemOp>(&m->stmt.v)) arrays.insert(mem->array);
    if (arrays.size() > 1) {
        out.memop_conflict = true;
        return out;
    }
    for (const auto &r : out.rules) {
        int memops = 0;
        for (int id : r.fire)
            for (const auto *m : members)
                if (m->id == id && std::holds_alternative<AtomicMemOp>(m->stmt.v)) memops++;
        if (memops > 1) {
            out.memop_conflict = true;
            return out;
        }
    }
    return out;
}

std::string table_name(int stage, int index) {
    return "pipe_s" + std::to_string(stage) + "_t" + std::to_string(index);
}

} // namespace

std::variant<PipelineLayout, PlacementError> greedy_merge(GuardedGraph graph,
                                                          const PipelineConfig &config,
                                                          int unoptimized_longest) {
    reorder_by_dataflow(graph);

    PipelineLayout layout;
    layout.config = config;
    layout.unoptimized_longest = unoptimized_longest;
    layout.stages.assign(config.stages, {});

    bool with_event_col = graph.n_handlers > 1;

    // topological walk = by level, ties by program order
    std::vector<int> order(graph.nodes.size());
    for (size_t i = 0; i < order.size(); i++) order[i] = (int)i;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (graph.level[a] != graph.level[b]) return graph.level[a] < graph.level[b];
        return graph.nodes[a].seq < graph.nodes[b].seq;
    });

    // array -> stage affinity. All accesses of one array must share a stage,
    // so no first placement may undercut the dependence lower bound of any
    // later access. Affinity and dependences interact transitively (an array
    // raised by one handler raises everything downstream of its accesses in
    // every handler), so the lower bounds are a fixpoint.
    std::map<std::string, int> array_stage;
    std::map<std::string, int> array_floor;
    std::vector<int> bound(graph.nodes.size(), 0);
    for (bool changed = true; changed;) {
        changed = false;
        for (size_t i = 0; i < graph.nodes.size(); i++) {
            int b = bound[i];
            for (auto [u, v] : graph.edges)
                if (v == (int)i) b = std::max(b, bound[u] + 1);
            if (const auto *mem = std::get_if<AtomicMemOp>(&graph.nodes[i].stmt.v)) {
                int &floor = array_floor[mem->array];
                b = std::max(b, floor);
                if (b > floor) {
                    floor = b;
                    changed = true;
                }
            }
            if (b > bound[i]) {
                bound[i] = b;
                changed = true;
            }
        }
    }
    auto stage_salus = [&](int s) {
        std::set<std::string> arrays;
        for (const auto &t : layout.stages[s])
            for (const auto &a : t.arrays) arrays.insert(a);
        return arrays;
    };

    for (int idx : order) {
        const GuardedNode &t = graph.nodes[idx];
        int lower = bound[idx];
        for (auto [a, b] : graph.edges)
            if (b == idx) lower = std::max(lower, layout.placement.at(a).first + 1);

        const AtomicMemOp *mem = std::get_if<AtomicMemOp>(&t.stmt.v);
        int forced_stage = -1;
        if (mem) {
            lower = std::max(lower, array_floor.at(mem->array));
            auto it = array_stage.find(mem->array);
            if (it != array_stage.end()) forced_stage = it->second;
            if (forced_stage >= 0 && forced_stage < lower)
                return PlacementError{
                    t.name, "array '" + mem->array + "' is pinned to stage " +
                                std::to_string(forced_stage) +
                                " but a data dependence requires stage >= " +
                                std::to_string(lower)};
        }

        bool placed = false;
        std::string block_reason;
        int s_begin = forced_stage >= 0 ? forced_stage : lower;
        int s_end = forced_stage >= 0 ? forced_stage + 1 : config.stages;
        for (int s = s_begin; s < s_end && !placed; s++) {
            // sALU budget
            if (mem) {
                auto arrays = stage_salus(s);
                if (!arrays.count(mem->array) && (int)arrays.size() >= config.salus_per_stage) {
                    if (block_reason.empty())
                        block_reason = "stage " + std::to_string(s) + " has no free stateful ALU";
                    continue;
                }
            }
            // try existing tables first, lowest index wins
            for (size_t ti = 0; ti < layout.stages[s].size() && !placed; ti++) {
                MergedTable &m = layout.stages[s][ti];
                std::vector<const GuardedNode *> members;
                for (int mid : m.members) members.push_back(&graph.nodes[mid]);
                members.push_back(&t);
                auto built = build_rules(members, with_event_col, config);
                if (!built) {
                    if (block_reason.empty())
                        block_reason = "merged entries exceed " +
                                       std::to_string(config.max_entries_per_table);
                    continue;
                }
                if (built->memop_conflict) continue;
                if (built->key_bits > config.max_key_bits) continue;
                if (built->actions > config.max_actions_per_table) continue;
                m.members.push_back(idx);
                m.rules = std::move(built->rules);
                m.keys = std::move(built->keys);
                m.key_bits = built->key_bits;
                m.actions = built->actions;
                if (mem && std::find(m.arrays.begin(), m.arrays.end(), mem->array) ==
                               m.arrays.end())
                    m.arrays.push_back(mem->array);
                layout.placement[idx] = {s, (int)ti};
                placed = true;
            }
            if (placed) break;
            // open a new table
            if ((int)layout.stages[s].size() >= config.tables_per_stage) {
                if (block_reason.empty())
                    block_reason = "stage " + std::to_string(s) + " already has " +
                                   std::to_string(config.tables_per_stage) + " tables";
                continue;
            }
            std::vector<const GuardedNode *> members = {&t};
            auto built = build_rules(members, with_event_col, config);
            if (!built || built->key_bits > config.max_key_bits ||
                built->actions > config.max_actions_per_table) {
                if (block_reason.empty())
                    block_reason = "table for '" + t.name + "' exceeds per-table budgets";
                continue;
            }
            MergedTable nt;
            nt.name = table_name(s, (int)layout.stages[s].size());
            nt.members = {idx};
            nt.rules = std::move(built->rules);
            nt.keys = std::move(built->keys);
            nt.key_bits = built->key_bits;
            nt.actions = built->actions;
            if (mem) nt.arrays.push_back(mem->array);
            layout.placement[idx] = {s, (int)layout.stages[s].size()};
            layout.stages[s].push_back(std::move(nt));
            placed = true;
        }
        if (!placed) {
            if (block_reason.empty())
                block_reason = forced_stage >= 0
                                   ? "array affinity stage cannot accept the table"
                                   : "no stage below " + std::to_string(config.stages) +
                                         " can accept the table";
            return PlacementError{t.name, block_reason};
        }
        if (mem) array_stage.emplace(mem->array, layout.placement[idx].first);
    }

    for (int s = 0; s < config.stages; s++)
        if (!layout.stages[s].empty()) layout.stages_used = s + 1;
    while (!layout.stages.empty() && layout.stages.back().empty()) layout.stages.pop_back();
    layout.graph = std::move(graph);

    // data-dependence safety: writers strictly before readers
    for (auto [a, b] : layout.graph.edges)
        LUCID_CHECK(layout.placement.at(a).first < layout.placement.at(b).first,
                    "hazarding tables must occupy distinct stages in order");

    return layout;
}

LayoutReport layout_report(const PipelineLayout &layout) {
    LayoutReport r;
    r.stages_used = layout.stages_used;
    r.longest_before = layout.unoptimized_longest;
    r.longest_after = layout.graph.longest_chain();
    r.compression_ratio =
        layout.stages_used > 0 ? (double)layout.unoptimized_longest / layout.stages_used : 0.0;
    r.notes = layout.graph.notes;
    for (const auto &stage : layout.stages) {
        LayoutReport::StageStats st;
        st.tables = (int)stage.size();
        std::set<std::string> arrays;
        for (const auto &t : stage) {
            r.tables_total++;
            for (int mid : t.members) {
                const auto &n = layout.graph.nodes[mid];
                st.statements++;
                if (std::holds_alternative<AtomicOp>(n.stmt.v)) st.ops++;
                if (std::holds_alternative<AtomicMemOp>(n.stmt.v)) st.memops++;
                if (std::holds_alternative<AtomicGenerate>(n.stmt.v)) st.generates++;
            }
            for (const auto &a : t.arrays) arrays.insert(a);
        }
        st.salus = (int)arrays.size();
        r.per_stage.push_back(st);
    }
    return r;
}

std::string report_to_json(const LayoutReport &r) {
    nlohmann::ordered_json j;
    j["stages_used"] = r.stages_used;
    j["tables_total"] = r.tables_total;
    j["longest_path_unoptimized"] = r.longest_before;
    j["longest_path_optimized"] = r.longest_after;
    char buf[32];
    snprintf(buf, sizeof buf, "%.4f", r.compression_ratio);
    j["compression_ratio"] = std::stod(buf);
    j["per_stage"] = nlohmann::ordered_json::array();
    for (const auto &st : r.per_stage)
        j["per_stage"].push_back({{"tables", st.tables},
                                  {"statements", st.statements},
                                  {"ops", st.ops},
                                  {"memops", st.memops},
                                  {"generates", st.generates},
                                  {"salus", st.salus}});
    j["notes"] = r.notes;
    return j.dump(2);
}

std::string layout_to_json(const PipelineLayout &layout) {
    nlohmann::ordered_json j;
    j["config"] = {{"stages", layout.config.stages},
                   {"tables_per_stage", layout.config.tables_per_stage},
                   {"salus_per_stage", layout.config.salus_per_stage},
                   {"max_actions_per_table", layout.config.max_actions_per_table},
                   {"max_key_bits", layout.config.max_key_bits},
                   {"max_entries_per_table", layout.config.max_entries_per_table}};
    j["stages"] = nlohmann::ordered_json::array();
    for (size_t s = 0; s < layout.stages.size(); s++) {
        nlohmann::ordered_json stage = nlohmann::ordered_json::array();
        for (const auto &t : layout.stages[s]) {
            nlohmann::ordered_json keys = nlohmann::ordered_json::array();
            for (const auto &[var, w] : t.keys) keys.push_back({{"var", var}, {"bits", w}});
            nlohmann::ordered_json rules = nlohmann::ordered_json::array();
            for (const auto &rule : t.rules) {
                nlohmann::ordered_json pat = nlohmann::ordered_json::array();
                for (const auto &l : rule.pattern.lits) pat.push_back(l.str());
                nlohmann::ordered_json fire = nlohmann::ordered_json::array();
                for (int mid : rule.fire) fire.push_back(layout.graph.nodes[mid].name);
                rules.push_back({{"match", pat}, {"actions", fire}});
            }
            nlohmann::ordered_json members = nlohmann::ordered_json::array();
            for (int mid : t.members) members.push_back(layout.graph.nodes[mid].name);
            stage.push_back({{"name", t.name},
                             {"members", members},
                             {"keys", keys},
                             {"key_bits", t.key_bits},
                             {"entries", rules},
                             {"arrays", t.arrays}});
        }
        j["stages"].push_back(std::move(stage));
    }
    nlohmann::ordered_json placement = nlohmann::ordered_json::object();
    for (const auto &[node, pos] : layout.placement)
        placement[layout.graph.nodes[node].name] = {{"stage", pos.first},
                                                    {"table", pos.second}};
    j["placement"] = std::move(placement);
    j["report"] = nlohmann::ordered_json::parse(report_to_json(layout_report(layout)));
    return j.dump(2);
}

std::optional<PipelineConfig> config_from_json(const std::string &text, std::string &error) {
    auto j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) {
        error = "invalid JSON";
        return std::nullopt;
    }
    PipelineConfig c;
    auto get = [&](const char *k, int &into) {
        if (j.contains(k)) {
            if (!j[k].is_number_integer() || j[k].get<int>() <= 0) {
                error = std::string("config field '") + k + "' must be a positive integer";
                return false;
            }
            into = j[k].get<int>();
        }
        return true;
    };
    if (!get("stages", c.stages) || !get("tables_per_stage", c.tables_per_stage) ||
        !get("salus_per_stage", c.salus_per_stage) ||
        !get("max_actions_per_table", c.max_actions_per_table) ||
        !get("max_key_bits", c.max_key_bits) ||
        !get("max_entries_per_table", c.max_entries_per_table))
        return std::nullopt;
    return c;
}

std::string config_to_json(const PipelineConfig &c) {
    nlohmann::ordered_json j = {{"stages", c.stages},
                                {"tables_per_stage", c.tables_per_stage},
                                {"salus_per_stage", c.salus_per_stage},
                                {"max_actions_per_table", c.max_actions_per_table},
                                {"max_key_bits", c.max_key_bits},
                                {"max_entries_per_table", c.max_entries_per_table}};
    return j.dump(2);
}

} // namespace lucid
