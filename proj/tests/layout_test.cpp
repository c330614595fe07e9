#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "lucid/driver.hpp"
#include "lucid/layout.hpp"
#include "lucid/lowering.hpp"

#include "support/progen.hpp"

using namespace lucid;

namespace {

struct Built {
    FrontendResult fe;
    LoweredProgram lowered;
    GuardedGraph guarded;
};

Built eliminate_src(const std::string &src, PipelineConfig cfg = {}) {
    Diagnostics diags;
    auto fe = run_frontend(src, "t", diags);
    REQUIRE_MESSAGE(fe.has_value(), diagnostics_to_text(diags));
    auto lowered = lower_program(fe->program, fe->checked, diags);
    REQUIRE_MESSAGE(lowered.has_value(), diagnostics_to_text(diags));
    auto guarded = eliminate_branches(lowered->graph, cfg, diags);
    REQUIRE_MESSAGE(guarded.has_value(), diagnostics_to_text(diags));
    return Built{std::move(*fe), std::move(*lowered), std::move(*guarded)};
}

std::string count_pkt_src() {
    bool ok = false;
    std::string src = read_file(std::string(LUCID_TESTDATA_DIR) + "/count_pkt.lucid", ok);
    REQUIRE(ok);
    return src;
}

const GuardedNode *find_node(const GuardedGraph &g, const std::string &name) {
    for (const auto &n : g.nodes)
        if (n.name == name) return &n;
    return nullptr;
}

} // namespace

TEST_CASE("branch elimination on count_pkt: guards, deletion, depth 7 to 4") {
    Built b = eliminate_src(count_pkt_src());
    // the three branch tables vanish: 8 atomic statements -> 5 guarded tables
    CHECK(b.guarded.nodes.size() == 5);
    for (const auto &n : b.guarded.nodes)
        CHECK(std::string(n.stmt.kind_name()) != "branch");

    // idx = idx + NUM_PORTS_X2 executes only when proto is neither TCP nor UDP
    const GuardedNode *else_op = find_node(b.guarded, "count_pkt_op_1");
    REQUIRE(else_op != nullptr);
    REQUIRE(else_op->guard.disjuncts.size() == 1);
    const Conjunct &c = else_op->guard.disjuncts[0];
    REQUIRE(c.lits.size() == 2);
    CHECK(c.lits[0].var == "proto");
    CHECK(c.lits[0].cmp == CmpKind::Ne);
    CHECK(c.lits[1].cmp == CmpKind::Ne);
    std::set<uint64_t> values{c.lits[0].value, c.lits[1].value};
    CHECK(values == std::set<uint64_t>{6, 17});

    // the pcts update runs unconditionally
    const GuardedNode *pcts = find_node(b.guarded, "count_pkt_memop_1");
    REQUIRE(pcts != nullptr);
    CHECK(pcts->guard.is_true());

    // longest path drops from 7 control tables to a 4-node dependence chain
    reorder_by_dataflow(b.guarded);
    CHECK(b.lowered.graph.longest_path() == 7);
    CHECK(b.guarded.longest_chain() == 4);
}

TEST_CASE("straight-line graphs keep true guards and stay unchanged") {
    Built b = eliminate_src("event h(int a);\n"
                            "handle h(int a) { int x = a + 1; int y = x + 2; }\n");
    REQUIRE(b.guarded.nodes.size() == 2);
    for (const auto &n : b.guarded.nodes) CHECK(n.guard.is_true());
}

TEST_CASE("both arms writing one variable leave the reader depending on both") {
    Built b = eliminate_src("event h(int a);\n"
                            "handle h(int a) {\n"
                            "    int x = 0;\n"
                            "    if (a == 1) { x = 10; } else { x = 20; }\n"
                            "    int y = x + 1;\n"
                            "}\n");
    reorder_by_dataflow(b.guarded);
    // x=0, x=10 (guarded), x=20 (guarded), y=x+1
    REQUIRE(b.guarded.nodes.size() == 4);
    const GuardedNode *reader = find_node(b.guarded, "h_op_3");
    REQUIRE(reader != nullptr);
    std::set<int> preds;
    for (auto [u, v] : b.guarded.edges)
        if (v == reader->id) preds.insert(u);
    CHECK(preds.size() == 3); // all three writers order before the read
    CHECK(b.guarded.level[reader->id] == 3);
}

TEST_CASE("reorder: independent accesses land at level zero in parallel") {
    Built b = eliminate_src(count_pkt_src());
    reorder_by_dataflow(b.guarded);
    const GuardedNode *first = find_node(b.guarded, "count_pkt_memop_0");
    const GuardedNode *hcts = find_node(b.guarded, "count_pkt_memop_2");
    REQUIRE(first != nullptr);
    REQUIRE(hcts != nullptr);
    CHECK(b.guarded.level[first->id] == 0);
    CHECK(b.guarded.level[hcts->id] == 0); // parallel with the first table
}

TEST_CASE("reorder: a chain of k dependent ops levels 0..k-1") {
    Built b = eliminate_src("event h(int a);\n"
                            "handle h(int a) {\n"
                            "    int x = a + 1;\n"
                            "    int y = x + 1;\n"
                            "    int z = y + 1;\n"
                            "    int w = z + 1;\n"
                            "}\n");
    reorder_by_dataflow(b.guarded);
    std::vector<int> levels = b.guarded.level;
    std::sort(levels.begin(), levels.end());
    CHECK(levels == std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("reorder: two memops on different arrays are both level zero") {
    Built b = eliminate_src("global a = new Array<<32>>(4);\n"
                            "global b = new Array<<32>>(4);\n"
                            "event h(int i, int j);\n"
                            "handle h(int i, int j) {\n"
                            "    Array.set(a, i, 1);\n"
                            "    Array.set(b, j, 2);\n"
                            "}\n");
    reorder_by_dataflow(b.guarded);
    CHECK(b.guarded.level == std::vector<int>{0, 0});
}

TEST_CASE("greedy merge: count_pkt occupies four stages in at most five tables") {
    Built b = eliminate_src(count_pkt_src());
    auto placed = greedy_merge(std::move(b.guarded), PipelineConfig{},
                               b.lowered.graph.longest_path());
    auto *layout = std::get_if<PipelineLayout>(&placed);
    REQUIRE(layout != nullptr);
    CHECK(layout->stages_used == 4);
    LayoutReport report = layout_report(*layout);
    CHECK(report.tables_total <= 5);
    CHECK(report.compression_ratio == doctest::Approx(1.75));
    // per-stage statement counts stay in the observed band
    for (const auto &st : report.per_stage) {
        CHECK(st.statements >= 1);
        CHECK(st.statements <= 13);
    }
    // array affinity: each array appears in exactly one stage
    std::map<std::string, std::set<int>> array_stages;
    for (size_t s = 0; s < layout->stages.size(); s++)
        for (const auto &t : layout->stages[s])
            for (const auto &arr : t.arrays) array_stages[arr].insert((int)s);
    CHECK(array_stages.size() == 3);
    for (const auto &[arr, stages] : array_stages) CHECK(stages.size() == 1);
}

TEST_CASE("greedy merge: a single node uses one stage and one table") {
    Built b = eliminate_src("event h(int a);\nhandle h(int a) { int x = a + 1; }\n");
    auto placed = greedy_merge(std::move(b.guarded), PipelineConfig{}, 1);
    auto *layout = std::get_if<PipelineLayout>(&placed);
    REQUIRE(layout != nullptr);
    CHECK(layout->stages_used == 1);
    CHECK(layout_report(*layout).tables_total == 1);
}

TEST_CASE("optimization shortens deep branch ladders (compression regression)") {
    // three nested ifs: the control path is long, the dataflow is shallow
    std::string src = "global acc = new Array<<32>>(4);\n"
                      "memop plus(int c, int x){ return c + x; }\n"
                      "event h(int<8> a, int<8> b, int<8> c);\n"
                      "handle h(int<8> a, int<8> b, int<8> c) {\n"
                      "    int bump = 0;\n"
                      "    if (a == 1) {\n"
                      "        if (b == 2) {\n"
                      "            if (c == 3) { bump = 7; }\n"
                      "        }\n"
                      "    }\n"
                      "    Array.setm(acc, 0, plus, 1);\n"
                      "}\n";
    Built b = eliminate_src(src);
    int unopt = b.lowered.graph.longest_path();
    auto placed = greedy_merge(std::move(b.guarded), PipelineConfig{}, unopt);
    auto *layout = std::get_if<PipelineLayout>(&placed);
    REQUIRE(layout != nullptr);
    CHECK(unopt > layout->stages_used);
    CHECK(layout_report(*layout).compression_ratio > 1.0);
}

TEST_CASE("placement fails cleanly when the pipeline is too small") {
    PipelineConfig tiny;
    tiny.stages = 2;
    Built b = eliminate_src(count_pkt_src(), tiny);
    auto placed = greedy_merge(std::move(b.guarded), tiny, b.lowered.graph.longest_path());
    auto *err = std::get_if<PlacementError>(&placed);
    REQUIRE(err != nullptr);
    CHECK(!err->table.empty());
    CHECK(!err->reason.empty());
}

TEST_CASE("guard explosion is reported against the entry budget") {
    // a non-trivial guard needs one firing rule plus the catch-all no-op,
    // which already exceeds a one-entry budget
    PipelineConfig cfg;
    cfg.max_entries_per_table = 1;
    std::string src = "event h(int a);\n"
                      "handle h(int a) {\n"
                      "    int x = 0;\n"
                      "    if (a == 1) { x = 1; }\n"
                      "}\n";
    Diagnostics diags;
    auto fe = run_frontend(src, "t", diags);
    REQUIRE(fe.has_value());
    auto lowered = lower_program(fe->program, fe->checked, diags);
    REQUIRE(lowered.has_value());
    auto guarded = eliminate_branches(lowered->graph, cfg, diags);
    CHECK(!guarded.has_value());
    CHECK(diags.has(DiagKind::GuardExplosion));
}

TEST_CASE("contradictory guards are dead code and disappear") {
    Built b = eliminate_src("event h(int a);\n"
                            "handle h(int a) {\n"
                            "    if (a == 1) {\n"
                            "        if (a == 2) { int dead = 1; }\n"
                            "    }\n"
                            "}\n");
    // (a==1) && (a==2) cannot match
    CHECK(b.guarded.nodes.empty());
    REQUIRE(b.guarded.notes.size() == 1);
    CHECK(b.guarded.notes[0].find("dead") != std::string::npos);
}

TEST_CASE("guard canonicalization narrows intervals") {
    auto canon = canonicalize_conjunct({GuardLit{"x", 8, CmpKind::Ge, 10},
                                        GuardLit{"x", 8, CmpKind::Le, 10}});
    REQUIRE(canon.has_value());
    REQUIRE(canon->lits.size() == 1);
    CHECK(canon->lits[0].cmp == CmpKind::Eq);
    CHECK(canon->lits[0].value == 10);

    CHECK(!canonicalize_conjunct({GuardLit{"x", 8, CmpKind::Gt, 10},
                                  GuardLit{"x", 8, CmpKind::Lt, 5}})
               .has_value());
    CHECK(!canonicalize_conjunct({GuardLit{"x", 8, CmpKind::Eq, 1},
                                  GuardLit{"x", 8, CmpKind::Eq, 2}})
               .has_value());
    CHECK(!canonicalize_conjunct({GuardLit{"x", 8, CmpKind::Eq, 3},
                                  GuardLit{"x", 8, CmpKind::Ne, 3}})
               .has_value());
}

TEST_CASE("data-dependence safety holds across generated programs") {
    for (uint64_t seed = 500; seed < 540; seed++) {
        std::string src = lucid::test::generate_program(seed);
        std::string err;
        auto built = lucid::test::build_all(src, "gen", err, lucid::test::fuzz_config());
        CAPTURE(seed);
        REQUIRE_MESSAGE(built.has_value(), err);
        const PipelineLayout &layout = built->layout;
        for (auto [a, bnode] : layout.graph.edges)
            CHECK(layout.placement.at(a).first < layout.placement.at(bnode).first);
        // array affinity holds everywhere
        std::map<std::string, std::set<int>> array_stages;
        for (size_t s = 0; s < layout.stages.size(); s++)
            for (const auto &t : layout.stages[s])
                for (const auto &arr : t.arrays) array_stages[arr].insert((int)s);
        for (const auto &[arr, stages] : array_stages) CHECK(stages.size() == 1);
    }
}

TEST_CASE("layout reports are byte-identical across runs") {
    std::string src = count_pkt_src();
    auto render = [&]() {
        std::string err;
        auto built = lucid::test::build_all(src, "t", err);
        REQUIRE_MESSAGE(built.has_value(), err);
        return layout_to_json(built->layout);
    };
    CHECK(render() == render());
}

TEST_CASE("empty layouts report zeros") {
    Built b = eliminate_src("event h();\nhandle h() { }\n");
    auto placed = greedy_merge(std::move(b.guarded), PipelineConfig{}, 1);
    auto *layout = std::get_if<PipelineLayout>(&placed);
    REQUIRE(layout != nullptr);
    LayoutReport r = layout_report(*layout);
    CHECK(r.stages_used == 0);
    CHECK(r.tables_total == 0);
}
