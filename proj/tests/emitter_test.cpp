#include <doctest.h>

#include <set>

#include "lucid/driver.hpp"
#include "lucid/emitter.hpp"

#include "support/progen.hpp"

using namespace lucid;

namespace {

std::string count_pkt_src() {
    bool ok = false;
    std::string src = read_file(std::string(LUCID_TESTDATA_DIR) + "/count_pkt.lucid", ok);
    REQUIRE(ok);
    return src;
}

lucid::test::BuiltProgram build(const std::string &src) {
    std::string err;
    auto b = lucid::test::build_all(src, "t", err);
    REQUIRE_MESSAGE(b.has_value(), err);
    return std::move(*b);
}

} // namespace

TEST_CASE("operation table template") {
    AtomicOp op;
    op.detail = AtomicOp::Detail::Bin;
    op.dst = "idx";
    op.op = BinKind::Add;
    op.a = Operand::local("idx", 32);
    op.b = Operand::constant(16, 32);
    CheckedProgram checked;
    std::string text = emit_table(AtomicStmt{op, {}}, "idx_add", checked);
    CHECK(text == "action do_idx_add {idx = idx + 16;}\n"
                  "table idx_add {\n"
                  "\tactions = {do_idx_add;}\n"
                  "\tconst default_action = {do_idx_add;}\n"
                  "}\n");
}

TEST_CASE("memory operation table template carries the memop body") {
    lucid::test::BuiltProgram b = build(count_pkt_src());
    AtomicMemOp m;
    m.array = "pcts";
    m.array_index = 1;
    m.cell_width = 32;
    m.index = Operand::local("idx", 32);
    m.set_memop = "plus";
    m.set_arg = Operand::constant(1, 32);
    std::string text = emit_table(AtomicStmt{m, {}}, "setm_1", b.fe.checked);
    CHECK(text.find("RegisterAction<bit<32>,bit<32>,bit<32>>") != std::string::npos);
    CHECK(text.find("(pcts) setm_1_alu") != std::string::npos);
    CHECK(text.find("mem = mem + 1;") != std::string::npos);
    CHECK(text.find("setm_1_alu.execute(idx)") != std::string::npos);
}

TEST_CASE("branch table template uses ordered ternary entries") {
    AtomicBranch br;
    br.value = Operand::local("proto", 32);
    br.cmp = CmpKind::Ne;
    br.constant = 6;
    CheckedProgram checked;
    std::string text = emit_table(AtomicStmt{br, {}}, "if_0", checked);
    CHECK(text.find("keys = {proto : ternary;}") != std::string::npos);
    CHECK(text.find("(6) : if_0_false;") != std::string::npos);
    CHECK(text.find("( _ ) : if_0_true;") != std::string::npos);
}

TEST_CASE("optimized pipeline uses exactly four stage pragmas for count_pkt") {
    lucid::test::BuiltProgram b = build(count_pkt_src());
    std::string text = emit_pipeline(b.layout, b.fe.program, b.fe.checked);
    std::set<std::string> stages;
    for (size_t pos = text.find("@stage("); pos != std::string::npos;
         pos = text.find("@stage(", pos + 1)) {
        size_t end = text.find(')', pos);
        stages.insert(text.substr(pos, end - pos + 1));
    }
    CHECK(stages == std::set<std::string>{"@stage(0)", "@stage(1)", "@stage(2)", "@stage(3)"});
    // every table is applied exactly once, in nondecreasing stage order
    size_t apply = text.find("apply {");
    REQUIRE(apply != std::string::npos);
    int applies = 0;
    for (size_t pos = text.find(".apply();", apply); pos != std::string::npos;
         pos = text.find(".apply();", pos + 1))
        applies++;
    CHECK(applies == layout_report(b.layout).tables_total);
    // pragmas precede each table
    CHECK(text.find("@ignore_dependencies(") != std::string::npos);
}

TEST_CASE("emitted header documents the event wire layout") {
    lucid::test::BuiltProgram b = build(count_pkt_src());
    std::string text = emit_pipeline(b.layout, b.fe.program, b.fe.checked);
    CHECK(text.find("ev_id   : bit<16>") != std::string::npos);
    CHECK(text.find("delay   : bit<32>") != std::string::npos);
    CHECK(text.find("event 0: count_pkt(bit<32> dst, bit<32> proto)") != std::string::npos);
}

TEST_CASE("empty programs emit an empty apply block") {
    lucid::test::BuiltProgram b = build("event h();\nhandle h() { }\n");
    std::string text = emit_pipeline(b.layout, b.fe.program, b.fe.checked);
    CHECK(text.find("apply {\n}\n") != std::string::npos);
}

TEST_CASE("golden file: count_pkt.p4") {
    lucid::test::BuiltProgram b = build(count_pkt_src());
    bool ok = false;
    std::string golden =
        read_file(std::string(LUCID_TESTDATA_DIR) + "/golden/count_pkt.p4", ok);
    REQUIRE(ok);
    CHECK(emit_pipeline(b.layout, b.fe.program, b.fe.checked) == golden);
}

TEST_CASE("emission is deterministic") {
    lucid::test::BuiltProgram b1 = build(count_pkt_src());
    lucid::test::BuiltProgram b2 = build(count_pkt_src());
    CHECK(emit_pipeline(b1.layout, b1.fe.program, b1.fe.checked) ==
          emit_pipeline(b2.layout, b2.fe.program, b2.fe.checked));
    CHECK(emit_unoptimized(b1.lowered.graph, b1.fe.program, b1.fe.checked) ==
          emit_unoptimized(b2.lowered.graph, b2.fe.program, b2.fe.checked));
}

TEST_CASE("unoptimized emission keeps branch tables and the dispatch selector") {
    lucid::test::BuiltProgram b = build(count_pkt_src());
    std::string text = emit_unoptimized(b.lowered.graph, b.fe.program, b.fe.checked);
    CHECK(text.find("select_event") != std::string::npos);
    CHECK(text.find("count_pkt_branch_0") != std::string::npos);
    // seven distinct stage depths along the control path
    std::set<std::string> stages;
    for (size_t pos = text.find("@stage("); pos != std::string::npos;
         pos = text.find("@stage(", pos + 1)) {
        size_t end = text.find(')', pos);
        stages.insert(text.substr(pos, end - pos + 1));
    }
    CHECK(stages.size() == 7);
}
