#include <doctest.h>

#include <random>

#include "lucid/driver.hpp"
#include "lucid/effects.hpp"
#include "lucid/parser.hpp"
#include "lucid/resolver.hpp"
#include "lucid/stage_solver.hpp"

#include "support/progen.hpp"

using namespace lucid;

namespace {

struct CheckResult {
    bool ok;
    Diagnostics diags;
    CheckedProgram checked;
};

CheckResult check_src(const std::string &src) {
    CheckResult out{false, {}, {}};
    auto p = parse_source(src, "t", out.diags);
    REQUIRE_MESSAGE(p.has_value(), diagnostics_to_text(out.diags));
    REQUIRE_MESSAGE(resolve_names(*p, out.diags), diagnostics_to_text(out.diags));
    auto checked = check_program(*p, out.diags);
    out.ok = checked.has_value();
    if (checked) out.checked = std::move(*checked);
    return out;
}

const std::string kBadOrdering = "const int SIZE = 16;\n"
                                 "global arr1 = new Array<<32>>(SIZE);\n"
                                 "global arr2 = new Array<<32>>(SIZE);\n"
                                 "event setArr1(int idx, int data);\n"
                                 "event setArr2(int idx, int data);\n"
                                 "handle setArr1(int idx, int data) {\n"
                                 "    int x = Array.get(arr2, idx);\n"
                                 "    Array.set(arr1, idx, x);\n"
                                 "}\n"
                                 "handle setArr2(int idx, int data) {\n"
                                 "    int x = Array.get(arr1, idx);\n"
                                 "    Array.set(arr2, idx, x);\n"
                                 "}\n";

} // namespace

TEST_CASE("the disordered program yields exactly one OrderError, on setArr1") {
    CheckResult r = check_src(kBadOrdering);
    CHECK(!r.ok);
    REQUIRE(r.diags.count(DiagKind::OrderError) == 1);
    REQUIRE(r.diags.items.size() == 1);
    const Diag &d = r.diags.items[0];
    CHECK(d.handler == "setArr1");
    CHECK(d.message.find("arr2") != std::string::npos);
    CHECK(d.message.find("arr1") != std::string::npos);
    CHECK(d.message.find("opposite order") != std::string::npos);
    // both offending accesses carry spans
    REQUIRE(d.spans.size() == 2);
    CHECK(d.spans[0].start_line == 7); // the arr2 access
    CHECK(d.spans[1].start_line == 8); // the arr1 access
}

TEST_CASE("single-global handler checks with exit stage 1") {
    CheckResult r = check_src("global a = new Array<<32>>(4);\n"
                              "event h(int i);\n"
                              "handle h(int i) { Array.set(a, i, 0); }\n");
    REQUIRE_MESSAGE(r.ok, diagnostics_to_text(r.diags));
    CHECK(r.checked.handler_exit.at("h") == 1);
}

TEST_CASE("declaration order governs: swapping the globals flips acceptance") {
    const char *body = "event h1(int i);\nevent h2(int i);\n"
                       "handle h1(int i) { int x = Array.get(a, i); Array.set(b, i, x); }\n"
                       "handle h2(int i) { Array.setm(a, i, incr, 1); int y = Array.get(b, i); }\n";
    std::string memop = "memop incr(int c, int x){ return c + x; }\n";
    std::string ab = memop + "global a = new Array<<32>>(4);\nglobal b = new Array<<32>>(4);\n";
    std::string ba = memop + "global b = new Array<<32>>(4);\nglobal a = new Array<<32>>(4);\n";
    CHECK(check_src(ab + body).ok);
    CheckResult r = check_src(ba + body);
    CHECK(!r.ok);
    // both handlers access (a then b), so both invert under the swapped order
    CHECK(r.diags.count(DiagKind::OrderError) == 2);
}

TEST_CASE("handlers may skip stages") {
    CheckResult r = check_src("global a = new Array<<32>>(4);\n"
                              "global b = new Array<<32>>(4);\n"
                              "global c = new Array<<32>>(4);\n"
                              "event h(int i);\n"
                              "handle h(int i) { Array.set(c, i, 1); }\n");
    CHECK(r.ok);
    CHECK(r.checked.handler_exit.at("h") == 3);
}

TEST_CASE("re-accessing one global on a path is a ReAccessError") {
    CheckResult r = check_src("global a = new Array<<32>>(4);\n"
                              "event h(int i);\n"
                              "handle h(int i) { Array.set(a, i, 1); Array.set(a, i, 2); }\n");
    CHECK(!r.ok);
    CHECK(r.diags.count(DiagKind::ReAccessError) == 1);
}

TEST_CASE("each arm of a branch may access the same global") {
    CheckResult r = check_src("global a = new Array<<32>>(4);\n"
                              "event h(int i);\n"
                              "handle h(int i) {\n"
                              "    if (i == 0) { Array.set(a, i, 1); }\n"
                              "    else { Array.set(a, i, 2); }\n"
                              "}\n");
    CHECK(r.ok);
    CHECK(r.checked.handler_exit.at("h") == 1);
}

TEST_CASE("function effect signatures order their array parameters") {
    std::string fn = "fun int f(Array x, Array y) {\n"
                     "    int p = Array.get(x, 0);\n"
                     "    int q = Array.get(y, 0);\n"
                     "    return p + q;\n"
                     "}\n";
    std::string good = "global a = new Array<<32>>(4);\nglobal b = new Array<<32>>(4);\n" + fn +
                       "event h();\nhandle h() { int r = f(a, b); }\n";
    std::string bad = "global a = new Array<<32>>(4);\nglobal b = new Array<<32>>(4);\n" + fn +
                      "event h();\nhandle h() { int r = f(b, a); }\n";
    CHECK(check_src(good).ok);
    CheckResult r = check_src(bad);
    CHECK(!r.ok);
    REQUIRE(r.diags.count(DiagKind::OrderError) == 1);
    const Diag &d = r.diags.items[0];
    CHECK(d.message.find("'b'") != std::string::npos);
    CHECK(d.message.find("'a'") != std::string::npos);
}

TEST_CASE("access-free calls preserve the current stage (regression)") {
    // the call itself must not reset the stage: g1-then-g0 stays disordered
    // even with a pure call in between
    CheckResult r = check_src("global a = new Array<<32>>(4);\n"
                              "global b = new Array<<32>>(4);\n"
                              "fun int mix(int x, int y) { return x + y; }\n"
                              "event h(int i);\n"
                              "handle h(int i) {\n"
                              "    Array.set(b, i, 1);\n"
                              "    int t = mix(i, i);\n"
                              "    Array.set(a, i, t);\n"
                              "}\n");
    CHECK(!r.ok);
    CHECK(r.diags.count(DiagKind::OrderError) == 1);
}

TEST_CASE("calls compose with direct accesses") {
    std::string prelude = "global a = new Array<<32>>(4);\nglobal b = new Array<<32>>(4);\n"
                          "fun int readb(int i) { return Array.get(b, i); }\n"
                          "event h(int i);\n";
    // read b inside the function, then touch a directly: inverted
    CheckResult bad = check_src(prelude +
                                "handle h(int i) { int x = readb(i); Array.set(a, i, x); }\n");
    CHECK(!bad.ok);
    // the other direction is fine
    CheckResult good = check_src(prelude +
                                 "handle h(int i) { Array.set(a, i, 1); int x = readb(i); }\n");
    CHECK(good.ok);
}

TEST_CASE("functions may be checked and reused at different stages") {
    CheckResult r = check_src("global a = new Array<<32>>(4);\n"
                              "global b = new Array<<32>>(4);\n"
                              "fun int rd(Array x, int i) { return Array.get(x, i); }\n"
                              "event h(int i);\n"
                              "handle h(int i) { int p = rd(a, i); int q = rd(b, i); }\n");
    CHECK(r.ok);
    CHECK(r.checked.handler_exit.at("h") == 2);
}

TEST_CASE("type errors: width mismatches are caught") {
    CheckResult r = check_src("event h(int<8> x, int<16> y);\n"
                              "handle h(int<8> x, int<16> y) { int<8> z = x + y; }\n");
    CHECK(!r.ok);
    CHECK(r.diags.has(DiagKind::TypeError));
}

TEST_CASE("type errors: conditions must be boolean") {
    CheckResult r = check_src("event h(int x);\nhandle h(int x) { if (x + 1) { x = 0; } }\n");
    CHECK(!r.ok);
    CHECK(r.diags.has(DiagKind::TypeError));
}

TEST_CASE("auto locals adopt the initializer type") {
    CheckResult r = check_src("global a = new Array<<16>>(4);\n"
                              "event h(int i);\n"
                              "handle h(int i) { auto v = Array.get(a, i); int<16> w = v; }\n");
    CHECK(r.ok);
    CHECK(r.checked.handler_vars.at("h").at("v").width == 16);
}

TEST_CASE("memop argument width unifies with the array cell width") {
    CheckResult r = check_src("global a = new Array<<8>>(4);\n"
                              "memop plus(int c, int x){ return c + x; }\n"
                              "event h(int i, int big);\n"
                              "handle h(int i, int big) { Array.setm(a, i, plus, big); }\n");
    CHECK(!r.ok); // big is 32 bits, the cell is 8
    CHECK(r.diags.has(DiagKind::TypeError));
}

TEST_CASE("return placement: only functions, and only in tail position") {
    CheckResult in_handler =
        check_src("event h();\nhandle h() { return; }\n");
    CHECK(!in_handler.ok);
    CheckResult non_tail = check_src("fun int f(int a) { return a; int b = a; return b; }\n");
    CHECK(!non_tail.ok);
    CheckResult tail_if = check_src("fun int f(int a) {\n"
                                    "    if (a == 0) { return 1; } else { return 2; }\n"
                                    "}\n");
    CHECK(tail_if.ok);
    CheckResult missing = check_src("fun int f(int a) { if (a == 0) { return 1; } }\n");
    CHECK(!missing.ok);
}

TEST_CASE("branch arms are interchangeable (acceptance is arm-order independent)") {
    auto flip = [](bool swapped) {
        std::string t = "Array.set(a, i, 1);";
        std::string e = "Array.set(b, i, 2);";
        if (swapped) std::swap(t, e);
        return "global a = new Array<<32>>(4);\nglobal b = new Array<<32>>(4);\n"
               "event h(int i);\nhandle h(int i) {\n"
               "    if (i == 0) { " + t + " } else { " + e + " }\n}\n";
    };
    CHECK(check_src(flip(false)).ok == check_src(flip(true)).ok);
}

TEST_CASE("declaration-order completeness: increasing access programs always check") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 50; trial++) {
        int n = 1 + (int)(rng() % 5);
        std::string src;
        for (int i = 0; i < n; i++)
            src += "global g" + std::to_string(i) + " = new Array<<32>>(8);\n";
        src += "event h(int i);\nhandle h(int i) {\n";
        // strictly increasing random subset
        for (int i = 0; i < n; i++) {
            if (rng() % 2) {
                src += "    Array.set(g" + std::to_string(i) + ", i & 7, " +
                       std::to_string(rng() % 100) + ");\n";
            }
        }
        src += "}\n";
        CAPTURE(src);
        CHECK(check_src(src).ok);
    }
}

TEST_CASE("generated programs always effect-check (generator soundness)") {
    for (uint64_t seed = 100; seed < 160; seed++) {
        std::string src = lucid::test::generate_program(seed);
        CAPTURE(seed);
        CheckResult r = check_src(src);
        CHECK_MESSAGE(r.ok, diagnostics_to_text(r.diags), "\n", src);
    }
}

// ---- constraint solver unit tests ----

TEST_CASE("solver: mutual <= constraints pin both variables to zero") {
    StageGraph g;
    int x = g.fresh("x"), y = g.fresh("y");
    g.le(x, y);
    g.le(y, x);
    auto r = g.solve();
    auto *sol = std::get_if<StageSolution>(&r);
    REQUIRE(sol != nullptr);
    CHECK(sol->values[x] == 0);
    CHECK(sol->values[y] == 0);
}

TEST_CASE("solver: {x+1 <= y, y+1 <= x} is a two-constraint contradiction") {
    StageGraph g;
    int x = g.fresh("x"), y = g.fresh("y");
    g.ge(y, x, 1); // x + 1 <= y
    g.ge(x, y, 1); // y + 1 <= x
    auto r = g.solve();
    auto *bad = std::get_if<StageContradiction>(&r);
    REQUIRE(bad != nullptr);
    CHECK(bad->cycle.size() == 2);
}

TEST_CASE("solver: minimal assignment is the longest-path labeling") {
    StageGraph g;
    int x = g.fresh("x"), y = g.fresh("y"), z = g.fresh("z");
    g.successor(y, x); // y = x + 1
    g.successor(z, y); // z = y + 1
    g.ge(x, StageGraph::kZero, 2);
    auto r = g.solve();
    auto *sol = std::get_if<StageSolution>(&r);
    REQUIRE(sol != nullptr);
    CHECK(sol->values[x] == 2);
    CHECK(sol->values[y] == 3);
    CHECK(sol->values[z] == 4);
}

TEST_CASE("solver: upper bounds against constants participate in cycles") {
    StageGraph g;
    int x = g.fresh("x");
    g.ge(x, StageGraph::kZero, 5); // x >= 5
    g.upper(x, 3);                 // x <= 3
    auto r = g.solve();
    CHECK(std::holds_alternative<StageContradiction>(r));
}

TEST_CASE("solver: projection preserves implied constraints") {
    StageGraph g;
    int x = g.fresh("x"), mid = g.fresh("m"), y = g.fresh("y");
    g.successor(mid, x);
    g.successor(y, mid);
    auto proj = g.project({x, y});
    // x + 2 <= y must survive the elimination of mid
    bool found = false;
    for (const auto &c : proj)
        if (c.from == x && c.to == y && c.weight == 2) found = true;
    CHECK(found);
}
