#include <doctest.h>

#include "lucid/lexer.hpp"
#include "lucid/parser.hpp"
#include "lucid/printer.hpp"
#include "lucid/resolver.hpp"
#include "lucid/driver.hpp"

#include "support/progen.hpp"

using namespace lucid;

namespace {

Program parse_ok(const std::string &src) {
    Diagnostics diags;
    auto p = parse_source(src, "test.lucid", diags);
    REQUIRE_MESSAGE(p.has_value(), diagnostics_to_text(diags));
    return std::move(*p);
}

Program resolve_ok(const std::string &src) {
    Program p = parse_ok(src);
    Diagnostics diags;
    REQUIRE_MESSAGE(resolve_names(p, diags), diagnostics_to_text(diags));
    return p;
}

const std::string kEvprog = "event a();\n"
                            "event b();\n"
                            "event c();\n"
                            "const group GRP = {2, 3};\n"
                            "handle a() {\n"
                            "    generate b();\n"
                            "    mgenerate Event.delay(Event.locate(c(), GRP), 10ms);\n"
                            "}\n";

} // namespace

TEST_CASE("tokenize: simple declaration") {
    Diagnostics diags;
    auto toks = tokenize("int<32> x = 0;", "t", diags);
    REQUIRE(diags.empty());
    std::vector<Tok> kinds;
    for (const auto &t : toks) kinds.push_back(t.kind);
    CHECK(kinds == std::vector<Tok>{Tok::KwInt, Tok::Lt, Tok::IntLit, Tok::Gt, Tok::Ident,
                                    Tok::Assign, Tok::IntLit, Tok::Semi, Tok::Eof});
    CHECK(toks[2].ival == 32);
    CHECK(toks[4].text == "x");
}

TEST_CASE("tokenize: empty input yields only EOF") {
    Diagnostics diags;
    auto toks = tokenize("", "t", diags);
    CHECK(diags.empty());
    REQUIRE(toks.size() == 1);
    CHECK(toks[0].kind == Tok::Eof);
}

TEST_CASE("tokenize: illegal character is reported with its position") {
    Diagnostics diags;
    auto toks = tokenize("int`z", "t", diags);
    REQUIRE(diags.count(DiagKind::UnknownCharacter) == 1);
    CHECK(diags.items[0].spans[0].start_col == 4);
    (void)toks;
}

TEST_CASE("tokenize: comments are skipped") {
    Diagnostics diags;
    auto toks = tokenize("// a comment\nint x; // trailing\n", "t", diags);
    CHECK(diags.empty());
    CHECK(toks.size() == 4); // int, x, ;, eof
}

TEST_CASE("tokenize: time suffixes scale to nanoseconds") {
    Diagnostics diags;
    auto toks = tokenize("10ms 5us 7ns 1s", "t", diags);
    REQUIRE(diags.empty());
    CHECK(toks[0].ival == 10000000);
    CHECK(toks[1].ival == 5000);
    CHECK(toks[2].ival == 7);
    CHECK(toks[3].ival == 1000000000);
}

TEST_CASE("parse: the event-scheduling example program") {
    Program p = parse_ok(kEvprog);
    int events = 0, groups = 0, handlers = 0;
    for (const auto &d : p.decls) {
        if (std::holds_alternative<EventDecl>(d.v)) events++;
        if (std::holds_alternative<GroupDecl>(d.v)) groups++;
        if (std::holds_alternative<HandlerDecl>(d.v)) handlers++;
    }
    CHECK(events == 3);
    CHECK(groups == 1);
    CHECK(handlers == 1);
    const auto &h = std::get<HandlerDecl>(p.decls[4].v);
    REQUIRE(h.body.size() == 2);
    CHECK(std::get<GenerateS>(h.body[0]->v).multicast == false);
    CHECK(std::get<GenerateS>(h.body[1]->v).multicast == true);
    const auto &g = std::get<GroupDecl>(p.decls[3].v);
    CHECK(g.members == std::vector<uint32_t>{2, 3});
}

TEST_CASE("parse: memop declaration") {
    Program p = parse_ok("memop incr(int stored, int x){return stored + x;}");
    const auto &m = std::get<MemopDecl>(p.decls[0].v);
    CHECK(m.params.size() == 2);
    REQUIRE(m.body.size() == 1);
    const auto &ret = std::get<ReturnS>(m.body[0]->v);
    REQUIRE(ret.value != nullptr);
    const auto &bin = std::get<BinE>(ret.value->v);
    CHECK(bin.op == BinKind::Add);
}

TEST_CASE("parse: missing generate expression is a syntax error") {
    Diagnostics diags;
    auto p = parse_source("handle h() { generate ; }", "t", diags);
    CHECK(!p.has_value());
    REQUIRE(diags.count(DiagKind::SyntaxError) == 1);
    CHECK(diags.items[0].message.find("expected") != std::string::npos);
}

TEST_CASE("parse: global declarations and braceless if arms") {
    Program p = parse_ok("global tbl = new Array<<32>>(16);\n"
                         "event e(int x);\n"
                         "handle e(int x) {\n"
                         "    if (x == 0)\n"
                         "        x = 1;\n"
                         "    else\n"
                         "        x = 2;\n"
                         "}\n");
    const auto &g = std::get<GlobalDecl>(p.decls[0].v);
    CHECK(g.module == "Array");
    CHECK(*g.cell_width.value == 32);
}

TEST_CASE("resolve: globals are numbered by declaration order") {
    Program p = resolve_ok("global a = new Array<<32>>(16);\n"
                           "global b = new Array<<32>>(8);\n");
    CHECK(p.find_global("a")->decl_index == 0);
    CHECK(p.find_global("b")->decl_index == 1);
    CHECK(p.find_global("a")->len == 16);
    CHECK(p.find_global("b")->len == 8);
    // decl_index is a bijection onto 0..n-1
    CHECK(p.globals_in_order.size() == 2);
}

TEST_CASE("resolve: generate of an undeclared event is unbound") {
    Program p = parse_ok("event a();\nhandle a() { generate nope(); }\n");
    Diagnostics diags;
    CHECK(!resolve_names(p, diags));
    CHECK(diags.has(DiagKind::UnboundName));
}

TEST_CASE("resolve: sizes fold through constants") {
    Program p = resolve_ok("const int SZ = 16;\nglobal a = new Array<<32>>(SZ);\n");
    CHECK(p.find_global("a")->len == 16);
}

TEST_CASE("resolve: unknown size name is rejected") {
    Program p = parse_ok("global b = new Array<<zzz>>(4);\n");
    Diagnostics diags;
    CHECK(!resolve_names(p, diags));
    CHECK((diags.has(DiagKind::NonConstantSize) || diags.has(DiagKind::UnboundName)));
}

TEST_CASE("resolve: duplicate names and handler signature mismatches") {
    {
        Program p = parse_ok("event e();\nevent e();\n");
        Diagnostics diags;
        CHECK(!resolve_names(p, diags));
        CHECK(diags.has(DiagKind::DuplicateName));
    }
    {
        Program p = parse_ok("event e(int a);\nhandle e(int a, int b) { }\n");
        Diagnostics diags;
        CHECK(!resolve_names(p, diags));
        CHECK(diags.has(DiagKind::HandlerSignatureMismatch));
    }
    {
        Program p = parse_ok("event e(int<16> a);\nhandle e(int<32> a) { }\n");
        Diagnostics diags;
        CHECK(!resolve_names(p, diags));
        CHECK(diags.has(DiagKind::HandlerSignatureMismatch));
    }
}

TEST_CASE("resolve: only the Array module exists") {
    Program p = parse_ok("global q = new RingBuffer<<32>>(16);\n");
    Diagnostics diags;
    CHECK(!resolve_names(p, diags));
    CHECK(diags.has(DiagKind::UnsupportedModule));
}

TEST_CASE("resolve: Sys.random is parsed but not implemented") {
    Program p = parse_ok("event e();\nhandle e() { int x = Sys.random(); }\n");
    Diagnostics diags;
    CHECK(!resolve_names(p, diags));
    CHECK(diags.has(DiagKind::UnsupportedBuiltin));
}

TEST_CASE("round-trip: evprog") {
    Program p = parse_ok(kEvprog);
    Program q = parse_ok(pretty_print(p));
    CHECK(ast_equal(p, q));
}

TEST_CASE("round-trip: count_pkt") {
    bool ok = false;
    std::string src = read_file(std::string(LUCID_TESTDATA_DIR) + "/count_pkt.lucid", ok);
    REQUIRE(ok);
    Program p = parse_ok(src);
    Program q = parse_ok(pretty_print(p));
    CHECK(ast_equal(p, q));
}

TEST_CASE("round-trip: empty program prints as empty text") {
    Program p = parse_ok("");
    CHECK(pretty_print(p) == "");
}

TEST_CASE("round-trip: every grammar production survives") {
    const std::string src =
        "const int MAX = 255;\n"
        "const bool FLAG = true;\n"
        "const group ALL = {1, 2, 3};\n"
        "global tbl = new Array<<16>>(MAX);\n"
        "memop m(int a, int b) { if (a + b > 10) { return a; } else { return b; } }\n"
        "support event tick(int<8> n);\n"
        "packet entry event pkt_in(int dst);\n"
        "packet exit event pkt_out(int port);\n"
        "fun int helper(Array<<16>> arr, int i) {\n"
        "    int<16> v = Array.getm(arr, i, m, 4);\n"
        "    return 1;\n"
        "}\n"
        "handle tick(int<8> n) {\n"
        "    int<16> x = 5<16>;\n"
        "    int h = hash<32>(7, x, x ^ 3);\n"
        "    bool ok = h <= 100 && h != 2;\n"
        "    if (ok) {\n"
        "        Array.update(tbl, 0, m, 1, m, 2);\n"
        "    } else {\n"
        "        Array.set(tbl, 1, 3);\n"
        "    }\n"
        "    event ev = Event.locate(pkt_out(1), ALL);\n"
        "    mgenerate Event.delay(ev, 100us);\n"
        "}\n";
    Program p = parse_ok(src);
    Program q = parse_ok(pretty_print(p));
    CHECK(ast_equal(p, q));
    // printing is a fixed point after one round
    CHECK(pretty_print(p) == pretty_print(q));
}

TEST_CASE("round-trip: generated programs (property)") {
    for (uint64_t seed = 0; seed < 60; seed++) {
        std::string src = lucid::test::generate_program(seed);
        CAPTURE(seed);
        Program p = parse_ok(src);
        Program q = parse_ok(pretty_print(p));
        CHECK(ast_equal(p, q));
    }
}

TEST_CASE("width-suffix literals only bind when adjacent") {
    Program p = parse_ok("event e(int a);\nhandle e(int a) { bool c = a < 16; int d = 5<16>; }\n");
    const auto &h = std::get<HandlerDecl>(p.decls[1].v);
    const auto &c = std::get<LocalS>(h.body[0]->v);
    CHECK(std::holds_alternative<BinE>(c.init->v)); // comparison, not a sized literal
    const auto &d = std::get<LocalS>(h.body[1]->v);
    const auto &v = std::get<ValueE>(d.init->v);
    REQUIRE(v.width.has_value());
    CHECK(*v.width->value == 16);
}
