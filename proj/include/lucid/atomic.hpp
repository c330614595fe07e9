#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "lucid/ast.hpp"

namespace lucid {

// Operand of an atomic statement: a local/parameter/temporary, a folded
// constant, or the handler's ingress timestamp.
struct Operand {
    enum class Kind { Local, Const, Time } kind = Kind::Const;
    std::string name;
    uint64_t value = 0;
    uint32_t width = 32;

    static Operand local(std::string n, uint32_t w) {
        return Operand{Kind::Local, std::move(n), 0, w};
    }
    static Operand constant(uint64_t v, uint32_t w = 32) { return Operand{Kind::Const, {}, v, w}; }
    static Operand time() { return Operand{Kind::Time, {}, 0, 32}; }
    bool is_local() const { return kind == Kind::Local; }
    std::string str() const {
        switch (kind) {
        case Kind::Local: return name;
        case Kind::Const: return std::to_string(value);
        case Kind::Time: return "%time";
        }
        return "?";
    }
};

enum class CmpKind { Eq, Ne, Lt, Gt, Le, Ge };
const char *cmp_text(CmpKind c);
CmpKind cmp_negate(CmpKind c);
bool cmp_eval(CmpKind c, uint64_t a, uint64_t b);

// The three atomic table kinds, plus event generation and the handler
// dispatch selector.
struct AtomicOp { // dst = a (op b)?  or a hash
    enum class Detail { Copy, Bin, Hash } detail = Detail::Copy;
    std::string dst;
    uint32_t width = 32;
    BinKind op = BinKind::Add;
    Operand a, b;
    // Hash
    uint32_t hash_width = 0;
    uint64_t hash_poly = 0;
    std::vector<Operand> hash_args;
};

struct AtomicMemOp {
    std::string array;
    int array_index = -1; // decl_index
    uint32_t cell_width = 32;
    Operand index;
    std::optional<std::string> get_memop; // memop names; empty optional = none
    Operand get_arg;
    std::optional<std::string> set_memop;
    Operand set_arg;
    std::optional<Operand> set_value;     // plain Array.set stores this value
    std::optional<std::string> result;    // local receiving the get result
};

struct AtomicBranch {
    Operand value; // local compared against a constant
    CmpKind cmp = CmpKind::Eq;
    uint64_t constant = 0;
};

struct AtomicGenerate {
    std::string event;
    int event_id = -1;
    bool multicast = false;
    std::vector<Operand> args;
    Operand delay = Operand::constant(0);
    enum class DestKind { Self, Switch, Group } dest_kind = DestKind::Self;
    Operand dest_switch = Operand::constant(0); // Switch
    std::string dest_group;                     // Group
};

struct AtomicNoop {};

// Selects the handler subgraph by event id (one per program).
struct AtomicDispatch {};

struct AtomicStmt {
    std::variant<AtomicOp, AtomicMemOp, AtomicBranch, AtomicGenerate, AtomicNoop, AtomicDispatch> v;
    Span span;
    const char *kind_name() const;
};

// Structured normalized form of one handler: atomic statements with branch
// nesting still explicit.
struct NormStmt;
using NormBlock = std::vector<NormStmt>;
struct NormStmt {
    AtomicStmt atom; // Branch carries arms; other kinds are leaves
    NormBlock then_blk, else_blk;
};

size_t norm_count(const NormBlock &b); // total atomic statements, branches included

struct NormHandler {
    std::string event;
    int event_id = -1;
    std::vector<std::string> params;
    NormBlock body;
    std::vector<std::string> notes; // e.g. wide-compare rewrite flags
};

// ---- the atomic table graph (per-handler DAGs under a dispatch root) ----

struct TableNode {
    int id = -1;
    AtomicStmt stmt;
    std::string name;    // deterministic table name
    std::string handler; // owning handler (empty for the dispatch root)
    int event_id = -1;
    // control successors: branch nodes use then/else; linear nodes use then
    int next_true = -1;
    int next_false = -1;
};

struct AtomicTableGraph {
    std::vector<TableNode> nodes;
    int dispatch_root = -1;
    std::map<std::string, int> handler_entry; // event name -> node id (-1 for empty)

    const TableNode &node(int id) const { return nodes[id]; }
    // Longest control path (table count) of one handler's subgraph.
    int longest_path(const std::string &event) const;
    // Longest over all handlers (the dispatch root is not a pipeline table).
    int longest_path() const;
};

} // namespace lucid
