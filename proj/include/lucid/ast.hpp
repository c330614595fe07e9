#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "lucid/span.hpp"

namespace lucid {

// A <size> expression: an integer literal or a reference to a const variable.
// The resolver folds const references into `value`.
struct SizeExpr {
    std::optional<std::string> const_ref;
    std::optional<uint32_t> value;

    static SizeExpr lit(uint32_t v) { return SizeExpr{std::nullopt, v}; }
    static SizeExpr name(std::string n) { return SizeExpr{std::move(n), std::nullopt}; }
    bool folded() const { return value.has_value(); }
    bool operator==(const SizeExpr &o) const {
        return const_ref == o.const_ref; // surface equality; folding is derived
    }
};

struct Ty {
    enum class Kind { Int, Bool, Void, Auto, ArrayRef, Event, Group };
    Kind kind = Kind::Int;
    // Int: cell width (absent means the 32-bit default).
    // ArrayRef: cell width when annotated, absent when inferred.
    std::optional<SizeExpr> width;

    static Ty simple(Kind k) { return Ty{k, std::nullopt}; }
    static Ty int_ty(std::optional<SizeExpr> w = std::nullopt) { return Ty{Kind::Int, std::move(w)}; }
    bool operator==(const Ty &o) const { return kind == o.kind && width == o.width; }
};

enum class BinKind { Add, Sub, Mul, BitAnd, BitOr, BitXor, Eq, Ne, Lt, Gt, Le, Ge, LAnd, LOr };

const char *binop_text(BinKind op);
bool binop_is_compare(BinKind op);

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

struct ValueE {
    bool is_bool = false;
    uint64_t v = 0;
    std::optional<SizeExpr> width; // explicit <size> suffix on int literals
};

struct VarE {
    std::string name;
};

struct BinE {
    BinKind op;
    ExprPtr lhs, rhs;
};

// Plain function/memop/event-constructor calls have an empty module;
// builtin calls carry it (Array.get, Sys.time, Event.delay, ...).
struct CallE {
    std::string module;
    std::string name;
    std::vector<ExprPtr> args;
    std::string full_name() const { return module.empty() ? name : module + "." + name; }
};

struct HashE {
    SizeExpr width;
    std::vector<ExprPtr> args; // first argument is the polynomial
};

struct Expr {
    Span span;
    std::variant<ValueE, VarE, BinE, CallE, HashE> v;
};

struct Stmt;
using StmtPtr = std::unique_ptr<Stmt>;
using Block = std::vector<StmtPtr>;

struct IfS {
    ExprPtr cond;
    Block then_blk;
    Block else_blk; // empty when absent
    bool has_else = false;
};
struct LocalS {
    Ty ty;
    std::string name;
    ExprPtr init; // may be null
};
struct AssignS {
    std::string name;
    ExprPtr value;
};
struct ExprS {
    ExprPtr expr;
};
struct GenerateS {
    ExprPtr event;
    bool multicast = false; // mgenerate
};
struct ReturnS {
    ExprPtr value; // may be null
};

struct Stmt {
    Span span;
    std::variant<IfS, LocalS, AssignS, ExprS, GenerateS, ReturnS> v;
};

struct Param {
    Ty ty;
    std::string name;
    Span span;
};

enum class EventQualifier { None, Support, PacketEntry, PacketExit };

struct ConstDecl {
    Ty ty;
    std::string name;
    ExprPtr value;
};
struct GlobalDecl {
    std::string name;
    std::string module; // "Array" is the only supported module
    SizeExpr cell_width;
    ExprPtr length;
    // filled by the resolver
    int decl_index = -1;
    uint32_t width = 0;
    uint32_t len = 0;
};
struct GroupDecl {
    std::string name;
    std::vector<uint32_t> members;
};
struct EventDecl {
    std::string name;
    std::vector<Param> params;
    EventQualifier qual = EventQualifier::None;
    int event_id = -1; // declaration order, filled by the resolver
};
struct HandlerDecl {
    std::string event;
    std::vector<Param> params;
    Block body;
};
struct FunDecl {
    Ty ret;
    std::string name;
    std::vector<Param> params;
    Block body;
};
struct MemopDecl {
    std::string name;
    std::vector<Param> params;
    Block body;
};

struct Decl {
    Span span;
    std::variant<ConstDecl, GlobalDecl, GroupDecl, EventDecl, HandlerDecl, FunDecl, MemopDecl> v;
};

// Top-level name classification produced by the resolver.
enum class TopKind { Const, Global, Group, Event, Handler, Fun, Memop };

struct Program {
    std::string file;
    std::vector<Decl> decls;

    // Resolver-populated indexes (decl vector positions).
    std::map<std::string, size_t> consts, globals, groups, events, funs, memops;
    std::map<std::string, size_t> handlers;       // keyed by event name
    std::vector<size_t> globals_in_order;         // by decl_index
    std::vector<size_t> events_in_order;          // by event_id
    std::map<std::string, uint64_t> const_values; // folded constant values
    bool resolved = false;

    const GlobalDecl &global_at(int decl_index) const {
        return std::get<GlobalDecl>(decls[globals_in_order[decl_index]].v);
    }
    const EventDecl *find_event(const std::string &name) const {
        auto it = events.find(name);
        return it == events.end() ? nullptr : &std::get<EventDecl>(decls[it->second].v);
    }
    const HandlerDecl *find_handler(const std::string &event) const {
        auto it = handlers.find(event);
        return it == handlers.end() ? nullptr : &std::get<HandlerDecl>(decls[it->second].v);
    }
    const FunDecl *find_fun(const std::string &name) const {
        auto it = funs.find(name);
        return it == funs.end() ? nullptr : &std::get<FunDecl>(decls[it->second].v);
    }
    const MemopDecl *find_memop(const std::string &name) const {
        auto it = memops.find(name);
        return it == memops.end() ? nullptr : &std::get<MemopDecl>(decls[it->second].v);
    }
    const GlobalDecl *find_global(const std::string &name) const {
        auto it = globals.find(name);
        return it == globals.end() ? nullptr : &std::get<GlobalDecl>(decls[it->second].v);
    }
    const GroupDecl *find_group(const std::string &name) const {
        auto it = groups.find(name);
        return it == groups.end() ? nullptr : &std::get<GroupDecl>(decls[it->second].v);
    }
};

// Deep structural equality, ignoring spans (used by round-trip tests).
bool ast_equal(const Program &a, const Program &b);
bool ast_equal(const Expr &a, const Expr &b);
bool ast_equal(const Stmt &a, const Stmt &b);

ExprPtr clone_expr(const Expr &e);
StmtPtr clone_stmt(const Stmt &s);
Block clone_block(const Block &b);

} // namespace lucid
