#include "lucid/resolver.hpp"

#include <set>

namespace lucid {

namespace {

struct Resolver {
    Program &p;
    Diagnostics &diags;
    // Top-level names visible so far (declaration order scoping: a name can
    // only be referenced after its declaration, which also rules out
    // recursive functions).
    std::map<std::string, TopKind> visible;

    void err(DiagKind k, const Span &sp, std::string msg) { diags.add(k, sp, std::move(msg)); }

    bool fold_size(SizeExpr &s, const Span &sp) {
        if (s.folded()) return true;
        auto it = p.const_values.find(*s.const_ref);
        if (it == p.const_values.end()) {
            bool bound = visible.count(*s.const_ref) > 0;
            err(bound ? DiagKind::NonConstantSize : DiagKind::UnboundName, sp,
                "size '" + *s.const_ref + "' is not a declared integer constant");
            return false;
        }
        s.value = (uint32_t)it->second;
        return true;
    }

    bool fold_ty(Ty &t, const Span &sp) {
        if (t.width) return fold_size(*t.width, sp);
        return true;
    }

    // Evaluates a constant expression (literals and const refs, with the
    // surface operators). Used for const initializers and array lengths.
    std::optional<uint64_t> const_eval(const Expr &e) {
        if (const auto *v = std::get_if<ValueE>(&e.v)) return v->v;
        if (const auto *var = std::get_if<VarE>(&e.v)) {
            auto it = p.const_values.find(var->name);
            if (it != p.const_values.end()) return it->second;
            return std::nullopt;
        }
        if (const auto *b = std::get_if<BinE>(&e.v)) {
            auto l = const_eval(*b->lhs), r = const_eval(*b->rhs);
            if (!l || !r) return std::nullopt;
            switch (b->op) {
            case BinKind::Add: return *l + *r;
            case BinKind::Sub: return *l - *r;
            case BinKind::Mul: return *l * *r;
            case BinKind::BitAnd: return *l & *r;
            case BinKind::BitOr: return *l | *r;
            case BinKind::BitXor: return *l ^ *r;
            default: return std::nullopt;
            }
        }
        return std::nullopt;
    }

    void declare(const std::string &name, TopKind kind, const Span &sp) {
        if (visible.count(name)) {
            err(DiagKind::DuplicateName, sp, "duplicate top-level name '" + name + "'");
            return;
        }
        visible[name] = kind;
    }

    struct Scope {
        std::vector<std::set<std::string>> frames;
        // Local names are unique per body even across sibling arms, so later
        // passes can key per-handler tables by plain name.
        std::set<std::string> all;
        bool declared(const std::string &n) const {
            for (const auto &f : frames)
                if (f.count(n)) return true;
            return false;
        }
    };

    void resolve_var(const std::string &name, const Span &sp, const Scope &scope) {
        if (scope.declared(name)) return;
        auto it = visible.find(name);
        if (it == visible.end()) {
            err(DiagKind::UnboundName, sp, "unbound name '" + name + "'");
            return;
        }
        switch (it->second) {
        case TopKind::Const:
        case TopKind::Global:
        case TopKind::Group:
            return; // value-position uses; further checking is the effect checker's job
        default:
            err(DiagKind::UnboundName, sp,
                "'" + name + "' is not usable as a value here");
        }
    }

    void resolve_expr(Expr &e, Scope &scope) {
        std::visit(
            [&](auto &node) {
                using T = std::decay_t<decltype(node)>;
                if constexpr (std::is_same_v<T, ValueE>) {
                    if (node.width) fold_size(*node.width, e.span);
                } else if constexpr (std::is_same_v<T, VarE>) {
                    resolve_var(node.name, e.span, scope);
                } else if constexpr (std::is_same_v<T, BinE>) {
                    resolve_expr(*node.lhs, scope);
                    resolve_expr(*node.rhs, scope);
                } else if constexpr (std::is_same_v<T, CallE>) {
                    resolve_call(e.span, node, scope);
                } else if constexpr (std::is_same_v<T, HashE>) {
                    if (fold_size(node.width, e.span) && *node.width.value == 0)
                        err(DiagKind::NonConstantSize, e.span, "hash width must be positive");
                    for (auto &a : node.args) resolve_expr(*a, scope);
                }
            },
            e.v);
    }

    void resolve_call(const Span &sp, CallE &call, Scope &scope) {
        if (call.module.empty()) {
            auto it = visible.find(call.name);
            if (it == visible.end()) {
                err(DiagKind::UnboundName, sp, "unbound callable '" + call.name + "'");
            } else if (it->second != TopKind::Fun && it->second != TopKind::Event) {
                err(DiagKind::UnboundName, sp, "'" + call.name + "' is not callable");
            }
        } else if (call.module == "Array") {
            static const std::set<std::string> kArrayApi = {"get", "getm", "set", "setm",
                                                            "update"};
            if (!kArrayApi.count(call.name))
                err(DiagKind::UnsupportedBuiltin, sp,
                    "unknown Array method '" + call.name + "'");
        } else if (call.module == "Sys") {
            if (call.name != "time")
                err(DiagKind::UnsupportedBuiltin, sp,
                    "Sys." + call.name + " is not implemented (only Sys.time)");
        } else if (call.module == "Event") {
            if (call.name != "delay" && call.name != "locate")
                err(DiagKind::UnsupportedBuiltin, sp,
                    "unknown event combinator 'Event." + call.name + "'");
        } else {
            err(DiagKind::UnsupportedBuiltin, sp, "unknown module '" + call.module + "'");
        }
        for (auto &a : call.args) {
            // Bare memop/event/global/group names may appear as arguments.
            if (auto *var = std::get_if<VarE>(&a->v)) {
                if (!scope.declared(var->name) && visible.count(var->name)) continue;
            }
            resolve_expr(*a, scope);
        }
    }

    void declare_local(const std::string &name, const Span &sp, Scope &scope) {
        if (scope.all.count(name) || visible.count(name)) {
            err(DiagKind::DuplicateName, sp, "name '" + name + "' is already in scope");
            return;
        }
        scope.frames.back().insert(name);
        scope.all.insert(name);
    }

    void resolve_block(Block &b, Scope &scope) {
        scope.frames.emplace_back();
        for (auto &sp : b) resolve_stmt(*sp, scope);
        scope.frames.pop_back();
    }

    void resolve_stmt(Stmt &s, Scope &scope) {
        std::visit(
            [&](auto &node) {
                using T = std::decay_t<decltype(node)>;
                if constexpr (std::is_same_v<T, IfS>) {
                    resolve_expr(*node.cond, scope);
                    resolve_block(node.then_blk, scope);
                    resolve_block(node.else_blk, scope);
                } else if constexpr (std::is_same_v<T, LocalS>) {
                    fold_ty(node.ty, s.span);
                    if (node.init) resolve_expr(*node.init, scope);
                    declare_local(node.name, s.span, scope);
                } else if constexpr (std::is_same_v<T, AssignS>) {
                    resolve_expr(*node.value, scope);
                    if (!scope.declared(node.name))
                        err(DiagKind::UnboundName, s.span,
                            "assignment to undeclared local '" + node.name + "'");
                } else if constexpr (std::is_same_v<T, ExprS>) {
                    resolve_expr(*node.expr, scope);
                } else if constexpr (std::is_same_v<T, GenerateS>) {
                    resolve_expr(*node.event, scope);
                } else if constexpr (std::is_same_v<T, ReturnS>) {
                    if (node.value) resolve_expr(*node.value, scope);
                }
            },
            s.v);
    }

    Scope param_scope(std::vector<Param> &params) {
        Scope scope;
        scope.frames.emplace_back();
        for (auto &pa : params) {
            fold_ty(pa.ty, pa.span);
            if (scope.frames.back().count(pa.name) || visible.count(pa.name))
                err(DiagKind::DuplicateName, pa.span,
                    "parameter '" + pa.name + "' is already in scope");
            scope.frames.back().insert(pa.name);
            scope.all.insert(pa.name);
        }
        return scope;
    }

    bool params_match(const std::vector<Param> &a, const std::vector<Param> &b) {
        if (a.size() != b.size()) return false;
        for (size_t i = 0; i < a.size(); i++) {
            const Ty &ta = a[i].ty, &tb = b[i].ty;
            if (ta.kind != tb.kind) return false;
            uint32_t wa = ta.width && ta.width->folded() ? *ta.width->value : 32;
            uint32_t wb = tb.width && tb.width->folded() ? *tb.width->value : 32;
            if (ta.kind == Ty::Kind::Int && wa != wb) return false;
        }
        return true;
    }

    bool run() {
        for (size_t i = 0; i < p.decls.size(); i++) {
            Decl &d = p.decls[i];
            std::visit(
                [&](auto &node) {
                    using T = std::decay_t<decltype(node)>;
                    if constexpr (std::is_same_v<T, ConstDecl>) {
                        fold_ty(node.ty, d.span);
                        auto v = const_eval(*node.value);
                        if (!v) {
                            err(DiagKind::NonConstantSize, d.span,
                                "const initializer for '" + node.name +
                                    "' is not a compile-time constant");
                        }
                        declare(node.name, TopKind::Const, d.span);
                        p.consts[node.name] = i;
                        if (v) p.const_values[node.name] = *v;
                    } else if constexpr (std::is_same_v<T, GlobalDecl>) {
                        if (node.module != "Array") {
                            err(DiagKind::UnsupportedModule, d.span,
                                "unknown global module '" + node.module +
                                    "' (only Array is supported)");
                        }
                        bool ok = fold_size(node.cell_width, d.span);
                        if (ok) {
                            node.width = *node.cell_width.value;
                            if (node.width == 0 || node.width > 32)
                                err(DiagKind::NonConstantSize, d.span,
                                    "cell width must be in 1..32");
                        }
                        auto len = const_eval(*node.length);
                        if (!len) {
                            err(DiagKind::NonConstantSize, d.span,
                                "array length for '" + node.name +
                                    "' is not a compile-time constant");
                        } else {
                            node.len = (uint32_t)*len;
                            if (node.len == 0)
                                err(DiagKind::NonConstantSize, d.span,
                                    "array length must be positive");
                        }
                        node.decl_index = (int)p.globals_in_order.size();
                        declare(node.name, TopKind::Global, d.span);
                        p.globals[node.name] = i;
                        p.globals_in_order.push_back(i);
                    } else if constexpr (std::is_same_v<T, GroupDecl>) {
                        if (node.members.empty())
                            err(DiagKind::NonConstantSize, d.span,
                                "group '" + node.name + "' must be non-empty");
                        declare(node.name, TopKind::Group, d.span);
                        p.groups[node.name] = i;
                    } else if constexpr (std::is_same_v<T, EventDecl>) {
                        Scope scope = param_scope(node.params);
                        (void)scope;
                        node.event_id = (int)p.events_in_order.size();
                        declare(node.name, TopKind::Event, d.span);
                        p.events[node.name] = i;
                        p.events_in_order.push_back(i);
                    } else if constexpr (std::is_same_v<T, HandlerDecl>) {
                        if (p.handlers.count(node.event)) {
                            err(DiagKind::DuplicateName, d.span,
                                "duplicate handler for event '" + node.event + "'");
                        }
                        Scope scope = param_scope(node.params);
                        const EventDecl *ev = p.find_event(node.event);
                        if (!ev) {
                            err(DiagKind::UnboundName, d.span,
                                "handler for undeclared event '" + node.event + "'");
                        } else if (!params_match(node.params, ev->params)) {
                            err(DiagKind::HandlerSignatureMismatch, d.span,
                                "handler '" + node.event +
                                    "' parameter list differs from its event declaration");
                        }
                        resolve_block(node.body, scope);
                        p.handlers[node.event] = i;
                    } else if constexpr (std::is_same_v<T, FunDecl>) {
                        fold_ty(node.ret, d.span);
                        Scope scope = param_scope(node.params);
                        resolve_block(node.body, scope);
                        declare(node.name, TopKind::Fun, d.span);
                        p.funs[node.name] = i;
                    } else if constexpr (std::is_same_v<T, MemopDecl>) {
                        Scope scope = param_scope(node.params);
                        resolve_block(node.body, scope);
                        declare(node.name, TopKind::Memop, d.span);
                        p.memops[node.name] = i;
                    }
                },
                d.v);
        }
        p.resolved = diags.empty();
        return p.resolved;
    }
};

} // namespace

bool resolve_names(Program &p, Diagnostics &diags) { return Resolver{p, diags, {}}.run(); }

NameKind lookup_top_level(const Program &p, const std::string &name) {
    if (p.consts.count(name)) return NameKind::Const;
    if (p.globals.count(name)) return NameKind::Global;
    if (p.groups.count(name)) return NameKind::Group;
    if (p.events.count(name)) return NameKind::Event;
    if (p.funs.count(name)) return NameKind::Fun;
    if (p.memops.count(name)) return NameKind::Memop;
    return NameKind::None;
}

} // namespace lucid
