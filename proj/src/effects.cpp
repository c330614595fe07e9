#include "lucid/effects.hpp"

#include <algorithm>

#include "lucid/check.hpp"

#include "lucid/resolver.hpp"

namespace lucid {

namespace {

// Union-find over bit widths; a class is either pinned to a concrete width or
// still free (free classes default to 32 once checking ends).
class WidthTable {
  public:
    int fresh(std::optional<uint32_t> v = std::nullopt) {
        parent_.push_back((int)parent_.size());
        value_.push_back(v);
        return (int)parent_.size() - 1;
    }
    int find(int x) {
        while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
        return x;
    }
    bool unify(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return true;
        if (value_[a] && value_[b]) return *value_[a] == *value_[b];
        if (value_[a]) std::swap(a, b);
        parent_[a] = b;
        return true;
    }
    bool pin(int x, uint32_t w) {
        x = find(x);
        if (value_[x]) return *value_[x] == w;
        value_[x] = w;
        return true;
    }
    uint32_t resolve(int x) {
        if (x < 0) return 32;
        x = find(x);
        return value_[x].value_or(32);
    }

  private:
    std::vector<int> parent_;
    std::vector<std::optional<uint32_t>> value_;
};

struct VType {
    VKind k = VKind::Error;
    int width = -1;  // width class (Int, Array cell)
    int stage = -1;  // Array: stage variable in the active graph
    int global = -1; // Array: decl_index for direct global references
    std::string memop;

    static VType error() { return VType{}; }
    static VType of(VKind k) { return VType{k, -1, -1, -1, {}}; }
};

struct Checker {
    const Program &p;
    Diagnostics &diags;
    CheckedProgram out;
    WidthTable widths;

    // active context
    StageGraph *graph = nullptr;
    std::map<std::string, VType> env;
    std::map<std::string, VarInfo> *var_info = nullptr;
    std::vector<std::pair<int, int>> seq_pairs; // monotonicity assertion data
    const FunDecl *current_fun = nullptr;       // null when checking a handler
    int declared_ret_width = -1;
    std::string current_handler;

    void err(const Span &sp, std::string msg) {
        diags.add(DiagKind::TypeError, sp, std::move(msg)).handler = current_handler;
    }

    uint32_t ty_width(const Ty &t) {
        if (t.width && t.width->folded()) return *t.width->value;
        return 32;
    }

    VType from_ty(const Ty &t, const Span &sp) {
        switch (t.kind) {
        case Ty::Kind::Bool: return VType::of(VKind::Bool);
        case Ty::Kind::Void: return VType::of(VKind::Void);
        case Ty::Kind::Event: return VType::of(VKind::Event);
        case Ty::Kind::Group: return VType::of(VKind::Group);
        case Ty::Kind::Int: {
            VType v = VType::of(VKind::Int);
            v.width = widths.fresh(ty_width(t));
            return v;
        }
        case Ty::Kind::ArrayRef: {
            VType v = VType::of(VKind::Array);
            v.width = t.width ? widths.fresh(ty_width(t)) : widths.fresh();
            return v;
        }
        case Ty::Kind::Auto:
            err(sp, "auto type is only inferred from an initializer");
            return VType::error();
        }
        return VType::error();
    }

    bool unify_int(const VType &a, const VType &b, const Span &sp, const char *what) {
        if (a.k == VKind::Error || b.k == VKind::Error) return false;
        if (a.k != VKind::Int || b.k != VKind::Int) {
            err(sp, std::string(what) + ": expected integer operands");
            return false;
        }
        if (!widths.unify(a.width, b.width)) {
            err(sp, std::string(what) + ": width mismatch (int<" +
                        std::to_string(widths.resolve(a.width)) + "> vs int<" +
                        std::to_string(widths.resolve(b.width)) + ">)");
            return false;
        }
        return true;
    }

    bool unify(const VType &want, const VType &got, const Span &sp, const char *what) {
        if (want.k == VKind::Error || got.k == VKind::Error) return false;
        if (want.k == VKind::Int && got.k == VKind::Int) return unify_int(want, got, sp, what);
        if (want.k != got.k) {
            err(sp, std::string(what) + ": type mismatch");
            return false;
        }
        if (want.k == VKind::Array && !widths.unify(want.width, got.width)) {
            err(sp, std::string(what) + ": array cell width mismatch");
            return false;
        }
        return true;
    }

    // ---- expression checking; `cur` is the current stage variable ----

    VType check_expr(const Expr &e, int &cur) {
        return std::visit([&](const auto &node) { return check_node(e.span, node, cur); }, e.v);
    }

    VType check_node(const Span &sp, const ValueE &v, int &) {
        if (v.is_bool) return VType::of(VKind::Bool);
        VType t = VType::of(VKind::Int);
        // Unsuffixed literals are width-polymorphic and default to 32.
        t.width = v.width && v.width->folded() ? widths.fresh(*v.width->value) : widths.fresh();
        (void)sp;
        return t;
    }

    VType check_node(const Span &sp, const VarE &v, int &) {
        auto it = env.find(v.name);
        if (it != env.end()) return it->second;
        switch (lookup_top_level(p, v.name)) {
        case NameKind::Const: {
            const auto &cd = std::get<ConstDecl>(p.decls[p.consts.at(v.name)].v);
            if (cd.ty.kind == Ty::Kind::Bool) return VType::of(VKind::Bool);
            VType t = VType::of(VKind::Int);
            // Like literals: width-polymorphic unless the const pins one.
            t.width = cd.ty.width ? widths.fresh(ty_width(cd.ty)) : widths.fresh();
            return t;
        }
        case NameKind::Global: {
            const GlobalDecl &g = *p.find_global(v.name);
            VType t = VType::of(VKind::Array);
            t.width = widths.fresh(g.width);
            t.global = g.decl_index;
            t.stage = graph->fresh("stage(" + v.name + ")");
            // Pin to the declaration stage, tagged with the array so that
            // contradiction cycles running through this reference can name it.
            std::string why = "'" + v.name + "' declared at stage " +
                              std::to_string(g.decl_index);
            graph->ge(t.stage, StageGraph::kZero, g.decl_index, why, sp, g.decl_index);
            graph->ge(StageGraph::kZero, t.stage, -(int64_t)g.decl_index, why, sp, g.decl_index);
            return t;
        }
        case NameKind::Group:
            return VType::of(VKind::Group);
        case NameKind::Memop: {
            VType t = VType::of(VKind::Memop);
            t.memop = v.name;
            return t;
        }
        default:
            err(sp, "'" + v.name + "' is not usable as a value");
            return VType::error();
        }
    }

    VType check_node(const Span &sp, const BinE &b, int &cur) {
        VType l = check_expr(*b.lhs, cur);
        VType r = check_expr(*b.rhs, cur);
        switch (b.op) {
        case BinKind::Add:
        case BinKind::Sub:
        case BinKind::Mul:
        case BinKind::BitAnd:
        case BinKind::BitOr:
        case BinKind::BitXor:
            if (!unify_int(l, r, sp, "arithmetic")) return VType::error();
            return l;
        case BinKind::Lt:
        case BinKind::Gt:
        case BinKind::Le:
        case BinKind::Ge:
            if (!unify_int(l, r, sp, "comparison")) return VType::error();
            return VType::of(VKind::Bool);
        case BinKind::Eq:
        case BinKind::Ne:
            if (l.k == VKind::Bool && r.k == VKind::Bool) return VType::of(VKind::Bool);
            if (!unify_int(l, r, sp, "comparison")) return VType::error();
            return VType::of(VKind::Bool);
        case BinKind::LAnd:
        case BinKind::LOr:
            if (l.k != VKind::Bool || r.k != VKind::Bool) {
                err(sp, "'&&'/'||' require boolean operands");
                return VType::error();
            }
            return VType::of(VKind::Bool);
        }
        return VType::error();
    }

    VType check_node(const Span &sp, const HashE &h, int &cur) {
        if (h.args.empty()) {
            err(sp, "hash requires a polynomial argument");
            return VType::error();
        }
        for (const auto &a : h.args) {
            VType t = check_expr(*a, cur);
            if (t.k != VKind::Int && t.k != VKind::Error)
                err(a->span, "hash arguments must be integers");
        }
        VType t = VType::of(VKind::Int);
        t.width = widths.fresh(h.width.folded() ? *h.width.value : 32);
        return t;
    }

    VType check_node(const Span &sp, const CallE &c, int &cur) {
        if (c.module == "Array") return check_array_call(sp, c, cur);
        if (c.module == "Sys") {
            if (!c.args.empty()) err(sp, "Sys.time takes no arguments");
            VType t = VType::of(VKind::Int);
            t.width = widths.fresh(32);
            return t;
        }
        if (c.module == "Event") return check_combinator(sp, c, cur);
        if (const FunDecl *f = p.find_fun(c.name)) return check_fun_call(sp, c, *f, cur);
        if (const EventDecl *ev = p.find_event(c.name)) return check_event_ctor(sp, c, *ev, cur);
        err(sp, "'" + c.full_name() + "' is not callable");
        return VType::error();
    }

    VType check_event_ctor(const Span &sp, const CallE &c, const EventDecl &ev, int &cur) {
        if (c.args.size() != ev.params.size()) {
            err(sp, "event '" + ev.name + "' expects " + std::to_string(ev.params.size()) +
                        " arguments, got " + std::to_string(c.args.size()));
            return VType::error();
        }
        for (size_t i = 0; i < c.args.size(); i++) {
            VType got = check_expr(*c.args[i], cur);
            VType want = from_ty(ev.params[i].ty, sp);
            unify(want, got, c.args[i]->span, "event argument");
        }
        return VType::of(VKind::Event);
    }

    VType check_combinator(const Span &sp, const CallE &c, int &cur) {
        if (c.args.size() != 2) {
            err(sp, "Event." + c.name + " expects 2 arguments");
            return VType::error();
        }
        VType ev = check_expr(*c.args[0], cur);
        if (ev.k != VKind::Event && ev.k != VKind::Error)
            err(c.args[0]->span, "Event." + c.name + " expects an event value");
        VType arg = check_expr(*c.args[1], cur);
        if (c.name == "delay") {
            if (arg.k != VKind::Int && arg.k != VKind::Error)
                err(c.args[1]->span, "delay must be an integer (nanoseconds)");
        } else { // locate
            if (arg.k != VKind::Int && arg.k != VKind::Group && arg.k != VKind::Error)
                err(c.args[1]->span, "locate destination must be a switch id or group");
        }
        return VType::of(VKind::Event);
    }

    // An array access: current <= stage(a), then advance to stage(a) + 1.
    // Direct global accesses use the concrete declaration stage so every edge
    // involved in a violation carries the array tag for diagnostics.
    void access_array(const Span &sp, const VType &arr, const std::string &name, int &cur) {
        int next = graph->fresh();
        if (arr.global >= 0) {
            const std::string &label = p.global_at(arr.global).name;
            graph->upper(cur, arr.global, "access to '" + label + "'", sp, arr.global);
            std::string why = "stage advances past '" + label + "'";
            int64_t k1 = arr.global + 1;
            graph->ge(next, StageGraph::kZero, k1, why, sp, arr.global);
            graph->ge(StageGraph::kZero, next, -k1, why, sp, arr.global);
        } else {
            graph->ge(arr.stage, cur, 0, "access to '" + name + "'", sp, -1);
            graph->successor(next, arr.stage, "advance past '" + name + "'", sp, -1);
        }
        seq_pairs.emplace_back(cur, next);
        cur = next;
    }

    VType expect_array(const Expr &e, int &cur) {
        VType t = check_expr(e, cur);
        if (t.k != VKind::Array) {
            if (t.k != VKind::Error) err(e.span, "expected an array");
            return VType::error();
        }
        return t;
    }

    // Checks a memop argument position; returns the shape name when valid.
    std::string expect_memop(const Expr &e, const VType &arr, int &cur) {
        VType t = check_expr(e, cur);
        if (t.k != VKind::Memop) {
            if (t.k != VKind::Error) err(e.span, "expected a memop name");
            return "";
        }
        const MemopDecl *md = p.find_memop(t.memop);
        if (md) {
            // Explicitly sized memop parameters pin the array cell width.
            for (const auto &pa : md->params) {
                if (pa.ty.kind == Ty::Kind::Int && pa.ty.width && pa.ty.width->folded())
                    if (!widths.unify(arr.width, widths.fresh(*pa.ty.width->value)))
                        err(e.span, "memop '" + t.memop + "' width does not match array cell");
            }
        }
        if (!out.find_memop(t.memop)) return ""; // failed validation earlier
        return t.memop;
    }

    void expect_cell_int(const Expr &e, const VType &arr, int &cur, const char *what) {
        VType t = check_expr(e, cur);
        VType want = VType::of(VKind::Int);
        want.width = arr.width;
        unify(want, t, e.span, what);
    }

    void expect_index(const Expr &e, int &cur) {
        VType t = check_expr(e, cur);
        if (t.k != VKind::Int && t.k != VKind::Error)
            err(e.span, "array index must be an integer");
    }

    VType check_array_call(const Span &sp, const CallE &c, int &cur) {
        auto arity = [&](size_t n) {
            if (c.args.size() == n) return true;
            err(sp, "Array." + c.name + " expects " + std::to_string(n) + " arguments, got " +
                        std::to_string(c.args.size()));
            return false;
        };
        VType result = VType::of(VKind::Void);
        if (c.name == "get") {
            if (!arity(2)) return VType::error();
            VType arr = expect_array(*c.args[0], cur);
            if (arr.k == VKind::Error) return VType::error();
            expect_index(*c.args[1], cur);
            access_array(sp, arr, "array", cur);
            result = VType::of(VKind::Int);
            result.width = arr.width;
        } else if (c.name == "getm" || c.name == "setm") {
            if (!arity(4)) return VType::error();
            VType arr = expect_array(*c.args[0], cur);
            if (arr.k == VKind::Error) return VType::error();
            expect_index(*c.args[1], cur);
            expect_memop(*c.args[2], arr, cur);
            expect_cell_int(*c.args[3], arr, cur, "memop argument");
            access_array(sp, arr, "array", cur);
            if (c.name == "getm") {
                result = VType::of(VKind::Int);
                result.width = arr.width;
            }
        } else if (c.name == "set") {
            if (!arity(3)) return VType::error();
            VType arr = expect_array(*c.args[0], cur);
            if (arr.k == VKind::Error) return VType::error();
            expect_index(*c.args[1], cur);
            expect_cell_int(*c.args[2], arr, cur, "stored value");
            access_array(sp, arr, "array", cur);
        } else if (c.name == "update") {
            if (!arity(6)) return VType::error();
            VType arr = expect_array(*c.args[0], cur);
            if (arr.k == VKind::Error) return VType::error();
            expect_index(*c.args[1], cur);
            expect_memop(*c.args[2], arr, cur);
            expect_cell_int(*c.args[3], arr, cur, "get memop argument");
            expect_memop(*c.args[4], arr, cur);
            expect_cell_int(*c.args[5], arr, cur, "set memop argument");
            access_array(sp, arr, "array", cur);
            result = VType::of(VKind::Int);
            result.width = arr.width;
        } else {
            err(sp, "unknown Array method '" + c.name + "'");
            return VType::error();
        }
        return result;
    }

    VType check_fun_call(const Span &sp, const CallE &c, const FunDecl &f, int &cur) {
        auto it = out.fun_sigs.find(f.name);
        if (it == out.fun_sigs.end()) {
            // signature inference failed earlier; avoid cascading
            return VType::error();
        }
        const FunEffectSig &sig = it->second;
        if (c.args.size() != sig.params.size()) {
            err(sp, "function '" + f.name + "' expects " + std::to_string(sig.params.size()) +
                        " arguments, got " + std::to_string(c.args.size()));
            return VType::error();
        }
        // slot -> caller graph variable
        std::vector<int> slot_map(sig.n_slots, -1);
        slot_map[StageGraph::kZero] = StageGraph::kZero;
        for (size_t i = 0; i < c.args.size(); i++) {
            const auto &ps = sig.params[i];
            VType got = check_expr(*c.args[i], cur);
            if (ps.kind == VKind::Array) {
                if (got.k != VKind::Array) {
                    if (got.k != VKind::Error)
                        err(c.args[i]->span, "argument must be an array");
                    return VType::error();
                }
                if (!widths.unify(got.width, widths.fresh(ps.width)))
                    err(c.args[i]->span, "array cell width mismatch in call to '" + f.name + "'");
                slot_map[ps.stage_slot] = got.stage;
            } else {
                VType want = VType::of(ps.kind);
                if (ps.kind == VKind::Int) want.width = widths.fresh(ps.width);
                unify(want, got, c.args[i]->span, "argument");
            }
        }
        int entry = graph->fresh("entry(" + f.name + ")");
        slot_map[sig.entry_slot] = entry;
        int exit = entry; // access-free functions exit at their entry stage
        if (sig.exit_slot != sig.entry_slot) {
            exit = graph->fresh("exit(" + f.name + ")");
            slot_map[sig.exit_slot] = exit;
        }
        // remaining slots (shouldn't exist after projection) get fresh vars
        for (int &v : slot_map)
            if (v < 0) v = graph->fresh();
        // APP rule: the stage at the call must not exceed the entry stage.
        graph->le(cur, entry, "call to '" + f.name + "'", sp);
        for (const auto &sc : sig.constraints) {
            graph->ge(slot_map[sc.to], slot_map[sc.from], sc.weight,
                      "signature of '" + f.name + "' at call", sp, -1);
        }
        seq_pairs.emplace_back(cur, exit);
        cur = exit;
        VType r = VType::of(sig.ret_kind);
        if (sig.ret_kind == VKind::Int) r.width = widths.fresh(sig.ret_width);
        return r;
    }

    // ---- statements ----

    int check_block(const Block &b, int cur, bool tail) {
        for (size_t i = 0; i < b.size(); i++)
            cur = check_stmt(*b[i], cur, tail && i + 1 == b.size());
        return cur;
    }

    int check_stmt(const Stmt &s, int cur, bool tail) {
        std::visit(
            [&](const auto &node) {
                using T = std::decay_t<decltype(node)>;
                if constexpr (std::is_same_v<T, IfS>) {
                    VType c = check_expr(*node.cond, cur);
                    if (c.k != VKind::Bool && c.k != VKind::Error)
                        err(node.cond->span, "condition must be boolean");
                    int t_exit = check_block(node.then_blk, cur, tail);
                    int e_exit = check_block(node.else_blk, cur, tail);
                    int join = graph->fresh();
                    graph->le(t_exit, join, "branch join", s.span);
                    graph->le(e_exit, join, "branch join", s.span);
                    seq_pairs.emplace_back(cur, join);
                    cur = join;
                } else if constexpr (std::is_same_v<T, LocalS>) {
                    VType init;
                    bool have_init = node.init != nullptr;
                    if (have_init) init = check_expr(*node.init, cur);
                    VType declared;
                    if (node.ty.kind == Ty::Kind::Auto) {
                        if (!have_init) {
                            err(s.span, "auto local '" + node.name + "' needs an initializer");
                            declared = VType::error();
                        } else {
                            declared = init;
                        }
                    } else if (node.ty.kind == Ty::Kind::ArrayRef) {
                        err(s.span, "array-typed locals are not supported");
                        declared = VType::error();
                    } else if (node.ty.kind == Ty::Kind::Void) {
                        err(s.span, "void local '" + node.name + "'");
                        declared = VType::error();
                    } else {
                        declared = from_ty(node.ty, s.span);
                        if (have_init) unify(declared, init, s.span, "initializer");
                    }
                    env[node.name] = declared;
                    record_var(node.name, declared);
                } else if constexpr (std::is_same_v<T, AssignS>) {
                    VType v = check_expr(*node.value, cur);
                    auto it = env.find(node.name);
                    if (it == env.end()) {
                        err(s.span, "assignment to unknown local '" + node.name + "'");
                    } else {
                        unify(it->second, v, s.span, "assignment");
                    }
                } else if constexpr (std::is_same_v<T, ExprS>) {
                    if (!std::holds_alternative<CallE>(node.expr->v)) {
                        err(s.span, "expression statements must be calls");
                    }
                    check_expr(*node.expr, cur);
                } else if constexpr (std::is_same_v<T, GenerateS>) {
                    // Events are data until handled: no stage effect beyond
                    // evaluating the argument expressions.
                    VType t = check_expr(*node.event, cur);
                    if (t.k != VKind::Event && t.k != VKind::Error)
                        err(s.span, "generate requires an event value");
                } else if constexpr (std::is_same_v<T, ReturnS>) {
                    if (!current_fun) {
                        err(s.span, "return is only allowed inside functions");
                        return;
                    }
                    if (!tail) {
                        // Tail position keeps function inlining a pure
                        // statement rewrite.
                        err(s.span, "return must be the last statement on its path");
                    }
                    VType want = from_ty(current_fun->ret, s.span);
                    if (node.value) {
                        VType got = check_expr(*node.value, cur);
                        if (want.k == VKind::Void)
                            err(s.span, "void function returns a value");
                        else
                            unify(want, got, s.span, "return value");
                    } else if (want.k != VKind::Void) {
                        err(s.span, "missing return value");
                    }
                }
            },
            s.v);
        return cur;
    }

    void record_var(const std::string &name, const VType &t) {
        if (!var_info) return;
        VarInfo vi;
        vi.is_bool = t.k == VKind::Bool;
        vi.is_event = t.k == VKind::Event;
        (*var_info)[name] = vi; // width fixed up after solving
        pending_widths_.emplace_back(name, t.width);
    }

    std::vector<std::pair<std::string, int>> pending_widths_;

    void finish_widths() {
        if (!var_info) return;
        for (auto &[name, wclass] : pending_widths_) {
            auto it = var_info->find(name);
            if (it != var_info->end() && !it->second.is_bool && !it->second.is_event)
                it->second.width = widths.resolve(wclass);
            else if (it != var_info->end() && it->second.is_bool)
                it->second.width = 1;
        }
        pending_widths_.clear();
    }

    // Returns true when every path through the block ends in a return.
    bool all_paths_return(const Block &b) {
        if (b.empty()) return false;
        const Stmt &last = *b.back();
        if (std::holds_alternative<ReturnS>(last.v)) return true;
        if (const auto *iff = std::get_if<IfS>(&last.v))
            return iff->has_else && all_paths_return(iff->then_blk) &&
                   all_paths_return(iff->else_blk);
        return false;
    }

    // ---- declarations ----

    void check_function(const FunDecl &f) {
        StageGraph g;
        graph = &g;
        env.clear();
        seq_pairs.clear();
        current_fun = &f;
        current_handler.clear();
        var_info = &out.fun_vars[f.name];
        pending_widths_.clear();

        FunEffectSig sig;
        sig.name = f.name;
        int entry = g.fresh("entry");
        std::vector<int> param_vars;
        for (const auto &pa : f.params) {
            VType t = from_ty(pa.ty, pa.span);
            if (t.k == VKind::Array) {
                t.stage = g.fresh("stage(" + pa.name + ")");
                param_vars.push_back(t.stage);
            } else {
                param_vars.push_back(-1);
            }
            if (t.k == VKind::Event || t.k == VKind::Group)
                err(pa.span, "event/group parameters are not supported on functions");
            env[pa.name] = t;
            record_var(pa.name, t);
        }
        int exit = check_block(f.body, entry, /*tail=*/true);

        if (f.ret.kind != Ty::Kind::Void && !all_paths_return(f.body))
            err(f.body.empty() ? Span{} : f.body.back()->span,
                "function '" + f.name + "' must return on every path");

        auto solved = g.solve();
        if (auto *bad = std::get_if<StageContradiction>(&solved)) {
            report_contradiction(*bad, "function '" + f.name + "'");
            graph = nullptr;
            finish_widths();
            return;
        }

        // Project the body constraints onto the signature variables.
        std::vector<int> keep = {entry, exit};
        for (int v : param_vars)
            if (v >= 0) keep.push_back(v);
        std::vector<StageConstraint> proj = g.project(keep);

        // slot numbering: 0 = ZERO, 1 = entry, then exit and array params.
        // A function with no accesses exits at its own entry variable, in
        // which case both signature roles share one slot.
        std::map<int, int> to_slot = {{StageGraph::kZero, 0}, {entry, 1}};
        sig.entry_slot = 1;
        sig.n_slots = 2;
        if (!to_slot.count(exit)) to_slot[exit] = sig.n_slots++;
        sig.exit_slot = to_slot[exit];
        for (size_t i = 0; i < f.params.size(); i++) {
            FunEffectSig::ParamSig ps;
            const VType &t = env[f.params[i].name];
            ps.kind = t.k;
            ps.width = widths.resolve(t.width);
            if (t.k == VKind::Array) {
                ps.stage_slot = sig.n_slots++;
                to_slot[t.stage] = ps.stage_slot;
            }
            sig.params.push_back(ps);
        }
        for (auto &c : proj) {
            auto fi = to_slot.find(c.from);
            auto ti = to_slot.find(c.to);
            if (fi == to_slot.end() || ti == to_slot.end()) continue;
            sig.constraints.push_back(StageConstraint{fi->second, ti->second, c.weight, "", {}, -1});
        }
        VType rt = f.ret.kind == Ty::Kind::Auto ? VType::error() : from_ty(f.ret, Span{});
        sig.ret_kind = rt.k;
        sig.ret_width = widths.resolve(rt.width);
        out.fun_sigs[f.name] = std::move(sig);
        finish_widths();
        graph = nullptr;
    }

    void check_handler(const HandlerDecl &h) {
        StageGraph g;
        graph = &g;
        env.clear();
        seq_pairs.clear();
        current_fun = nullptr;
        current_handler = h.event;
        var_info = &out.handler_vars[h.event];
        pending_widths_.clear();

        int entry = g.fresh("entry");
        g.pin(entry, 0, "handler entry", Span{});
        for (const auto &pa : h.params) {
            VType t = from_ty(pa.ty, pa.span);
            if (t.k == VKind::Array || t.k == VKind::Event || t.k == VKind::Group)
                err(pa.span, "handler parameters must be value types");
            env[pa.name] = t;
            record_var(pa.name, t);
        }
        int exit = check_block(h.body, entry, /*tail=*/false);

        auto solved = g.solve();
        if (auto *bad = std::get_if<StageContradiction>(&solved)) {
            report_contradiction(*bad, "handler '" + h.event + "'");
        } else {
            const auto &sol = std::get<StageSolution>(solved);
            out.handler_exit[h.event] = sol.values[exit];
            // Monotonicity: the current stage never decreases along any
            // statement sequence.
            for (auto [a, b] : seq_pairs)
                LUCID_CHECK(sol.values[a] <= sol.values[b],
                            "stage must not decrease along a statement sequence");
        }
        finish_widths();
        graph = nullptr;
    }

    void report_contradiction(const StageContradiction &bad, const std::string &where) {
        // Identify the two array accesses that close the cycle: the one
        // pushing the stage up (earlier) and the bound being violated (later).
        // The cycle may be reported from any starting rotation.
        const StageConstraint *later = nullptr, *earlier = nullptr;
        for (const auto &c : bad.cycle) {
            if (c.global_index < 0) continue;
            if (!later && c.to == StageGraph::kZero && c.weight <= 0) later = &c;
        }
        for (const auto &c : bad.cycle) {
            if (c.global_index < 0 || &c == later) continue;
            if (c.from == StageGraph::kZero && c.weight > 0) {
                earlier = &c;
                break;
            }
            if (!earlier && !(c.to == StageGraph::kZero && c.weight <= 0)) earlier = &c;
        }
        if (later && earlier && earlier->global_index == later->global_index) {
            Diag &d = diags.add(DiagKind::ReAccessError, earlier->span,
                                where + " accesses '" +
                                    p.global_at(later->global_index).name +
                                    "' more than once on one path");
            d.spans.push_back(later->span);
            d.handler = current_handler;
            return;
        }
        if (later && earlier) {
            const std::string &g_early = p.global_at(earlier->global_index).name;
            const std::string &g_late = p.global_at(later->global_index).name;
            Diag &d = diags.add(DiagKind::OrderError, earlier->span,
                                where + " accesses '" + g_early + "' and '" + g_late +
                                    "' in the opposite order of their declarations");
            d.spans.push_back(later->span);
            d.handler = current_handler;
            return;
        }
        std::string chain;
        for (const auto &c : bad.cycle) {
            if (!chain.empty()) chain += "; ";
            chain += c.why.empty() ? "constraint" : c.why;
        }
        Diag &d = diags.add(DiagKind::Unsatisfiable,
                            bad.cycle.empty() ? Span{} : bad.cycle.front().span,
                            where + " has contradictory stage constraints: " + chain);
        d.handler = current_handler;
    }

    bool run() {
        // 1. memops
        for (size_t i : sorted_decls<MemopDecl>()) {
            const auto &md = std::get<MemopDecl>(p.decls[i].v);
            auto res = validate_memop(md, p);
            if (auto *shape = std::get_if<MemopShape>(&res))
                out.memops[md.name] = *shape;
            else
                report_memop_violations(md.name, std::get<std::vector<MemopViolation>>(res),
                                        diags);
        }
        // 2. functions, in declaration order (callees precede callers)
        for (const auto &d : p.decls)
            if (const auto *f = std::get_if<FunDecl>(&d.v)) check_function(*f);
        // 3. handlers
        for (const auto &d : p.decls)
            if (const auto *h = std::get_if<HandlerDecl>(&d.v)) check_handler(*h);
        return diags.empty();
    }

    template <class T> std::vector<size_t> sorted_decls() const {
        std::vector<size_t> idx;
        for (size_t i = 0; i < p.decls.size(); i++)
            if (std::holds_alternative<T>(p.decls[i].v)) idx.push_back(i);
        return idx;
    }
};

} // namespace

std::optional<CheckedProgram> check_program(const Program &p, Diagnostics &diags) {
    LUCID_CHECK(p.resolved, "check_program requires a resolved program");
    Checker ck{p, diags, {}, {}};
    size_t before = diags.items.size();
    ck.run();
    if (diags.items.size() > before) return std::nullopt;
    return std::move(ck.out);
}

} // namespace lucid
