#include "lucid/lowering.hpp"

#include <algorithm>
#include <deque>
#include <functional>

#include "lucid/check.hpp"

#include "lucid/resolver.hpp"

#include <nlohmann/json.hpp>

namespace lucid {

const char *cmp_text(CmpKind c) {
    switch (c) {
    case CmpKind::Eq: return "==";
    case CmpKind::Ne: return "!=";
    case CmpKind::Lt: return "<";
    case CmpKind::Gt: return ">";
    case CmpKind::Le: return "<=";
    case CmpKind::Ge: return ">=";
    }
    return "?";
}

CmpKind cmp_negate(CmpKind c) {
    switch (c) {
    case CmpKind::Eq: return CmpKind::Ne;
    case CmpKind::Ne: return CmpKind::Eq;
    case CmpKind::Lt: return CmpKind::Ge;
    case CmpKind::Gt: return CmpKind::Le;
    case CmpKind::Le: return CmpKind::Gt;
    case CmpKind::Ge: return CmpKind::Lt;
    }
    return CmpKind::Eq;
}

bool cmp_eval(CmpKind c, uint64_t a, uint64_t b) {
    switch (c) {
    case CmpKind::Eq: return a == b;
    case CmpKind::Ne: return a != b;
    case CmpKind::Lt: return a < b;
    case CmpKind::Gt: return a > b;
    case CmpKind::Le: return a <= b;
    case CmpKind::Ge: return a >= b;
    }
    return false;
}

const char *AtomicStmt::kind_name() const {
    if (std::holds_alternative<AtomicOp>(v)) return "op";
    if (std::holds_alternative<AtomicMemOp>(v)) return "memop";
    if (std::holds_alternative<AtomicBranch>(v)) return "branch";
    if (std::holds_alternative<AtomicGenerate>(v)) return "generate";
    if (std::holds_alternative<AtomicNoop>(v)) return "noop";
    return "dispatch";
}

size_t norm_count(const NormBlock &b) {
    size_t n = 0;
    for (const auto &s : b) {
        n += 1;
        n += norm_count(s.then_blk);
        n += norm_count(s.else_blk);
    }
    return n;
}

// ---------------------------------------------------------------------------
// inlining
// ---------------------------------------------------------------------------

namespace {

struct Inliner {
    const Program &p;
    const CheckedProgram &checked;
    Diagnostics &diags;
    int instance = 0;
    std::vector<std::string> call_stack;

    // Substitution applied inside an inlined body: parameter/local renames
    // plus direct replacement of array parameters by the argument expression.
    struct Subst {
        std::map<std::string, std::string> rename;
        std::map<std::string, const Expr *> replace;
    };

    ExprPtr rewrite_expr(const Expr &e, const Subst &su) {
        auto out = clone_expr(e);
        apply_subst(*out, su);
        return out;
    }

    void apply_subst(Expr &e, const Subst &su) {
        std::visit(
            [&](auto &node) {
                using T = std::decay_t<decltype(node)>;
                if constexpr (std::is_same_v<T, VarE>) {
                    auto rep = su.replace.find(node.name);
                    if (rep != su.replace.end()) {
                        e.v = std::move(clone_expr(*rep->second)->v);
                        return;
                    }
                    auto rn = su.rename.find(node.name);
                    if (rn != su.rename.end()) node.name = rn->second;
                } else if constexpr (std::is_same_v<T, BinE>) {
                    apply_subst(*node.lhs, su);
                    apply_subst(*node.rhs, su);
                } else if constexpr (std::is_same_v<T, CallE>) {
                    for (auto &a : node.args) apply_subst(*a, su);
                } else if constexpr (std::is_same_v<T, HashE>) {
                    for (auto &a : node.args) apply_subst(*a, su);
                }
            },
            e.v);
    }

    // Rewrites tail returns into assignments to `ret_var`; a void return in
    // tail position simply disappears.
    void rewrite_returns(Block &b, const std::string &ret_var) {
        for (auto &sp : b) {
            if (auto *r = std::get_if<ReturnS>(&sp->v)) {
                if (ret_var.empty() || !r->value) {
                    sp = nullptr;
                } else {
                    auto span = sp->span;
                    auto val = std::move(r->value);
                    sp->v = AssignS{ret_var, std::move(val)};
                    sp->span = span;
                }
            } else if (auto *iff = std::get_if<IfS>(&sp->v)) {
                rewrite_returns(iff->then_blk, ret_var);
                rewrite_returns(iff->else_blk, ret_var);
            }
        }
        b.erase(std::remove(b.begin(), b.end(), nullptr), b.end());
    }

    // Expands one call: emits the bound parameters and body into `out` and
    // returns the name of the result temporary ("" for void).
    std::string expand_call(const CallE &call, const Span &span, const FunDecl &f, Block &out,
                            std::map<std::string, VarInfo> &vars) {
        if (std::find(call_stack.begin(), call_stack.end(), f.name) != call_stack.end()) {
            diags.add(DiagKind::RecursionDetected, span,
                      "recursive call to '" + f.name + "' cannot be inlined");
            return "";
        }
        call_stack.push_back(f.name);
        int k = instance++;
        std::string prefix = "%i" + std::to_string(k) + "_";

        const auto &fv = checked.fun_vars.count(f.name) ? checked.fun_vars.at(f.name)
                                                        : std::map<std::string, VarInfo>{};
        Subst su;
        for (size_t i = 0; i < f.params.size(); i++) {
            const Param &pa = f.params[i];
            if (pa.ty.kind == Ty::Kind::ArrayRef) {
                su.replace[pa.name] = call.args[i].get();
            } else {
                std::string fresh = prefix + pa.name;
                su.rename[pa.name] = fresh;
                if (fv.count(pa.name)) vars[fresh] = fv.at(pa.name);
                auto decl = std::make_unique<Stmt>();
                decl->span = span;
                decl->v = LocalS{pa.ty, fresh, clone_expr(*call.args[i])};
                // argument expressions may themselves contain calls
                hoist_stmt(*decl, out, vars);
            }
        }
        // rename every local declared in the body
        std::function<void(const Block &)> collect = [&](const Block &b) {
            for (const auto &sp : b) {
                if (const auto *l = std::get_if<LocalS>(&sp->v)) {
                    su.rename[l->name] = prefix + l->name;
                    if (fv.count(l->name)) vars[prefix + l->name] = fv.at(l->name);
                } else if (const auto *iff = std::get_if<IfS>(&sp->v)) {
                    collect(iff->then_blk);
                    collect(iff->else_blk);
                }
            }
        };
        collect(f.body);

        std::string ret_var;
        if (f.ret.kind != Ty::Kind::Void) {
            ret_var = prefix + "ret";
            VarInfo vi;
            vi.is_bool = f.ret.kind == Ty::Kind::Bool;
            vi.width = vi.is_bool ? 1
                                  : (f.ret.width && f.ret.width->folded() ? *f.ret.width->value
                                                                          : 32);
            vars[ret_var] = vi;
            auto decl = std::make_unique<Stmt>();
            decl->span = span;
            decl->v = LocalS{f.ret, ret_var, nullptr};
            out.push_back(std::move(decl));
        }

        Block body = clone_block(f.body);
        std::function<void(Block &)> subst_block = [&](Block &b) {
            for (auto &sp : b) {
                std::visit(
                    [&](auto &node) {
                        using T = std::decay_t<decltype(node)>;
                        if constexpr (std::is_same_v<T, IfS>) {
                            apply_subst(*node.cond, su);
                            subst_block(node.then_blk);
                            subst_block(node.else_blk);
                        } else if constexpr (std::is_same_v<T, LocalS>) {
                            node.name = su.rename.at(node.name);
                            if (node.init) apply_subst(*node.init, su);
                        } else if constexpr (std::is_same_v<T, AssignS>) {
                            auto rn = su.rename.find(node.name);
                            if (rn != su.rename.end()) node.name = rn->second;
                            apply_subst(*node.value, su);
                        } else if constexpr (std::is_same_v<T, ExprS>) {
                            apply_subst(*node.expr, su);
                        } else if constexpr (std::is_same_v<T, GenerateS>) {
                            apply_subst(*node.event, su);
                        } else if constexpr (std::is_same_v<T, ReturnS>) {
                            if (node.value) apply_subst(*node.value, su);
                        }
                    },
                    sp->v);
            }
        };
        subst_block(body);
        rewrite_returns(body, ret_var);
        for (auto &sp : body) hoist_stmt(*sp, out, vars); // nested calls
        call_stack.pop_back();
        return ret_var;
    }

    // Replaces function calls inside `e` by result temporaries, emitting the
    // expanded bodies into `out` first (left-to-right evaluation order).
    void hoist_expr(Expr &e, Block &out, std::map<std::string, VarInfo> &vars) {
        std::visit(
            [&](auto &node) {
                using T = std::decay_t<decltype(node)>;
                if constexpr (std::is_same_v<T, BinE>) {
                    hoist_expr(*node.lhs, out, vars);
                    hoist_expr(*node.rhs, out, vars);
                } else if constexpr (std::is_same_v<T, HashE>) {
                    for (auto &a : node.args) hoist_expr(*a, out, vars);
                } else if constexpr (std::is_same_v<T, CallE>) {
                    for (auto &a : node.args) hoist_expr(*a, out, vars);
                    if (node.module.empty()) {
                        if (const FunDecl *f = p.find_fun(node.name)) {
                            std::string ret = expand_call(node, e.span, *f, out, vars);
                            e.v = VarE{ret.empty() ? "%void" : ret};
                        }
                    }
                }
            },
            e.v);
    }

    void hoist_stmt(Stmt &s, Block &out, std::map<std::string, VarInfo> &vars) {
        std::visit(
            [&](auto &node) {
                using T = std::decay_t<decltype(node)>;
                if constexpr (std::is_same_v<T, IfS>) {
                    hoist_expr(*node.cond, out, vars);
                    Block t2, e2;
                    for (auto &sp : node.then_blk) hoist_stmt(*sp, t2, vars);
                    for (auto &sp : node.else_blk) hoist_stmt(*sp, e2, vars);
                    node.then_blk = std::move(t2);
                    node.else_blk = std::move(e2);
                    out.push_back(clone_stmt(s));
                } else if constexpr (std::is_same_v<T, ExprS>) {
                    // a bare call to a void function expands in place
                    if (const auto *call = std::get_if<CallE>(&node.expr->v);
                        call && call->module.empty() && p.find_fun(call->name)) {
                        CallE copy{call->module, call->name, {}};
                        for (const auto &a : call->args) copy.args.push_back(clone_expr(*a));
                        for (auto &a : copy.args) hoist_expr(*a, out, vars);
                        expand_call(copy, s.span, *p.find_fun(call->name), out, vars);
                        return;
                    }
                    hoist_expr(*node.expr, out, vars);
                    out.push_back(clone_stmt(s));
                } else if constexpr (std::is_same_v<T, LocalS>) {
                    if (node.init) hoist_expr(*node.init, out, vars);
                    out.push_back(clone_stmt(s));
                } else if constexpr (std::is_same_v<T, AssignS>) {
                    hoist_expr(*node.value, out, vars);
                    out.push_back(clone_stmt(s));
                } else if constexpr (std::is_same_v<T, GenerateS>) {
                    hoist_expr(*node.event, out, vars);
                    out.push_back(clone_stmt(s));
                } else {
                    out.push_back(clone_stmt(s));
                }
            },
            s.v);
    }
};

} // namespace

std::optional<InlinedProgram> inline_calls(const Program &p, const CheckedProgram &checked,
                                           Diagnostics &diags) {
    InlinedProgram out;
    out.source = &p;
    size_t before = diags.items.size();
    for (const auto &d : p.decls) {
        const auto *h = std::get_if<HandlerDecl>(&d.v);
        if (!h) continue;
        Inliner inl{p, checked, diags, 0, {}};
        auto vars = checked.handler_vars.count(h->event)
                        ? checked.handler_vars.at(h->event)
                        : std::map<std::string, VarInfo>{};
        Block body;
        for (const auto &sp : h->body) {
            StmtPtr copy = clone_stmt(*sp); // hoisting rewrites in place
            inl.hoist_stmt(*copy, body, vars);
        }
        out.handler_bodies[h->event] = std::move(body);
        out.vars[h->event] = std::move(vars);
    }
    if (diags.items.size() > before) return std::nullopt;
    return out;
}

// ---------------------------------------------------------------------------
// normalization
// ---------------------------------------------------------------------------

namespace {

struct Normalizer {
    const Program &p;
    const CheckedProgram &checked;
    const std::map<std::string, VarInfo> &vars;
    std::string event;
    int temp_counter = 0;
    std::vector<std::string> notes;
    std::map<std::string, uint32_t> temp_widths;
    // event-typed locals: captured generate skeletons
    std::map<std::string, AtomicGenerate> event_locals;

    uint32_t local_width(const std::string &name) const {
        auto it = vars.find(name);
        if (it != vars.end()) return it->second.is_bool ? 1 : it->second.width;
        auto tw = temp_widths.find(name);
        if (tw != temp_widths.end()) return tw->second;
        return 32;
    }

    std::string fresh_temp(uint32_t width) {
        std::string name = "%t" + std::to_string(temp_counter++);
        temp_widths[name] = width;
        return name;
    }

    static NormStmt leaf(AtomicStmt atom) { return NormStmt{std::move(atom), {}, {}}; }

    void emit_op(NormBlock &out, const Span &sp, std::string dst, uint32_t width, AtomicOp op) {
        op.dst = std::move(dst);
        op.width = width;
        out.push_back(leaf(AtomicStmt{std::move(op), sp}));
    }

    std::optional<uint64_t> const_of(const Expr &e) const {
        if (const auto *v = std::get_if<ValueE>(&e.v)) return v->v;
        if (const auto *var = std::get_if<VarE>(&e.v)) {
            auto it = p.const_values.find(var->name);
            if (it != p.const_values.end()) return it->second;
        }
        return std::nullopt;
    }

    // Evaluates `e` to an operand, emitting three-address statements.
    Operand eval(const Expr &e, NormBlock &out, uint32_t hint = 0) {
        if (auto c = const_of(e)) {
            const auto *v = std::get_if<ValueE>(&e.v);
            uint32_t w = v && v->width && v->width->folded() ? *v->width->value
                                                             : (hint ? hint : 32);
            return Operand::constant(*c, w);
        }
        if (const auto *var = std::get_if<VarE>(&e.v))
            return Operand::local(var->name, local_width(var->name));
        if (const auto *call = std::get_if<CallE>(&e.v)) {
            if (call->module == "Sys") return Operand::time();
            // Array calls in value position
            uint32_t w = array_cell_width(*call);
            std::string t = fresh_temp(w);
            eval_into(t, w, e, out);
            return Operand::local(t, w);
        }
        uint32_t w = expr_width(e, hint);
        std::string t = fresh_temp(w);
        eval_into(t, w, e, out);
        return Operand::local(t, w);
    }

    uint32_t array_cell_width(const CallE &call) const {
        if (call.args.empty()) return 32;
        if (const auto *var = std::get_if<VarE>(&call.args[0]->v))
            if (const GlobalDecl *g = p.find_global(var->name)) return g->width;
        return 32;
    }

    uint32_t expr_width(const Expr &e, uint32_t hint) const {
        if (const auto *v = std::get_if<ValueE>(&e.v)) {
            if (v->is_bool) return 1;
            if (v->width && v->width->folded()) return *v->width->value;
            return hint ? hint : 32;
        }
        if (const auto *var = std::get_if<VarE>(&e.v)) {
            if (p.const_values.count(var->name)) return hint ? hint : 32;
            return local_width(var->name);
        }
        if (const auto *b = std::get_if<BinE>(&e.v)) {
            if (binop_is_compare(b->op) || b->op == BinKind::LAnd || b->op == BinKind::LOr)
                return 1;
            uint32_t lw = expr_width(*b->lhs, hint);
            return lw ? lw : expr_width(*b->rhs, hint);
        }
        if (const auto *h = std::get_if<HashE>(&e.v))
            return h->width.folded() ? *h->width.value : 32;
        if (const auto *call = std::get_if<CallE>(&e.v)) {
            if (call->module == "Array") return array_cell_width(*call);
            if (call->module == "Sys") return 32;
        }
        return hint ? hint : 32;
    }

    // dst = e, targeting dst directly for single-producer expressions.
    void eval_into(const std::string &dst, uint32_t width, const Expr &e, NormBlock &out) {
        if (const auto *b = std::get_if<BinE>(&e.v)) {
            // comparisons produce one bit but read full-width operands
            uint32_t ohint = width;
            if (binop_is_compare(b->op) || b->op == BinKind::LAnd || b->op == BinKind::LOr) {
                ohint = expr_width(*b->lhs, 0);
                if (const auto *lv = std::get_if<ValueE>(&b->lhs->v);
                    lv && !(lv->width && lv->width->folded()))
                    ohint = expr_width(*b->rhs, 0);
            }
            Operand a = eval(*b->lhs, out, ohint);
            Operand c = eval(*b->rhs, out, ohint);
            AtomicOp op;
            op.detail = AtomicOp::Detail::Bin;
            op.op = b->op;
            op.a = a;
            op.b = c;
            emit_op(out, e.span, dst, width, std::move(op));
            return;
        }
        if (const auto *h = std::get_if<HashE>(&e.v)) {
            AtomicOp op;
            op.detail = AtomicOp::Detail::Hash;
            op.hash_width = h->width.folded() ? *h->width.value : 32;
            uint64_t poly = 0;
            if (!h->args.empty())
                if (auto c = const_of(*h->args[0])) poly = *c;
            op.hash_poly = poly;
            for (size_t i = 1; i < h->args.size(); i++)
                op.hash_args.push_back(eval(*h->args[i], out));
            emit_op(out, e.span, dst, width, std::move(op));
            return;
        }
        if (const auto *call = std::get_if<CallE>(&e.v)) {
            if (call->module == "Array") {
                emit_memop(*call, e.span, dst, out);
                return;
            }
            if (call->module == "Sys") {
                AtomicOp op;
                op.a = Operand::time();
                emit_op(out, e.span, dst, width, std::move(op));
                return;
            }
        }
        // plain operand
        AtomicOp op;
        op.a = eval(e, out, width);
        emit_op(out, e.span, dst, width, std::move(op));
    }

    void emit_memop(const CallE &call, const Span &sp, const std::string &result,
                    NormBlock &out) {
        AtomicMemOp m;
        const auto *arr = std::get_if<VarE>(&call.args[0]->v);
        const GlobalDecl *g = arr ? p.find_global(arr->name) : nullptr;
        LUCID_CHECK(g, "array argument must be a global after inlining");
        m.array = g->name;
        m.array_index = g->decl_index;
        m.cell_width = g->width;
        m.index = eval(*call.args[1], out);
        auto memop_name = [&](const Expr &e) -> std::string {
            const auto *v = std::get_if<VarE>(&e.v);
            return v ? v->name : "";
        };
        if (call.name == "get") {
            m.get_memop = std::nullopt; // identity read
        } else if (call.name == "getm") {
            m.get_memop = memop_name(*call.args[2]);
            m.get_arg = eval(*call.args[3], out, m.cell_width);
        } else if (call.name == "set") {
            m.set_value = eval(*call.args[2], out, m.cell_width);
        } else if (call.name == "setm") {
            m.set_memop = memop_name(*call.args[2]);
            m.set_arg = eval(*call.args[3], out, m.cell_width);
        } else { // update
            m.get_memop = memop_name(*call.args[2]);
            m.get_arg = eval(*call.args[3], out, m.cell_width);
            m.set_memop = memop_name(*call.args[4]);
            m.set_arg = eval(*call.args[5], out, m.cell_width);
        }
        bool has_result = call.name == "get" || call.name == "getm" || call.name == "update";
        if (has_result && !result.empty()) m.result = result;
        out.push_back(leaf(AtomicStmt{std::move(m), sp}));
    }

    // ---- conditions ----

    struct LeafCond {
        Operand value;
        CmpKind cmp;
        uint64_t constant;
    };

    static CmpKind to_cmp(BinKind op) {
        switch (op) {
        case BinKind::Eq: return CmpKind::Eq;
        case BinKind::Ne: return CmpKind::Ne;
        case BinKind::Lt: return CmpKind::Lt;
        case BinKind::Gt: return CmpKind::Gt;
        case BinKind::Le: return CmpKind::Le;
        default: return CmpKind::Ge;
        }
    }

    // Reduces a simple condition to one local-vs-const compare, emitting prep
    // statements. Var-vs-var compares become a wrapping subtract at width+1
    // with the constant 2^w as the signed boundary.
    LeafCond leaf_cond(const Expr &e, NormBlock &out) {
        if (const auto *b = std::get_if<BinE>(&e.v); b && binop_is_compare(b->op)) {
            auto lc = const_of(*b->lhs);
            auto rc = const_of(*b->rhs);
            if (rc && !lc) {
                Operand v = eval(*b->lhs, out);
                return LeafCond{v, to_cmp(b->op), *rc};
            }
            if (lc && !rc) { // const ⋈ x  ==>  x ⋈' const (flip)
                Operand v = eval(*b->rhs, out);
                CmpKind c = to_cmp(b->op);
                switch (c) {
                case CmpKind::Lt: c = CmpKind::Gt; break;
                case CmpKind::Gt: c = CmpKind::Lt; break;
                case CmpKind::Le: c = CmpKind::Ge; break;
                case CmpKind::Ge: c = CmpKind::Le; break;
                default: break;
                }
                return LeafCond{v, c, *lc};
            }
            if (lc && rc) { // constant condition; fold to 0/1 compare
                bool truth = cmp_eval(to_cmp(b->op), *lc, *rc);
                return LeafCond{Operand::constant(truth ? 1 : 0, 1), CmpKind::Ne, 0};
            }
            // var vs var
            Operand a = eval(*b->lhs, out);
            Operand c = eval(*b->rhs, out);
            uint32_t w = a.is_local() ? a.width : c.width;
            CmpKind cmp = to_cmp(b->op);
            if (cmp == CmpKind::Eq || cmp == CmpKind::Ne) {
                std::string t = fresh_temp(w);
                AtomicOp op;
                op.detail = AtomicOp::Detail::Bin;
                op.op = BinKind::Sub;
                op.a = a;
                op.b = c;
                emit_op(out, e.span, t, w, std::move(op));
                return LeafCond{Operand::local(t, w), cmp, 0};
            }
            // ordered compares: extend one bit; subtract in the direction
            // that puts the answer above/below 2^w
            bool swap = cmp == CmpKind::Gt || cmp == CmpKind::Le;
            uint64_t boundary = 1ull << w;
            std::string t = fresh_temp(w + 1);
            AtomicOp op;
            op.detail = AtomicOp::Detail::Bin;
            op.op = BinKind::Sub;
            op.a = swap ? c : a;
            op.b = swap ? a : c;
            emit_op(out, e.span, t, w + 1, std::move(op));
            CmpKind out_cmp = (cmp == CmpKind::Lt || cmp == CmpKind::Gt) ? CmpKind::Gt
                                                                         : CmpKind::Le;
            if (w + 1 > 12)
                notes.push_back("handler " + event + ": " + std::to_string(w + 1) +
                                "-bit compare rewrite exceeds 12-bit gateway width");
            return LeafCond{Operand::local(t, w + 1), out_cmp, boundary};
        }
        // boolean-valued expression: compare against zero
        Operand v = eval(e, out);
        return LeafCond{v, CmpKind::Ne, 0};
    }

    static bool duplicable(const Block &blk) {
        for (const auto &sp : blk) {
            bool ok = std::visit(
                [&](const auto &node) {
                    using T = std::decay_t<decltype(node)>;
                    if constexpr (std::is_same_v<T, IfS>) {
                        return duplicable(node.then_blk) && duplicable(node.else_blk) &&
                               !contains_effect(*node.cond);
                    } else if constexpr (std::is_same_v<T, GenerateS>) {
                        return false;
                    } else if constexpr (std::is_same_v<T, LocalS>) {
                        return !node.init || !contains_effect(*node.init);
                    } else if constexpr (std::is_same_v<T, AssignS>) {
                        return !contains_effect(*node.value);
                    } else if constexpr (std::is_same_v<T, ExprS>) {
                        return !contains_effect(*node.expr);
                    } else {
                        return true;
                    }
                },
                sp->v);
            if (!ok) return false;
        }
        return true;
    }

    static bool contains_effect(const Expr &e) {
        return std::visit(
            [&](const auto &node) {
                using T = std::decay_t<decltype(node)>;
                if constexpr (std::is_same_v<T, CallE>) {
                    if (node.module == "Array") return true;
                    for (const auto &a : node.args)
                        if (contains_effect(*a)) return true;
                    return false;
                } else if constexpr (std::is_same_v<T, BinE>) {
                    return contains_effect(*node.lhs) || contains_effect(*node.rhs);
                } else if constexpr (std::is_same_v<T, HashE>) {
                    for (const auto &a : node.args)
                        if (contains_effect(*a)) return true;
                    return false;
                } else {
                    return false;
                }
            },
            e.v);
    }

    // if (cond) then_blk else else_blk, with boolean connectives decomposed
    // into nested branches when the duplicated arm is safe to copy, otherwise
    // materialized into a temporary.
    void norm_if(const Expr &cond, const Block &then_blk, const Block &else_blk, NormBlock &out) {
        if (const auto *b = std::get_if<BinE>(&cond.v)) {
            if (b->op == BinKind::LAnd && duplicable(else_blk)) {
                // if (c1 && c2) T else E  ==>  if (c1) { if (c2) T else E } else E
                norm_if_nested_and(*b, then_blk, else_blk, out);
                return;
            }
            if (b->op == BinKind::LOr && duplicable(then_blk)) {
                norm_if_nested_or(*b, then_blk, else_blk, out);
                return;
            }
        }
        LeafCond lc = leaf_cond(cond, out);
        NormStmt node;
        node.atom = AtomicStmt{AtomicBranch{lc.value, lc.cmp, lc.constant}, cond.span};
        for (const auto &sp : then_blk) norm_stmt(*sp, node.then_blk);
        for (const auto &sp : else_blk) norm_stmt(*sp, node.else_blk);
        out.push_back(std::move(node));
    }

    void norm_if_nested_and(const BinE &b, const Block &then_blk, const Block &else_blk,
                            NormBlock &out) {
        LeafCond c1 = leaf_cond(*b.lhs, out);
        NormStmt node;
        node.atom = AtomicStmt{AtomicBranch{c1.value, c1.cmp, c1.constant}, b.lhs->span};
        norm_if(*b.rhs, then_blk, else_blk, node.then_blk);
        for (const auto &sp : else_blk) norm_stmt(*sp, node.else_blk);
        out.push_back(std::move(node));
    }

    void norm_if_nested_or(const BinE &b, const Block &then_blk, const Block &else_blk,
                           NormBlock &out) {
        LeafCond c1 = leaf_cond(*b.lhs, out);
        NormStmt node;
        node.atom = AtomicStmt{AtomicBranch{c1.value, c1.cmp, c1.constant}, b.lhs->span};
        for (const auto &sp : then_blk) norm_stmt(*sp, node.then_blk);
        norm_if(*b.rhs, then_blk, else_blk, node.else_blk);
        out.push_back(std::move(node));
    }

    // ---- generate ----

    AtomicGenerate build_generate(const Expr &e, NormBlock &out, bool capture) {
        if (const auto *call = std::get_if<CallE>(&e.v)) {
            if (call->module == "Event") {
                AtomicGenerate g = build_generate(*call->args[0], out, capture);
                if (call->name == "delay") {
                    g.delay = eval(*call->args[1], out);
                    if (capture) g.delay = captured(g.delay, e.span, out);
                } else {
                    if (const auto *var = std::get_if<VarE>(&call->args[1]->v);
                        var && p.find_group(var->name)) {
                        g.dest_kind = AtomicGenerate::DestKind::Group;
                        g.dest_group = var->name;
                    } else {
                        g.dest_kind = AtomicGenerate::DestKind::Switch;
                        g.dest_switch = eval(*call->args[1], out);
                        if (capture) g.dest_switch = captured(g.dest_switch, e.span, out);
                    }
                }
                return g;
            }
            if (call->module.empty()) {
                if (const EventDecl *ev = p.find_event(call->name)) {
                    AtomicGenerate g;
                    g.event = ev->name;
                    g.event_id = ev->event_id;
                    for (size_t i = 0; i < call->args.size(); i++) {
                        uint32_t w = ev->params[i].ty.width && ev->params[i].ty.width->folded()
                                         ? *ev->params[i].ty.width->value
                                         : (ev->params[i].ty.kind == Ty::Kind::Bool ? 1 : 32);
                        Operand a = eval(*call->args[i], out, w);
                        if (capture) a = captured(a, e.span, out);
                        g.args.push_back(a);
                    }
                    return g;
                }
            }
        }
        if (const auto *var = std::get_if<VarE>(&e.v)) {
            auto it = event_locals.find(var->name);
            if (it != event_locals.end()) return it->second;
        }
        LUCID_CHECK(false, "generate argument must be an event expression");
        return {};
    }

    // Copies a live local into a fresh temporary so an event value captured
    // at declaration time is immune to later mutation.
    Operand captured(const Operand &o, const Span &sp, NormBlock &out) {
        if (!o.is_local() && o.kind != Operand::Kind::Time) return o;
        std::string t = fresh_temp(o.width);
        AtomicOp op;
        op.a = o;
        emit_op(out, sp, t, o.width, std::move(op));
        return Operand::local(t, o.width);
    }

    void norm_stmt(const Stmt &s, NormBlock &out) {
        std::visit(
            [&](const auto &node) {
                using T = std::decay_t<decltype(node)>;
                if constexpr (std::is_same_v<T, IfS>) {
                    norm_if(*node.cond, node.then_blk, node.else_blk, out);
                } else if constexpr (std::is_same_v<T, LocalS>) {
                    if (node.ty.kind == Ty::Kind::Event) {
                        event_locals[node.name] = build_generate(*node.init, out, true);
                        return;
                    }
                    uint32_t w = local_width(node.name);
                    if (node.init) {
                        eval_into(node.name, w, *node.init, out);
                    } else {
                        AtomicOp op;
                        op.a = Operand::constant(0, w);
                        emit_op(out, s.span, node.name, w, std::move(op));
                    }
                } else if constexpr (std::is_same_v<T, AssignS>) {
                    eval_into(node.name, local_width(node.name), *node.value, out);
                } else if constexpr (std::is_same_v<T, ExprS>) {
                    if (const auto *call = std::get_if<CallE>(&node.expr->v)) {
                        if (call->module == "Array") {
                            emit_memop(*call, s.span, "", out);
                            return;
                        }
                    }
                    // value-less builtin calls (Sys.time();) have no effect
                } else if constexpr (std::is_same_v<T, GenerateS>) {
                    AtomicGenerate g = build_generate(*node.event, out, false);
                    g.multicast = node.multicast;
                    out.push_back(leaf(AtomicStmt{std::move(g), s.span}));
                } else if constexpr (std::is_same_v<T, ReturnS>) {
                    // returns are rewritten away during inlining
                }
            },
            s.v);
    }
};

} // namespace

NormBlock normalize(const Block &body, const std::string &event, const InlinedProgram &inlined,
                    const CheckedProgram &checked, const Program &p,
                    std::vector<std::string> *notes) {
    static const std::map<std::string, VarInfo> kEmpty;
    auto it = inlined.vars.find(event);
    Normalizer n{p, checked, it != inlined.vars.end() ? it->second : kEmpty, event};
    NormBlock out;
    for (const auto &sp : body) n.norm_stmt(*sp, out);
    if (notes) notes->insert(notes->end(), n.notes.begin(), n.notes.end());
    return out;
}

// ---------------------------------------------------------------------------
// table graph
// ---------------------------------------------------------------------------

namespace {

struct GraphBuilder {
    AtomicTableGraph g;
    std::string handler;
    int event_id = -1;
    std::map<std::string, int> kind_counters;

    int add_node(AtomicStmt stmt) {
        TableNode n;
        n.id = (int)g.nodes.size();
        n.handler = handler;
        n.event_id = event_id;
        std::string kind = stmt.kind_name();
        int k = kind_counters[handler + "/" + kind]++;
        n.name = (handler.empty() ? std::string("root") : handler) + "_" + kind + "_" +
                 std::to_string(k);
        n.stmt = std::move(stmt);
        g.nodes.push_back(std::move(n));
        return g.nodes.back().id;
    }

    // Builds a block; entry receives the first node id; returns dangling
    // exits (node id, true/false slot) to patch into the successor.
    struct Dangling {
        int node;
        bool true_slot;
    };

    std::pair<int, std::vector<Dangling>> build_block(const NormBlock &b) {
        int entry = -1;
        std::vector<Dangling> exits;
        for (const auto &ns : b) {
            if (std::holds_alternative<AtomicBranch>(ns.atom.v)) {
                int id = add_node(ns.atom);
                patch(exits, id);
                if (entry < 0) entry = id;
                auto [t_entry, t_exits] = build_block(ns.then_blk);
                auto [e_entry, e_exits] = build_block(ns.else_blk);
                exits.clear();
                if (t_entry >= 0) {
                    g.nodes[id].next_true = t_entry;
                    exits.insert(exits.end(), t_exits.begin(), t_exits.end());
                } else {
                    exits.push_back(Dangling{id, true});
                }
                if (e_entry >= 0) {
                    g.nodes[id].next_false = e_entry;
                    exits.insert(exits.end(), e_exits.begin(), e_exits.end());
                } else {
                    exits.push_back(Dangling{id, false});
                }
            } else {
                int id = add_node(ns.atom);
                patch(exits, id);
                if (entry < 0) entry = id;
                exits.assign(1, Dangling{id, true});
            }
        }
        return {entry, exits};
    }

    void patch(std::vector<Dangling> &exits, int target) {
        for (const auto &d : exits) {
            if (d.true_slot)
                g.nodes[d.node].next_true = target;
            else
                g.nodes[d.node].next_false = target;
        }
        exits.clear();
    }
};

int longest_from(const AtomicTableGraph &g, int id, std::vector<int> &memo) {
    if (id < 0) return 0;
    if (memo[id] >= 0) return memo[id];
    const TableNode &n = g.nodes[id];
    int best = std::max(longest_from(g, n.next_true, memo),
                        std::holds_alternative<AtomicBranch>(n.stmt.v)
                            ? longest_from(g, n.next_false, memo)
                            : 0);
    return memo[id] = 1 + best;
}

} // namespace

int AtomicTableGraph::longest_path(const std::string &event) const {
    auto it = handler_entry.find(event);
    if (it == handler_entry.end() || it->second < 0) return 0;
    std::vector<int> memo(nodes.size(), -1);
    return longest_from(*this, it->second, memo);
}

int AtomicTableGraph::longest_path() const {
    int best = 0;
    for (const auto &[event, entry] : handler_entry) best = std::max(best, longest_path(event));
    return best;
}

AtomicTableGraph build_table_graph(const std::vector<NormHandler> &handlers) {
    GraphBuilder b;
    b.handler = "";
    b.event_id = -1;
    int root = b.add_node(AtomicStmt{AtomicDispatch{}, {}});
    b.g.dispatch_root = root;
    for (const auto &h : handlers) {
        b.handler = h.event;
        b.event_id = h.event_id;
        if (h.body.empty()) {
            int id = b.add_node(AtomicStmt{AtomicNoop{}, {}});
            b.g.handler_entry[h.event] = id;
            continue;
        }
        auto [entry, exits] = b.build_block(h.body);
        (void)exits; // dangling exits leave the pipeline
        b.g.handler_entry[h.event] = entry;
    }
    return b.g;
}

std::optional<LoweredProgram> lower_program(const Program &p, const CheckedProgram &checked,
                                            Diagnostics &diags) {
    auto inlined = inline_calls(p, checked, diags);
    if (!inlined) return std::nullopt;
    LoweredProgram out;
    for (size_t i : p.events_in_order) {
        const auto &ev = std::get<EventDecl>(p.decls[i].v);
        const HandlerDecl *h = p.find_handler(ev.name);
        if (!h) continue;
        NormHandler nh;
        nh.event = ev.name;
        nh.event_id = ev.event_id;
        for (const auto &pa : h->params) nh.params.push_back(pa.name);
        nh.body = normalize(inlined->handler_bodies.at(ev.name), ev.name, *inlined, checked, p,
                            &nh.notes);
        out.notes.insert(out.notes.end(), nh.notes.begin(), nh.notes.end());
        out.handlers.push_back(std::move(nh));
    }
    out.graph = build_table_graph(out.handlers);
    return out;
}

std::string graph_to_json(const AtomicTableGraph &g) {
    nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
    nlohmann::ordered_json edges = nlohmann::ordered_json::array();
    for (const auto &n : g.nodes) {
        nlohmann::ordered_json detail;
        detail["name"] = n.name;
        if (!n.handler.empty()) detail["handler"] = n.handler;
        std::visit(
            [&](const auto &a) {
                using T = std::decay_t<decltype(a)>;
                if constexpr (std::is_same_v<T, AtomicOp>) {
                    detail["dst"] = a.dst;
                    if (a.detail == AtomicOp::Detail::Bin) {
                        detail["expr"] = a.a.str() + " " + binop_text(a.op) + " " + a.b.str();
                    } else if (a.detail == AtomicOp::Detail::Hash) {
                        detail["expr"] = "hash<" + std::to_string(a.hash_width) + ">";
                    } else {
                        detail["expr"] = a.a.str();
                    }
                } else if constexpr (std::is_same_v<T, AtomicMemOp>) {
                    detail["array"] = a.array;
                    detail["index"] = a.index.str();
                    if (a.result) detail["result"] = *a.result;
                } else if constexpr (std::is_same_v<T, AtomicBranch>) {
                    detail["cond"] = a.value.str() + " " + cmp_text(a.cmp) + " " +
                                     std::to_string(a.constant);
                } else if constexpr (std::is_same_v<T, AtomicGenerate>) {
                    detail["event"] = a.event;
                }
            },
            n.stmt.v);
        nodes.push_back({{"id", n.id}, {"kind", n.stmt.kind_name()}, {"detail", detail}});
        bool is_branch = std::holds_alternative<AtomicBranch>(n.stmt.v);
        if (n.next_true >= 0)
            edges.push_back(
                {{"from", n.id}, {"to", n.next_true}, {"label", is_branch ? "true" : "next"}});
        if (n.next_false >= 0)
            edges.push_back({{"from", n.id}, {"to", n.next_false}, {"label", "false"}});
    }
    for (const auto &[event, entry] : g.handler_entry)
        if (entry >= 0)
            edges.push_back({{"from", g.dispatch_root}, {"to", entry}, {"label", event}});
    nlohmann::ordered_json j;
    j["nodes"] = std::move(nodes);
    j["edges"] = std::move(edges);
    return j.dump(2);
}

} // namespace lucid
