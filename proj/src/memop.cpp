#include "lucid/memop.hpp"

namespace lucid {

using namespace memop;

const char *memop_rule_name(MemopRule r) {
    switch (r) {
    case MemopRule::TooManyParams: return "TooManyParams";
    case MemopRule::LocalDeclInBody: return "LocalDeclInBody";
    case MemopRule::BadOperator: return "BadOperator";
    case MemopRule::ParamReuse: return "ParamReuse";
    case MemopRule::BadShape: return "BadShape";
    case MemopRule::MissingElse: return "MissingElse";
    case MemopRule::NestedIf: return "NestedIf";
    case MemopRule::CompoundCondition: return "CompoundCondition";
    }
    return "?";
}

namespace {

struct Validator {
    const MemopDecl &decl;
    const Program &program;
    std::vector<MemopViolation> violations;

    void add(MemopRule rule, const Span &sp, std::string msg) {
        violations.push_back(MemopViolation{rule, sp, std::move(msg)});
    }

    int param_index(const std::string &name) const {
        for (size_t i = 0; i < decl.params.size() && i < 2; i++)
            if (decl.params[i].name == name) return (int)i;
        return -1;
    }

    // Leaf of the memop grammar: a constant or one of the two parameters.
    // `uses` counts parameter occurrences within the enclosing expression.
    std::optional<Simple> simple(const Expr &e, int uses[2]) {
        if (const auto *v = std::get_if<ValueE>(&e.v))
            return Simple{Simple::Kind::Const, v->v, 0};
        if (const auto *var = std::get_if<VarE>(&e.v)) {
            int pi = param_index(var->name);
            if (pi >= 0) {
                if (++uses[pi] > 1) {
                    add(MemopRule::ParamReuse, e.span,
                        "parameter '" + var->name + "' used more than once in one expression");
                    return std::nullopt;
                }
                return Simple{Simple::Kind::Param, 0, pi};
            }
            auto it = program.const_values.find(var->name);
            if (it != program.const_values.end())
                return Simple{Simple::Kind::Const, it->second, 0};
            add(MemopRule::BadShape, e.span,
                "'" + var->name + "' is not a memop parameter or integer constant");
            return std::nullopt;
        }
        if (const auto *b = std::get_if<BinE>(&e.v)) {
            // Nested arithmetic. Multiplication (or any operator outside the
            // memop set) is never legal, so name the operator; otherwise the
            // expression is simply too deep for one stateful ALU.
            if (!ret_op(b->op) && !cmp_op(b->op)) {
                add(MemopRule::BadOperator, e.span,
                    std::string("operator '") + binop_text(b->op) +
                        "' cannot be computed by a stateful ALU");
            } else {
                add(MemopRule::BadShape, e.span, "expression is too deep for a stateful ALU");
            }
            return std::nullopt;
        }
        add(MemopRule::BadShape, e.span, "operand must be a constant or memop parameter");
        return std::nullopt;
    }

    static std::optional<RetOp> ret_op(BinKind op) {
        switch (op) {
        case BinKind::Add: return RetOp::Add;
        case BinKind::Sub: return RetOp::Sub;
        case BinKind::BitAnd: return RetOp::And;
        case BinKind::BitOr: return RetOp::Or;
        case BinKind::BitXor: return RetOp::Xor;
        default: return std::nullopt;
        }
    }

    static std::optional<MathOp> math_op(BinKind op) {
        switch (op) {
        case BinKind::Add: return MathOp::Add;
        case BinKind::Sub: return MathOp::Sub;
        default: return std::nullopt;
        }
    }

    static std::optional<CmpOp> cmp_op(BinKind op) {
        switch (op) {
        case BinKind::Gt: return CmpOp::Gt;
        case BinKind::Lt: return CmpOp::Lt;
        case BinKind::Eq: return CmpOp::Eq;
        case BinKind::Ne: return CmpOp::Ne;
        case BinKind::Ge: return CmpOp::Ge;
        case BinKind::Le: return CmpOp::Le;
        default: return std::nullopt;
        }
    }

    std::optional<RetExpr> ret_expr(const Expr &e) {
        int uses[2] = {0, 0};
        if (const auto *b = std::get_if<BinE>(&e.v)) {
            auto op = ret_op(b->op);
            if (!op) {
                add(MemopRule::BadOperator, e.span,
                    std::string("operator '") + binop_text(b->op) +
                        "' is not supported in a memop return");
                return std::nullopt;
            }
            auto a = simple(*b->lhs, uses);
            auto c = simple(*b->rhs, uses);
            if (!a || !c) return std::nullopt;
            return RetExpr{*a, op, *c};
        }
        auto a = simple(e, uses);
        if (!a) return std::nullopt;
        return RetExpr{*a, std::nullopt, {}};
    }

    std::optional<MathExpr> math_expr(const Expr &e, int uses[2]) {
        if (const auto *b = std::get_if<BinE>(&e.v)) {
            auto op = math_op(b->op);
            if (!op) {
                add(MemopRule::BadOperator, e.span,
                    std::string("operator '") + binop_text(b->op) +
                        "' is not supported in a memop condition (only + and -)");
                return std::nullopt;
            }
            auto a = simple(*b->lhs, uses);
            auto c = simple(*b->rhs, uses);
            if (!a || !c) return std::nullopt;
            return MathExpr{*a, op, *c};
        }
        auto a = simple(e, uses);
        if (!a) return std::nullopt;
        return MathExpr{*a, std::nullopt, {}};
    }

    std::optional<Test> test_expr(const Expr &e) {
        const auto *b = std::get_if<BinE>(&e.v);
        if (b && (b->op == BinKind::LAnd || b->op == BinKind::LOr)) {
            add(MemopRule::CompoundCondition, e.span,
                "compound conditional expressions are not allowed in memops");
            return std::nullopt;
        }
        if (!b || !cmp_op(b->op)) {
            add(MemopRule::BadShape, e.span,
                "memop condition must be a single comparison");
            return std::nullopt;
        }
        // One shared use budget: each parameter may appear at most once in
        // the whole test expression.
        int uses[2] = {0, 0};
        auto lhs = math_expr(*b->lhs, uses);
        auto rhs = math_expr(*b->rhs, uses);
        if (!lhs || !rhs) return std::nullopt;
        return Test{*lhs, *cmp_op(b->op), *rhs};
    }

    // The single return statement of a branch (or of the whole body).
    std::optional<RetExpr> ret_stmt(const Block &blk, const Span &enclosing) {
        if (blk.size() != 1) {
            add(MemopRule::BadShape, enclosing,
                "each memop branch must contain exactly one return statement");
            return std::nullopt;
        }
        const Stmt &s = *blk[0];
        if (const auto *r = std::get_if<ReturnS>(&s.v)) {
            if (!r->value) {
                add(MemopRule::BadShape, s.span, "memop return must carry a value");
                return std::nullopt;
            }
            return ret_expr(*r->value);
        }
        if (std::get_if<LocalS>(&s.v)) {
            add(MemopRule::LocalDeclInBody, s.span,
                "local variable declarations are not allowed in memops");
            return std::nullopt;
        }
        if (std::get_if<IfS>(&s.v)) {
            add(MemopRule::NestedIf, s.span, "nested if statements are not allowed in memops");
            return std::nullopt;
        }
        add(MemopRule::BadShape, s.span, "memop branches may only return");
        return std::nullopt;
    }

    std::variant<MemopShape, std::vector<MemopViolation>> run() {
        if (decl.params.size() != 2) {
            add(MemopRule::TooManyParams,
                decl.params.empty() ? Span{} : decl.params.back().span,
                "memop '" + decl.name + "' must take exactly 2 parameters, has " +
                    std::to_string(decl.params.size()));
        }
        for (const auto &pa : decl.params) {
            if (pa.ty.kind != Ty::Kind::Int)
                add(MemopRule::BadShape, pa.span, "memop parameters must be integers");
        }

        std::optional<MemopShape> shape;
        if (decl.body.size() != 1) {
            bool named = false;
            for (const auto &s : decl.body) {
                if (std::get_if<LocalS>(&s->v)) {
                    add(MemopRule::LocalDeclInBody, s->span,
                        "local variable declarations are not allowed in memops");
                    named = true;
                }
            }
            if (!named) {
                Span sp = decl.body.empty() ? Span{} : decl.body[0]->span;
                add(MemopRule::BadShape, sp,
                    "memop body must be a single return or a single if/else");
            }
        } else {
            const Stmt &s = *decl.body[0];
            if (const auto *r = std::get_if<ReturnS>(&s.v)) {
                if (!r->value) {
                    add(MemopRule::BadShape, s.span, "memop return must carry a value");
                } else if (auto ret = ret_expr(*r->value)) {
                    shape = MemopShape{decl.name, ReturnOnly{*ret}};
                }
            } else if (const auto *iff = std::get_if<IfS>(&s.v)) {
                auto test = test_expr(*iff->cond);
                auto then_ret = ret_stmt(iff->then_blk, s.span);
                std::optional<RetExpr> else_ret;
                if (!iff->has_else) {
                    // One return in *each* branch; a missing else is rejected
                    // rather than defaulted.
                    add(MemopRule::MissingElse, s.span,
                        "memop if statement requires an else branch");
                } else {
                    else_ret = ret_stmt(iff->else_blk, s.span);
                }
                if (test && then_ret && else_ret)
                    shape = MemopShape{decl.name, IfElse{*test, *then_ret, *else_ret}};
            } else if (std::get_if<LocalS>(&s.v)) {
                add(MemopRule::LocalDeclInBody, s.span,
                    "local variable declarations are not allowed in memops");
            } else {
                add(MemopRule::BadShape, s.span,
                    "memop body must be a single return or a single if/else");
            }
        }

        if (!violations.empty()) return violations;
        return *shape;
    }
};

uint64_t mask_of(uint32_t width) {
    return width >= 64 ? ~0ull : ((1ull << width) - 1);
}

uint64_t eval_simple(const Simple &s, uint64_t stored, uint64_t arg, uint64_t mask) {
    switch (s.kind) {
    case Simple::Kind::Const: return s.value & mask;
    case Simple::Kind::Param: return (s.param == 0 ? stored : arg) & mask;
    }
    return 0;
}

uint64_t eval_ret(const RetExpr &r, uint64_t stored, uint64_t arg, uint64_t mask) {
    uint64_t a = eval_simple(r.a, stored, arg, mask);
    if (!r.op) return a;
    uint64_t b = eval_simple(r.b, stored, arg, mask);
    switch (*r.op) {
    case RetOp::Add: return (a + b) & mask;
    case RetOp::Sub: return (a - b) & mask;
    case RetOp::And: return a & b;
    case RetOp::Or: return a | b;
    case RetOp::Xor: return a ^ b;
    }
    return 0;
}

uint64_t eval_math(const MathExpr &m, uint64_t stored, uint64_t arg, uint64_t mask) {
    uint64_t a = eval_simple(m.a, stored, arg, mask);
    if (!m.op) return a;
    uint64_t b = eval_simple(m.b, stored, arg, mask);
    return (*m.op == MathOp::Add ? a + b : a - b) & mask;
}

bool eval_test(const Test &t, uint64_t stored, uint64_t arg, uint64_t mask) {
    uint64_t l = eval_math(t.lhs, stored, arg, mask);
    uint64_t r = eval_math(t.rhs, stored, arg, mask);
    switch (t.cmp) {
    case CmpOp::Gt: return l > r;
    case CmpOp::Lt: return l < r;
    case CmpOp::Eq: return l == r;
    case CmpOp::Ne: return l != r;
    case CmpOp::Ge: return l >= r;
    case CmpOp::Le: return l <= r;
    }
    return false;
}

} // namespace

std::variant<MemopShape, std::vector<MemopViolation>> validate_memop(const MemopDecl &decl,
                                                                     const Program &program) {
    return Validator{decl, program, {}}.run();
}

uint64_t memop_semantics(const MemopShape &shape, uint64_t stored, uint64_t arg, uint32_t width) {
    uint64_t mask = mask_of(width);
    stored &= mask;
    arg &= mask;
    // Exhaustive over the closed shape set; no default arm.
    return std::visit(
        [&](const auto &body) -> uint64_t {
            using T = std::decay_t<decltype(body)>;
            if constexpr (std::is_same_v<T, ReturnOnly>) {
                return eval_ret(body.ret, stored, arg, mask);
            } else {
                return eval_test(body.test, stored, arg, mask)
                           ? eval_ret(body.then_ret, stored, arg, mask)
                           : eval_ret(body.else_ret, stored, arg, mask);
            }
        },
        shape.body);
}

void report_memop_violations(const std::string &name, const std::vector<MemopViolation> &vs,
                             Diagnostics &diags) {
    for (const auto &v : vs) {
        diags.add(DiagKind::MemopViolation, v.span,
                  "memop '" + name + "': " + v.message + " [" + memop_rule_name(v.rule) + "]");
    }
}

} // namespace lucid
