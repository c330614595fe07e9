#include "lucid/ast.hpp"

namespace lucid {

const char *binop_text(BinKind op) {
    switch (op) {
    case BinKind::Add: return "+";
    case BinKind::Sub: return "-";
    case BinKind::Mul: return "*";
    case BinKind::BitAnd: return "&";
    case BinKind::BitOr: return "|";
    case BinKind::BitXor: return "^";
    case BinKind::Eq: return "==";
    case BinKind::Ne: return "!=";
    case BinKind::Lt: return "<";
    case BinKind::Gt: return ">";
    case BinKind::Le: return "<=";
    case BinKind::Ge: return ">=";
    case BinKind::LAnd: return "&&";
    case BinKind::LOr: return "||";
    }
    return "?";
}

bool binop_is_compare(BinKind op) {
    switch (op) {
    case BinKind::Eq:
    case BinKind::Ne:
    case BinKind::Lt:
    case BinKind::Gt:
    case BinKind::Le:
    case BinKind::Ge:
        return true;
    default:
        return false;
    }
}

ExprPtr clone_expr(const Expr &e) {
    auto out = std::make_unique<Expr>();
    out->span = e.span;
    std::visit(
        [&](const auto &node) {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, ValueE> || std::is_same_v<T, VarE>) {
                out->v = node;
            } else if constexpr (std::is_same_v<T, BinE>) {
                out->v = BinE{node.op, clone_expr(*node.lhs), clone_expr(*node.rhs)};
            } else if constexpr (std::is_same_v<T, CallE>) {
                CallE c{node.module, node.name, {}};
                for (const auto &a : node.args) c.args.push_back(clone_expr(*a));
                out->v = std::move(c);
            } else if constexpr (std::is_same_v<T, HashE>) {
                HashE h{node.width, {}};
                for (const auto &a : node.args) h.args.push_back(clone_expr(*a));
                out->v = std::move(h);
            }
        },
        e.v);
    return out;
}

StmtPtr clone_stmt(const Stmt &s) {
    auto out = std::make_unique<Stmt>();
    out->span = s.span;
    std::visit(
        [&](const auto &node) {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, IfS>) {
                out->v = IfS{clone_expr(*node.cond), clone_block(node.then_blk),
                             clone_block(node.else_blk), node.has_else};
            } else if constexpr (std::is_same_v<T, LocalS>) {
                out->v = LocalS{node.ty, node.name, node.init ? clone_expr(*node.init) : nullptr};
            } else if constexpr (std::is_same_v<T, AssignS>) {
                out->v = AssignS{node.name, clone_expr(*node.value)};
            } else if constexpr (std::is_same_v<T, ExprS>) {
                out->v = ExprS{clone_expr(*node.expr)};
            } else if constexpr (std::is_same_v<T, GenerateS>) {
                out->v = GenerateS{clone_expr(*node.event), node.multicast};
            } else if constexpr (std::is_same_v<T, ReturnS>) {
                out->v = ReturnS{node.value ? clone_expr(*node.value) : nullptr};
            }
        },
        s.v);
    return out;
}

Block clone_block(const Block &b) {
    Block out;
    out.reserve(b.size());
    for (const auto &s : b) out.push_back(clone_stmt(*s));
    return out;
}

namespace {

bool eq_size(const std::optional<SizeExpr> &a, const std::optional<SizeExpr> &b) {
    if (a.has_value() != b.has_value()) return false;
    return !a || *a == *b;
}

bool eq_ty(const Ty &a, const Ty &b) { return a.kind == b.kind && eq_size(a.width, b.width); }

bool eq_params(const std::vector<Param> &a, const std::vector<Param> &b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); i++)
        if (!eq_ty(a[i].ty, b[i].ty) || a[i].name != b[i].name) return false;
    return true;
}

bool eq_block(const Block &a, const Block &b);

} // namespace

bool ast_equal(const Expr &a, const Expr &b) {
    if (a.v.index() != b.v.index()) return false;
    if (const auto *va = std::get_if<ValueE>(&a.v)) {
        const auto &vb = std::get<ValueE>(b.v);
        return va->is_bool == vb.is_bool && va->v == vb.v && eq_size(va->width, vb.width);
    }
    if (const auto *va = std::get_if<VarE>(&a.v)) return va->name == std::get<VarE>(b.v).name;
    if (const auto *va = std::get_if<BinE>(&a.v)) {
        const auto &vb = std::get<BinE>(b.v);
        return va->op == vb.op && ast_equal(*va->lhs, *vb.lhs) && ast_equal(*va->rhs, *vb.rhs);
    }
    if (const auto *va = std::get_if<CallE>(&a.v)) {
        const auto &vb = std::get<CallE>(b.v);
        if (va->module != vb.module || va->name != vb.name || va->args.size() != vb.args.size())
            return false;
        for (size_t i = 0; i < va->args.size(); i++)
            if (!ast_equal(*va->args[i], *vb.args[i])) return false;
        return true;
    }
    const auto &ha = std::get<HashE>(a.v);
    const auto &hb = std::get<HashE>(b.v);
    if (!(ha.width == hb.width) || ha.args.size() != hb.args.size()) return false;
    for (size_t i = 0; i < ha.args.size(); i++)
        if (!ast_equal(*ha.args[i], *hb.args[i])) return false;
    return true;
}

bool ast_equal(const Stmt &a, const Stmt &b) {
    if (a.v.index() != b.v.index()) return false;
    if (const auto *sa = std::get_if<IfS>(&a.v)) {
        const auto &sb = std::get<IfS>(b.v);
        return sa->has_else == sb.has_else && ast_equal(*sa->cond, *sb.cond) &&
               eq_block(sa->then_blk, sb.then_blk) && eq_block(sa->else_blk, sb.else_blk);
    }
    if (const auto *sa = std::get_if<LocalS>(&a.v)) {
        const auto &sb = std::get<LocalS>(b.v);
        if (!eq_ty(sa->ty, sb.ty) || sa->name != sb.name) return false;
        if ((sa->init == nullptr) != (sb.init == nullptr)) return false;
        return !sa->init || ast_equal(*sa->init, *sb.init);
    }
    if (const auto *sa = std::get_if<AssignS>(&a.v)) {
        const auto &sb = std::get<AssignS>(b.v);
        return sa->name == sb.name && ast_equal(*sa->value, *sb.value);
    }
    if (const auto *sa = std::get_if<ExprS>(&a.v))
        return ast_equal(*sa->expr, *std::get<ExprS>(b.v).expr);
    if (const auto *sa = std::get_if<GenerateS>(&a.v)) {
        const auto &sb = std::get<GenerateS>(b.v);
        return sa->multicast == sb.multicast && ast_equal(*sa->event, *sb.event);
    }
    const auto &ra = std::get<ReturnS>(a.v);
    const auto &rb = std::get<ReturnS>(b.v);
    if ((ra.value == nullptr) != (rb.value == nullptr)) return false;
    return !ra.value || ast_equal(*ra.value, *rb.value);
}

namespace {
bool eq_block(const Block &a, const Block &b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); i++)
        if (!ast_equal(*a[i], *b[i])) return false;
    return true;
}
} // namespace

bool ast_equal(const Program &a, const Program &b) {
    if (a.decls.size() != b.decls.size()) return false;
    for (size_t i = 0; i < a.decls.size(); i++) {
        const Decl &da = a.decls[i];
        const Decl &db = b.decls[i];
        if (da.v.index() != db.v.index()) return false;
        bool ok = std::visit(
            [&](const auto &x) {
                using T = std::decay_t<decltype(x)>;
                const auto &y = std::get<T>(db.v);
                if constexpr (std::is_same_v<T, ConstDecl>) {
                    return eq_ty(x.ty, y.ty) && x.name == y.name && ast_equal(*x.value, *y.value);
                } else if constexpr (std::is_same_v<T, GlobalDecl>) {
                    return x.name == y.name && x.module == y.module &&
                           x.cell_width == y.cell_width && ast_equal(*x.length, *y.length);
                } else if constexpr (std::is_same_v<T, GroupDecl>) {
                    return x.name == y.name && x.members == y.members;
                } else if constexpr (std::is_same_v<T, EventDecl>) {
                    return x.name == y.name && x.qual == y.qual && eq_params(x.params, y.params);
                } else if constexpr (std::is_same_v<T, HandlerDecl>) {
                    return x.event == y.event && eq_params(x.params, y.params) &&
                           eq_block(x.body, y.body);
                } else if constexpr (std::is_same_v<T, FunDecl>) {
                    return eq_ty(x.ret, y.ret) && x.name == y.name &&
                           eq_params(x.params, y.params) && eq_block(x.body, y.body);
                } else {
                    return x.name == y.name && eq_params(x.params, y.params) &&
                           eq_block(x.body, y.body);
                }
            },
            da.v);
        if (!ok) return false;
    }
    return true;
}

} // namespace lucid
