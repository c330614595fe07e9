#include "lucid/printer.hpp"

#include <sstream>

namespace lucid {

namespace {

// Operator levels mirror the parser so that emitted parentheses are minimal
// but round-trip exactly.
int level(BinKind op) {
    switch (op) {
    case BinKind::LOr: return 1;
    case BinKind::LAnd: return 2;
    case BinKind::BitOr: return 3;
    case BinKind::BitXor: return 4;
    case BinKind::BitAnd: return 5;
    case BinKind::Eq:
    case BinKind::Ne: return 6;
    case BinKind::Lt:
    case BinKind::Gt:
    case BinKind::Le:
    case BinKind::Ge: return 7;
    case BinKind::Add:
    case BinKind::Sub: return 8;
    case BinKind::Mul: return 9;
    }
    return 0;
}

std::string size_str(const SizeExpr &s) {
    return s.const_ref ? *s.const_ref : std::to_string(*s.value);
}

void print_expr(std::ostringstream &os, const Expr &e, int parent_level, bool rhs) {
    std::visit(
        [&](const auto &node) {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, ValueE>) {
                if (node.is_bool) {
                    os << (node.v ? "true" : "false");
                } else {
                    os << node.v;
                    if (node.width) os << "<" << size_str(*node.width) << ">";
                }
            } else if constexpr (std::is_same_v<T, VarE>) {
                os << node.name;
            } else if constexpr (std::is_same_v<T, BinE>) {
                int lv = level(node.op);
                bool need = lv < parent_level || (lv == parent_level && rhs);
                if (need) os << "(";
                print_expr(os, *node.lhs, lv, false);
                os << " " << binop_text(node.op) << " ";
                print_expr(os, *node.rhs, lv, true);
                if (need) os << ")";
            } else if constexpr (std::is_same_v<T, CallE>) {
                os << node.full_name() << "(";
                for (size_t i = 0; i < node.args.size(); i++) {
                    if (i) os << ", ";
                    print_expr(os, *node.args[i], 0, false);
                }
                os << ")";
            } else if constexpr (std::is_same_v<T, HashE>) {
                os << "hash<" << size_str(node.width) << ">(";
                for (size_t i = 0; i < node.args.size(); i++) {
                    if (i) os << ", ";
                    print_expr(os, *node.args[i], 0, false);
                }
                os << ")";
            }
        },
        e.v);
}

std::string ty_str(const Ty &t) {
    switch (t.kind) {
    case Ty::Kind::Bool: return "bool";
    case Ty::Kind::Void: return "void";
    case Ty::Kind::Auto: return "auto";
    case Ty::Kind::Group: return "group";
    case Ty::Kind::Event: return "event";
    case Ty::Kind::ArrayRef:
        return t.width ? "Array<<" + size_str(*t.width) + ">>" : "Array";
    case Ty::Kind::Int:
        return t.width ? "int<" + size_str(*t.width) + ">" : "int";
    }
    return "?";
}

void indent(std::ostringstream &os, int depth) {
    for (int i = 0; i < depth; i++) os << "    ";
}

void print_block(std::ostringstream &os, const Block &b, int depth);

void print_stmt(std::ostringstream &os, const Stmt &s, int depth) {
    indent(os, depth);
    std::visit(
        [&](const auto &node) {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, IfS>) {
                os << "if (";
                print_expr(os, *node.cond, 0, false);
                os << ") {\n";
                print_block(os, node.then_blk, depth + 1);
                indent(os, depth);
                os << "}";
                if (node.has_else) {
                    os << " else {\n";
                    print_block(os, node.else_blk, depth + 1);
                    indent(os, depth);
                    os << "}";
                }
                os << "\n";
            } else if constexpr (std::is_same_v<T, LocalS>) {
                os << ty_str(node.ty) << " " << node.name;
                if (node.init) {
                    os << " = ";
                    print_expr(os, *node.init, 0, false);
                }
                os << ";\n";
            } else if constexpr (std::is_same_v<T, AssignS>) {
                os << node.name << " = ";
                print_expr(os, *node.value, 0, false);
                os << ";\n";
            } else if constexpr (std::is_same_v<T, ExprS>) {
                print_expr(os, *node.expr, 0, false);
                os << ";\n";
            } else if constexpr (std::is_same_v<T, GenerateS>) {
                os << (node.multicast ? "mgenerate " : "generate ");
                print_expr(os, *node.event, 0, false);
                os << ";\n";
            } else if constexpr (std::is_same_v<T, ReturnS>) {
                os << "return";
                if (node.value) {
                    os << " ";
                    print_expr(os, *node.value, 0, false);
                }
                os << ";\n";
            }
        },
        s.v);
}

void print_block(std::ostringstream &os, const Block &b, int depth) {
    for (const auto &s : b) print_stmt(os, *s, depth);
}

void print_params(std::ostringstream &os, const std::vector<Param> &ps) {
    os << "(";
    for (size_t i = 0; i < ps.size(); i++) {
        if (i) os << ", ";
        os << ty_str(ps[i].ty) << " " << ps[i].name;
    }
    os << ")";
}

} // namespace

std::string pretty_print(const Expr &e) {
    std::ostringstream os;
    print_expr(os, e, 0, false);
    return os.str();
}

std::string pretty_print(const Stmt &s) {
    std::ostringstream os;
    print_stmt(os, s, 0);
    return os.str();
}

std::string pretty_print(const Ty &t) { return ty_str(t); }

std::string pretty_print(const Program &p) {
    std::ostringstream os;
    for (const auto &d : p.decls) {
        std::visit(
            [&](const auto &node) {
                using T = std::decay_t<decltype(node)>;
                if constexpr (std::is_same_v<T, ConstDecl>) {
                    os << "const " << ty_str(node.ty) << " " << node.name << " = ";
                    print_expr(os, *node.value, 0, false);
                    os << ";\n";
                } else if constexpr (std::is_same_v<T, GlobalDecl>) {
                    os << "global " << node.name << " = new " << node.module << "<<"
                       << size_str(node.cell_width) << ">>(";
                    print_expr(os, *node.length, 0, false);
                    os << ");\n";
                } else if constexpr (std::is_same_v<T, GroupDecl>) {
                    os << "const group " << node.name << " = {";
                    for (size_t i = 0; i < node.members.size(); i++) {
                        if (i) os << ", ";
                        os << node.members[i];
                    }
                    os << "};\n";
                } else if constexpr (std::is_same_v<T, EventDecl>) {
                    switch (node.qual) {
                    case EventQualifier::Support: os << "support "; break;
                    case EventQualifier::PacketEntry: os << "packet entry "; break;
                    case EventQualifier::PacketExit: os << "packet exit "; break;
                    case EventQualifier::None: break;
                    }
                    os << "event " << node.name;
                    print_params(os, node.params);
                    os << ";\n";
                } else if constexpr (std::is_same_v<T, HandlerDecl>) {
                    os << "handle " << node.event;
                    print_params(os, node.params);
                    os << " {\n";
                    print_block(os, node.body, 1);
                    os << "}\n";
                } else if constexpr (std::is_same_v<T, FunDecl>) {
                    os << "fun " << ty_str(node.ret) << " " << node.name;
                    print_params(os, node.params);
                    os << " {\n";
                    print_block(os, node.body, 1);
                    os << "}\n";
                } else if constexpr (std::is_same_v<T, MemopDecl>) {
                    os << "memop " << node.name;
                    print_params(os, node.params);
                    os << " {\n";
                    print_block(os, node.body, 1);
                    os << "}\n";
                }
            },
            d.v);
    }
    return os.str();
}

} // namespace lucid
