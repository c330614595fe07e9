#include "lucid/parser.hpp"

#include <set>

namespace lucid {

namespace {

struct ParseError {};

class Parser {
  public:
    Parser(const std::vector<Token> &tokens, std::string file, Diagnostics &diags)
        : toks_(tokens), file_(std::move(file)), diags_(diags) {}

    std::optional<Program> run() {
        Program p;
        p.file = file_;
        try {
            while (!at(Tok::Eof)) p.decls.push_back(decl());
        } catch (const ParseError &) {
            return std::nullopt;
        }
        return p;
    }

  private:
    const std::vector<Token> &toks_;
    std::string file_;
    Diagnostics &diags_;
    size_t pos_ = 0;

    const Token &peek(size_t k = 0) const {
        size_t i = pos_ + k;
        return i < toks_.size() ? toks_[i] : toks_.back();
    }
    bool at(Tok t) const { return peek().kind == t; }
    const Token &advance() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
    bool accept(Tok t) {
        if (!at(t)) return false;
        advance();
        return true;
    }

    [[noreturn]] void fail(std::initializer_list<Tok> expected, const char *what = nullptr) {
        std::string msg = "expected ";
        bool first = true;
        for (Tok t : expected) {
            if (!first) msg += " or ";
            msg += tok_name(t);
            first = false;
        }
        if (what) msg += std::string(" (") + what + ")";
        msg += ", found " + std::string(tok_name(peek().kind));
        diags_.add(DiagKind::SyntaxError, peek().span, msg);
        throw ParseError{};
    }

    const Token &expect(Tok t, const char *what = nullptr) {
        if (!at(t)) fail({t}, what);
        return advance();
    }

    bool at_type() const {
        switch (peek().kind) {
        case Tok::KwInt:
        case Tok::KwBool:
        case Tok::KwVoid:
        case Tok::KwAuto:
        case Tok::KwEvent:
        case Tok::KwGroup:
            return true;
        case Tok::Ident:
            return peek().text == "Array" &&
                   (peek(1).kind == Tok::Ident || peek(1).kind == Tok::Shl);
        default:
            return false;
        }
    }

    SizeExpr size_expr() {
        if (at(Tok::IntLit)) {
            const Token &t = advance();
            return SizeExpr::lit((uint32_t)t.ival);
        }
        if (at(Tok::Ident)) return SizeExpr::name(advance().text);
        fail({Tok::IntLit, Tok::Ident}, "size");
    }

    Ty type() {
        switch (peek().kind) {
        case Tok::KwBool: advance(); return Ty::simple(Ty::Kind::Bool);
        case Tok::KwVoid: advance(); return Ty::simple(Ty::Kind::Void);
        case Tok::KwAuto: advance(); return Ty::simple(Ty::Kind::Auto);
        case Tok::KwGroup: advance(); return Ty::simple(Ty::Kind::Group);
        case Tok::KwEvent: advance(); return Ty::simple(Ty::Kind::Event);
        case Tok::KwInt: {
            advance();
            std::optional<SizeExpr> w;
            if (accept(Tok::Lt)) {
                w = size_expr();
                expect(Tok::Gt, "width");
            }
            return Ty::int_ty(std::move(w));
        }
        case Tok::Ident:
            if (peek().text == "Array") {
                advance();
                std::optional<SizeExpr> w;
                if (accept(Tok::Shl)) {
                    w = size_expr();
                    expect(Tok::Shr, "cell width");
                }
                return Ty{Ty::Kind::ArrayRef, std::move(w)};
            }
            break;
        default:
            break;
        }
        fail({Tok::KwInt, Tok::KwBool, Tok::KwVoid, Tok::KwAuto}, "type");
    }

    std::vector<Param> params() {
        std::vector<Param> out;
        expect(Tok::LParen);
        if (!at(Tok::RParen)) {
            do {
                Span sp = peek().span;
                Ty ty = type();
                std::string name = expect(Tok::Ident, "parameter name").text;
                out.push_back(Param{std::move(ty), std::move(name), sp});
            } while (accept(Tok::Comma));
        }
        expect(Tok::RParen);
        return out;
    }

    Decl decl() {
        Span sp = peek().span;
        switch (peek().kind) {
        case Tok::KwConst: return const_decl(sp);
        case Tok::KwGlobal: return global_decl(sp);
        case Tok::KwEvent:
        case Tok::KwPacket:
        case Tok::KwSupport: return event_decl(sp);
        case Tok::KwHandle: return handler_decl(sp);
        case Tok::KwFun: return fun_decl(sp);
        case Tok::KwMemop: return memop_decl(sp);
        default:
            fail({Tok::KwConst, Tok::KwGlobal, Tok::KwEvent, Tok::KwHandle, Tok::KwFun,
                  Tok::KwMemop},
                 "declaration");
        }
    }

    Decl const_decl(Span sp) {
        expect(Tok::KwConst);
        if (at(Tok::KwGroup)) {
            advance();
            std::string name = expect(Tok::Ident, "group name").text;
            expect(Tok::Assign);
            expect(Tok::LBrace);
            std::vector<uint32_t> members;
            if (!at(Tok::RBrace)) {
                do {
                    members.push_back((uint32_t)expect(Tok::IntLit, "switch id").ival);
                } while (accept(Tok::Comma));
            }
            expect(Tok::RBrace);
            expect(Tok::Semi);
            return Decl{sp, GroupDecl{std::move(name), std::move(members)}};
        }
        Ty ty = type();
        std::string name = expect(Tok::Ident, "constant name").text;
        expect(Tok::Assign);
        ExprPtr value = expr();
        expect(Tok::Semi);
        return Decl{sp, ConstDecl{std::move(ty), std::move(name), std::move(value)}};
    }

    Decl global_decl(Span sp) {
        expect(Tok::KwGlobal);
        std::string name = expect(Tok::Ident, "global name").text;
        expect(Tok::Assign);
        expect(Tok::KwNew);
        std::string module = expect(Tok::Ident, "module name").text;
        expect(Tok::Shl, "'<<' of module size");
        SizeExpr width = size_expr();
        expect(Tok::Shr, "'>>' of module size");
        expect(Tok::LParen);
        ExprPtr length = expr();
        expect(Tok::RParen);
        expect(Tok::Semi);
        return Decl{sp, GlobalDecl{std::move(name), std::move(module), std::move(width),
                                   std::move(length)}};
    }

    Decl event_decl(Span sp) {
        EventQualifier qual = EventQualifier::None;
        if (accept(Tok::KwSupport)) {
            qual = EventQualifier::Support;
        } else if (accept(Tok::KwPacket)) {
            if (accept(Tok::KwEntry))
                qual = EventQualifier::PacketEntry;
            else if (accept(Tok::KwExit))
                qual = EventQualifier::PacketExit;
            else
                fail({Tok::KwEntry, Tok::KwExit}, "event qualifier");
        }
        expect(Tok::KwEvent);
        std::string name = expect(Tok::Ident, "event name").text;
        std::vector<Param> ps = params();
        expect(Tok::Semi);
        return Decl{sp, EventDecl{std::move(name), std::move(ps), qual}};
    }

    Decl handler_decl(Span sp) {
        expect(Tok::KwHandle);
        std::string name = expect(Tok::Ident, "event name").text;
        std::vector<Param> ps = params();
        Block body = block();
        return Decl{sp, HandlerDecl{std::move(name), std::move(ps), std::move(body)}};
    }

    Decl fun_decl(Span sp) {
        expect(Tok::KwFun);
        Ty ret = type();
        std::string name = expect(Tok::Ident, "function name").text;
        std::vector<Param> ps = params();
        Block body = block();
        return Decl{sp, FunDecl{std::move(ret), std::move(name), std::move(ps), std::move(body)}};
    }

    Decl memop_decl(Span sp) {
        expect(Tok::KwMemop);
        std::string name = expect(Tok::Ident, "memop name").text;
        std::vector<Param> ps = params();
        Block body = block();
        return Decl{sp, MemopDecl{std::move(name), std::move(ps), std::move(body)}};
    }

    Block block() {
        expect(Tok::LBrace);
        Block out;
        while (!at(Tok::RBrace) && !at(Tok::Eof)) {
            if (accept(Tok::Semi)) continue; // <no_op>
            out.push_back(stmt());
        }
        expect(Tok::RBrace);
        return out;
    }

    // A single statement, or a braced block, as an if/else arm.
    Block arm() {
        if (at(Tok::LBrace)) return block();
        Block out;
        out.push_back(stmt());
        return out;
    }

    StmtPtr stmt() {
        Span sp = peek().span;
        auto mk = [&](auto v) {
            auto s = std::make_unique<Stmt>();
            s->span = sp;
            s->v = std::move(v);
            return s;
        };
        switch (peek().kind) {
        case Tok::KwIf: {
            advance();
            expect(Tok::LParen);
            ExprPtr cond = expr();
            expect(Tok::RParen);
            Block then_blk = arm();
            Block else_blk;
            bool has_else = false;
            if (accept(Tok::KwElse)) {
                has_else = true;
                else_blk = arm();
            }
            return mk(IfS{std::move(cond), std::move(then_blk), std::move(else_blk), has_else});
        }
        case Tok::KwGenerate:
        case Tok::KwMGenerate: {
            bool multicast = peek().kind == Tok::KwMGenerate;
            advance();
            ExprPtr ev = expr();
            expect(Tok::Semi);
            return mk(GenerateS{std::move(ev), multicast});
        }
        case Tok::KwReturn: {
            advance();
            ExprPtr value;
            if (!at(Tok::Semi)) value = expr();
            expect(Tok::Semi);
            return mk(ReturnS{std::move(value)});
        }
        default:
            break;
        }
        if (at_type()) {
            Ty ty = type();
            std::string name = expect(Tok::Ident, "local name").text;
            ExprPtr init;
            if (accept(Tok::Assign)) init = expr();
            expect(Tok::Semi);
            return mk(LocalS{std::move(ty), std::move(name), std::move(init)});
        }
        if (at(Tok::Ident) && peek(1).kind == Tok::Assign) {
            std::string name = advance().text;
            advance(); // '='
            ExprPtr value = expr();
            expect(Tok::Semi);
            return mk(AssignS{std::move(name), std::move(value)});
        }
        ExprPtr e = expr();
        expect(Tok::Semi);
        return mk(ExprS{std::move(e)});
    }

    // Precedence-climbing expression parser; levels follow C.
    ExprPtr expr() { return bin_expr(0); }

    static int prec(Tok t) {
        switch (t) {
        case Tok::OrOr: return 1;
        case Tok::AndAnd: return 2;
        case Tok::Pipe: return 3;
        case Tok::Caret: return 4;
        case Tok::Amp: return 5;
        case Tok::EqEq:
        case Tok::Ne: return 6;
        case Tok::Lt:
        case Tok::Gt:
        case Tok::Le:
        case Tok::Ge: return 7;
        case Tok::Plus:
        case Tok::Minus: return 8;
        case Tok::Star: return 9;
        default: return -1;
        }
    }

    static BinKind to_binop(Tok t) {
        switch (t) {
        case Tok::OrOr: return BinKind::LOr;
        case Tok::AndAnd: return BinKind::LAnd;
        case Tok::Pipe: return BinKind::BitOr;
        case Tok::Caret: return BinKind::BitXor;
        case Tok::Amp: return BinKind::BitAnd;
        case Tok::EqEq: return BinKind::Eq;
        case Tok::Ne: return BinKind::Ne;
        case Tok::Lt: return BinKind::Lt;
        case Tok::Gt: return BinKind::Gt;
        case Tok::Le: return BinKind::Le;
        case Tok::Ge: return BinKind::Ge;
        case Tok::Plus: return BinKind::Add;
        case Tok::Minus: return BinKind::Sub;
        default: return BinKind::Mul;
        }
    }

    ExprPtr bin_expr(int min_prec) {
        ExprPtr lhs = primary();
        for (;;) {
            int p = prec(peek().kind);
            if (p < 0 || p < min_prec) break;
            Tok op = advance().kind;
            ExprPtr rhs = bin_expr(p + 1);
            auto e = std::make_unique<Expr>();
            e->span = Span::join(lhs->span, rhs->span);
            e->v = BinE{to_binop(op), std::move(lhs), std::move(rhs)};
            lhs = std::move(e);
        }
        return lhs;
    }

    std::vector<ExprPtr> args() {
        std::vector<ExprPtr> out;
        expect(Tok::LParen);
        if (!at(Tok::RParen)) {
            do {
                out.push_back(expr());
            } while (accept(Tok::Comma));
        }
        expect(Tok::RParen);
        return out;
    }

    ExprPtr primary() {
        Span sp = peek().span;
        auto mk = [&](auto v, Span s) {
            auto e = std::make_unique<Expr>();
            e->span = s;
            e->v = std::move(v);
            return e;
        };
        switch (peek().kind) {
        case Tok::LParen: {
            advance();
            ExprPtr inner = expr();
            expect(Tok::RParen);
            return inner;
        }
        case Tok::KwTrue:
            advance();
            return mk(ValueE{true, 1, std::nullopt}, sp);
        case Tok::KwFalse:
            advance();
            return mk(ValueE{true, 0, std::nullopt}, sp);
        case Tok::IntLit: {
            const Token &lit = advance();
            std::optional<SizeExpr> width;
            // A `<size>` suffix binds only when the '<' is adjacent to the
            // literal, so `5<16>` is a sized value while `a < 16` is a compare.
            if (at(Tok::Lt) && peek().span.start_line == lit.span.end_line &&
                peek().span.start_col == lit.span.end_col + 1 &&
                (peek(1).kind == Tok::IntLit || peek(1).kind == Tok::Ident) &&
                peek(2).kind == Tok::Gt) {
                advance();
                width = size_expr();
                expect(Tok::Gt);
            }
            return mk(ValueE{false, lit.ival, std::move(width)}, sp);
        }
        case Tok::KwHash: {
            advance();
            expect(Tok::Lt, "hash width");
            SizeExpr w = size_expr();
            expect(Tok::Gt, "hash width");
            std::vector<ExprPtr> as = args();
            return mk(HashE{std::move(w), std::move(as)}, sp);
        }
        case Tok::Ident: {
            std::string name = advance().text;
            if (accept(Tok::Dot)) {
                std::string member = expect(Tok::Ident, "builtin name").text;
                std::vector<ExprPtr> as = args();
                return mk(CallE{std::move(name), std::move(member), std::move(as)}, sp);
            }
            if (at(Tok::LParen)) {
                std::vector<ExprPtr> as = args();
                return mk(CallE{"", std::move(name), std::move(as)}, sp);
            }
            return mk(VarE{std::move(name)}, sp);
        }
        default:
            fail({Tok::IntLit, Tok::Ident, Tok::LParen}, "expression");
        }
    }
};

} // namespace

std::optional<Program> parse_program(const std::vector<Token> &tokens, const std::string &file,
                                     Diagnostics &diags) {
    return Parser(tokens, file, diags).run();
}

std::optional<Program> parse_source(const std::string &source, const std::string &file,
                                    Diagnostics &diags) {
    std::vector<Token> toks = tokenize(source, file, diags);
    if (!diags.empty()) return std::nullopt;
    return parse_program(toks, file, diags);
}

} // namespace lucid
