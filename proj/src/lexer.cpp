#include "lucid/lexer.hpp"

#include <cctype>
#include <map>

namespace lucid {

const char *tok_name(Tok t) {
    switch (t) {
    case Tok::KwConst: return "'const'";
    case Tok::KwGlobal: return "'global'";
    case Tok::KwEvent: return "'event'";
    case Tok::KwHandle: return "'handle'";
    case Tok::KwFun: return "'fun'";
    case Tok::KwMemop: return "'memop'";
    case Tok::KwIf: return "'if'";
    case Tok::KwElse: return "'else'";
    case Tok::KwReturn: return "'return'";
    case Tok::KwGenerate: return "'generate'";
    case Tok::KwMGenerate: return "'mgenerate'";
    case Tok::KwNew: return "'new'";
    case Tok::KwTrue: return "'true'";
    case Tok::KwFalse: return "'false'";
    case Tok::KwInt: return "'int'";
    case Tok::KwBool: return "'bool'";
    case Tok::KwVoid: return "'void'";
    case Tok::KwAuto: return "'auto'";
    case Tok::KwGroup: return "'group'";
    case Tok::KwPacket: return "'packet'";
    case Tok::KwEntry: return "'entry'";
    case Tok::KwExit: return "'exit'";
    case Tok::KwSupport: return "'support'";
    case Tok::KwHash: return "'hash'";
    case Tok::Ident: return "identifier";
    case Tok::IntLit: return "integer";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::LBrace: return "'{'";
    case Tok::RBrace: return "'}'";
    case Tok::Comma: return "','";
    case Tok::Semi: return "';'";
    case Tok::Dot: return "'.'";
    case Tok::Assign: return "'='";
    case Tok::Lt: return "'<'";
    case Tok::Gt: return "'>'";
    case Tok::Le: return "'<='";
    case Tok::Ge: return "'>='";
    case Tok::EqEq: return "'=='";
    case Tok::Ne: return "'!='";
    case Tok::Plus: return "'+'";
    case Tok::Minus: return "'-'";
    case Tok::Star: return "'*'";
    case Tok::Amp: return "'&'";
    case Tok::Pipe: return "'|'";
    case Tok::Caret: return "'^'";
    case Tok::AndAnd: return "'&&'";
    case Tok::OrOr: return "'||'";
    case Tok::Shl: return "'<<'";
    case Tok::Shr: return "'>>'";
    case Tok::Eof: return "end of input";
    }
    return "?";
}

namespace {

const std::map<std::string, Tok> kKeywords = {
    {"const", Tok::KwConst},   {"global", Tok::KwGlobal},     {"event", Tok::KwEvent},
    {"handle", Tok::KwHandle}, {"fun", Tok::KwFun},           {"memop", Tok::KwMemop},
    {"if", Tok::KwIf},         {"else", Tok::KwElse},         {"return", Tok::KwReturn},
    {"generate", Tok::KwGenerate}, {"mgenerate", Tok::KwMGenerate}, {"new", Tok::KwNew},
    {"true", Tok::KwTrue},     {"false", Tok::KwFalse},       {"int", Tok::KwInt},
    {"bool", Tok::KwBool},     {"void", Tok::KwVoid},         {"auto", Tok::KwAuto},
    {"group", Tok::KwGroup},   {"packet", Tok::KwPacket},     {"entry", Tok::KwEntry},
    {"exit", Tok::KwExit},     {"support", Tok::KwSupport},   {"hash", Tok::KwHash},
};

struct Cursor {
    const std::string &src;
    const std::string &file;
    size_t pos = 0;
    int line = 1, col = 1;

    bool done() const { return pos >= src.size(); }
    char peek(size_t k = 0) const { return pos + k < src.size() ? src[pos + k] : '\0'; }
    char advance() {
        char c = src[pos++];
        if (c == '\n') {
            line++;
            col = 1;
        } else {
            col++;
        }
        return c;
    }
    Span here() const { return Span{file, line, col, line, col}; }
};

} // namespace

std::vector<Token> tokenize(const std::string &source, const std::string &file, Diagnostics &diags) {
    std::vector<Token> out;
    Cursor c{source, file};

    auto push = [&](Tok kind, Span sp, std::string text, uint64_t ival = 0) {
        sp.end_line = c.line;
        sp.end_col = c.col - 1 > 0 ? c.col - 1 : 1;
        out.push_back(Token{kind, std::move(sp), std::move(text), ival});
    };

    while (!c.done()) {
        char ch = c.peek();
        if (ch == ' ' || ch == '\t' || ch == '\r' || ch == '\n') {
            c.advance();
            continue;
        }
        if (ch == '/' && c.peek(1) == '/') {
            while (!c.done() && c.peek() != '\n') c.advance();
            continue;
        }
        Span sp = c.here();
        if (std::isalpha((unsigned char)ch) || ch == '_') {
            std::string word;
            while (!c.done() && (std::isalnum((unsigned char)c.peek()) || c.peek() == '_'))
                word.push_back(c.advance());
            auto it = kKeywords.find(word);
            push(it != kKeywords.end() ? it->second : Tok::Ident, sp, word);
            continue;
        }
        if (std::isdigit((unsigned char)ch)) {
            std::string num;
            while (!c.done() && std::isdigit((unsigned char)c.peek())) num.push_back(c.advance());
            uint64_t v = std::stoull(num);
            // time-unit suffix, scaled to ns
            std::string suffix;
            while (!c.done() && std::isalpha((unsigned char)c.peek())) suffix.push_back(c.advance());
            if (suffix == "ns" || suffix.empty()) {
            } else if (suffix == "us") {
                v *= 1000ull;
            } else if (suffix == "ms") {
                v *= 1000000ull;
            } else if (suffix == "s") {
                v *= 1000000000ull;
            } else {
                diags.add(DiagKind::UnknownCharacter, sp,
                          "unknown integer suffix '" + suffix + "'");
                continue;
            }
            push(Tok::IntLit, sp, num + suffix, v);
            continue;
        }
        c.advance();
        switch (ch) {
        case '(': push(Tok::LParen, sp, "("); break;
        case ')': push(Tok::RParen, sp, ")"); break;
        case '{': push(Tok::LBrace, sp, "{"); break;
        case '}': push(Tok::RBrace, sp, "}"); break;
        case ',': push(Tok::Comma, sp, ","); break;
        case ';': push(Tok::Semi, sp, ";"); break;
        case '.': push(Tok::Dot, sp, "."); break;
        case '+': push(Tok::Plus, sp, "+"); break;
        case '-': push(Tok::Minus, sp, "-"); break;
        case '*': push(Tok::Star, sp, "*"); break;
        case '^': push(Tok::Caret, sp, "^"); break;
        case '=':
            if (c.peek() == '=') {
                c.advance();
                push(Tok::EqEq, sp, "==");
            } else {
                push(Tok::Assign, sp, "=");
            }
            break;
        case '!':
            if (c.peek() == '=') {
                c.advance();
                push(Tok::Ne, sp, "!=");
            } else {
                diags.add(DiagKind::UnknownCharacter, sp, "unknown character '!'");
            }
            break;
        case '<':
            if (c.peek() == '=') {
                c.advance();
                push(Tok::Le, sp, "<=");
            } else if (c.peek() == '<') {
                c.advance();
                push(Tok::Shl, sp, "<<");
            } else {
                push(Tok::Lt, sp, "<");
            }
            break;
        case '>':
            if (c.peek() == '=') {
                c.advance();
                push(Tok::Ge, sp, ">=");
            } else if (c.peek() == '>') {
                c.advance();
                push(Tok::Shr, sp, ">>");
            } else {
                push(Tok::Gt, sp, ">");
            }
            break;
        case '&':
            if (c.peek() == '&') {
                c.advance();
                push(Tok::AndAnd, sp, "&&");
            } else {
                push(Tok::Amp, sp, "&");
            }
            break;
        case '|':
            if (c.peek() == '|') {
                c.advance();
                push(Tok::OrOr, sp, "||");
            } else {
                push(Tok::Pipe, sp, "|");
            }
            break;
        default:
            diags.add(DiagKind::UnknownCharacter, sp,
                      std::string("unknown character '") + ch + "'");
            break;
        }
    }
    Span sp = c.here();
    out.push_back(Token{Tok::Eof, sp, "", 0});
    return out;
}

} // namespace lucid
