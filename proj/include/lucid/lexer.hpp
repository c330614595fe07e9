#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lucid/diag.hpp"
#include "lucid/span.hpp"

namespace lucid {

enum class Tok {
    KwConst, KwGlobal, KwEvent, KwHandle, KwFun, KwMemop,
    KwIf, KwElse, KwReturn, KwGenerate, KwMGenerate, KwNew,
    KwTrue, KwFalse, KwInt, KwBool, KwVoid, KwAuto, KwGroup,
    KwPacket, KwEntry, KwExit, KwSupport, KwHash,
    Ident, IntLit,
    LParen, RParen, LBrace, RBrace, Comma, Semi, Dot, Assign,
    Lt, Gt, Le, Ge, EqEq, Ne,
    Plus, Minus, Star, Amp, Pipe, Caret, AndAnd, OrOr, Shl, Shr,
    Eof,
};

const char *tok_name(Tok t);

struct Token {
    Tok kind = Tok::Eof;
    Span span;
    std::string text;
    uint64_t ival = 0;
};

// Lexes UTF-8 source. `//` line comments are skipped. Integer literals accept
// the time suffixes ns/us/ms/s, scaled to nanoseconds.
std::vector<Token> tokenize(const std::string &source, const std::string &file, Diagnostics &diags);

} // namespace lucid
