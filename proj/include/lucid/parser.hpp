#pragma once

#include <optional>

#include "lucid/ast.hpp"
#include "lucid/lexer.hpp"

namespace lucid {

// Parses a token stream into a program AST. Returns nullopt and a SyntaxError
// diagnostic (with the expected-token set) on the first malformed construct.
std::optional<Program> parse_program(const std::vector<Token> &tokens, const std::string &file,
                                     Diagnostics &diags);

// Convenience: tokenize + parse.
std::optional<Program> parse_source(const std::string &source, const std::string &file,
                                    Diagnostics &diags);

} // namespace lucid
