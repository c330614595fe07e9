#pragma once

#include <string>

#include "lucid/ast.hpp"

namespace lucid {

// Canonical source form. parse(pretty_print(p)) is structurally equal to p.
std::string pretty_print(const Program &p);
std::string pretty_print(const Expr &e);
std::string pretty_print(const Stmt &s);
std::string pretty_print(const Ty &t);

} // namespace lucid
