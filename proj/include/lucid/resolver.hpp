#pragma once

#include "lucid/ast.hpp"
#include "lucid/diag.hpp"

namespace lucid {

// Binds every identifier, folds <size> expressions to integers, numbers
// globals by declaration order and events by declaration order, and checks
// handler/event signature agreement. Mutates the program in place; returns
// false when diagnostics were produced.
bool resolve_names(Program &p, Diagnostics &diags);

// Name lookup shared by the checker, lowering and the interpreter.
// Locals/params are handled by the caller's scope; this resolves the rest.
enum class NameKind { None, Const, Global, Group, Event, Fun, Memop };
NameKind lookup_top_level(const Program &p, const std::string &name);

} // namespace lucid
