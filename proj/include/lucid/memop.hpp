#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "lucid/ast.hpp"
#include "lucid/diag.hpp"

namespace lucid {

// Normalized form of an accepted memop. Accepting a memop guarantees it fits
// in a single stateful ALU, so the shape space is deliberately tiny.
namespace memop {

struct Simple {
    enum class Kind { Const, Param } kind = Kind::Const;
    uint64_t value = 0; // Const: folded constant value
    int param = 0;      // Param: 0 = stored cell, 1 = caller argument
};

enum class RetOp { Add, Sub, And, Or, Xor };
enum class MathOp { Add, Sub };
enum class CmpOp { Gt, Lt, Eq, Ne, Ge, Le };

// <simple> or <simple> op <simple>
struct RetExpr {
    Simple a;
    std::optional<RetOp> op;
    Simple b;
};

// <simple> or <simple> +/- <simple>
struct MathExpr {
    Simple a;
    std::optional<MathOp> op;
    Simple b;
};

struct Test {
    MathExpr lhs;
    CmpOp cmp = CmpOp::Eq;
    MathExpr rhs;
};

struct ReturnOnly {
    RetExpr ret;
};

struct IfElse {
    Test test;
    RetExpr then_ret;
    RetExpr else_ret;
};

} // namespace memop

struct MemopShape {
    std::string name;
    std::variant<memop::ReturnOnly, memop::IfElse> body;
};

enum class MemopRule {
    TooManyParams,
    LocalDeclInBody,
    BadOperator,
    ParamReuse,
    BadShape,
    MissingElse,
    NestedIf,
    CompoundCondition,
};

const char *memop_rule_name(MemopRule r);

struct MemopViolation {
    MemopRule rule;
    Span span;
    std::string message;
};

// Checks a memop declaration against the restricted stateful-operation
// grammar. All violations are reported, not just the first. Constant
// references are folded using the resolved program's constant table.
std::variant<MemopShape, std::vector<MemopViolation>> validate_memop(const MemopDecl &decl,
                                                                     const Program &program);

// Evaluates a validated memop as a pure function of the stored cell value and
// the caller argument, at cell width `width` bits. Arithmetic wraps mod 2^w
// and comparisons are unsigned.
uint64_t memop_semantics(const MemopShape &shape, uint64_t stored, uint64_t arg, uint32_t width);

// Record memop violations into a diagnostics stream.
void report_memop_violations(const std::string &name, const std::vector<MemopViolation> &vs,
                             Diagnostics &diags);

} // namespace lucid
