#pragma once

#include <string>

#include "lucid/atomic.hpp"
#include "lucid/effects.hpp"
#include "lucid/layout.hpp"

namespace lucid {

// One table block for a single atomic statement, following the operation /
// memory-operation / branch table templates.
std::string emit_table(const AtomicStmt &stmt, const std::string &name,
                       const CheckedProgram &checked);

// The optimized pipeline: one control block, merged tables in stage order,
// each preceded by @stage and @ignore_dependencies pragmas, and an apply
// block invoking the tables in order.
std::string emit_pipeline(const PipelineLayout &layout, const Program &p,
                          const CheckedProgram &checked);

// Unoptimized form: the atomic table graph in control order, branch tables
// included (--no-opt).
std::string emit_unoptimized(const AtomicTableGraph &graph, const Program &p,
                             const CheckedProgram &checked);

} // namespace lucid
