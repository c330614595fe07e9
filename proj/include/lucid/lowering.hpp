#pragma once

#include "lucid/atomic.hpp"
#include "lucid/diag.hpp"
#include "lucid/effects.hpp"

namespace lucid {

// A program with every function call replaced by an alpha-renamed copy of the
// callee body (tail returns rewritten to assignments). `vars` extends the
// checked per-handler variable table with the inlined names.
struct InlinedProgram {
    const Program *source = nullptr;
    std::map<std::string, Block> handler_bodies; // by event name
    std::map<std::string, std::map<std::string, VarInfo>> vars;
};

// Inlines all function calls in handler bodies. Functions cannot recurse by
// construction (names resolve only after declaration); a cycle is still
// rejected defensively.
std::optional<InlinedProgram> inline_calls(const Program &p, const CheckedProgram &checked,
                                           Diagnostics &diags);

// Three-address normalization of one handler body. Compound expressions are
// split through %t<k> temporaries, var-vs-var compares become a wrapping
// subtract plus a compare against zero, and every Array call becomes one
// MemOp. Deterministic temporary numbering.
NormBlock normalize(const Block &body, const std::string &event, const InlinedProgram &inlined,
                    const CheckedProgram &checked, const Program &p,
                    std::vector<std::string> *notes = nullptr);

struct LoweredProgram {
    std::vector<NormHandler> handlers;
    AtomicTableGraph graph;
    std::vector<std::string> notes;
};

// Full lowering pipeline: inline, normalize each handler, build the graph.
std::optional<LoweredProgram> lower_program(const Program &p, const CheckedProgram &checked,
                                            Diagnostics &diags);

// Builds the table graph (dispatch root + one DAG per handler).
AtomicTableGraph build_table_graph(const std::vector<NormHandler> &handlers);

// IR dump, (--emit-ir): {nodes:[{id,kind,detail}], edges:[{from,to,label}]}.
std::string graph_to_json(const AtomicTableGraph &g);

} // namespace lucid
