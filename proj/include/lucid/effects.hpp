#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lucid/ast.hpp"
#include "lucid/diag.hpp"
#include "lucid/memop.hpp"
#include "lucid/stage_solver.hpp"

namespace lucid {

enum class VKind { Int, Bool, Void, Event, Group, Array, Memop, Error };

// Inferred stage signature of a function. Variables are slot-numbered with
// slot 0 standing for the constant 0 (ZERO); the constraint set is the
// projection of the body's constraints onto {entry, exit, array params}.
struct FunEffectSig {
    struct ParamSig {
        VKind kind = VKind::Int;
        uint32_t width = 32;
        int stage_slot = -1; // Array params only
    };
    std::string name;
    std::vector<ParamSig> params;
    VKind ret_kind = VKind::Void;
    uint32_t ret_width = 32;
    int entry_slot = 1;
    int exit_slot = 2;
    int n_slots = 3;
    std::vector<StageConstraint> constraints;
};

struct VarInfo {
    uint32_t width = 32;
    bool is_bool = false;
    bool is_event = false;
};

struct CheckedProgram {
    std::map<std::string, MemopShape> memops;
    std::map<std::string, FunEffectSig> fun_sigs;
    std::map<std::string, int64_t> handler_exit; // event name -> exit stage
    // Widths of locals and parameters, per handler (by event name) and per
    // function. Downstream passes use these for masking and operand widths.
    std::map<std::string, std::map<std::string, VarInfo>> handler_vars;
    std::map<std::string, std::map<std::string, VarInfo>> fun_vars;

    const MemopShape *find_memop(const std::string &name) const {
        auto it = memops.find(name);
        return it == memops.end() ? nullptr : &it->second;
    }
};

// Validates all memops, then type- and effect-checks every function and
// handler: widths unify, each handler's array accesses follow declaration
// order from entry stage 0, and function effect signatures are inferred and
// instantiated at call sites. On failure the diagnostics contain one
// OrderError (or ReAccessError) per disordered handler, plus any TypeErrors.
std::optional<CheckedProgram> check_program(const Program &p, Diagnostics &diags);

} // namespace lucid
