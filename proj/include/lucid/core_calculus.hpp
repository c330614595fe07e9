#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace lucid::core {

// A small ML-like calculus with ordered global references, used as an
// executable oracle for the type-and-effect system's soundness properties.

enum class BaseType { Unit, Int };

struct CoreType;
using CoreTypePtr = std::shared_ptr<CoreType>;

struct CoreType {
    enum class Kind { Unit, Int, Ref, Arrow } kind = Kind::Unit;
    // Ref
    BaseType ref_base = BaseType::Int;
    int64_t ref_stage = 0;
    // Arrow
    CoreTypePtr in, out;
    int64_t stage_in = 0, stage_out = 0;

    static CoreTypePtr unit() { return std::make_shared<CoreType>(CoreType{Kind::Unit, {}, 0, nullptr, nullptr, 0, 0}); }
    static CoreTypePtr integer() { return std::make_shared<CoreType>(CoreType{Kind::Int, {}, 0, nullptr, nullptr, 0, 0}); }
    static CoreTypePtr ref(BaseType b, int64_t stage) {
        return std::make_shared<CoreType>(CoreType{Kind::Ref, b, stage, nullptr, nullptr, 0, 0});
    }
    static CoreTypePtr arrow(CoreTypePtr in, int64_t ein, CoreTypePtr out, int64_t eout) {
        return std::make_shared<CoreType>(
            CoreType{Kind::Arrow, {}, 0, std::move(in), std::move(out), ein, eout});
    }
};

bool type_equal(const CoreType &a, const CoreType &b);
std::string type_str(const CoreType &t);

struct CoreExpr;
using CoreExprPtr = std::shared_ptr<CoreExpr>;

struct CoreExpr {
    enum class Kind { Unit, IntLit, GlobalRef, LocalVar, Plus, Let, Deref, Update, Fun, App };
    Kind kind = Kind::Unit;
    int64_t n = 0;      // IntLit
    int global = 0;     // GlobalRef index
    std::string var;    // LocalVar name / Let binder / Fun binder
    CoreExprPtr a, b;   // subexpressions (Let: bound/body; Update: ref/value; App: fn/arg)
    CoreTypePtr fun_in; // Fun: parameter type
    int64_t fun_stage = 0;

    bool is_value() const {
        return kind == Kind::Unit || kind == Kind::IntLit || kind == Kind::GlobalRef ||
               kind == Kind::Fun;
    }
};

CoreExprPtr unit();
CoreExprPtr int_lit(int64_t n);
CoreExprPtr global_ref(int i);
CoreExprPtr local_var(std::string x);
CoreExprPtr plus(CoreExprPtr a, CoreExprPtr b);
CoreExprPtr let_in(std::string x, CoreExprPtr bound, CoreExprPtr body);
CoreExprPtr deref(CoreExprPtr e);
CoreExprPtr update(CoreExprPtr ref, CoreExprPtr value); // ref := value
CoreExprPtr fun(std::string x, CoreTypePtr in, int64_t stage_in, CoreExprPtr body);
CoreExprPtr app(CoreExprPtr f, CoreExprPtr arg);

std::string expr_str(const CoreExpr &e);

struct TypeError {
    std::string rule;
    std::string message;
};

struct TypeResult {
    CoreTypePtr type;
    int64_t exit_stage = 0;
};

struct TypeEnvEntry {
    std::string name;
    CoreTypePtr type;
};

// The ordered global context: base types of g_0 .. g_{n-1}.
using GlobalTypes = std::vector<BaseType>;

// Implements the typing judgement  Gamma, stage |- e : tau, stage'.
std::variant<TypeResult, TypeError> core_typecheck(const GlobalTypes &globals,
                                                   const std::vector<TypeEnvEntry> &env,
                                                   int64_t stage, const CoreExpr &e);

// Machine state (G, n, e): the store, the next accessible global, the program.
struct MachineState {
    std::vector<CoreExprPtr> store; // values, one per global
    int64_t next = 0;
    CoreExprPtr expr;
};

struct Finished {
    CoreExprPtr value;
    MachineState state;
};
struct Stuck {
    std::string reason;
};
struct StepBudgetExceeded {};

// One small step, or Finished when the expression is already a value.
std::variant<MachineState, Finished, Stuck> core_step(const MachineState &s);

// Transitive closure of core_step, guarded by a step budget.
std::variant<Finished, Stuck, StepBudgetExceeded> core_eval(MachineState s, int budget = 100000);

// A zero-initialized well-typed store for the given global base types.
std::vector<CoreExprPtr> initial_store(const GlobalTypes &globals);

// Typing-derivation-directed generator: the result is closed and well typed
// at stage 0 under the given globals, by construction.
CoreExprPtr generate_well_typed_term(uint64_t seed, int depth, int n_globals);

} // namespace lucid::core
