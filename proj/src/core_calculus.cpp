#include "lucid/core_calculus.hpp"

#include <random>

namespace lucid::core {

CoreExprPtr unit() { return std::make_shared<CoreExpr>(CoreExpr{CoreExpr::Kind::Unit, 0, 0, {}, nullptr, nullptr, nullptr, 0}); }
CoreExprPtr int_lit(int64_t n) {
    auto e = std::make_shared<CoreExpr>();
    e->kind = CoreExpr::Kind::IntLit;
    e->n = n;
    return e;
}
CoreExprPtr global_ref(int i) {
    auto e = std::make_shared<CoreExpr>();
    e->kind = CoreExpr::Kind::GlobalRef;
    e->global = i;
    return e;
}
CoreExprPtr local_var(std::string x) {
    auto e = std::make_shared<CoreExpr>();
    e->kind = CoreExpr::Kind::LocalVar;
    e->var = std::move(x);
    return e;
}
CoreExprPtr plus(CoreExprPtr a, CoreExprPtr b) {
    auto e = std::make_shared<CoreExpr>();
    e->kind = CoreExpr::Kind::Plus;
    e->a = std::move(a);
    e->b = std::move(b);
    return e;
}
CoreExprPtr let_in(std::string x, CoreExprPtr bound, CoreExprPtr body) {
    auto e = std::make_shared<CoreExpr>();
    e->kind = CoreExpr::Kind::Let;
    e->var = std::move(x);
    e->a = std::move(bound);
    e->b = std::move(body);
    return e;
}
CoreExprPtr deref(CoreExprPtr inner) {
    auto e = std::make_shared<CoreExpr>();
    e->kind = CoreExpr::Kind::Deref;
    e->a = std::move(inner);
    return e;
}
CoreExprPtr update(CoreExprPtr ref, CoreExprPtr value) {
    auto e = std::make_shared<CoreExpr>();
    e->kind = CoreExpr::Kind::Update;
    e->a = std::move(ref);
    e->b = std::move(value);
    return e;
}
CoreExprPtr fun(std::string x, CoreTypePtr in, int64_t stage_in, CoreExprPtr body) {
    auto e = std::make_shared<CoreExpr>();
    e->kind = CoreExpr::Kind::Fun;
    e->var = std::move(x);
    e->fun_in = std::move(in);
    e->fun_stage = stage_in;
    e->b = std::move(body);
    return e;
}
CoreExprPtr app(CoreExprPtr f, CoreExprPtr arg) {
    auto e = std::make_shared<CoreExpr>();
    e->kind = CoreExpr::Kind::App;
    e->a = std::move(f);
    e->b = std::move(arg);
    return e;
}

bool type_equal(const CoreType &a, const CoreType &b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
    case CoreType::Kind::Unit:
    case CoreType::Kind::Int:
        return true;
    case CoreType::Kind::Ref:
        return a.ref_base == b.ref_base && a.ref_stage == b.ref_stage;
    case CoreType::Kind::Arrow:
        return a.stage_in == b.stage_in && a.stage_out == b.stage_out &&
               type_equal(*a.in, *b.in) && type_equal(*a.out, *b.out);
    }
    return false;
}

std::string type_str(const CoreType &t) {
    switch (t.kind) {
    case CoreType::Kind::Unit: return "Unit";
    case CoreType::Kind::Int: return "Int";
    case CoreType::Kind::Ref:
        return "ref(" + std::string(t.ref_base == BaseType::Int ? "Int" : "Unit") + "," +
               std::to_string(t.ref_stage) + ")";
    case CoreType::Kind::Arrow:
        return "(" + type_str(*t.in) + "," + std::to_string(t.stage_in) + ")->(" +
               type_str(*t.out) + "," + std::to_string(t.stage_out) + ")";
    }
    return "?";
}

std::string expr_str(const CoreExpr &e) {
    switch (e.kind) {
    case CoreExpr::Kind::Unit: return "()";
    case CoreExpr::Kind::IntLit: return std::to_string(e.n);
    case CoreExpr::Kind::GlobalRef: return "g" + std::to_string(e.global);
    case CoreExpr::Kind::LocalVar: return e.var;
    case CoreExpr::Kind::Plus: return "(" + expr_str(*e.a) + " + " + expr_str(*e.b) + ")";
    case CoreExpr::Kind::Let:
        return "(let " + e.var + " = " + expr_str(*e.a) + " in " + expr_str(*e.b) + ")";
    case CoreExpr::Kind::Deref: return "!" + expr_str(*e.a);
    case CoreExpr::Kind::Update: return "(" + expr_str(*e.a) + " := " + expr_str(*e.b) + ")";
    case CoreExpr::Kind::Fun:
        return "(fun (" + e.var + " : " + type_str(*e.fun_in) + ", " +
               std::to_string(e.fun_stage) + ") -> " + expr_str(*e.b) + ")";
    case CoreExpr::Kind::App: return "(" + expr_str(*e.a) + " " + expr_str(*e.b) + ")";
    }
    return "?";
}

// ---- typing ----

namespace {

const CoreTypePtr *env_lookup(const std::vector<TypeEnvEntry> &env, const std::string &x) {
    for (auto it = env.rbegin(); it != env.rend(); ++it)
        if (it->name == x) return &it->type;
    return nullptr;
}

} // namespace

std::variant<TypeResult, TypeError> core_typecheck(const GlobalTypes &globals,
                                                   const std::vector<TypeEnvEntry> &env,
                                                   int64_t stage, const CoreExpr &e) {
    using K = CoreExpr::Kind;
    switch (e.kind) {
    case K::IntLit:
        return TypeResult{CoreType::integer(), stage};
    case K::Unit:
        return TypeResult{CoreType::unit(), stage};
    case K::GlobalRef: {
        if (e.global < 0 || e.global >= (int)globals.size())
            return TypeError{"GLOBAL", "global index out of range"};
        return TypeResult{CoreType::ref(globals[e.global], e.global), stage};
    }
    case K::LocalVar: {
        const CoreTypePtr *t = env_lookup(env, e.var);
        if (!t) return TypeError{"VAR", "unbound variable " + e.var};
        return TypeResult{*t, stage};
    }
    case K::Plus: {
        auto r1 = core_typecheck(globals, env, stage, *e.a);
        if (auto *err = std::get_if<TypeError>(&r1)) return *err;
        auto &t1 = std::get<TypeResult>(r1);
        if (t1.type->kind != CoreType::Kind::Int)
            return TypeError{"PLUS", "left operand is not Int"};
        auto r2 = core_typecheck(globals, env, t1.exit_stage, *e.b);
        if (auto *err = std::get_if<TypeError>(&r2)) return *err;
        auto &t2 = std::get<TypeResult>(r2);
        if (t2.type->kind != CoreType::Kind::Int)
            return TypeError{"PLUS", "right operand is not Int"};
        return TypeResult{CoreType::integer(), t2.exit_stage};
    }
    case K::Let: {
        auto r1 = core_typecheck(globals, env, stage, *e.a);
        if (auto *err = std::get_if<TypeError>(&r1)) return *err;
        auto &t1 = std::get<TypeResult>(r1);
        std::vector<TypeEnvEntry> env2 = env;
        env2.push_back(TypeEnvEntry{e.var, t1.type});
        return core_typecheck(globals, env2, t1.exit_stage, *e.b);
    }
    case K::Deref: {
        auto r = core_typecheck(globals, env, stage, *e.a);
        if (auto *err = std::get_if<TypeError>(&r)) return *err;
        auto &t = std::get<TypeResult>(r);
        if (t.type->kind != CoreType::Kind::Ref)
            return TypeError{"DEREF", "dereference of a non-reference"};
        // side condition: exit stage of the subexpression <= ref stage
        if (t.exit_stage > t.type->ref_stage)
            return TypeError{"DEREF", "stage " + std::to_string(t.exit_stage) +
                                          " exceeds ref stage " +
                                          std::to_string(t.type->ref_stage)};
        CoreTypePtr base = t.type->ref_base == BaseType::Int ? CoreType::integer()
                                                             : CoreType::unit();
        return TypeResult{base, t.type->ref_stage + 1};
    }
    case K::Update: {
        // e.a := e.b types the assigned value first (premise order of UPDATE)
        auto r1 = core_typecheck(globals, env, stage, *e.b);
        if (auto *err = std::get_if<TypeError>(&r1)) return *err;
        auto &t1 = std::get<TypeResult>(r1);
        if (t1.type->kind == CoreType::Kind::Ref || t1.type->kind == CoreType::Kind::Arrow)
            return TypeError{"UPDATE", "stored values must have base type"};
        auto r2 = core_typecheck(globals, env, t1.exit_stage, *e.a);
        if (auto *err = std::get_if<TypeError>(&r2)) return *err;
        auto &t2 = std::get<TypeResult>(r2);
        if (t2.type->kind != CoreType::Kind::Ref)
            return TypeError{"UPDATE", "update of a non-reference"};
        BaseType want = t2.type->ref_base;
        bool match = (want == BaseType::Int && t1.type->kind == CoreType::Kind::Int) ||
                     (want == BaseType::Unit && t1.type->kind == CoreType::Kind::Unit);
        if (!match) return TypeError{"UPDATE", "stored value type mismatch"};
        if (t2.exit_stage > t2.type->ref_stage)
            return TypeError{"UPDATE", "stage " + std::to_string(t2.exit_stage) +
                                           " exceeds ref stage " +
                                           std::to_string(t2.type->ref_stage)};
        return TypeResult{CoreType::unit(), t2.type->ref_stage + 1};
    }
    case K::Fun: {
        std::vector<TypeEnvEntry> env2 = env;
        env2.push_back(TypeEnvEntry{e.var, e.fun_in});
        auto r = core_typecheck(globals, env2, e.fun_stage, *e.b);
        if (auto *err = std::get_if<TypeError>(&r)) return *err;
        auto &t = std::get<TypeResult>(r);
        return TypeResult{CoreType::arrow(e.fun_in, e.fun_stage, t.type, t.exit_stage), stage};
    }
    case K::App: {
        auto r1 = core_typecheck(globals, env, stage, *e.a);
        if (auto *err = std::get_if<TypeError>(&r1)) return *err;
        auto &t1 = std::get<TypeResult>(r1);
        if (t1.type->kind != CoreType::Kind::Arrow)
            return TypeError{"APP", "application of a non-function"};
        auto r2 = core_typecheck(globals, env, t1.exit_stage, *e.b);
        if (auto *err = std::get_if<TypeError>(&r2)) return *err;
        auto &t2 = std::get<TypeResult>(r2);
        if (!type_equal(*t2.type, *t1.type->in))
            return TypeError{"APP", "argument type mismatch"};
        if (t2.exit_stage > t1.type->stage_in)
            return TypeError{"APP", "stage " + std::to_string(t2.exit_stage) +
                                        " exceeds function entry stage " +
                                        std::to_string(t1.type->stage_in)};
        return TypeResult{t1.type->out, t1.type->stage_out};
    }
    }
    return TypeError{"?", "unreachable"};
}

// ---- small-step semantics ----

namespace {

CoreExprPtr substitute(const CoreExprPtr &e, const std::string &x, const CoreExprPtr &v) {
    using K = CoreExpr::Kind;
    switch (e->kind) {
    case K::Unit:
    case K::IntLit:
    case K::GlobalRef:
        return e;
    case K::LocalVar:
        return e->var == x ? v : e;
    case K::Plus:
        return plus(substitute(e->a, x, v), substitute(e->b, x, v));
    case K::Let: {
        CoreExprPtr bound = substitute(e->a, x, v);
        // binder shadows
        CoreExprPtr body = e->var == x ? e->b : substitute(e->b, x, v);
        return let_in(e->var, bound, body);
    }
    case K::Deref:
        return deref(substitute(e->a, x, v));
    case K::Update:
        return update(substitute(e->a, x, v), substitute(e->b, x, v));
    case K::Fun:
        if (e->var == x) return e;
        return fun(e->var, e->fun_in, e->fun_stage, substitute(e->b, x, v));
    case K::App:
        return app(substitute(e->a, x, v), substitute(e->b, x, v));
    }
    return e;
}

} // namespace

std::variant<MachineState, Finished, Stuck> core_step(const MachineState &s) {
    using K = CoreExpr::Kind;
    const CoreExpr &e = *s.expr;
    if (e.is_value()) return Finished{s.expr, s};

    auto step_sub = [&](const CoreExprPtr &sub,
                        auto rebuild) -> std::variant<MachineState, Finished, Stuck> {
        MachineState inner{s.store, s.next, sub};
        auto r = core_step(inner);
        if (auto *st = std::get_if<Stuck>(&r)) return *st;
        auto &ms = std::get<MachineState>(r);
        return MachineState{ms.store, ms.next, rebuild(ms.expr)};
    };

    switch (e.kind) {
    case K::Plus: {
        if (!e.a->is_value())
            return step_sub(e.a, [&](CoreExprPtr a2) { return plus(a2, e.b); }); // PLUS-1
        if (!e.b->is_value())
            return step_sub(e.b, [&](CoreExprPtr b2) { return plus(e.a, b2); }); // PLUS-2
        if (e.a->kind != K::IntLit || e.b->kind != K::IntLit)
            return Stuck{"plus of non-integers"};
        return MachineState{s.store, s.next, int_lit(e.a->n + e.b->n)}; // PLUS-3
    }
    case K::Let: {
        if (!e.a->is_value())
            return step_sub(e.a, [&](CoreExprPtr a2) { return let_in(e.var, a2, e.b); }); // LET-1
        return MachineState{s.store, s.next, substitute(e.b, e.var, e.a)};                // LET-2
    }
    case K::Deref: {
        if (!e.a->is_value())
            return step_sub(e.a, [&](CoreExprPtr a2) { return deref(a2); }); // DEREF-1
        if (e.a->kind != K::GlobalRef) return Stuck{"deref of a non-reference"};
        int i = e.a->global;
        if (i < 0 || i >= (int)s.store.size()) return Stuck{"global index out of range"};
        if (s.next > i)
            return Stuck{"deref of g" + std::to_string(i) + " after stage " +
                         std::to_string(s.next)};
        return MachineState{s.store, i + 1, s.store[i]}; // DEREF-2
    }
    case K::Update: {
        if (!e.b->is_value())
            return step_sub(e.b, [&](CoreExprPtr b2) { return update(e.a, b2); }); // UPDATE-1
        if (!e.a->is_value())
            return step_sub(e.a, [&](CoreExprPtr a2) { return update(a2, e.b); }); // UPDATE-2
        if (e.a->kind != K::GlobalRef) return Stuck{"update of a non-reference"};
        int i = e.a->global;
        if (i < 0 || i >= (int)s.store.size()) return Stuck{"global index out of range"};
        if (s.next > i)
            return Stuck{"update of g" + std::to_string(i) + " after stage " +
                         std::to_string(s.next)};
        auto store2 = s.store;
        store2[i] = e.b;
        return MachineState{std::move(store2), i + 1, unit()}; // UPDATE-3
    }
    case K::App: {
        if (!e.a->is_value())
            return step_sub(e.a, [&](CoreExprPtr a2) { return app(a2, e.b); }); // APP-1
        if (!e.b->is_value())
            return step_sub(e.b, [&](CoreExprPtr b2) { return app(e.a, b2); }); // APP-2
        if (e.a->kind != K::Fun) return Stuck{"application of a non-function"};
        return MachineState{s.store, s.next, substitute(e.a->b, e.a->var, e.b)}; // APP-3
    }
    default:
        return Stuck{"no rule applies"};
    }
}

std::variant<Finished, Stuck, StepBudgetExceeded> core_eval(MachineState s, int budget) {
    for (int i = 0; i < budget; i++) {
        auto r = core_step(s);
        if (auto *fin = std::get_if<Finished>(&r)) return *fin;
        if (auto *st = std::get_if<Stuck>(&r)) return *st;
        s = std::move(std::get<MachineState>(r));
    }
    return StepBudgetExceeded{};
}

std::vector<CoreExprPtr> initial_store(const GlobalTypes &globals) {
    std::vector<CoreExprPtr> store;
    for (BaseType t : globals) store.push_back(t == BaseType::Int ? int_lit(0) : unit());
    return store;
}

// ---- generator ----

namespace {

struct Gen {
    std::mt19937_64 rng;
    int n_globals;
    int counter = 0;

    int pick(int n) { return (int)(rng() % (uint64_t)n); }
    bool coin() { return pick(2) == 0; }

    struct GTy {
        CoreTypePtr type;
    };

    struct Out {
        CoreExprPtr e;
        CoreTypePtr type;
        int64_t exit;
    };

    // Produce (e, tau, exit) with env, stage |- e : tau, exit.
    // When `want` is non-null the result has exactly that type.
    Out gen(std::vector<TypeEnvEntry> &env, int64_t stage, int depth, const CoreTypePtr &want) {
        if (depth <= 1) return leaf(env, stage, want);
        switch (pick(6)) {
        case 0: return leaf(env, stage, want);
        case 1: { // plus (only when an Int is acceptable)
            if (want && want->kind != CoreType::Kind::Int) return gen(env, stage, depth, want);
            Out a = gen(env, stage, depth - 1, CoreType::integer());
            Out b = gen(env, a.exit, depth - 1, CoreType::integer());
            return Out{plus(a.e, b.e), CoreType::integer(), b.exit};
        }
        case 2: { // let
            Out bound = gen(env, stage, depth - 1, nullptr);
            std::string x = "x" + std::to_string(counter++);
            env.push_back(TypeEnvEntry{x, bound.type});
            Out body = gen(env, bound.exit, depth - 1, want);
            env.pop_back();
            return Out{let_in(x, bound.e, body.e), body.type, body.exit};
        }
        case 3: { // deref of a global at or after the current stage
            if (want && want->kind != CoreType::Kind::Int) return gen(env, stage, depth, want);
            if (stage >= n_globals) return gen(env, stage, depth, want);
            int lo = (int)stage;
            int i = lo + pick(n_globals - lo);
            return Out{deref(global_ref(i)), CoreType::integer(), (int64_t)i + 1};
        }
        case 4: { // update g_i := v
            if (want && want->kind != CoreType::Kind::Unit) return gen(env, stage, depth, want);
            if (stage >= n_globals) return gen(env, stage, depth, want);
            // the assigned value is evaluated first and must leave the stage
            // low enough to still touch g_i
            Out v = gen(env, stage, depth - 1, CoreType::integer());
            if (v.exit >= n_globals) return gen(env, stage, depth, want);
            int lo = (int)v.exit;
            int i = lo + pick(n_globals - lo);
            return Out{update(global_ref(i), v.e), CoreType::unit(), (int64_t)i + 1};
        }
        default: { // app of an inline abstraction
            // argument first (premises evaluate e2 at the stage e1 leaves,
            // and a literal fun is a value so that stage is `stage`)
            Out arg = gen(env, stage, depth - 2 > 1 ? depth - 2 : 1, nullptr);
            int64_t ein = arg.exit + pick(3); // entry stage >= arg exit
            std::string x = "x" + std::to_string(counter++);
            env.push_back(TypeEnvEntry{x, arg.type});
            Out body = gen(env, ein, depth - 2 > 1 ? depth - 2 : 1, want);
            env.pop_back();
            CoreExprPtr f = fun(x, arg.type, ein, body.e);
            return Out{app(f, arg.e), body.type, body.exit};
        }
        }
    }

    Out leaf(std::vector<TypeEnvEntry> &env, int64_t stage, const CoreTypePtr &want) {
        // any env variable of the wanted type?
        std::vector<size_t> candidates;
        for (size_t i = 0; i < env.size(); i++) {
            const CoreTypePtr &t = env[i].type;
            if (t->kind == CoreType::Kind::Arrow) continue; // keep leaves first-order
            if (t->kind == CoreType::Kind::Ref) continue;   // avoid stale ref aliases
            if (!want || type_equal(*t, *want)) candidates.push_back(i);
        }
        if (!candidates.empty() && coin()) {
            size_t i = candidates[pick((int)candidates.size())];
            return Out{local_var(env[i].name), env[i].type, stage};
        }
        if (want && want->kind == CoreType::Kind::Unit) return Out{unit(), CoreType::unit(), stage};
        if (!want && pick(4) == 0) return Out{unit(), CoreType::unit(), stage};
        return Out{int_lit(pick(100)), CoreType::integer(), stage};
    }
};

} // namespace

CoreExprPtr generate_well_typed_term(uint64_t seed, int depth, int n_globals) {
    Gen g{std::mt19937_64(seed), n_globals, 0};
    std::vector<TypeEnvEntry> env;
    return g.gen(env, 0, depth < 1 ? 1 : depth, nullptr).e;
}

} // namespace lucid::core
