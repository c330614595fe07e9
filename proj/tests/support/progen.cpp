#include "support/progen.hpp"

#include <random>
#include <sstream>

namespace lucid::test {

namespace {

struct Rng {
    std::mt19937_64 r;
    int pick(int n) { return n <= 1 ? 0 : (int)(r() % (uint64_t)n); }
    bool chance(int pct) { return pick(100) < pct; }
    uint64_t lit() { return r() % 1000; }
};

struct HandlerGen {
    Rng &rng;
    std::ostringstream &os;
    const std::vector<uint32_t> &g_widths;
    const std::vector<uint32_t> &g_lens;
    bool fn32_available;
    int counter = 0;
    int cursor = 0; // next accessible global decl_index
    // locals by width; params p0/p1 are 32-bit
    std::map<uint32_t, std::vector<std::string>> locals{{32, {"p0", "p1"}}};
    std::vector<std::string> bools;

    std::string expr32() { return expr(32); }

    std::string expr(uint32_t w) {
        auto &pool = locals[w];
        int c = rng.pick(3);
        if (c == 0 || pool.empty()) return std::to_string(rng.lit());
        if (c == 1) return pool[rng.pick((int)pool.size())];
        static const char *ops[] = {"+", "-", "&", "|", "^"};
        std::string a = pool[rng.pick((int)pool.size())];
        std::string b = rng.chance(50) ? pool[rng.pick((int)pool.size())]
                                       : std::to_string(rng.lit());
        return a + " " + ops[rng.pick(5)] + " " + b;
    }

    std::string index_expr(int g) {
        return "(" + expr32() + ") & " + std::to_string(g_lens[g] - 1);
    }

    std::string fresh(uint32_t w) {
        std::string name = "v" + std::to_string(counter++);
        locals[w].push_back(name);
        return name;
    }

    std::string ty(uint32_t w) { return w == 32 ? "int" : "int<" + std::to_string(w) + ">"; }

    void emit_access(int g, const std::string &indent) {
        uint32_t w = g_widths[g];
        std::string gname = "g" + std::to_string(g);
        std::string idx = index_expr(g);
        switch (rng.pick(6)) {
        case 0:
            os << indent << ty(w) << " " << fresh(w) << " = Array.get(" << gname << ", " << idx
               << ");\n";
            break;
        case 1:
            os << indent << ty(w) << " " << fresh(w) << " = Array.getm(" << gname << ", " << idx
               << ", plus, " << rng.lit() << ");\n";
            break;
        case 2:
            os << indent << "Array.set(" << gname << ", " << idx << ", " << rng.lit() << ");\n";
            break;
        case 3:
            os << indent << "Array.setm(" << gname << ", " << idx << ", "
               << (rng.chance(50) ? "plus" : "keep_max") << ", " << rng.lit() << ");\n";
            break;
        case 4:
            os << indent << ty(w) << " " << fresh(w) << " = Array.update(" << gname << ", " << idx
               << ", plus, " << rng.lit() << ", bump, " << rng.lit() << ");\n";
            break;
        default:
            if (w == 32 && fn32_available) {
                os << indent << "int " << fresh(32) << " = readat(" << gname << ", " << idx
                   << ");\n";
            } else {
                os << indent << ty(w) << " " << fresh(w) << " = Array.get(" << gname << ", "
                   << idx << ");\n";
            }
            break;
        }
    }

    // initializer strings are drawn before fresh() so a local can never
    // reference itself
    void emit_pure(const std::string &indent) {
        switch (rng.pick(5)) {
        case 0: {
            std::string init = expr32();
            os << indent << "int " << fresh(32) << " = " << init << ";\n";
            break;
        }
        case 1: {
            std::string lhs = expr32(), rhs = expr32();
            std::string b = "b" + std::to_string(counter++);
            bools.push_back(b);
            os << indent << "bool " << b << " = (" << lhs << ") "
               << (rng.chance(50) ? "==" : "<") << " (" << rhs << ");\n";
            break;
        }
        case 2: {
            std::string a1 = expr32(), a2 = expr32();
            os << indent << "int " << fresh(32) << " = hash<32>(" << (rng.lit() | 1) << ", "
               << a1 << ", " << a2 << ");\n";
            break;
        }
        case 3:
            if (fn32_available) {
                std::string a1 = expr32(), a2 = expr32();
                os << indent << "int " << fresh(32) << " = mix(" << a1 << ", " << a2 << ");\n";
                break;
            }
            [[fallthrough]];
        default: {
            if (!locals[32].empty()) {
                // assignment to an existing 32-bit local
                auto &pool = locals[32];
                std::string target = pool[rng.pick((int)pool.size())];
                if (target != "p0" && target != "p1" && rng.chance(70)) {
                    os << indent << target << " = " << expr32() << ";\n";
                    return;
                }
            }
            std::string init = expr32();
            os << indent << "int " << fresh(32) << " = " << init << " + "
               << std::to_string(rng.lit()) << ";\n";
            break;
        }
        }
    }

    std::string cond() {
        if (!bools.empty() && rng.chance(30)) return bools[rng.pick((int)bools.size())];
        std::string lhs = locals[32][rng.pick((int)locals[32].size())];
        static const char *cmps[] = {"==", "!=", "<", ">", "<=", ">="};
        std::string rhs = rng.chance(60) ? std::to_string(rng.lit())
                                         : locals[32][rng.pick((int)locals[32].size())];
        std::string c = lhs + " " + cmps[rng.pick(6)] + " " + rhs;
        if (rng.chance(25)) {
            std::string l2 = locals[32][rng.pick((int)locals[32].size())];
            c += std::string(rng.chance(50) ? " && " : " || ") + l2 +
                 (rng.chance(50) ? " != " : " == ") + std::to_string(rng.lit());
        }
        return c;
    }

    void emit_if(int n_globals) {
        os << "    if (" << cond() << ") {\n";
        // each arm may consume one access slot; both start from the same
        // cursor (per-path ordering), the join advances past the maximum.
        // arm-local names go out of scope at the brace, so the visible pools
        // are restored afterwards
        auto saved_locals = locals;
        auto saved_bools = bools;
        int next_cursor = cursor;
        if (cursor < n_globals && rng.chance(60)) {
            int g = cursor + rng.pick(n_globals - cursor);
            emit_access(g, "        ");
            next_cursor = std::max(next_cursor, g + 1);
        } else {
            emit_pure("        ");
        }
        locals = saved_locals;
        bools = saved_bools;
        os << "    } else {\n";
        if (cursor < n_globals && rng.chance(40)) {
            int g = cursor + rng.pick(n_globals - cursor);
            emit_access(g, "        ");
            next_cursor = std::max(next_cursor, g + 1);
        } else {
            emit_pure("        ");
        }
        locals = saved_locals;
        bools = saved_bools;
        os << "    }\n";
        cursor = next_cursor;
    }
};

} // namespace

std::string generate_program(uint64_t seed, const GenOptions &opts) {
    Rng rng{std::mt19937_64(seed)};
    std::ostringstream os;

    int n_globals = 1 + rng.pick(opts.max_globals);
    std::vector<uint32_t> widths, lens;
    static const uint32_t kWidths[] = {8, 16, 32};
    static const uint32_t kLens[] = {4, 8, 16};
    os << "const int ZERO = 0;\n";
    os << "const group PAIR = {2, 3};\n";
    for (int i = 0; i < n_globals; i++) {
        widths.push_back(kWidths[rng.pick(3)]);
        lens.push_back(kLens[rng.pick(3)]);
        os << "global g" << i << " = new Array<<" << widths[i] << ">>(" << lens[i] << ");\n";
    }
    os << "memop plus(int cur, int x) { return cur + x; }\n";
    os << "memop keep_max(int cur, int x) { if (cur > x) { return cur; } else { return x; } }\n";
    os << "memop bump(int cur, int x) { if (cur + x > 100) { return x; } else { return cur + x; } }\n";

    bool fn32 = opts.with_functions && rng.chance(70);
    if (fn32) {
        os << "fun int mix(int a, int b) {\n    int t = a + b;\n    return t ^ 3;\n}\n";
        os << "fun int readat(Array<<32>> arr, int i) {\n    return Array.get(arr, i);\n}\n";
    }

    int n_events = 1 + rng.pick(opts.max_events);
    for (int k = 0; k < n_events; k++) os << "event ev" << k << "(int p0, int p1);\n";

    for (int k = 0; k < n_events; k++) {
        os << "handle ev" << k << "(int p0, int p1) {\n";
        HandlerGen hg{rng, os, widths, lens, fn32};
        int n_stmts = 1 + rng.pick(opts.max_stmts);
        for (int j = 0; j < n_stmts; j++) {
            int c = rng.pick(4);
            if (c == 0 && hg.cursor < n_globals) {
                int g = hg.cursor + rng.pick(n_globals - hg.cursor);
                hg.emit_access(g, "    ");
                hg.cursor = g + 1;
            } else if (c == 1) {
                hg.emit_if(n_globals);
            } else {
                hg.emit_pure("    ");
            }
        }
        if (opts.with_generates && k + 1 < n_events && rng.chance(70)) {
            // generate targets strictly above this handler's id: no cycles
            int t = k + 1 + rng.pick(n_events - k - 1);
            std::string ctor =
                "ev" + std::to_string(t) + "(" + hg.expr32() + ", " + hg.expr32() + ")";
            switch (rng.pick(5)) {
            case 0: os << "    generate " << ctor << ";\n"; break;
            case 1:
                os << "    generate Event.delay(" << ctor << ", "
                   << (1000 + rng.pick(100000)) << ");\n";
                break;
            case 2:
                os << "    generate Event.locate(" << ctor << ", " << (1 + rng.pick(3))
                   << ");\n";
                break;
            case 3:
                os << "    mgenerate Event.locate(" << ctor << ", PAIR);\n";
                break;
            default: {
                os << "    event pending = Event.delay(" << ctor << ", 2us);\n";
                os << "    generate pending;\n";
                break;
            }
            }
        }
        os << "}\n";
    }
    return os.str();
}

std::string generate_trace(uint64_t seed, const Program &program, int n_events) {
    Rng rng{std::mt19937_64(seed * 7919 + 17)};
    std::ostringstream os;
    os << "{\n  \"switches\": [1, 2, 3],\n";
    os << "  \"links\": [\n"
          "    {\"a\": 1, \"b\": 2, \"latency_ns\": 500},\n"
          "    {\"a\": 1, \"b\": 3, \"latency_ns\": 700},\n"
          "    {\"a\": 2, \"b\": 3, \"latency_ns\": 900}\n  ],\n";
    os << "  \"events\": [\n";
    std::vector<std::string> names;
    for (size_t i : program.events_in_order)
        names.push_back(std::get<EventDecl>(program.decls[i].v).name);
    for (int i = 0; i < n_events; i++) {
        const std::string &name = names[rng.pick((int)names.size())];
        const EventDecl *ev = program.find_event(name);
        os << "    {\"time_ns\": " << rng.pick(1000000) << ", \"switch\": " << (1 + rng.pick(3))
           << ", \"name\": \"" << name << "\", \"args\": [";
        for (size_t a = 0; a < ev->params.size(); a++) {
            if (a) os << ", ";
            os << (rng.r() & 0xffffffffull);
        }
        os << "]}";
        os << (i + 1 < n_events ? ",\n" : "\n");
    }
    os << "  ]\n}\n";
    return os.str();
}

std::optional<BuiltProgram> build_all(const std::string &source, const std::string &file,
                                      std::string &error, const PipelineConfig &config) {
    Diagnostics diags;
    auto fe = run_frontend(source, file, diags);
    if (!fe) {
        error = diagnostics_to_text(diags);
        return std::nullopt;
    }
    auto lowered = lower_program(fe->program, fe->checked, diags);
    if (!lowered) {
        error = diagnostics_to_text(diags);
        return std::nullopt;
    }
    auto guarded = eliminate_branches(lowered->graph, config, diags);
    if (!guarded) {
        error = diagnostics_to_text(diags);
        return std::nullopt;
    }
    auto placed = greedy_merge(std::move(*guarded), config, lowered->graph.longest_path());
    if (auto *err = std::get_if<PlacementError>(&placed)) {
        error = "placement: " + err->table + ": " + err->reason;
        return std::nullopt;
    }
    BuiltProgram out{std::move(*fe), std::move(*lowered),
                     std::move(std::get<PipelineLayout>(placed))};
    return out;
}

PipelineConfig fuzz_config() {
    PipelineConfig c;
    c.stages = 32;
    c.tables_per_stage = 32;
    c.salus_per_stage = 8;
    c.max_actions_per_table = 1024;
    c.max_key_bits = 512;
    c.max_entries_per_table = 4096;
    return c;
}

} // namespace lucid::test
