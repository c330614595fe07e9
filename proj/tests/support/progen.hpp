#pragma once

#include <optional>
#include <string>

#include "lucid/driver.hpp"

namespace lucid::test {

// Random well-formed programs for the equivalence and soundness campaigns.
// Every generated program resolves and effect-checks by construction:
// handlers touch globals in strictly increasing declaration order, array
// indexes are masked to the (power-of-two) array length, and generate
// targets form a DAG over event ids so traces terminate.
struct GenOptions {
    int max_globals = 4;
    int max_events = 3;
    int max_stmts = 7;
    bool with_functions = true;
    bool with_generates = true;
};

std::string generate_program(uint64_t seed, const GenOptions &opts = {});

// A matching trace over the fixed 3-switch mesh used by generated programs.
std::string generate_trace(uint64_t seed, const Program &program, int n_events);

// Frontend + lowering + layout in one step. The default config is the
// Tofino-like one; generated programs use wider budgets (their 32-bit match
// keys overflow the default 64-bit key budget by design, which is irrelevant
// to the semantic campaigns).
struct BuiltProgram {
    FrontendResult fe;
    LoweredProgram lowered;
    PipelineLayout layout;
};
std::optional<BuiltProgram> build_all(const std::string &source, const std::string &file,
                                      std::string &error, const PipelineConfig &config = {});
PipelineConfig fuzz_config();

} // namespace lucid::test
