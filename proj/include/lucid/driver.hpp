#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lucid/effects.hpp"
#include "lucid/interp.hpp"
#include "lucid/layout.hpp"
#include "lucid/lowering.hpp"

namespace lucid {

// Exit codes: 0 clean, 1 program/placement diagnostics, 2 usage or I/O.
constexpr int kExitOk = 0;
constexpr int kExitDiagnostics = 1;
constexpr int kExitUsage = 2;

std::string diagnostics_to_json(const Diagnostics &diags);
std::string diagnostics_to_text(const Diagnostics &diags);

// parse + resolve + memop validation + effect check
struct FrontendResult {
    Program program;
    CheckedProgram checked;
};
std::optional<FrontendResult> run_frontend(const std::string &source, const std::string &file,
                                           Diagnostics &diags);

struct CheckOutcome {
    int exit_code = kExitOk;
    std::string output; // diagnostics, text or JSON
};
CheckOutcome cmd_check(const std::string &path, bool json);

struct CompileOutcome {
    int exit_code = kExitOk;
    std::string output;      // human-readable result line or diagnostics
    std::string p4_path;     // artifacts written on success
    std::string layout_path;
    std::string ir_path;
};
struct CompileFlags {
    std::string out_base;    // default: input path without extension
    std::string config_path; // PipelineConfig JSON
    bool emit_ir = false;
    bool no_opt = false;
    bool json = false;
};
CompileOutcome cmd_compile(const std::string &path, const CompileFlags &flags);

struct InterpFlags {
    ExecMode mode = ExecMode::Surface;
    bool trace_state = false;
    bool monitor = false;
    uint64_t recirc_cap_pps = 0; // 0 = no throttle
    bool json_diags = false;
};
struct InterpOutcome {
    int exit_code = kExitOk;
    std::string output; // diagnostics on failure
    InterpResult result;
};
InterpOutcome cmd_interp(const std::string &program_path, const std::string &spec_path,
                         const InterpFlags &flags);

struct ModelFlags {
    uint64_t entries = 1 << 16;
    double interval_s = 0.1;
    double flows = 10000;
    bool min_pkt_naive = false;
};
std::string cmd_model(const ModelFlags &flags);

struct FuzzOutcome {
    int exit_code = kExitOk;
    std::string output; // JSON summary {checked, stepped, stuck}
};
FuzzOutcome cmd_core_fuzz(int seeds, int depth, int globals);

std::string read_file(const std::string &path, bool &ok);
bool write_file(const std::string &path, const std::string &content);

} // namespace lucid
