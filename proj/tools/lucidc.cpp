// lucidc: checker, compiler and network interpreter for the event language.

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "lucid/driver.hpp"
#include "lucid/layout.hpp"

using namespace lucid;

int main(int argc, char **argv) {
    CLI::App app{"lucidc - event-driven data-plane language toolchain"};
    app.require_subcommand(0, 1);

    bool version = false;
    app.add_flag("--version", version, "print toolchain version and defaults");

    // check
    auto *check = app.add_subcommand("check", "parse, resolve and type/effect check a program");
    std::string check_path;
    bool check_json = false;
    check->add_option("path", check_path, "source file")->required();
    check->add_flag("--json", check_json, "structured diagnostics");

    // compile
    auto *compile = app.add_subcommand("compile", "compile to a staged pipeline and P4-like code");
    std::string compile_path;
    CompileFlags cflags;
    compile->add_option("path", compile_path, "source file")->required();
    compile->add_option("--out", cflags.out_base, "output base path (default: input basename)");
    compile->add_option("--config", cflags.config_path, "pipeline config JSON");
    compile->add_flag("--emit-ir", cflags.emit_ir, "also dump the atomic table graph");
    compile->add_flag("--no-opt", cflags.no_opt, "emit the unoptimized atomic tables");
    compile->add_flag("--json", cflags.json, "structured diagnostics");

    // interp
    auto *interp = app.add_subcommand("interp", "run a program on a simulated network");
    std::string interp_program, interp_spec, exec_mode = "surface", log_path;
    InterpFlags iflags;
    interp->add_option("program", interp_program, "source file")->required();
    interp->add_option("spec", interp_spec, "topology/trace JSON")->required();
    interp->add_option("--exec", exec_mode, "execution form: surface|ir|layout");
    interp->add_flag("--trace-state", iflags.trace_state, "log array mutations");
    interp->add_flag("--monitor", iflags.monitor, "enable the ordered-access monitor");
    interp->add_option("--recirc-cap", iflags.recirc_cap_pps, "recirculation throttle (pps)");
    interp->add_option("--log", log_path, "write the event log to a file instead of stdout");
    interp->add_flag("--json", iflags.json_diags, "structured diagnostics");

    // model
    auto *model = app.add_subcommand("model", "worst-case recirculation model");
    ModelFlags mflags;
    model->add_option("--entries", mflags.entries, "table entries N");
    model->add_option("--interval", mflags.interval_s, "scan interval in seconds");
    model->add_option("--flows", mflags.flows, "flow arrival rate (flows/s)");
    std::string min_pkt_model;
    model->add_option("--min-pkt-model", min_pkt_model, "also report min packet size: naive");

    // core-fuzz
    auto *fuzz = app.add_subcommand("core-fuzz", "soundness fuzz of the core calculus");
    int seeds = 1000, depth = 8, globals = 4;
    fuzz->add_option("--seeds", seeds, "number of seeds");
    fuzz->add_option("--depth", depth, "maximum term depth");
    fuzz->add_option("--globals", globals, "number of ordered globals");

    CLI11_PARSE(app, argc, argv);

    if (version) {
        std::cout << "lucidc 0.1.0\n";
        std::cout << "default pipeline config:\n" << config_to_json(PipelineConfig{}) << "\n";
        return kExitOk;
    }

    if (check->parsed()) {
        CheckOutcome out = cmd_check(check_path, check_json);
        if (!out.output.empty()) std::cout << out.output << (check_json ? "\n" : "");
        return out.exit_code;
    }
    if (compile->parsed()) {
        CompileOutcome out = cmd_compile(compile_path, cflags);
        if (!out.output.empty()) std::cout << out.output;
        return out.exit_code;
    }
    if (interp->parsed()) {
        if (exec_mode == "surface") {
            iflags.mode = ExecMode::Surface;
        } else if (exec_mode == "ir") {
            iflags.mode = ExecMode::Ir;
        } else if (exec_mode == "layout") {
            iflags.mode = ExecMode::Layout;
        } else {
            std::cerr << "error: --exec must be surface, ir or layout\n";
            return kExitUsage;
        }
        InterpOutcome out = cmd_interp(interp_program, interp_spec, iflags);
        if (out.exit_code != kExitOk) {
            std::cerr << out.output;
            return out.exit_code;
        }
        std::string text = out.result.log_text();
        if (!log_path.empty()) {
            if (!write_file(log_path, text)) {
                std::cerr << "error: cannot write '" << log_path << "'\n";
                return kExitUsage;
            }
        } else {
            std::cout << text;
        }
        if (iflags.monitor && !out.result.violations.empty()) {
            for (const auto &v : out.result.violations)
                std::cerr << "ordered-access violation: " << v << "\n";
            return kExitDiagnostics;
        }
        return kExitOk;
    }
    if (model->parsed()) {
        if (!min_pkt_model.empty() && min_pkt_model != "naive") {
            std::cerr << "error: --min-pkt-model only supports 'naive'\n";
            return kExitUsage;
        }
        mflags.min_pkt_naive = min_pkt_model == "naive";
        std::cout << cmd_model(mflags);
        return kExitOk;
    }
    if (fuzz->parsed()) {
        FuzzOutcome out = cmd_core_fuzz(seeds, depth, globals);
        std::cout << out.output;
        return out.exit_code;
    }

    std::cout << app.help();
    return kExitUsage;
}
