#include "lucid/driver.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lucid/capacity.hpp"
#include "lucid/core_calculus.hpp"
#include "lucid/emitter.hpp"
#include "lucid/parser.hpp"
#include "lucid/resolver.hpp"

namespace lucid {

const char *diag_kind_name(DiagKind k) {
    switch (k) {
    case DiagKind::UnknownCharacter: return "UnknownCharacter";
    case DiagKind::SyntaxError: return "SyntaxError";
    case DiagKind::UnboundName: return "UnboundName";
    case DiagKind::DuplicateName: return "DuplicateName";
    case DiagKind::HandlerSignatureMismatch: return "HandlerSignatureMismatch";
    case DiagKind::NonConstantSize: return "NonConstantSize";
    case DiagKind::UnsupportedModule: return "UnsupportedModule";
    case DiagKind::UnsupportedBuiltin: return "UnsupportedBuiltin";
    case DiagKind::MemopViolation: return "MemopViolation";
    case DiagKind::TypeError: return "TypeError";
    case DiagKind::OrderError: return "OrderError";
    case DiagKind::ReAccessError: return "ReAccessError";
    case DiagKind::Unsatisfiable: return "Unsatisfiable";
    case DiagKind::RecursionDetected: return "RecursionDetected";
    case DiagKind::GuardExplosion: return "GuardExplosion";
    case DiagKind::PlacementError: return "PlacementError";
    case DiagKind::IoError: return "IoError";
    case DiagKind::SpecError: return "SpecError";
    }
    return "?";
}

std::string Diag::str() const {
    std::string out;
    if (!spans.empty() && !spans[0].file.empty()) out += spans[0].str() + ": ";
    out += std::string(diag_kind_name(kind)) + ": " + message;
    for (size_t i = 1; i < spans.size(); i++) out += "\n  see also " + spans[i].str();
    return out;
}

std::string diagnostics_to_json(const Diagnostics &diags) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto &d : diags.items) {
        nlohmann::ordered_json spans = nlohmann::ordered_json::array();
        for (const auto &sp : d.spans) {
            if (sp.file.empty()) continue;
            spans.push_back({{"file", sp.file},
                             {"start_line", sp.start_line},
                             {"start_col", sp.start_col},
                             {"end_line", sp.end_line},
                             {"end_col", sp.end_col}});
        }
        nlohmann::ordered_json j = {{"kind", diag_kind_name(d.kind)},
                                    {"handler", d.handler},
                                    {"spans", spans},
                                    {"message", d.message}};
        arr.push_back(std::move(j));
    }
    return arr.dump(2);
}

std::string diagnostics_to_text(const Diagnostics &diags) {
    std::string out;
    for (const auto &d : diags.items) {
        out += d.str();
        out += "\n";
    }
    return out;
}

std::string read_file(const std::string &path, bool &ok) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        ok = false;
        return {};
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    ok = true;
    return ss.str();
}

bool write_file(const std::string &path, const std::string &content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) return false;
    out << content;
    return out.good();
}

std::optional<FrontendResult> run_frontend(const std::string &source, const std::string &file,
                                           Diagnostics &diags) {
    auto parsed = parse_source(source, file, diags);
    if (!parsed) return std::nullopt;
    FrontendResult out;
    out.program = std::move(*parsed);
    if (!resolve_names(out.program, diags)) return std::nullopt;
    auto checked = check_program(out.program, diags);
    if (!checked) return std::nullopt;
    out.checked = std::move(*checked);
    return out;
}

CheckOutcome cmd_check(const std::string &path, bool json) {
    CheckOutcome out;
    bool ok = false;
    std::string source = read_file(path, ok);
    if (!ok) {
        out.exit_code = kExitUsage;
        out.output = "error: cannot read '" + path + "'\n";
        return out;
    }
    Diagnostics diags;
    auto fe = run_frontend(source, path, diags);
    if (!fe) {
        out.exit_code = kExitDiagnostics;
        out.output = json ? diagnostics_to_json(diags) : diagnostics_to_text(diags);
        return out;
    }
    out.output = json ? "[]" : "";
    return out;
}

namespace {

std::string strip_extension(const std::string &path) {
    size_t slash = path.find_last_of('/');
    size_t dot = path.find_last_of('.');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path;
    return path.substr(0, dot);
}

} // namespace

CompileOutcome cmd_compile(const std::string &path, const CompileFlags &flags) {
    CompileOutcome out;
    bool ok = false;
    std::string source = read_file(path, ok);
    if (!ok) {
        out.exit_code = kExitUsage;
        out.output = "error: cannot read '" + path + "'\n";
        return out;
    }
    PipelineConfig config;
    if (!flags.config_path.empty()) {
        std::string ctext = read_file(flags.config_path, ok);
        if (!ok) {
            out.exit_code = kExitUsage;
            out.output = "error: cannot read '" + flags.config_path + "'\n";
            return out;
        }
        std::string err;
        auto parsed = config_from_json(ctext, err);
        if (!parsed) {
            out.exit_code = kExitUsage;
            out.output = "error: bad pipeline config: " + err + "\n";
            return out;
        }
        config = *parsed;
    }

    Diagnostics diags;
    auto fe = run_frontend(source, path, diags);
    if (!fe) {
        out.exit_code = kExitDiagnostics;
        out.output = flags.json ? diagnostics_to_json(diags) : diagnostics_to_text(diags);
        return out;
    }
    auto lowered = lower_program(fe->program, fe->checked, diags);
    if (!lowered) {
        out.exit_code = kExitDiagnostics;
        out.output = flags.json ? diagnostics_to_json(diags) : diagnostics_to_text(diags);
        return out;
    }

    std::string base = flags.out_base.empty() ? strip_extension(path) : flags.out_base;
    int unopt_depth = lowered->graph.longest_path();

    if (flags.emit_ir) {
        out.ir_path = base + ".ir.json";
        write_file(out.ir_path, graph_to_json(lowered->graph) + "\n");
    }

    if (flags.no_opt) {
        out.p4_path = base + ".p4";
        write_file(out.p4_path, emit_unoptimized(lowered->graph, fe->program, fe->checked));
        out.output = "stages: " + std::to_string(unopt_depth) + " (unoptimized)\n";
        return out;
    }

    auto guarded = eliminate_branches(lowered->graph, config, diags);
    if (!guarded) {
        out.exit_code = kExitDiagnostics;
        out.output = flags.json ? diagnostics_to_json(diags) : diagnostics_to_text(diags);
        return out;
    }
    guarded->notes.insert(guarded->notes.end(), lowered->notes.begin(), lowered->notes.end());
    auto placed = greedy_merge(std::move(*guarded), config, unopt_depth);
    if (auto *err = std::get_if<PlacementError>(&placed)) {
        out.exit_code = kExitDiagnostics;
        Diagnostics d2;
        d2.add(DiagKind::PlacementError, Span{},
               "cannot place table '" + err->table + "': " + err->reason);
        out.output = flags.json ? diagnostics_to_json(d2) : diagnostics_to_text(d2);
        return out;
    }
    const PipelineLayout &layout = std::get<PipelineLayout>(placed);
    LayoutReport report = layout_report(layout);

    out.p4_path = base + ".p4";
    write_file(out.p4_path, emit_pipeline(layout, fe->program, fe->checked));
    out.layout_path = base + ".layout.json";
    write_file(out.layout_path, layout_to_json(layout) + "\n");

    char ratio[32];
    snprintf(ratio, sizeof ratio, "%.2f", report.compression_ratio);
    out.output = "stages: " + std::to_string(report.stages_used) +
                 " (unoptimized longest path " + std::to_string(unopt_depth) +
                 ", compression " + ratio + "x)\n";
    return out;
}

InterpOutcome cmd_interp(const std::string &program_path, const std::string &spec_path,
                         const InterpFlags &flags) {
    InterpOutcome out;
    bool ok = false;
    std::string source = read_file(program_path, ok);
    if (!ok) {
        out.exit_code = kExitUsage;
        out.output = "error: cannot read '" + program_path + "'\n";
        return out;
    }
    std::string spec_text = read_file(spec_path, ok);
    if (!ok) {
        out.exit_code = kExitUsage;
        out.output = "error: cannot read '" + spec_path + "'\n";
        return out;
    }
    Diagnostics diags;
    auto fe = run_frontend(source, program_path, diags);
    if (!fe) {
        out.exit_code = kExitDiagnostics;
        out.output = flags.json_diags ? diagnostics_to_json(diags) : diagnostics_to_text(diags);
        return out;
    }
    auto spec = parse_sim_spec(spec_text, fe->program);
    if (auto *err = std::get_if<Diag>(&spec)) {
        out.exit_code = kExitUsage;
        out.output = "error: " + err->message + "\n";
        return out;
    }
    SimSpec &simspec = std::get<SimSpec>(spec);
    if (flags.recirc_cap_pps > 0) simspec.config.recirc_cap_pps = flags.recirc_cap_pps;

    std::optional<LoweredProgram> lowered;
    std::optional<PipelineLayout> layout;
    if (flags.mode != ExecMode::Surface) {
        lowered = lower_program(fe->program, fe->checked, diags);
        if (!lowered) {
            out.exit_code = kExitDiagnostics;
            out.output =
                flags.json_diags ? diagnostics_to_json(diags) : diagnostics_to_text(diags);
            return out;
        }
    }
    if (flags.mode == ExecMode::Layout) {
        auto guarded = eliminate_branches(lowered->graph, PipelineConfig{}, diags);
        if (!guarded) {
            out.exit_code = kExitDiagnostics;
            out.output =
                flags.json_diags ? diagnostics_to_json(diags) : diagnostics_to_text(diags);
            return out;
        }
        auto placed =
            greedy_merge(std::move(*guarded), PipelineConfig{}, lowered->graph.longest_path());
        if (auto *err = std::get_if<PlacementError>(&placed)) {
            out.exit_code = kExitDiagnostics;
            out.output = "PlacementError: cannot place '" + err->table + "': " + err->reason + "\n";
            return out;
        }
        layout = std::move(std::get<PipelineLayout>(placed));
    }

    InterpOptions opts;
    opts.mode = flags.mode;
    opts.trace_state = flags.trace_state;
    opts.monitor = flags.monitor;
    out.result = run_simulation(fe->program, fe->checked, simspec, opts,
                                lowered ? &*lowered : nullptr, layout ? &*layout : nullptr);
    return out;
}

std::string cmd_model(const ModelFlags &flags) {
    RecircParams params;
    params.entries = flags.entries;
    params.scan_interval_s = flags.interval_s;
    params.flow_rate = flags.flows;
    RecircRate rate = recirc_rate(params);
    return recirc_to_json(params, rate, flags.min_pkt_naive) + "\n";
}

FuzzOutcome cmd_core_fuzz(int seeds, int depth, int globals) {
    FuzzOutcome out;
    uint64_t checked = 0, stepped = 0, stuck = 0;
    core::GlobalTypes gts((size_t)globals, core::BaseType::Int);
    for (int seed = 0; seed < seeds; seed++) {
        auto term = core::generate_well_typed_term((uint64_t)seed, depth, globals);
        auto tc = core::core_typecheck(gts, {}, 0, *term);
        if (std::holds_alternative<core::TypeError>(tc)) {
            out.exit_code = kExitDiagnostics;
            out.output = "generator produced an ill-typed term at seed " +
                         std::to_string(seed) + "\n";
            return out;
        }
        checked++;
        core::MachineState state{core::initial_store(gts), 0, term};
        for (;;) {
            auto r = core::core_step(state);
            if (std::holds_alternative<core::Finished>(r)) break;
            if (std::holds_alternative<core::Stuck>(r)) {
                stuck++;
                break;
            }
            state = std::move(std::get<core::MachineState>(r));
            stepped++;
        }
    }
    nlohmann::ordered_json j = {{"checked", checked}, {"stepped", stepped}, {"stuck", stuck}};
    out.output = j.dump() + "\n";
    if (stuck > 0) out.exit_code = kExitDiagnostics;
    return out;
}

} // namespace lucid
