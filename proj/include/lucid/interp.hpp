#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lucid/effects.hpp"
#include "lucid/layout.hpp"
#include "lucid/lowering.hpp"
#include "lucid/sim.hpp"

namespace lucid {

enum class ExecMode { Surface, Ir, Layout };

struct InterpOptions {
    ExecMode mode = ExecMode::Surface;
    bool trace_state = false;
    bool monitor = false;
};

struct InterpResult {
    // JSON lines: exec/fault/drop/state records followed by one summary.
    std::vector<std::string> log;
    // final array contents per switch
    std::map<uint32_t, std::map<std::string, std::vector<uint64_t>>> arrays;
    // ordered-access monitor findings (empty unless monitoring)
    std::vector<std::string> violations;
    uint64_t events_handled = 0;
    uint64_t recirculations = 0;
    uint64_t faults = 0;
    uint64_t recirc_pps_peak = 0;
    uint64_t end_time_ns = 0;

    std::string log_text() const {
        std::string out;
        for (const auto &l : log) {
            out += l;
            out += "\n";
        }
        return out;
    }
};

// Runs the discrete-event simulation over the trace. `lowered` is required
// for Ir mode, `layout` for Layout mode.
InterpResult run_simulation(const Program &p, const CheckedProgram &checked, const SimSpec &spec,
                            const InterpOptions &opts, const LoweredProgram *lowered = nullptr,
                            const PipelineLayout *layout = nullptr);

// CRC over the big-endian operand bytes with the given polynomial, truncated
// to `width` bits. Shared by every execution mode.
uint64_t lucid_hash(uint64_t poly, const std::vector<std::pair<uint64_t, uint32_t>> &args,
                    uint32_t width);

uint64_t eval_binop_u(BinKind op, uint64_t a, uint64_t b, uint32_t width);
uint64_t width_mask(uint32_t width);

} // namespace lucid
