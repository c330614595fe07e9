#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "lucid/ast.hpp"
#include "lucid/diag.hpp"

namespace lucid {

struct Topology {
    std::vector<uint32_t> switches;
    std::map<std::pair<uint32_t, uint32_t>, uint64_t> links; // directed, latency ns
    std::map<std::string, std::vector<uint32_t>> groups;

    bool has_switch(uint32_t id) const {
        for (uint32_t s : switches)
            if (s == id) return true;
        return false;
    }
    std::optional<uint64_t> latency(uint32_t a, uint32_t b) const {
        auto it = links.find({a, b});
        if (it == links.end()) return std::nullopt;
        return it->second;
    }
};

struct SimConfig {
    uint64_t recirc_delay_ns = 600;             // latency/spacing of one recirculation
    uint64_t delay_release_interval_ns = 100000; // R: pausable-queue release period
    uint64_t max_sim_time_ns = 1000000000000ull;
    int generate_limit = 64;      // hard cap per handler execution
    uint64_t recirc_cap_pps = 0;  // 0 = account only, no throttle
};

struct TraceEvent {
    uint64_t time_ns = 0;
    uint32_t sw = 0;
    std::string name;
    std::vector<uint64_t> args;
};

struct SimSpec {
    Topology topo;
    SimConfig config;
    std::vector<TraceEvent> events;
};

// Parses and validates the topology/trace JSON. Returns a SpecError
// diagnostic carrying a JSON pointer path on malformed input; event
// signatures are checked against the program.
std::variant<SimSpec, Diag> parse_sim_spec(const std::string &json_text, const Program &program);

} // namespace lucid
