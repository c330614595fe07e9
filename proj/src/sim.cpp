#include "lucid/sim.hpp"

#include <nlohmann/json.hpp>

namespace lucid {

namespace {

using nlohmann::json;

struct SpecFail {
    std::string pointer;
    std::string message;
};

#define SPEC_REQUIRE(cond, ptr, msg)                                                            \
    do {                                                                                        \
        if (!(cond)) throw SpecFail{ptr, msg};                                                  \
    } while (0)

uint64_t get_u64(const json &j, const std::string &ptr) {
    SPEC_REQUIRE(j.is_number_unsigned() || (j.is_number_integer() && j.get<int64_t>() >= 0), ptr,
                 "expected a non-negative integer");
    return j.get<uint64_t>();
}

} // namespace

std::variant<SimSpec, Diag> parse_sim_spec(const std::string &json_text, const Program &program) {
    SimSpec spec;
    try {
        json j = json::parse(json_text, nullptr, false);
        SPEC_REQUIRE(!j.is_discarded(), "", "invalid JSON");
        SPEC_REQUIRE(j.is_object(), "", "expected an object");
        SPEC_REQUIRE(j.contains("switches"), "/switches", "missing required field");
        SPEC_REQUIRE(j["switches"].is_array() && !j["switches"].empty(), "/switches",
                     "expected a non-empty array of switch ids");
        for (size_t i = 0; i < j["switches"].size(); i++)
            spec.topo.switches.push_back(
                (uint32_t)get_u64(j["switches"][i], "/switches/" + std::to_string(i)));

        if (j.contains("links")) {
            SPEC_REQUIRE(j["links"].is_array(), "/links", "expected an array");
            for (size_t i = 0; i < j["links"].size(); i++) {
                std::string ptr = "/links/" + std::to_string(i);
                const json &l = j["links"][i];
                SPEC_REQUIRE(l.is_object() && l.contains("a") && l.contains("b"), ptr,
                             "link needs fields a and b");
                uint32_t a = (uint32_t)get_u64(l["a"], ptr + "/a");
                uint32_t b = (uint32_t)get_u64(l["b"], ptr + "/b");
                uint64_t lat = l.contains("latency_ns") ? get_u64(l["latency_ns"], ptr + "/latency_ns") : 0;
                SPEC_REQUIRE(spec.topo.has_switch(a), ptr + "/a", "unknown switch id");
                SPEC_REQUIRE(spec.topo.has_switch(b), ptr + "/b", "unknown switch id");
                // links are given once and usable in both directions
                spec.topo.links[{a, b}] = lat;
                spec.topo.links[{b, a}] = lat;
            }
        }

        // program-declared groups first, then spec overrides
        for (const auto &[name, idx] : program.groups) {
            const auto &g = std::get<GroupDecl>(program.decls[idx].v);
            spec.topo.groups[name] = g.members;
        }
        if (j.contains("groups")) {
            SPEC_REQUIRE(j["groups"].is_object(), "/groups", "expected an object");
            for (auto it = j["groups"].begin(); it != j["groups"].end(); ++it) {
                std::string ptr = "/groups/" + it.key();
                SPEC_REQUIRE(it.value().is_array() && !it.value().empty(), ptr,
                             "expected a non-empty array of switch ids");
                std::vector<uint32_t> members;
                for (size_t i = 0; i < it.value().size(); i++)
                    members.push_back(
                        (uint32_t)get_u64(it.value()[i], ptr + "/" + std::to_string(i)));
                spec.topo.groups[it.key()] = std::move(members);
            }
        }

        if (j.contains("config")) {
            SPEC_REQUIRE(j["config"].is_object(), "/config", "expected an object");
            const json &c = j["config"];
            if (c.contains("recirc_delay_ns"))
                spec.config.recirc_delay_ns = get_u64(c["recirc_delay_ns"], "/config/recirc_delay_ns");
            if (c.contains("delay_release_interval_ns")) {
                spec.config.delay_release_interval_ns =
                    get_u64(c["delay_release_interval_ns"], "/config/delay_release_interval_ns");
                SPEC_REQUIRE(spec.config.delay_release_interval_ns > 0,
                             "/config/delay_release_interval_ns", "must be positive");
            }
            if (c.contains("max_sim_time_ns"))
                spec.config.max_sim_time_ns = get_u64(c["max_sim_time_ns"], "/config/max_sim_time_ns");
            if (c.contains("generate_limit"))
                spec.config.generate_limit =
                    (int)get_u64(c["generate_limit"], "/config/generate_limit");
            if (c.contains("recirc_cap_pps"))
                spec.config.recirc_cap_pps = get_u64(c["recirc_cap_pps"], "/config/recirc_cap_pps");
        }

        if (j.contains("events")) {
            SPEC_REQUIRE(j["events"].is_array(), "/events", "expected an array");
            for (size_t i = 0; i < j["events"].size(); i++) {
                std::string ptr = "/events/" + std::to_string(i);
                const json &e = j["events"][i];
                SPEC_REQUIRE(e.is_object(), ptr, "expected an object");
                SPEC_REQUIRE(e.contains("time_ns"), ptr + "/time_ns", "missing required field");
                SPEC_REQUIRE(e.contains("switch"), ptr + "/switch", "missing required field");
                SPEC_REQUIRE(e.contains("name") && e["name"].is_string(), ptr + "/name",
                             "missing event name");
                TraceEvent te;
                te.time_ns = get_u64(e["time_ns"], ptr + "/time_ns");
                te.sw = (uint32_t)get_u64(e["switch"], ptr + "/switch");
                te.name = e["name"].get<std::string>();
                SPEC_REQUIRE(spec.topo.has_switch(te.sw), ptr + "/switch", "unknown switch id");
                const EventDecl *ev = program.find_event(te.name);
                SPEC_REQUIRE(ev != nullptr, ptr + "/name",
                             "event '" + te.name + "' is not declared by the program");
                if (e.contains("args")) {
                    SPEC_REQUIRE(e["args"].is_array(), ptr + "/args", "expected an array");
                    for (size_t k = 0; k < e["args"].size(); k++)
                        te.args.push_back(
                            get_u64(e["args"][k], ptr + "/args/" + std::to_string(k)));
                }
                SPEC_REQUIRE(te.args.size() == ev->params.size(), ptr + "/args",
                             "event '" + te.name + "' takes " +
                                 std::to_string(ev->params.size()) + " arguments, got " +
                                 std::to_string(te.args.size()));
                spec.events.push_back(std::move(te));
            }
        }
    } catch (const SpecFail &f) {
        Diag d;
        d.kind = DiagKind::SpecError;
        d.message = (f.pointer.empty() ? std::string("spec") : f.pointer) + ": " + f.message;
        return d;
    }
    return spec;
}

} // namespace lucid
