#include "lucid/capacity.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

namespace lucid {

RecircRate recirc_rate(const RecircParams &p) {
    RecircRate out;
    out.rate_pps = (double)p.entries / p.scan_interval_s + p.flow_rate * std::log2((double)p.entries);
    out.utilization = out.rate_pps / p.pipeline_rate;
    return out;
}

double min_packet_size_naive(const RecircParams &p) {
    // front-panel bytes/s spread over the pipeline slots left after
    // recirculation traffic
    RecircRate r = recirc_rate(p);
    double front_panel_bytes = p.port_count * p.port_gbps * 1e9 / 8.0;
    double slots = p.pipeline_rate - r.rate_pps;
    return slots > 0 ? front_panel_bytes / slots : 0;
}

std::string recirc_to_json(const RecircParams &p, const RecircRate &r, bool with_min_pkt) {
    nlohmann::ordered_json j;
    j["entries"] = p.entries;
    j["scan_interval_s"] = p.scan_interval_s;
    j["flow_rate"] = p.flow_rate;
    j["rate_pps"] = r.rate_pps;
    j["utilization"] = r.utilization;
    if (with_min_pkt) j["min_pkt_bytes_naive"] = min_packet_size_naive(p);
    return j.dump(2);
}

} // namespace lucid
