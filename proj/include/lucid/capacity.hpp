#pragma once

#include <cstdint>
#include <string>

namespace lucid {

// Worst-case recirculation model for scan-and-install style applications:
// a table of N entries scanned once per interval plus up to log2(N)
// installation passes per arriving flow.
struct RecircParams {
    uint64_t entries = 1 << 16;      // N (power of two)
    double scan_interval_s = 0.1;    // i
    double flow_rate = 10000;        // f, flows/s
    double pipeline_rate = 1e9;      // packets/s
    int port_count = 10;             // context only
    double port_gbps = 100;          // context only
};

struct RecircRate {
    double rate_pps = 0;
    double utilization = 0; // fraction of pipeline_rate
};

// r = N/i + f*log2(N); utilization = r / pipeline_rate.
RecircRate recirc_rate(const RecircParams &p);

// Minimum packet size (bytes) sustaining line rate on the front-panel ports
// given the recirculation load. This is the obvious bandwidth-share model; it
// does not reproduce the published min-packet row and is offered only behind
// --min-pkt-model naive.
double min_packet_size_naive(const RecircParams &p);

std::string recirc_to_json(const RecircParams &p, const RecircRate &r, bool with_min_pkt);

} // namespace lucid
