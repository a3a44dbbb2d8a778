#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ftqcr/noise.hpp"
#include "ftqcr/params.hpp"

namespace ftqcr::arch {

enum class LayoutKind { sparse, patched, dense };

LayoutKind layout_from_string(const std::string& s);
std::string to_string(LayoutKind k);

// Connectivity model of the processor. The grid is an abstract rows x cols
// dot array used for routing; the layout kind decides which operations pay
// shuttling legs.
struct Layout {
    LayoutKind kind = LayoutKind::dense;
    int rows = 20;
    int cols = 20;
    int logical_per_patch = 1;  // patched layouts: 1 or 2

    static Layout make(LayoutKind kind);
};

struct Node {
    int r = 0, c = 0;
    bool operator==(const Node&) const = default;
};

struct DefectMap {
    int rows = 0, cols = 0;
    std::vector<std::uint8_t> defective;
    std::uint64_t seed = 0;
    double eps_defect = 0.0;

    // each dot defective independently with probability eps under the seed
    static DefectMap sample(int rows, int cols, double eps, std::uint64_t seed);
    bool is_defective(Node n) const { return defective[static_cast<size_t>(n.r * cols + n.c)] != 0; }
    bool in_grid(Node n) const { return n.r >= 0 && n.r < rows && n.c >= 0 && n.c < cols; }
};

struct Route {
    std::vector<Node> path;
    int hops = 0;
    int corners = 0;
    double duration = 0.0;  // hops * t_step
    Node src, dst;          // possibly remapped endpoints

    nlohmann::json to_json() const;
};

// Shortest defect-free path by breadth-first search. Defective endpoints are
// remapped to the nearest non-defective dot first. Throws ModelError when the
// pruned grid disconnects the endpoints.
Route route(const DefectMap& defects, Node src, Node dst, const params::HardwareParams& hp);

struct ShuttleStats {
    double mean_extra_hops = 0.0;
    double mean_added_error = 0.0;
    double mean_hops = 0.0;
    int disconnected = 0;
    int trials = 0;
};

// Monte-Carlo means over random defect maps and random distinct (src, dst)
// pairs; deterministic for a fixed seed regardless of thread count.
ShuttleStats shuttle_stats(double eps_defect, int rows, int cols, int trials,
                           std::uint64_t seed, const params::HardwareParams& hp);

enum class OpKind { gate1, gate2, readout, init, lane_shuttle, stabilizer_cycle };
OpKind op_kind_from_string(const std::string& s);

// Wall-clock latency of one physical operation under a layout. The dense
// stabilizer cycle is init + (check weight) CNOT layers + readout; sparse
// two-qubit layers add two lane-shuttle legs each and the cycle one return
// leg to the readout zone; patched behaves densely inside a patch. In pulse
// mode the CNOT layers are replaced by compressed check segments and two-
// qubit gates by their MET.
struct LatencyModel {
    params::HardwareParams hp;
    noise::OpMode mode = noise::OpMode::gate;
    // pulse-mode durations (filled from the MET library when mode == pulse)
    double t_gate1_pulse = 0.0;
    double t_gate2_pulse = 0.0;
    double t_check_segment = 0.0;  // one compressed two-CNOT check segment
    int check_segments_per_cycle = 2;

    double gate1() const;
    double gate2() const;
    int cnot_layers = 4;  // stabilizer weight of the code family
};

double op_latency(const Layout& layout, OpKind kind, const LatencyModel& lm);

// Deterministic defect-detour factor for a scenario: mean extra hops per lane
// hop from a seeded Monte Carlo, used to derate sparse shuttling.
double defect_detour_factor(const params::HardwareParams& hp, std::uint64_t seed = 2026);

nlohmann::json to_json(const Layout& l);

}  // namespace ftqcr::arch
