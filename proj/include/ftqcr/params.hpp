#pragma once

#include <string>

#include <nlohmann/json_fwd.hpp>

namespace ftqcr::params {

// Hardware parameter vector for a silicon spin-qubit processor. All values
// in SI units (seconds, meters, plain probabilities). Defaults are the
// summary-table defaults for present-day silicon devices.
struct HardwareParams {
    double t1 = 0.1;                      // relaxation time [s]
    double t2_star = 100e-6;              // inhomogeneous dephasing time [s]
    double t_gate1 = 50e-9;               // single-qubit gate time [s]
    double t_gate2 = 225e-9;              // two-qubit gate time [s]
    double t_readout = 1e-6;              // single-spin readout time [s]
    double t_init = 0.1e-6;               // initialization time [s]
    double eps_defect = 1e-3;             // faulty-dot probability
    double v_shuttle = 8.0;               // shuttling speed [m/s]
    int n_hops = 10;                      // dots traversed per connectivity lane
    double d_dot = 100e-9;                // dot pitch [m]
    double eps_readout = 1e-4;            // readout assignment error
    double eps_shuttle_per_dot = 1e-5;    // shuttling error per dot
    double corner_factor = 4.0;           // error multiplier for corners/T-junctions

    double t_step() const { return d_dot / v_shuttle; }        // per-hop shuttle time
    double t_lane() const { return n_hops * t_step(); }        // straight-lane transit

    // Throws ConfigError naming the offending field. Enforces positivity,
    // probability ranges, and t2_star <= 2*t1.
    void validate() const;

    bool operator==(const HardwareParams&) const = default;
};

struct Scenario {
    std::string name = "default";
    HardwareParams params;

    bool operator==(const Scenario&) const = default;
};

// Named presets: "default" (table defaults), "optimistic" / "pessimistic"
// (best / worst ends of the reported ranges; fields without a published
// range stay at their defaults).
Scenario preset(const std::string& name);

// Loads a JSON config file. Missing keys fall back to defaults, unknown keys
// are rejected, values may carry unit suffixes ("225 ns", "0.1 %").
// Environment variables FTQCR_<FIELD> (e.g. FTQCR_T_GATE2="100 ns") override
// both defaults and file contents.
Scenario load_config(const std::string& path);

// Accepts either a preset name or a path to a config file.
Scenario scenario_from_arg(const std::string& name_or_path);

nlohmann::json to_json(const Scenario& s);
Scenario scenario_from_json(const nlohmann::json& j);

// Stable hash of the fully-resolved scenario, used for sweep provenance.
std::string scenario_hash(const Scenario& s);

}  // namespace ftqcr::params
