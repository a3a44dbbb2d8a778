#include "ftqcr/params.hpp"

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "ftqcr/errors.hpp"
#include "ftqcr/units.hpp"

namespace ftqcr::params {

using nlohmann::json;
using units::Dimension;

namespace {

struct FieldDesc {
    const char* key;
    Dimension dim;
    std::function<double&(HardwareParams&)> ref;
};

// n_hops handled separately (integer count).
const std::vector<FieldDesc>& fields() {
    static const std::vector<FieldDesc> f = {
        {"t1", Dimension::time, [](HardwareParams& p) -> double& { return p.t1; }},
        {"t2_star", Dimension::time, [](HardwareParams& p) -> double& { return p.t2_star; }},
        {"t_gate1", Dimension::time, [](HardwareParams& p) -> double& { return p.t_gate1; }},
        {"t_gate2", Dimension::time, [](HardwareParams& p) -> double& { return p.t_gate2; }},
        {"t_readout", Dimension::time, [](HardwareParams& p) -> double& { return p.t_readout; }},
        {"t_init", Dimension::time, [](HardwareParams& p) -> double& { return p.t_init; }},
        {"eps_defect", Dimension::probability, [](HardwareParams& p) -> double& { return p.eps_defect; }},
        {"v_shuttle", Dimension::speed, [](HardwareParams& p) -> double& { return p.v_shuttle; }},
        {"d_dot", Dimension::length, [](HardwareParams& p) -> double& { return p.d_dot; }},
        {"eps_readout", Dimension::probability, [](HardwareParams& p) -> double& { return p.eps_readout; }},
        {"eps_shuttle_per_dot", Dimension::probability,
         [](HardwareParams& p) -> double& { return p.eps_shuttle_per_dot; }},
        {"corner_factor", Dimension::dimensionless,
         [](HardwareParams& p) -> double& { return p.corner_factor; }},
    };
    return f;
}

double quantity_from_json(const json& v, Dimension dim, const std::string& key) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) return units::parse_quantity(v.get<std::string>(), dim);
    throw ConfigError("field '" + key + "' must be a number or a unit string");
}

void apply_overrides(HardwareParams& p, const json& obj) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        const std::string& key = it.key();
        if (key == "n_hops") {
            if (!it.value().is_number_integer() && !it.value().is_number_unsigned())
                throw ConfigError("field 'n_hops' must be an integer");
            p.n_hops = it.value().get<int>();
            continue;
        }
        bool found = false;
        for (const auto& f : fields()) {
            if (key == f.key) {
                f.ref(p) = quantity_from_json(it.value(), f.dim, key);
                found = true;
                break;
            }
        }
        if (!found) throw ConfigError("unknown config key '" + key + "'");
    }
}

void apply_env_overrides(HardwareParams& p) {
    auto env_for = [](std::string key) {
        for (auto& c : key) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        return "FTQCR_" + key;
    };
    for (const auto& f : fields()) {
        if (const char* v = std::getenv(env_for(f.key).c_str()))
            f.ref(p) = units::parse_quantity(v, f.dim);
    }
    if (const char* v = std::getenv("FTQCR_N_HOPS")) p.n_hops = std::atoi(v);
}

}  // namespace

void HardwareParams::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0)) throw ConfigError(std::string("parameter '") + name + "' must be > 0");
    };
    auto probability = [&](double v, const char* name) {
        positive(v, name);
        if (v > 1.0) throw ConfigError(std::string("parameter '") + name + "' must be <= 1");
    };
    positive(t1, "t1");
    positive(t2_star, "t2_star");
    positive(t_gate1, "t_gate1");
    positive(t_gate2, "t_gate2");
    positive(t_readout, "t_readout");
    positive(t_init, "t_init");
    positive(v_shuttle, "v_shuttle");
    positive(d_dot, "d_dot");
    positive(corner_factor, "corner_factor");
    probability(eps_defect, "eps_defect");
    probability(eps_readout, "eps_readout");
    probability(eps_shuttle_per_dot, "eps_shuttle_per_dot");
    if (n_hops < 1) throw ConfigError("parameter 'n_hops' must be >= 1");
    if (t2_star > 2.0 * t1)
        throw ConfigError("parameter 't2_star' violates t2_star <= 2*t1");
}

Scenario preset(const std::string& name) {
    Scenario s;
    s.name = name;
    if (name == "default") {
        // table defaults already in the struct
    } else if (name == "optimistic") {
        s.params.t1 = 1.0;
        s.params.t2_star = 1000e-6;
        s.params.t_gate1 = 1e-9;
        s.params.t_gate2 = 10e-9;
        s.params.t_readout = 0.1e-6;
        s.params.t_init = 0.01e-6;
        s.params.eps_defect = 1e-4;
        s.params.n_hops = 10;
    } else if (name == "pessimistic") {
        s.params.t1 = 0.01;
        s.params.t2_star = 10e-6;
        s.params.t_gate1 = 100e-9;
        s.params.t_gate2 = 1000e-9;
        s.params.t_readout = 10e-6;
        s.params.t_init = 1e-6;
        s.params.eps_defect =  1e-2;
        s.params.n_hops = 100;
    } else {
        throw ConfigError("unknown preset '" + name + "' (expected default|optimistic|pessimistic)");
    }
    s.params.validate();
    return s;
}

Scenario load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config parse failure in '" + path + "': " + e.what());
    }
    Scenario s = scenario_from_json(j);
    apply_env_overrides(s.params);
    s.params.validate();
    return s;
}

Scenario scenario_from_arg(const std::string& name_or_path) {
    if (name_or_path == "default" || name_or_path == "optimistic" || name_or_path == "pessimistic") {
        Scenario s = preset(name_or_path);
        apply_env_overrides(s.params);
        s.params.validate();
        return s;
    }
    return load_config(name_or_path);
}

Scenario scenario_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");
    Scenario s;
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (it.key() == "name") {
            s.name = it.value().get<std::string>();
        } else if (it.key() == "params") {
            if (!it.value().is_object()) throw ConfigError("'params' must be an object");
            apply_overrides(s.params, it.value());
        } else {
            throw ConfigError("unknown config key '" + it.key() + "' (expected name|params)");
        }
    }
    s.params.validate();
    return s;
}

nlohmann::json to_json(const Scenario& s) {
    json p;
    HardwareParams copy = s.params;
    for (const auto& f : fields()) p[f.key] = f.ref(copy);
    p["n_hops"] = s.params.n_hops;
    return json{{"name", s.name}, {"params", p}};
}

std::string scenario_hash(const Scenario& s) {
    // FNV-1a over the canonical serialization
    const std::string dump = to_json(s).dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 1099511628211ull;
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

}  // namespace ftqcr::params
