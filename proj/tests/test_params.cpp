#include <doctest.h>

#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "ftqcr/errors.hpp"
#include "ftqcr/params.hpp"

using namespace ftqcr;
using params::HardwareParams;
using params::Scenario;

namespace {

std::string write_temp(const std::string& content) {
    static int counter = 0;
    std::string path = "ftqcr_test_cfg_" + std::to_string(++counter) + ".json";
    std::ofstream out(path);
    out << content;
    return path;
}

}  // namespace

TEST_CASE("empty config yields the table defaults") {
    const auto path = write_temp("{}");
    const Scenario s = params::load_config(path);
    std::remove(path.c_str());
    CHECK(s.params.t_gate2 == 225e-9);
    CHECK(s.params.t2_star == 100e-6);
    CHECK(s.params.eps_shuttle_per_dot == 1e-5);
    CHECK(s.params.t1 == 0.1);
    CHECK(s.params.t_gate1 == 50e-9);
    CHECK(s.params.t_readout == 1e-6);
    CHECK(s.params.t_init == 0.1e-6);
    CHECK(s.params.eps_defect == 1e-3);
    CHECK(s.params.v_shuttle == 8.0);
    CHECK(s.params.n_hops == 10);
    CHECK(s.params.d_dot == 100e-9);
    CHECK(s.params.eps_readout == 1e-4);
    CHECK(s.params.corner_factor == 4.0);
}

TEST_CASE("partial override keeps the other defaults") {
    const auto path = write_temp(R"({"params": {"t_readout": "0.5 us"}})");
    const Scenario s = params::load_config(path);
    std::remove(path.c_str());
    CHECK(s.params.t_readout == doctest::Approx(0.5e-6).epsilon(1e-15));
    HardwareParams defaults;
    defaults.t_readout = s.params.t_readout;
    CHECK(s.params == defaults);
}

TEST_CASE("dephasing-relaxation constraint is enforced") {
    const auto path = write_temp(R"({"params": {"t2_star": "0.3 s"}})");
    // t2_star = 3 * t1 violates t2_star <= 2 t1
    CHECK_THROWS_AS(params::load_config(path), ConfigError);
    std::remove(path.c_str());
}

TEST_CASE("unknown keys are rejected") {
    const auto path = write_temp(R"({"params": {"t_gate3": 1.0}})");
    CHECK_THROWS_AS(params::load_config(path), ConfigError);
    std::remove(path.c_str());
}

TEST_CASE("presets pin the range endpoints") {
    const Scenario d = params::preset("default");
    CHECK(d.params.t_gate1 == 50e-9);

    const Scenario opt = params::preset("optimistic");
    CHECK(opt.params.t2_star == 1000e-6);
    CHECK(opt.params.t_gate1 == 1e-9);
    CHECK(opt.params.t1 == 1.0);
    // fields without a published range stay at their defaults
    CHECK(opt.params.v_shuttle == d.params.v_shuttle);
    CHECK(opt.params.eps_readout == d.params.eps_readout);
    CHECK(opt.params.eps_shuttle_per_dot == d.params.eps_shuttle_per_dot);

    const Scenario pes = params::preset("pessimistic");
    CHECK(pes.params.t2_star == 10e-6);
    CHECK(pes.params.t_readout == 10e-6);

    CHECK_THROWS_AS(params::preset("hopeful"), ConfigError);
}

TEST_CASE("serialize / reload round trip") {
    Scenario s = params::preset("optimistic");
    s.params.t_gate2 = 123e-9;
    const auto j = params::to_json(s);
    const Scenario back = params::scenario_from_json(j);
    CHECK(back == s);
    CHECK(params::scenario_hash(back) == params::scenario_hash(s));
    s.params.t_gate2 = 124e-9;
    CHECK(params::scenario_hash(back) != params::scenario_hash(s));
}

TEST_CASE("environment override") {
    setenv("FTQCR_T_READOUT", "2 us", 1);
    const auto path = write_temp("{}");
    const Scenario s = params::load_config(path);
    std::remove(path.c_str());
    unsetenv("FTQCR_T_READOUT");
    CHECK(s.params.t_readout == doctest::Approx(2e-6).epsilon(1e-15));
}
