#include <doctest.h>

#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "ftqcr/errors.hpp"
#include "ftqcr/pauli.hpp"
#include "ftqcr/pulse.hpp"

using namespace ftqcr;
using pulse::DeviceModel;
using pulse::Matrix;
using pulse::PulseSchedule;

namespace {
constexpr double kPi = 3.14159265358979323846;

PulseSchedule constant_drive(const DeviceModel& dev, double duration, int segments,
                             double i_amp, double j_amp = 0.0) {
    PulseSchedule p = PulseSchedule::zero(dev, duration, segments);
    for (int m = 0; m < segments; ++m) {
        p.i_amp(m, 0) = i_amp;
        for (int e = 0; e < dev.n_edges(); ++e) p.j_amp(m, e) = j_amp;
    }
    return p;
}
}  // namespace

TEST_CASE("zero amplitudes propagate to the identity") {
    const auto dev = DeviceModel::chain(2);
    const auto p = PulseSchedule::zero(dev, 1e-6, 8);
    const auto res = pulse::propagate(dev, p, 2);
    CHECK((res.unitary - Matrix::Identity(4, 4)).norm() < 1e-12);
}

TEST_CASE("resonant I-drive matches the dense matrix-exponential oracle") {
    const auto dev = DeviceModel::chain(1);
    const double a = 3e6, t = 180e-9;
    const auto p = constant_drive(dev, t, 16, a);
    const auto res = pulse::propagate(dev, p, 4);

    // declared convention: H = -pi a sigma_x, an X rotation by 2 pi a t
    Matrix h = -kPi * a * pauli::gate_x();
    Matrix oracle = (std::complex<double>(0, -t) * h).exp();
    CHECK((res.unitary - oracle).norm() < 1e-9);

    // unitarity to 1e-10 in operator norm
    CHECK((res.unitary * res.unitary.adjoint() - Matrix::Identity(2, 2)).norm() < 1e-10);
}

TEST_CASE("constant exchange pulse is a SWAP-class entangler") {
    auto dev = DeviceModel::chain(2, /*delta_b=*/0.0);
    const double j = dev.j_max;
    const double t = 1.0 / (2.0 * j);
    const auto p = constant_drive(dev, t, 8, 0.0, j);
    const auto res = pulse::propagate(dev, p, 4);

    // oracle: exponential of the exchange term (2 pi J / 4) sigma.sigma
    const Matrix xx = pauli::dense(pauli::PauliString::from_label("XX"));
    const Matrix yy = pauli::dense(pauli::PauliString::from_label("YY"));
    const Matrix zz = pauli::dense(pauli::PauliString::from_label("ZZ"));
    const Matrix h = (2.0 * kPi * j / 4.0) * (xx + yy + zz);
    const Matrix oracle = (std::complex<double>(0, -t) * h).exp();
    CHECK((res.unitary - oracle).norm() < 1e-9);

    // SWAP up to a global phase
    const double inf_swap = pulse::operator_infidelity(res.unitary, pauli::gate_swap());
    CHECK(inf_swap < 1e-10);
}

TEST_CASE("propagation is stable under substep doubling") {
    auto dev = DeviceModel::chain(2);  // 10 MHz field step -> time-dependent exchange
    PulseSchedule p = PulseSchedule::zero(dev, 400e-9, 8);
    for (int m = 0; m < 8; ++m) {
        p.i_amp(m, 0) = 2e6;
        p.q_amp(m, 1) = -1.5e6;
        p.j_amp(m, 0) = 5e6;
    }
    const auto coarse = pulse::propagate(dev, p, 8);
    const auto fine = pulse::propagate(dev, p, 16);
    const auto finer = pulse::propagate(dev, p, 32);
    CHECK((coarse.unitary - fine.unitary).norm() < 1e-4);
    CHECK((fine.unitary - finer.unitary).norm() < 5e-6);
}

TEST_CASE("frame invariance under a common field shift") {
    auto dev = DeviceModel::chain(2);
    PulseSchedule p = PulseSchedule::zero(dev, 300e-9, 6);
    for (int m = 0; m < 6; ++m) {
        p.i_amp(m, 0) = 1e6;
        p.j_amp(m, 0) = 4e6;
    }
    const auto base = pulse::propagate(dev, p, 8);
    for (auto& b : dev.b_field) b += 37.5e6;
    const auto shifted = pulse::propagate(dev, p, 8);
    CHECK((base.unitary - shifted.unitary).norm() < 1e-12);
}

TEST_CASE("amplitude bounds are rejected") {
    const auto dev = DeviceModel::chain(1);
    auto p = constant_drive(dev, 1e-7, 4, dev.i_max * 1.5);
    CHECK_THROWS_AS(pulse::propagate(dev, p, 2), ConfigError);
}

TEST_CASE("grape analytic gradient matches central finite differences") {
    auto dev = DeviceModel::chain(2);
    const int segments = 5;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    PulseSchedule p = PulseSchedule::zero(dev, 220e-9, segments);
    for (int m = 0; m < segments; ++m) {
        p.i_amp(m, 0) = 0.5 * dev.i_max * u(rng);
        p.i_amp(m, 1) = 0.5 * dev.i_max * u(rng);
        p.q_amp(m, 0) = 0.5 * dev.q_max * u(rng);
        p.q_amp(m, 1) = 0.5 * dev.q_max * u(rng);
        p.j_amp(m, 0) = 0.25 * dev.j_max * (u(rng) + 1.0);
    }
    const Matrix target = pauli::gate_cnot();
    const auto grad = pulse::grape_gradient(dev, p, target, 3);

    const int n_qubits = dev.n_qubits;
    const int ppseg = 2 * n_qubits + dev.n_edges();
    auto value_at = [&](int m, int j, double v) {
        PulseSchedule q = p;
        if (j < n_qubits) q.i_amp(m, j) = v;
        else if (j < 2 * n_qubits) q.q_amp(m, j - n_qubits) = v;
        else q.j_amp(m, j - 2 * n_qubits) = v;
        return pulse::grape_objective(dev, q, target, 3);
    };
    for (int m = 0; m < segments; ++m) {
        for (int j = 0; j < ppseg; ++j) {
            const double v0 = (j < n_qubits) ? p.i_amp(m, j)
                              : (j < 2 * n_qubits) ? p.q_amp(m, j - n_qubits)
                                                   : p.j_amp(m, j - 2 * n_qubits);
            const double h = 10.0;  // Hz; objective varies on MHz scales
            const double fd = (value_at(m, j, v0 + h) - value_at(m, j, v0 - h)) / (2.0 * h);
            const double an = grad(m * ppseg + j);
            const double scale = std::max(std::abs(fd), 1e-12);
            CHECK(std::abs(an - fd) / scale < 1e-5);
        }
    }
}

TEST_CASE("grape solves the identity target with near-zero pulse") {
    const auto dev = DeviceModel::chain(1);
    const auto res = pulse::grape_optimize(dev, Matrix::Identity(2, 2), 100e-9, 8, 3);
    CHECK(res.infidelity <= 1e-6);
    // recorded objective never increases
    for (size_t i = 1; i < res.objective_trace.size(); ++i)
        CHECK(res.objective_trace[i] <= res.objective_trace[i - 1] + 1e-15);
}

TEST_CASE("grape reaches an X gate given a generous duration") {
    const auto dev = DeviceModel::chain(1);
    const auto res = pulse::grape_optimize(dev, pauli::gate_x(), 400e-9, 16, 11);
    CHECK(res.infidelity <= 1e-4);
    // bound feasibility is exact
    CHECK(res.pulse.i_amp.cwiseAbs().maxCoeff() <= dev.i_max);
    CHECK(res.pulse.q_amp.cwiseAbs().maxCoeff() <= dev.q_max);
}

TEST_CASE("find_met: identity target sits at the grid minimum") {
    const auto dev = DeviceModel::chain(1);
    const auto met = pulse::find_met(dev, Matrix::Identity(2, 2));
    CHECK(met.t_met == 0.0);
}

TEST_CASE("find_met: X gate reaches the analytic minimal rotation time") {
    const auto dev = DeviceModel::chain(1);
    pulse::MetOptions opts;
    opts.seeds = 2;
    opts.n_segments = 16;
    const auto met = pulse::find_met(dev, pauli::gate_x(), opts);
    // X rotation by pi at angular Rabi rate 2*pi*i_max: t = 1/(2 i_max) = 125 ns
    const double analytic = 1.0 / (2.0 * dev.i_max);
    CHECK(met.t_met >= analytic * 0.97);
    CHECK(met.t_met <= analytic * 1.05);
    CHECK(met.infidelity <= opts.cutoff);
}

TEST_CASE("two-qubit entangler takes longer than a one-qubit gate") {
    pulse::MetOptions opts;
    opts.seeds = 2;
    opts.n_segments = 16;
    const auto met1 = pulse::find_met(DeviceModel::chain(1), pauli::gate_x(), opts);
    const auto met2 = pulse::find_met(DeviceModel::chain(2), pauli::gate_cnot(), opts);
    CHECK(met2.t_met > met1.t_met);
}

TEST_CASE("compress_circuit reduces to find_met for a single segment") {
    const auto parent = DeviceModel::chain(3);
    pulse::MetOptions opts;
    opts.seeds = 2;
    opts.n_segments = 16;
    pulse::CircuitSegment seg{{0, 1}, pauli::gate_cnot(), "cnot"};
    const auto compressed = pulse::compress_circuit(parent, {seg}, opts);
    const auto direct = pulse::find_met(parent.restrict_to({0, 1}), pauli::gate_cnot(), opts);
    CHECK(compressed.total_time == doctest::Approx(direct.t_met).epsilon(1e-12));
}

TEST_CASE("compress_circuit: identity segments cost nothing") {
    const auto parent = DeviceModel::chain(4);
    pulse::CircuitSegment a{{0, 1}, Matrix::Identity(4, 4), "idle"};
    pulse::CircuitSegment b{{2, 3}, Matrix::Identity(4, 4), "idle"};
    const auto compressed = pulse::compress_circuit(parent, {a, b});
    CHECK(compressed.total_time == 0.0);
}

TEST_CASE("compress_circuit rejects oversized segments") {
    const auto parent = DeviceModel::chain(5 > 4 ? 4 : 5);
    pulse::CircuitSegment seg{{0, 1, 2, 3, 0}, Matrix::Identity(32, 32), "too-big"};
    CHECK_THROWS_AS(pulse::compress_circuit(parent, {seg}), ConfigError);
}

TEST_CASE("plaquette check compresses below four sequential two-qubit gates") {
    // weight-4 syndrome check split into <=4-qubit compartments: two
    // two-CNOT segments sharing the ancilla
    const auto parent = DeviceModel::star(5);  // data 0..3, ancilla 4
    pulse::MetOptions opts;
    opts.seeds = 2;
    opts.n_segments = 24;
    pulse::CircuitSegment first{{0, 1, 4}, pulse::named_target("check2"), "check2"};
    pulse::CircuitSegment second{{2, 3, 4}, pulse::named_target("check2"), "check2"};
    const auto compressed = pulse::compress_circuit(parent, {first, second}, opts);
    const double baseline = 4.0 * 225e-9;
    CHECK(compressed.total_time <= baseline);
    CHECK(compressed.infidelity_estimate <= 2.0 * opts.cutoff);
}

TEST_CASE("grape handles a four-qubit compartment") {
    const auto dev = DeviceModel::star(4);
    pulse::GrapeOptions go;
    go.max_iters = 600;
    go.target_infidelity = 1e-3;
    double best = 1.0;
    for (std::uint64_t seed : {1ull, 2ull}) {
        const auto res =
            pulse::grape_optimize(dev, pulse::named_target("check3"), 2.4e-6, 24, seed, go);
        best = std::min(best, res.infidelity);
        if (best <= 1e-3) break;
    }
    CHECK(best <= 1e-3);
}
