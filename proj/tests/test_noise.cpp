#include <doctest.h>

#include <cmath>
#include <random>

#include "ftqcr/noise.hpp"
#include "ftqcr/parallel.hpp"
#include "ftqcr/pauli.hpp"
#include "ftqcr/pulse.hpp"

using namespace ftqcr;
using noise::FilterFunctionSet;
using noise::FilterKernel;
using noise::NoiseChannelSpec;
using noise::SpectralDensity;
using pauli::Matrix;
using pauli::PauliString;

namespace {

constexpr double kPi = 3.14159265358979323846;

pulse::PropagationResult identity_evolution(int n_qubits, double tau, int n_ckpt) {
    pulse::PropagationResult prop;
    const int d = 1 << n_qubits;
    prop.unitary = Matrix::Identity(d, d);
    for (int i = 0; i < n_ckpt; ++i) {
        prop.checkpoint_times.push_back(tau * i / (n_ckpt - 1));
        prop.checkpoints.push_back(prop.unitary);
    }
    return prop;
}

double sinc(double x) { return x == 0.0 ? 1.0 : std::sin(x) / x; }

// Independent oracle for the projection: dense Choi diagonal of the
// filter-function channel plus a KKT solve of the two-constraint least squares.
Eigen::VectorXd constrained_ls_oracle(const FilterKernel& kernel) {
    const int nq = kernel.n_qubits;
    const int d = 1 << nq;
    const int np = pauli::n_paulis(nq);

    Eigen::VectorXd jdiag(np);
    for (int i = 0; i < np; ++i) {
        const Matrix pi = pauli::dense(static_cast<std::uint32_t>(i), nq);
        Matrix ep = pi;
        for (const auto& g : kernel.gamma) {
            for (int k = 0; k < np; ++k)
                for (int l = 0; l < np; ++l) {
                    if (g(k, l) == 0.0) continue;
                    const Matrix sk = pauli::dense(static_cast<std::uint32_t>(k), nq);
                    const Matrix sl = pauli::dense(static_cast<std::uint32_t>(l), nq);
                    ep += g(k, l) * (sk * pi * sl - 0.5 * (sk * sl * pi + pi * sk * sl));
                }
        }
        jdiag(i) = ((pi * ep).trace() / static_cast<double>(d)).real();
    }

    double gamma = 0.0;
    for (const auto& g : kernel.gamma) gamma += g.trace();
    gamma /= static_cast<double>(d);

    // KKT system for min ||theta - jdiag||^2 s.t. sum theta = 1, sum_{i>=1} theta = gamma
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(np + 2, np + 2);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(np + 2);
    for (int i = 0; i < np; ++i) {
        kkt(i, i) = 2.0;
        kkt(i, np) = 1.0;
        kkt(np, i) = 1.0;
        if (i >= 1) {
            kkt(i, np + 1) = 1.0;
            kkt(np + 1, i) = 1.0;
        }
        rhs(i) = 2.0 * jdiag(i);
    }
    rhs(np) = 1.0;
    rhs(np + 1) = gamma;
    const Eigen::VectorXd sol = kkt.fullPivLu().solve(rhs);
    return sol.head(np);
}

FilterKernel random_psd_kernel(int n_qubits, std::uint64_t seed, double scale) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    const int np = pauli::n_paulis(n_qubits);
    FilterKernel kernel;
    kernel.n_qubits = n_qubits;
    Eigen::MatrixXd m(np, np);
    for (int r = 0; r < np; ++r)
        for (int c = 0; c < np; ++c) m(r, c) = g(rng);
    // zero coupling to the identity component, as for traceless noise operators
    m.col(0).setZero();
    Eigen::MatrixXd psd = scale * (m.transpose() * m) / np;
    psd.row(0).setZero();
    psd.col(0).setZero();
    kernel.gamma.push_back(psd);
    return kernel;
}

}  // namespace

TEST_CASE("markov mapping: frozen values and limits") {
    params::HardwareParams hp;  // T1 = 0.1 s, T2* = 100 us
    const auto zero = noise::markov_pauli_probs(0.0, hp);
    CHECK(zero.px == 0.0);
    CHECK(zero.py == 0.0);
    CHECK(zero.pz == 0.0);

    const auto inf = noise::markov_pauli_probs(1e9, hp);
    CHECK(inf.px == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(inf.py == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(inf.pz == doctest::Approx(0.25).epsilon(1e-12));

    const auto p = noise::markov_pauli_probs(50e-9, hp);
    CHECK(p.px == doctest::Approx(1.24999968736938527e-07).epsilon(1e-12));
    CHECK(p.py == p.px);
    CHECK(p.pz == doctest::Approx(2.49812510446617564e-04).epsilon(1e-12));

    const auto g2 = noise::markov_pauli_probs(225e-9, hp);
    CHECK(g2.pz == doctest::Approx(1.12317282431784182e-03).epsilon(1e-12));
}

TEST_CASE("spectral density: plateau, 1/f band, rolloff") {
    SpectralDensity s;
    s.amplitude = 2.5;
    s.omega_low = 10.0;
    s.omega_high = 1e7;
    CHECK(s.eval(0.0) == doctest::Approx(0.25).epsilon(1e-12));
    for (double w : {100.0, 1e3, 1e4, 1e5, 1e6}) {
        CHECK(std::abs(s.eval(w) - s.amplitude / w) / (s.amplitude / w) < 0.01);
    }
    CHECK(s.eval(1e7) == doctest::Approx(2.5 / (2.0 * 1e7)).epsilon(1e-12));
    CHECK(s.eval(-1e3) == s.eval(1e3));
}

TEST_CASE("autocorrelation matches the logarithmic intermediate regime") {
    SpectralDensity s;
    s.amplitude = 3.0;
    s.omega_low = 1.0;
    s.omega_high = 1e14;
    const double tau = 2e-11;  // 1/w_high << tau << 1/w_low, plateau negligible
    const double c = noise::autocorrelation(s, tau);
    const double gamma_e = 0.57721566490153286;
    const double asymptote = (s.amplitude / kPi) * (std::log(1.0 / (s.omega_low * tau)) - gamma_e);
    CHECK(std::abs(c - asymptote) / asymptote < 0.05);
}

TEST_CASE("static qubit filter function is tau^2 sinc^2") {
    const double tau = 1e-6;
    FilterFunctionSet ffs(identity_evolution(1, tau, 65),
                          {{PauliString::from_label("Z"), SpectralDensity{}}});
    for (double x : {0.0, 0.7, 2.3, 9.1}) {
        const double w = x / tau;
        const double expected = tau * tau * sinc(w * tau / 2.0) * sinc(w * tau / 2.0);
        CHECK(ffs.eval(0, w) == doctest::Approx(expected).epsilon(1e-8));
        CHECK(ffs.eval(0, -w) == doctest::Approx(ffs.eval(0, w)).epsilon(1e-12));
    }
}

TEST_CASE("resonant drive reproduces the two-lobe closed form") {
    // H = -pi a sigma_x -> Rabi angular frequency 2*pi*a
    const double a = 0.85e6;
    const double omega_rabi = 2.0 * kPi * a;
    const double tau = 1e-6;
    const auto dev = pulse::DeviceModel::chain(1);
    pulse::PulseSchedule p = pulse::PulseSchedule::zero(dev, tau, 8);
    for (int m = 0; m < 8; ++m) p.i_amp(m, 0) = a;
    const auto prop = pulse::propagate(dev, p, 2, 513);

    FilterFunctionSet ffs(prop, {{PauliString::from_label("Z"), SpectralDensity{}}});
    double max_rel = 0.0;
    for (int i = 0; i < 100; ++i) {
        const double w = (0.3 + 24.7 * i / 99.0) / tau;
        const double sp = sinc((w + omega_rabi) * tau / 2.0);
        const double sm = sinc((w - omega_rabi) * tau / 2.0);
        const double expected = tau * tau / 2.0 * (sp * sp + sm * sm);
        max_rel = std::max(max_rel, std::abs(ffs.eval(0, w) - expected) / expected);
    }
    CHECK(max_rel < 1e-4);
}

TEST_CASE("white-noise limit of the infidelity integral") {
    // flat S = S0 well past the sinc support: eps = S0 * tau / (D+1)
    const double s0 = 4.0e-5;
    const double wc = 1e9;
    SpectralDensity s;
    s.amplitude = s0 * wc;
    s.omega_low = wc;
    s.omega_high = wc;
    const double tau = 1e-3;
    FilterFunctionSet ffs(identity_evolution(1, tau, 65), {{PauliString::from_label("Z"), s}});
    const double eps = noise::infidelity_from_spectrum(ffs);
    CHECK(eps == doctest::Approx(s0 * tau / 3.0).epsilon(2e-3));

    // dual route: time-domain kernel trace
    const auto kernel = noise::kernel_time_domain(ffs);
    CHECK(noise::infidelity_from_kernel(kernel) == doctest::Approx(eps).epsilon(1e-4));
}

TEST_CASE("infidelity is exactly linear in the noise power") {
    SpectralDensity s;
    s.amplitude = 1e4;
    s.omega_low = 2.0 * kPi;
    s.omega_high = 2.0 * kPi * 1e9;
    const double tau = 2e-6;
    FilterFunctionSet ffs1(identity_evolution(1, tau, 65), {{PauliString::from_label("Z"), s}});
    s.amplitude *= 2.0;
    FilterFunctionSet ffs2(identity_evolution(1, tau, 65), {{PauliString::from_label("Z"), s}});
    const double e1 = noise::infidelity_from_spectrum(ffs1);
    const double e2 = noise::infidelity_from_spectrum(ffs2);
    CHECK(e2 == doctest::Approx(2.0 * e1).epsilon(1e-9));
}

TEST_CASE("time-domain and frequency-domain kernel traces agree on a driven pulse") {
    const auto dev = pulse::DeviceModel::chain(2);
    pulse::PulseSchedule p = pulse::PulseSchedule::zero(dev, 0.5e-6, 8);
    for (int m = 0; m < 8; ++m) {
        p.i_amp(m, 0) = 2.2e6;
        p.q_amp(m, 1) = -1.1e6;
        p.j_amp(m, 0) = 6e6;
    }
    const auto prop = pulse::propagate(dev, p, 2, 513);
    SpectralDensity s;
    s.amplitude = 1e5;
    s.omega_low = 2.0 * kPi;
    s.omega_high = 2.0 * kPi * 1e9;
    FilterFunctionSet ffs(prop, {{PauliString::from_label("ZI"), s},
                                 {PauliString::from_label("IZ"), s}});

    const double eps_freq = noise::infidelity_from_spectrum(ffs);
    const auto kernel = noise::kernel_time_domain(ffs);
    const double eps_time = noise::infidelity_from_kernel(kernel);
    CHECK(eps_time == doctest::Approx(eps_freq).epsilon(1e-4));

    // kernels are PSD
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(kernel.gamma[0] + kernel.gamma[1]);
    CHECK(es.eigenvalues().minCoeff() > -1e-12 * es.eigenvalues().maxCoeff());

    // per-diagonal dual check
    const auto diag_freq = noise::kernel_diag_freq_domain(ffs);
    for (size_t c = 0; c < diag_freq.size(); ++c) {
        const double tf = diag_freq[c].sum();
        const double tt = kernel.gamma[c].trace();
        CHECK(tt == doctest::Approx(tf).epsilon(1e-4));
    }
}

TEST_CASE("zero kernel projects to the identity channel") {
    FilterKernel kernel;
    kernel.n_qubits = 1;
    kernel.gamma.push_back(Eigen::MatrixXd::Zero(4, 4));
    const auto ch = noise::project_pauli_channel(kernel);
    CHECK(ch.theta(0) == 1.0);
    CHECK(ch.theta.tail(3).norm() == 0.0);
}

TEST_CASE("static dephasing projects onto a pure-Z channel") {
    const double g = 1e-3;
    FilterKernel kernel;
    kernel.n_qubits = 1;
    Eigen::MatrixXd gm = Eigen::MatrixXd::Zero(4, 4);
    gm(3, 3) = g;  // Gamma_zz
    kernel.gamma.push_back(gm);
    const auto ch = noise::project_pauli_channel(kernel);
    CHECK(ch.gamma == doctest::Approx(g / 2.0).epsilon(1e-12));
    // post-clipping: all the error weight sits on Z and equals gamma
    CHECK(ch.theta(3) == doctest::Approx(ch.gamma).epsilon(1e-9));
    CHECK(ch.theta(1) == 0.0);
    CHECK(ch.theta(2) == 0.0);
    CHECK(ch.theta.sum() == doctest::Approx(1.0).epsilon(1e-15));
    // stationary solution matches the independent constrained least squares
    const auto oracle = constrained_ls_oracle(kernel);
    CHECK((ch.theta_stationary - oracle).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("projection agrees with the constrained least-squares oracle") {
    for (int nq = 1; nq <= 2; ++nq) {
        for (int trial = 0; trial < 6; ++trial) {
            const auto kernel = random_psd_kernel(nq, 1000 * nq + trial, 2e-3);
            const auto ch = noise::project_pauli_channel(kernel);
            const auto oracle = constrained_ls_oracle(kernel);
            CHECK((ch.theta_stationary - oracle).cwiseAbs().maxCoeff() < 1e-6);
            // exact normalization and fidelity matching
            CHECK(ch.theta.sum() == doctest::Approx(1.0).epsilon(1e-15));
            CHECK(ch.theta.tail(pauli::n_paulis(nq) - 1).sum() ==
                  doctest::Approx(ch.gamma).epsilon(1e-9));
        }
    }
}

TEST_CASE("biased split recovers depolarizing at eta = 1/2") {
    const auto p = noise::biased_split(0.3, 0.5);
    CHECK(p.px == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(p.py == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(p.pz == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("shuttle error composition") {
    params::HardwareParams hp;
    CHECK(noise::shuttle_error(10, 0, hp) ==
          doctest::Approx(9.99955001195207416e-05).epsilon(1e-12));
    // one corner multiplies the per-dot error by the corner factor
    const double with_corner = noise::shuttle_error(10, 1, hp);
    const double expected = 1.0 - std::pow(1.0 - 1e-5, 10) * (1.0 - 4e-5);
    CHECK(with_corner == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("op budget in gate mode") {
    noise::OpErrorModel model(params::preset("default"), noise::OpMode::gate);
    const auto idle0 = model.op_channel(noise::OpKind::idle, 0.0);
    CHECK(idle0.weight() == 0.0);

    const auto g2 = model.op_channel(noise::OpKind::gate2);
    CHECK(g2.pz == doctest::Approx(1.12317282431784182e-03).epsilon(1e-12));

    const auto sh = model.op_channel(noise::OpKind::shuttle, 0.0, 10, 0);
    CHECK(sh.weight() == doctest::Approx(9.99955001195207416e-05).epsilon(1e-12));

    const auto ro = model.op_channel(noise::OpKind::readout);
    CHECK(ro.weight() > noise::markov_pauli_probs(1e-6, model.scenario().params).weight());
}

TEST_CASE("spectrum calibration closes the loop at t = T2*") {
    noise::OpErrorModel model(params::preset("default"), noise::OpMode::gate);
    const double t2 = model.scenario().params.t2_star;
    // by construction: static 1/f dephasing at T2* equals the Markov value
    const double markov_pz = -std::expm1(-1.0) / 2.0;
    CHECK(model.static_dephasing_pz(t2) == doctest::Approx(markov_pz).epsilon(1e-3));
    // and is quadratically suppressed at short times
    const double t_short = t2 / 50.0;
    const double markov_short = -std::expm1(-t_short / t2) / 2.0;
    CHECK(model.static_dephasing_pz(t_short) < 0.3 * markov_short);
}
