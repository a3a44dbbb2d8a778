#include "ftqcr/noise.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>

#include "ftqcr/errors.hpp"
#include "ftqcr/parallel.hpp"

namespace ftqcr::noise {

namespace {

constexpr double kPi = 3.14159265358979323846;

double clip01(double v) { return std::clamp(v, 0.0, 1.0); }

// ---------------------------------------------------------- generic quadrature

// composite Simpson of f over [a,b] with n intervals (n made even)
double simpson(const std::function<double(double)>& f, double a, double b, int n) {
    if (n < 2) n = 2;
    if (n % 2) ++n;
    const double h = (b - a) / n;
    double acc = f(a) + f(b);
    for (int i = 1; i < n; ++i) acc += f(a + i * h) * ((i % 2) ? 4.0 : 2.0);
    return acc * h / 3.0;
}

// refine until the relative change against `scale` drops below tol
double simpson_adaptive(const std::function<double(double)>& f, double a, double b, int n0,
                        double tol, double scale, int max_refine) {
    int n = std::max(4, n0);
    double prev = simpson(f, a, b, n);
    for (int r = 0; r < max_refine; ++r) {
        n *= 2;
        const double cur = simpson(f, a, b, n);
        const double ref = std::max(scale, std::abs(cur));
        if (std::abs(cur - prev) <= tol * ref) return cur;
        prev = cur;
    }
    return prev;
}

}  // namespace

// ------------------------------------------------------------------ Markovian

MarkovProbs markov_pauli_probs(double t, const params::HardwareParams& hp) {
    MarkovProbs p;
    if (t <= 0.0) return p;
    const double relax = -std::expm1(-t / hp.t1);      // 1 - e^{-t/T1}
    const double dephase = -std::expm1(-t / hp.t2_star);
    p.px = clip01(relax / 4.0);
    p.py = p.px;
    p.pz = clip01(dephase / 2.0 - relax / 4.0);
    return p;
}

// --------------------------------------------------------------- 1/f spectrum

double SpectralDensity::eval(double omega) const {
    const double w = std::abs(omega);
    const double r = omega / omega_high;
    return amplitude / (std::max(w, omega_low) * (1.0 + r * r));
}

double autocorrelation(const SpectralDensity& s, double tau) {
    const double at = std::abs(tau);
    auto integrand = [&](double w) { return s.eval(w) * std::cos(w * at); };

    if (at == 0.0 || at * 10.0 * s.omega_high < 1.0) {
        // non-oscillatory: geometric ladder past the rolloff plus the
        // analytic 1/w^3 remainder
        const double w_top = 30.0 * s.omega_high;
        double total = simpson_adaptive(integrand, 0.0, s.omega_low, 8, 1e-9, 0.0, 12);
        double lo = s.omega_low;
        while (lo < w_top) {
            const double hi = std::min(lo * 4.0, w_top);
            total += simpson_adaptive(integrand, lo, hi, 16, 1e-9, std::abs(total), 12);
            lo = hi;
        }
        total += s.amplitude * s.omega_high * s.omega_high / (2.0 * w_top * w_top);
        return total / kPi;
    }

    // phase-chunked integration up to w_top, then an integration-by-parts
    // tail; w_top keeps the total accumulated phase bounded
    const double w_top = std::max(3.0 * s.omega_low, 50.0 / at);
    const double max_phase_step = 0.7;
    double total = 0.0;
    double lo = 0.0;
    double seg_hi = std::min({s.omega_low, 0.1 / at, w_top});
    while (lo < w_top) {
        const double hi = std::min(seg_hi, w_top);
        const double phase = (hi - lo) * at;
        const int chunks = std::max(1, static_cast<int>(phase / max_phase_step));
        for (int c = 0; c < chunks; ++c) {
            const double a = lo + (hi - lo) * c / chunks;
            const double b = lo + (hi - lo) * (c + 1) / chunks;
            total += simpson(integrand, a, b, 4);
        }
        lo = hi;
        seg_hi = hi * 2.0;
    }
    // tail: int_W^inf S cos(wt) dw ~ -S(W) sin(Wt)/t - S'(W) cos(Wt)/t^2
    const double w = w_top;
    const double dw = w * 1e-4;
    const double sp = (s.eval(w + dw) - s.eval(w - dw)) / (2.0 * dw);
    total += -s.eval(w) * std::sin(w * at) / at - sp * std::cos(w * at) / (at * at);
    return total / kPi;
}

// ----------------------------------------------------------- FilterFunctionSet

FilterFunctionSet::FilterFunctionSet(const pulse::PropagationResult& prop,
                                     std::vector<NoiseChannelSpec> channels)
    : channels_(std::move(channels)) {
    if (prop.checkpoints.size() < 3)
        throw ConfigError("filter functions need at least 3 propagation checkpoints");
    times_ = prop.checkpoint_times;
    if (times_.size() % 2 == 0)
        throw ConfigError("filter functions need an even number of checkpoint intervals");
    const size_t n_t = times_.size();
    const double h0 = times_[1] - times_[0];
    for (size_t i = 1; i + 1 < n_t; ++i) {
        if (std::abs((times_[i + 1] - times_[i]) - h0) > 1e-9 * h0)
            throw ConfigError("filter functions require a uniform checkpoint grid");
    }

    const int d = static_cast<int>(prop.unitary.rows());
    n_qubits_ = 0;
    while ((1 << n_qubits_) < d) ++n_qubits_;
    const int np = pauli::n_paulis(n_qubits_);

    for (const auto& ch : channels_) {
        const pauli::Matrix b = pauli::dense(ch.op.code, n_qubits_);
        Eigen::MatrixXd traj(n_t, np);
        par::parallel_for(n_t, [&](size_t i) {
            const pauli::Matrix& u = prop.checkpoints[i];
            const pauli::Matrix bt = u.adjoint() * b * u;
            const Eigen::VectorXcd coeff = pauli::decompose(bt, n_qubits_);
            for (int k = 0; k < np; ++k) traj(static_cast<Eigen::Index>(i), k) = coeff(k).real();
        });
        bt_.push_back(std::move(traj));
    }

    // crude angular bandwidth of the trajectories
    double max_rate = 0.0, max_amp = 1e-300;
    for (const auto& traj : bt_) {
        for (int k = 0; k < traj.cols(); ++k) {
            for (Eigen::Index i = 0; i + 1 < traj.rows(); ++i) {
                max_rate = std::max(max_rate, std::abs(traj(i + 1, k) - traj(i, k)) / h0);
                max_amp = std::max(max_amp, std::abs(traj(i, k)));
            }
        }
    }
    bandwidth_ = max_rate / max_amp;
}

std::complex<double> FilterFunctionSet::transform(int channel, int k, double omega) const {
    const Eigen::MatrixXd& traj = bt_[static_cast<size_t>(channel)];
    const size_t n_t = times_.size();
    const double h = times_[1] - times_[0];
    const double theta = omega * h;
    std::complex<double> total = 0.0;

    // per-panel moments of 1, u, u^2 against e^{i omega u}, u in [-h, h]
    std::complex<double> i0, i1, i2;
    if (std::abs(theta) < 1e-3) {
        const double t2 = theta * theta, t4 = t2 * t2;
        i0 = 2.0 * h * (1.0 - t2 / 6.0 + t4 / 120.0);
        i1 = std::complex<double>(0.0, 2.0 * h * h * (theta / 3.0 - theta * t2 / 30.0));
        i2 = 2.0 * h * h * h * (1.0 / 3.0 - t2 / 10.0 + t4 / 168.0);
    } else {
        const double sn = std::sin(theta), cs = std::cos(theta);
        i0 = 2.0 * sn / omega;
        i1 = std::complex<double>(0.0, 2.0 * (sn - theta * cs) / (omega * omega));
        i2 = 2.0 * (h * h * sn / omega + 2.0 * h * cs / (omega * omega) -
                    2.0 * sn / (omega * omega * omega));
    }

    for (size_t j = 0; j + 2 < n_t; j += 2) {
        const double f0 = traj(static_cast<Eigen::Index>(j), k);
        const double f1 = traj(static_cast<Eigen::Index>(j + 1), k);
        const double f2 = traj(static_cast<Eigen::Index>(j + 2), k);
        const double a = f1;
        const double b = (f2 - f0) / (2.0 * h);
        const double c = (f0 - 2.0 * f1 + f2) / (2.0 * h * h);
        const double tc = times_[j + 1];
        const std::complex<double> phase = std::exp(std::complex<double>(0.0, omega * tc));
        total += phase * (a * i0 + b * i1 + c * i2);
    }
    return total;
}

double FilterFunctionSet::eval(int channel, double omega) const {
    const Eigen::MatrixXd& traj = bt_[static_cast<size_t>(channel)];
    double f = 0.0;
    for (int k = 0; k < traj.cols(); ++k) {
        if (traj.col(k).cwiseAbs().maxCoeff() < 1e-14) continue;
        f += std::norm(transform(channel, k, omega));
    }
    return f;
}

void FilterFunctionSet::check_resolution(double rel_tol) const {
    // compare against the half-density grid at a few probe frequencies
    FilterFunctionSet coarse = *this;
    std::vector<double> t2;
    for (size_t i = 0; i < times_.size(); i += 2) t2.push_back(times_[i]);
    if (t2.size() % 2 == 0) t2.pop_back();
    coarse.times_ = t2;
    for (size_t a = 0; a < bt_.size(); ++a) {
        Eigen::MatrixXd traj(static_cast<Eigen::Index>(t2.size()), bt_[a].cols());
        for (size_t i = 0; i < t2.size(); ++i) traj.row(static_cast<Eigen::Index>(i)) = bt_[a].row(static_cast<Eigen::Index>(2 * i));
        coarse.bt_[a] = std::move(traj);
    }
    const double tau = duration();
    for (int c = 0; c < n_channels(); ++c) {
        for (double x : {0.5, 2.0, 7.0, 19.0}) {
            const double w = x / tau;
            const double fine_v = eval(c, w);
            const double coarse_v = coarse.eval(c, w);
            const double ref = std::max(fine_v, tau * tau * 1e-6);
            if (std::abs(fine_v - coarse_v) > rel_tol * ref)
                throw ModelError("filter-function checkpoint grid too coarse");
        }
    }
}

std::vector<std::vector<double>> filter_functions(const FilterFunctionSet& ffs,
                                                  std::span<const double> omegas) {
    std::vector<std::vector<double>> out(static_cast<size_t>(ffs.n_channels()));
    for (int c = 0; c < ffs.n_channels(); ++c) {
        out[static_cast<size_t>(c)].resize(omegas.size());
        par::parallel_for(omegas.size(), [&, c](size_t i) {
            out[static_cast<size_t>(c)][i] = ffs.eval(c, omegas[i]);
        });
    }
    return out;
}

namespace {

// (1/pi) int_0^inf S(w) f(w) dw for a filter-like f with 1/w^2 endpoint tail.
// p_end = sum_k (B_k(0)^2 + B_k(tau)^2), c_end = sum_k B_k(0) B_k(tau).
double spectral_overlap(const SpectralDensity& s, double tau, double bandwidth,
                        const std::function<double(double)>& f, double p_end, double c_end,
                        const QuadratureOptions& opts) {
    const double w_split = std::max({1000.0 / tau, 40.0 * bandwidth, 4.0 * s.omega_low});
    auto integrand = [&](double w) { return s.eval(w) * f(w); };

    // main region, geometric segments, oscillation-aware initial density
    double total = 0.0;
    const double w0 = std::min(s.omega_low, 0.1 / tau) * 0.1;
    total += simpson_adaptive(integrand, 0.0, w0, 8, opts.rel_tol, 0.0, opts.max_refine);
    double lo = w0;
    double scale = std::abs(total) + s.eval(1.0 / tau) * f(1.0 / tau) / tau;
    while (lo < w_split) {
        const double hi = std::min(lo * 2.0, w_split);
        const int n0 = std::max(8, static_cast<int>((hi - lo) * tau * 1.5));
        total += simpson_adaptive(integrand, lo, hi, n0, opts.rel_tol, scale, opts.max_refine);
        scale = std::max(scale, std::abs(total));
        lo = hi;
    }

    // endpoint-dominated tail
    if (p_end > 0.0) {
        auto tail_integrand = [&](double w) { return s.eval(w) * p_end / (w * w); };
        double tl = w_split, tail = 0.0;
        for (int dec = 0; dec < 200; ++dec) {
            const double th = tl * 2.0;
            const double inc = simpson_adaptive(tail_integrand, tl, th, 8, 1e-8,
                                                std::abs(total) + tail, 8);
            tail += inc;
            tl = th;
            if (std::abs(inc) < 1e-10 * (std::abs(total) + std::abs(tail))) break;
        }
        total += tail;
    }
    // boundary terms of the oscillatory cross term -2 c_end cos(w tau)/w^2
    if (c_end != 0.0) {
        auto g = [&](double w) { return s.eval(w) / (w * w); };
        const double w = w_split, dw = w * 1e-4;
        const double gp = (g(w + dw) - g(w - dw)) / (2.0 * dw);
        total += 2.0 * c_end *
                 (g(w) * std::sin(w * tau) / tau + gp * std::cos(w * tau) / (tau * tau));
    }
    return total / kPi;
}

}  // namespace

double infidelity_from_spectrum(const FilterFunctionSet& ffs, QuadratureOptions opts) {
    const double tau = ffs.duration();
    const double dplus1 = static_cast<double>(1 << ffs.n_qubits()) + 1.0;
    double eps = 0.0;
    for (int c = 0; c < ffs.n_channels(); ++c) {
        const Eigen::MatrixXd& traj = ffs.trajectory(c);
        double p_end = 0.0, c_end = 0.0;
        for (int k = 0; k < traj.cols(); ++k) {
            const double b0 = traj(0, k);
            const double bt = traj(traj.rows() - 1, k);
            p_end += b0 * b0 + bt * bt;
            c_end += b0 * bt;
        }
        auto f = [&](double w) { return ffs.eval(c, w); };
        eps += spectral_overlap(ffs.channels()[static_cast<size_t>(c)].spectrum, tau,
                                ffs.bandwidth(), f, p_end, c_end, opts);
    }
    return eps / dplus1;
}

// ------------------------------------------------------------------- kernels

double FilterKernel::trace() const {
    double t = 0.0;
    for (const auto& g : gamma) t += g.trace();
    return t;
}

FilterKernel kernel_time_domain(const FilterFunctionSet& ffs, int max_points) {
    FilterKernel out;
    out.n_qubits = ffs.n_qubits();
    const auto& times = ffs.times();
    const size_t n_t = times.size();

    // subsample to <= max_points keeping an even interval count
    size_t stride = 1;
    while ((n_t - 1) / stride + 1 > static_cast<size_t>(max_points)) stride *= 2;
    std::vector<size_t> idx;
    for (size_t i = 0; i < n_t; i += stride) idx.push_back(i);
    if (idx.size() % 2 == 0) idx.pop_back();
    const size_t n = idx.size();
    const double h = times[idx[1]] - times[idx[0]];

    Eigen::VectorXd w(static_cast<Eigen::Index>(n));
    for (size_t i = 0; i < n; ++i)
        w(static_cast<Eigen::Index>(i)) = (i == 0 || i + 1 == n) ? h / 3.0
                                          : (i % 2 ? 4.0 * h / 3.0 : 2.0 * h / 3.0);

    for (int c = 0; c < ffs.n_channels(); ++c) {
        const auto& spec = ffs.channels()[static_cast<size_t>(c)].spectrum;
        // C(|i-j| h) lookup
        std::vector<double> cvals(n);
        par::parallel_for(n, [&](size_t m) {
            cvals[m] = autocorrelation(spec, static_cast<double>(m) * h);
        });
        Eigen::MatrixXd ct(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (size_t i = 0; i < n; ++i)
            for (size_t j = 0; j < n; ++j)
                ct(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    cvals[static_cast<size_t>(std::abs(static_cast<long>(i) - static_cast<long>(j)))];

        const Eigen::MatrixXd& traj = ffs.trajectory(c);
        Eigen::MatrixXd sub(static_cast<Eigen::Index>(n), traj.cols());
        for (size_t i = 0; i < n; ++i) sub.row(static_cast<Eigen::Index>(i)) = traj.row(static_cast<Eigen::Index>(idx[i]));
        const Eigen::MatrixXd bw = w.asDiagonal() * sub;
        out.gamma.push_back(bw.transpose() * ct * bw);
    }
    return out;
}

std::vector<Eigen::VectorXd> kernel_diag_freq_domain(const FilterFunctionSet& ffs,
                                                     QuadratureOptions opts) {
    std::vector<Eigen::VectorXd> out;
    const double tau = ffs.duration();
    for (int c = 0; c < ffs.n_channels(); ++c) {
        const Eigen::MatrixXd& traj = ffs.trajectory(c);
        Eigen::VectorXd diag = Eigen::VectorXd::Zero(traj.cols());
        for (int k = 0; k < traj.cols(); ++k) {
            if (traj.col(k).cwiseAbs().maxCoeff() < 1e-14) continue;
            const double b0 = traj(0, k);
            const double bt = traj(traj.rows() - 1, k);
            auto f = [&](double w) { return std::norm(ffs.transform(c, k, w)); };
            diag(k) = spectral_overlap(ffs.channels()[static_cast<size_t>(c)].spectrum, tau,
                                       ffs.bandwidth(), f, b0 * b0 + bt * bt, b0 * bt, opts);
        }
        out.push_back(std::move(diag));
    }
    return out;
}

double infidelity_from_kernel(const FilterKernel& kernel) {
    return kernel.trace() / (kernel.dim() + 1.0);
}

// --------------------------------------------------------------- projection

double PauliChannel::process_fidelity() const {
    const double d = static_cast<double>(1 << n_qubits);
    return 1.0 - d / (d + 1.0) * gamma;
}

PauliChannel project_pauli_channel(const FilterKernel& kernel) {
    const int nq = kernel.n_qubits;
    const int np = pauli::n_paulis(nq);
    const double d = static_cast<double>(1 << nq);

    Eigen::VectorXd diag = Eigen::VectorXd::Zero(np);
    for (const auto& g : kernel.gamma) diag += g.diagonal();

    const double gamma = diag.sum() / d;

    // Choi diagonal J_ii = 1 - 2 * sum over kernel diagonals anticommuting with P_i
    Eigen::VectorXd jdiag(np);
    for (int i = 0; i < np; ++i) {
        pauli::PauliString pi{static_cast<std::uint32_t>(i), nq};
        double s = 0.0;
        for (int k = 0; k < np; ++k) {
            if (diag(k) == 0.0) continue;
            pauli::PauliString pk{static_cast<std::uint32_t>(k), nq};
            if (!pauli::commutes(pi, pk)) s += diag(k);
        }
        jdiag(i) = 1.0 - 2.0 * s;
    }

    // stationary solution of the constrained least squares:
    //   theta_0 = 1 - gamma, theta_i = J_ii - mu
    const double mu = (jdiag.tail(np - 1).sum() - gamma) / (np - 1);
    PauliChannel ch;
    ch.n_qubits = nq;
    ch.gamma = gamma;
    ch.theta_stationary = Eigen::VectorXd(np);
    ch.theta_stationary(0) = 1.0 - gamma;
    for (int i = 1; i < np; ++i) ch.theta_stationary(i) = jdiag(i) - mu;

    // clip negatives, rescale non-identity mass back to gamma
    ch.theta = ch.theta_stationary;
    double clipped = 0.0, positive = 0.0;
    for (int i = 1; i < np; ++i) {
        if (ch.theta(i) < 0.0) {
            clipped += -ch.theta(i);
            ch.theta(i) = 0.0;
        } else {
            positive += ch.theta(i);
        }
    }
    ch.clipped_mass = clipped;
    if (positive > 0.0 && gamma > 0.0) {
        const double scale = gamma / positive;
        for (int i = 1; i < np; ++i) ch.theta(i) *= scale;
    } else if (gamma > 0.0) {
        for (int i = 1; i < np; ++i) ch.theta(i) = gamma / (np - 1);
    }
    double sum_rest = 0.0;
    for (int i = 1; i < np; ++i) sum_rest += ch.theta(i);
    ch.theta(0) = 1.0 - sum_rest;
    return ch;
}

PauliChannel pauli_channel_from_probs(const MarkovProbs& p) {
    PauliChannel ch;
    ch.n_qubits = 1;
    ch.theta = Eigen::VectorXd(4);
    ch.theta(1) = p.px;
    ch.theta(2) = p.py;
    ch.theta(3) = p.pz;
    ch.theta(0) = 1.0 - p.weight();
    ch.theta_stationary = ch.theta;
    ch.gamma = p.weight();
    return ch;
}

PauliChannel to_pauli_channel(const MarkovProbs& probs) { return pauli_channel_from_probs(probs); }

// -------------------------------------------------------------- calibration

namespace {

pulse::PropagationResult static_evolution(int n_qubits, double tau, int n_checkpoints) {
    pulse::PropagationResult prop;
    const int d = 1 << n_qubits;
    prop.unitary = pauli::Matrix::Identity(d, d);
    for (int i = 0; i < n_checkpoints; ++i) {
        prop.checkpoint_times.push_back(tau * i / (n_checkpoints - 1));
        prop.checkpoints.push_back(prop.unitary);
    }
    return prop;
}

double static_dephasing_infidelity(double tau, const SpectralDensity& spec) {
    FilterFunctionSet ffs(static_evolution(1, tau, 65),
                          {{pauli::PauliString::from_label("Z"), spec}});
    return infidelity_from_spectrum(ffs);
}

}  // namespace

double calibrate_spectrum_amplitude(double t2_star, const SpectralDensity& shape) {
    SpectralDensity unit = shape;
    unit.amplitude = 1.0;
    const double eps_unit = static_dephasing_infidelity(t2_star, unit);
    // match the Markovian dephasing channel's average-gate infidelity at t = T2*
    const double kappa = 2.0 / 3.0;
    const double target = kappa * (-std::expm1(-1.0)) / 2.0;
    return target / eps_unit;
}

// --------------------------------------------------------------- op budgets

OpKind op_kind_from_string(const std::string& s) {
    if (s == "gate1") return OpKind::gate1;
    if (s == "gate2") return OpKind::gate2;
    if (s == "readout") return OpKind::readout;
    if (s == "init") return OpKind::init;
    if (s == "idle") return OpKind::idle;
    if (s == "shuttle") return OpKind::shuttle;
    throw ConfigError("unknown op kind '" + s + "'");
}

MarkovProbs biased_split(double p_total, double eta) {
    MarkovProbs p;
    p.pz = p_total * eta / (1.0 + eta);
    p.px = p.py = p_total / (2.0 * (1.0 + eta));
    return p;
}

double shuttle_error(int hops, int corners, const params::HardwareParams& hp) {
    const double eps = hp.eps_shuttle_per_dot;
    const double corner_eps = std::min(1.0, hp.corner_factor * eps);
    return 1.0 - std::pow(1.0 - eps, hops) * std::pow(1.0 - corner_eps, corners);
}

OpErrorModel::OpErrorModel(params::Scenario scenario, OpMode mode, NoiseModelOptions opts)
    : scenario_(std::move(scenario)), mode_(mode), opts_(opts) {
    scenario_.params.validate();
    amplitude_ = calibrate_spectrum_amplitude(scenario_.params.t2_star, opts_.spectrum_shape);
}

const pulse::MetResult& OpErrorModel::met(const std::string& target_name) const {
    auto it = met_cache_.find(target_name);
    if (it != met_cache_.end()) return it->second;
    const int nq = pulse::named_target_qubits(target_name);
    const pulse::DeviceModel dev = (target_name.rfind("check", 0) == 0)
                                       ? pulse::DeviceModel::star(nq)
                                       : pulse::DeviceModel::chain(nq);
    pulse::MetOptions mo;
    mo.cutoff = opts_.met_cutoff;
    mo.seeds = opts_.met_seeds;
    mo.n_segments = opts_.met_segments;
    auto res = pulse::find_met(dev, pulse::named_target(target_name), mo);
    return met_cache_.emplace(target_name, std::move(res)).first->second;
}

double OpErrorModel::static_dephasing_pz(double t) const {
    if (t <= 0.0) return 0.0;
    const std::string key = "static:" + std::to_string(t);
    auto it = pz_cache_.find(key);
    if (it != pz_cache_.end()) return it->second;
    SpectralDensity spec = opts_.spectrum_shape;
    spec.amplitude = amplitude_;
    // per-qubit p_Z consistent with eps = kappa * p_Z for single-qubit channels
    const double pz = clip01(1.5 * static_dephasing_infidelity(t, spec));
    pz_cache_[key] = pz;
    return pz;
}

double OpErrorModel::pulse_dephasing_pz(const std::string& target_name) const {
    const std::string key = "pulse:" + target_name;
    auto it = pz_cache_.find(key);
    if (it != pz_cache_.end()) return it->second;

    const auto& m = met(target_name);
    const int nq = pulse::named_target_qubits(target_name);
    const pulse::DeviceModel dev = (target_name.rfind("check", 0) == 0)
                                       ? pulse::DeviceModel::star(nq)
                                       : pulse::DeviceModel::chain(nq);
    const auto prop = pulse::propagate(dev, m.pulse, 2, opts_.ff_checkpoints);
    SpectralDensity spec = opts_.spectrum_shape;
    spec.amplitude = amplitude_;
    std::vector<NoiseChannelSpec> channels;
    for (int q = 0; q < nq; ++q)
        channels.push_back({pauli::PauliString::single(nq, q, 3), spec});
    const double eps = infidelity_from_spectrum(FilterFunctionSet(prop, channels));
    const double d = static_cast<double>(1 << nq);
    const double pz = clip01(eps * (d + 1.0) / d / nq);
    pz_cache_[key] = pz;
    return pz;
}

double OpErrorModel::op_duration(OpKind kind, double idle_time) const {
    const auto& hp = scenario_.params;
    switch (kind) {
        case OpKind::gate1:
            return mode_ == OpMode::gate ? hp.t_gate1 : met("x").t_met;
        case OpKind::gate2:
            return mode_ == OpMode::gate ? hp.t_gate2 : met("cnot").t_met;
        case OpKind::readout: return hp.t_readout;
        case OpKind::init: return hp.t_init;
        case OpKind::idle: return idle_time;
        case OpKind::shuttle: return hp.t_step();
    }
    return 0.0;
}

MarkovProbs OpErrorModel::op_channel(OpKind kind, double idle_time, int hops,
                                     int corners) const {
    const auto& hp = scenario_.params;
    if (kind == OpKind::shuttle) {
        return biased_split(shuttle_error(hops, corners, hp), opts_.bias_eta);
    }

    const double t = op_duration(kind, idle_time);
    MarkovProbs p = markov_pauli_probs(t, hp);
    if (mode_ == OpMode::pulse) {
        // non-Markovian dephasing replaces the Markovian term
        if (kind == OpKind::gate1) p.pz = pulse_dephasing_pz("x");
        else if (kind == OpKind::gate2) p.pz = pulse_dephasing_pz("cnot");
        else p.pz = static_dephasing_pz(t);
    }
    if (kind == OpKind::readout) {
        const MarkovProbs extra = biased_split(hp.eps_readout, opts_.bias_eta);
        p.px += extra.px;
        p.py += extra.py;
        p.pz += extra.pz;
    }
    p.px = clip01(p.px);
    p.py = clip01(p.py);
    p.pz = clip01(p.pz);
    return p;
}

}  // namespace ftqcr::noise
