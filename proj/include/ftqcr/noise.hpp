#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ftqcr/params.hpp"
#include "ftqcr/pauli.hpp"
#include "ftqcr/pulse.hpp"

namespace ftqcr::noise {

// ---------------------------------------------------------------- Markovian

struct MarkovProbs {
    double px = 0, py = 0, pz = 0;
    double weight() const { return px + py + pz; }
};

// T1/T2* mapping: p_X = p_Y = (1-exp(-t/T1))/4,
// p_Z = (1-exp(-t/T2*))/2 - (1-exp(-t/T1))/4, all clipped to [0,1].
MarkovProbs markov_pauli_probs(double t, const params::HardwareParams& hp);

// ------------------------------------------------------------ 1/f spectrum

// S(w) = A / ( max(|w|, w_low) * (1 + (w/w_high)^2) ), angular frequencies.
struct SpectralDensity {
    double amplitude = 1.0;
    double omega_low = 2.0 * 3.14159265358979323846;        // ~1 Hz observation cutoff
    double omega_high = 2.0 * 3.14159265358979323846 * 1e9;  // charge-noise rolloff

    double eval(double omega) const;
};

// C(tau) = (1/pi) * int_0^inf S(w) cos(w tau) dw.
double autocorrelation(const SpectralDensity& s, double tau);

struct NoiseChannelSpec {
    pauli::PauliString op;  // Hermitian Pauli string B_alpha
    SpectralDensity spectrum;
};

// ------------------------------------------------------- filter functions

// Interaction-picture noise trajectories of one propagated pulse:
// Btilde_{alpha,k}(t) = Tr[U_c(t)^dag B_alpha U_c(t) sigma_k] / D, with
// sigma_k the plain Pauli strings. This normalization reproduces the
// resonant-drive closed form F(w) = tau^2/2 [sinc^2((w+W)tau/2) + sinc^2((w-W)tau/2)].
class FilterFunctionSet {
  public:
    FilterFunctionSet(const pulse::PropagationResult& prop,
                      std::vector<NoiseChannelSpec> channels);

    int n_channels() const { return static_cast<int>(channels_.size()); }
    int n_qubits() const { return n_qubits_; }
    double duration() const { return times_.back(); }
    const std::vector<NoiseChannelSpec>& channels() const { return channels_; }

    // finite-time Fourier transform of one coefficient (Filon quadrature)
    std::complex<double> transform(int channel, int k, double omega) const;
    // F_alpha(w) = sum_k |Btilde_{alpha,k}(w)|^2
    double eval(int channel, double omega) const;

    // trajectory access for the time-domain kernels
    const Eigen::MatrixXd& trajectory(int channel) const {
        return bt_[static_cast<size_t>(channel)];
    }
    const std::vector<double>& times() const { return times_; }

    // characteristic angular rate of the trajectories (tail-splitting aid)
    double bandwidth() const { return bandwidth_; }

    // raises if halving the checkpoint density moves F beyond rel_tol
    void check_resolution(double rel_tol = 1e-3) const;

  private:
    std::vector<NoiseChannelSpec> channels_;
    std::vector<double> times_;
    std::vector<Eigen::MatrixXd> bt_;  // per channel: n_times x D^2, real
    int n_qubits_ = 1;
    double bandwidth_ = 0.0;
};

std::vector<std::vector<double>> filter_functions(const FilterFunctionSet& ffs,
                                                  std::span<const double> omegas);

struct QuadratureOptions {
    double rel_tol = 1e-6;
    int max_refine = 14;
};

// eps = 1/(D+1) sum_alpha int dw/2pi S_alpha(w) F_alpha(w)  (frequency route)
double infidelity_from_spectrum(const FilterFunctionSet& ffs, QuadratureOptions opts = {});

// Second-order kernels Gamma_{alpha;kl}; real symmetric PSD in this basis.
struct FilterKernel {
    int n_qubits = 1;
    std::vector<Eigen::MatrixXd> gamma;  // per channel, D^2 x D^2

    double trace() const;
    int dim() const { return 1 << n_qubits; }
};

// double time integral against C_alpha(t1-t2)
FilterKernel kernel_time_domain(const FilterFunctionSet& ffs, int max_points = 257);
// diagonal entries by the frequency route, for the dual-representation check
std::vector<Eigen::VectorXd> kernel_diag_freq_domain(const FilterFunctionSet& ffs,
                                                     QuadratureOptions opts = {});
// eps = tr(Gamma) / (D+1)
double infidelity_from_kernel(const FilterKernel& kernel);

// ------------------------------------------------- Pauli-channel projection

struct PauliChannel {
    int n_qubits = 1;
    Eigen::VectorXd theta;             // physical weights, sum exactly 1
    Eigen::VectorXd theta_stationary;  // constrained-least-squares stationary point
    double clipped_mass = 0.0;         // negative mass removed by the clipping step
    double gamma = 0.0;                // (1/D) tr(Gamma)

    double error_weight() const { return 1.0 - theta(0); }
    double process_fidelity() const;  // 1 - kappa*gamma with kappa = D/(D+1)
};

// Closed-form fidelity- and trace-constrained least-squares projection of the
// filter-function channel onto a Pauli channel. theta_stationary solves the
// two-constraint problem exactly; theta additionally clips negative weights
// and rescales the non-identity mass back to gamma.
PauliChannel project_pauli_channel(const FilterKernel& kernel);

// identity-channel / direct construction helpers
PauliChannel pauli_channel_from_probs(const MarkovProbs& p);

// Scale A such that an idling qubit's filter-function infidelity at t = T2*
// matches the Markovian dephasing channel's average-gate infidelity there.
double calibrate_spectrum_amplitude(double t2_star, const SpectralDensity& shape);

// ------------------------------------------------------------- op budgets

enum class OpKind { gate1, gate2, readout, init, idle, shuttle };
enum class OpMode { gate, pulse };

OpKind op_kind_from_string(const std::string& s);

// Z-biased split of a scalar error probability: r_Z = eta/(1+eta),
// r_X = r_Y = 1/(2(1+eta)).
MarkovProbs biased_split(double p_total, double eta);

double shuttle_error(int hops, int corners, const params::HardwareParams& hp);

struct NoiseModelOptions {
    double bias_eta = 100.0;            // Z-bias for non-Pauli error sources
    SpectralDensity spectrum_shape;     // amplitude replaced by calibration
    int met_segments = 32;
    double met_cutoff = 1e-3;
    int met_seeds = 2;
    int ff_checkpoints = 257;
};

// Per-physical-operation error channels for one scenario. Gate mode uses the
// tabulated durations and the Markovian mapping; pulse mode takes durations
// from the MET library and replaces the Markovian dephasing term with the
// filter-function (1/f) value.
class OpErrorModel {
  public:
    OpErrorModel(params::Scenario scenario, OpMode mode, NoiseModelOptions opts = {});

    const params::Scenario& scenario() const { return scenario_; }
    OpMode mode() const { return mode_; }
    const NoiseModelOptions& options() const { return opts_; }

    // per-qubit channel for one operation; idle needs a duration,
    // shuttle needs hops/corners
    MarkovProbs op_channel(OpKind kind, double idle_time = 0.0, int hops = 0,
                           int corners = 0) const;
    double op_duration(OpKind kind, double idle_time = 0.0) const;

    // MET results backing pulse mode (chain device, default bounds)
    const pulse::MetResult& met(const std::string& target_name) const;
    double spectrum_amplitude() const { return amplitude_; }

    // dephasing probability of an idling qubit over t under the 1/f model
    double static_dephasing_pz(double t) const;

  private:
    double pulse_dephasing_pz(const std::string& target_name) const;

    params::Scenario scenario_;
    OpMode mode_;
    NoiseModelOptions opts_;
    double amplitude_ = 0.0;
    mutable std::map<std::string, pulse::MetResult> met_cache_;
    mutable std::map<std::string, double> pz_cache_;
};

PauliChannel to_pauli_channel(const MarkovProbs& probs);

}  // namespace ftqcr::noise
