#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

namespace ftqcr::pulse {

using Matrix = Eigen::MatrixXcd;

// Driven Heisenberg device in the rotating frame of the Zeeman term.
// Conventions (used consistently across the project and its oracles):
//   * all frequencies are ordinary frequencies in Hz; the Hamiltonian uses
//     angular frequencies 2*pi*f,
//   * drives are specified per qubit as detunings from resonance
//     (drive_detuning[i] = omega_i/2pi - B_i, default 0), so the model only
//     ever sees magnetic-field differences,
//   * I/Q are rotating-frame envelope amplitudes and each tone addresses its
//     own qubit: a resonant I-drive of amplitude a is a Rabi drive at
//     frequency a, rotating about X at angular rate 2*pi*a (pi-pulse
//     time 1/(2a)).
struct DeviceModel {
    int n_qubits = 1;
    std::vector<std::pair<int, int>> edges;  // exchange-coupled pairs
    std::vector<double> b_field;             // B_i [Hz]; only differences matter
    std::vector<double> drive_detuning;      // [Hz], default resonant (0)
    double j_max = 10e6;                     // Hz
    double i_max = 4e6;                      // Hz
    double q_max = 4e6;                      // Hz

    static DeviceModel chain(int n_qubits, double delta_b = 10e6);
    static DeviceModel grid(int rows, int cols, double delta_b = 10e6);
    // n-1 data qubits all coupled to an ancilla on the last index, the
    // geometry of a syndrome-check compartment
    static DeviceModel star(int n_qubits, double delta_b = 10e6);
    // Restriction to a subset of qubits (induced edges, original fields).
    DeviceModel restrict_to(const std::vector<int>& qubits) const;

    int dim() const { return 1 << n_qubits; }
    int n_edges() const { return static_cast<int>(edges.size()); }
};

// Piecewise-constant controls on a uniform segment grid.
struct PulseSchedule {
    double duration = 0.0;  // [s]
    int n_segments = 0;
    Eigen::MatrixXd i_amp;  // n_segments x n_qubits [Hz]
    Eigen::MatrixXd q_amp;  // n_segments x n_qubits [Hz]
    Eigen::MatrixXd j_amp;  // n_segments x n_edges  [Hz]
    std::vector<double> drive_detuning;

    double segment_dt() const { return n_segments ? duration / n_segments : 0.0; }
    static PulseSchedule zero(const DeviceModel& dev, double duration, int n_segments);

    nlohmann::json to_json() const;
    static PulseSchedule from_json(const nlohmann::json& j);
};

struct PropagationResult {
    Matrix unitary;
    std::vector<double> checkpoint_times;
    std::vector<Matrix> checkpoints;  // U_c(t) at every substep boundary
    double infidelity_vs_target = -1.0;
};

// 1 - |Tr(target^dag U)|^2 / D^2, insensitive to global phase.
double operator_infidelity(const Matrix& u, const Matrix& target);

// Evolves the piecewise-constant schedule with a midpoint rule inside each
// segment (trotter_substeps exponential steps per segment). Checkpoints can
// be densified beyond the integration grid via min_checkpoints.
PropagationResult propagate(const DeviceModel& dev, const PulseSchedule& pulse,
                            int trotter_substeps, int min_checkpoints = 0);

struct GrapeOptions {
    int max_iters = 400;
    int trotter_substeps = 2;
    double grad_tol = 1e-8;          // projected-gradient norm
    double target_infidelity = 0.0;  // early stop once reached (0 = run to tol)
    double init_scale = 0.25;        // random init amplitude, fraction of bounds
    // warm start: stretch this schedule onto the requested duration/grid
    // instead of drawing a random one
    std::optional<PulseSchedule> init_schedule;
};

struct GrapeResult {
    PulseSchedule pulse;
    double infidelity = 1.0;
    double grad_norm = 0.0;
    bool stagnated = false;
    std::vector<double> objective_trace;  // accepted objective values, non-increasing
};

GrapeResult grape_optimize(const DeviceModel& dev, const Matrix& target, double duration,
                           int n_segments, std::uint64_t seed, const GrapeOptions& opts = {});

// Analytic objective gradient at x (flattened schedule), for verification
// against finite differences.
Eigen::VectorXd grape_gradient(const DeviceModel& dev, const PulseSchedule& pulse,
                               const Matrix& target, int trotter_substeps);
double grape_objective(const DeviceModel& dev, const PulseSchedule& pulse, const Matrix& target,
                       int trotter_substeps);

struct MetOptions {
    double cutoff = 1e-3;   // operator-infidelity cutoff
    int seeds = 3;
    int n_segments = 32;
    double t_max = 20e-6;   // search budget
    double grid_step = 0.02;  // relative bisection resolution
    GrapeOptions grape;
};

struct MetResult {
    double t_met = 0.0;
    PulseSchedule pulse;
    double infidelity = 0.0;
};

// Smallest duration on the bracketing/bisection grid at which grape_optimize
// reaches the cutoff for at least one seed.
MetResult find_met(const DeviceModel& dev, const Matrix& target, const MetOptions& opts = {});

struct CircuitSegment {
    std::vector<int> qubits;  // indices into the parent device, size <= 4
    Matrix target;
    std::string name;
};

struct CompressedCircuit {
    std::vector<MetResult> segments;
    double total_time = 0.0;
    double infidelity_estimate = 0.0;  // first-order sum of segment infidelities
};

CompressedCircuit compress_circuit(const DeviceModel& parent,
                                   const std::vector<CircuitSegment>& segments,
                                   const MetOptions& opts = {});

// Named targets for the CLI and the syndrome-check segments:
//   x|y|z|h|s|t (1q), cnot|cz|swap (2q, control first),
//   check2 (3q: CNOT(q0->q2) CNOT(q1->q2)), check3 (4q: three CNOTs onto q3).
Matrix named_target(const std::string& name);
int named_target_qubits(const std::string& name);

}  // namespace ftqcr::pulse
