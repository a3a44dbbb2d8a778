#include "ftqcr/pulse.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "ftqcr/errors.hpp"
#include "ftqcr/parallel.hpp"
#include "ftqcr/pauli.hpp"

namespace ftqcr::pulse {

using nlohmann::json;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Precomputed operator basis for one device.
struct Operators {
    std::vector<Matrix> x, y;          // per qubit
    std::vector<Matrix> zz, ff1, ff2;  // per edge
    std::vector<double> delta;         // angular exchange detuning per edge
};

Operators build_operators(const DeviceModel& dev) {
    Operators ops;
    const int n = dev.n_qubits;
    for (int q = 0; q < n; ++q) {
        ops.x.push_back(pauli::dense(pauli::PauliString::single(n, q, 1)));
        ops.y.push_back(pauli::dense(pauli::PauliString::single(n, q, 2)));
    }
    for (const auto& [a, b] : dev.edges) {
        const Matrix xa = ops.x[a], xb = ops.x[b], ya = ops.y[a], yb = ops.y[b];
        const Matrix za = pauli::dense(pauli::PauliString::single(n, a, 3));
        const Matrix zb = pauli::dense(pauli::PauliString::single(n, b, 3));
        ops.zz.push_back(za * zb);
        ops.ff1.push_back(0.5 * (xa * xb + ya * yb));
        ops.ff2.push_back(0.5 * (xa * yb - ya * xb));
        ops.delta.push_back(2.0 * kPi * (dev.b_field[a] - dev.b_field[b]));
    }
    return ops;
}

// Rotating-frame Hamiltonian at absolute time t for segment amplitudes.
Matrix hamiltonian(const DeviceModel& dev, const Operators& ops, const PulseSchedule& p,
                   int segment, double t) {
    const int d = dev.dim();
    Matrix h = Matrix::Zero(d, d);
    for (int q = 0; q < dev.n_qubits; ++q) {
        const double iq = p.i_amp(segment, q);
        const double qq = p.q_amp(segment, q);
        const double det = 2.0 * kPi * (q < static_cast<int>(p.drive_detuning.size())
                                            ? p.drive_detuning[q]
                                            : 0.0);
        const double c = std::cos(det * t), s = std::sin(det * t);
        h -= kPi * ((iq * c + qq * s) * ops.x[q] + (qq * c - iq * s) * ops.y[q]);
    }
    for (int e = 0; e < dev.n_edges(); ++e) {
        const double j = p.j_amp(segment, e);
        if (j == 0.0) continue;
        const double c = std::cos(ops.delta[e] * t), s = std::sin(ops.delta[e] * t);
        h += (2.0 * kPi * j / 4.0) * (ops.zz[e] + 2.0 * (c * ops.ff1[e] - s * ops.ff2[e]));
    }
    return h;
}

// d(H)/d(parameter) at absolute time t; param layout per segment is
// [I_0..I_{n-1}, Q_0..Q_{n-1}, J_0..J_{e-1}].
Matrix hamiltonian_derivative(const DeviceModel& dev, const Operators& ops,
                              const PulseSchedule& p, int param, double t) {
    const int n = dev.n_qubits;
    if (param < n) {
        const int q = param;
        const double det = 2.0 * kPi * (q < static_cast<int>(p.drive_detuning.size())
                                            ? p.drive_detuning[q]
                                            : 0.0);
        const double c = std::cos(det * t), s = std::sin(det * t);
        return -kPi * (c * ops.x[q] - s * ops.y[q]);
    }
    if (param < 2 * n) {
        const int q = param - n;
        const double det = 2.0 * kPi * (q < static_cast<int>(p.drive_detuning.size())
                                            ? p.drive_detuning[q]
                                            : 0.0);
        const double c = std::cos(det * t), s = std::sin(det * t);
        return -kPi * (s * ops.x[q] + c * ops.y[q]);
    }
    const int e = param - 2 * n;
    const double c = std::cos(ops.delta[e] * t), s = std::sin(ops.delta[e] * t);
    return (2.0 * kPi / 4.0) * (ops.zz[e] + 2.0 * (c * ops.ff1[e] - s * ops.ff2[e]));
}

void check_bounds(const DeviceModel& dev, const PulseSchedule& p) {
    const double tol = 1e-12;
    for (int m = 0; m < p.n_segments; ++m) {
        for (int q = 0; q < dev.n_qubits; ++q) {
            if (std::abs(p.i_amp(m, q)) > dev.i_max * (1 + tol) ||
                std::abs(p.q_amp(m, q)) > dev.q_max * (1 + tol))
                throw ConfigError("pulse amplitude bound violation (I/Q)");
        }
        for (int e = 0; e < dev.n_edges(); ++e) {
            if (p.j_amp(m, e) < -tol || p.j_amp(m, e) > dev.j_max * (1 + tol))
                throw ConfigError("pulse amplitude bound violation (J)");
        }
    }
}

// One exponential factor of the fourth-order commutator-free Magnus scheme:
// exp(-i dt (w0 H(t0) + w1 H(t1))). Two factors per substep; the first factor
// applied weighs the earlier Gauss node more.
struct StepCache {
    Matrix u;
    Eigen::MatrixXcd v;              // eigenvectors of the combined generator
    Eigen::VectorXd lambda;
    Eigen::VectorXcd f;              // exp(-i lambda dt)
    double t_node[2];
    double w_node[2];
    int segment;
    bool end_of_substep;             // checkpoint boundary after this factor
};

std::vector<StepCache> propagate_steps(const DeviceModel& dev, const Operators& ops,
                                       const PulseSchedule& p, int substeps) {
    const int m_total = p.n_segments * substeps;
    const double dt = p.duration / m_total;
    constexpr double kRoot3 = 1.7320508075688772;
    const double a1 = 0.25 + kRoot3 / 6.0;
    const double a2 = 0.25 - kRoot3 / 6.0;

    std::vector<StepCache> steps(2 * static_cast<size_t>(m_total));
    par::parallel_for(2 * static_cast<size_t>(m_total), [&](size_t idx) {
        const size_t k = idx / 2;
        const bool second = idx % 2;
        const int segment = static_cast<int>(k) / substeps;
        const double t0 = (static_cast<double>(k) + 0.5 - 0.5 / kRoot3) * dt;
        const double t1 = (static_cast<double>(k) + 0.5 + 0.5 / kRoot3) * dt;
        StepCache sc;
        sc.segment = segment;
        sc.end_of_substep = second;
        sc.t_node[0] = t0;
        sc.t_node[1] = t1;
        sc.w_node[0] = second ? a2 : a1;
        sc.w_node[1] = second ? a1 : a2;
        const Matrix h = sc.w_node[0] * hamiltonian(dev, ops, p, segment, t0) +
                         sc.w_node[1] * hamiltonian(dev, ops, p, segment, t1);
        Eigen::SelfAdjointEigenSolver<Matrix> es(h);
        sc.v = es.eigenvectors();
        sc.lambda = es.eigenvalues();
        sc.f = (std::complex<double>(0, -dt) * sc.lambda.cast<std::complex<double>>().array())
                   .exp();
        sc.u = sc.v * sc.f.asDiagonal() * sc.v.adjoint();
        steps[idx] = std::move(sc);
    });
    return steps;
}

int params_per_segment(const DeviceModel& dev) { return 2 * dev.n_qubits + dev.n_edges(); }

PulseSchedule random_schedule(const DeviceModel& dev, double duration, int n_segments,
                              std::uint64_t seed, double scale) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    PulseSchedule p = PulseSchedule::zero(dev, duration, n_segments);
    for (int m = 0; m < n_segments; ++m) {
        for (int q = 0; q < dev.n_qubits; ++q) {
            p.i_amp(m, q) = scale * dev.i_max * u(rng);
            p.q_amp(m, q) = scale * dev.q_max * u(rng);
        }
        for (int e = 0; e < dev.n_edges(); ++e)
            p.j_amp(m, e) = scale * dev.j_max * 0.5 * (u(rng) + 1.0);
    }
    return p;
}

void clamp_schedule(const DeviceModel& dev, PulseSchedule& p) {
    for (int m = 0; m < p.n_segments; ++m) {
        for (int q = 0; q < dev.n_qubits; ++q) {
            p.i_amp(m, q) = std::clamp(p.i_amp(m, q), -dev.i_max, dev.i_max);
            p.q_amp(m, q) = std::clamp(p.q_amp(m, q), -dev.q_max, dev.q_max);
        }
        for (int e = 0; e < dev.n_edges(); ++e)
            p.j_amp(m, e) = std::clamp(p.j_amp(m, e), 0.0, dev.j_max);
    }
}

double get_param(const PulseSchedule& p, int n_qubits, int m, int j) {
    if (j < n_qubits) return p.i_amp(m, j);
    if (j < 2 * n_qubits) return p.q_amp(m, j - n_qubits);
    return p.j_amp(m, j - 2 * n_qubits);
}

void set_param(PulseSchedule& p, int n_qubits, int m, int j, double v) {
    if (j < n_qubits)
        p.i_amp(m, j) = v;
    else if (j < 2 * n_qubits)
        p.q_amp(m, j - n_qubits) = v;
    else
        p.j_amp(m, j - 2 * n_qubits) = v;
}

std::pair<double, double> param_bounds(const DeviceModel& dev, int j) {
    if (j < dev.n_qubits) return {-dev.i_max, dev.i_max};
    if (j < 2 * dev.n_qubits) return {-dev.q_max, dev.q_max};
    return {0.0, dev.j_max};
}

}  // namespace

DeviceModel DeviceModel::chain(int n_qubits, double delta_b) {
    DeviceModel d;
    d.n_qubits = n_qubits;
    for (int q = 0; q + 1 < n_qubits; ++q) d.edges.emplace_back(q, q + 1);
    // alternating field ladder: coupled neighbors always differ by delta_b,
    // non-interacting qubits reuse frequencies
    for (int q = 0; q < n_qubits; ++q) d.b_field.push_back((q % 2) * delta_b);
    d.drive_detuning.assign(static_cast<size_t>(n_qubits), 0.0);
    return d;
}

DeviceModel DeviceModel::grid(int rows, int cols, double delta_b) {
    DeviceModel d;
    d.n_qubits = rows * cols;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            const int q = r * cols + c;
            if (c + 1 < cols) d.edges.emplace_back(q, q + 1);
            if (r + 1 < rows) d.edges.emplace_back(q, q + cols);
            // stagger fields so that every neighbor pair differs
            d.b_field.push_back(((r + c) % 2 ? 1.0 : 0.0) * delta_b + r * 2.0 * delta_b);
        }
    d.drive_detuning.assign(static_cast<size_t>(d.n_qubits), 0.0);
    return d;
}

DeviceModel DeviceModel::star(int n_qubits, double delta_b) {
    DeviceModel d;
    d.n_qubits = n_qubits;
    const int center = n_qubits - 1;
    for (int q = 0; q < center; ++q) d.edges.emplace_back(q, center);
    // leaves only couple to the center: alternate two offsets above it
    for (int q = 0; q < center; ++q) d.b_field.push_back((1 + q % 2) * delta_b);
    d.b_field.push_back(0.0);
    d.drive_detuning.assign(static_cast<size_t>(n_qubits), 0.0);
    return d;
}

DeviceModel DeviceModel::restrict_to(const std::vector<int>& qubits) const {
    DeviceModel d;
    d.n_qubits = static_cast<int>(qubits.size());
    d.j_max = j_max;
    d.i_max = i_max;
    d.q_max = q_max;
    std::vector<int> inv(b_field.size(), -1);
    for (int i = 0; i < d.n_qubits; ++i) {
        inv[static_cast<size_t>(qubits[static_cast<size_t>(i)])] = i;
        d.b_field.push_back(b_field[static_cast<size_t>(qubits[static_cast<size_t>(i)])]);
        d.drive_detuning.push_back(drive_detuning[static_cast<size_t>(qubits[static_cast<size_t>(i)])]);
    }
    for (const auto& [a, b] : edges) {
        if (inv[static_cast<size_t>(a)] >= 0 && inv[static_cast<size_t>(b)] >= 0)
            d.edges.emplace_back(inv[static_cast<size_t>(a)], inv[static_cast<size_t>(b)]);
    }
    return d;
}

PulseSchedule PulseSchedule::zero(const DeviceModel& dev, double duration, int n_segments) {
    PulseSchedule p;
    p.duration = duration;
    p.n_segments = n_segments;
    p.i_amp = Eigen::MatrixXd::Zero(n_segments, dev.n_qubits);
    p.q_amp = Eigen::MatrixXd::Zero(n_segments, dev.n_qubits);
    p.j_amp = Eigen::MatrixXd::Zero(n_segments, dev.n_edges());
    p.drive_detuning = dev.drive_detuning;
    return p;
}

json PulseSchedule::to_json() const {
    auto mat = [](const Eigen::MatrixXd& m) {
        json rows = json::array();
        for (int r = 0; r < m.rows(); ++r) {
            json row = json::array();
            for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
            rows.push_back(row);
        }
        return rows;
    };
    return json{{"duration", duration},
                {"n_segments", n_segments},
                {"i_amp", mat(i_amp)},
                {"q_amp", mat(q_amp)},
                {"j_amp", mat(j_amp)},
                {"drive_detuning", drive_detuning}};
}

PulseSchedule PulseSchedule::from_json(const json& j) {
    PulseSchedule p;
    p.duration = j.at("duration").get<double>();
    p.n_segments = j.at("n_segments").get<int>();
    auto mat = [&](const char* key) {
        const json& rows = j.at(key);
        const int r = static_cast<int>(rows.size());
        const int c = r ? static_cast<int>(rows[0].size()) : 0;
        Eigen::MatrixXd m(r, c);
        for (int a = 0; a < r; ++a)
            for (int b = 0; b < c; ++b) m(a, b) = rows[a][b].get<double>();
        return m;
    };
    p.i_amp = mat("i_amp");
    p.q_amp = mat("q_amp");
    p.j_amp = mat("j_amp");
    p.drive_detuning = j.at("drive_detuning").get<std::vector<double>>();
    return p;
}

double operator_infidelity(const Matrix& u, const Matrix& target) {
    const double d = static_cast<double>(u.rows());
    const std::complex<double> tr = (target.adjoint() * u).trace();
    return 1.0 - std::norm(tr) / (d * d);
}

PropagationResult propagate(const DeviceModel& dev, const PulseSchedule& pulse,
                            int trotter_substeps, int min_checkpoints) {
    if (dev.n_qubits > 4) throw ConfigError("propagation is limited to 4-qubit compartments");
    if (trotter_substeps < 1) throw ConfigError("trotter_substeps must be >= 1");
    check_bounds(dev, pulse);

    int substeps = trotter_substeps;
    if (min_checkpoints > 1 && pulse.n_segments > 0) {
        const int needed = (min_checkpoints - 1 + pulse.n_segments - 1) / pulse.n_segments;
        substeps = std::max(substeps, needed);
    }

    const Operators ops = build_operators(dev);
    PropagationResult res;
    res.checkpoint_times.push_back(0.0);
    res.checkpoints.push_back(Matrix::Identity(dev.dim(), dev.dim()));
    if (pulse.n_segments == 0 || pulse.duration == 0.0) {
        res.unitary = Matrix::Identity(dev.dim(), dev.dim());
        return res;
    }
    const auto steps = propagate_steps(dev, ops, pulse, substeps);
    const double dt = 2.0 * pulse.duration / static_cast<double>(steps.size());
    Matrix u = Matrix::Identity(dev.dim(), dev.dim());
    size_t boundary = 0;
    for (const auto& step : steps) {
        u = step.u * u;
        if (step.end_of_substep) {
            ++boundary;
            res.checkpoint_times.push_back(static_cast<double>(boundary) * dt);
            res.checkpoints.push_back(u);
        }
    }
    res.unitary = u;
    return res;
}

double grape_objective(const DeviceModel& dev, const PulseSchedule& pulse, const Matrix& target,
                       int trotter_substeps) {
    const Operators ops = build_operators(dev);
    const auto steps = propagate_steps(dev, ops, pulse, trotter_substeps);
    Matrix u = Matrix::Identity(dev.dim(), dev.dim());
    for (const auto& s : steps) u = s.u * u;
    return operator_infidelity(u, target);
}

Eigen::VectorXd grape_gradient(const DeviceModel& dev, const PulseSchedule& pulse,
                               const Matrix& target, int trotter_substeps) {
    const Operators ops = build_operators(dev);
    const auto steps = propagate_steps(dev, ops, pulse, trotter_substeps);
    const int d = dev.dim();
    const int n_steps = static_cast<int>(steps.size());
    const int ppseg = params_per_segment(dev);
    const double dt = 2.0 * pulse.duration / n_steps;  // two factors per substep

    // prefix[k] = U_{k-1} ... U_0 (prefix[0] = I), suffix[k] = U_{K-1} ... U_{k+1}
    std::vector<Matrix> prefix(static_cast<size_t>(n_steps) + 1);
    prefix[0] = Matrix::Identity(d, d);
    for (int k = 0; k < n_steps; ++k) prefix[static_cast<size_t>(k) + 1] = steps[static_cast<size_t>(k)].u * prefix[static_cast<size_t>(k)];
    std::vector<Matrix> suffix(static_cast<size_t>(n_steps) + 1);
    suffix[static_cast<size_t>(n_steps)] = Matrix::Identity(d, d);
    for (int k = n_steps - 1; k >= 0; --k)
        suffix[static_cast<size_t>(k)] = suffix[static_cast<size_t>(k) + 1] * steps[static_cast<size_t>(k)].u;

    const Matrix u_total = prefix[static_cast<size_t>(n_steps)];
    const std::complex<double> c = (target.adjoint() * u_total).trace();
    const double d2 = static_cast<double>(d) * d;

    // per-step contributions, reduced in step order afterwards
    Eigen::MatrixXd contrib = Eigen::MatrixXd::Zero(n_steps, ppseg);
    par::parallel_for(static_cast<size_t>(n_steps), [&](size_t k) {
        const auto& sc = steps[k];
        // W = L_k T^dag R_k so that dc = Tr(W dU_k)
        const Matrix w = prefix[k] * target.adjoint() * suffix[k + 1];
        const Matrix wt = sc.v.adjoint() * w * sc.v;
        // Loewner matrix for f(l) = exp(-i l dt)
        Eigen::MatrixXcd phi(d, d);
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) {
                const double la = sc.lambda(a), lb = sc.lambda(b);
                if (std::abs(la - lb) < 1e-12 * (1.0 + std::abs(la)))
                    phi(a, b) = std::complex<double>(0, -dt) * sc.f(a);
                else
                    phi(a, b) = (sc.f(a) - sc.f(b)) / (la - lb);
            }
        for (int j = 0; j < ppseg; ++j) {
            const Matrix dh =
                sc.w_node[0] * hamiltonian_derivative(dev, ops, pulse, j, sc.t_node[0]) +
                sc.w_node[1] * hamiltonian_derivative(dev, ops, pulse, j, sc.t_node[1]);
            const Matrix dht = sc.v.adjoint() * dh * sc.v;
            std::complex<double> dc = 0.0;
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b) dc += wt(b, a) * dht(a, b) * phi(a, b);
            // objective C = 1 - |c|^2/D^2
            contrib(static_cast<int>(k), j) = -2.0 * std::real(std::conj(c) * dc) / d2;
        }
    });
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(pulse.n_segments * ppseg);
    for (int k = 0; k < n_steps; ++k)
        for (int j = 0; j < ppseg; ++j)
            grad(steps[static_cast<size_t>(k)].segment * ppseg + j) += contrib(k, j);
    return grad;
}

GrapeResult grape_optimize(const DeviceModel& dev, const Matrix& target, double duration,
                           int n_segments, std::uint64_t seed, const GrapeOptions& opts) {
    if (dev.n_qubits > 4) throw ConfigError("grape_optimize is limited to 4-qubit compartments");
    if (duration <= 0.0 || n_segments <= 0) throw ConfigError("grape_optimize needs T, M > 0");

    const int ppseg = params_per_segment(dev);
    const int n_params = n_segments * ppseg;

    // work in bound-normalized coordinates: I,Q in [-1,1], J in [0,1]
    std::vector<double> scale(static_cast<size_t>(ppseg));
    for (int j = 0; j < ppseg; ++j) scale[static_cast<size_t>(j)] = param_bounds(dev, j).second;

    PulseSchedule x;
    if (opts.init_schedule && opts.init_schedule->n_segments == n_segments) {
        x = *opts.init_schedule;
        x.duration = duration;  // stretch the shape onto the new grid
    } else {
        x = random_schedule(dev, duration, n_segments, seed, opts.init_scale);
    }
    clamp_schedule(dev, x);

    auto pack = [&](const PulseSchedule& p) {
        Eigen::VectorXd v(n_params);
        for (int m = 0; m < n_segments; ++m)
            for (int j = 0; j < ppseg; ++j)
                v(m * ppseg + j) = get_param(p, dev.n_qubits, m, j) / scale[static_cast<size_t>(j)];
        return v;
    };
    auto unpack = [&](const Eigen::VectorXd& v) {
        PulseSchedule p = PulseSchedule::zero(dev, duration, n_segments);
        p.drive_detuning = x.drive_detuning;
        for (int m = 0; m < n_segments; ++m)
            for (int j = 0; j < ppseg; ++j)
                set_param(p, dev.n_qubits, m, j, v(m * ppseg + j) * scale[static_cast<size_t>(j)]);
        clamp_schedule(dev, p);
        return p;
    };
    auto normalized_grad = [&](const PulseSchedule& p) {
        Eigen::VectorXd g = grape_gradient(dev, p, target, opts.trotter_substeps);
        for (int m = 0; m < n_segments; ++m)
            for (int j = 0; j < ppseg; ++j) g(m * ppseg + j) *= scale[static_cast<size_t>(j)];
        return g;
    };
    auto project_grad = [&](const Eigen::VectorXd& v, Eigen::VectorXd g) {
        for (int m = 0; m < n_segments; ++m)
            for (int j = 0; j < ppseg; ++j) {
                const auto [lo, hi] = param_bounds(dev, j);
                const double nl = lo / scale[static_cast<size_t>(j)];
                const int idx = m * ppseg + j;
                if ((v(idx) >= 1.0 - 1e-14 && g(idx) < 0) || (v(idx) <= nl + 1e-14 && g(idx) > 0))
                    g(idx) = 0;
            }
        return g;
    };

    Eigen::VectorXd v = pack(x);
    double obj = grape_objective(dev, x, target, opts.trotter_substeps);
    GrapeResult best;
    best.objective_trace.push_back(obj);

    Eigen::VectorXd grad = normalized_grad(x);
    bool stagnated = false;

    // projected L-BFGS with a monotone backtracking line search
    const int history = 12;
    std::vector<Eigen::VectorXd> s_hist, y_hist;
    std::vector<double> rho_hist;

    for (int it = 0; it < opts.max_iters; ++it) {
        const Eigen::VectorXd pg = project_grad(v, grad);
        best.grad_norm = pg.norm();
        if (best.grad_norm <= opts.grad_tol) break;
        if (opts.target_infidelity > 0.0 && obj <= opts.target_infidelity) break;

        // two-loop recursion: d = -(approximate inverse Hessian) * grad
        Eigen::VectorXd d;
        if (s_hist.empty()) {
            d = -grad;
        } else {
            Eigen::VectorXd q = grad;
            std::vector<double> alpha(s_hist.size());
            for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
                alpha[static_cast<size_t>(i)] =
                    rho_hist[static_cast<size_t>(i)] * s_hist[static_cast<size_t>(i)].dot(q);
                q -= alpha[static_cast<size_t>(i)] * y_hist[static_cast<size_t>(i)];
            }
            q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
            for (size_t i = 0; i < s_hist.size(); ++i) {
                const double beta = rho_hist[i] * y_hist[i].dot(q);
                q += (alpha[i] - beta) * s_hist[i];
            }
            d = -q;
        }
        // keep the move inside the box: drop components pushing past an
        // active bound, fall back to the projected gradient if what is left
        // is not a descent direction
        auto clip_direction = [&](Eigen::VectorXd dir) {
            for (int m = 0; m < n_segments; ++m)
                for (int j = 0; j < ppseg; ++j) {
                    const auto [lo, hi] = param_bounds(dev, j);
                    const double nl = lo / scale[static_cast<size_t>(j)];
                    const int idx = m * ppseg + j;
                    if ((v(idx) >= 1.0 - 1e-14 && dir(idx) > 0) ||
                        (v(idx) <= nl + 1e-14 && dir(idx) < 0))
                        dir(idx) = 0;
                }
            return dir;
        };
        d = clip_direction(std::move(d));
        bool used_pg = false;
        if (d.dot(pg) > -1e-14 * d.norm() * pg.norm()) {
            d = -pg;
            used_pg = true;
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
        }

        auto line_search = [&](const Eigen::VectorXd& dir, double first_trial) {
            double trial = first_trial;
            for (int bt = 0; bt < 30; ++bt) {
                Eigen::VectorXd vt = v + trial * dir;
                PulseSchedule xt = unpack(vt);
                vt = pack(xt);  // the true (projected) move
                const double obj_t = grape_objective(dev, xt, target, opts.trotter_substeps);
                if (obj_t < obj) {
                    const Eigen::VectorXd g_new = normalized_grad(xt);
                    const Eigen::VectorXd sv = vt - v;
                    const Eigen::VectorXd yv = g_new - grad;
                    const double sy = sv.dot(yv);
                    if (sy > 1e-12 * sv.norm() * yv.norm()) {
                        s_hist.push_back(sv);
                        y_hist.push_back(yv);
                        rho_hist.push_back(1.0 / sy);
                        if (static_cast<int>(s_hist.size()) > history) {
                            s_hist.erase(s_hist.begin());
                            y_hist.erase(y_hist.begin());
                            rho_hist.erase(rho_hist.begin());
                        }
                    }
                    v = vt;
                    x = std::move(xt);
                    obj = obj_t;
                    grad = g_new;
                    return true;
                }
                trial *= 0.4;
            }
            return false;
        };

        bool improved = line_search(d, s_hist.empty() ? 0.25 / std::max(pg.norm(), 1e-12) : 1.0);
        if (!improved && !used_pg) {
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            improved = line_search(-pg, 0.1 / std::max(pg.norm(), 1e-12));
        }
        best.objective_trace.push_back(obj);
        if (!improved) {
            stagnated = true;
            break;
        }
    }

    best.pulse = std::move(x);
    best.infidelity = obj;
    best.stagnated = stagnated;
    return best;
}

namespace {

struct MetProbe {
    double infidelity;
    GrapeResult result;
};

MetProbe probe_duration(const DeviceModel& dev, const Matrix& target, double t,
                        const MetOptions& opts, const PulseSchedule* warm) {
    const size_t n_runs = static_cast<size_t>(opts.seeds) + (warm ? 1 : 0);
    std::vector<GrapeResult> results(n_runs);
    par::parallel_for(n_runs, [&](size_t s) {
        GrapeOptions go = opts.grape;
        go.target_infidelity = opts.cutoff;
        if (warm && s == n_runs - 1) go.init_schedule = *warm;
        results[s] = grape_optimize(dev, target, t, opts.n_segments,
                                    0x9e3779b97f4a7c15ull * (s + 1) + 12345, go);
    });
    size_t best = 0;
    for (size_t s = 1; s < results.size(); ++s)
        if (results[s].infidelity < results[best].infidelity) best = s;
    return {results[best].infidelity, std::move(results[best])};
}

}  // namespace

MetResult find_met(const DeviceModel& dev, const Matrix& target, const MetOptions& opts) {
    if (!(opts.cutoff > 0.0 && opts.cutoff < 1.0))
        throw ConfigError("MET cutoff must lie in (0,1)");

    MetResult res;
    // grid minimum: the empty pulse
    const Matrix ident = Matrix::Identity(dev.dim(), dev.dim());
    if (operator_infidelity(ident, target) <= opts.cutoff) {
        res.t_met = 0.0;
        res.pulse = PulseSchedule::zero(dev, 0.0, 0);
        res.infidelity = operator_infidelity(ident, target);
        return res;
    }

    // exponential bracketing
    double t_hi = 20e-9;
    MetProbe hi_probe{1.0, {}};
    bool bracketed = false;
    while (t_hi <= opts.t_max) {
        hi_probe = probe_duration(dev, target, t_hi, opts, nullptr);
        if (hi_probe.infidelity <= opts.cutoff) {
            bracketed = true;
            break;
        }
        t_hi *= 2.0;
    }
    if (!bracketed)
        throw ModelError("find_met: cutoff unreachable within the duration budget");

    // bisection, warm-starting each probe from the best feasible pulse
    double t_lo = t_hi / 2.0;
    while (t_hi / t_lo > 1.0 + opts.grid_step) {
        const double t_mid = std::sqrt(t_lo * t_hi);
        const MetProbe mid = probe_duration(dev, target, t_mid, opts, &hi_probe.result.pulse);
        if (mid.infidelity <= opts.cutoff) {
            t_hi = t_mid;
            hi_probe = mid;
        } else {
            t_lo = t_mid;
        }
    }

    res.t_met = t_hi;
    res.pulse = hi_probe.result.pulse;
    res.infidelity = hi_probe.infidelity;
    return res;
}

CompressedCircuit compress_circuit(const DeviceModel& parent,
                                   const std::vector<CircuitSegment>& segments,
                                   const MetOptions& opts) {
    CompressedCircuit out;
    for (const auto& seg : segments) {
        if (seg.qubits.size() > 4)
            throw ConfigError("segment '" + seg.name + "' exceeds the 4-qubit compartment limit");
        const DeviceModel sub = parent.restrict_to(seg.qubits);
        MetResult met = find_met(sub, seg.target, opts);
        out.total_time += met.t_met;
        out.infidelity_estimate += met.infidelity;
        out.segments.push_back(std::move(met));
    }
    return out;
}

Matrix named_target(const std::string& name) {
    using namespace pauli;
    if (name == "x") return gate_x();
    if (name == "y") return gate_y();
    if (name == "z") return gate_z();
    if (name == "h") return gate_h();
    if (name == "s") return gate_s();
    if (name == "t") return gate_t();
    if (name == "cnot") return gate_cnot();
    if (name == "cz") return gate_cz();
    if (name == "swap") return gate_swap();
    if (name == "check2") {
        // two data qubits (0,1) checked into ancilla qubit 2
        const Matrix c0 = embed(gate_cnot(), {0, 2}, 3);
        const Matrix c1 = embed(gate_cnot(), {1, 2}, 3);
        return c1 * c0;
    }
    if (name == "check3") {
        const Matrix c0 = embed(gate_cnot(), {0, 3}, 4);
        const Matrix c1 = embed(gate_cnot(), {1, 3}, 4);
        const Matrix c2 = embed(gate_cnot(), {2, 3}, 4);
        return c2 * c1 * c0;
    }
    throw ConfigError("unknown gate target '" + name + "'");
}

int named_target_qubits(const std::string& name) {
    if (name == "check2") return 3;
    if (name == "check3") return 4;
    if (name == "cnot" || name == "cz" || name == "swap") return 2;
    return 1;
}

}  // namespace ftqcr::pulse
