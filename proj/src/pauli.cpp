#include "ftqcr/pauli.hpp"

#include "ftqcr/errors.hpp"

namespace ftqcr::pauli {

namespace {
constexpr char kLetters[] = "IXYZ";

Matrix single_qubit(int letter) {
    Matrix m(2, 2);
    const std::complex<double> i(0.0, 1.0);
    switch (letter) {
        case 0: m << 1, 0, 0, 1; break;
        case 1: m << 0, 1, 1, 0; break;
        case 2: m << 0, -i, i, 0; break;
        default: m << 1, 0, 0, -1; break;
    }
    return m;
}

// Splits M over the most significant qubit: M = sum_P P (x) N_P, then
// recurses on the four half-size blocks. O(D^2 log D) overall.
void decompose_rec(const Matrix& m, int n_qubits, std::uint32_t prefix,
                   Eigen::VectorXcd& out) {
    if (n_qubits == 0) {
        out(prefix) = m(0, 0);
        return;
    }
    const int h = m.rows() / 2;
    const std::complex<double> i(0.0, 1.0);
    const Matrix a = m.topLeftCorner(h, h);
    const Matrix b = m.topRightCorner(h, h);
    const Matrix c = m.bottomLeftCorner(h, h);
    const Matrix d = m.bottomRightCorner(h, h);
    const std::uint32_t shift = 2u * static_cast<std::uint32_t>(n_qubits - 1);
    decompose_rec((a + d) / 2.0, n_qubits - 1, prefix | (0u << shift), out);
    decompose_rec((b + c) / 2.0, n_qubits - 1, prefix | (1u << shift), out);
    decompose_rec(i * (b - c) / 2.0, n_qubits - 1, prefix | (2u << shift), out);
    decompose_rec((a - d) / 2.0, n_qubits - 1, prefix | (3u << shift), out);
}

}  // namespace

int PauliString::weight() const {
    int w = 0;
    for (int q = 0; q < n_qubits; ++q)
        if (letter(q) != 0) ++w;
    return w;
}

std::string PauliString::label() const {
    std::string s(static_cast<size_t>(n_qubits), 'I');
    for (int q = 0; q < n_qubits; ++q) s[static_cast<size_t>(q)] = kLetters[letter(q)];
    return s;
}

PauliString PauliString::from_label(const std::string& label) {
    PauliString p;
    p.n_qubits = static_cast<int>(label.size());
    p.code = 0;
    for (int q = 0; q < p.n_qubits; ++q) {
        const char c = label[static_cast<size_t>(q)];
        std::uint32_t l;
        switch (c) {
            case 'I': l = 0; break;
            case 'X': l = 1; break;
            case 'Y': l = 2; break;
            case 'Z': l = 3; break;
            default: throw ConfigError(std::string("bad Pauli letter '") + c + "'");
        }
        p.code |= l << (2 * q);
    }
    return p;
}

PauliString PauliString::single(int n_qubits, int qubit, int letter) {
    PauliString p;
    p.n_qubits = n_qubits;
    p.code = static_cast<std::uint32_t>(letter) << (2 * qubit);
    return p;
}

bool commutes(const PauliString& a, const PauliString& b) {
    int anti = 0;
    for (int q = 0; q < a.n_qubits; ++q) {
        const int la = a.letter(q), lb = b.letter(q);
        if (la != 0 && lb != 0 && la != lb) ++anti;
    }
    return (anti % 2) == 0;
}

Matrix dense(const PauliString& p) { return dense(p.code, p.n_qubits); }

Matrix dense(std::uint32_t code, int n_qubits) {
    Matrix m = single_qubit(code & 3);
    for (int q = 1; q < n_qubits; ++q) {
        const Matrix next = single_qubit((code >> (2 * q)) & 3);
        // qubit q is a more significant tensor factor
        Matrix out(next.rows() * m.rows(), next.cols() * m.cols());
        for (int r = 0; r < next.rows(); ++r)
            for (int c = 0; c < next.cols(); ++c)
                out.block(r * m.rows(), c * m.cols(), m.rows(), m.cols()) = next(r, c) * m;
        m = std::move(out);
    }
    return m;
}

Eigen::VectorXcd decompose(const Matrix& m, int n_qubits) {
    Eigen::VectorXcd coeffs = Eigen::VectorXcd::Zero(n_paulis(n_qubits));
    decompose_rec(m, n_qubits, 0, coeffs);
    return coeffs;
}

Matrix gate_x() { return single_qubit(1); }
Matrix gate_y() { return single_qubit(2); }
Matrix gate_z() { return single_qubit(3); }

Matrix gate_h() {
    Matrix m(2, 2);
    const double s = 1.0 / std::sqrt(2.0);
    m << s, s, s, -s;
    return m;
}

Matrix gate_s() {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = 1.0;
    m(1, 1) = std::complex<double>(0.0, 1.0);
    return m;
}

Matrix gate_t() {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = 1.0;
    m(1, 1) = std::exp(std::complex<double>(0.0, M_PI / 4.0));
    return m;
}

Matrix gate_cnot() {
    Matrix m = Matrix::Zero(4, 4);
    // basis index = 2*q1 + q0; control q0, target q1
    m(0, 0) = 1;
    m(3, 1) = 1;
    m(2, 2) = 1;
    m(1, 3) = 1;
    return m;
}

Matrix gate_cz() {
    Matrix m = Matrix::Identity(4, 4);
    m(3, 3) = -1;
    return m;
}

Matrix gate_swap() {
    Matrix m = Matrix::Zero(4, 4);
    m(0, 0) = 1;
    m(2, 1) = 1;
    m(1, 2) = 1;
    m(3, 3) = 1;
    return m;
}

Matrix kron_all(const std::vector<Matrix>& ops) {
    Matrix m = Matrix::Identity(1, 1);
    for (const Matrix& a : ops) {  // later entries are more significant factors
        Matrix out(a.rows() * m.rows(), a.cols() * m.cols());
        for (int r = 0; r < a.rows(); ++r)
            for (int c = 0; c < a.cols(); ++c)
                out.block(r * m.rows(), c * m.cols(), m.rows(), m.cols()) = a(r, c) * m;
        m = std::move(out);
    }
    return m;
}

Matrix embed(const Matrix& gate, const std::vector<int>& qubits, int n_qubits) {
    const int d = dim(n_qubits);
    const int k = static_cast<int>(qubits.size());
    int mask = 0;
    for (int q : qubits) mask |= 1 << q;
    Matrix out = Matrix::Zero(d, d);
    for (int col = 0; col < d; ++col) {
        int sub_col = 0;
        for (int b = 0; b < k; ++b) sub_col |= ((col >> qubits[static_cast<size_t>(b)]) & 1) << b;
        const int rest = col & ~mask;
        for (int sub_row = 0; sub_row < (1 << k); ++sub_row) {
            const std::complex<double> amp = gate(sub_row, sub_col);
            if (amp == std::complex<double>(0.0, 0.0)) continue;
            int row = rest;
            for (int b = 0; b < k; ++b)
                if ((sub_row >> b) & 1) row |= 1 << qubits[static_cast<size_t>(b)];
            out(row, col) += amp;
        }
    }
    return out;
}

}  // namespace ftqcr::pauli
