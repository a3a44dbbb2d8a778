#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ftqcr::pauli {

using Matrix = Eigen::MatrixXcd;

// An n-qubit Pauli string, phase-free, encoded base-4: two bits per qubit,
// qubit 0 in the least significant pair, 0=I 1=X 2=Y 3=Z.
struct PauliString {
    std::uint32_t code = 0;
    int n_qubits = 1;

    int letter(int qubit) const { return (code >> (2 * qubit)) & 3; }
    int weight() const;
    std::string label() const;  // e.g. "XZI" (qubit 0 leftmost)

    static PauliString from_label(const std::string& label);
    static PauliString single(int n_qubits, int qubit, int letter);

    bool operator==(const PauliString&) const = default;
};

inline int dim(int n_qubits) { return 1 << n_qubits; }
inline int n_paulis(int n_qubits) { return 1 << (2 * n_qubits); }

// True if the two strings commute (symplectic overlap even).
bool commutes(const PauliString& a, const PauliString& b);

Matrix dense(const PauliString& p);
Matrix dense(std::uint32_t code, int n_qubits);

// Coefficients c_k = Tr[M sigma_k] / D over all 4^n Pauli strings, so that
// M = sum_k c_k sigma_k.
Eigen::VectorXcd decompose(const Matrix& m, int n_qubits);

// Common gates for targets and test fixtures.
Matrix gate_x();
Matrix gate_y();
Matrix gate_z();
Matrix gate_h();
Matrix gate_s();
Matrix gate_t();
Matrix gate_cnot();    // control qubit 0, target qubit 1 (qubit 0 = least significant)
Matrix gate_cz();
Matrix gate_swap();
Matrix kron_all(const std::vector<Matrix>& ops);
// Embeds a k-qubit gate acting on the listed qubits into an n-qubit space.
Matrix embed(const Matrix& gate, const std::vector<int>& qubits, int n_qubits);

}  // namespace ftqcr::pauli
