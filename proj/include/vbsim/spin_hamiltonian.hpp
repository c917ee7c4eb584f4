#pragma once

#include <array>
#include <complex>
#include <cstddef>

namespace vbsim {

using Complex = std::complex<double>;

// 3x3 complex operator in the Sz eigenbasis, index order {|+1>, |0>, |-1>}.
// Hamiltonians carry MHz; bare spin operators are dimensionless.
class SpinMatrix {
 public:
  static constexpr std::size_t kDim = 3;

  SpinMatrix() { entries_.fill(Complex{}); }

  static SpinMatrix identity();
  static SpinMatrix diagonal(double a, double b, double c);

  Complex& operator()(std::size_t row, std::size_t col) { return entries_[row * kDim + col]; }
  const Complex& operator()(std::size_t row, std::size_t col) const {
    return entries_[row * kDim + col];
  }

  SpinMatrix adjoint() const;
  Complex trace() const;
  double frobenius_norm() const;

  // max |A_ij - conj(A_ji)| relative to the Frobenius norm (0 for the zero matrix).
  double hermitian_defect() const;

  SpinMatrix& operator+=(const SpinMatrix& rhs);
  SpinMatrix& operator-=(const SpinMatrix& rhs);
  SpinMatrix& operator*=(Complex s);

  friend SpinMatrix operator+(SpinMatrix lhs, const SpinMatrix& rhs) { return lhs += rhs; }
  friend SpinMatrix operator-(SpinMatrix lhs, const SpinMatrix& rhs) { return lhs -= rhs; }
  friend SpinMatrix operator*(SpinMatrix m, Complex s) { return m *= s; }
  friend SpinMatrix operator*(Complex s, SpinMatrix m) { return m *= s; }
  friend SpinMatrix operator*(const SpinMatrix& lhs, const SpinMatrix& rhs);

 private:
  std::array<Complex, kDim * kDim> entries_;
};

using SpinVector = std::array<Complex, SpinMatrix::kDim>;

SpinVector operator*(const SpinMatrix& m, const SpinVector& v);

struct SpinOperators {
  SpinMatrix sx;
  SpinMatrix sy;
  SpinMatrix sz;
};

// Zero-field-splitting parameters in MHz. E1 multiplies (Sx^2 - Sy^2),
// E2 multiplies (SxSy + SySx).
struct ZfsParameters {
  double d = 0.0;
  double e1 = 0.0;
  double e2 = 0.0;

  double e_eff() const;

  ZfsParameters& operator+=(const ZfsParameters& rhs) {
    d += rhs.d;
    e1 += rhs.e1;
    e2 += rhs.e2;
    return *this;
  }
  friend ZfsParameters operator+(ZfsParameters lhs, const ZfsParameters& rhs) { return lhs += rhs; }
};

// Real symmetric spin-spin tensor D_ij (MHz), H = S . D . S.
struct DTensor {
  std::array<std::array<double, 3>, 3> t{};

  double trace() const { return t[0][0] + t[1][1] + t[2][2]; }
  double frobenius_norm() const;
};

struct EigenSystem {
  std::array<double, 3> values{};          // ascending
  std::array<SpinVector, 3> vectors{};     // vectors[k] pairs with values[k]
};

struct Resonances {
  double f_minus = 0.0;
  double f_plus = 0.0;
};

// Sx, Sy, Sz for S = 1 with analytic entries.
const SpinOperators& spin_operators();

// Sx^2 - Sy^2 and SxSy + SySx.
const SpinMatrix& orthorhombic_x_operator();
const SpinMatrix& orthorhombic_y_operator();

// D (Sz^2 - 2/3) + detuning Sz + E1 (Sx^2 - Sy^2) + E2 (SxSy + SySx).
// The detuning slot carries the secular hyperfine shift A m_I.
SpinMatrix build_hamiltonian(const ZfsParameters& zfs, double detuning_mhz = 0.0);

// Reads (D, E1, E2) back from the matrix elements of a Hamiltonian built in
// the Sz basis. Inverse of build_hamiltonian for detuning = 0.
ZfsParameters zfs_from_hamiltonian(const SpinMatrix& h);

// Cyclic complex Jacobi. Throws InputError if h is not Hermitian to 1e-9
// relative. Degenerate eigenvalues are ordered by dominant basis index, and
// every eigenvector's first non-negligible component is real positive.
EigenSystem eigensolve(const SpinMatrix& h);

// Transition frequencies out of the m_S = 0-like level, ascending.
// Throws NumericalError when no eigenvector has |<0|v>|^2 >= 0.5.
Resonances resonance_frequencies(const SpinMatrix& h);

// D = 3 T_zz / 2, E1 = (T_xx - T_yy) / 2, E2 = (T_xy + T_yx) / 2.
// Logs a warning to std::clog when |trace| > 1e-6 ||T||.
ZfsParameters d_tensor_to_zfs(const DTensor& tensor);

bool is_traceless(const DTensor& tensor, double rel_tol = 1e-6);

}  // namespace vbsim
