#include "vbsim/spin_hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include "vbsim/error.hpp"

namespace vbsim {

namespace {

constexpr std::size_t kN = SpinMatrix::kDim;
constexpr int kMaxSweeps = 64;
constexpr double kConvergence = 1e-12;
constexpr double kHermitianTol = 1e-9;

double off_diagonal_norm(const SpinMatrix& a) {
  double sum = 0.0;
  for (std::size_t i = 0; i < kN; ++i)
    for (std::size_t j = 0; j < kN; ++j)
      if (i != j) sum += std::norm(a(i, j));
  return std::sqrt(sum);
}

SpinMatrix make_orthorhombic_x() {
  const auto& s = spin_operators();
  return s.sx * s.sx - s.sy * s.sy;
}

SpinMatrix make_orthorhombic_y() {
  const auto& s = spin_operators();
  return s.sx * s.sy + s.sy * s.sx;
}

}  // namespace

SpinMatrix SpinMatrix::identity() { return diagonal(1.0, 1.0, 1.0); }

SpinMatrix SpinMatrix::diagonal(double a, double b, double c) {
  SpinMatrix m;
  m(0, 0) = a;
  m(1, 1) = b;
  m(2, 2) = c;
  return m;
}

SpinMatrix SpinMatrix::adjoint() const {
  SpinMatrix out;
  for (std::size_t i = 0; i < kN; ++i)
    for (std::size_t j = 0; j < kN; ++j) out(i, j) = std::conj((*this)(j, i));
  return out;
}

Complex SpinMatrix::trace() const { return (*this)(0, 0) + (*this)(1, 1) + (*this)(2, 2); }

double SpinMatrix::frobenius_norm() const {
  double sum = 0.0;
  for (const auto& z : entries_) sum += std::norm(z);
  return std::sqrt(sum);
}

double SpinMatrix::hermitian_defect() const {
  const double scale = frobenius_norm();
  if (scale == 0.0) return 0.0;
  double worst = 0.0;
  for (std::size_t i = 0; i < kN; ++i)
    for (std::size_t j = i; j < kN; ++j)
      worst = std::max(worst, std::abs((*this)(i, j) - std::conj((*this)(j, i))));
  return worst / scale;
}

SpinMatrix& SpinMatrix::operator+=(const SpinMatrix& rhs) {
  for (std::size_t k = 0; k < entries_.size(); ++k) entries_[k] += rhs.entries_[k];
  return *this;
}

SpinMatrix& SpinMatrix::operator-=(const SpinMatrix& rhs) {
  for (std::size_t k = 0; k < entries_.size(); ++k) entries_[k] -= rhs.entries_[k];
  return *this;
}

SpinMatrix& SpinMatrix::operator*=(Complex s) {
  for (auto& z : entries_) z *= s;
  return *this;
}

SpinMatrix operator*(const SpinMatrix& lhs, const SpinMatrix& rhs) {
  SpinMatrix out;
  for (std::size_t i = 0; i < kN; ++i)
    for (std::size_t j = 0; j < kN; ++j) {
      Complex acc{};
      for (std::size_t k = 0; k < kN; ++k) acc += lhs(i, k) * rhs(k, j);
      out(i, j) = acc;
    }
  return out;
}

SpinVector operator*(const SpinMatrix& m, const SpinVector& v) {
  SpinVector out{};
  for (std::size_t i = 0; i < kN; ++i)
    for (std::size_t k = 0; k < kN; ++k) out[i] += m(i, k) * v[k];
  return out;
}

double ZfsParameters::e_eff() const { return std::hypot(e1, e2); }

double DTensor::frobenius_norm() const {
  double sum = 0.0;
  for (const auto& row : t)
    for (double x : row) sum += x * x;
  return std::sqrt(sum);
}

const SpinOperators& spin_operators() {
  static const SpinOperators ops = [] {
    const double r = 1.0 / std::sqrt(2.0);
    const Complex i{0.0, 1.0};
    SpinOperators s;
    // Basis {|+1>, |0>, |-1>}.
    s.sx(0, 1) = r;
    s.sx(1, 0) = r;
    s.sx(1, 2) = r;
    s.sx(2, 1) = r;
    s.sy(0, 1) = -i * r;
    s.sy(1, 0) = i * r;
    s.sy(1, 2) = -i * r;
    s.sy(2, 1) = i * r;
    s.sz = SpinMatrix::diagonal(1.0, 0.0, -1.0);
    return s;
  }();
  return ops;
}

const SpinMatrix& orthorhombic_x_operator() {
  static const SpinMatrix op = make_orthorhombic_x();
  return op;
}

const SpinMatrix& orthorhombic_y_operator() {
  static const SpinMatrix op = make_orthorhombic_y();
  return op;
}

SpinMatrix build_hamiltonian(const ZfsParameters& zfs, double detuning_mhz) {
  // D (Sz^2 - S(S+1)/3) with S(S+1)/3 = 2/3 kept so levels sit at -2D/3, D/3.
  const double axial_plus = zfs.d / 3.0;
  const double axial_zero = -2.0 * zfs.d / 3.0;
  SpinMatrix h = SpinMatrix::diagonal(axial_plus + detuning_mhz, axial_zero,
                                      axial_plus - detuning_mhz);
  h += orthorhombic_x_operator() * Complex{zfs.e1};
  h += orthorhombic_y_operator() * Complex{zfs.e2};
  return h;
}

ZfsParameters zfs_from_hamiltonian(const SpinMatrix& h) {
  // <+1|H|-1> = E1 - i E2 for the operators above.
  ZfsParameters out;
  out.d = 0.5 * (h(0, 0).real() + h(2, 2).real()) - h(1, 1).real();
  out.e1 = h(0, 2).real();
  out.e2 = -h(0, 2).imag();
  return out;
}

EigenSystem eigensolve(const SpinMatrix& h) {
  if (h.hermitian_defect() > kHermitianTol)
    throw InputError("eigensolve: matrix is not Hermitian");

  SpinMatrix a = h;
  SpinMatrix v = SpinMatrix::identity();
  const double scale = h.frobenius_norm();

  int sweep = 0;
  while (scale > 0.0 && off_diagonal_norm(a) >= kConvergence * scale) {
    if (++sweep > kMaxSweeps) throw NumericalError("eigensolve: Jacobi sweeps did not converge");
    for (std::size_t p = 0; p + 1 < kN; ++p) {
      for (std::size_t q = p + 1; q < kN; ++q) {
        const Complex b = a(p, q);
        const double mag = std::abs(b);
        if (mag == 0.0) continue;
        // Phase the (p,q) element real, then apply a real Givens rotation.
        const Complex phase = std::conj(b) / mag;  // e^{-i phi}
        const double theta = 0.5 * std::atan2(2.0 * mag, a(q, q).real() - a(p, p).real());
        const double c = std::cos(theta);
        const double s = std::sin(theta);
        SpinMatrix u = SpinMatrix::identity();
        u(p, p) = c;
        u(p, q) = s;
        u(q, p) = -s * phase;
        u(q, q) = c * phase;
        a = u.adjoint() * a * u;
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        v = v * u;
      }
    }
  }

  struct Pair {
    double value;
    SpinVector vec;
    std::size_t dominant;
  };
  std::array<Pair, kN> pairs;
  for (std::size_t k = 0; k < kN; ++k) {
    Pair& pr = pairs[k];
    pr.value = a(k, k).real();
    for (std::size_t i = 0; i < kN; ++i) pr.vec[i] = v(i, k);
    pr.dominant = 0;
    for (std::size_t i = 1; i < kN; ++i)
      if (std::norm(pr.vec[i]) > std::norm(pr.vec[pr.dominant])) pr.dominant = i;
    for (const Complex& z : pr.vec) {
      if (std::abs(z) > 1e-8) {
        const Complex rot = std::conj(z) / std::abs(z);
        for (Complex& w : pr.vec) w *= rot;
        break;
      }
    }
  }
  const double tie = 1e-10 * std::max(scale, 1.0);
  std::sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) {
    return x.value < y.value;
  });
  // Within a degenerate cluster, order by dominant basis index.
  for (std::size_t k = 0; k < kN;) {
    std::size_t end = k + 1;
    while (end < kN && pairs[end].value - pairs[k].value <= tie) ++end;
    std::stable_sort(pairs.begin() + static_cast<std::ptrdiff_t>(k),
                     pairs.begin() + static_cast<std::ptrdiff_t>(end),
                     [](const Pair& x, const Pair& y) { return x.dominant < y.dominant; });
    k = end;
  }

  EigenSystem out;
  for (std::size_t k = 0; k < kN; ++k) {
    out.values[k] = pairs[k].value;
    out.vectors[k] = pairs[k].vec;
  }
  return out;
}

Resonances resonance_frequencies(const SpinMatrix& h) {
  const EigenSystem es = eigensolve(h);
  std::size_t zero_like = 0;
  double best = -1.0;
  for (std::size_t k = 0; k < kN; ++k) {
    const double overlap = std::norm(es.vectors[k][1]);
    if (overlap > best) {
      best = overlap;
      zero_like = k;
    }
  }
  if (best < 0.5)
    throw NumericalError("resonance_frequencies: no eigenstate is m_S=0-like; perturbation too large");

  std::array<double, 2> f{};
  std::size_t n = 0;
  for (std::size_t k = 0; k < kN; ++k)
    if (k != zero_like) f[n++] = es.values[k] - es.values[zero_like];
  if (f[0] > f[1]) std::swap(f[0], f[1]);
  return {f[0], f[1]};
}

bool is_traceless(const DTensor& tensor, double rel_tol) {
  return std::abs(tensor.trace()) <= rel_tol * tensor.frobenius_norm();
}

ZfsParameters d_tensor_to_zfs(const DTensor& tensor) {
  if (!is_traceless(tensor))
    std::clog << "warning: D tensor trace " << tensor.trace() << " MHz is not zero\n";
  const auto& t = tensor.t;
  return {1.5 * t[2][2], 0.5 * (t[0][0] - t[1][1]), 0.5 * (t[0][1] + t[1][0])};
}

}  // namespace vbsim
