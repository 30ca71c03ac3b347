#pragma once

// Fock-space tight-binding lattice of the two-site Bose-Hubbard model.
//
// With N bosons the state lives on the N+1 Fock states |l, N-l>; the
// amplitudes obey  i dc_l/dz = -(kappa_l c_{l+1} + kappa_{l-1} c_{l-1}) + V_l c_l
// with kappa_l = J sqrt((l+1)(N-l)) and V_l = (U/2)(l^2 + (N-l)^2 - N).
// hbar = 1 and the evolution coordinate is the propagation distance z in mm,
// so every rate is in mm^-1.

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bhwg/tridiagonal.hpp"

namespace bhwg {

using complex = std::complex<double>;

/// Tolerance for "normalized" Fock states.
inline constexpr double kNormTolerance = 1e-10;

struct ModelParams {
  int N = 1;       // particle count
  double J = 0.0;  // hopping, mm^-1
  double U = 0.0;  // on-site interaction, mm^-1 (positive = repulsive)

  void validate() const {
    if (N < 1) throw std::invalid_argument("ModelParams: N must be >= 1 (got " + std::to_string(N) + ")");
    if (!(J > 0.0) || !std::isfinite(J)) throw std::invalid_argument("ModelParams: J must be positive");
    if (!std::isfinite(U)) throw std::invalid_argument("ModelParams: U must be finite");
  }
};

/// Couplings kappa_0..kappa_{N-1} and detunings V_0..V_N of the Fock lattice, mm^-1.
struct LatticeCoefficients {
  std::vector<double> kappa;
  std::vector<double> V;

  int N() const { return static_cast<int>(V.size()) - 1; }
  std::size_t sites() const { return V.size(); }

  void validate() const {
    if (V.size() < 2) throw std::invalid_argument("LatticeCoefficients: need at least two sites");
    if (kappa.size() + 1 != V.size())
      throw std::invalid_argument("LatticeCoefficients: kappa must have one entry fewer than V");
    for (double k : kappa)
      if (!(k > 0.0)) throw std::invalid_argument("LatticeCoefficients: couplings must be positive");
  }
};

struct FockState {
  std::vector<complex> c;
  double z = 0.0;  // mm

  int N() const { return static_cast<int>(c.size()) - 1; }

  double norm2() const {
    double s = 0.0;
    for (const auto& a : c) s += std::norm(a);
    return s;
  }

  /// All population on site `l`.
  static FockState localized(int N, int l, double z = 0.0) {
    if (N < 1 || l < 0 || l > N) throw std::invalid_argument("FockState::localized: site out of range");
    FockState s;
    s.c.assign(static_cast<std::size_t>(N) + 1, complex{0.0, 0.0});
    s.c[static_cast<std::size_t>(l)] = 1.0;
    s.z = z;
    return s;
  }
};

struct EvolutionTrace {
  std::vector<double> z_grid;  // mm
  std::vector<FockState> amplitudes;
  std::vector<double> imbalance;
};

inline LatticeCoefficients build_coefficients(const ModelParams& p) {
  if (p.N == 0) throw std::invalid_argument("build_coefficients: N = 0 is a degenerate single-site lattice");
  p.validate();
  LatticeCoefficients out;
  const int N = p.N;
  out.kappa.resize(static_cast<std::size_t>(N));
  out.V.resize(static_cast<std::size_t>(N) + 1);
  for (int l = 0; l < N; ++l)
    out.kappa[static_cast<std::size_t>(l)] = p.J * std::sqrt(double(l + 1) * double(N - l));
  for (int l = 0; l <= N; ++l) {
    const double ll = l, rr = N - l;
    out.V[static_cast<std::size_t>(l)] = 0.5 * p.U * (ll * ll + rr * rr - N);
  }
  return out;
}

/// H with diagonal V_l and off-diagonals -kappa_l; evolution is i dc/dz = H c.
inline SymTridiagonal build_hamiltonian(const LatticeCoefficients& coeffs) {
  coeffs.validate();
  SymTridiagonal h;
  h.diag = coeffs.V;
  h.off.resize(coeffs.kappa.size());
  for (std::size_t i = 0; i < coeffs.kappa.size(); ++i) h.off[i] = -coeffs.kappa[i];
  return h;
}

/// Ascending eigenvalues of H, mm^-1.
inline std::vector<double> spectrum(const LatticeCoefficients& coeffs) {
  return eigen_ql(build_hamiltonian(coeffs)).values;
}

/// P = sum_l (N-2l)/N |c_l|^2, normalized by the state norm. c = delta_{l,0} gives +1.
inline double population_imbalance(std::span<const double> probabilities) {
  const std::size_t n = probabilities.size();
  if (n < 2) throw std::invalid_argument("population_imbalance: need at least two sites");
  const double N = double(n - 1);
  double total = 0.0, acc = 0.0;
  for (std::size_t l = 0; l < n; ++l) {
    total += probabilities[l];
    acc += (N - 2.0 * double(l)) / N * probabilities[l];
  }
  if (!(total > 0.0)) throw std::invalid_argument("population_imbalance: zero-norm state");
  return acc / total;
}

inline std::vector<double> occupation_probabilities(const FockState& s) {
  std::vector<double> p(s.c.size());
  for (std::size_t l = 0; l < s.c.size(); ++l) p[l] = std::norm(s.c[l]);
  return p;
}

inline double population_imbalance(const FockState& s) {
  const auto p = occupation_probabilities(s);
  return population_imbalance(std::span<const double>(p));
}

/// Exact propagator exp(-i H dz) built once from the spectral decomposition of H.
class FockPropagator {
 public:
  explicit FockPropagator(const LatticeCoefficients& coeffs) : eig_(eigen_ql(build_hamiltonian(coeffs))) {}
  explicit FockPropagator(const SymTridiagonal& h) : eig_(eigen_ql(h)) {}

  std::size_t sites() const { return eig_.n; }
  const TridiagonalEigen& eigen() const { return eig_; }

  /// Amplitudes after a distance dz (mm) from `c0`.
  std::vector<complex> advance(std::span<const complex> c0, double dz) const {
    const std::size_t n = eig_.n;
    if (c0.size() != n) throw std::invalid_argument("FockPropagator: state dimension mismatch");
    std::vector<complex> modal(n, complex{});
    for (std::size_t k = 0; k < n; ++k) {
      complex acc{};
      for (std::size_t row = 0; row < n; ++row) acc += eig_.vec(row, k) * c0[row];
      modal[k] = acc * std::polar(1.0, -eig_.values[k] * dz);
    }
    std::vector<complex> out(n, complex{});
    for (std::size_t row = 0; row < n; ++row) {
      complex acc{};
      for (std::size_t k = 0; k < n; ++k) acc += eig_.vec(row, k) * modal[k];
      out[row] = acc;
    }
    return out;
  }

 private:
  TridiagonalEigen eig_;
};

inline void check_normalized(const FockState& s) {
  if (std::abs(s.norm2() - 1.0) > kNormTolerance)
    throw std::invalid_argument("evolve: initial state is not normalized (|c|^2 = " + std::to_string(s.norm2()) + ")");
}

/// Samples c(z) = exp(-i H (z - z0)) c(z0) on `z_grid`; z_grid[0] must equal state.z.
inline EvolutionTrace evolve(const FockState& state, const LatticeCoefficients& coeffs,
                             std::span<const double> z_grid) {
  coeffs.validate();
  if (state.c.size() != coeffs.sites()) throw std::invalid_argument("evolve: state/lattice size mismatch");
  check_normalized(state);
  if (z_grid.empty()) throw std::invalid_argument("evolve: empty z grid");
  if (z_grid.front() != state.z) throw std::invalid_argument("evolve: z grid must start at the state's z");
  for (std::size_t i = 1; i < z_grid.size(); ++i)
    if (!(z_grid[i] > z_grid[i - 1])) throw std::invalid_argument("evolve: z grid must be strictly increasing");

  const FockPropagator prop(coeffs);
  EvolutionTrace trace;
  trace.z_grid.assign(z_grid.begin(), z_grid.end());
  trace.amplitudes.reserve(z_grid.size());
  trace.imbalance.reserve(z_grid.size());
  for (double z : z_grid) {
    FockState s;
    s.z = z;
    s.c = (z == state.z) ? state.c : prop.advance(state.c, z - state.z);
    trace.imbalance.push_back(population_imbalance(s));
    trace.amplitudes.push_back(std::move(s));
  }
  return trace;
}

/// Uniform grid z0, z0+dz, ..., up to and including z_end (within rounding).
inline std::vector<double> uniform_grid(double z0, double z_end, double dz) {
  if (!(dz > 0.0) || !(z_end >= z0)) throw std::invalid_argument("uniform_grid: bad range");
  const auto count = static_cast<std::size_t>(std::floor((z_end - z0) / dz + 1e-9)) + 1;
  std::vector<double> z(count);
  for (std::size_t i = 0; i < count; ++i) z[i] = z0 + dz * double(i);
  return z;
}

}  // namespace bhwg
