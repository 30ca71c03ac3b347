#pragma once

// Waveguide-array synthesis for the Fock lattice.
//
// Units: transverse lengths in um, propagation constants and couplings in
// mm^-1, index contrasts dimensionless. The scalar paraxial operator used for
// every mode solve is
//     E u = -(lambdabar / 2 n_s) u'' - (dn(x) / lambdabar) u        [um^-1]
// so a guided mode has E < 0 and propagation-constant shift beta = -E.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <limits>
#include <mutex>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "bhwg/fock_core.hpp"
#include "bhwg/tridiagonal.hpp"

namespace bhwg {

inline constexpr double kPerUmToPerMm = 1000.0;

struct MaterialContext {
  double lambda_um = 0.633;
  double n_s = 1.45;

  double lambdabar_um() const { return lambda_um / (2.0 * std::numbers::pi); }

  void validate() const {
    if (!(lambda_um > 0.0)) throw std::invalid_argument("MaterialContext: wavelength must be positive");
    if (!(n_s > 1.0)) throw std::invalid_argument("MaterialContext: substrate index must exceed 1");
  }
};

/// Diffused channel of half-width w with erf edges of length D_x.
struct ChannelProfile {
  double w_um = 2.0;
  double Dx_um = 0.3;

  void validate() const {
    if (!(w_um > 0.0) || !(Dx_um > 0.0)) throw std::invalid_argument("ChannelProfile: w and D_x must be positive");
  }
};

/// g(x) = {erf[(x+w)/D_x] - erf[(x-w)/D_x]} / [2 erf(w/D_x)]
inline double channel_g(const ChannelProfile& p, double x) {
  return (std::erf((x + p.w_um) / p.Dx_um) - std::erf((x - p.w_um) / p.Dx_um)) / (2.0 * std::erf(p.w_um / p.Dx_um));
}

/// kappa(d) = kappa0 exp[-gamma (d - d_ref)]
struct CouplingFit {
  double kappa0 = 0.0;     // mm^-1
  double gamma = 0.0;      // um^-1
  double d_ref = 8.0;      // um
  double dn_ref = 2e-3;
  double residual_rms = 0.0;  // rms of ln-residuals (~ relative error)
  double d_min = 0.0, d_max = 0.0;  // sampled range, um

  double kappa(double d) const { return kappa0 * std::exp(-gamma * (d - d_ref)); }
  double distance(double kappa_target) const { return d_ref - std::log(kappa_target / kappa0) / gamma; }
};

struct ArrayLayout {
  std::vector<double> positions;  // x_l, um, ascending
  std::vector<double> contrasts;  // dn_l
  ChannelProfile channel;
  MaterialContext material;

  std::size_t channels() const { return positions.size(); }
  int N() const { return static_cast<int>(positions.size()) - 1; }

  /// d_l = x_l - x_{l-1} for l = 1..N (index l-1 in the returned vector).
  std::vector<double> spacings() const {
    std::vector<double> d;
    for (std::size_t l = 1; l < positions.size(); ++l) d.push_back(positions[l] - positions[l - 1]);
    return d;
  }

  /// Mean centre-to-centre pitch (x_N - x_0) / N.
  double mean_pitch() const {
    if (positions.size() < 2) return 0.0;
    return (positions.back() - positions.front()) / double(positions.size() - 1);
  }

  void validate() const {
    channel.validate();
    material.validate();
    if (positions.size() != contrasts.size())
      throw std::invalid_argument("ArrayLayout: positions and contrasts differ in length");
    for (double dn : contrasts)
      if (!(dn > 0.0)) throw std::invalid_argument("ArrayLayout: index contrasts must be positive");
    for (std::size_t l = 1; l < positions.size(); ++l)
      if (!(positions[l] - positions[l - 1] > 2.0 * channel.w_um))
        throw std::invalid_argument("ArrayLayout: channels " + std::to_string(l - 1) + " and " +
                                    std::to_string(l) + " overlap");
  }
};

/// n(x) - n_s = sum_l dn_l g(x - x_l). Channels are raised-index (guiding).
inline double index_profile(const ArrayLayout& layout, double x) {
  double s = 0.0;
  for (std::size_t l = 0; l < layout.positions.size(); ++l)
    s += layout.contrasts[l] * channel_g(layout.channel, x - layout.positions[l]);
  return s;
}

inline std::vector<double> index_profile(const ArrayLayout& layout, std::span<const double> xs) {
  std::vector<double> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = index_profile(layout, xs[i]);
  return out;
}

struct ModeSolverOptions {
  double dx_um = 0.02;
  double margin_um = 25.0;  // padding beyond the outer channel edges
};

/// Real mode sampled on a uniform grid, L2-normalized (sum u^2 dx = 1).
struct SampledMode {
  double x0_um = 0.0;
  double dx_um = 0.0;
  std::vector<double> u;

  /// Linear interpolation; zero outside the sampled window.
  double at(double x) const {
    const double s = (x - x0_um) / dx_um;
    if (s < 0.0 || s > double(u.size() - 1)) return 0.0;
    const auto i = static_cast<std::size_t>(s);
    if (i + 1 >= u.size()) return u.back();
    const double f = s - double(i);
    return (1.0 - f) * u[i] + f * u[i + 1];
  }
};

struct ModeSolution {
  double beta_shift = 0.0;       // mm^-1, at the working resolution
  double beta_richardson = 0.0;  // extrapolated from dx and dx/2
  double discretization_error = 0.0;  // |beta(dx/2) - beta(dx)|
  std::size_t bound_modes = 0;
  bool multimode = false;
  SampledMode mode;  // centred on the channel, even, positive at the centre
};

struct SupermodeSet {
  std::vector<double> beta;  // mm^-1, descending (fundamental first)
  std::vector<std::vector<double>> modes;  // L2-normalized on the grid
  double x0_um = 0.0;
  double dx_um = 0.0;
  std::size_t samples = 0;
};

namespace detail {

inline SymTridiagonal paraxial_operator(const MaterialContext& mat, std::span<const double> dn_samples, double dx) {
  const double lb = mat.lambdabar_um();
  const double a = lb / (2.0 * mat.n_s) / (dx * dx);
  SymTridiagonal t;
  t.diag.resize(dn_samples.size());
  t.off.assign(dn_samples.size() - 1, -a);
  for (std::size_t i = 0; i < dn_samples.size(); ++i) t.diag[i] = 2.0 * a - dn_samples[i] / lb;
  return t;
}

inline std::vector<double> normalized_l2(std::vector<double> v, double dx) {
  double s = 0.0;
  for (double x : v) s += x * x;
  s = std::sqrt(s * dx);
  double sum = 0.0;
  for (double x : v) sum += x;
  const double sign = sum < 0.0 ? -1.0 : 1.0;
  for (double& x : v) x *= sign / s;
  return v;
}

struct SingleSolve {
  double beta;
  std::size_t bound;
  std::vector<double> u;
  double x0;
};

inline SingleSolve solve_single_at(const MaterialContext& mat, const ChannelProfile& ch, double dn, double dx,
                                   double margin) {
  const double half = ch.w_um + margin;
  const auto nh = static_cast<std::size_t>(std::ceil(half / dx));
  const std::size_t n = 2 * nh + 1;
  std::vector<double> dns(n);
  for (std::size_t i = 0; i < n; ++i) dns[i] = dn * channel_g(ch, (double(i) - double(nh)) * dx);
  const auto t = paraxial_operator(mat, dns, dx);
  const std::size_t bound = sturm_count(t, 0.0);
  if (bound == 0) throw std::domain_error("solve_single_mode: no bound mode for dn = " + std::to_string(dn));
  auto pairs = lowest_eigenpairs(t, 1);
  SingleSolve s;
  s.beta = -pairs[0].value * kPerUmToPerMm;
  s.bound = bound;
  s.u = normalized_l2(std::move(pairs[0].vector), dx);
  s.x0 = -double(nh) * dx;
  return s;
}

}  // namespace detail

/// Fundamental mode of one channel of contrast `dn`, with a two-resolution
/// Richardson estimate of the discretization error.
inline ModeSolution solve_single_mode(const MaterialContext& mat, const ChannelProfile& ch, double dn,
                                      const ModeSolverOptions& opt = {}) {
  mat.validate();
  ch.validate();
  if (!(dn > 0.0)) throw std::domain_error("solve_single_mode: dn must be positive");
  auto coarse = detail::solve_single_at(mat, ch, dn, opt.dx_um, opt.margin_um);
  const auto fine = detail::solve_single_at(mat, ch, dn, 0.5 * opt.dx_um, opt.margin_um);
  ModeSolution out;
  out.beta_shift = coarse.beta;
  out.beta_richardson = (4.0 * fine.beta - coarse.beta) / 3.0;
  out.discretization_error = std::abs(fine.beta - coarse.beta);
  out.bound_modes = coarse.bound;
  out.multimode = coarse.bound > 1;
  out.mode = SampledMode{coarse.x0, opt.dx_um, std::move(coarse.u)};
  return out;
}

/// Mode solver with a memo of single-channel solutions keyed by exact dn.
/// Safe to share between threads.
class ModeSolver {
 public:
  ModeSolver(MaterialContext mat, ChannelProfile ch, ModeSolverOptions opt = {})
      : mat_(mat), ch_(ch), opt_(opt) {
    mat_.validate();
    ch_.validate();
  }

  const MaterialContext& material() const { return mat_; }
  const ChannelProfile& channel() const { return ch_; }
  const ModeSolverOptions& options() const { return opt_; }

  /// Single-resolution solve (no Richardson pass); cached.
  std::shared_ptr<const ModeSolution> single(double dn) const {
    {
      std::lock_guard lock(mu_);
      if (auto it = cache_.find(dn); it != cache_.end()) return it->second;
    }
    if (!(dn > 0.0)) throw std::domain_error("ModeSolver: dn must be positive");
    auto s = detail::solve_single_at(mat_, ch_, dn, opt_.dx_um, opt_.margin_um);
    auto sol = std::make_shared<ModeSolution>();
    sol->beta_shift = s.beta;
    sol->beta_richardson = s.beta;
    sol->bound_modes = s.bound;
    sol->multimode = s.bound > 1;
    sol->mode = SampledMode{s.x0, opt_.dx_um, std::move(s.u)};
    std::lock_guard lock(mu_);
    return cache_.emplace(dn, std::move(sol)).first->second;
  }

  double beta(double dn) const { return single(dn)->beta_shift; }

  /// d beta / d dn by central difference, mm^-1 per unit contrast.
  double beta_slope(double dn) const {
    const double h = 1e-3 * dn;
    return (beta(dn + h) - beta(dn - h)) / (2.0 * h);
  }

  /// The `count` highest-beta supermodes of an arbitrary channel set.
  SupermodeSet supermodes(std::span<const double> positions, std::span<const double> contrasts,
                          std::size_t count) const {
    if (positions.empty() || positions.size() != contrasts.size())
      throw std::invalid_argument("supermodes: bad channel set");
    const double dx = opt_.dx_um;
    const auto [mn, mx] = std::minmax_element(positions.begin(), positions.end());
    const double pad = ch_.w_um + opt_.margin_um;
    // Grid nodes sit on integer multiples of dx so that a symmetric layout
    // gives a symmetric discretization.
    const double x_lo = std::floor((*mn - pad) / dx) * dx;
    const double x_hi = std::ceil((*mx + pad) / dx) * dx;
    const auto n = static_cast<std::size_t>(std::llround((x_hi - x_lo) / dx)) + 1;
    std::vector<double> dns(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = x_lo + double(i) * dx;
      for (std::size_t l = 0; l < positions.size(); ++l) dns[i] += contrasts[l] * channel_g(ch_, x - positions[l]);
    }
    const auto t = detail::paraxial_operator(mat_, dns, dx);
    const std::size_t bound = sturm_count(t, 0.0);
    if (bound < count)
      throw std::domain_error("supermodes: only " + std::to_string(bound) + " bound supermodes, need " +
                              std::to_string(count));
    auto pairs = lowest_eigenpairs(t, count);
    SupermodeSet out;
    out.x0_um = x_lo;
    out.dx_um = dx;
    out.samples = n;
    for (auto& p : pairs) {
      out.beta.push_back(-p.value * kPerUmToPerMm);
      out.modes.push_back(detail::normalized_l2(std::move(p.vector), dx));
    }
    return out;
  }

  /// Half the symmetric/antisymmetric splitting of two identical channels at separation d.
  double coupling(double dn, double d) const {
    if (!(d > 2.0 * ch_.w_um)) throw std::domain_error("coupling_vs_distance: channels overlap (d <= 2w)");
    const double pos[2] = {-0.5 * d, 0.5 * d};
    const double con[2] = {dn, dn};
    const auto sm = supermodes(pos, con, 2);
    const double kappa = 0.5 * (sm.beta[0] - sm.beta[1]);
    // Bisection resolves eigenvalues to ~eps * |operator|; demand a comfortable margin.
    const double a = mat_.lambdabar_um() / (2.0 * mat_.n_s) / (opt_.dx_um * opt_.dx_um);
    const double resolution = 1e3 * std::numeric_limits<double>::epsilon() * 4.0 * a * kPerUmToPerMm;
    if (!(kappa > resolution))
      throw std::domain_error("coupling_vs_distance: splitting below solver resolution at d = " + std::to_string(d));
    return kappa;
  }

 private:
  MaterialContext mat_;
  ChannelProfile ch_;
  ModeSolverOptions opt_;
  mutable std::mutex mu_;
  mutable std::map<double, std::shared_ptr<const ModeSolution>> cache_;
};

inline double coupling_vs_distance(const MaterialContext& mat, const ChannelProfile& ch, double dn_ref, double d,
                                   const ModeSolverOptions& opt = {}) {
  return ModeSolver(mat, ch, opt).coupling(dn_ref, d);
}

struct CouplingSample {
  double d;      // um
  double kappa;  // mm^-1
};

/// Least-squares fit of ln kappa = ln kappa0 - gamma (d - d_ref).
inline CouplingFit fit_coupling_law(std::span<const CouplingSample> samples, double d_ref, double dn_ref = 2e-3) {
  if (samples.size() < 4) throw std::invalid_argument("fit_coupling_law: need at least four samples");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  double dmin = samples[0].d, dmax = samples[0].d;
  for (const auto& s : samples) {
    if (!(s.kappa > 0.0)) throw std::invalid_argument("fit_coupling_law: non-positive coupling sample");
    const double x = s.d - d_ref, y = std::log(s.kappa);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    dmin = std::min(dmin, s.d);
    dmax = std::max(dmax, s.d);
  }
  if (!(dmin < d_ref && dmax > d_ref)) throw std::invalid_argument("fit_coupling_law: samples must span d_ref");
  const double n = double(samples.size());
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double icpt = (sy - slope * sx) / n;
  CouplingFit fit;
  fit.kappa0 = std::exp(icpt);
  fit.gamma = -slope;
  fit.d_ref = d_ref;
  fit.dn_ref = dn_ref;
  fit.d_min = dmin;
  fit.d_max = dmax;
  double ss = 0.0;
  for (const auto& s : samples) {
    const double r = std::log(s.kappa) - (icpt + slope * (s.d - d_ref));
    ss += r * r;
  }
  fit.residual_rms = std::sqrt(ss / n);
  if (!(fit.gamma > 0.0)) throw std::domain_error("fit_coupling_law: coupling does not decay with distance");
  return fit;
}

struct CouplingCharacterization {
  std::vector<CouplingSample> samples;
  CouplingFit fit;
};

/// Samples kappa(d) on `count` evenly spaced distances in [d_min, d_max] and fits the exponential law.
inline CouplingCharacterization characterize_coupling(const ModeSolver& solver, double dn_ref, double d_ref,
                                                      double d_min, double d_max, int count) {
  if (count < 4 || !(d_max > d_min)) throw std::invalid_argument("characterize_coupling: bad sampling range");
  CouplingCharacterization out;
  for (int i = 0; i < count; ++i) {
    const double d = d_min + (d_max - d_min) * double(i) / double(count - 1);
    out.samples.push_back({d, solver.coupling(dn_ref, d)});
  }
  out.fit = fit_coupling_law(out.samples, d_ref, dn_ref);
  return out;
}

/// d_l = d_ref - ln(kappa_{l-1} / kappa0) / gamma for every target coupling.
inline std::vector<double> design_spacings(const CouplingFit& fit, std::span<const double> kappa_targets,
                                           double min_spacing_um) {
  std::vector<double> d;
  d.reserve(kappa_targets.size());
  for (double k : kappa_targets) {
    if (!(k > 0.0)) throw std::domain_error("design_spacings: coupling targets must be positive");
    const double dist = fit.distance(k);
    if (!(dist > min_spacing_um))
      throw std::domain_error("design_spacings: target kappa = " + std::to_string(k) +
                              " mm^-1 needs d = " + std::to_string(dist) + " um, below the minimum spacing");
    d.push_back(dist);
  }
  return d;
}

/// Contrast dn such that beta(dn) - beta(dn_ref) = -V_target (V > 0 lowers beta).
inline double design_contrast(const ModeSolver& solver, double dn_ref, double V_target, double tol) {
  if (V_target == 0.0) return dn_ref;
  const double b_ref = solver.beta(dn_ref);
  auto f = [&](double dn) { return solver.beta(dn) - b_ref + V_target; };
  const double slope = solver.beta_slope(dn_ref);
  double guess = dn_ref - V_target / slope;
  double step = std::abs(V_target / slope) + 1e-6 * dn_ref;
  double lo = guess - step, hi = guess + step;
  auto guarded = [&](double dn) {
    if (!(dn > 0.0)) throw std::domain_error("design_contrasts: bracketing reached dn <= 0 for V = " +
                                             std::to_string(V_target));
    return f(dn);
  };
  double flo = guarded(lo), fhi = guarded(hi);
  for (int it = 0; flo > 0.0 && it < 40; ++it) {
    lo -= step;
    step *= 2.0;
    flo = guarded(lo);
  }
  for (int it = 0; fhi < 0.0 && it < 40; ++it) {
    hi += step;
    step *= 2.0;
    fhi = guarded(hi);
  }
  if (flo > 0.0 || fhi < 0.0)
    throw std::domain_error("design_contrasts: V = " + std::to_string(V_target) + " outside the monotone range");
  // Illinois regula falsi.
  int side = 0;
  for (int it = 0; it < 200; ++it) {
    const double mid = (lo * fhi - hi * flo) / (fhi - flo);
    const double fm = f(mid);
    if (std::abs(fm) <= tol || hi - lo <= 1e-15 * dn_ref) return mid;
    if (fm < 0.0) {
      lo = mid;
      flo = fm;
      if (side == -1) fhi *= 0.5;
      side = -1;
    } else {
      hi = mid;
      fhi = fm;
      if (side == 1) flo *= 0.5;
      side = 1;
    }
  }
  return 0.5 * (lo + hi);
}

inline std::vector<double> design_contrasts(const ModeSolver& solver, double dn_ref, std::span<const double> V_targets) {
  double vmax = 0.0;
  for (double v : V_targets) vmax = std::max(vmax, std::abs(v));
  const double tol = std::max(1e-9 * vmax, 1e-12);
  std::vector<double> out;
  for (double v : V_targets) out.push_back(design_contrast(solver, dn_ref, v, tol));
  return out;
}

/// Tight-binding lattice actually realized by a layout: the N+1 guided
/// supermodes expressed in the symmetrically orthonormalized basis of the
/// isolated-channel modes.
struct RealizedLattice {
  Eigen::MatrixXd beta_matrix;  // effective propagation-constant matrix, mm^-1
  std::vector<double> kappa;    // nearest-neighbour couplings, mm^-1
  std::vector<double> V;        // -(diag - mean diag), mm^-1
  std::vector<double> supermode_beta;  // descending
  double subspace_overlap = 1.0;       // smallest singular value of the basis overlap

  /// Fock-convention Hamiltonian: -beta_matrix shifted to zero mean diagonal.
  Eigen::MatrixXd fock_hamiltonian() const {
    const double mean = beta_matrix.diagonal().mean();
    return -(beta_matrix - mean * Eigen::MatrixXd::Identity(beta_matrix.rows(), beta_matrix.cols()));
  }
};

inline RealizedLattice extract_lattice(const ModeSolver& solver, const ArrayLayout& layout) {
  layout.validate();
  const std::size_t n = layout.channels();
  const auto sm = solver.supermodes(layout.positions, layout.contrasts, n);
  const double dx = sm.dx_um;
  Eigen::MatrixXd local(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(sm.samples));
  for (std::size_t l = 0; l < n; ++l) {
    const auto mode = solver.single(layout.contrasts[l]);
    for (std::size_t i = 0; i < sm.samples; ++i)
      local(Eigen::Index(l), Eigen::Index(i)) = mode->mode.at(sm.x0_um + double(i) * dx - layout.positions[l]);
  }
  // Renormalize after interpolation.
  for (Eigen::Index l = 0; l < local.rows(); ++l) local.row(l) /= std::sqrt(local.row(l).squaredNorm() * dx);

  const Eigen::MatrixXd S = local * local.transpose() * dx;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  const Eigen::MatrixXd S_inv_half =
      es.eigenvectors() * es.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
  const Eigen::MatrixXd ortho = S_inv_half * local;

  Eigen::MatrixXd super(static_cast<Eigen::Index>(sm.samples), static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < sm.samples; ++i) super(Eigen::Index(i), Eigen::Index(k)) = sm.modes[k][i];
  const Eigen::MatrixXd A = ortho * super * dx;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::MatrixXd polar = svd.matrixU() * svd.matrixV().transpose();
  Eigen::VectorXd b(static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < n; ++k) b(Eigen::Index(k)) = sm.beta[k];

  RealizedLattice out;
  out.beta_matrix = polar * b.asDiagonal() * polar.transpose();
  out.beta_matrix = 0.5 * (out.beta_matrix + out.beta_matrix.transpose()).eval();
  out.subspace_overlap = svd.singularValues().minCoeff();
  out.supermode_beta = sm.beta;
  const double mean = out.beta_matrix.diagonal().mean();
  for (std::size_t l = 0; l < n; ++l) out.V.push_back(-(out.beta_matrix(Eigen::Index(l), Eigen::Index(l)) - mean));
  for (std::size_t l = 0; l + 1 < n; ++l) out.kappa.push_back(out.beta_matrix(Eigen::Index(l), Eigen::Index(l + 1)));
  return out;
}

/// Which inverse-design stages to run.
enum class DesignRefinement {
  first_order,   // fit inversion + isolated-channel contrasts
  coefficients,  // + fixed-point match of realized kappa_l and V_l
  spectral,      // + Newton match of the supermode spectrum
  automatic,     // coefficients or spectral, whichever predicts the better edge-launch dynamics
};

struct DesignOptions {
  DesignRefinement refinement = DesignRefinement::automatic;
  int max_iterations = 12;
  double coefficient_tolerance = 1e-7;  // relative on kappa, absolute (mm^-1) on V
  double spectral_tolerance = 1e-9;     // mm^-1
  double prediction_horizon_mm = 100.0;
};

struct DesignReport {
  DesignRefinement used = DesignRefinement::first_order;
  int coefficient_iterations = 0;
  int spectral_iterations = 0;
  double kappa_error = 0.0;   // max relative, realized vs target
  double V_error = 0.0;       // max absolute, mm^-1
  double spectral_error = 0.0;  // max absolute supermode spectrum mismatch, mm^-1
  double predicted_imbalance_error = 0.0;  // max |P_realized - P_target| over the horizon
  std::optional<double> predicted_error_coefficients;
  std::optional<double> predicted_error_spectral;
};

struct ArrayDesign {
  ModelParams params;
  LatticeCoefficients targets;
  std::vector<double> V_gauged;  // targets with the mean removed
  ArrayLayout layout;
  RealizedLattice realized;
  DesignReport report;
};

inline const char* to_string(DesignRefinement r) {
  switch (r) {
    case DesignRefinement::first_order: return "first_order";
    case DesignRefinement::coefficients: return "coefficients";
    case DesignRefinement::spectral: return "spectral";
    case DesignRefinement::automatic: return "automatic";
  }
  return "?";
}

namespace detail {

/// Positions centred on zero from spacings; exact mirror symmetry when the spacings are palindromic.
inline std::vector<double> positions_from_spacings(std::span<const double> d) {
  const std::size_t n = d.size() + 1;
  std::vector<double> x(n, 0.0);
  // Build outward from the centre so that x_l = -x_{N-l} holds bitwise.
  if (n % 2 == 1) {
    const std::size_t c = n / 2;
    for (std::size_t k = 1; c + k < n; ++k) {
      x[c + k] = x[c + k - 1] + d[c + k - 1];
      x[c - k] = -x[c + k];
    }
  } else {
    const std::size_t c = n / 2;  // x[c-1] = -d/2, x[c] = +d/2
    x[c] = 0.5 * d[c - 1];
    x[c - 1] = -x[c];
    for (std::size_t k = 1; c + k < n; ++k) {
      x[c + k] = x[c + k - 1] + d[c + k - 1];
      x[c - 1 - k] = -x[c + k];
    }
  }
  return x;
}

template <class T>
void symmetrize(std::vector<T>& v) {
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n / 2; ++i) {
    const T m = 0.5 * (v[i] + v[n - 1 - i]);
    v[i] = m;
    v[n - 1 - i] = m;
  }
}

/// max_z |P(z)| difference between two Fock Hamiltonians for the edge launch.
inline double imbalance_discrepancy(const Eigen::MatrixXd& h_a, const Eigen::MatrixXd& h_b, double horizon,
                                    double dz = 0.5) {
  const Eigen::Index n = h_a.rows();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ea(h_a), eb(h_b);
  const double N = double(n - 1);
  double worst = 0.0;
  for (double z = 0.0; z <= horizon + 1e-9; z += dz) {
    auto P = [&](const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>& es) {
      Eigen::VectorXcd modal(n);
      for (Eigen::Index k = 0; k < n; ++k)
        modal(k) = es.eigenvectors()(0, k) * std::polar(1.0, -es.eigenvalues()(k) * z);
      const Eigen::VectorXcd c = es.eigenvectors().cast<complex>() * modal;
      double p = 0.0;
      for (Eigen::Index l = 0; l < n; ++l) p += (N - 2.0 * double(l)) / N * std::norm(c(l));
      return p;
    };
    worst = std::max(worst, std::abs(P(ea) - P(eb)));
  }
  return worst;
}

inline Eigen::MatrixXd dense_fock(const LatticeCoefficients& c, std::span<const double> V) {
  const Eigen::Index n = Eigen::Index(c.sites());
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index l = 0; l < n; ++l) h(l, l) = V[std::size_t(l)];
  for (Eigen::Index l = 0; l + 1 < n; ++l) h(l, l + 1) = h(l + 1, l) = -c.kappa[std::size_t(l)];
  return h;
}

}  // namespace detail

/// Builds the layout for `params`: coupling-law inversion for the spacings,
/// isolated-channel root finding for the contrasts, then the refinement
/// stages selected in `opts`. The layout is centred (sum x_l = 0) and mirror symmetric.
inline ArrayDesign assemble_array(const ModelParams& params, const ModeSolver& solver, const CouplingFit& fit,
                                  const DesignOptions& opts = {}) {
  ArrayDesign des;
  des.params = params;
  des.targets = build_coefficients(params);
  const auto& kt = des.targets.kappa;
  double vmean = 0.0;
  for (double v : des.targets.V) vmean += v;
  vmean /= double(des.targets.V.size());
  for (double v : des.targets.V) des.V_gauged.push_back(v - vmean);
  const std::size_t n = des.targets.sites();
  const double min_spacing = 2.0 * solver.channel().w_um;

  auto spacings = design_spacings(fit, kt, min_spacing);
  detail::symmetrize(spacings);
  auto contrasts = design_contrasts(solver, fit.dn_ref, des.V_gauged);
  detail::symmetrize(contrasts);

  auto make_layout = [&](const std::vector<double>& d, const std::vector<double>& dn) {
    ArrayLayout lay;
    lay.positions = detail::positions_from_spacings(d);
    lay.contrasts = dn;
    lay.channel = solver.channel();
    lay.material = solver.material();
    lay.validate();
    return lay;
  };

  des.layout = make_layout(spacings, contrasts);
  const Eigen::MatrixXd h_target = detail::dense_fock(des.targets, des.V_gauged);

  auto errors = [&](const RealizedLattice& r) {
    double ke = 0.0, ve = 0.0;
    for (std::size_t l = 0; l + 1 < n; ++l) ke = std::max(ke, std::abs(r.kappa[l] / kt[l] - 1.0));
    for (std::size_t l = 0; l < n; ++l) ve = std::max(ve, std::abs(r.V[l] - des.V_gauged[l]));
    return std::pair{ke, ve};
  };

  auto finish = [&](DesignRefinement used) {
    des.realized = extract_lattice(solver, des.layout);
    auto [ke, ve] = errors(des.realized);
    des.report.used = used;
    des.report.kappa_error = ke;
    des.report.V_error = ve;
    des.report.predicted_imbalance_error =
        detail::imbalance_discrepancy(des.realized.fock_hamiltonian(), h_target, opts.prediction_horizon_mm);
    return des;
  };

  if (opts.refinement == DesignRefinement::first_order) return finish(DesignRefinement::first_order);

  // Coefficient refinement: correct spacings through the fitted exponential
  // law and contrasts through the local slope d beta / d dn.
  for (int it = 0; it < opts.max_iterations; ++it) {
    const auto r = extract_lattice(solver, des.layout);
    auto [ke, ve] = errors(r);
    des.report.coefficient_iterations = it;
    if (ke < opts.coefficient_tolerance && ve < opts.coefficient_tolerance) break;
    for (std::size_t l = 0; l + 1 < n; ++l) spacings[l] += std::log(r.kappa[l] / kt[l]) / fit.gamma;
    for (std::size_t l = 0; l < n; ++l) contrasts[l] += (r.V[l] - des.V_gauged[l]) / solver.beta_slope(contrasts[l]);
    detail::symmetrize(spacings);
    detail::symmetrize(contrasts);
    des.layout = make_layout(spacings, contrasts);
  }
  if (opts.refinement == DesignRefinement::coefficients) return finish(DesignRefinement::coefficients);

  const ArrayLayout coefficient_layout = des.layout;
  const auto coefficient_realized = extract_lattice(solver, coefficient_layout);
  const double coefficient_prediction = detail::imbalance_discrepancy(
      coefficient_realized.fock_hamiltonian(), h_target, opts.prediction_horizon_mm);

  // Spectral polish over the mirror-symmetric parameters: ceil(N/2)
  // spacings and ceil((N+1)/2) contrasts, N+1 unknowns for N+1 eigenvalues.
  const std::size_t nd = (n - 1 + 1) / 2, nc = (n + 1) / 2;
  auto unpack = [&](const Eigen::VectorXd& p) {
    std::vector<double> d(n - 1), dn(n);
    for (std::size_t i = 0; i < nd; ++i) d[i] = d[n - 2 - i] = p(Eigen::Index(i));
    for (std::size_t i = 0; i < nc; ++i) dn[i] = dn[n - 1 - i] = p(Eigen::Index(nd + i));
    return make_layout(d, dn);
  };
  Eigen::VectorXd p(static_cast<Eigen::Index>(nd + nc));
  for (std::size_t i = 0; i < nd; ++i) p(Eigen::Index(i)) = spacings[i];
  for (std::size_t i = 0; i < nc; ++i) p(Eigen::Index(nd + i)) = contrasts[i];

  const auto target_eigs = spectrum(des.targets);  // ascending, Fock convention
  double c = 0.0;
  for (double b : coefficient_realized.supermode_beta) c += b;
  for (double e : target_eigs) c += e;
  c /= double(n);
  auto residual = [&](const Eigen::VectorXd& q) {
    const auto lay = unpack(q);
    const auto sm = solver.supermodes(lay.positions, lay.contrasts, n);
    Eigen::VectorXd r(static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < n; ++k) r(Eigen::Index(k)) = sm.beta[k] - (c - target_eigs[k]);
    return r;
  };
  Eigen::VectorXd r = residual(p);
  int it = 0;
  for (; it < opts.max_iterations && r.cwiseAbs().maxCoeff() > opts.spectral_tolerance; ++it) {
    Eigen::MatrixXd jac(r.size(), p.size());
    for (Eigen::Index j = 0; j < p.size(); ++j) {
      const double h = (std::size_t(j) < nd) ? 1e-4 : 1e-8;
      Eigen::VectorXd q = p;
      q(j) += h;
      jac.col(j) = (residual(q) - r) / h;
    }
    const Eigen::VectorXd step = jac.colPivHouseholderQr().solve(r);
    double scale = 1.0;
    bool accepted = false;
    for (int k = 0; k < 12; ++k, scale *= 0.5) {
      Eigen::VectorXd q = p - scale * step;
      try {
        const auto rq = residual(q);
        if (rq.norm() < r.norm()) {
          p = q;
          r = rq;
          accepted = true;
          break;
        }
      } catch (const std::exception&) {
        // infeasible trial (overlapping channels, lost guidance): shorten the step
      }
    }
    if (!accepted) break;
  }
  des.report.spectral_iterations = it;
  des.report.spectral_error = r.cwiseAbs().maxCoeff();
  des.layout = unpack(p);
  if (opts.refinement == DesignRefinement::spectral) return finish(DesignRefinement::spectral);

  const auto spectral_realized = extract_lattice(solver, des.layout);
  const double spectral_prediction = detail::imbalance_discrepancy(spectral_realized.fock_hamiltonian(), h_target,
                                                                   opts.prediction_horizon_mm);
  des.report.predicted_error_coefficients = coefficient_prediction;
  des.report.predicted_error_spectral = spectral_prediction;
  if (coefficient_prediction <= spectral_prediction) {
    des.layout = coefficient_layout;
    return finish(DesignRefinement::coefficients);
  }
  return finish(DesignRefinement::spectral);
}

}  // namespace bhwg
