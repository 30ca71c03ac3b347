#pragma once

// Pseudospectral split-step beam propagation for the scalar paraxial equation
//     i lambdabar d_z phi = -(lambdabar^2 / 2 n_s) d_x^2 phi + [n_s - n(x)] phi
// on a periodic transverse grid with a raised-cosine absorber at both edges.
// Internally z and x are in um; recorded traces report z in mm.

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bhwg/fock_core.hpp"
#include "bhwg/waveguide_optics.hpp"

namespace bhwg {

struct Grid {
  double x_min = -64.0;  // um
  double x_max = 64.0;   // um; periodic, x_max is not a sample
  std::size_t n_x = 2048;
  double dz_um = 0.5;
  double z_end_um = 100000.0;

  double dx() const { return (x_max - x_min) / double(n_x); }
  double x(std::size_t i) const { return x_min + double(i) * dx(); }

  /// Angular spatial frequency of FFT bin j, um^-1.
  double kx(std::size_t j) const {
    const double dk = 2.0 * std::numbers::pi / (x_max - x_min);
    const auto jj = static_cast<long long>(j);
    const auto n = static_cast<long long>(n_x);
    return dk * double(jj < n / 2 ? jj : jj - n);
  }

  std::vector<double> xs() const {
    std::vector<double> v(n_x);
    for (std::size_t i = 0; i < n_x; ++i) v[i] = x(i);
    return v;
  }

  void validate() const {
    if (n_x < 8 || (n_x & (n_x - 1)) != 0) throw std::invalid_argument("Grid: n_x must be a power of two");
    if (!(x_max > x_min)) throw std::invalid_argument("Grid: empty transverse window");
    if (!(dz_um > 0.0) || !(z_end_um >= 0.0)) throw std::invalid_argument("Grid: bad z stepping");
  }
};

/// Grid symmetric about x = 0 covering the array with `margin_um` beyond the outer channel edges.
inline Grid make_grid(const ArrayLayout& layout, double margin_um = 20.0, std::size_t n_x = 2048,
                      double dz_um = 0.5, double z_end_mm = 100.0) {
  if (layout.positions.empty()) throw std::invalid_argument("make_grid: empty layout");
  const double reach = std::max(std::abs(layout.positions.front()), std::abs(layout.positions.back()));
  const double half = reach + layout.channel.w_um + margin_um;
  Grid g;
  g.x_min = -half;
  g.x_max = half;
  g.n_x = n_x;
  g.dz_um = dz_um;
  g.z_end_um = z_end_mm * 1000.0;
  g.validate();
  return g;
}

struct Field {
  std::vector<complex> samples;
  double z_um = 0.0;

  double power(double dx) const {
    double s = 0.0;
    for (const auto& v : samples) s += std::norm(v);
    return s * dx;
  }
};

/// Raised-cosine absorbing layer: loss rate ramps from 0 to `strength_per_um` over `width_um` at each edge.
struct Absorber {
  double width_um = 10.0;
  double strength_per_um = 0.02;

  double rate(const Grid& g, double x) const {
    if (!(width_um > 0.0) || !(strength_per_um > 0.0)) return 0.0;
    const double depth = std::max(x - (g.x_max - width_um), (g.x_min + width_um) - x);
    if (depth <= 0.0) return 0.0;
    const double s = std::min(depth / width_um, 1.0);
    return strength_per_um * 0.5 * (1.0 - std::cos(std::numbers::pi * s));
  }

  static Absorber none() { return Absorber{0.0, 0.0}; }
};

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

// Owns an FFTW work buffer and its forward/backward plans. Planning goes
// through a global mutex because the FFTW planner is not re-entrant.
class FftWorkspace {
 public:
  explicit FftWorkspace(std::size_t n) : n_(n) {
    std::lock_guard lock(fftw_planner_mutex());
    buf_ = fftw_alloc_complex(n);
    if (!buf_) throw std::bad_alloc();
    fwd_ = fftw_plan_dft_1d(int(n), buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_1d(int(n), buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~FftWorkspace() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
    fftw_free(buf_);
  }
  FftWorkspace(const FftWorkspace&) = delete;
  FftWorkspace& operator=(const FftWorkspace&) = delete;

  complex* data() { return reinterpret_cast<complex*>(buf_); }
  void forward() { fftw_execute(fwd_); }
  void backward() { fftw_execute(bwd_); }
  std::size_t size() const { return n_; }

 private:
  std::size_t n_;
  fftw_complex* buf_ = nullptr;
  fftw_plan fwd_ = nullptr;
  fftw_plan bwd_ = nullptr;
};

}  // namespace detail

/// Symmetric (Strang) split-step propagator for a fixed index landscape.
class SplitStepPropagator {
 public:
  /// `dn` holds n(x) - n_s sampled on the grid.
  SplitStepPropagator(const Grid& grid, std::span<const double> dn, const MaterialContext& mat,
                      const Absorber& absorber = {})
      : grid_(grid), fft_(std::make_unique<detail::FftWorkspace>(grid.n_x)) {
    grid.validate();
    mat.validate();
    if (dn.size() != grid.n_x) throw std::invalid_argument("SplitStepPropagator: index samples do not match grid");
    const double lb = mat.lambdabar_um();
    const double dz = grid.dz_um;
    double worst = 0.0;
    for (double v : dn) worst = std::max(worst, std::abs(v) * dz / lb);
    if (!(worst < 0.1))
      throw std::invalid_argument("SplitStepPropagator: per-step potential phase " + std::to_string(worst) +
                                  " rad exceeds 0.1; reduce dz");
    const std::size_t n = grid.n_x;
    half_potential_.resize(n);
    mask_.resize(n);
    transfer_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      half_potential_[i] = std::polar(1.0, 0.5 * dn[i] * dz / lb);
      mask_[i] = std::exp(-absorber.rate(grid, grid.x(i)) * dz);
      const double k = grid.kx(i);
      transfer_[i] = std::polar(1.0 / double(n), -lb * k * k * dz / (2.0 * mat.n_s));
    }
  }

  const Grid& grid() const { return grid_; }

  /// Advances `field` by `steps` increments of dz.
  void advance(Field& field, std::size_t steps) {
    const std::size_t n = grid_.n_x;
    if (field.samples.size() != n) throw std::invalid_argument("SplitStepPropagator: field does not match grid");
    complex* buf = fft_->data();
    std::copy(field.samples.begin(), field.samples.end(), buf);
    for (std::size_t s = 0; s < steps; ++s) {
      for (std::size_t i = 0; i < n; ++i) buf[i] *= half_potential_[i];
      fft_->forward();
      for (std::size_t i = 0; i < n; ++i) buf[i] *= transfer_[i];
      fft_->backward();
      double p = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        buf[i] *= half_potential_[i] * mask_[i];
        p += std::norm(buf[i]);
      }
      if (!std::isfinite(p))
        throw std::runtime_error("split_step: non-finite field at z = " +
                                 std::to_string((field.z_um + double(s + 1) * grid_.dz_um) * 1e-3) + " mm");
    }
    std::copy(buf, buf + n, field.samples.begin());
    field.z_um += double(steps) * grid_.dz_um;
  }

 private:
  Grid grid_;
  std::unique_ptr<detail::FftWorkspace> fft_;
  std::vector<complex> half_potential_;
  std::vector<double> mask_;
  std::vector<complex> transfer_;
};

/// One split step through the layout's index landscape.
inline Field split_step(const Field& field, const ArrayLayout& layout, const Grid& grid,
                        const Absorber& absorber = {}) {
  const auto dn = index_profile(layout, grid.xs());
  SplitStepPropagator prop(grid, dn, layout.material, absorber);
  Field out = field;
  prop.advance(out, 1);
  return out;
}

/// Isolated-channel mode of site `l` centred at x_l, unit power on the grid (c_m(0) = delta_{m,l}).
inline Field launch_site(const ArrayLayout& layout, const Grid& grid, int site, const ModeSolver& solver) {
  if (site < 0 || site > layout.N()) throw std::out_of_range("launch_site: site " + std::to_string(site) + " out of range");
  const auto mode = solver.single(layout.contrasts[std::size_t(site)]);
  Field f;
  f.samples.resize(grid.n_x);
  for (std::size_t i = 0; i < grid.n_x; ++i)
    f.samples[i] = mode->mode.at(grid.x(i) - layout.positions[std::size_t(site)]);
  const double p = f.power(grid.dx());
  if (!(p > 0.0)) throw std::runtime_error("launch_site: mode does not overlap the grid");
  for (auto& v : f.samples) v /= std::sqrt(p);
  return f;
}

struct ModalPowers {
  std::vector<double> p;    // |<o_l|phi>|^2, symmetric orthonormalization
  std::vector<double> raw;  // |<u_l|phi>|^2 with the bare channel modes
  double residual = 0.0;    // power - sum p (radiation / out-of-band content)
};

/// Projects fields onto the symmetrically orthonormalized channel modes of a layout.
class ModalProjector {
 public:
  ModalProjector(const ArrayLayout& layout, const Grid& grid, const ModeSolver& solver) : dx_(grid.dx()) {
    const auto n = static_cast<Eigen::Index>(layout.channels());
    const auto nx = static_cast<Eigen::Index>(grid.n_x);
    bare_.resize(n, nx);
    for (Eigen::Index l = 0; l < n; ++l) {
      const auto mode = solver.single(layout.contrasts[std::size_t(l)]);
      for (Eigen::Index i = 0; i < nx; ++i)
        bare_(l, i) = mode->mode.at(grid.x(std::size_t(i)) - layout.positions[std::size_t(l)]);
      bare_.row(l) /= std::sqrt(bare_.row(l).squaredNorm() * dx_);
    }
    const Eigen::MatrixXd S = bare_ * bare_.transpose() * dx_;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    ortho_ = es.eigenvectors() * es.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() *
             es.eigenvectors().transpose() * bare_;
  }

  std::size_t sites() const { return std::size_t(ortho_.rows()); }

  ModalPowers project(const Field& f) const {
    const Eigen::Index nx = ortho_.cols();
    if (Eigen::Index(f.samples.size()) != nx) throw std::invalid_argument("ModalProjector: field does not match grid");
    const Eigen::Map<const Eigen::VectorXcd> phi(f.samples.data(), nx);
    const Eigen::VectorXcd a = ortho_.cast<complex>() * phi * dx_;
    const Eigen::VectorXcd b = bare_.cast<complex>() * phi * dx_;
    ModalPowers out;
    double sum = 0.0;
    for (Eigen::Index l = 0; l < a.size(); ++l) {
      out.p.push_back(std::norm(a(l)));
      out.raw.push_back(std::norm(b(l)));
      sum += out.p.back();
    }
    out.residual = f.power(dx_) - sum;
    return out;
  }

 private:
  double dx_;
  Eigen::MatrixXd bare_;
  Eigen::MatrixXd ortho_;
};

/// P = 1 - 2 <x - x_0> / (N pitch), with <x> the intensity centroid.
inline double centroid_imbalance(const Field& f, const Grid& grid, const ArrayLayout& layout, double pitch_um) {
  double w = 0.0, wx = 0.0;
  for (std::size_t i = 0; i < grid.n_x; ++i) {
    const double I = std::norm(f.samples[i]);
    w += I;
    wx += I * grid.x(i);
  }
  if (!(w > 0.0)) throw std::invalid_argument("centroid_imbalance: zero-power field");
  const double centroid = wx / w;
  return 1.0 - 2.0 * (centroid - layout.positions.front()) / (double(layout.N()) * pitch_um);
}

inline double centroid_imbalance(const Field& f, const Grid& grid, const ArrayLayout& layout) {
  return centroid_imbalance(f, grid, layout, layout.mean_pitch());
}

struct BpmSample {
  double z_mm = 0.0;
  double P_centroid = 0.0;
  double P_modal = 0.0;
  std::vector<double> p;  // modal powers per site
  double power = 0.0;
  double residual = 0.0;
};

/// |phi(x, z)|^2 snapshots, row-major z-then-x.
struct IntensityMap {
  std::size_t nz = 0, nx = 0;
  double x_min = 0.0, x_max = 0.0;  // um
  double z_min = 0.0, z_max = 0.0;  // mm
  std::vector<double> data;
};

struct BpmOptions {
  double trace_interval_mm = 0.2;
  double map_interval_mm = 1.0;
  Absorber absorber{};
  bool record_map = true;
};

struct BpmRun {
  std::vector<BpmSample> trace;
  IntensityMap map;
  double initial_power = 0.0;

  /// Max relative power change along the run.
  double power_drift() const {
    double worst = 0.0;
    for (const auto& s : trace) worst = std::max(worst, std::abs(s.power - initial_power) / initial_power);
    return worst;
  }
};

/// Propagates the isolated mode of `site` through `layout` to grid.z_end_um,
/// recording both imbalance estimators and (optionally) intensity snapshots.
inline BpmRun propagate_and_record(const ArrayLayout& layout, const Grid& grid, int site, const ModeSolver& solver,
                                   const BpmOptions& opt = {}) {
  layout.validate();
  const auto dn = index_profile(layout, grid.xs());
  SplitStepPropagator prop(grid, dn, layout.material, opt.absorber);
  const ModalProjector proj(layout, grid, solver);
  Field field = launch_site(layout, grid, site, solver);
  const double dx = grid.dx();
  const double pitch = layout.mean_pitch();

  const auto steps_per = [&](double mm) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(mm * 1000.0 / grid.dz_um)));
  };
  const std::size_t trace_every = steps_per(opt.trace_interval_mm);
  const std::size_t map_every = steps_per(opt.map_interval_mm);
  const auto total = static_cast<std::size_t>(std::llround(grid.z_end_um / grid.dz_um));

  BpmRun run;
  run.initial_power = field.power(dx);
  run.map.nx = grid.n_x;
  run.map.x_min = grid.x_min;
  run.map.x_max = grid.x_max;

  auto record = [&](std::size_t step) {
    if (step % trace_every == 0) {
      BpmSample s;
      s.z_mm = field.z_um * 1e-3;
      const auto mp = proj.project(field);
      s.p = mp.p;
      s.residual = mp.residual;
      s.power = field.power(dx);
      s.P_modal = population_imbalance(std::span<const double>(mp.p));
      s.P_centroid = centroid_imbalance(field, grid, layout, pitch);
      run.trace.push_back(std::move(s));
    }
    if (opt.record_map && step % map_every == 0) {
      for (const auto& v : field.samples) run.map.data.push_back(std::norm(v));
      if (run.map.nz == 0) run.map.z_min = field.z_um * 1e-3;
      run.map.z_max = field.z_um * 1e-3;
      ++run.map.nz;
    }
  };

  record(0);
  std::size_t done = 0;
  while (done < total) {
    // Advance to the next recording point.
    std::size_t next = total;
    next = std::min(next, (done / trace_every + 1) * trace_every);
    if (opt.record_map) next = std::min(next, (done / map_every + 1) * map_every);
    prop.advance(field, next - done);
    done = next;
    record(done);
  }
  return run;
}

}  // namespace bhwg
