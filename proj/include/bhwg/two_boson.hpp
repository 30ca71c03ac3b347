#pragma once

// Closed-form dynamics of two bosons in the double well, starting from
// c_0(0) = 1. The three Fock amplitudes map onto a waveguide triplet whose
// central guide is detuned by U from the outer ones.

#include <array>
#include <cmath>
#include <stdexcept>

namespace bhwg {

struct TwoBosonParams {
  double J = 0.0;  // mm^-1
  double U = 0.0;  // mm^-1

  void validate() const {
    if (!(J > 0.0)) throw std::invalid_argument("TwoBosonParams: J must be positive");
    if (!std::isfinite(U)) throw std::invalid_argument("TwoBosonParams: U must be finite");
  }

  /// M = sqrt(4J^2 + U^2/4)
  double M() const { return std::sqrt(4.0 * J * J + 0.25 * U * U); }
};

struct TwoBosonObservables {
  double t = 0.0;
  std::array<double, 3> probs{};  // |c_0|^2, |c_1|^2, |c_2|^2
  double p_R = 0.0;
  double p_2 = 0.0;
};

namespace detail {
// The bracketed four-term expression shared by |c_2|^2 and p_R.
inline double c2_bracket(const TwoBosonParams& p, double t) {
  const double M = p.M();
  const double cm = std::cos(M * t), sm = std::sin(M * t);
  const double ch = std::cos(0.5 * p.U * t), sh = std::sin(0.5 * p.U * t);
  return 1.0 + cm * cm - 2.0 * ch * cm - (p.U / M) * sh * sm + p.U * p.U / (4.0 * M * M) * sm * sm;
}

inline void check_time(double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("two-boson closed forms require t >= 0");
}
}  // namespace detail

/// (|c_0|^2, |c_1|^2, |c_2|^2) evaluated term by term as printed.
inline std::array<double, 3> closed_form_probs(const TwoBosonParams& p, double t) {
  p.validate();
  detail::check_time(t);
  const double M = p.M();
  const double s = std::sin(M * t);
  const double c1 = 2.0 * p.J * p.J / (M * M) * s * s;
  const double c2 = 0.25 * detail::c2_bracket(p, t);
  return {1.0 - c1 - c2, c1, c2};
}

/// Fraction of bosons in the right well, p_R = |c_0|^2 + |c_1|^2 / 2.
inline double p_right(const TwoBosonParams& p, double t) {
  p.validate();
  detail::check_time(t);
  const double M = p.M();
  const double s = std::sin(M * t);
  return 1.0 - p.J * p.J / (M * M) * s * s - 0.25 * detail::c2_bracket(p, t);
}

/// Same-site (pair) probability p_2 = |c_0|^2 + |c_2|^2.
inline double p_pair(const TwoBosonParams& p, double t) {
  p.validate();
  detail::check_time(t);
  const double M = p.M();
  const double s = std::sin(M * t);
  return 1.0 - 2.0 * p.J * p.J / (M * M) * s * s;
}

/// Lower envelope of p_2, reached whenever sin^2(Mt) = 1.
inline double p_pair_floor(const TwoBosonParams& p) {
  p.validate();
  const double M = p.M();
  return 1.0 - 2.0 * p.J * p.J / (M * M);
}

inline TwoBosonObservables two_boson_observables(const TwoBosonParams& p, double t) {
  TwoBosonObservables o;
  o.t = t;
  o.probs = closed_form_probs(p, t);
  o.p_R = p_right(p, t);
  o.p_2 = p_pair(p, t);
  return o;
}

}  // namespace bhwg
