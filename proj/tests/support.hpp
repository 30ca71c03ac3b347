#pragma once

#include <map>
#include <mutex>

#include "bhwg/waveguide_optics.hpp"

namespace bhwg::testing {

inline const ModeSolver& reference_solver() {
  static const ModeSolver solver(MaterialContext{}, ChannelProfile{});
  return solver;
}

inline const CouplingCharacterization& reference_coupling() {
  static const auto c = characterize_coupling(reference_solver(), 2e-3, 8.0, 6.5, 9.5, 7);
  return c;
}

/// Designs cached per (U, refinement).
inline const ArrayDesign& reference_design(double U, DesignRefinement r = DesignRefinement::automatic, int N = 9,
                                           double J = 0.0781) {
  static std::mutex mu;
  static std::map<std::tuple<double, int, int, double>, ArrayDesign> cache;
  std::lock_guard lock(mu);
  const auto key = std::tuple{U, int(r), N, J};
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  DesignOptions opt;
  opt.refinement = r;
  return cache.emplace(key, assemble_array(ModelParams{N, J, U}, reference_solver(), reference_coupling().fit, opt))
      .first->second;
}

}  // namespace bhwg::testing
