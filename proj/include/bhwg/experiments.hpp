#pragma once

// Config-driven experiment stages. Every stage writes plot-ready tables into
// an output directory; `compare` reads them back and scores them.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <limits>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bhwg/bpm.hpp"
#include "bhwg/config.hpp"
#include "bhwg/fock_core.hpp"
#include "bhwg/io.hpp"
#include "bhwg/two_boson.hpp"
#include "bhwg/waveguide_optics.hpp"

namespace bhwg {

inline DesignRefinement parse_refinement(const std::string& s) {
  for (auto r : {DesignRefinement::first_order, DesignRefinement::coefficients, DesignRefinement::spectral,
                 DesignRefinement::automatic})
    if (s == to_string(r)) return r;
  throw std::invalid_argument("unknown design_refinement '" + s + "'");
}

struct ExperimentConfig {
  int N = 9;
  double J = 0.0781;
  std::vector<double> U_list;
  MaterialContext material;
  ChannelProfile channel;
  double dn_ref = 2e-3;
  double d_ref_um = 8.0;
  double fit_d_min_um = 6.5, fit_d_max_um = 9.5;
  int fit_samples = 7;
  DesignOptions design;
  ModeSolverOptions mode;
  int launch_site = 0;
  double tb_dz_mm = 0.2;
  double z_end_mm = 100.0;
  double bpm_margin_um = 20.0;
  std::size_t bpm_nx = 2048;
  double bpm_dz_um = 0.5;
  BpmOptions bpm;
  double tb_J = 0.0781;
  std::vector<double> tb_U_over_J;
  double tb_t_end_mm = 200.0, tb_dt_mm = 0.1;
  double period_tolerance = 0.05;
  double modal_tolerance = 0.1;
  std::string hash;

  ModelParams model(std::size_t u_index) const { return {N, J, U_list.at(u_index)}; }

  static ExperimentConfig from(const Config& c) {
    ExperimentConfig e;
    e.N = int(c.integer("N"));
    e.J = c.number("J_per_mm");
    e.U_list = c.numbers("U_per_mm");
    e.material = {c.number("lambda_um"), c.number("n_s")};
    e.channel = {c.number("channel_w_um"), c.number("channel_Dx_um")};
    e.dn_ref = c.number("dn_ref");
    e.d_ref_um = c.number("d_ref_um");
    e.fit_d_min_um = c.number("fit_d_min_um");
    e.fit_d_max_um = c.number("fit_d_max_um");
    e.fit_samples = int(c.integer("fit_samples"));
    e.design.refinement = parse_refinement(c.raw("design_refinement"));
    e.mode = {c.number("mode_dx_um"), c.number("mode_margin_um")};
    e.launch_site = int(c.integer("launch_site"));
    e.tb_dz_mm = c.number("tb_dz_mm");
    e.z_end_mm = c.number("z_end_mm");
    e.design.prediction_horizon_mm = e.z_end_mm;
    e.bpm_margin_um = c.number("bpm_margin_um");
    e.bpm_nx = std::size_t(c.integer("bpm_nx"));
    e.bpm_dz_um = c.number("bpm_dz_um");
    e.bpm.absorber = {c.number("absorber_width_um"), c.number("absorber_strength_per_um")};
    e.bpm.trace_interval_mm = c.number("trace_interval_mm");
    e.bpm.map_interval_mm = c.number("map_interval_mm");
    e.tb_J = c.number("two_boson_J_per_mm");
    e.tb_U_over_J = c.numbers("two_boson_U_over_J");
    e.tb_t_end_mm = c.number("two_boson_t_end_mm");
    e.tb_dt_mm = c.number("two_boson_dt_mm");
    e.period_tolerance = c.number("period_tolerance");
    e.modal_tolerance = c.number("modal_tolerance");
    e.hash = c.hash();
    e.validate();
    return e;
  }

  void validate() const {
    ModelParams{N, J, 0.0}.validate();
    for (double U : U_list) ModelParams{N, J, U}.validate();
    material.validate();
    channel.validate();
    if (launch_site < 0 || launch_site > N) throw std::invalid_argument("launch_site outside 0..N");
    if (!(tb_dz_mm > 0.0) || !(z_end_mm > 0.0)) throw std::invalid_argument("tb_dz_mm and z_end_mm must be positive");
    if (bpm_margin_um < 20.0) throw std::invalid_argument("bpm_margin_um must be at least 20");
    if (!(tb_t_end_mm > 0.0) || !(tb_dt_mm > 0.0)) throw std::invalid_argument("two-boson time grid must be positive");
  }
};

// ---- trace analysis -------------------------------------------------------

/// Zero crossings of a sampled series, linearly interpolated.
inline std::vector<double> zero_crossings(std::span<const double> z, std::span<const double> P) {
  std::vector<double> out;
  for (std::size_t i = 1; i < z.size(); ++i) {
    const double a = P[i - 1], b = P[i];
    if (a == 0.0 && i == 1) continue;
    if ((a > 0.0 && b <= 0.0) || (a < 0.0 && b >= 0.0)) out.push_back(z[i - 1] + (z[i] - z[i - 1]) * a / (a - b));
  }
  return out;
}

/// Twice the mean spacing of successive zero crossings.
inline std::optional<double> period_from_crossings(std::span<const double> c) {
  if (c.size() < 2) return std::nullopt;
  return 2.0 * (c.back() - c.front()) / double(c.size() - 1);
}

/// Maximum of P within each positive lobe (segments between zero crossings), in order.
inline std::vector<double> positive_lobe_maxima(std::span<const double> P) {
  std::vector<double> out;
  double cur = -1.0;
  bool inside = false;
  for (double p : P) {
    if (p > 0.0) {
      cur = inside ? std::max(cur, p) : p;
      inside = true;
    } else if (inside) {
      out.push_back(cur);
      inside = false;
    }
  }
  if (inside) out.push_back(cur);
  return out;
}

/// Zero crossings of the tight-binding P(z), located by bisection on the exact propagator.
inline std::vector<double> tight_binding_crossings(const LatticeCoefficients& coeffs, int site, double z_end,
                                                   double dz = 0.2, double tol = 1e-12) {
  const FockPropagator prop(coeffs);
  const auto c0 = FockState::localized(coeffs.N(), site).c;
  auto P = [&](double z) {
    FockState s;
    s.c = prop.advance(c0, z);
    return population_imbalance(s);
  };
  std::vector<double> out;
  double za = 0.0, pa = P(0.0);
  for (double zb = dz; zb <= z_end + 1e-12; zb += dz) {
    const double pb = P(zb);
    if ((pa > 0.0 && pb <= 0.0) || (pa < 0.0 && pb >= 0.0)) {
      double lo = za, hi = zb, plo = pa;
      while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        const double pm = P(mid);
        if ((plo > 0.0) == (pm > 0.0)) {
          lo = mid;
          plo = pm;
        } else {
          hi = mid;
        }
      }
      out.push_back(0.5 * (lo + hi));
    }
    za = zb;
    pa = pb;
  }
  return out;
}

// ---- shared state ---------------------------------------------------------

/// Mode solver plus coupling characterization, built once per run.
class Workbench {
 public:
  explicit Workbench(ExperimentConfig cfg) : cfg_(std::move(cfg)) {
    solver_ = std::make_unique<ModeSolver>(cfg_.material, cfg_.channel, cfg_.mode);
  }

  const ExperimentConfig& config() const { return cfg_; }
  const ModeSolver& solver() const { return *solver_; }

  const CouplingCharacterization& coupling() {
    std::call_once(coupling_once_, [&] {
      coupling_ = characterize_coupling(*solver_, cfg_.dn_ref, cfg_.d_ref_um, cfg_.fit_d_min_um, cfg_.fit_d_max_um,
                                        cfg_.fit_samples);
    });
    return coupling_;
  }

  /// Designs for every U, computed in parallel on first use.
  const std::vector<ArrayDesign>& designs() {
    std::call_once(designs_once_, [&] {
      const auto& fit = coupling().fit;
      std::vector<std::future<ArrayDesign>> jobs;
      for (std::size_t i = 0; i < cfg_.U_list.size(); ++i)
        jobs.push_back(std::async(std::launch::async, [this, i, &fit] {
          try {
            return assemble_array(cfg_.model(i), *solver_, fit, cfg_.design);
          } catch (const std::exception& e) {
            throw std::runtime_error("design for U = " + fmt_double(cfg_.U_list[i], 6) + " mm^-1 failed: " + e.what());
          }
        }));
      for (auto& j : jobs) designs_.push_back(j.get());
    });
    return designs_;
  }

 private:
  ExperimentConfig cfg_;
  std::unique_ptr<ModeSolver> solver_;
  std::once_flag coupling_once_, designs_once_;
  CouplingCharacterization coupling_;
  std::vector<ArrayDesign> designs_;
};

struct StageResult {
  bool pass = true;
  std::vector<std::string> lines;  // human-readable summary

  void check(bool ok, const std::string& what) {
    lines.push_back(std::string(ok ? "PASS " : "FAIL ") + what);
    pass = pass && ok;
  }
  void note(const std::string& what) { lines.push_back("     " + what); }
};

inline std::string u_tag(std::size_t i) { return "u" + std::to_string(i); }

inline std::string fmt(double v, int digits = 6) { return fmt_double(v, digits); }

inline std::vector<std::pair<std::string, std::string>> common_meta(const ExperimentConfig& cfg, const std::string& table,
                                                                    const std::string& units) {
  return {{"table", table}, {"config_hash", cfg.hash}, {"units", units}};
}

// ---- stages -----------------------------------------------------------------

inline StageResult cmd_design(Workbench& wb, const std::filesystem::path& out) {
  const auto& cfg = wb.config();
  std::filesystem::create_directories(out);
  StageResult res;
  const auto& ch = wb.coupling();

  Table ct;
  ct.meta = common_meta(cfg, "coupling characterization", "d_um um; kappa_per_mm mm^-1; fit_per_mm mm^-1");
  ct.meta.push_back({"kappa0_per_mm", fmt_double(ch.fit.kappa0)});
  ct.meta.push_back({"gamma_per_um", fmt_double(ch.fit.gamma)});
  ct.meta.push_back({"d_ref_um", fmt_double(ch.fit.d_ref)});
  ct.meta.push_back({"residual_rms", fmt_double(ch.fit.residual_rms)});
  ct.columns = {"d_um", "kappa_per_mm", "fit_per_mm"};
  for (const auto& s : ch.samples) ct.rows.push_back({s.d, s.kappa, ch.fit.kappa(s.d)});
  write_table((out / "coupling.csv").string(), ct);
  res.note("kappa0 = " + fmt(ch.fit.kappa0) + " mm^-1, gamma = " + fmt(ch.fit.gamma) + " um^-1, rms = " +
           fmt(ch.fit.residual_rms, 3));

  const auto& designs = wb.designs();
  for (std::size_t i = 0; i < designs.size(); ++i) {
    const auto& d = designs[i];
    const auto path = out / ("design_" + u_tag(i) + ".csv");
    write_table(path.string(), design_table(d, cfg.hash));
    const auto back = layout_from_table(read_table(path.string()), cfg.channel, cfg.material);
    res.check(back.positions == d.layout.positions && back.contrasts == d.layout.contrasts,
              "design " + u_tag(i) + " round-trips through " + path.filename().string());

    const double reach = d.layout.positions.back() + cfg.channel.w_um + 10.0;
    write_table((out / ("profile_" + u_tag(i) + ".csv")).string(),
                profile_table(d.layout, -reach, reach, 2001, cfg.hash), 10);
    res.note("U = " + fmt(d.params.U) + ": refinement " + to_string(d.report.used) + ", kappa err " +
             fmt(d.report.kappa_error, 3) + ", V err " + fmt(d.report.V_error, 3) + " mm^-1, predicted |dP| " +
             fmt(d.report.predicted_imbalance_error, 3));
  }
  return res;
}

inline StageResult cmd_evolve(Workbench& wb, const std::filesystem::path& out) {
  const auto& cfg = wb.config();
  std::filesystem::create_directories(out);
  StageResult res;
  const auto z = uniform_grid(0.0, cfg.z_end_mm, cfg.tb_dz_mm);
  for (std::size_t i = 0; i < cfg.U_list.size(); ++i) {
    const auto coeffs = build_coefficients(cfg.model(i));
    const auto tr = evolve(FockState::localized(cfg.N, cfg.launch_site), coeffs, z);
    Table t;
    t.meta = common_meta(cfg, "tight-binding trace", "z_mm mm; P, p_l dimensionless");
    t.meta.push_back({"U_per_mm", fmt_double(cfg.U_list[i])});
    t.columns = {"z_mm", "P"};
    for (int l = 0; l <= cfg.N; ++l) t.columns.push_back("p_" + std::to_string(l));
    double drift = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) {
      std::vector<double> row{z[k], tr.imbalance[k]};
      for (double p : occupation_probabilities(tr.amplitudes[k])) row.push_back(p);
      drift = std::max(drift, std::abs(tr.amplitudes[k].norm2() - 1.0));
      t.rows.push_back(std::move(row));
    }
    write_table((out / ("tb_" + u_tag(i) + ".csv")).string(), t, 12);
    res.check(drift <= 1e-10, "U = " + fmt(cfg.U_list[i]) + ": norm drift " + fmt(drift, 3) + " <= 1e-10");
    const auto cross = tight_binding_crossings(coeffs, cfg.launch_site, cfg.z_end_mm);
    if (const auto per = period_from_crossings(cross))
      res.note("U = " + fmt(cfg.U_list[i]) + ": period " + fmt(*per, 10) + " mm");
    else
      res.note("U = " + fmt(cfg.U_list[i]) + ": P keeps its sign, min P = " +
               fmt(*std::min_element(tr.imbalance.begin(), tr.imbalance.end())));
  }
  return res;
}

inline Grid bpm_grid(const ExperimentConfig& cfg, const ArrayLayout& layout) {
  return make_grid(layout, cfg.bpm_margin_um, cfg.bpm_nx, cfg.bpm_dz_um, cfg.z_end_mm);
}

inline StageResult cmd_bpm(Workbench& wb, const std::filesystem::path& out) {
  const auto& cfg = wb.config();
  std::filesystem::create_directories(out);
  StageResult res;
  const auto& designs = wb.designs();
  std::vector<std::future<BpmRun>> jobs;
  for (const auto& d : designs)
    jobs.push_back(std::async(std::launch::async, [&cfg, &wb, &d] {
      return propagate_and_record(d.layout, bpm_grid(cfg, d.layout), cfg.launch_site, wb.solver(), cfg.bpm);
    }));
  for (std::size_t i = 0; i < designs.size(); ++i) {
    const auto run = jobs[i].get();
    Table t;
    t.meta = common_meta(cfg, "BPM trace", "z_mm mm; P_centroid, P_modal, p_l, power, residual dimensionless");
    t.meta.push_back({"U_per_mm", fmt_double(cfg.U_list[i])});
    t.meta.push_back({"launch_site", std::to_string(cfg.launch_site)});
    t.columns = {"z_mm", "P_centroid", "P_modal"};
    for (int l = 0; l <= cfg.N; ++l) t.columns.push_back("p_" + std::to_string(l));
    t.columns.push_back("power");
    t.columns.push_back("residual");
    for (const auto& s : run.trace) {
      std::vector<double> row{s.z_mm, s.P_centroid, s.P_modal};
      row.insert(row.end(), s.p.begin(), s.p.end());
      row.push_back(s.power);
      row.push_back(s.residual);
      t.rows.push_back(std::move(row));
    }
    write_table((out / ("bpm_trace_" + u_tag(i) + ".csv")).string(), t, 12);
    write_map((out / ("bpm_map_" + u_tag(i) + ".bin")).string(), run.map, cfg.hash);
    {
      std::ofstream f(out / ("bpm_map_" + u_tag(i) + ".txt"), std::ios::binary);
      f << "# config_hash: " << cfg.hash << "\n# units: rows z [mm], columns x [um] from " << fmt(run.map.x_min)
        << " to " << fmt(run.map.x_max) << ", sqrt-scaled intensity\n# U_per_mm: " << fmt_double(cfg.U_list[i])
        << "\n"
        << ascii_preview(run.map);
    }
    res.note("U = " + fmt(cfg.U_list[i]) + ": power change " + fmt(run.power_drift(), 3) + " (absorbed radiation)");
  }
  return res;
}

struct TwoBosonSummary {
  double ratio = 0.0;
  double p2_min = 0.0;
  double p2_floor = 0.0;
  double half_transfer_mm = 0.0;  // first time p_R drops below 1/2
  double oracle_error = 0.0;      // max |closed form - fock_core|
};

inline std::vector<TwoBosonSummary> two_boson_curves(const ExperimentConfig& cfg, Table* table = nullptr) {
  const auto t = uniform_grid(0.0, cfg.tb_t_end_mm, cfg.tb_dt_mm);
  std::vector<TwoBosonSummary> out;
  if (table) {
    table->columns = {"t_mm"};
    for (double r : cfg.tb_U_over_J)
      for (const char* k : {"pR", "p2", "c0sq", "c1sq", "c2sq"}) table->columns.push_back(std::string(k) + "_UJ" + fmt(r));
    table->rows.assign(t.size(), {});
    for (std::size_t k = 0; k < t.size(); ++k) table->rows[k].push_back(t[k]);
  }
  for (double r : cfg.tb_U_over_J) {
    const TwoBosonParams p{cfg.tb_J, r * cfg.tb_J};
    const auto coeffs = build_coefficients(ModelParams{2, p.J, p.U});
    const auto tr = evolve(FockState::localized(2, 0), coeffs, t);
    TwoBosonSummary s;
    s.ratio = r;
    s.p2_floor = p_pair_floor(p);
    s.p2_min = 1.0;
    std::vector<double> pR;
    for (std::size_t k = 0; k < t.size(); ++k) {
      const auto o = two_boson_observables(p, t[k]);
      const auto num = occupation_probabilities(tr.amplitudes[k]);
      for (int l = 0; l < 3; ++l) s.oracle_error = std::max(s.oracle_error, std::abs(o.probs[std::size_t(l)] - num[std::size_t(l)]));
      s.p2_min = std::min(s.p2_min, o.p_2);
      pR.push_back(o.p_R);
      if (table) {
        auto& row = table->rows[k];
        row.insert(row.end(), {o.p_R, o.p_2, o.probs[0], o.probs[1], o.probs[2]});
      }
    }
    s.half_transfer_mm = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < t.size(); ++k)
      if (pR[k] < 0.5) {
        s.half_transfer_mm = t[k - 1] + (t[k] - t[k - 1]) * (pR[k - 1] - 0.5) / (pR[k - 1] - pR[k]);
        break;
      }
    out.push_back(s);
  }
  return out;
}

inline StageResult cmd_two_boson(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  std::filesystem::create_directories(out);
  StageResult res;
  Table t;
  t.meta = common_meta(cfg, "two-boson closed forms", "t_mm mm; probabilities dimensionless");
  t.meta.push_back({"J_per_mm", fmt_double(cfg.tb_J)});
  const auto sums = two_boson_curves(cfg, &t);
  write_table((out / "two_boson.csv").string(), t, 12);
  for (std::size_t i = 0; i < sums.size(); ++i) {
    const auto& s = sums[i];
    const std::string tag = "U/J = " + fmt(s.ratio);
    res.check(s.oracle_error <= 1e-9, tag + ": closed forms vs Fock evolution " + fmt(s.oracle_error, 3) + " <= 1e-9");
    res.note(tag + ": min p_2 = " + fmt(s.p2_min) + " (floor " + fmt(s.p2_floor) + "), p_R below 1/2 after " +
             fmt(s.half_transfer_mm) + " mm");
    if (i > 0 && std::abs(s.ratio) > std::abs(sums[i - 1].ratio)) {
      res.check(s.half_transfer_mm > sums[i - 1].half_transfer_mm, tag + ": tunneling slower than U/J = " + fmt(sums[i - 1].ratio));
      res.check(s.p2_floor > sums[i - 1].p2_floor, tag + ": p_2 floor above U/J = " + fmt(sums[i - 1].ratio));
    }
  }
  return res;
}

inline Table read_stage_table(const std::filesystem::path& path, const std::string& hash) {
  if (!std::filesystem::exists(path))
    throw std::runtime_error("missing upstream output " + path.string() + " (run the producing stage first)");
  auto t = read_table(path.string());
  const auto* h = t.find_meta("config_hash");
  if (!h || *h != hash)
    throw std::runtime_error(path.string() + " was produced with a different config (hash " + (h ? *h : "none") +
                             ", expected " + hash + ")");
  return t;
}

inline StageResult cmd_compare(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  StageResult res;
  const double zR = std::numbers::pi / cfg.J;
  for (std::size_t i = 0; i < cfg.U_list.size(); ++i) {
    const double U = cfg.U_list[i];
    const auto tb = read_stage_table(out / ("tb_" + u_tag(i) + ".csv"), cfg.hash);
    const auto bp = read_stage_table(out / ("bpm_trace_" + u_tag(i) + ".csv"), cfg.hash);
    const auto zt = tb.col("z_mm"), Pt = tb.col("P");
    const auto zb = bp.col("z_mm"), Pm = bp.col("P_modal"), Pc = bp.col("P_centroid");
    const std::string tag = "U = " + fmt(U) + ": ";

    // Deviation on the BPM sample points, TB linearly interpolated.
    double dev_m = 0.0, dev_c = 0.0, dev_mc = 0.0;
    for (std::size_t k = 0; k < zb.size(); ++k) {
      const auto it = std::lower_bound(zt.begin(), zt.end(), zb[k] - 1e-9);
      if (it == zt.end()) break;
      const std::size_t j = std::size_t(it - zt.begin());
      double ref = Pt[j];
      if (j > 0 && zt[j] != zb[k]) {
        const double f = (zb[k] - zt[j - 1]) / (zt[j] - zt[j - 1]);
        ref = (1.0 - f) * Pt[j - 1] + f * Pt[j];
      }
      dev_m = std::max(dev_m, std::abs(Pm[k] - ref));
      dev_c = std::max(dev_c, std::abs(Pc[k] - ref));
      dev_mc = std::max(dev_mc, std::abs(Pm[k] - Pc[k]));
    }
    res.note(tag + "max |P_modal - P_tb| = " + fmt(dev_m, 4) + ", max |P_centroid - P_tb| = " + fmt(dev_c, 4));
    res.check(dev_mc <= 0.05, tag + "centroid and modal estimators agree, max diff " + fmt(dev_mc, 3) + " <= 0.05");

    const double tb_min = *std::min_element(Pt.begin(), Pt.end());
    if (tb_min > 0.0) {
      const double bm = std::min(*std::min_element(Pm.begin(), Pm.end()), *std::min_element(Pc.begin(), Pc.end()));
      res.note(tag + "tight-binding self-trapped, min P = " + fmt(tb_min));
      res.check(bm > 0.0, tag + "BPM stays self-trapped, min P = " + fmt(bm));
      continue;
    }
    if (U == 0.0) {
      const auto pt = period_from_crossings(zero_crossings(zt, Pt));
      const auto pb = period_from_crossings(zero_crossings(zb, Pm));
      res.check(pt && std::abs(*pt / zR - 1.0) <= 1e-6,
                tag + "tight-binding period " + (pt ? fmt(*pt, 8) : "n/a") + " mm vs pi/J = " + fmt(zR, 8));
      res.check(pb && std::abs(*pb / zR - 1.0) <= cfg.period_tolerance,
                tag + "BPM period " + (pb ? fmt(*pb, 6) : "n/a") + " mm within " + fmt(100 * cfg.period_tolerance, 3) +
                    "% of pi/J");
      if (zb.back() >= zR) {
        std::size_t k = 0;
        while (k + 1 < zb.size() && std::abs(zb[k + 1] - zR) < std::abs(zb[k] - zR)) ++k;
        double worst = 0.0;
        for (int l = 0; l <= cfg.N; ++l) {
          const double p = bp.rows[k][bp.column("p_" + std::to_string(l))];
          worst = std::max(worst, std::abs(p - (l == cfg.launch_site ? 1.0 : 0.0)));
        }
        res.check(worst <= cfg.modal_tolerance, tag + "BPM self-imaging at z = " + fmt(zb[k], 5) +
                                                    " mm, max site deviation " + fmt(worst, 3));
      }
    } else {
      auto decreasing = [](const std::vector<double>& m) {
        if (m.size() < 3) return false;
        return m[1] < m[0] && m[2] < m[1];
      };
      const auto mt = positive_lobe_maxima(Pt), mb = positive_lobe_maxima(Pm);
      auto show = [](const std::vector<double>& m) {
        std::string s;
        for (std::size_t k = 0; k < std::min<std::size_t>(3, m.size()); ++k) s += (k ? ", " : "") + fmt(m[k], 3);
        return s;
      };
      res.check(decreasing(mt), tag + "tight-binding maxima decrease: " + show(mt));
      res.check(decreasing(mb), tag + "BPM maxima decrease: " + show(mb));
    }
  }
  std::ofstream f(out / "compare.txt", std::ios::binary);
  f << "# config_hash: " << cfg.hash << "\n# units: z in mm, P dimensionless\n";
  for (const auto& l : res.lines) f << l << '\n';
  return res;
}

}  // namespace bhwg
