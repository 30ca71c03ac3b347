#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "bhwg/experiments.hpp"

namespace {

void report(const std::string& stage, const bhwg::StageResult& r, double seconds) {
  std::cout << "[" << stage << "] " << (r.pass ? "ok" : "threshold failure") << " (" << bhwg::fmt(seconds, 3)
            << " s)\n";
  for (const auto& l : r.lines) std::cout << "  " << l << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bose-Hubbard junction in a waveguide lattice: design, evolve, propagate, compare"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "configuration file (key = value)");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--override", overrides, "key=value, applied after the config file")->take_all();

  const std::vector<std::string> stages = {"design", "evolve", "bpm", "two-boson", "compare", "all"};
  for (const auto& s : stages) app.add_subcommand(s, s == "all" ? std::string("run every stage in order") : "run the " + s + " stage");
  app.add_subcommand("print-config", "print the effective configuration and its hash");
  app.fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    bhwg::Config cfg = config_path.empty() ? bhwg::Config{} : bhwg::Config::load(config_path);
    for (const auto& o : overrides) cfg.override_with(o);
    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "print-config") {
      bhwg::ExperimentConfig::from(cfg);
      std::cout << "# config_hash: " << cfg.hash() << '\n' << cfg.canonical();
      return 0;
    }
    const auto ec = bhwg::ExperimentConfig::from(cfg);
    const std::filesystem::path out(out_dir);
    std::filesystem::create_directories(out);
    std::cout << "config hash " << ec.hash << ", output " << out.string() << '\n';

    bhwg::Workbench wb(ec);
    bool pass = true;
    auto run = [&](const std::string& stage) {
      const auto t0 = std::chrono::steady_clock::now();
      bhwg::StageResult r;
      if (stage == "design") r = bhwg::cmd_design(wb, out);
      else if (stage == "evolve") r = bhwg::cmd_evolve(wb, out);
      else if (stage == "bpm") r = bhwg::cmd_bpm(wb, out);
      else if (stage == "two-boson") r = bhwg::cmd_two_boson(ec, out);
      else r = bhwg::cmd_compare(ec, out);
      report(stage, r, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
      pass = pass && r.pass;
    };
    if (cmd == "all")
      for (const char* s : {"design", "evolve", "bpm", "two-boson", "compare"}) run(s);
    else
      run(cmd);
    return pass ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
