// xaui_sim: command-line front end for the dual XAUI simulator.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "xaui/harness.hpp"

namespace {

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

int cmd_run(const std::string& path, const xaui::RunOptions& opt) {
  const xaui::Scenario sc = xaui::load_scenario(path);
  const xaui::RunResult r = xaui::run_scenario(sc, opt);
  std::cout << xaui::format_summary(r);
  return r.exit_code;
}

int cmd_sweep(const std::string& path, std::optional<std::uint64_t> seed, const std::string& out) {
  xaui::SweepGrid grid = xaui::parse_sweep_grid(slurp(path));
  if (seed) grid.seed = *seed;
  const auto rows = xaui::ber_sweep(grid);
  if (out.empty()) {
    xaui::write_sweep(std::cout, rows);
  } else {
    std::ofstream os(out, std::ios::binary);
    xaui::write_sweep(os, rows);
    if (!os) throw std::runtime_error("cannot write " + out);
  }
  return 0;
}

int cmd_diff(const std::string& a, const std::string& b) {
  const auto d = xaui::trace_diff(xaui::parse_trace(std::filesystem::path(a)), xaui::parse_trace(std::filesystem::path(b)));
  std::cout << "records\t" << d.count_a << '\t' << d.count_b << '\n';
  if (!d.time_delta_ns.empty()) {
    const auto [lo, hi] = std::minmax_element(d.time_delta_ns.begin(), d.time_delta_ns.end());
    std::cout << "delta_ns\t" << *lo << '\t' << *hi << '\n';
  }
  for (const auto& s : d.differences) std::cout << "diff\t" << s << '\n';
  std::cout << (d.same() ? "same" : "different") << '\n';
  return d.same() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual-channel XAUI link simulator"};
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> ticks;
  std::optional<std::uint64_t> loss_budget;
  std::string out;
  app.add_option("--seed", seed, "Override the scenario or grid seed");
  app.add_option("--ticks", ticks, "Override the number of ticks to simulate");
  app.add_option("--loss-budget", loss_budget, "Pass when no more than this many packets are lost");
  app.add_option("--out", out, "Output directory for run artifacts, or file for the sweep table");

  std::string scenario_path;
  auto* run = app.add_subcommand("run", "Run a scenario and write trace artifacts");
  run->add_option("scenario", scenario_path, "Scenario JSON file")->required();

  std::string grid_path;
  auto* sweep = app.add_subcommand("ber-sweep", "Sweep analog settings against channel loss");
  sweep->add_option("grid", grid_path, "Grid JSON file")->required();

  std::string trace_a;
  std::string trace_b;
  auto* diff = app.add_subcommand("trace-diff", "Compare two trace files by sequence and length");
  diff->add_option("a", trace_a, "First trace")->required();
  diff->add_option("b", trace_b, "Second trace")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      xaui::RunOptions opt;
      opt.seed = seed;
      opt.ticks = ticks;
      opt.loss_budget = loss_budget;
      opt.out_dir = out.empty() ? std::filesystem::path(".") : std::filesystem::path(out);
      return cmd_run(scenario_path, opt);
    }
    if (*sweep) return cmd_sweep(grid_path, seed, out);
    if (*diff) return cmd_diff(trace_a, trace_b);
  } catch (const std::exception& e) {
    std::cerr << "xaui_sim: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
