#include <CLI11.hpp>

#include <charconv>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "ks/config.hpp"
#include "ks/errors.hpp"
#include "ks/manufactured.hpp"
#include "ks/simulate.hpp"

namespace {

constexpr int kExitIo = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

std::vector<double> parse_taus(const std::string& text) {
  std::vector<double> taus;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find(',', pos);
    if (end == std::string::npos)
      end = text.size();
    std::string item = text.substr(pos, end - pos);
    double v = 0;
    // Allow fractions such as 1/40.
    if (const auto slash = item.find('/'); slash != std::string::npos) {
      double num = 0, den = 0;
      const auto a = std::from_chars(item.data(), item.data() + slash, num);
      const auto b = std::from_chars(item.data() + slash + 1, item.data() + item.size(), den);
      if (a.ec != std::errc() || b.ec != std::errc() || a.ptr != item.data() + slash ||
          b.ptr != item.data() + item.size() || den == 0)
        throw ks::ConfigError("--taus: cannot parse '" + item + "'");
      v = num / den;
    } else {
      const auto r = std::from_chars(item.data(), item.data() + item.size(), v);
      if (r.ec != std::errc() || r.ptr != item.data() + item.size())
        throw ks::ConfigError("--taus: cannot parse '" + item + "'");
    }
    taus.push_back(v);
    pos = end + 1;
  }
  return taus;
}

int run_simulate(const std::string& config_path, const std::string& out_dir) {
  const ks::RunConfig cfg = ks::load_config(config_path);
  if (cfg.mode != ks::RunMode::simulate)
    throw ks::ConfigError("config sets mode = converge; use `ks converge`");
  std::optional<std::filesystem::path> dir;
  if (!out_dir.empty())
    dir = out_dir;
  const ks::SimulationResult r = ks::simulate(cfg, dir);
  std::cout << "steps " << r.steps << ", output in " << r.out_dir.string() << '\n';
  if (r.last)
    std::cout << "final mass " << r.last->mass << ", min rho " << r.last->min_rho << ", energy " << r.last->energy
              << '\n';
  return 0;
}

int run_converge(const std::string& config_path, const std::string& taus_text, const std::string& policy_name,
                 const std::string& out_dir) {
  const ks::RunConfig cfg = ks::load_config(config_path);
  const std::vector<double> taus = parse_taus(taus_text);
  const ks::GridPolicy policy = policy_name == "coupled" ? ks::GridPolicy::coupled : ks::GridPolicy::fixed;

  ks::ConvergenceConfig cc;
  cc.params = cfg.params;
  cc.T = cfg.T;
  cc.nx = cfg.nx;
  cc.ny = cfg.ny;
  cc.epc = cfg.epc;
  cc.forcing = cfg.forcing == ks::ForcingKind::analytic ? ks::ForcingMode::analytic : ks::ForcingMode::discrete;
  cc.solver = cfg.solver();
  cc.threads = ks::harness_threads();

  const ks::ConvergenceTable table = ks::run_convergence(cfg.k, taus, policy, cc);

  const std::filesystem::path dir = out_dir.empty() ? std::filesystem::path(cfg.out_dir) : std::filesystem::path(out_dir);
  std::filesystem::create_directories(dir);
  auto write = [&](const std::string& name, auto&& fn) {
    std::ofstream os(dir / name, std::ios::binary | std::ios::trunc);
    if (!os)
      throw ks::IoError("cannot open " + (dir / name).string() + " for writing");
    fn(os);
    if (!os)
      throw ks::IoError("write to " + (dir / name).string() + " failed");
  };
  write("convergence.csv", [&](std::ostream& os) { ks::write_convergence_csv(table, os); });
  write("convergence_accumulated.csv", [&](std::ostream& os) { ks::write_accumulated_csv(table, os); });
  const std::string summary = ks::order_summary(table);
  write("orders.txt", [&](std::ostream& os) { os << summary; });
  std::cout << summary;
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Keller-Segel solver with energy-corrected BDF time stepping"};
  app.require_subcommand(1);

  std::string config_path, out_dir, taus, policy = "fixed";

  auto* sim = app.add_subcommand("simulate", "march a configuration to its final time");
  sim->add_option("--config", config_path, "configuration file")->required();
  sim->add_option("--out-dir", out_dir, "output directory (overrides out_dir in the config)");

  auto* conv = app.add_subcommand("converge", "tau-refinement study on the manufactured solution");
  conv->add_option("--config", config_path, "configuration file")->required();
  conv->add_option("--taus", taus, "comma-separated, strictly decreasing time steps")->required();
  conv->add_option("--grid-policy", policy, "fixed or coupled")->check(CLI::IsMember({"fixed", "coupled"}));
  conv->add_option("--out-dir", out_dir, "output directory (overrides out_dir in the config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (sim->parsed())
      return run_simulate(config_path, out_dir);
    return run_converge(config_path, taus, policy, out_dir);
  } catch (const ks::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ks::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const ks::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ks::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitIo;
  }
}
