#include "ks/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "ks/manufactured.hpp"

namespace ks {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(int line, const std::string& msg) {
  throw ConfigError("config line " + std::to_string(line) + ": " + msg);
}

double to_double(std::string_view v, int line, std::string_view key) {
  double out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(out))
    fail(line, "value '" + std::string(v) + "' of " + std::string(key) + " is not a number");
  return out;
}

int to_int(std::string_view v, int line, std::string_view key) {
  int out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    fail(line, "value '" + std::string(v) + "' of " + std::string(key) + " is not an integer");
  return out;
}

bool to_switch(std::string_view v, int line, std::string_view key) {
  if (v == "on" || v == "true" || v == "1")
    return true;
  if (v == "off" || v == "false" || v == "0")
    return false;
  fail(line, std::string(key) + " must be on or off, got '" + std::string(v) + "'");
}

template <class E>
E to_enum(std::string_view v, int line, std::string_view key, const std::map<std::string_view, E>& table) {
  const auto it = table.find(v);
  if (it == table.end()) {
    std::string opts;
    for (const auto& [name, _] : table)
      opts += (opts.empty() ? "" : ", ") + std::string(name);
    fail(line, std::string(key) + " must be one of {" + opts + "}, got '" + std::string(v) + "'");
  }
  return it->second;
}

const std::set<std::string_view> kRequired{"xmin", "xmax", "ymin", "ymax", "nx", "ny", "tau", "T", "k"};
const std::set<std::string_view> kBuiltins{"example1", "example2", "example3", "uniform"};

} // namespace

int RunConfig::steps() const { return static_cast<int>(std::llround(T / tau)); }

RunConfig parse_config(std::string_view text) {
  RunConfig cfg;
  std::set<std::string> seen;
  std::map<std::string, int> line_of;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = text.find('\n', pos);
    std::string_view line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    pos = (end == std::string_view::npos) ? text.size() + 1 : end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = trim(line);
    if (line.empty())
      continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      fail(line_no, "expected 'key = value'");
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty())
      fail(line_no, "expected 'key = value'");
    if (!seen.insert(std::string(key)).second)
      fail(line_no, "duplicate key '" + std::string(key) + "'");
    line_of[std::string(key)] = line_no;

    if (key == "xmin") cfg.xmin = to_double(val, line_no, key);
    else if (key == "xmax") cfg.xmax = to_double(val, line_no, key);
    else if (key == "ymin") cfg.ymin = to_double(val, line_no, key);
    else if (key == "ymax") cfg.ymax = to_double(val, line_no, key);
    else if (key == "nx") cfg.nx = to_int(val, line_no, key);
    else if (key == "ny") cfg.ny = to_int(val, line_no, key);
    else if (key == "tau") cfg.tau = to_double(val, line_no, key);
    else if (key == "T") cfg.T = to_double(val, line_no, key);
    else if (key == "k") cfg.k = to_int(val, line_no, key);
    else if (key == "eps") cfg.params.eps = to_double(val, line_no, key);
    else if (key == "alpha") cfg.params.alpha = to_double(val, line_no, key);
    else if (key == "beta") cfg.params.beta = to_double(val, line_no, key);
    else if (key == "gamma") cfg.params.gamma = to_double(val, line_no, key);
    else if (key == "mode")
      cfg.mode = to_enum<RunMode>(val, line_no, key, {{"simulate", RunMode::simulate}, {"converge", RunMode::converge}});
    else if (key == "epc") cfg.epc = to_switch(val, line_no, key);
    else if (key == "start")
      cfg.start = to_enum<StartMode>(val, line_no, key, {{"exact", StartMode::exact}, {"cascade", StartMode::cascade}});
    else if (key == "initial") {
      if (!kBuiltins.contains(val))
        fail(line_no, "unknown initial condition '" + std::string(val) + "'");
      cfg.initial = std::string(val);
    } else if (key == "forcing")
      cfg.forcing = to_enum<ForcingKind>(
          val, line_no, key,
          {{"none", ForcingKind::none}, {"analytic", ForcingKind::analytic}, {"discrete", ForcingKind::discrete}});
    else if (key == "snapshot_every") cfg.snapshot_every = to_int(val, line_no, key);
    else if (key == "snapshot_format")
      cfg.snapshot_format =
          to_enum<SnapshotFormat>(val, line_no, key, {{"csv", SnapshotFormat::csv}, {"vtk", SnapshotFormat::vtk}});
    else if (key == "out_dir") cfg.out_dir = std::string(val);
    else if (key == "solver_tol") cfg.solver_tol = to_double(val, line_no, key);
    else if (key == "solver_maxit") cfg.solver_maxit = to_int(val, line_no, key);
    else if (key == "jacobi") cfg.jacobi = to_switch(val, line_no, key);
    else if (key == "startup_substeps") cfg.startup_substeps = to_int(val, line_no, key);
    else
      fail(line_no, "unknown key '" + std::string(key) + "'");
  }

  std::vector<std::string> missing;
  for (auto key : kRequired)
    if (!seen.contains(std::string(key)))
      missing.emplace_back(key);
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing)
      list += (list.empty() ? "" : ", ") + m;
    throw ConfigError("config is missing required keys: " + list);
  }

  if (cfg.mode == RunMode::converge && !seen.contains("epc"))
    cfg.epc = false;

  auto at = [&](const char* key) { return line_of.contains(key) ? line_of[key] : line_no; };
  if (cfg.k < 1 || cfg.k > 5)
    fail(at("k"), "k must be in 1..5, got " + std::to_string(cfg.k));
  if (!(cfg.tau > 0.0))
    fail(at("tau"), "tau must be positive");
  if (!(cfg.T >= cfg.tau))
    fail(at("T"), "T must be at least tau");
  if (cfg.snapshot_every < 0)
    fail(at("snapshot_every"), "snapshot_every must be >= 0");
  if (!(cfg.solver_tol > 0.0))
    fail(at("solver_tol"), "solver_tol must be positive");
  if (cfg.solver_maxit < 0)
    fail(at("solver_maxit"), "solver_maxit must be >= 0");
  if (cfg.startup_substeps < 0)
    fail(at("startup_substeps"), "startup_substeps must be >= 0");
  try {
    cfg.grid();
  } catch (const ConfigError& e) {
    fail(at("nx"), e.what());
  }
  try {
    cfg.params.validate();
  } catch (const ConfigError& e) {
    fail(at("alpha"), e.what());
  }
  const bool manufactured = cfg.initial == "example1";
  if (cfg.start == StartMode::exact && !manufactured)
    fail(at("start"), "exact start needs a manufactured solution (initial = example1)");
  if (cfg.forcing != ForcingKind::none && !manufactured)
    fail(at("forcing"), "forcing is only defined for the manufactured solution (initial = example1)");
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

InitialCondition builtin_initial_conditions(const std::string& name, const ModelParams& p) {
  if (name == "example1") {
    const ManufacturedSolution m = example1_solution();
    return {[m](double x, double y) { return m.c(x, y, 0.0); }, [m](double x, double y) { return m.rho(x, y, 0.0); }};
  }
  if (name == "example2")
    return {[](double x, double y) { return std::exp(-(x * x + y * y) / 2.0); },
            [](double x, double y) { return 4.0 * std::exp(-(x * x + y * y)); }};
  if (name == "example3")
    return {[](double x, double y) { return 420.0 * std::exp(-42.0 * (x * x + y * y)); },
            [](double x, double y) { return 840.0 * std::exp(-84.0 * (x * x + y * y)); }};
  if (name == "uniform") {
    const double c = p.beta / p.alpha;
    return {[c](double, double) { return c; }, [](double, double) { return 1.0; }};
  }
  throw ConfigError("unknown initial condition '" + name + "'");
}

} // namespace ks
