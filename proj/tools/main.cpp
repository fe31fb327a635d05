#include "experiment.hpp"

#include "malab/field_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace malab;
using namespace malab::cli;

namespace {

enum Exit { Ok = 0, SuiteFailure = 1, Validation = 2, Internal = 3 };

int exit_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ExponentOutOfRange:
    case ErrorCode::InvalidArgument:
    case ErrorCode::ParseError:
    case ErrorCode::UnknownSuite:
    case ErrorCode::MissingOutputs: return Validation;
    default: return Internal;
  }
}

void error_json(const std::string& code, const std::string& message) {
  std::cerr << json{{"error", code}, {"message", message}}.dump() << "\n";
}

struct Options {
  std::string config, suite, axis, values, out;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
};

Config load_config(const Options& o) {
  Config c = o.config.empty() ? Config{} : Config::load(o.config);
  if (o.seed) c.set("run.seed", std::to_string(*o.seed));
  if (!o.out.empty()) c.set("run.out", o.out);
  return c;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<std::string> suites_for(const Options& o, const ExperimentConfig& e) {
  std::vector<std::string> s = o.suite.empty() ? e.suites : split_list(o.suite);
  if (s.empty()) throw Error(ErrorCode::InvalidArgument, "no suite given; use --suite or run.suites");
  for (const auto& name : s)
    if (std::find(suite_names().begin(), suite_names().end(), name) == suite_names().end())
      throw Error(ErrorCode::UnknownSuite, "unknown suite '" + name + "'");
  return s;
}

/// Runs `count` tasks on up to `jobs` threads; results land by index, so the
/// merge order never depends on completion order.
template <class Task>
void run_parallel(std::size_t count, int jobs, Task task) {
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  auto worker = [&] {
    for (std::size_t k; (k = next++) < count;) try {
        task(k);
      } catch (...) {
        errors[k] = std::current_exception();
      }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < std::min<int>(jobs, static_cast<int>(count)); ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct Timed {
  EstimateReport report;
  double seconds = 0;
};

Timed timed_suite(const std::string& name, const ExperimentConfig& e) {
  const auto t0 = std::chrono::steady_clock::now();
  Timed t{run_suite(name, e)};
  t.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return t;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + p.string());
}

json manifest(const Config& c, const std::string& command, const json& suites) {
  return json{{"tool_version", kToolVersion}, {"config_hash", c.hash()}, {"command", command}, {"suites", suites}};
}

int finish(const fs::path& dir, const Config& c, const std::string& command, const std::vector<Timed>& runs,
           const std::vector<EstimateReport>& reports, const std::string& csv) {
  fs::create_directories(dir);
  write_text(dir / "results.csv", csv);
  write_text(dir / "summary.json", summary_json(reports));
  json suites = json::array();
  bool pass = true;
  for (const auto& r : runs) {
    suites.push_back({{"suite", r.report.suite},
                      {"outputs", {(dir / "results.csv").string(), (dir / "summary.json").string()}},
                      {"wall_seconds", r.seconds}});
    pass = pass && r.report.pass;
  }
  write_text(dir / "manifest.json", manifest(c, command, suites).dump(2) + "\n");
  for (const auto& r : reports)
    std::cout << r.suite << ": " << (r.pass ? "pass" : "FAIL") << "\n";
  return pass ? Ok : SuiteFailure;
}

int cmd_solve(const Options& o) {
  const Config c = load_config(o);
  const ExperimentConfig e = ExperimentConfig::from(c);
  if (e.rhsKind == "random" && !e.seed) throw Error(ErrorCode::InvalidArgument, "random forcing needs a seed");
  const fs::path dir = e.out;
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<std::string> paths = solve_fields(e, dir.string());
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json suites = json::array({{{"suite", "solve"}, {"outputs", paths}, {"wall_seconds", seconds}}});
  write_text(dir / "manifest.json", manifest(c, "solve", suites).dump(2) + "\n");
  for (const auto& p : paths) std::cout << p << "\n";
  return Ok;
}

int cmd_verify(const Options& o) {
  const Config c = load_config(o);
  const ExperimentConfig e = ExperimentConfig::from(c);
  const std::vector<std::string> names = suites_for(o, e);
  std::vector<Timed> runs(names.size());
  run_parallel(names.size(), o.jobs, [&](std::size_t k) { runs[k] = timed_suite(names[k], e); });
  std::vector<EstimateReport> reports;
  for (const auto& r : runs) reports.push_back(r.report);
  std::ostringstream csv;
  write_csv(csv, reports);
  return finish(e.out, c, "verify", runs, reports, csv.str());
}

/// Slope of log|lhs| against log of the axis value; for meshes the abscissa
/// is the spacing 1/cells, so the slope is the convergence order.
std::string fitted_order(const std::vector<std::pair<Real, Real>>& points, bool mesh) {
  std::vector<Real> x, y;
  for (const auto& [a, v] : points)
    if (a > 0 && std::isfinite(v) && v != 0) {
      x.push_back(std::log(mesh ? 1 / a : a));
      y.push_back(std::log(std::abs(v)));
    }
  if (x.size() < 2) return "";
  return format_real(fit_slope(x, y));
}

int cmd_sweep(const Options& o) {
  static const std::vector<std::string> axes = {"mesh", "theta", "singularity", "exponentP"};
  if (std::find(axes.begin(), axes.end(), o.axis) == axes.end())
    throw Error(ErrorCode::InvalidArgument, "axis must be one of mesh, theta, singularity, exponentP");
  const std::vector<std::string> values = split_list(o.values);
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "--values needs at least one axis value");

  Config c = load_config(o);
  const ExperimentConfig base = ExperimentConfig::from(c);
  const std::vector<std::string> names = suites_for(o, base);
  // Each axis value is validated up front, before any compute
  std::vector<ExperimentConfig> configs;
  for (const auto& v : values) {
    Config cv = c;
    if (o.axis == "mesh") cv.set("run.meshes", v);
    if (o.axis == "theta") cv.set("run.theta", v);
    if (o.axis == "singularity") {
      cv.set("rhs.singular", v);
      cv.set("rhs.kind", "singular");
    }
    if (o.axis == "exponentP") cv.set("exponents.p", v);
    configs.push_back(ExperimentConfig::from(cv));
  }

  const std::size_t jobs = names.size() * values.size();
  std::vector<Timed> runs(jobs);
  run_parallel(jobs, o.jobs, [&](std::size_t k) {
    runs[k] = timed_suite(names[k / values.size()], configs[k % values.size()]);
  });

  // Order per (suite, trial, potential) across the axis; a "/..." suffix on
  // the trial name carries the axis value and is not part of the key
  auto stem = [](const std::string& trial) { return trial.substr(0, trial.find('/')); };
  std::map<std::tuple<std::string, std::string, std::string>, std::vector<std::pair<Real, Real>>> series;
  for (std::size_t k = 0; k < jobs; ++k)
    for (const auto& t : runs[k].report.trials)
      series[{runs[k].report.suite, stem(t.trial), t.potential}].push_back(
          {std::stod(values[k % values.size()]), t.lhs});

  std::ostringstream csv;
  std::vector<EstimateReport> reports;
  for (std::size_t k = 0; k < jobs; ++k) {
    const EstimateReport& r = runs[k].report;
    reports.push_back(r);
    for (const auto& t : r.trials) {
      EstimateReport one = r;
      one.trials = {t};
      write_csv(csv, {one},
                {{"axis", o.axis},
                 {"axis_value", values[k % values.size()]},
                 {"fitted_order", fitted_order(series[{r.suite, stem(t.trial), t.potential}], o.axis == "mesh")}},
                k == 0 && &t == &r.trials.front());
    }
  }
  if (csv.str().empty()) write_csv(csv, {}, {{"axis", ""}, {"axis_value", ""}, {"fitted_order", ""}});
  return finish(base.out, c, "sweep", runs, reports, csv.str());
}

int cmd_report(const Options& o) {
  const fs::path dir = o.out.empty() ? fs::path("out") : fs::path(o.out);
  const fs::path mpath = dir / "manifest.json";
  if (!fs::exists(mpath)) throw Error(ErrorCode::MissingOutputs, "no manifest at " + mpath.string());
  json m;
  try {
    std::ifstream(mpath) >> m;
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::MissingOutputs, std::string("unreadable manifest: ") + ex.what());
  }
  for (const auto& s : m.at("suites"))
    for (const auto& p : s.at("outputs"))
      if (!fs::exists(p.get<std::string>()))
        throw Error(ErrorCode::MissingOutputs, "missing output " + p.get<std::string>());
  if (!o.config.empty()) {
    const std::string now = load_config(o).hash();
    if (now != m.at("config_hash").get<std::string>())
      std::cerr << "warning: stale config hash (manifest " << m.at("config_hash").get<std::string>() << ", config "
                << now << ")\n";
  }
  if (m.at("tool_version") != kToolVersion)
    std::cerr << "warning: manifest written by " << m.at("tool_version").get<std::string>() << "\n";
  if (m.at("command") == "solve") {
    std::cout << "solve outputs present\n";
    return Ok;
  }
  const fs::path spath = dir / "summary.json";
  if (!fs::exists(spath)) throw Error(ErrorCode::MissingOutputs, "no summary at " + spath.string());
  json s;
  std::ifstream(spath) >> s;
  bool pass = true;
  std::printf("%-20s %8s %14s %10s  %s\n", "suite", "trials", "C_emp", "spread", "verdict");
  for (const auto& r : s.at("suites")) {
    const bool ok = r.at("pass").get<bool>();
    const std::string c = r.at("c_emp").is_null() ? "-" : format_real(r.at("c_emp").get<double>());
    std::printf("%-20s %8zu %14.6g %10.4f  %s\n", r.at("suite").get<std::string>().c_str(),
                r.at("trials").get<std::size_t>(), r.at("c_emp").is_null() ? NAN : r.at("c_emp").get<double>(),
                r.at("spread").get<double>(), ok ? "pass" : "FAIL");
    if (!ok) std::cout << "failed: " << r.at("suite").get<std::string>() << "\n";
    pass = pass && ok;
  }
  return pass ? Ok : SuiteFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Linearized Monge-Ampere estimate laboratory"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);
  Options o;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "config file");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--seed", o.seed, "64-bit seed for randomized families");
    sub->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
  };
  CLI::App* solve = app.add_subcommand("solve", "solve for the potential and u; write fields");
  CLI::App* verify = app.add_subcommand("verify", "run verification suites");
  CLI::App* sweep = app.add_subcommand("sweep", "run suites along one parameter axis");
  CLI::App* report = app.add_subcommand("report", "summarize a finished run");
  for (auto* s : {solve, verify, sweep, report}) common(s);
  verify->add_option("--suite", o.suite, "suite name(s), comma separated");
  sweep->add_option("--suite", o.suite, "suite name(s), comma separated");
  sweep->add_option("--axis", o.axis, "mesh, theta, singularity or exponentP")->required();
  sweep->add_option("--values", o.values, "comma separated axis values")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? Ok : Validation;
  }

  try {
    if (*solve) return cmd_solve(o);
    if (*verify) return cmd_verify(o);
    if (*sweep) return cmd_sweep(o);
    return cmd_report(o);
  } catch (const Error& e) {
    error_json(std::string(to_string(e.code())), e.what());
    return exit_for(e.code());
  } catch (const std::exception& e) {
    error_json("Internal", e.what());
    return Internal;
  }
}
