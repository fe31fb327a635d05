#pragma once

#include "malab/estimates.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace malab::cli {

inline constexpr const char* kToolVersion = "malab 0.1.0";

/// Flat `key = value` text with `[section]` headers; keys are stored as
/// `section.key`. Blank lines and `#` comments are ignored.
class Config {
 public:
  static Config parse(std::istream& in);
  static Config load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::string text(const std::string& key, const std::string& fallback) const;
  Real real(const std::string& key, Real fallback) const;
  int integer(const std::string& key, int fallback) const;
  std::vector<Real> reals(const std::string& key, const std::vector<Real>& fallback) const;
  std::vector<std::string> words(const std::string& key, const std::vector<std::string>& fallback) const;
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  /// Sorted `key=value` lines; the hash input.
  std::string canonical() const;
  /// FNV-1a of the canonical text, as 16 hex digits.
  std::string hash() const;

 private:
  std::map<std::string, std::string> values_;
};

enum class DomainKind { Disk, HalfDisk, Box, Polygon };

/// Validated configuration; every exponent gate is checked in `from`.
struct ExperimentConfig {
  DomainKind domain = DomainKind::Disk;
  Vec2 center = Vec2::Zero();
  Real radius = 1;
  Vec2 lo{-1, -1}, hi{1, 1};
  std::vector<Vec2> vertices;

  std::string potentialFamily = "pinched";  ///< `pinched` or `single`
  AnalyticPotential analytic;
  bool solvePotential = false;
  Real detAmplitude = 0.3;  ///< solved det = 1 + amp sin(3 x1) x2

  std::string rhsKind = "constant";  ///< constant, singular, random, zero
  Real rhsValue = 1;
  /// Defaults to fractions {0, .3, .6, .825, .9375, .975, .99} of n/q.
  std::vector<Real> singular;
  Vec2 rhsCenter = Vec2::Zero();

  Real q = 2;
  Real qprime = 0;
  std::vector<Real> ps{2, 4};
  Real alpha = 0.3;
  Real gamma = 0.5;

  std::vector<int> meshes{64};
  std::vector<std::string> suites;
  std::vector<Real> theta{0.1, 0.05, 0.01};
  std::vector<Real> deltas{0.3, 0.2, 0.1};
  Real mu = 0.25;
  int levels = 8;
  std::optional<std::uint64_t> seed;
  std::string out = "out";

  static ExperimentConfig from(const Config& config);
};

/// Suite names in registry order.
const std::vector<std::string>& suite_names();
bool randomized(const std::string& suite);

/// Throws UnknownSuite.
EstimateReport run_suite(const std::string& suite, const ExperimentConfig& config);

/// schema=1 CSV; `extra` columns (name, value) are appended to every row.
void write_csv(std::ostream& out, const std::vector<EstimateReport>& reports,
               const std::vector<std::pair<std::string, std::string>>& extra = {}, bool header = true);
std::string summary_json(const std::vector<EstimateReport>& reports);

/// Writes the phi and u fields of the first mesh and potential.
std::vector<std::string> solve_fields(const ExperimentConfig& config, const std::string& dir);

}  // namespace malab::cli
