#pragma once

// Run configuration: a flat sectioned key-value text file plus command-line
// overrides. The raw key-value map is kept as the provenance source; its
// canonical dump is what gets hashed.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pmelab/estimates.hpp"
#include "pmelab/families.hpp"
#include "pmelab/geometry.hpp"
#include "pmelab/solver.hpp"

namespace pmelab {

class RunConfig {
 public:
  RunConfig();  // built-in defaults

  static RunConfig from_file(const std::string& path);
  static RunConfig from_text(const std::string& text);

  // "section.key=value"; unknown keys are a usage error at validate().
  void set(const std::string& assignment);
  void set(const std::string& section_key, const std::string& value);
  std::string get(const std::string& section_key) const;  // empty if unset

  void validate() const;

  // Deterministic "section.key = value" dump, sorted.
  std::string canonical_text() const;
  std::uint64_t hash() const;  // FNV-1a over canonical_text()
  std::string hash_hex() const;

  // Typed accessors (validated).
  ManifoldModel build_model() const;
  PmeParameters build_pme() const;
  // K defaults to the model's Ricci sup over [0, t_end]; family.ricci_bound
  // may raise it (the estimate hypothesis is an upper bound, so any K >= the
  // model's exact bound is admissible).
  FlowEnv build_env(double pressure_bound) const;
  FunctionTriple build_triple(const FlowEnv& env) const;
  std::vector<double> build_initial(const ManifoldModel& model) const;

  double t_start() const;
  double t_end() const;
  std::vector<double> snapshot_times() const;
  double safety() const;
  unsigned seed() const;

  struct EstimateSettings {
    RhsMode mode;
    bool mode_auto = false;  // resolved from the family when "auto"
    double radius = 0.0;     // 0 -> global mode
    std::optional<double> constant;  // absent -> calibrate
    double slack = 1e-12;
    bool lemma_residual = false;
  };
  EstimateSettings estimate() const;

  struct OutputSettings {
    std::string dir;
    bool csv = true, json = true;
    bool stamp = false;
  };
  OutputSettings output() const;

 private:
  double num(const std::string& key) const;
  int integer(const std::string& key) const;
  bool boolean(const std::string& key) const;

  std::map<std::string, std::string> kv_;  // "section.key" -> value
};

}  // namespace pmelab
