#pragma once
// Batch front door shared by the C API and the CLI: structured-config
// parsing (schema-checked, unknown keys rejected), scalar overrides, and the
// five commands, each returning named artifacts plus a human-readable
// summary.  Commands never touch the filesystem; callers decide where the
// artifact bytes go, which keeps reruns byte-reproducible.

#include <string>
#include <vector>

#include <json.hpp>

#include "families.hpp"
#include "freq.hpp"
#include "kam.hpp"
#include "serialize.hpp"
#include "symbol.hpp"

namespace qbnf::eng {

enum class PerturbKind { DefaultFamily, Family, Atoms };

struct RunConfig {
  freq::FrequencyMatrix omega{{{1.0, 1.0}}};  // resolved frequencies
  std::string preset_name;                    // empty when given as a matrix

  PerturbKind kind = PerturbKind::DefaultFamily;
  sym::VectorSymbol V;           // resolved perturbation
  sym::VectorSymbol B_expected;  // family kinds only
  double family_max_commutator = 0.0;
  // family echo payload (family kind only)
  sym::Symbol W_gen;
  sym::VectorSymbol B_gen;

  kam::KamConfig kam;

  int validation_N = 12;
  bool validation_strict = false;

  std::string output_dir = ".";
  std::vector<std::string> formats = {"csv", "json"};
};

// Parses config text to JSON, mapping syntax errors to ConfigError.
nlohmann::json config_from_text(const std::string& text);

// Applies one "dotted.path=value" override; only scalar values are allowed.
void set_override(nlohmann::json& cfg, const std::string& assignment);

// Validates the full schema and resolves frequencies and the perturbation.
RunConfig parse_config(const nlohmann::json& j);

// The canonical echo: every field spelled out, independent of which input
// keys were defaulted.  Embedded verbatim in result.json.
ser::Json config_echo(const RunConfig& cfg);

struct Artifact {
  std::string filename;
  std::string content;
};

struct CommandResult {
  std::vector<Artifact> artifacts;
  std::string summary;  // one or more '\n'-terminated lines
  std::vector<std::string> warnings;
  int exit_code = 0;  // 0 success, 1 non-convergence
};

CommandResult cmd_divisors(const RunConfig& cfg);
CommandResult cmd_radii(const RunConfig& cfg);
CommandResult cmd_run(const RunConfig& cfg);
CommandResult cmd_validate(const RunConfig& cfg,
                           const std::string& result_json_text);
CommandResult cmd_generate(const RunConfig& cfg);

// command is one of: divisors | radii | run | validate | generate.
// `extra` carries the result.json text for validate.
CommandResult dispatch(const RunConfig& cfg, const std::string& command,
                       const std::string& extra = "");

// Least-squares fit of log ||V_r|| against 2^r over the recorded steps;
// quadratic convergence shows up as a negative slope with r2 near 1.
struct DecayFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  int n = 0;
};
DecayFit decay_fit(const std::vector<kam::IterationRecord>& recs);

}  // namespace qbnf::eng
