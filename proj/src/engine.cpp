#include "engine.hpp"

#include <algorithm>
#include <cmath>

#include "common.hpp"
#include "oracle.hpp"

namespace qbnf::eng {

using nlohmann::json;

namespace {

void require_object_keys(const json& j, const std::vector<std::string>& keys,
                         const std::string& what) {
  if (!j.is_object()) throw ConfigError(what + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    (void)v;
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
      throw ConfigError(what + ": unknown key '" + k + "'");
    }
  }
}

double get_number(const json& j, const std::string& what) {
  return ser::number_from_json(j, what);
}

int get_int(const json& j, const std::string& what) {
  if (!j.is_number_integer()) throw ConfigError(what + ": expected an integer");
  return j.get<int>();
}

bool get_bool(const json& j, const std::string& what) {
  if (!j.is_boolean()) throw ConfigError(what + ": expected a boolean");
  return j.get<bool>();
}

std::string get_string(const json& j, const std::string& what) {
  if (!j.is_string()) throw ConfigError(what + ": expected a string");
  return j.get<std::string>();
}

bool same_matrix(const freq::FrequencyMatrix& a,
                 const freq::FrequencyMatrix& b) {
  if (a.m() != b.m() || a.l() != b.l()) return false;
  for (int i = 0; i < a.m(); ++i) {
    for (int j = 0; j < a.l(); ++j) {
      if (a.entry(i, j) != b.entry(i, j)) return false;
    }
  }
  return true;
}

freq::FrequencyMatrix parse_frequencies(const json& j, std::string* name) {
  if (j.is_string()) {
    *name = j.get<std::string>();
    return fam::builtin_frequencies(*name);
  }
  if (j.is_array()) {
    name->clear();
    std::vector<std::vector<double>> rows;
    for (const auto& r : j) {
      if (!r.is_array() || r.empty()) {
        throw ConfigError("frequencies: rows must be non-empty arrays");
      }
      std::vector<double> row;
      for (const auto& x : r) row.push_back(get_number(x, "frequencies"));
      rows.push_back(std::move(row));
    }
    return freq::FrequencyMatrix(std::move(rows));
  }
  throw ConfigError("frequencies: expected a preset name or a matrix");
}

void parse_kam(const json& j, kam::KamConfig* out) {
  require_object_keys(j,
                      {"mode", "alpha", "rho", "eta", "C", "hbar", "max_iter",
                       "lie_tol", "neumann_tol", "prune_tol", "target_norm",
                       "gamma", "tau"},
                      "kam");
  if (j.contains("mode")) {
    const std::string m = get_string(j.at("mode"), "kam.mode");
    if (m == "brjuno") {
      out->mode = kam::Mode::Brjuno;
    } else if (m == "diophantine") {
      out->mode = kam::Mode::Diophantine;
    } else {
      throw ConfigError("kam.mode: expected 'brjuno' or 'diophantine'");
    }
  }
  if (j.contains("alpha")) out->alpha = get_number(j.at("alpha"), "kam.alpha");
  if (j.contains("rho")) out->rho = get_number(j.at("rho"), "kam.rho");
  if (j.contains("eta")) out->eta = get_number(j.at("eta"), "kam.eta");
  if (j.contains("C")) out->C = get_number(j.at("C"), "kam.C");
  if (j.contains("hbar")) out->hbar = get_number(j.at("hbar"), "kam.hbar");
  if (j.contains("max_iter")) {
    out->max_iter = get_int(j.at("max_iter"), "kam.max_iter");
  }
  if (j.contains("lie_tol")) {
    out->lie_tol = get_number(j.at("lie_tol"), "kam.lie_tol");
  }
  if (j.contains("neumann_tol")) {
    out->neumann_tol = get_number(j.at("neumann_tol"), "kam.neumann_tol");
  }
  if (j.contains("prune_tol")) {
    out->prune_tol = get_number(j.at("prune_tol"), "kam.prune_tol");
  }
  if (j.contains("target_norm")) {
    out->target_norm = get_number(j.at("target_norm"), "kam.target_norm");
  }
  if (j.contains("gamma")) out->gamma = get_number(j.at("gamma"), "kam.gamma");
  if (j.contains("tau")) out->tau = get_number(j.at("tau"), "kam.tau");
}

void resolve_perturbation(const json& j, RunConfig* cfg) {
  require_object_keys(j, {"type", "W_gen", "B_gen", "symbols"},
                      "perturbation");
  if (!j.contains("type")) throw ConfigError("perturbation: missing 'type'");
  const std::string type = get_string(j.at("type"), "perturbation.type");

  auto apply_family = [cfg](fam::FamilySpec spec) {
    spec.hbar = cfg->kam.hbar;
    spec.rho = cfg->kam.rho;
    spec.lie_tol = cfg->kam.lie_tol;
    const auto family = fam::generate_commuting_family(spec);
    cfg->V = family.V;
    cfg->B_expected = family.B_expected;
    cfg->family_max_commutator = family.max_commutator;
    cfg->W_gen = spec.W_gen;
    cfg->B_gen = spec.B_gen;
  };

  if (type == "default_family") {
    for (const auto& k : {"W_gen", "B_gen", "symbols"}) {
      if (j.contains(k)) {
        throw ConfigError(std::string("perturbation: '") + k +
                          "' is not accepted with type 'default_family'");
      }
    }
    cfg->kind = PerturbKind::DefaultFamily;
    auto spec = fam::default_family_spec(cfg->omega.m(), cfg->kam.hbar);
    if (spec.W_gen.l() != cfg->omega.l()) {
      throw ConfigError(
          "perturbation: the default family needs " +
          std::to_string(spec.W_gen.l()) + " angle variables, frequencies "
          "have " + std::to_string(cfg->omega.l()));
    }
    spec.omega = cfg->omega;
    apply_family(std::move(spec));
    return;
  }
  if (type == "family") {
    if (j.contains("symbols")) {
      throw ConfigError(
          "perturbation: 'symbols' is not accepted with type 'family'");
    }
    if (!j.contains("W_gen") || !j.contains("B_gen")) {
      throw ConfigError("perturbation: type 'family' needs W_gen and B_gen");
    }
    cfg->kind = PerturbKind::Family;
    auto w = ser::symbol_from_json(j.at("W_gen"));
    auto b = ser::vector_symbol_from_json(j.at("B_gen"));
    if (!same_matrix(w.omega, cfg->omega) ||
        !same_matrix(b.omega, cfg->omega)) {
      throw ConfigError(
          "perturbation: generator frequency headers must match the "
          "configured frequencies");
    }
    fam::FamilySpec spec{cfg->omega, std::move(w.F), std::move(b.V)};
    apply_family(std::move(spec));
    return;
  }
  if (type == "atoms") {
    for (const auto& k : {"W_gen", "B_gen"}) {
      if (j.contains(k)) {
        throw ConfigError(std::string("perturbation: '") + k +
                          "' is not accepted with type 'atoms'");
      }
    }
    if (!j.contains("symbols")) {
      throw ConfigError("perturbation: type 'atoms' needs 'symbols'");
    }
    cfg->kind = PerturbKind::Atoms;
    auto v = ser::vector_symbol_from_json(j.at("symbols"));
    if (!same_matrix(v.omega, cfg->omega)) {
      throw ConfigError(
          "perturbation: symbol frequency header must match the configured "
          "frequencies");
    }
    cfg->V = std::move(v.V);
    return;
  }
  throw ConfigError(
      "perturbation.type: expected 'default_family', 'family' or 'atoms'");
}

}  // namespace

json config_from_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
}

void set_override(nlohmann::json& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override: expected key.path=value, got '" +
                      assignment + "'");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);

  json value;
  try {
    value = json::parse(raw);
  } catch (const json::exception&) {
    value = raw;  // unquoted strings (preset names, file paths)
  }
  if (value.is_object() || value.is_array()) {
    throw ConfigError("override: only scalar fields may be overridden ('" +
                      path + "')");
  }

  json* node = &cfg;
  size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(
        start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError("override: empty key in '" + path + "'");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    if (!node->is_object()) {
      throw ConfigError("override: '" + path + "' descends into a non-object");
    }
    node = &(*node)[key];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

RunConfig parse_config(const json& j) {
  require_object_keys(
      j, {"frequencies", "perturbation", "kam", "validation", "output"},
      "config");
  for (const auto& k : {"frequencies", "perturbation"}) {
    if (!j.contains(k)) {
      throw ConfigError(std::string("config: missing key '") + k + "'");
    }
  }

  RunConfig cfg;
  cfg.omega = parse_frequencies(j.at("frequencies"), &cfg.preset_name);

  if (j.contains("kam")) parse_kam(j.at("kam"), &cfg.kam);
  kam::validate(cfg.kam);

  if (j.contains("validation")) {
    const auto& v = j.at("validation");
    require_object_keys(v, {"N", "strict"}, "validation");
    if (v.contains("N")) cfg.validation_N = get_int(v.at("N"), "validation.N");
    if (v.contains("strict")) {
      cfg.validation_strict = get_bool(v.at("strict"), "validation.strict");
    }
    if (cfg.validation_N < 1) {
      throw ConfigError("validation.N: must be >= 1");
    }
  }

  if (j.contains("output")) {
    const auto& o = j.at("output");
    require_object_keys(o, {"dir", "formats"}, "output");
    if (o.contains("dir")) cfg.output_dir = get_string(o.at("dir"), "output.dir");
    if (o.contains("formats")) {
      const auto& f = o.at("formats");
      if (!f.is_array()) throw ConfigError("output.formats: expected an array");
      cfg.formats.clear();
      for (const auto& x : f) {
        const std::string s = get_string(x, "output.formats");
        if (s != "csv" && s != "json") {
          throw ConfigError("output.formats: unknown format '" + s + "'");
        }
        cfg.formats.push_back(s);
      }
    }
  }

  resolve_perturbation(j.at("perturbation"), &cfg);
  return cfg;
}

ser::Json config_echo(const RunConfig& cfg) {
  ser::Json out = ser::Json::object();

  if (!cfg.preset_name.empty()) {
    out.set("frequencies", ser::Json::str(cfg.preset_name));
  } else {
    ser::Json rows = ser::Json::array();
    for (const auto& r : cfg.omega.rows()) {
      ser::Json row = ser::Json::array();
      for (double x : r) row.push(ser::Json::real(x));
      rows.push(std::move(row));
    }
    out.set("frequencies", std::move(rows));
  }

  ser::Json pert = ser::Json::object();
  switch (cfg.kind) {
    case PerturbKind::DefaultFamily:
      pert.set("type", ser::Json::str("default_family"));
      break;
    case PerturbKind::Family:
      pert.set("type", ser::Json::str("family"));
      pert.set("W_gen", ser::symbol_to_json(cfg.W_gen, cfg.omega));
      pert.set("B_gen", ser::vector_symbol_to_json(cfg.B_gen, cfg.omega));
      break;
    case PerturbKind::Atoms:
      pert.set("type", ser::Json::str("atoms"));
      pert.set("symbols", ser::vector_symbol_to_json(cfg.V, cfg.omega));
      break;
  }
  out.set("perturbation", std::move(pert));

  ser::Json k = ser::Json::object();
  k.set("mode", ser::Json::str(cfg.kam.mode == kam::Mode::Brjuno
                                   ? "brjuno"
                                   : "diophantine"));
  k.set("alpha", ser::Json::real(cfg.kam.alpha));
  k.set("rho", ser::Json::real(cfg.kam.rho));
  k.set("eta", ser::Json::real(cfg.kam.eta));
  k.set("C", ser::Json::real(cfg.kam.C));
  k.set("hbar", ser::Json::real(cfg.kam.hbar));
  k.set("max_iter", ser::Json::integer(cfg.kam.max_iter));
  k.set("lie_tol", ser::Json::real(cfg.kam.lie_tol));
  k.set("neumann_tol", ser::Json::real(cfg.kam.neumann_tol));
  k.set("prune_tol", ser::Json::real(cfg.kam.prune_tol));
  k.set("target_norm", ser::Json::real(cfg.kam.target_norm));
  k.set("gamma", ser::Json::real(cfg.kam.gamma));
  k.set("tau", ser::Json::real(cfg.kam.tau));
  out.set("kam", std::move(k));

  ser::Json val = ser::Json::object();
  val.set("N", ser::Json::integer(cfg.validation_N));
  val.set("strict", ser::Json::boolean(cfg.validation_strict));
  out.set("validation", std::move(val));

  ser::Json o = ser::Json::object();
  o.set("dir", ser::Json::str(cfg.output_dir));
  ser::Json fmts = ser::Json::array();
  for (const auto& f : cfg.formats) fmts.push(ser::Json::str(f));
  o.set("formats", std::move(fmts));
  out.set("output", std::move(o));

  return out;
}

namespace {

bool wants_format(const RunConfig& cfg, const std::string& fmt) {
  return std::find(cfg.formats.begin(), cfg.formats.end(), fmt) !=
         cfg.formats.end();
}

}  // namespace

CommandResult cmd_divisors(const RunConfig& cfg) {
  const auto sums = freq::brjuno_sum(cfg.omega, 6);
  CommandResult out;
  if (wants_format(cfg, "json")) {
    out.artifacts.push_back(
        {"divisors.json", ser::divisor_report_json(sums).dump()});
  }
  std::string s;
  for (size_t k = 0; k < sums.M_of_2k.size(); ++k) {
    s += "M[" + std::to_string(1LL << k) +
         "] = " + ser::fmt17(sums.M_of_2k[k]) + "\n";
  }
  s += "partial Brjuno sum = " + ser::fmt17(sums.partial_abs.back()) + "\n";
  s += "last increment = " + ser::fmt17(sums.last_increment) + "\n";
  if (!sums.M_of_2k.empty() && sums.M_of_2k.back() == sums.M_of_2k.front()) {
    s += "no small divisors: the shell maximum is constant\n";
  }
  out.summary = std::move(s);
  return out;
}

CommandResult cmd_radii(const RunConfig& cfg) {
  const sym::NormParams np{cfg.kam.rho, cfg.omega.underomega()};
  const auto sums = freq::brjuno_sum(cfg.omega, 6);

  freq::ConstantsIn in;
  in.k = 0;
  in.alpha = cfg.kam.alpha;
  in.eta = cfg.kam.eta;
  in.C = cfg.kam.C;
  in.norm_V = sym::norm(cfg.V, np);
  in.grad_Vbar = sym::grad_matrix_norm(sym::average(cfg.V), np);
  in.B = sums.partial_abs.back() + 2.0 * sums.last_increment;
  in.M1 = cfg.omega.small_divisor_bound(1.0);
  in.underomega = cfg.omega.underomega();
  if (cfg.kam.mode == kam::Mode::Diophantine) {
    in.gamma = cfg.kam.gamma;
    in.tau = cfg.kam.tau;
  }
  const auto rep = freq::constants(in);

  ser::Json j = ser::constants_report_json(rep);
  const auto budget = freq::brjuno_budget(in.norm_V, in.underomega, in.alpha,
                                          in.eta, in.k);
  ser::Json bj = ser::Json::object();
  bj.set("K", ser::Json::real(budget.K));
  bj.set("max_B_alpha", ser::Json::real(budget.budget));
  j.set("budget", std::move(bj));

  CommandResult out;
  if (wants_format(cfg, "json")) {
    out.artifacts.push_back({"radii.json", j.dump()});
  }
  std::string s;
  s += "Z_k = " + ser::fmt17(rep.Z_k) + "\n";
  s += "D_k = " + ser::fmt17(rep.D_k) + "\n";
  s += "radius = " + ser::fmt17(rep.R_brjuno) + "\n";
  s += "lambda0 = " + ser::fmt17(rep.lambda0) + "\n";
  s += std::string("norm below radius: ") +
       (rep.cond_norm_lt_R ? "yes" : "no") + "\n";
  if (rep.R_dio) s += "radius (Diophantine) = " + ser::fmt17(*rep.R_dio) + "\n";
  out.summary = std::move(s);
  return out;
}

CommandResult cmd_run(const RunConfig& cfg) {
  const auto res = cfg.kam.hbar == 0.0
                       ? kam::classical_run(cfg.omega, cfg.V, cfg.kam)
                       : kam::run(cfg.omega, cfg.V, cfg.kam);

  CommandResult out;
  if (wants_format(cfg, "csv")) {
    out.artifacts.push_back({"records.csv", ser::records_csv(res.records)});
  }
  if (wants_format(cfg, "json")) {
    out.artifacts.push_back(
        {"result.json",
         ser::result_to_json(res, cfg.omega, config_echo(cfg)).dump()});
  }
  out.warnings = res.warnings;
  out.exit_code = res.converged ? 0 : 1;

  std::string s;
  s += std::string("converged: ") + (res.converged ? "true" : "false") + "\n";
  s += "iterations: " + std::to_string(res.records.size()) + "\n";
  s += "final norm: " + ser::fmt17(res.final_norm) + "\n";
  s += "tail estimate A: " + ser::fmt17(res.tail_estimate_A) + "\n";
  const auto fit = decay_fit(res.records);
  if (fit.n >= 2) {
    s += "decay fit: log ||V_r|| vs 2^r, slope = " + ser::fmt17(fit.slope) +
         ", r2 = " + ser::fmt17(fit.r2) + "\n";
  }
  out.summary = std::move(s);
  return out;
}

CommandResult cmd_validate(const RunConfig& cfg,
                           const std::string& result_json_text) {
  const auto parsed =
      ser::result_from_json(config_from_text(result_json_text));
  if (!same_matrix(parsed.omega, cfg.omega)) {
    throw ConfigError(
        "validate: the result was produced for different frequencies");
  }
  const auto rep =
      orc::spectrum_compare(cfg.omega, cfg.V, parsed.B_infty,
                            cfg.validation_N, cfg.kam.hbar, -1,
                            cfg.validation_strict);

  CommandResult out;
  if (wants_format(cfg, "json")) {
    out.artifacts.push_back(
        {"spectrum_report.json", ser::spectrum_report_json(rep).dump()});
  }
  std::string s;
  s += "interior max err: " + ser::fmt17(rep.interior_max_err) + "\n";
  s += "interior radius: " + std::to_string(rep.interior_radius) + "\n";
  s += "boundary excluded: " + std::to_string(rep.boundary_excluded) + "\n";
  s += "ambiguous labels: " + std::to_string(rep.ambiguous) + "\n";
  out.summary = std::move(s);
  return out;
}

CommandResult cmd_generate(const RunConfig& cfg) {
  if (cfg.kind == PerturbKind::Atoms) {
    throw ConfigError("generate: needs a family perturbation, got atoms");
  }
  ser::Json j = ser::Json::object();
  j.set("V", ser::vector_symbol_to_json(cfg.V, cfg.omega));
  j.set("B_expected", ser::vector_symbol_to_json(cfg.B_expected, cfg.omega));
  j.set("max_commutator", ser::Json::real(cfg.family_max_commutator));

  CommandResult out;
  if (wants_format(cfg, "json")) {
    out.artifacts.push_back({"family.json", j.dump()});
  }
  const sym::NormParams np{cfg.kam.rho, cfg.omega.underomega()};
  std::string s;
  s += "perturbation norm: " + ser::fmt17(sym::norm(cfg.V, np)) + "\n";
  s += "max pairwise commutator: " +
       ser::fmt17(cfg.family_max_commutator) + "\n";
  size_t atoms = 0;
  for (const auto& c : cfg.V.comp) atoms += c.size();
  s += "atoms: " + std::to_string(atoms) + "\n";
  out.summary = std::move(s);
  return out;
}

CommandResult dispatch(const RunConfig& cfg, const std::string& command,
                       const std::string& extra) {
  if (command == "divisors") return cmd_divisors(cfg);
  if (command == "radii") return cmd_radii(cfg);
  if (command == "run") return cmd_run(cfg);
  if (command == "validate") return cmd_validate(cfg, extra);
  if (command == "generate") return cmd_generate(cfg);
  throw ConfigError("unknown command '" + command +
                    "' (expected divisors | radii | run | validate | "
                    "generate)");
}

DecayFit decay_fit(const std::vector<kam::IterationRecord>& recs) {
  DecayFit fit;
  std::vector<double> xs, ys;
  for (const auto& r : recs) {
    if (r.norm_V > 0.0) {
      xs.push_back(std::pow(2.0, r.r));
      ys.push_back(std::log(r.norm_V));
    }
  }
  fit.n = static_cast<int>(xs.size());
  if (fit.n < 2) return fit;
  const double n = static_cast<double>(fit.n);
  double mx = 0, my = 0;
  for (int i = 0; i < fit.n; ++i) {
    mx += xs[static_cast<size_t>(i)];
    my += ys[static_cast<size_t>(i)];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (int i = 0; i < fit.n; ++i) {
    const double dx = xs[static_cast<size_t>(i)] - mx;
    const double dy = ys[static_cast<size_t>(i)] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0) return fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

}  // namespace qbnf::eng
