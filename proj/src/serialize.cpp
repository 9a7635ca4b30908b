#include "serialize.hpp"

#include <cinttypes>
#include <cmath>
#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <sstream>

#include "common.hpp"

namespace qbnf::ser {

std::string fmt17(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  // "-0" would read back as an integer and lose the sign bit
  if (x == 0.0 && std::signbit(x)) return "-0.0";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

double parse17(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  const char* begin = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || end != begin + s.size()) {
    throw ConfigError("parse17: not a number: '" + s + "'");
  }
  return v;
}

double number_from_json(const nlohmann::json& v, const std::string& what) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) return parse17(v.get<std::string>());
  throw ConfigError(what + ": expected a number");
}

// ---------------------------------------------------------------------------
// Emitter

struct Json::Impl {
  enum class Kind { Null, Bool, Int, Real, Str, Arr, Obj };
  Kind kind = Kind::Null;
  bool b = false;
  long long i = 0;
  double d = 0.0;
  std::string s;
  std::vector<Json> arr;
  std::map<std::string, Json> obj;  // lexicographic key order
};

namespace {

void escape_into(std::string& out, const std::string& s) {
  out.push_back('"');
  for (const char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\b': out += "\\b"; break;
      case '\f': out += "\\f"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out.push_back(c);
        }
    }
  }
  out.push_back('"');
}

}  // namespace

Json Json::null() {
  Json v;
  v.impl_ = std::make_shared<Impl>();
  return v;
}
Json Json::boolean(bool b) {
  Json v = null();
  v.impl_->kind = Impl::Kind::Bool;
  v.impl_->b = b;
  return v;
}
Json Json::integer(long long x) {
  Json v = null();
  v.impl_->kind = Impl::Kind::Int;
  v.impl_->i = x;
  return v;
}
Json Json::real(double x) {
  Json v = null();
  v.impl_->kind = Impl::Kind::Real;
  v.impl_->d = x;
  return v;
}
Json Json::str(std::string s) {
  Json v = null();
  v.impl_->kind = Impl::Kind::Str;
  v.impl_->s = std::move(s);
  return v;
}
Json Json::array() {
  Json v = null();
  v.impl_->kind = Impl::Kind::Arr;
  return v;
}
Json Json::object() {
  Json v = null();
  v.impl_->kind = Impl::Kind::Obj;
  return v;
}

void Json::push(Json v) {
  if (impl_->kind != Impl::Kind::Arr) {
    throw InvariantError("Json::push on a non-array");
  }
  impl_->arr.push_back(std::move(v));
}

void Json::set(const std::string& k, Json v) {
  if (impl_->kind != Impl::Kind::Obj) {
    throw InvariantError("Json::set on a non-object");
  }
  impl_->obj.insert_or_assign(k, std::move(v));
}

bool Json::is_object() const { return impl_->kind == Impl::Kind::Obj; }

bool Json::scalar() const {
  return impl_->kind != Impl::Kind::Arr && impl_->kind != Impl::Kind::Obj;
}

namespace {

void pad(std::string& out, int indent) {
  out.append(static_cast<size_t>(indent), ' ');
}

}  // namespace

void Json::dump_into(std::string& out, int indent) const {
  using K = Impl::Kind;
  const Impl& v = *impl_;
  switch (v.kind) {
    case K::Null: out += "null"; return;
    case K::Bool: out += v.b ? "true" : "false"; return;
    case K::Int: {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%lld", v.i);
      out += buf;
      return;
    }
    case K::Real:
      if (std::isfinite(v.d)) {
        out += fmt17(v.d);
      } else {
        escape_into(out, fmt17(v.d));  // "inf" / "-inf" / "nan"
      }
      return;
    case K::Str: escape_into(out, v.s); return;
    case K::Arr: {
      if (v.arr.empty()) {
        out += "[]";
        return;
      }
      bool inline_ok = true;
      for (const auto& e : v.arr) {
        if (!e.scalar()) inline_ok = false;
      }
      if (inline_ok) {
        out.push_back('[');
        for (size_t i = 0; i < v.arr.size(); ++i) {
          if (i) out += ", ";
          v.arr[i].dump_into(out, 0);
        }
        out.push_back(']');
        return;
      }
      out += "[\n";
      for (size_t i = 0; i < v.arr.size(); ++i) {
        pad(out, indent + 2);
        v.arr[i].dump_into(out, indent + 2);
        if (i + 1 < v.arr.size()) out.push_back(',');
        out.push_back('\n');
      }
      pad(out, indent);
      out.push_back(']');
      return;
    }
    case K::Obj: {
      if (v.obj.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      size_t i = 0;
      for (const auto& [k, e] : v.obj) {
        pad(out, indent + 2);
        escape_into(out, k);
        out += ": ";
        e.dump_into(out, indent + 2);
        if (++i < v.obj.size()) out.push_back(',');
        out.push_back('\n');
      }
      pad(out, indent);
      out.push_back('}');
      return;
    }
  }
}

std::string Json::dump() const {
  std::string out;
  dump_into(out, 0);
  out.push_back('\n');
  return out;
}

// ---------------------------------------------------------------------------
// Symbols

namespace {

Json matrix_json(const std::vector<std::vector<double>>& rows) {
  Json out = Json::array();
  for (const auto& r : rows) {
    Json row = Json::array();
    for (double x : r) row.push(Json::real(x));
    out.push(row);
  }
  return out;
}

Json atoms_json(const sym::Symbol& F) {
  const int s = F.gens()->s();
  const int l = F.l();
  Json atoms = Json::array();
  for (const auto& [key, c] : F.atoms()) {
    Json a = Json::object();
    Json p = Json::array();
    for (int i = 0; i < s; ++i) p.push(Json::integer(key[static_cast<size_t>(i)]));
    Json q = Json::array();
    for (int j = 0; j < l; ++j) {
      q.push(Json::integer(key[static_cast<size_t>(s + j)]));
    }
    a.set("p_idx", std::move(p));
    a.set("q", std::move(q));
    a.set("re", Json::real(c.real()));
    a.set("im", Json::real(c.imag()));
    atoms.push(std::move(a));
  }
  return atoms;
}

std::vector<std::vector<double>> rows_from_json(const nlohmann::json& j,
                                                const std::string& what) {
  if (!j.is_array() || j.empty()) {
    throw ConfigError(what + ": expected a non-empty array of rows");
  }
  std::vector<std::vector<double>> rows;
  for (const auto& r : j) {
    if (!r.is_array() || r.empty()) {
      throw ConfigError(what + ": rows must be non-empty arrays");
    }
    std::vector<double> row;
    for (const auto& x : r) row.push_back(number_from_json(x, what));
    rows.push_back(std::move(row));
  }
  return rows;
}

void require_keys(const nlohmann::json& j,
                  const std::vector<std::string>& keys,
                  const std::string& what) {
  if (!j.is_object()) throw ConfigError(what + ": expected an object");
  for (const auto& k : keys) {
    if (!j.contains(k)) throw ConfigError(what + ": missing key '" + k + "'");
  }
  for (const auto& [k, v] : j.items()) {
    (void)v;
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
      throw ConfigError(what + ": unknown key '" + k + "'");
    }
  }
}

std::vector<int32_t> ints_from_json(const nlohmann::json& j, size_t want,
                                    const std::string& what) {
  if (!j.is_array() || j.size() != want) {
    throw ConfigError(what + ": expected an array of " +
                      std::to_string(want) + " integers");
  }
  std::vector<int32_t> out;
  for (const auto& x : j) {
    if (!x.is_number_integer()) {
      throw ConfigError(what + ": entries must be integers");
    }
    out.push_back(x.get<int32_t>());
  }
  return out;
}

sym::Symbol atoms_from_json(const nlohmann::json& j,
                            const std::shared_ptr<const sym::PGenerators>& g,
                            int l, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + ": expected an atom array");
  sym::Symbol F(g, l);
  for (const auto& a : j) {
    require_keys(a, {"p_idx", "q", "re", "im"}, what + " atom");
    const auto p = ints_from_json(a.at("p_idx"),
                                  static_cast<size_t>(g->s()), what + ".p_idx");
    const auto q =
        ints_from_json(a.at("q"), static_cast<size_t>(l), what + ".q");
    const double re = number_from_json(a.at("re"), what + ".re");
    const double im = number_from_json(a.at("im"), what + ".im");
    if (!std::isfinite(re) || !std::isfinite(im)) {
      throw ConfigError(what + ": coefficients must be finite");
    }
    F.add(p, q, cplx(re, im));
  }
  return F;
}

std::shared_ptr<const sym::PGenerators> gens_from_json(
    const nlohmann::json& j, int m, const std::string& what) {
  auto rows = rows_from_json(j, what);
  for (const auto& r : rows) {
    if (static_cast<int>(r.size()) != m) {
      throw ConfigError(what + ": generator rows must have " +
                        std::to_string(m) + " entries");
    }
  }
  return sym::PGenerators::make(m, std::move(rows));
}

}  // namespace

Json symbol_to_json(const sym::Symbol& F, const freq::FrequencyMatrix& om) {
  Json out = Json::object();
  out.set("generators", matrix_json(F.gens()->gens));
  out.set("omega", matrix_json(om.rows()));
  out.set("atoms", atoms_json(F));
  return out;
}

Json vector_symbol_to_json(const sym::VectorSymbol& V,
                           const freq::FrequencyMatrix& om) {
  if (V.comp.empty()) throw ConfigError("vector_symbol_to_json: empty vector");
  Json out = Json::object();
  out.set("generators", matrix_json(V.comp.front().gens()->gens));
  out.set("omega", matrix_json(om.rows()));
  Json comps = Json::array();
  for (const auto& c : V.comp) comps.push(atoms_json(c));
  out.set("components", std::move(comps));
  return out;
}

ParsedSymbol symbol_from_json(const nlohmann::json& j) {
  require_keys(j, {"atoms", "generators", "omega"}, "symbol");
  freq::FrequencyMatrix om(rows_from_json(j.at("omega"), "symbol.omega"));
  auto g = gens_from_json(j.at("generators"), om.m(), "symbol.generators");
  return {atoms_from_json(j.at("atoms"), g, om.l(), "symbol.atoms"), om};
}

ParsedVectorSymbol vector_symbol_from_json(const nlohmann::json& j) {
  require_keys(j, {"components", "generators", "omega"}, "symbol vector");
  freq::FrequencyMatrix om(
      rows_from_json(j.at("omega"), "symbol vector.omega"));
  auto g =
      gens_from_json(j.at("generators"), om.m(), "symbol vector.generators");
  const auto& comps = j.at("components");
  if (!comps.is_array() || static_cast<int>(comps.size()) != om.m()) {
    throw ConfigError("symbol vector: expected " + std::to_string(om.m()) +
                      " components");
  }
  sym::VectorSymbol V;
  for (const auto& c : comps) {
    V.comp.push_back(
        atoms_from_json(c, g, om.l(), "symbol vector.components"));
  }
  return {std::move(V), om};
}

// ---------------------------------------------------------------------------
// records.csv

static const char* kCsvHeader =
    "r,rho_r,delta_r,M_r,norm_V,norm_W,norm_residual,norm_tail,bound_F,"
    "bound_rhs,measured_next,bound_ok,grad_G";

std::string records_csv(const std::vector<kam::IterationRecord>& recs) {
  std::string out = kCsvHeader;
  out.push_back('\n');
  for (const auto& r : recs) {
    out += std::to_string(r.r);
    out.push_back(',');
    out += fmt17(r.rho_r);
    out.push_back(',');
    out += fmt17(r.delta_r);
    out.push_back(',');
    out += fmt17(r.M_r);
    out.push_back(',');
    out += fmt17(r.norm_V);
    out.push_back(',');
    out += fmt17(r.norm_W);
    out.push_back(',');
    out += fmt17(r.norm_residual);
    out.push_back(',');
    out += fmt17(r.norm_tail);
    out.push_back(',');
    out += fmt17(r.bound_F);
    out.push_back(',');
    out += fmt17(r.bound_rhs);
    out.push_back(',');
    out += fmt17(r.measured_next);
    out.push_back(',');
    out += r.bound_ok ? "1" : "0";
    out.push_back(',');
    out += fmt17(r.grad_G);
    out.push_back('\n');
  }
  return out;
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::vector<kam::IterationRecord> records_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw ConfigError("records csv: bad header");
  }
  std::vector<kam::IterationRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 13) {
      throw ConfigError("records csv: expected 13 fields per row");
    }
    kam::IterationRecord r;
    r.r = static_cast<int>(parse17(f[0]));
    r.rho_r = parse17(f[1]);
    r.delta_r = parse17(f[2]);
    r.M_r = parse17(f[3]);
    r.norm_V = parse17(f[4]);
    r.norm_W = parse17(f[5]);
    r.norm_residual = parse17(f[6]);
    r.norm_tail = parse17(f[7]);
    r.bound_F = parse17(f[8]);
    r.bound_rhs = parse17(f[9]);
    r.measured_next = parse17(f[10]);
    if (f[11] != "0" && f[11] != "1") {
      throw ConfigError("records csv: bound_ok must be 0 or 1");
    }
    r.bound_ok = f[11] == "1";
    r.grad_G = parse17(f[12]);
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// run result

Json result_to_json(const kam::BnfResult& res,
                    const freq::FrequencyMatrix& om, Json config_echo) {
  Json out = Json::object();
  out.set("config", std::move(config_echo));
  out.set("converged", Json::boolean(res.converged));
  out.set("final_norm", Json::real(res.final_norm));
  out.set("B_infty", vector_symbol_to_json(res.B_infty, om));
  Json ws = Json::array();
  for (const auto& w : res.Ws) ws.push(symbol_to_json(w, om));
  out.set("Ws", std::move(ws));
  out.set("tail_estimate_A", Json::real(res.tail_estimate_A));
  return out;
}

namespace {

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

}  // namespace

ParsedResult result_from_json(const nlohmann::json& j) {
  require_keys(j,
               {"B_infty", "Ws", "config", "converged", "final_norm",
                "tail_estimate_A"},
               "result");
  auto B = vector_symbol_from_json(j.at("B_infty"));
  ParsedResult out{std::move(B.V), {}, std::move(B.omega), false, 0.0, 0.0,
                   j.at("config")};
  if (!j.at("converged").is_boolean()) {
    throw ConfigError("result.converged: expected a boolean");
  }
  out.converged = j.at("converged").get<bool>();
  out.final_norm = number_from_json(j.at("final_norm"), "result.final_norm");
  out.tail_estimate_A =
      number_from_json(j.at("tail_estimate_A"), "result.tail_estimate_A");
  if (!j.at("Ws").is_array()) throw ConfigError("result.Ws: expected array");
  for (const auto& w : j.at("Ws")) {
    auto p = symbol_from_json(w);
    if (!same_matrix(p.omega, out.omega)) {
      throw ConfigError("result.Ws: frequency header mismatch");
    }
    out.Ws.push_back(std::move(p.F));
  }
  return out;
}

// ---------------------------------------------------------------------------
// reports

Json divisor_report_json(const freq::BrjunoSums& sums) {
  Json out = Json::object();
  out.set("K", Json::integer(sums.K));
  Json m = Json::array();
  for (double v : sums.M_of_2k) m.push(Json::real(v));
  out.set("M", std::move(m));
  Json pa = Json::array();
  for (double v : sums.partial_abs) pa.push(Json::real(v));
  out.set("partial_abs", std::move(pa));
  Json ps = Json::array();
  for (double v : sums.partial_signed) ps.push(Json::real(v));
  out.set("partial_signed", std::move(ps));
  out.set("last_increment", Json::real(sums.last_increment));
  const bool bounded =
      !sums.M_of_2k.empty() && sums.M_of_2k.back() == sums.M_of_2k.front();
  out.set("no_small_divisors", Json::boolean(bounded));
  return out;
}

Json constants_report_json(const freq::ConstantsReport& rep) {
  Json out = Json::object();
  out.set("Z_k", Json::real(rep.Z_k));
  out.set("Delta", Json::real(rep.Delta));
  out.set("M_cap", Json::real(rep.M_cap));
  out.set("E0", Json::real(rep.E0));
  out.set("C_k", Json::real(rep.C_k));
  out.set("P", Json::real(rep.P));
  out.set("D_k", Json::real(rep.D_k));
  out.set("R_brjuno", Json::real(rep.R_brjuno));
  out.set("condomega_ok", Json::boolean(rep.condomega_ok));
  out.set("cond_D_lt_eP", Json::boolean(rep.cond_D_lt_eP));
  out.set("cond_D_lt_M", Json::boolean(rep.cond_D_lt_M));
  out.set("cond_grad", Json::boolean(rep.cond_grad));
  out.set("cond_norm_lt_R", Json::boolean(rep.cond_norm_lt_R));
  out.set("mu", Json::real(rep.mu));
  out.set("nu", Json::real(rep.nu));
  out.set("lambda0", Json::real(rep.lambda0));
  out.set("R_scaled_at_lambda0", Json::real(rep.R_scaled_at_lambda0));
  if (rep.E1) out.set("E1", Json::real(*rep.E1));
  if (rep.B_alpha) out.set("B_alpha", Json::real(*rep.B_alpha));
  if (rep.C_k_dio) out.set("C_k_dio", Json::real(*rep.C_k_dio));
  if (rep.P_dio) out.set("P_dio", Json::real(*rep.P_dio));
  if (rep.D_k_dio) out.set("D_k_dio", Json::real(*rep.D_k_dio));
  if (rep.R_dio) out.set("R_dio", Json::real(*rep.R_dio));
  if (rep.dio_D_lt_eP) out.set("dio_D_lt_eP", Json::boolean(*rep.dio_D_lt_eP));
  if (rep.dio_D_lt_M) out.set("dio_D_lt_M", Json::boolean(*rep.dio_D_lt_M));
  if (rep.dio_norm_lt_R) {
    out.set("dio_norm_lt_R", Json::boolean(*rep.dio_norm_lt_R));
  }
  return out;
}

Json spectrum_report_json(const orc::SpectrumReport& rep) {
  Json out = Json::object();
  out.set("interior_max_err", Json::real(rep.interior_max_err));
  out.set("interior_radius", Json::integer(rep.interior_radius));
  out.set("boundary_excluded", Json::integer(rep.boundary_excluded));
  out.set("ambiguous", Json::integer(rep.ambiguous));
  Json pairs = Json::array();
  for (const auto& p : rep.pairs) {
    Json row = Json::object();
    row.set("comp", Json::integer(p.comp));
    Json n = Json::array();
    for (int32_t v : p.n) n.push(Json::integer(v));
    row.set("n", std::move(n));
    row.set("predicted", Json::real(p.predicted));
    row.set("measured", Json::real(p.measured));
    row.set("overlap", Json::real(p.overlap));
    row.set("residual", Json::real(p.residual));
    row.set("interior", Json::boolean(p.interior));
    pairs.push(std::move(row));
  }
  out.set("pairs", std::move(pairs));
  return out;
}

}  // namespace qbnf::ser
