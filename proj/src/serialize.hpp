#pragma once
// Artifact serialization: a deterministic JSON emitter (sorted keys, 17
// significant digits, stable layout) plus parsers for the same schemas, and
// the records.csv encoding of an iteration trace.  Identical inputs must
// produce byte-identical artifacts, and every float must round-trip exactly.
//
// Non-finite floats have no JSON representation; they are emitted as the
// strings "inf" / "-inf" / "nan" and accepted back by the parsers.

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "freq.hpp"
#include "kam.hpp"
#include "oracle.hpp"
#include "symbol.hpp"

namespace qbnf::ser {

// printf "%.17g": enough digits to reproduce any double bit-exactly.
std::string fmt17(double x);

// Inverse of fmt17, accepting the non-finite spellings above.
double parse17(const std::string& s);

// Reads a JSON scalar written by the emitter: a number, or one of the
// quoted non-finite spellings.  Throws ConfigError otherwise.
double number_from_json(const nlohmann::json& v, const std::string& what);

// Emission-side JSON value with a deterministic dump: object keys sorted
// lexicographically, floats via fmt17, scalar-only arrays inlined.
class Json {
 public:
  static Json null();
  static Json boolean(bool b);
  static Json integer(long long v);
  static Json real(double v);
  static Json str(std::string s);
  static Json array();
  static Json object();

  void push(Json v);                     // array element
  void set(const std::string& k, Json v);  // object member (last set wins)

  bool is_object() const;
  std::string dump() const;  // trailing newline included

 private:
  struct Impl;
  void dump_into(std::string& out, int indent) const;
  bool scalar() const;
  std::shared_ptr<Impl> impl_;
};

// ---- symbols -------------------------------------------------------------
// Schema: a symbol is {"atoms": [{"im":f,"p_idx":[int],"q":[int],"re":f}],
// "generators": [[...]], "omega": [[...]]}; a symbol vector replaces the
// single atom list with "components": [[atom,...], ...].

Json symbol_to_json(const sym::Symbol& F, const freq::FrequencyMatrix& om);
Json vector_symbol_to_json(const sym::VectorSymbol& V,
                           const freq::FrequencyMatrix& om);

struct ParsedSymbol {
  sym::Symbol F;
  freq::FrequencyMatrix omega;
};
struct ParsedVectorSymbol {
  sym::VectorSymbol V;
  freq::FrequencyMatrix omega;
};

ParsedSymbol symbol_from_json(const nlohmann::json& j);
ParsedVectorSymbol vector_symbol_from_json(const nlohmann::json& j);

// ---- iteration trace -----------------------------------------------------

// Fixed column order:
// r,rho_r,delta_r,M_r,norm_V,norm_W,norm_residual,norm_tail,bound_F,
// bound_rhs,measured_next,bound_ok,grad_G
std::string records_csv(const std::vector<kam::IterationRecord>& recs);
std::vector<kam::IterationRecord> records_from_csv(const std::string& text);

// ---- run result ----------------------------------------------------------
// Top-level keys: B_infty, Ws, config, converged, final_norm,
// tail_estimate_A.  config is an opaque echo supplied by the caller.

Json result_to_json(const kam::BnfResult& res,
                    const freq::FrequencyMatrix& om, Json config_echo);

struct ParsedResult {
  sym::VectorSymbol B_infty;
  std::vector<sym::Symbol> Ws;
  freq::FrequencyMatrix omega;
  bool converged = false;
  double final_norm = 0.0;
  double tail_estimate_A = 0.0;
  nlohmann::json config;
};

ParsedResult result_from_json(const nlohmann::json& j);

// ---- reports -------------------------------------------------------------

Json divisor_report_json(const freq::BrjunoSums& sums);
Json constants_report_json(const freq::ConstantsReport& rep);
Json spectrum_report_json(const orc::SpectrumReport& rep);

}  // namespace qbnf::ser
