#include "qbnf/qbnf.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <string>

#include "common.hpp"
#include "engine.hpp"
#include "serialize.hpp"

struct qbnf_session {
  qbnf::eng::RunConfig cfg;
  std::string last_error;
};

namespace {

char* dup_cstr(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (p) std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

std::string envelope_json(const qbnf::eng::CommandResult& res) {
  using qbnf::ser::Json;
  Json out = Json::object();
  Json arts = Json::array();
  for (const auto& a : res.artifacts) {
    Json e = Json::object();
    e.set("filename", Json::str(a.filename));
    e.set("content", Json::str(a.content));
    arts.push(std::move(e));
  }
  out.set("artifacts", std::move(arts));
  out.set("summary", Json::str(res.summary));
  Json warns = Json::array();
  for (const auto& w : res.warnings) warns.push(Json::str(w));
  out.set("warnings", std::move(warns));
  out.set("exit_code", Json::integer(res.exit_code));
  return out.dump();
}

}  // namespace

extern "C" {

const char* qbnf_version(void) { return "1.0.0"; }

void qbnf_free(char* p) { std::free(p); }

int qbnf_session_create(const char* config_json,
                        const char* const* overrides, size_t n_overrides,
                        qbnf_session** session_out, char** error_out) {
  if (error_out) *error_out = nullptr;
  if (!session_out) return QBNF_CONFIG_ERROR;
  *session_out = nullptr;
  if (!config_json) {
    if (error_out) *error_out = dup_cstr("config_json is NULL");
    return QBNF_CONFIG_ERROR;
  }
  try {
    auto j = qbnf::eng::config_from_text(config_json);
    for (size_t i = 0; i < n_overrides; ++i) {
      if (!overrides || !overrides[i]) {
        throw qbnf::ConfigError("override " + std::to_string(i) + " is NULL");
      }
      qbnf::eng::set_override(j, overrides[i]);
    }
    *session_out = new qbnf_session{qbnf::eng::parse_config(j), {}};
    return QBNF_OK;
  } catch (const qbnf::ConfigError& e) {
    if (error_out) *error_out = dup_cstr(e.what());
    return QBNF_CONFIG_ERROR;
  } catch (const std::exception& e) {
    if (error_out) *error_out = dup_cstr(e.what());
    return QBNF_INTERNAL_ERROR;
  }
}

void qbnf_session_destroy(qbnf_session* s) { delete s; }

const char* qbnf_session_last_error(const qbnf_session* s) {
  return s ? s->last_error.c_str() : "session is NULL";
}

const char* qbnf_session_output_dir(const qbnf_session* s) {
  return s ? s->cfg.output_dir.c_str() : ".";
}

int qbnf_command(qbnf_session* s, const char* command, const char* extra,
                 char** envelope_out) {
  if (!s) return QBNF_CONFIG_ERROR;
  s->last_error.clear();
  if (envelope_out) *envelope_out = nullptr;
  if (!command || !envelope_out) {
    s->last_error = "command and envelope_out must be non-NULL";
    return QBNF_CONFIG_ERROR;
  }
  try {
    const auto res =
        qbnf::eng::dispatch(s->cfg, command, extra ? extra : "");
    *envelope_out = dup_cstr(envelope_json(res));
    if (!*envelope_out) {
      s->last_error = "out of memory";
      return QBNF_INTERNAL_ERROR;
    }
    return res.exit_code == 0 ? QBNF_OK : QBNF_NOT_CONVERGED;
  } catch (const qbnf::ConfigError& e) {
    s->last_error = e.what();
    return QBNF_CONFIG_ERROR;
  } catch (const std::exception& e) {
    s->last_error = e.what();
    return QBNF_INTERNAL_ERROR;
  }
}

}  // extern "C"
