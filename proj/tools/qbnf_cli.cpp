// Batch front door for the normal-form engine.  All computation lives
// behind the C API; this binary only parses flags, moves file bytes and
// maps status codes to process exit codes:
//   0 success, 1 non-convergence, 2 config error, 3 internal invariant
//   violation.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qbnf/qbnf.h"

namespace fs = std::filesystem;

namespace {

struct FreeDeleter {
  void operator()(char* p) const { qbnf_free(p); }
};
using CStr = std::unique_ptr<char, FreeDeleter>;

struct SessionDeleter {
  void operator()(qbnf_session* s) const { qbnf_session_destroy(s); }
};
using Session = std::unique_ptr<qbnf_session, SessionDeleter>;

bool read_file(const std::string& path, std::string* out,
               std::string* error) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    *error = "cannot open '" + path + "'";
    return false;
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) {
    *error = "cannot read '" + path + "'";
    return false;
  }
  *out = buf.str();
  return true;
}

bool write_file(const fs::path& path, const std::string& content,
                std::string* error) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    *error = "cannot open '" + path.string() + "' for writing";
    return false;
  }
  out.write(content.data(),
            static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) {
    *error = "cannot write '" + path.string() + "'";
    return false;
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Exact-arithmetic normal-form engine for commuting perturbed "
      "Hamiltonians on the torus"};

  std::string command;
  app.add_option("command", command,
                 "one of: divisors | radii | run | validate | generate")
      ->required();
  std::string config_path;
  app.add_option("--config", config_path, "config JSON file")->required();
  std::vector<std::string> overrides;
  app.add_option("--set", overrides,
                 "override a scalar config field, e.g. kam.alpha=0.4 "
                 "(repeatable)");
  std::string result_path;
  app.add_option("--result", result_path,
                 "result.json to validate (default: <output.dir>/result.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints help or the error
    return code == 0 ? 0 : QBNF_CONFIG_ERROR;
  }

  std::string config_text;
  std::string io_error;
  if (!read_file(config_path, &config_text, &io_error)) {
    std::cerr << "error: " << io_error << "\n";
    return QBNF_CONFIG_ERROR;
  }

  std::vector<const char*> override_ptrs;
  override_ptrs.reserve(overrides.size());
  for (const auto& s : overrides) override_ptrs.push_back(s.c_str());

  qbnf_session* raw = nullptr;
  char* create_error = nullptr;
  const int create_rc = qbnf_session_create(
      config_text.c_str(),
      override_ptrs.empty() ? nullptr : override_ptrs.data(),
      override_ptrs.size(), &raw, &create_error);
  CStr create_error_guard(create_error);
  if (create_rc != QBNF_OK) {
    std::cerr << "error: "
              << (create_error ? create_error : "session creation failed")
              << "\n";
    return create_rc;
  }
  Session session(raw);

  const fs::path out_dir = qbnf_session_output_dir(session.get());

  std::string extra;
  if (command == "validate") {
    const std::string path = result_path.empty()
                                 ? (out_dir / "result.json").string()
                                 : result_path;
    if (!read_file(path, &extra, &io_error)) {
      std::cerr << "error: " << io_error << "\n";
      return QBNF_CONFIG_ERROR;
    }
  }

  char* envelope = nullptr;
  const int rc = qbnf_command(session.get(), command.c_str(),
                              extra.empty() ? nullptr : extra.c_str(),
                              &envelope);
  CStr envelope_guard(envelope);
  if (rc != QBNF_OK && rc != QBNF_NOT_CONVERGED) {
    std::cerr << "error: " << qbnf_session_last_error(session.get()) << "\n";
    return rc;
  }

  nlohmann::json env;
  try {
    env = nlohmann::json::parse(envelope);
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: malformed engine envelope: " << e.what() << "\n";
    return QBNF_INTERNAL_ERROR;
  }

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    std::cerr << "error: cannot create output directory '"
              << out_dir.string() << "': " << ec.message() << "\n";
    return QBNF_CONFIG_ERROR;
  }

  for (const auto& a : env.at("artifacts")) {
    const auto name = a.at("filename").get<std::string>();
    const auto content = a.at("content").get<std::string>();
    if (!write_file(out_dir / name, content, &io_error)) {
      std::cerr << "error: " << io_error << "\n";
      return QBNF_CONFIG_ERROR;
    }
    std::cerr << "wrote " << (out_dir / name).string() << "\n";
  }

  for (const auto& w : env.at("warnings")) {
    std::cerr << "warning: " << w.get<std::string>() << "\n";
  }
  std::cout << env.at("summary").get<std::string>();
  return rc;
}
