#pragma once

// Config -> prepared scenarios -> buffered results -> report files.

#include "scenarios.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <filesystem>
#include <future>

namespace isovar::cli {

/// Git blob hash: sha1("blob <len>\0" + content).
inline std::string blob_hash(const std::string& content) {
  const std::string header = "blob " + std::to_string(content.size()) + '\0';
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  const bool ok = ctx && EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) &&
                  EVP_DigestUpdate(ctx, header.data(), header.size()) &&
                  EVP_DigestUpdate(ctx, content.data(), content.size()) && EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  if (!ok) throw std::runtime_error("sha1 failed");
  static const char* hex = "0123456789abcdef";
  std::string s;
  for (unsigned int i = 0; i < len; ++i) {
    s += hex[md[i] >> 4];
    s += hex[md[i] & 15];
  }
  return s;
}

inline std::string text_seconds(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", s);
  return buf;
}

inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::numeric:
    case ErrorKind::step_rejected:
    case ErrorKind::topology:
    case ErrorKind::inconclusive:
    case ErrorKind::certificate_invalid:
    case ErrorKind::epsilon_too_large:
      return exit_numeric;
    default:
      return exit_validation;
  }
}

inline YAML::Node parse_config(const std::string& text) {
  try {
    return YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw CliError(exit_parse, std::string("parse error: ") + e.what());
  }
}

struct RunOptions {
  std::optional<unsigned> seed;
  unsigned threads = 1;
  std::filesystem::path out;
};

struct RunOutcome {
  int code = exit_ok;
  std::string jsonl;
  std::string table;
  std::vector<std::pair<std::string, std::string>> files;
  std::string timing;
};

/// Validates everything first; a validation failure aborts before any scenario runs.
inline std::vector<Prepared> prepare_all(const YAML::Node& root, unsigned& seed, const std::optional<unsigned>& override) {
  if (!root || root.IsNull()) return {};
  check_keys(root, {"scenarios", "seed"}, "config");
  seed = override ? *override : get_or<unsigned>(root, "seed", 1u, "config");
  std::vector<Prepared> out;
  const YAML::Node list = root["scenarios"];
  if (!list || list.IsNull()) return out;
  if (!list.IsSequence()) invalid("config", "'scenarios' must be a list");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < list.size(); ++i) {
    try {
      out.push_back(prepare(list[i], i, seed));
    } catch (const Error& e) {
      throw CliError(exit_validation, "scenarios[" + std::to_string(i) + "]: " + e.what());
    } catch (const YAML::Exception& e) {
      throw CliError(exit_validation, "scenarios[" + std::to_string(i) + "]: " + e.what());
    }
    if (!ids.insert(out.back().id).second) invalid("scenarios[" + std::to_string(i) + "]", "duplicate id");
  }
  return out;
}

inline ScenarioResult execute(const Prepared& p) {
  ScenarioResult r;
  r.id = p.id;
  r.kind = p.kind;
  try {
    p.run(r);
  } catch (const Error& e) {
    r.error_code = exit_code_for(e.kind());
    r.error = e.what();
  } catch (const CliError& e) {
    r.error_code = e.code;
    r.error = e.what();
  } catch (const std::exception& e) {
    r.error_code = exit_numeric;
    r.error = e.what();
  }
  return r;
}

inline std::string render_table(const std::vector<ScenarioResult>& results) {
  std::ostringstream os;
  char buf[512];
  std::snprintf(buf, sizeof buf, "%-22s %-30s %-16s %-26s %s\n", "scenario", "item", "metric", "value", "status");
  os << buf;
  for (const auto& r : results) {
    for (const auto& row : r.rows) {
      std::snprintf(buf, sizeof buf, "%-22s %-30s %-16s %-26s %s\n", r.id.c_str(), row[0].c_str(), row[1].c_str(),
                    row[2].c_str(), row[3].c_str());
      os << buf;
    }
    std::snprintf(buf, sizeof buf, "%-22s %-30s %-16s %-26s %s\n", r.id.c_str(), "-", "summary",
                  r.error.empty() ? "-" : r.error.c_str(), r.pass() ? "PASS" : "FAIL");
    os << buf;
  }
  return os.str();
}

/// Runs a config text. Report content excludes wall time; that goes to `timing`.
inline RunOutcome run_text(const std::string& text, const RunOptions& opt) {
  RunOutcome out;
  unsigned seed = 1;
  const auto prepared = prepare_all(parse_config(text), seed, opt.seed);

  std::vector<ScenarioResult> results(prepared.size());
  std::vector<double> seconds(prepared.size(), 0.0);
  const unsigned threads = std::max(1u, opt.threads);
  auto timed = [&](std::size_t i) {
    const auto t0 = std::chrono::steady_clock::now();
    results[i] = execute(prepared[i]);
    seconds[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  for (std::size_t start = 0; start < prepared.size(); start += threads) {
    std::vector<std::future<void>> batch;
    for (std::size_t i = start; i < std::min(prepared.size(), start + threads); ++i)
      batch.push_back(std::async(threads > 1 ? std::launch::async : std::launch::deferred, timed, i));
    for (auto& f : batch) f.get();
  }

  std::size_t passed = 0;
  int worst_error = 0;
  bool any_fail = false;
  std::ostringstream jl;
  jl << Json{{"record", "run"}, {"config_hash", blob_hash(text)}, {"seed", seed}, {"scenarios", prepared.size()}}.dump()
     << "\n";
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    for (const auto& rec : r.records) jl << rec.dump() << "\n";
    for (const auto& a : r.assertions)
      jl << Json{{"record", "assertion"}, {"scenario", r.id}, {"name", a.name}, {"pass", a.pass}, {"detail", a.detail}}.dump()
         << "\n";
    Json s{{"record", "scenario"}, {"scenario", r.id}, {"kind", r.kind}, {"pass", r.pass()}};
    if (r.error_code) s["error"] = r.error;
    jl << s.dump() << "\n";
    for (const auto& f : r.files) out.files.push_back(f);
    if (r.pass()) ++passed;
    if (r.error_code) worst_error = std::max(worst_error, r.error_code);
    if (!r.pass()) any_fail = true;
    out.timing += r.id + " " + text_seconds(seconds[i]) + "\n";
  }
  jl << Json{{"record", "summary"}, {"passed", passed}, {"failed", results.size() - passed}}.dump() << "\n";
  out.jsonl = jl.str();
  out.table = render_table(results);
  out.code = worst_error ? worst_error : (any_fail ? exit_assertion : exit_ok);
  return out;
}

inline void write_outputs(const RunOutcome& o, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto put = [&](const std::string& name, const std::string& content) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw CliError(exit_validation, "cannot write " + (dir / name).string());
    f << content;
  };
  put("report.jsonl", o.jsonl);
  put("report.txt", o.table);
  for (const auto& [name, content] : o.files) put(name, content);
  put("timing.txt", o.timing);
}

}  // namespace isovar::cli
