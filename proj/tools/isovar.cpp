// isovar: scenario runner.
//
//   isovar run <config> [--out DIR] [--seed N] [--threads N]
//   isovar table <config>
//   isovar dump-mesh <spec>
//   isovar dump-varifold <spec>
//   isovar normalize <config>

#include "runner.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

using namespace isovar;
using namespace isovar::cli;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CliError(exit_parse, "cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// A dump spec is {ambient: ..., mesh: ...}; no ambient means the generator default.
std::pair<AmbientPtr, YAML::Node> dump_spec(const std::string& path) {
  const YAML::Node root = parse_config(slurp(path));
  check_keys(root, {"ambient", "mesh"}, "spec");
  if (!root["mesh"]) invalid("spec", "missing 'mesh'");
  AmbientPtr amb;
  if (root["ambient"]) amb = build_ambient(root["ambient"], "spec.ambient");
  return {amb, root["mesh"]};
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const CliError& e) {
    std::cerr << "isovar: " << e.what() << "\n";
    return e.code;
  } catch (const Error& e) {
    std::cerr << "isovar: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const YAML::Exception& e) {
    std::cerr << "isovar: " << e.what() << "\n";
    return exit_validation;
  } catch (const std::exception& e) {
    std::cerr << "isovar: " << e.what() << "\n";
    return exit_numeric;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"isovar: varifold isoperimetric checks and curve-shortening flow scenarios"};
  app.require_subcommand(1);

  std::string config;
  std::string out_dir;
  unsigned seed = 0;
  unsigned threads = 1;
  auto* run = app.add_subcommand("run", "run every scenario in a config and write report files");
  run->add_option("config", config, "config file")->required();
  run->add_option("--out", out_dir, "output directory (default: $ISOVAR_OUT, then ./isovar-out)");
  auto* seed_opt = run->add_option("--seed", seed, "seed override");
  run->add_option("--threads", threads, "scenarios run in parallel")->check(CLI::PositiveNumber);

  auto* table = app.add_subcommand("table", "print convergence tables for the convergence scenarios of a config");
  table->add_option("config", config, "config file")->required();

  std::string spec;
  auto* dump_mesh = app.add_subcommand("dump-mesh", "print a generated mesh in the mesh text format");
  dump_mesh->add_option("spec", spec, "spec file with 'mesh' and optional 'ambient'")->required();
  auto* dump_var = app.add_subcommand("dump-varifold", "print the varifold of a generated mesh");
  dump_var->add_option("spec", spec, "spec file with 'mesh' and optional 'ambient'")->required();

  auto* normalize = app.add_subcommand("normalize", "print a config with sorted keys");
  normalize->add_option("config", config, "config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : exit_parse;
  }

  if (run->parsed()) {
    return guarded([&] {
      RunOptions opt;
      if (*seed_opt) opt.seed = seed;
      opt.threads = threads;
      if (out_dir.empty()) {
        const char* env = std::getenv("ISOVAR_OUT");
        out_dir = env && *env ? env : "isovar-out";
      }
      const auto o = run_text(slurp(config), opt);
      write_outputs(o, out_dir);
      std::cout << o.table;
      return o.code;
    });
  }
  if (table->parsed()) {
    return guarded([&] {
      unsigned s = 1;
      auto prepared = prepare_all(parse_config(slurp(config)), s, std::nullopt);
      int code = exit_ok;
      std::size_t shown = 0;
      for (const auto& p : prepared) {
        if (p.kind != "convergence") continue;
        const auto r = execute(p);
        ++shown;
        if (r.error_code) {
          std::cerr << "isovar: " << p.id << ": " << r.error << "\n";
          code = std::max(code, r.error_code);
          continue;
        }
        std::cout << "# " << p.id << "\n";
        for (const auto& [name, content] : r.files)
          if (name == p.id + ".table.txt") std::cout << content;
        if (!r.pass() && code == exit_ok) code = exit_assertion;
      }
      if (!shown) throw CliError(exit_validation, "config has no convergence scenario");
      return code;
    });
  }
  if (dump_mesh->parsed() || dump_var->parsed()) {
    return guarded([&] {
      const auto [amb, node] = dump_spec(spec);
      if (dump_mesh->parsed()) write_mesh(std::cout, build_mesh(node, amb, "spec.mesh"));
      else write_varifold(std::cout, build_varifold(node, amb, "spec.mesh"));
      return exit_ok;
    });
  }
  return guarded([&] {
    std::cout << normalize_config(parse_config(slurp(config)));
    return exit_ok;
  });
}
