// Command-line front end: bosonize <subcommand> --config run.json [options]

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bosonize/app.hpp"

int main(int argc, char** argv) {
  CLI::App cli{"Finite reservoir vs bosonic fluctuation reservoir workbench"};
  cli.set_version_flag("--version", BOSONIZE_VERSION);

  std::string command, config_path, output_dir, format;
  std::vector<std::string> tol_args;
  std::int64_t seed = 0;
  bool quiet = false;
  cli.add_option("command", command, "Subcommand")->required()->check(CLI::IsMember(bosonize::subcommands()));
  cli.add_option("--config", config_path, "Run configuration (JSON)")->required();
  cli.add_option("--output", output_dir, "Output directory (overrides output.path)");
  cli.add_option("--format", format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  cli.add_option("--tol", tol_args, "Tolerance override key=value (repeatable)");
  auto* seed_opt = cli.add_option("--seed", seed, "Random seed");
  cli.add_flag("--quiet", quiet, "Suppress progress messages");
  CLI11_PARSE(cli, argc, argv);

  std::string out_dir = output_dir;
  try {
    bosonize::ConfigOverrides ov;
    if (!output_dir.empty()) ov.output = output_dir;
    if (!format.empty()) ov.format = format;
    if (*seed_opt) ov.seed = seed;
    for (const auto& arg : tol_args) {
      const auto eq = arg.find('=');
      if (eq == std::string::npos)
        throw bosonize::Error(bosonize::ErrorKind::SchemaError, "--tol expects key=value, got " + arg);
      try {
        ov.tolerances[arg.substr(0, eq)] = std::stod(arg.substr(eq + 1));
      } catch (const std::exception&) {
        throw bosonize::Error(bosonize::ErrorKind::SchemaError, "--tol value is not a number: " + arg);
      }
    }
    const bosonize::RunConfig cfg = bosonize::parse_config(config_path, ov);
    out_dir = cfg.output_path;
    bosonize::App app(cfg, std::cerr, quiet);
    return app.run(command);
  } catch (const bosonize::Error& e) {
    const auto record = bosonize::error_record(e);
    std::cerr << record.dump() << "\n";
    if (!out_dir.empty()) try {
      bosonize::write_atomic(std::filesystem::path(out_dir) / "error.json", record.dump(1) + "\n");
    } catch (const std::exception&) {
    }
    return bosonize::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "{\"error\":\"Internal\",\"message\":" << nlohmann::json(e.what()).dump() << ",\"exit_code\":1}\n";
    return 1;
  }
}
