// blinddeconv <command> --config <path> [--out <dir>] [--threads N] [--seed S]
//
// Exit codes: 0 success (replicate failures are recorded per row), 2 invalid
// configuration or arguments, 3 numerical failure outside a replicate or in
// every replicate. Errors are reported as JSON on stderr and in error.json.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "blinddeconv/parallel.hpp"
#include "blinddeconv/runner.hpp"

namespace fs = std::filesystem;
using namespace blinddeconv;

namespace {

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

int report(const fs::path& out, int code, const std::string& kind, const std::string& message) {
  const nlohmann::json err{{"error", kind}, {"message", message}, {"exit_code", code}};
  std::cerr << err.dump(2) << "\n";
  std::error_code ec;
  fs::create_directories(out, ec);
  if (!ec) std::ofstream(out / "error.json") << err.dump(2) << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Blind deconvolution experiment runner"};
  app.require_subcommand(1, 1);
  std::string config_path;
  std::string out_dir = "blinddeconv-out";
  int threads = -1;
  std::optional<std::uint64_t> seed;
  for (const char* name : {"estimate-cf", "estimate-support", "adapt", "estimate-distribution",
                           "lower-bound-check", "genericity", "kernel-diagnostics"}) {
    CLI::App* sub = app.add_subcommand(name, std::string("run the ") + name + " pipeline");
    sub->add_option("--config", config_path, "JSON run configuration (or a previous manifest.json)")->required();
    sub->add_option("--out", out_dir, "artifact directory");
    sub->add_option("--threads", threads, "worker threads (0 = all cores); BLINDDECONV_THREADS otherwise");
    sub->add_option("--seed", seed, "master seed, overrides the config");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  const fs::path out(out_dir);

  if (threads < 0) {
    threads = 1;
    if (const char* env = std::getenv("BLINDDECONV_THREADS")) {
      try {
        threads = std::stoi(env);
      } catch (const std::exception&) {
        return report(out, 2, "invalid", "BLINDDECONV_THREADS is not an integer");
      }
      if (threads < 0) return report(out, 2, "invalid", "BLINDDECONV_THREADS must be non-negative");
    }
  }
  set_thread_count(static_cast<unsigned>(threads));

  RunConfig cfg;
  try {
    nlohmann::json j;
    {
      std::ifstream in(config_path);
      if (!in) throw InvalidArgument("cannot open config " + config_path);
      try {
        j = nlohmann::json::parse(in);
      } catch (const nlohmann::json::parse_error& e) {
        throw InvalidArgument(std::string("config is not valid JSON: ") + e.what());
      }
    }
    nlohmann::json& body = j.contains("library_version") && j.contains("config") ? j["config"] : j;
    if (!body.is_object()) throw InvalidArgument("config must be a JSON object");
    if (body.contains("command") && body["command"] != command)
      throw InvalidArgument("config command '" + body["command"].dump() + "' does not match '" + command + "'");
    body["command"] = command;
    if (seed) body["master_seed"] = *seed;
    cfg = parse_config(j);
  } catch (const InvalidArgument& e) {
    return report(out, 2, "invalid", e.what());
  }

  try {
    const Artifacts art = execute(cfg);
    write_artifacts(out, art, utc_timestamp());
    if (art.replicates > 0 && art.failed == art.replicates)
      return report(out, 3, "numerical", "every replicate failed; see the status column");
    std::cout << "wrote " << art.files.size() + 1 << " files to " << out.string() << "\n";
    return 0;
  } catch (const InvalidArgument& e) {
    return report(out, 2, "invalid", e.what());
  } catch (const NumericalError& e) {
    return report(out, 3, "numerical", e.what());
  }
}
