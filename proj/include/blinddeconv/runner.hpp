#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "blinddeconv/adapt.hpp"
#include "blinddeconv/charfn.hpp"
#include "blinddeconv/fixtures.hpp"
#include "blinddeconv/support.hpp"

namespace blinddeconv {

inline constexpr const char* kLibraryVersion = "0.1.0";

enum class Command {
  estimate_cf,
  estimate_support,
  adapt,
  estimate_distribution,
  lower_bound_check,
  genericity,
  kernel_diagnostics
};

std::string to_string(Command c);
Command parse_command(const std::string& s);

struct FixtureConfig {
  SignalSpec signal;
  NoiseSpec noise;
  std::size_t d1 = 1;

  //! Stable identifier, e.g. "circle-gaussian"; hashed into replicate seeds.
  std::string name() const;
};

struct DistributionConfig {
  //! Mask width; 0 picks practical_eta in practical mode and the default otherwise.
  double eta = 0.0;
  double radius = 0.0;
  std::size_t truth_draws = 2000;
  std::size_t max_atoms = 3000;
};

struct GenericityConfig {
  //! "square_boundary" or "fixture" (the truth set of the signal).
  std::string cloud = "square_boundary";
  std::size_t per_side = 125;
  std::size_t trials = 200;
  double r = 0.05;
  double delta = 1.0;
  double tol_unique = 1e-9;
};

struct KernelDiagConfig {
  std::vector<double> A{1.0};
  std::vector<std::size_t> dims{2};
  std::vector<double> h{0.1, 0.5, 1.0};
};

struct RunConfig {
  Command command = Command::estimate_support;
  std::uint64_t master_seed = 0;
  std::vector<std::size_t> n;
  std::vector<std::uint64_t> seeds;
  FixtureConfig fixture;
  ClassParams cls;
  SupportParams support;
  OptimizerConfig optimizer;
  std::optional<Window> window;
  LepskiConfig lepski;
  double kappa_true = 1.0;
  DistributionConfig distribution;
  GenericityConfig genericity;
  std::vector<double> gammas{0.4, 0.2, 0.1, 0.05};
  TvConfig tv;
  KernelDiagConfig kernel;

  //! Cross-field checks; throws InvalidArgument.
  void validate() const;
};

//! Strict parse: unknown keys, wrong types and failed parameter checks throw
//! InvalidArgument. A manifest written by a previous run is accepted as well.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);
//! Fully resolved configuration (every default spelled out).
nlohmann::json config_to_json(const RunConfig& cfg);

//! hash(master seed, fixture id, n, replicate index).
std::uint64_t replicate_seed(const RunConfig& cfg, std::size_t n, std::uint64_t replicate);

struct Artifacts {
  //! Relative path -> file body.
  std::map<std::string, std::string> files;
  //! Manifest without the timestamp.
  nlohmann::json manifest;
  std::size_t replicates = 0;
  std::size_t failed = 0;
};

//! Runs the pipeline. Replicate-level NumericalError is recorded in the status
//! column; anything else propagates.
Artifacts execute(const RunConfig& cfg);

//! Writes every file plus manifest.json (with the timestamp) under dir.
void write_artifacts(const std::filesystem::path& dir, const Artifacts& a,
                     const std::string& timestamp);

//! Median and quartiles (linear interpolation between order statistics).
struct Quartiles {
  double q25 = 0.0, median = 0.0, q75 = 0.0;
};
Quartiles quartiles(std::vector<double> values);

//! RFC 4180 field quoting.
std::string csv_field(const std::string& s);
//! %.17g, with nan / inf spelled out.
std::string csv_number(double x);

}  // namespace blinddeconv
