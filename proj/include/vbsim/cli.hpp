#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "vbsim/charge_environment.hpp"
#include "vbsim/coupling_model.hpp"

namespace vbsim::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNumerical = 2;

// Settings shared by the subcommands. Values come from built-in defaults,
// then the config file (--config or $VBSIM_CONFIG), then explicit flags.
struct RunConfig {
  std::optional<std::filesystem::path> config_path;
  CouplingConstants constants;
  EnvironmentConfig env;
  std::size_t n_configs = 10000;
  double linewidth_mhz = 30.0;
  double rho_min = 0.0;
  double rho_max = 0.2;
  double contrast_min = 0.0;
  double contrast_max = 0.1;
  unsigned threads = 0;  // 0 = hardware concurrency
};

// Keys accepted in a config file besides the coupling-constant keys.
const std::vector<std::string>& run_config_keys();

// Applies a parsed config file. Unknown keys are rejected.
void apply_config(const KeyValueMap& kv, RunConfig& cfg);

// Parses "lo:hi:n" into n evenly spaced values (n = 1 gives {lo}).
std::vector<double> parse_linspace(const std::string& spec);

// Parses "lo:hi".
std::pair<double, double> parse_range(const std::string& spec);

// argv[0] is the program name. Returns 0 on success, 1 on usage or input
// errors, 2 on numerical failures (including a fit that ends on a grid edge).
int run_command(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

}  // namespace vbsim::cli
