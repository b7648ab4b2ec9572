#pragma once

// Command-line front end: config loading, overrides and the four commands.
// Exit codes: 0 success, 1 I/O / config / runtime error, 2 verification
// failure (thresholds unmet, telescoping bound violated, cap not contained).

#include <string>
#include <vector>

#include <json.hpp>

namespace eclab::cli {

// Parses a JSON file; ConfigError with the parser diagnostic on bad input.
nlohmann::json load_config(const std::string& path);

// "a.b.c=VALUE": VALUE is parsed as JSON when it can be, else kept as a string.
void apply_override(nlohmann::json& cfg, const std::string& assignment);

// "RxT" (or with the multiplication sign) into radial and angular node counts.
void parse_grid(const std::string& text, int& radial, int& angular);

struct Options {
  std::string config;  // empty: built-in defaults
  std::string out = ".";
  std::vector<std::string> overrides;
  std::string grid;
  bool has_seed = false;
  unsigned long long seed = 0;
};

// Final config after --seed, --grid and --override, in that order.
nlohmann::json effective_config(const std::string& command, const Options& opt);

int cmd_synthesize(const Options& opt);
int cmd_patch(const Options& opt);
int cmd_measure(const Options& opt);
int cmd_peek(const Options& opt);

int main(int argc, char** argv);

}  // namespace eclab::cli
