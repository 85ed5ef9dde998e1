#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"

namespace msl::cli {

inline constexpr const char* kToolVersion = "0.1.0";

/// Exit 2: a verification check failed.
class VerificationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GlobalOptions {
  std::uint64_t seed = 1;
  int threads = 0;
  bool force = false;
  std::string output = "-";
  std::vector<std::string> argv;
};

void add_model_commands(CLI::App& app, GlobalOptions& global);
void add_sample_commands(CLI::App& app, GlobalOptions& global);
void add_metastability_commands(CLI::App& app, GlobalOptions& global);
void add_cw_commands(CLI::App& app, GlobalOptions& global);
void add_learn_commands(CLI::App& app, GlobalOptions& global);
void add_verify_command(CLI::App& app, GlobalOptions& global);
void add_experiment_command(CLI::App& app, GlobalOptions& global);

}  // namespace msl::cli
