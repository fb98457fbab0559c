#pragma once

// Experiment configuration: a flat TOML-style key/value file.
//
//   case = "bernoulli_jobs"        # or "linear_marketing"
//   m = 2
//   T = 100
//   runs = 5
//   master_seed = 7
//   policies = ["bora1", "bora2", "bora3", "sbf"]
//   [budget]
//   mode = "constant"              # constant | uniform | gaussian | held_gaussian
//   params = [33.9]
//   [env]
//   nu = [25, 50]
//
// See docs/config.md for the full key reference.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "bora/acquisition.hpp"
#include "bora/environments.hpp"
#include "bora/policies.hpp"

namespace bora {

// Parsed value of one key: a string, a number, a boolean or a flat array.
using ConfigScalar = std::variant<std::string, double, bool>;
using ConfigValue = std::variant<std::string, double, bool, std::vector<ConfigScalar>>;

// Keys are flattened as "table.key". Throws ConfigError with a line number on
// malformed input or duplicate keys.
std::map<std::string, ConfigValue> parse_config_text(std::string_view text);

struct ExperimentConfig {
  CaseKind case_kind = CaseKind::bernoulli_jobs;
  int m = 2;
  int horizon = 100;
  int runs = 5;
  std::uint64_t master_seed = 0;
  BudgetMode budget = ConstantBudget{33.9};
  // Job difficulties (bernoulli_jobs). Empty means nu_i = 25 i.
  std::vector<double> nu;
  // Seed for the marketing return parameters; unset derives them from master_seed.
  std::optional<std::uint64_t> eta_seed;
  std::vector<PolicyId> policies{PolicyId::bora1, PolicyId::bora2, PolicyId::bora3};
  BetaSchedule beta = BetaSchedule::randomized();
  double wasserstein_p = 2.0;
  std::filesystem::path out_dir = "out";
  BoraOptions bora;

  // Job difficulties with the default applied.
  std::vector<double> job_difficulties() const;
  // Throws ConfigError naming the offending key.
  void validate() const;
};

ExperimentConfig config_from_text(std::string_view text);
// Throws IoError if the file cannot be read, ConfigError if it is invalid.
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace bora
