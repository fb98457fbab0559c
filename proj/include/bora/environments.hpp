#pragma once

// Simulated reward and budget processes.
//
// Policies never hold a reference to an environment: the harness steps the
// environment and hands policies only (decision, reward[, outcomes]).

#include <optional>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "bora/measures.hpp"
#include "bora/rng.hpp"

namespace bora {

enum class CaseKind { bernoulli_jobs, linear_marketing };

const char* to_string(CaseKind kind);

struct JobsOutcome {
  int reward = 0;
  std::vector<int> per_arm_outcomes;
};

// Job i completes with probability min(1, x_i / nu_i), independently per step.
class BernoulliJobsEnv {
public:
  BernoulliJobsEnv(std::vector<double> nu, std::uint64_t seed);

  int size() const { return static_cast<int>(nu_.size()); }
  const std::vector<double>& nu() const { return nu_; }

  JobsOutcome step(const AllocationDecision& x);

  // Expected reward sum_i min(1, x_i / nu_i).
  double expected_reward(const Eigen::Ref<const Eigen::VectorXd>& amounts) const;
  // Best achievable expected reward at this budget (greedy fill of easiest jobs).
  double optimal_expected_reward(double budget) const;

private:
  std::vector<double> nu_;
  Rng rng_;
};

struct ChannelParams {
  double mean = 0.0;   // in [0, 1]
  double stddev = 0.0; // in [0, 0.2]
};

// Draws per-channel return parameters: mean ~ U(0, 1), stddev ~ U(0, 0.2).
std::vector<ChannelParams> draw_channel_params(int m, Rng& rng);

// E[max(0, N(mean, stddev))].
double rectified_normal_mean(double mean, double stddev);

// sum_i eta_i * x_i for a given return draw.
double marketing_reward(std::span<const double> eta, const AllocationDecision& x);

// Linear returns with eta_i = max(0, N(mean_i, stddev_i)) drawn fresh each step.
class LinearMarketingEnv {
public:
  LinearMarketingEnv(std::vector<ChannelParams> params, std::uint64_t seed);

  int size() const { return static_cast<int>(params_.size()); }
  const std::vector<ChannelParams>& params() const { return params_; }

  std::vector<double> draw_returns();
  double step(const AllocationDecision& x);

private:
  std::vector<ChannelParams> params_;
  Rng rng_;
};

struct ConstantBudget {
  double value;
};
struct UniformBudget {
  double lo;
  double hi;
};
struct GaussianBudget {
  double mean;
  double stddev;
  double floor = 1.0;
};
// One Gaussian draw (resampled above the floor) held for the whole horizon.
struct HeldGaussianBudget {
  double mean;
  double stddev;
  double floor = 1.0;
};

using BudgetMode = std::variant<ConstantBudget, UniformBudget, GaussianBudget, HeldGaussianBudget>;

// Throws ConfigError on invalid parameters.
void validate_budget_mode(const BudgetMode& mode);

class BudgetProcess {
public:
  BudgetProcess(BudgetMode mode, std::uint64_t seed);
  double next_budget(int t);
  const BudgetMode& mode() const { return mode_; }

private:
  double draw_gaussian(double mean, double stddev, double floor);

  BudgetMode mode_;
  Rng rng_;
  std::optional<double> held_;
};

// (m, 2m, ..., T m). Throws ContractError for linear_marketing.
std::vector<double> utopic_cumulative(CaseKind kind, int m, int horizon);

// Channel with the highest expected return; ties go to the lowest index.
int best_static_channel(std::span<const ChannelParams> params);

// Cumulative reward of the best single-channel static policy in expectation.
double oracle_best_static(std::span<const ChannelParams> params, std::span<const double> budgets);

}  // namespace bora
