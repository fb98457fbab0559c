#include "bora/environments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "bora/errors.hpp"

namespace bora {

const char* to_string(CaseKind kind) {
  return kind == CaseKind::bernoulli_jobs ? "bernoulli_jobs" : "linear_marketing";
}

BernoulliJobsEnv::BernoulliJobsEnv(std::vector<double> nu, std::uint64_t seed)
    : nu_(std::move(nu)), rng_(seed) {
  if (nu_.size() < 2) throw DomainError("jobs environment needs at least 2 jobs");
  for (double v : nu_) {
    if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("job difficulties nu must be positive");
  }
}

JobsOutcome BernoulliJobsEnv::step(const AllocationDecision& x) {
  if (x.size() != size()) throw DomainError("bernoulli_step: dimension mismatch");
  JobsOutcome out;
  out.per_arm_outcomes.resize(nu_.size());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < size(); ++i) {
    const double p = std::min(1.0, x[i] / nu_[static_cast<std::size_t>(i)]);
    // Always consume one draw per arm so streams stay aligned across decisions.
    const double u = unit(rng_);
    const int done = (p >= 1.0 || u < p) ? 1 : 0;
    out.per_arm_outcomes[static_cast<std::size_t>(i)] = done;
    out.reward += done;
  }
  return out;
}

double BernoulliJobsEnv::expected_reward(const Eigen::Ref<const Eigen::VectorXd>& amounts) const {
  if (amounts.size() != size()) throw DomainError("expected_reward: dimension mismatch");
  double total = 0.0;
  for (int i = 0; i < size(); ++i) {
    total += std::min(1.0, amounts[i] / nu_[static_cast<std::size_t>(i)]);
  }
  return total;
}

double BernoulliJobsEnv::optimal_expected_reward(double budget) const {
  std::vector<double> sorted = nu_;
  std::sort(sorted.begin(), sorted.end());
  double remaining = budget;
  double total = 0.0;
  for (double v : sorted) {
    if (remaining <= 0.0) break;
    const double give = std::min(v, remaining);
    total += give / v;
    remaining -= give;
  }
  return total;
}

std::vector<ChannelParams> draw_channel_params(int m, Rng& rng) {
  if (m < 2) throw DomainError("marketing environment needs at least 2 channels");
  std::uniform_real_distribution<double> mean_draw(0.0, 1.0);
  std::uniform_real_distribution<double> sd_draw(0.0, 0.2);
  std::vector<ChannelParams> params(static_cast<std::size_t>(m));
  for (auto& p : params) {
    p.mean = mean_draw(rng);
    p.stddev = sd_draw(rng);
  }
  return params;
}

double rectified_normal_mean(double mean, double stddev) {
  if (stddev <= 0.0) return std::max(0.0, mean);
  const double z = mean / stddev;
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  return mean * cdf + stddev * pdf;
}

double marketing_reward(std::span<const double> eta, const AllocationDecision& x) {
  if (static_cast<int>(eta.size()) != x.size()) throw DomainError("marketing_step: dimension mismatch");
  double total = 0.0;
  for (int i = 0; i < x.size(); ++i) total += eta[static_cast<std::size_t>(i)] * x[i];
  return total;
}

LinearMarketingEnv::LinearMarketingEnv(std::vector<ChannelParams> params, std::uint64_t seed)
    : params_(std::move(params)), rng_(seed) {
  if (params_.size() < 2) throw DomainError("marketing environment needs at least 2 channels");
  for (const auto& p : params_) {
    if (!(p.mean >= 0.0 && p.mean <= 1.0) || !(p.stddev >= 0.0 && p.stddev <= 0.2)) {
      throw DomainError("channel parameters outside mean in [0,1], stddev in [0,0.2]");
    }
  }
}

std::vector<double> LinearMarketingEnv::draw_returns() {
  std::vector<double> eta(params_.size());
  std::normal_distribution<double> standard(0.0, 1.0);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    eta[i] = std::max(0.0, params_[i].mean + params_[i].stddev * standard(rng_));
  }
  return eta;
}

double LinearMarketingEnv::step(const AllocationDecision& x) {
  if (x.size() != size()) throw DomainError("marketing_step: dimension mismatch");
  const auto eta = draw_returns();
  return marketing_reward(eta, x);
}

void validate_budget_mode(const BudgetMode& mode) {
  std::visit(
      [](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, ConstantBudget>) {
          if (!(m.value > 0.0) || !std::isfinite(m.value)) {
            throw ConfigError("constant budget must be positive");
          }
        } else if constexpr (std::is_same_v<T, UniformBudget>) {
          if (!(m.lo > 0.0) || !(m.hi >= m.lo) || !std::isfinite(m.hi)) {
            throw ConfigError("uniform budget needs 0 < lo <= hi");
          }
        } else {
          if (!(m.stddev >= 0.0) || !std::isfinite(m.mean) || !std::isfinite(m.stddev)) {
            throw ConfigError("gaussian budget needs a finite mean and sd >= 0");
          }
          if (!(m.floor > 0.0)) throw ConfigError("gaussian budget floor must be positive");
          if (m.stddev == 0.0 && !(m.mean > m.floor)) {
            throw ConfigError("gaussian budget with sd 0 needs mean above the floor");
          }
          if (m.mean + 8.0 * m.stddev <= m.floor) {
            throw ConfigError("gaussian budget floor is unreachable in practice");
          }
        }
      },
      mode);
}

BudgetProcess::BudgetProcess(BudgetMode mode, std::uint64_t seed) : mode_(mode), rng_(seed) {
  validate_budget_mode(mode_);
}

double BudgetProcess::draw_gaussian(double mean, double stddev, double floor) {
  std::normal_distribution<double> draw(mean, stddev);
  for (;;) {
    const double b = stddev > 0.0 ? draw(rng_) : mean;
    if (b > floor) return b;
  }
}

double BudgetProcess::next_budget(int t) {
  if (t < 1) throw DomainError("next_budget: t must be >= 1");
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, ConstantBudget>) {
          return m.value;
        } else if constexpr (std::is_same_v<T, UniformBudget>) {
          return std::uniform_real_distribution<double>(m.lo, m.hi)(rng_);
        } else if constexpr (std::is_same_v<T, GaussianBudget>) {
          return draw_gaussian(m.mean, m.stddev, m.floor);
        } else {
          if (!held_) held_ = draw_gaussian(m.mean, m.stddev, m.floor);
          return *held_;
        }
      },
      mode_);
}

std::vector<double> utopic_cumulative(CaseKind kind, int m, int horizon) {
  if (kind != CaseKind::bernoulli_jobs) {
    throw ContractError("no utopic curve is defined for the marketing case");
  }
  if (m < 1 || horizon < 0) throw DomainError("utopic_cumulative: bad m or horizon");
  std::vector<double> series(static_cast<std::size_t>(horizon));
  for (int t = 0; t < horizon; ++t) series[static_cast<std::size_t>(t)] = double(m) * (t + 1);
  return series;
}

int best_static_channel(std::span<const ChannelParams> params) {
  if (params.empty()) throw DomainError("best_static_channel: no channels");
  int best = 0;
  double best_value = rectified_normal_mean(params[0].mean, params[0].stddev);
  for (std::size_t i = 1; i < params.size(); ++i) {
    const double v = rectified_normal_mean(params[i].mean, params[i].stddev);
    if (v > best_value) {
      best_value = v;
      best = static_cast<int>(i);
    }
  }
  return best;
}

double oracle_best_static(std::span<const ChannelParams> params, std::span<const double> budgets) {
  const auto& p = params[static_cast<std::size_t>(best_static_channel(params))];
  return rectified_normal_mean(p.mean, p.stddev) *
         std::accumulate(budgets.begin(), budgets.end(), 0.0);
}

}  // namespace bora
