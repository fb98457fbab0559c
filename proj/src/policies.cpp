#include "bora/policies.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include "bora/errors.hpp"

namespace bora {

AllocationDecision random_feasible_decision(int m, double budget, Rng& rng) {
  return from_weight_vector(sample_uniform_simplex(m, rng), budget);
}

namespace {

std::vector<double> rewards_of(const ObservationHistory& history) {
  std::vector<double> y;
  y.reserve(history.size());
  for (const auto& r : history) y.push_back(r.reward);
  return y;
}

enum class BoraVariant { raw_se, simplex_se, simplex_wse };

GpModel surrogate(BoraVariant variant, const ObservationHistory& history, Rng& rng,
                  const BoraOptions& options) {
  std::vector<Eigen::VectorXd> inputs;
  inputs.reserve(history.size());
  for (const auto& r : history) {
    if (variant == BoraVariant::raw_se) {
      inputs.push_back(r.decision.amounts());
    } else {
      inputs.push_back(to_weight_vector(r.decision).values());
    }
  }
  const auto y = rewards_of(history);
  const KernelKind kind =
      variant == BoraVariant::simplex_wse ? KernelKind::wasserstein_se : KernelKind::se_anisotropic;
  return fit_gp(inputs, y, kind, rng, options.fit);
}

AllocationDecision bora_decide(BoraVariant variant, const ObservationHistory& history, int m,
                               double budget, const BetaSchedule& schedule, Rng& rng,
                               const BoraOptions& options) {
  if (!(budget > 0.0) || !std::isfinite(budget)) throw DomainError("budget must be positive");
  if (m < 2) throw DomainError("need m >= 2 arms");
  if (static_cast<int>(history.size()) < std::max(options.n_init, 2)) {
    return random_feasible_decision(m, budget, rng);
  }
  for (const auto& r : history) {
    if (r.decision.size() != m) throw DomainError("history decision has the wrong arm count");
  }
  try {
    const GpModel model = surrogate(variant, history, rng, options);
    const double beta = sample_beta(static_cast<int>(history.size()), schedule, rng);
    if (variant == BoraVariant::raw_se) {
      return maximize_ucb_budget(model, budget, beta, rng, options.search);
    }
    return from_weight_vector(maximize_ucb_simplex(model, beta, rng, options.search), budget);
  } catch (const FitError& e) {
    std::clog << "warning: GP fit failed at step " << history.size() + 1 << " (" << e.what()
              << "); using a random feasible decision\n";
    return random_feasible_decision(m, budget, rng);
  }
}

}  // namespace

GpModel bora1_surrogate(const ObservationHistory& history, Rng& rng, const BoraOptions& options) {
  return surrogate(BoraVariant::raw_se, history, rng, options);
}
GpModel bora2_surrogate(const ObservationHistory& history, Rng& rng, const BoraOptions& options) {
  return surrogate(BoraVariant::simplex_se, history, rng, options);
}
GpModel bora3_surrogate(const ObservationHistory& history, Rng& rng, const BoraOptions& options) {
  return surrogate(BoraVariant::simplex_wse, history, rng, options);
}

AllocationDecision bora1_decide(const ObservationHistory& history, int m, double budget,
                                const BetaSchedule& schedule, Rng& rng,
                                const BoraOptions& options) {
  return bora_decide(BoraVariant::raw_se, history, m, budget, schedule, rng, options);
}
AllocationDecision bora2_decide(const ObservationHistory& history, int m, double budget,
                                const BetaSchedule& schedule, Rng& rng,
                                const BoraOptions& options) {
  return bora_decide(BoraVariant::simplex_se, history, m, budget, schedule, rng, options);
}
AllocationDecision bora3_decide(const ObservationHistory& history, int m, double budget,
                                const BetaSchedule& schedule, Rng& rng,
                                const BoraOptions& options) {
  return bora_decide(BoraVariant::simplex_wse, history, m, budget, schedule, rng, options);
}

// ---------------------------------------------------------------------------
// Semi-bandit baseline

SbfState SbfState::initial(int m) {
  if (m < 2) throw DomainError("SbfState needs m >= 2 arms");
  SbfState state;
  state.arms.resize(static_cast<std::size_t>(m));
  return state;
}

double wilson_lower(int successes, int trials, double z) {
  if (trials <= 0) return 0.0;
  const double n = trials;
  const double p = successes / n;
  const double z2 = z * z;
  const double centre = p + z2 / (2.0 * n);
  const double margin = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  return std::max(0.0, (centre - margin) / (1.0 + z2 / n));
}

AllocationDecision sbf_decide(const SbfState& state, double budget) {
  if (!(budget > 0.0) || !std::isfinite(budget)) throw DomainError("sbf_decide: budget must be positive");
  const int m = state.size();
  if (m < 2) throw DomainError("sbf_decide: state has fewer than 2 arms");
  std::vector<int> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int lhs, int rhs) {
    return state.arms[static_cast<std::size_t>(lhs)].lower <
           state.arms[static_cast<std::size_t>(rhs)].lower;
  });

  Eigen::VectorXd amounts = Eigen::VectorXd::Zero(m);
  double remaining = budget;
  std::vector<int> saturated;
  for (int arm : order) {
    const double want = state.arms[static_cast<std::size_t>(arm)].lower;
    const double give = std::min(want, remaining);
    amounts[arm] = give;
    remaining -= give;
    if (give >= want) saturated.push_back(arm);
    if (remaining <= 0.0) break;
  }
  if (remaining > 0.0) {
    // Every arm got its full lower bound here, so `saturated` covers all arms.
    const double share = remaining / static_cast<double>(saturated.size());
    for (int arm : saturated) amounts[arm] += share;
  }
  return AllocationDecision(std::move(amounts), budget);
}

SbfState sbf_update(const SbfState& state, const AllocationDecision& decision,
                    std::span<const int> per_arm_outcomes) {
  if (per_arm_outcomes.empty()) {
    throw ContractError("SBF needs per-arm outcomes; reward-only feedback is not enough");
  }
  const int m = state.size();
  if (decision.size() != m || static_cast<int>(per_arm_outcomes.size()) != m) {
    throw DomainError("sbf_update: arm count mismatch");
  }
  SbfState next = state;
  for (int i = 0; i < m; ++i) {
    const int outcome = per_arm_outcomes[static_cast<std::size_t>(i)];
    if (outcome != 0 && outcome != 1) throw DomainError("sbf_update: outcomes must be 0 or 1");
    auto& arm = next.arms[static_cast<std::size_t>(i)];
    const double x = decision[i];
    if (outcome == 0) {
      // Completion is certain at x >= nu, so a failure proves nu > x.
      arm.lower = std::min(arm.upper, std::max(arm.lower, x));
    } else if (x >= arm.upper) {
      continue;
    }
    if (!(x > 0.0) || x >= arm.upper) continue;
    auto& [successes, trials] = arm.trials[x];
    successes += outcome;
    trials += 1;
    const double q = wilson_lower(successes, trials);
    if (q > 0.0) arm.upper = std::min(arm.upper, std::max(arm.lower, x / q));
  }
  return next;
}

// ---------------------------------------------------------------------------
// Policy objects

std::string_view to_string(PolicyId id) {
  switch (id) {
    case PolicyId::bora1: return "bora1";
    case PolicyId::bora2: return "bora2";
    case PolicyId::bora3: return "bora3";
    case PolicyId::sbf: return "sbf";
    case PolicyId::random: return "random";
  }
  return "unknown";
}

PolicyId parse_policy_id(std::string_view name) {
  for (auto id : {PolicyId::bora1, PolicyId::bora2, PolicyId::bora3, PolicyId::sbf, PolicyId::random}) {
    if (to_string(id) == name) return id;
  }
  throw ConfigError("unknown policy '" + std::string(name) +
                    "' (expected bora1, bora2, bora3, sbf or random)");
}

namespace {

class HistoryPolicy : public Policy {
public:
  HistoryPolicy(PolicyId id, int m, std::uint64_t seed) : id_(id), m_(m), rng_(seed) {
    if (m < 2) throw DomainError("policy needs m >= 2 arms");
  }
  PolicyId id() const override { return id_; }
  void observe(const ObservationRecord& record) override { history_.push_back(record); }
  const ObservationHistory& history() const override { return history_; }

protected:
  PolicyId id_;
  int m_;
  Rng rng_;
  ObservationHistory history_;
};

class BoraPolicy final : public HistoryPolicy {
public:
  BoraPolicy(PolicyId id, int m, BetaSchedule schedule, std::uint64_t seed, BoraOptions options)
      : HistoryPolicy(id, m, seed), schedule_(schedule), options_(std::move(options)) {}

  AllocationDecision decide(double budget) override {
    switch (id_) {
      case PolicyId::bora1: return bora1_decide(history_, m_, budget, schedule_, rng_, options_);
      case PolicyId::bora2: return bora2_decide(history_, m_, budget, schedule_, rng_, options_);
      default: return bora3_decide(history_, m_, budget, schedule_, rng_, options_);
    }
  }

private:
  BetaSchedule schedule_;
  BoraOptions options_;
};

class RandomPolicy final : public HistoryPolicy {
public:
  using HistoryPolicy::HistoryPolicy;
  AllocationDecision decide(double budget) override {
    return random_feasible_decision(m_, budget, rng_);
  }
};

class SbfPolicy final : public HistoryPolicy {
public:
  SbfPolicy(int m, std::uint64_t seed)
      : HistoryPolicy(PolicyId::sbf, m, seed), state_(SbfState::initial(m)) {}

  AllocationDecision decide(double budget) override { return sbf_decide(state_, budget); }

  void observe(const ObservationRecord& record) override {
    if (!record.per_arm_outcomes) {
      throw ContractError("SBF cannot run on reward-only feedback");
    }
    state_ = sbf_update(state_, record.decision, *record.per_arm_outcomes);
    HistoryPolicy::observe(record);
  }

private:
  SbfState state_;
};

}  // namespace

std::unique_ptr<Policy> make_policy(PolicyId id, int m, BetaSchedule schedule, std::uint64_t seed,
                                    BoraOptions options) {
  switch (id) {
    case PolicyId::bora1:
    case PolicyId::bora2:
    case PolicyId::bora3:
      return std::make_unique<BoraPolicy>(id, m, schedule, seed, std::move(options));
    case PolicyId::sbf: return std::make_unique<SbfPolicy>(m, seed);
    case PolicyId::random: return std::make_unique<RandomPolicy>(id, m, seed);
  }
  throw DomainError("unknown policy id");
}

}  // namespace bora
