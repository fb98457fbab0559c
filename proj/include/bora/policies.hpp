#pragma once

// Sequential budget allocators behind one contract: observe the outcome of the
// previous decision, receive the next budget, emit a feasible allocation.
//
//   bora1  GP on raw allocations, UCB maximized on {x >= 0, sum x = budget}.
//   bora2  GP on weight vectors x / budget with an anisotropic SE kernel,
//          UCB maximized on the simplex, result scaled by the new budget.
//   bora3  as bora2 with the Wasserstein-SE kernel.
//   sbf    optimistic semi-bandit baseline driven by per-arm lower bounds.
//   random uniform-simplex allocation every step.

#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bora/acquisition.hpp"
#include "bora/gp.hpp"
#include "bora/measures.hpp"
#include "bora/rng.hpp"

namespace bora {

struct ObservationRecord {
  AllocationDecision decision;
  double reward = 0.0;
  // Per-arm completion flags; present only under semi-bandit feedback.
  std::optional<std::vector<int>> per_arm_outcomes;
  int step = 1;
};

using ObservationHistory = std::vector<ObservationRecord>;

struct BoraOptions {
  int n_init = 3;
  FitOptions fit;
  SearchOptions search;
};

AllocationDecision random_feasible_decision(int m, double budget, Rng& rng);

// Training set and surrogate used by each BORA variant, exposed for plotting
// and inspection. Throws FitError when the history cannot be fit.
GpModel bora1_surrogate(const ObservationHistory& history, Rng& rng, const BoraOptions& options = {});
GpModel bora2_surrogate(const ObservationHistory& history, Rng& rng, const BoraOptions& options = {});
GpModel bora3_surrogate(const ObservationHistory& history, Rng& rng, const BoraOptions& options = {});

// With fewer than n_init records these return a random feasible decision. A
// fit failure also falls back to a random decision (with a warning on stderr).
AllocationDecision bora1_decide(const ObservationHistory& history, int m, double budget,
                                const BetaSchedule& schedule, Rng& rng,
                                const BoraOptions& options = {});
AllocationDecision bora2_decide(const ObservationHistory& history, int m, double budget,
                                const BetaSchedule& schedule, Rng& rng,
                                const BoraOptions& options = {});
AllocationDecision bora3_decide(const ObservationHistory& history, int m, double budget,
                                const BetaSchedule& schedule, Rng& rng,
                                const BoraOptions& options = {});

// Confidence level for the Wilson bound used by sbf_update (two-sided 95%).
inline constexpr double kSbfWilsonZ = 1.959963984540054;

struct ArmBounds {
  double lower = 0.0;
  double upper = std::numeric_limits<double>::infinity();
  // (successes, trials) keyed by allocation level.
  std::map<double, std::pair<int, int>> trials;
};

struct SbfState {
  std::vector<ArmBounds> arms;

  static SbfState initial(int m);
  int size() const { return static_cast<int>(arms.size()); }
};

// Greedy optimistic fill: arms in ascending order of their lower bound each get
// min(lower, remaining); any leftover is spread evenly over the arms that got
// their full lower bound.
AllocationDecision sbf_decide(const SbfState& state, double budget);

// Failure at x_i proves nu_i > x_i and lifts the lower bound; successes tighten
// the upper bound to x_i / q, q the Wilson lower limit of the success rate at
// that allocation level. Throws ContractError on missing outcomes.
SbfState sbf_update(const SbfState& state, const AllocationDecision& decision,
                    std::span<const int> per_arm_outcomes);

// Wilson score interval lower limit.
double wilson_lower(int successes, int trials, double z = kSbfWilsonZ);

enum class PolicyId { bora1, bora2, bora3, sbf, random };

std::string_view to_string(PolicyId id);
// Throws ConfigError on unknown names.
PolicyId parse_policy_id(std::string_view name);

// Stateful per-run wrapper used by the harness. Policies see only their own
// observation history; environment parameters never reach them.
class Policy {
public:
  virtual ~Policy() = default;
  virtual PolicyId id() const = 0;
  virtual AllocationDecision decide(double budget) = 0;
  virtual void observe(const ObservationRecord& record) = 0;
  virtual const ObservationHistory& history() const = 0;
};

std::unique_ptr<Policy> make_policy(PolicyId id, int m, BetaSchedule schedule, std::uint64_t seed,
                                    BoraOptions options = {});

}  // namespace bora
