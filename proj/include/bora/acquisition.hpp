#pragma once

// GP-UCB scoring, exploration-weight schedules and constrained maximization
// of the acquisition over the simplex or the budget-equality set.

#include "bora/gp.hpp"
#include "bora/measures.hpp"
#include "bora/rng.hpp"

namespace bora {

struct BetaSchedule {
  enum class Mode { fixed, randomized };
  Mode mode = Mode::randomized;
  double fixed_value = 2.0;

  static BetaSchedule fixed(double value);
  static BetaSchedule randomized() { return {}; }
};

// mu(point) + sqrt(beta) * sigma(point).
double ucb(const GpModel& model, const Eigen::Ref<const Eigen::VectorXd>& point, double beta);

// Fixed mode returns fixed_value; randomized mode draws Exponential with mean
// 2 ln(t + 1).
double sample_beta(int t, const BetaSchedule& schedule, Rng& rng);

struct SearchOptions {
  int candidates = 2048;
  int refine_top = 8;
  double initial_exchange = 0.1;
  double min_exchange = 1e-4;
  // Cap on acquisition evaluations spent refining one candidate.
  int max_refine_evals = 4000;
};

// Argmax of UCB over the simplex among the evaluated candidates. The model's
// inputs are weight vectors.
WeightVector maximize_ucb_simplex(const GpModel& model, double beta, Rng& rng,
                                  const SearchOptions& options = {});

// Argmax of UCB over {x >= 0, sum x = budget}. The model's inputs are raw
// allocation amounts.
AllocationDecision maximize_ucb_budget(const GpModel& model, double budget, double beta, Rng& rng,
                                       const SearchOptions& options = {});

}  // namespace bora
