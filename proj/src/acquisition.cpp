#include "bora/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "bora/errors.hpp"

namespace bora {

BetaSchedule BetaSchedule::fixed(double value) {
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw DomainError("fixed beta must be a nonnegative number");
  }
  return {Mode::fixed, value};
}

double ucb(const GpModel& model, const Eigen::Ref<const Eigen::VectorXd>& point, double beta) {
  if (!(beta >= 0.0)) throw DomainError("ucb: beta must be nonnegative");
  const Posterior post = model.posterior(point);
  if (beta == 0.0) return post.mean;
  return post.mean + std::sqrt(beta) * std::sqrt(post.variance);
}

double sample_beta(int t, const BetaSchedule& schedule, Rng& rng) {
  if (t < 1) throw DomainError("sample_beta: step index must be >= 1");
  if (schedule.mode == BetaSchedule::Mode::fixed) return schedule.fixed_value;
  const double mean = 2.0 * std::log(static_cast<double>(t) + 1.0);
  std::exponential_distribution<double> draw(1.0 / mean);
  return draw(rng);
}

namespace {

struct Scored {
  Eigen::VectorXd point;
  double value;
};

// Shared simplex search. `score` maps a simplex point to its acquisition value;
// `seeds` are extra candidates (remapped training inputs).
Eigen::VectorXd search_simplex(int m, const std::function<double(const Eigen::VectorXd&)>& score,
                               const std::vector<Eigen::VectorXd>& seeds, Rng& rng,
                               const SearchOptions& options) {
  std::vector<Scored> pool;
  pool.reserve(static_cast<std::size_t>(options.candidates) + seeds.size());
  for (int c = 0; c < options.candidates; ++c) {
    Eigen::VectorXd a = sample_uniform_simplex(m, rng).values();
    const double v = score(a);
    pool.push_back({std::move(a), v});
  }
  for (const auto& s : seeds) pool.push_back({s, score(s)});

  // Best-ever tracking; strict > keeps the first of equal-valued candidates.
  std::size_t best = 0;
  for (std::size_t i = 1; i < pool.size(); ++i) {
    if (pool[i].value > pool[best].value) best = i;
  }
  Eigen::VectorXd best_point = pool[best].point;
  double best_value = pool[best].value;

  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto top = std::min<std::size_t>(static_cast<std::size_t>(options.refine_top), pool.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top), order.end(),
                    [&](std::size_t lhs, std::size_t rhs) {
                      if (pool[lhs].value != pool[rhs].value) return pool[lhs].value > pool[rhs].value;
                      return lhs < rhs;
                    });

  for (std::size_t r = 0; r < top; ++r) {
    Eigen::VectorXd current = pool[order[r]].point;
    double current_value = pool[order[r]].value;
    int evals = 0;
    for (double eps = options.initial_exchange;
         eps >= options.min_exchange * (1.0 - 1e-12) && evals < options.max_refine_evals;
         eps *= 0.5) {
      bool improved = true;
      while (improved && evals < options.max_refine_evals) {
        improved = false;
        for (int from = 0; from < m && evals < options.max_refine_evals; ++from) {
          if (current[from] <= 0.0) continue;
          for (int to = 0; to < m && evals < options.max_refine_evals; ++to) {
            if (to == from) continue;
            Eigen::VectorXd trial = current;
            const double moved = std::min(eps, trial[from]);
            trial[from] -= moved;
            trial[to] += moved;
            trial = project_to_simplex(trial).values();
            const double v = score(trial);
            ++evals;
            if (v > current_value) {
              current = std::move(trial);
              current_value = v;
              improved = true;
              if (current[from] <= 0.0) break;
            }
          }
        }
      }
    }
    if (current_value > best_value) {
      best_value = current_value;
      best_point = current;
    }
  }
  return best_point;
}

}  // namespace

WeightVector maximize_ucb_simplex(const GpModel& model, double beta, Rng& rng,
                                  const SearchOptions& options) {
  if (!(beta >= 0.0)) throw DomainError("maximize_ucb_simplex: beta must be nonnegative");
  const int m = model.input_dim();
  if (m < 2) throw DomainError("maximize_ucb_simplex: model must live on a simplex of m >= 2");
  std::vector<Eigen::VectorXd> seeds;
  for (const auto& x : model.inputs()) seeds.push_back(project_to_simplex(x).values());
  const auto score = [&](const Eigen::VectorXd& a) { return ucb(model, a, beta); };
  return WeightVector(search_simplex(m, score, seeds, rng, options));
}

AllocationDecision maximize_ucb_budget(const GpModel& model, double budget, double beta, Rng& rng,
                                       const SearchOptions& options) {
  if (!(budget > 0.0) || !std::isfinite(budget)) {
    throw DomainError("maximize_ucb_budget: budget must be positive");
  }
  if (!(beta >= 0.0)) throw DomainError("maximize_ucb_budget: beta must be nonnegative");
  const int m = model.input_dim();
  if (m < 2) throw DomainError("maximize_ucb_budget: need m >= 2 arms");
  std::vector<Eigen::VectorXd> seeds;
  for (const auto& x : model.inputs()) {
    const double total = x.sum();
    if (total > 0.0) seeds.push_back(project_to_simplex(x / total).values());
  }
  // The feasible set is the simplex scaled by the budget.
  const auto score = [&](const Eigen::VectorXd& a) {
    return ucb(model, Eigen::VectorXd(budget * a), beta);
  };
  const WeightVector best(search_simplex(m, score, seeds, rng, options));
  return from_weight_vector(best, budget);
}

}  // namespace bora
